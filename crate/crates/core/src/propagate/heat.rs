//! `u_t = λ(s) u_ss` by a θ-scheme with second-order central differences.
//!
//! Every trace node carries one vertex condition. Derivative conditions use
//! the half-cell expansion `u'(0) ≈ (u₁ − u₀)/h − h/(2λ₀) u_t(0)` (and its
//! mirror at `s = 1`), which keeps the scheme second order and makes the
//! trapezoid mass exactly conserved under Kirchhoff conditions. External
//! edges are truncated at their length with `u(L) = 0`.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::data::InitialData;
use super::{
    check_external_lengths, gated_matrices, slot_node, step_count, Diagnostics, EdgeField, EdgeGrid, EdgeKind,
    RunOutput, Snapshot,
};
use crate::bc::{trapezoid_weights, BoundaryConditions, BoundaryMatricesBC};
use crate::coeffs::{interp_uniform, CoefficientProfile, EdgeCoefficients};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::linalg;
use crate::wellposed::{self, WellPosednessReport};

const MIN_CELLS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatParams {
    pub dt: f64,
    pub theta: f64,
    /// Cells on each internal edge; external edges get `round(n · L)`.
    pub n_per_edge: usize,
    pub external_lengths: Vec<f64>,
}

impl HeatParams {
    pub fn new(dt: f64, theta: f64, n_per_edge: usize) -> Self {
        Self { dt, theta, n_per_edge, external_lengths: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub struct HeatState {
    pub grids: Vec<EdgeGrid>,
    pub offsets: Vec<usize>,
    pub u: Vec<f64>,
    pub t: f64,
    pub dt: f64,
    pub steps: usize,
    pub report: WellPosednessReport,
    lambda: Vec<f64>,
    lu: LU<f64, Dyn, Dyn>,
    rhs_rows: Vec<Vec<(usize, f64)>>,
}

impl HeatState {
    pub fn edge_values(&self, e: usize) -> &[f64] {
        &self.u[self.offsets[e]..self.offsets[e] + self.grids[e].nodes()]
    }
}

/// Sparse row builder for the pair `A u^{n+1} = B u^n`.
struct Rows {
    a: DMatrix<f64>,
    b: Vec<Vec<(usize, f64)>>,
}

impl Rows {
    /// Adds `θ L(u^{n+1}) + (1−θ) L(u^n)` for the functional `L = Σ w u_col`.
    fn weighted(&mut self, row: usize, col: usize, w: f64, theta: f64) {
        self.a[(row, col)] += theta * w;
        if theta < 1.0 {
            self.b[row].push((col, -(1.0 - theta) * w));
        }
    }

    /// Adds `w (u^{n+1} − u^n) / dt`.
    fn rate(&mut self, row: usize, col: usize, w: f64, dt: f64) {
        self.a[(row, col)] += w / dt;
        self.b[row].push((col, w / dt));
    }
}

/// Discrete outward-signed derivative at a trace node, as `(node, inner, h, λ)`:
/// `(u_inner − u_node)/h − h/(2λ) u_t(node)`, i.e. `f'(0)` at a tail and
/// `−f'(1)` at a head.
fn flux_functional(rows: &mut Rows, row: usize, weight: f64, stencil: (usize, usize, f64, f64), theta: f64, dt: f64) {
    let (node, inner, h, lambda) = stencil;
    rows.weighted(row, inner, weight / h, theta);
    rows.weighted(row, node, -weight / h, theta);
    rows.rate(row, node, -weight * h / (2.0 * lambda), dt);
}

fn profile_for(coeffs: &EdgeCoefficients, ell: usize, e: usize) -> &CoefficientProfile {
    if e < ell {
        &coeffs.external[e]
    } else {
        &coeffs.internal[e - ell]
    }
}

pub fn heat_init(
    graph: &MetricGraph,
    coeffs: &EdgeCoefficients,
    bc: &BoundaryConditions,
    init: &InitialData,
    params: &HeatParams,
) -> Result<HeatState> {
    if !(params.theta >= 0.5 && params.theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("theta = {} must lie in [1/2, 1]", params.theta)));
    }
    if !(params.dt > 0.0) || params.n_per_edge < MIN_CELLS {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and at least {MIN_CELLS} cells per edge"
        )));
    }
    let (mats, report) = match bc {
        BoundaryConditions::NonlocalInterval(nl) => {
            graph.validate()?;
            coeffs.validate(graph)?;
            if graph.ell() != 0 || graph.m() != 1 {
                return Err(Error::InvalidArgument("integral conditions need a single interval".into()));
            }
            let report = wellposed::check_nonlocal_interval(&nl.h0, &nl.h1, nl.t0, 1.0)?;
            if !report.is_well_posed() {
                return Err(Error::NotWellPosed(format!("Young bound not below 1 at t0 = {}", nl.t0)));
            }
            (None, report)
        }
        _ => {
            let (m, r) = gated_matrices(graph, coeffs, bc)?;
            (Some(m), r)
        }
    };
    check_external_lengths(graph, &params.external_lengths)?;
    init.validate(graph)?;

    let ell = graph.ell();
    let mut grids = Vec::new();
    for (k, &l) in params.external_lengths.iter().enumerate() {
        let cells = ((params.n_per_edge as f64 * l).round() as usize).max(MIN_CELLS);
        grids.push(EdgeGrid { kind: EdgeKind::External, index: k, length: l, cells });
    }
    for j in 0..graph.m() {
        grids.push(EdgeGrid { kind: EdgeKind::Internal, index: j, length: 1.0, cells: params.n_per_edge });
    }
    let mut offsets = Vec::with_capacity(grids.len());
    let mut total = 0;
    for g in &grids {
        offsets.push(total);
        total += g.nodes();
    }

    let mut lambda = vec![0.0; total];
    let mut u = vec![0.0; total];
    for (e, g) in grids.iter().enumerate() {
        let profile = profile_for(coeffs, ell, e);
        let data = init.edge(ell, e);
        for i in 0..g.nodes() {
            let s = g.s(i);
            lambda[offsets[e] + i] = profile.lambda(s);
            u[offsets[e] + i] = data.u0.value(s)?;
        }
    }
    if let Some(bad) = lambda.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::NonPositiveCoefficient(format!("λ = {bad} on the grid")));
    }

    let (dt, theta) = (params.dt, params.theta);
    let mut rows = Rows { a: DMatrix::zeros(total, total), b: vec![Vec::new(); total] };
    for (e, g) in grids.iter().enumerate() {
        let h2 = g.h() * g.h();
        for i in 1..g.cells {
            let r = offsets[e] + i;
            rows.rate(r, r, 1.0, dt);
            let l = lambda[r] / h2;
            rows.weighted(r, r - 1, -l, theta);
            rows.weighted(r, r, 2.0 * l, theta);
            rows.weighted(r, r + 1, -l, theta);
        }
        if g.kind == EdgeKind::External {
            let r = offsets[e] + g.cells;
            rows.a[(r, r)] = 1.0;
        }
    }

    let node_index = |slot: usize| {
        let (e, i) = slot_node(graph, &grids, slot);
        offsets[e] + i
    };
    let stencil = |slot: usize| {
        let (e, i) = slot_node(graph, &grids, slot);
        let inner = if i == 0 { 1 } else { i - 1 };
        (offsets[e] + i, offsets[e] + inner, grids[e].h(), lambda[offsets[e] + i])
    };

    match (&mats, bc) {
        (Some(mats), _) => assemble_conditions(&mut rows, graph, mats, &grids, &offsets, &node_index, &stencil, theta, dt),
        (None, BoundaryConditions::NonlocalInterval(nl)) => {
            let g = &grids[0];
            let w = trapezoid_weights(g.nodes(), 1.0);
            for (node, h) in [(0, &nl.h0), (g.cells, &nl.h1)] {
                rows.a[(node, node)] += 1.0;
                for i in 0..g.nodes() {
                    rows.a[(node, i)] -= w[i] * interp_uniform(h, 1.0, g.s(i));
                }
            }
        }
        _ => unreachable!(),
    }

    let (smin, smax) = linalg::extreme_singular_values(&linalg::complexify(&equilibrate(&rows.a)));
    if !(smin > total as f64 * f64::EPSILON * smax) {
        return Err(Error::SingularSystem { sigma_min: smin });
    }
    let lu = rows.a.lu();
    Ok(HeatState { grids, offsets, u, t: 0.0, dt, steps: 0, report, lambda, lu, rhs_rows: rows.b })
}

fn equilibrate(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = a.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.amax();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn assemble_conditions(
    rows: &mut Rows,
    graph: &MetricGraph,
    mats: &BoundaryMatricesBC,
    grids: &[EdgeGrid],
    offsets: &[usize],
    node_index: &dyn Fn(usize) -> usize,
    stencil: &dyn Fn(usize) -> (usize, usize, f64, f64),
    theta: f64,
    dt: f64,
) {
    let n = graph.trace_len();
    let k0 = mats.k0();
    let values = mats.value_rows();
    // W in trace column order; the head block multiplies −f'(1)
    let w = crate::bc::hcat(&[&mats.w0e, &mats.w0i, &mats.w1i]);
    let u_rows = mats.u_rows();
    for r in 0..n {
        let row = node_index(r);
        if r < k0 {
            for slot in 0..n {
                let v = values[(r, slot)].re;
                if v != 0.0 {
                    rows.a[(row, node_index(slot))] += v;
                }
            }
            continue;
        }
        let fr = r - k0;
        for slot in 0..n {
            let wv = w[(fr, slot)].re;
            if wv != 0.0 {
                flux_functional(rows, row, wv, stencil(slot), theta, dt);
            }
            let uv = u_rows[(fr, slot)].re;
            if uv != 0.0 {
                rows.weighted(row, node_index(slot), uv, theta);
            }
        }
        for k in &mats.kernels {
            let e = graph.ell() + k.edge;
            let d = k.direction[fr].re;
            if d != 0.0 {
                for (i, q) in k.quadrature_weights(grids[e].nodes()).into_iter().enumerate() {
                    rows.weighted(row, offsets[e] + i, d * q, theta);
                }
            }
        }
    }
}

pub fn heat_step(state: &mut HeatState) {
    let rhs = DVector::from_iterator(
        state.u.len(),
        state.rhs_rows.iter().map(|row| row.iter().map(|&(col, w)| w * state.u[col]).sum::<f64>()),
    );
    let next = state.lu.solve(&rhs).expect("factorization checked at init");
    state.u.copy_from_slice(next.as_slice());
    state.steps += 1;
    state.t = state.steps as f64 * state.dt;
}

pub fn mass(state: &HeatState) -> f64 {
    (0..state.grids.len())
        .map(|e| {
            let v = state.edge_values(e);
            state.grids[e].trapezoid(|i| v[i])
        })
        .sum()
}

/// `½ Σ ∫ λ u_s²` with cell-midpoint differences.
pub fn energy(state: &HeatState) -> f64 {
    let mut total = 0.0;
    for (e, g) in state.grids.iter().enumerate() {
        let v = state.edge_values(e);
        let lam = &state.lambda[state.offsets[e]..state.offsets[e] + g.nodes()];
        let h = g.h();
        for i in 0..g.cells {
            let d = (v[i + 1] - v[i]) / h;
            total += 0.5 * h * 0.5 * (lam[i] + lam[i + 1]) * d * d;
        }
    }
    total
}

pub fn snapshot(state: &HeatState) -> Snapshot {
    Snapshot {
        t: state.t,
        edges: state
            .grids
            .iter()
            .enumerate()
            .map(|(e, g)| EdgeField { kind: g.kind, index: g.index, s: g.coords(), u: state.edge_values(e).to_vec(), ut: None })
            .collect(),
    }
}

pub fn heat_run(state: &mut HeatState, t_final: f64, record_stride: usize) -> Result<RunOutput> {
    let steps = step_count(t_final, state.dt)?;
    let stride = record_stride.max(1);
    let mut diagnostics = Diagnostics::default();
    let mut snapshots = Vec::new();
    let mut record = |s: &HeatState, d: &mut Diagnostics| {
        d.push(s.t, energy(s), mass(s));
        snapshots.push(snapshot(s));
    };
    record(state, &mut diagnostics);
    for k in 1..=steps {
        heat_step(state);
        if k % stride == 0 || k == steps {
            record(state, &mut diagnostics);
        }
    }
    Ok(RunOutput { diagnostics, snapshots })
}
