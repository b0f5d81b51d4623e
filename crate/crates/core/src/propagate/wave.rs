//! `u_tt = λ u_ss` by exact characteristic shifts.
//!
//! On every edge the speed is snapped so that one step moves the Riemann
//! invariants `p = u_t + μu_s` (left-moving) and `q = u_t − μu_s`
//! (right-moving) exactly one cell. The displacement is carried as two
//! potentials `u = a + b` with `a` moving left and `b` moving right, so it is
//! transported exactly as well; only boundary nodes are integrated in time.

use nalgebra::DMatrix;

use super::data::{Descriptor, EdgeInitial, InitialData};
use super::{
    check_external_lengths, gated_matrices, slot_node, step_count, Diagnostics, EdgeField, EdgeGrid, EdgeKind,
    RunOutput, Snapshot,
};
use crate::bc::BoundaryConditions;
use crate::coeffs::EdgeCoefficients;
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::linalg::{c, CVec};
use crate::wellposed::{self, VertexUpdate, WellPosednessReport};

pub const DEFAULT_SNAP_TOL: f64 = 0.05;

/// Relative size of data allowed beyond the no-reflection limit on external edges.
const SUPPORT_TOL: f64 = 1e-12;

/// Simpson subpanels per cell for the velocity antiderivative.
const SUBPANELS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveParams {
    pub dt_target: f64,
    pub t_final: f64,
    pub snap_tol: f64,
    /// Truncation length per external edge.
    pub external_lengths: Vec<f64>,
}

impl WaveParams {
    pub fn new(dt_target: f64, t_final: f64) -> Self {
        Self { dt_target, t_final, snap_tol: DEFAULT_SNAP_TOL, external_lengths: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveEdge {
    pub grid: EdgeGrid,
    /// Snapped speed.
    pub mu: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Left-moving potential.
    pub a: Vec<f64>,
    /// Right-moving potential.
    pub b: Vec<f64>,
}

impl WaveEdge {
    pub fn u(&self, i: usize) -> f64 {
        self.a[i] + self.b[i]
    }

    pub fn ut(&self, i: usize) -> f64 {
        0.5 * (self.p[i] + self.q[i])
    }

    pub fn u_values(&self) -> Vec<f64> {
        (0..self.grid.nodes()).map(|i| self.u(i)).collect()
    }

    pub fn ut_values(&self) -> Vec<f64> {
        (0..self.grid.nodes()).map(|i| self.ut(i)).collect()
    }
}

#[derive(Debug, Clone)]
struct KernelTerm {
    edge: usize,
    /// Full-length row vector (zero on value rows).
    direction: CVec,
    weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct WaveState {
    pub edges: Vec<WaveEdge>,
    pub t: f64,
    pub dt: f64,
    pub steps: usize,
    pub report: WellPosednessReport,
    graph: MetricGraph,
    update: VertexUpdate,
    u_rows: Option<DMatrix<f64>>,
    kernels: Vec<KernelTerm>,
}

fn edge_name(kind: EdgeKind, index: usize) -> String {
    format!("{}{index}", kind.tag())
}

/// `∫₀^{s_i} f` at every node by composite Simpson.
fn cumulative_integral(f: impl Fn(f64) -> Result<f64>, grid: &EdgeGrid) -> Result<Vec<f64>> {
    let mut out = vec![0.0; grid.nodes()];
    for i in 0..grid.cells {
        let (x0, x1) = (grid.s(i), grid.s(i + 1));
        let w = (x1 - x0) / SUBPANELS as f64;
        let mut acc = 0.0;
        for k in 0..SUBPANELS {
            let a = x0 + k as f64 * w;
            let b = if k + 1 == SUBPANELS { x1 } else { a + w };
            acc += (b - a) / 6.0 * (f(a)? + 4.0 * f(0.5 * (a + b))? + f(b)?);
        }
        out[i + 1] = out[i] + acc;
    }
    Ok(out)
}

fn velocity(data: &EdgeInitial, mu: f64, s: f64) -> Result<f64> {
    match data.u1 {
        Descriptor::TravelLeft => Ok(mu * data.u0.derivative(s)?),
        Descriptor::TravelRight => Ok(-mu * data.u0.derivative(s)?),
        ref d => d.value(s),
    }
}

fn init_edge(grid: EdgeGrid, mu: f64, data: &EdgeInitial) -> Result<WaveEdge> {
    let nodes = grid.nodes();
    let s = grid.coords();
    let u0: Vec<f64> = s.iter().map(|&x| data.u0.value(x)).collect::<Result<_>>()?;
    let du0: Vec<f64> = s.iter().map(|&x| data.u0.derivative(x)).collect::<Result<_>>()?;
    // U1 = ∫ u1 / μ
    let big_u1: Vec<f64> = match data.u1 {
        Descriptor::Zero => vec![0.0; nodes],
        Descriptor::TravelLeft => u0.iter().map(|v| v - u0[0]).collect(),
        Descriptor::TravelRight => u0.iter().map(|v| u0[0] - v).collect(),
        ref d => cumulative_integral(|x| d.value(x), &grid)?.into_iter().map(|v| v / mu).collect(),
    };
    let u1: Vec<f64> = s.iter().map(|&x| velocity(data, mu, x)).collect::<Result<_>>()?;
    Ok(WaveEdge {
        p: (0..nodes).map(|i| u1[i] + mu * du0[i]).collect(),
        q: (0..nodes).map(|i| u1[i] - mu * du0[i]).collect(),
        a: (0..nodes).map(|i| 0.5 * (u0[i] + big_u1[i])).collect(),
        b: (0..nodes).map(|i| 0.5 * (u0[i] - big_u1[i])).collect(),
        grid,
        mu,
    })
}

/// Validates the data, snaps speeds, checks the conditions and builds the
/// initial state.
pub fn wave_init(
    graph: &MetricGraph,
    coeffs: &EdgeCoefficients,
    bc: &BoundaryConditions,
    init: &InitialData,
    params: &WaveParams,
) -> Result<WaveState> {
    let (mats, report) = gated_matrices(graph, coeffs, bc)?;
    check_external_lengths(graph, &params.external_lengths)?;
    init.validate(graph)?;
    if !(params.dt_target > 0.0 && params.t_final >= 0.0 && params.snap_tol >= 0.0) {
        return Err(Error::InvalidArgument("dt_target, T and snap_tol must be positive".into()));
    }
    let dt = if params.t_final > 0.0 {
        params.t_final / (params.t_final / params.dt_target).ceil()
    } else {
        params.dt_target
    };
    let ell = graph.ell();

    let mut specs = Vec::new();
    for (k, p) in coeffs.external.iter().enumerate() {
        specs.push((EdgeKind::External, k, p, params.external_lengths[k]));
    }
    for (j, p) in coeffs.internal.iter().enumerate() {
        specs.push((EdgeKind::Internal, j, p, 1.0));
    }
    let mut edges = Vec::with_capacity(specs.len());
    for (pos, (kind, index, profile, length)) in specs.into_iter().enumerate() {
        let name = edge_name(kind, index);
        let lambda = profile.constant_value().ok_or_else(|| Error::UnsupportedVariableCoefficient(name.clone()))?;
        let mu = lambda.sqrt();
        let cells = ((length / (mu * dt)).round() as usize).max(1);
        let snapped = length / (cells as f64 * dt);
        let rel_error = (snapped - mu).abs() / mu;
        if rel_error > params.snap_tol {
            return Err(Error::SpeedSnapExceeded { edge: name, rel_error, tol: params.snap_tol });
        }
        let grid = EdgeGrid { kind, index, length, cells };
        edges.push(init_edge(grid, snapped, init.edge(ell, pos))?);
    }
    check_support(&edges, ell, params.t_final)?;

    let mut mu_trace: Vec<f64> = edges[..ell].iter().map(|e| e.mu).collect();
    mu_trace.extend(edges[ell..].iter().map(|e| e.mu));
    mu_trace.extend(edges[ell..].iter().map(|e| e.mu));
    let update = wellposed::vertex_update_matrix_with_mu(&mats, &mu_trace)?;

    let n = graph.trace_len();
    let k0 = mats.k0();
    let u_full = mats.u_rows();
    let u_rows = if u_full.iter().any(|z| z.re != 0.0) {
        let mut m = DMatrix::zeros(n, n);
        for r in 0..mats.k1() {
            for col in 0..n {
                m[(k0 + r, col)] = u_full[(r, col)].re;
            }
        }
        Some(m)
    } else {
        None
    };
    let kernels = mats
        .kernels
        .iter()
        .map(|k| {
            let edge = ell + k.edge;
            let mut direction = CVec::zeros(n);
            direction.rows_mut(k0, mats.k1()).copy_from(&k.direction);
            KernelTerm { edge, direction, weights: k.quadrature_weights(edges[edge].grid.nodes()) }
        })
        .collect();

    Ok(WaveState { edges, t: 0.0, dt, steps: 0, report, graph: graph.clone(), update, u_rows, kernels })
}

fn check_support(edges: &[WaveEdge], ell: usize, t_final: f64) -> Result<()> {
    let scale = edges
        .iter()
        .flat_map(|e| (0..e.grid.nodes()).map(move |i| e.u(i).abs().max(e.ut(i).abs())))
        .fold(0.0, f64::max);
    for (k, e) in edges[..ell].iter().enumerate() {
        let limit = e.grid.length - e.mu * t_final;
        for i in 0..e.grid.nodes() {
            let s = e.grid.s(i);
            let size = e.u(i).abs().max(e.p[i].abs()).max(e.q[i].abs());
            if s > limit && size > SUPPORT_TOL * scale {
                return Err(Error::SupportViolation { edge: k, limit: limit.max(0.0) });
            }
        }
    }
    Ok(())
}

/// Advances the state by one step.
pub fn wave_step(state: &mut WaveState) {
    let g = &state.graph;
    let (ell, m) = (g.ell(), g.m());
    let n = g.trace_len();
    let grids: Vec<EdgeGrid> = state.edges.iter().map(|e| e.grid.clone()).collect();
    let nodes: Vec<(usize, usize)> = (0..n).map(|slot| slot_node(g, &grids, slot)).collect();
    let u_old: Vec<f64> = nodes.iter().map(|&(e, i)| state.edges[e].u(i)).collect();
    let ut_old: Vec<f64> = nodes.iter().map(|&(e, i)| state.edges[e].ut(i)).collect();

    let mut rhs = CVec::zeros(n);
    if let Some(u_rows) = &state.u_rows {
        let lagged = u_rows * nalgebra::DVector::from_column_slice(&u_old);
        for r in 0..n {
            rhs[r] -= c(lagged[r]);
        }
    }
    for k in &state.kernels {
        let e = &state.edges[k.edge];
        let integral: f64 = k.weights.iter().enumerate().map(|(i, w)| w * e.u(i)).sum();
        rhs -= &k.direction * c(integral);
    }

    for (pos, e) in state.edges.iter_mut().enumerate() {
        let last = e.grid.cells;
        let a_end = e.a[last];
        e.p.copy_within(1.., 0);
        e.a.copy_within(1.., 0);
        e.q.copy_within(..last, 1);
        e.b.copy_within(..last, 1);
        if pos < ell {
            e.p[last] = 0.0;
            e.a[last] = a_end;
        }
    }

    let mut incoming = CVec::zeros(n);
    for k in 0..ell {
        incoming[k] = c(state.edges[k].p[0]);
    }
    for j in 0..m {
        let e = &state.edges[ell + j];
        incoming[ell + j] = c(e.q[e.grid.cells]);
        incoming[ell + m + j] = c(e.p[0]);
    }
    rhs -= &state.update.m_in * incoming;
    let x = state.update.solve(&rhs);
    for k in 0..ell {
        state.edges[k].q[0] = x[k].re;
    }
    for j in 0..m {
        let e = &mut state.edges[ell + j];
        let last = e.grid.cells;
        e.p[last] = x[ell + j].re;
        e.q[0] = x[ell + m + j].re;
    }

    let dt = state.dt;
    for (slot, &(e, i)) in nodes.iter().enumerate() {
        let edge = &mut state.edges[e];
        let u_new = u_old[slot] + 0.5 * dt * (ut_old[slot] + edge.ut(i));
        if i == 0 {
            edge.b[0] = u_new - edge.a[0];
        } else {
            edge.a[i] = u_new - edge.b[i];
        }
    }
    state.steps += 1;
    state.t = state.steps as f64 * dt;
}

/// `E = ½ Σ ∫ (u_t² + λ u_s²) = ¼ Σ ∫ (p² + q²)` by trapezoid.
pub fn energy(state: &WaveState) -> f64 {
    state.edges.iter().map(|e| 0.25 * e.grid.trapezoid(|i| e.p[i] * e.p[i] + e.q[i] * e.q[i])).sum()
}

pub fn mass(state: &WaveState) -> f64 {
    state.edges.iter().map(|e| e.grid.trapezoid(|i| e.u(i))).sum()
}

pub fn snapshot(state: &WaveState) -> Snapshot {
    Snapshot {
        t: state.t,
        edges: state
            .edges
            .iter()
            .map(|e| EdgeField {
                kind: e.grid.kind,
                index: e.grid.index,
                s: e.grid.coords(),
                u: e.u_values(),
                ut: Some(e.ut_values()),
            })
            .collect(),
    }
}

/// Steps until `t_final` (a multiple of `dt`), recording every `record_stride` steps
/// and at the end.
pub fn wave_run(state: &mut WaveState, t_final: f64, record_stride: usize) -> Result<RunOutput> {
    let steps = step_count(t_final, state.dt)?;
    let stride = record_stride.max(1);
    let mut diagnostics = Diagnostics::default();
    let mut snapshots = Vec::new();
    let mut record = |s: &WaveState, d: &mut Diagnostics| {
        d.push(s.t, energy(s), mass(s));
        snapshots.push(snapshot(s));
    };
    record(state, &mut diagnostics);
    for k in 1..=steps {
        wave_step(state);
        if k % stride == 0 || k == steps {
            record(state, &mut diagnostics);
        }
    }
    Ok(RunOutput { diagnostics, snapshots })
}
