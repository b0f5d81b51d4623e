//! Boundary and vertex conditions.
//!
//! Two representations are supported:
//!
//! * [`BoundaryMatricesBC`]: `k0` value rows and `k1` derivative rows,
//!   ```text
//!   V0e f^e(0) + V0i f^i(0) + V1i f^i(1) = 0
//!   W0e f^e'(0) + W0i f^i'(0) − W1i f^i'(1) + U0e f^e(0) + U0i f^i(0) + U1i f^i(1) = 0
//!   ```
//! * [`BoundarySpacesBC`]: the value trace lies in `Y1` and the signed flux
//!   trace (plus zeroth-order terms) lies in `Y0`.
//!
//! Traces are always ordered `(e(0), i(0), i(1))`, see [`crate::graph`]. The
//! flux trace is `(μ^e(0) f^e'(0), μ^i(0) f^i'(0), −μ^i(1) f^i'(1))`, i.e. the
//! derivative at internal heads carries a minus sign.

use num_complex::Complex64;

use crate::coeffs::{interp_uniform, EdgeCoefficients};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::linalg::{self, c, CMat, CVec, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceVector {
    pub value: CVec,
    pub flux: CVec,
}

impl TraceVector {
    pub fn new(value: CVec, flux: CVec) -> Self {
        Self { value, flux }
    }

    pub fn zeros(len: usize) -> Self {
        Self { value: CVec::zeros(len), flux: CVec::zeros(len) }
    }

    /// Builds the trace from raw endpoint values and raw derivatives
    /// `(f^e'(0), f^i'(0), f^i'(1))`, applying the μ weights and sign.
    pub fn from_derivatives(
        graph: &MetricGraph,
        coeffs: &EdgeCoefficients,
        values: &[Complex64],
        derivatives: &[Complex64],
    ) -> Self {
        let mu = coeffs.endpoint_mu();
        let heads = graph.ell() + graph.m();
        let flux = CVec::from_iterator(
            derivatives.len(),
            derivatives.iter().enumerate().map(|(i, d)| {
                let sign = if i >= heads { -1.0 } else { 1.0 };
                d * sign * mu[i]
            }),
        );
        Self { value: CVec::from_column_slice(values), flux }
    }
}

/// A flux-condition term `direction · ∫₀¹ k(s) f_edge(s) ds` on an internal edge.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalKernel {
    pub edge: usize,
    pub direction: CVec,
    /// Kernel samples on a uniform grid over `[0, 1]`.
    pub samples: Vec<f64>,
}

impl NonlocalKernel {
    /// Kernel value at `s` (linear interpolation).
    pub fn eval(&self, s: f64) -> f64 {
        interp_uniform(&self.samples, 1.0, s)
    }

    /// Trapezoid weights `w_i k(s_i)` for a function sampled on `nodes`
    /// uniform nodes over `[0, 1]`.
    pub fn quadrature_weights(&self, nodes: usize) -> Vec<f64> {
        trapezoid_weights(nodes, 1.0)
            .into_iter()
            .enumerate()
            .map(|(i, w)| w * self.eval(i as f64 / (nodes - 1) as f64))
            .collect()
    }

    /// `∫₀¹ k f` for `f` sampled on a uniform grid.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.quadrature_weights(f.len()).iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

pub fn trapezoid_weights(nodes: usize, span: f64) -> Vec<f64> {
    let h = span / (nodes - 1) as f64;
    let mut w = vec![h; nodes];
    w[0] *= 0.5;
    w[nodes - 1] *= 0.5;
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMatricesBC {
    pub ell: usize,
    pub m: usize,
    pub v0e: CMat,
    pub v0i: CMat,
    pub v1i: CMat,
    pub w0e: CMat,
    pub w0i: CMat,
    pub w1i: CMat,
    pub u0e: CMat,
    pub u0i: CMat,
    pub u1i: CMat,
    pub kernels: Vec<NonlocalKernel>,
}

impl BoundaryMatricesBC {
    /// Conditions without zeroth-order flux terms.
    pub fn new(v0e: CMat, v0i: CMat, v1i: CMat, w0e: CMat, w0i: CMat, w1i: CMat) -> Result<Self> {
        let k1 = w0i.nrows().max(w0e.nrows());
        let (ell, m) = (v0e.ncols().max(w0e.ncols()), v0i.ncols().max(w0i.ncols()));
        let bc = Self {
            ell,
            m,
            u0e: CMat::zeros(k1, ell),
            u0i: CMat::zeros(k1, m),
            u1i: CMat::zeros(k1, m),
            v0e,
            v0i,
            v1i,
            w0e,
            w0i,
            w1i,
            kernels: Vec::new(),
        };
        bc.check_dims()?;
        Ok(bc)
    }

    pub fn with_u(mut self, u0e: CMat, u0i: CMat, u1i: CMat) -> Result<Self> {
        self.u0e = u0e;
        self.u0i = u0i;
        self.u1i = u1i;
        self.check_dims()?;
        Ok(self)
    }

    /// Compact-graph shorthand (`ℓ = 0`).
    pub fn compact(v0: CMat, v1: CMat, w0: CMat, w1: CMat) -> Result<Self> {
        let (k0, k1) = (v0.nrows(), w0.nrows());
        Self::new(CMat::zeros(k0, 0), v0, v1, CMat::zeros(k1, 0), w0, w1)
    }

    pub fn k0(&self) -> usize {
        self.v0i.nrows()
    }

    pub fn k1(&self) -> usize {
        self.w0i.nrows()
    }

    pub fn trace_len(&self) -> usize {
        self.ell + 2 * self.m
    }

    pub fn check_dims(&self) -> Result<()> {
        let (k0, k1, l, m) = (self.k0(), self.k1(), self.ell, self.m);
        let expect = [
            ("V0e", &self.v0e, k0, l),
            ("V0i", &self.v0i, k0, m),
            ("V1i", &self.v1i, k0, m),
            ("W0e", &self.w0e, k1, l),
            ("W0i", &self.w0i, k1, m),
            ("W1i", &self.w1i, k1, m),
            ("U0e", &self.u0e, k1, l),
            ("U0i", &self.u0i, k1, m),
            ("U1i", &self.u1i, k1, m),
        ];
        for (name, mat, r, cc) in expect {
            if mat.shape() != (r, cc) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {r}x{cc}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
        }
        if k0 + k1 != l + 2 * m {
            return Err(Error::DimensionMismatch(format!(
                "k0 + k1 = {} but ℓ + 2m = {}",
                k0 + k1,
                l + 2 * m
            )));
        }
        for k in &self.kernels {
            if k.direction.len() != k1 || k.edge >= m {
                return Err(Error::DimensionMismatch("nonlocal kernel does not fit".into()));
            }
        }
        Ok(())
    }

    /// `[V0e | V0i | V1i]` in trace column order.
    pub fn value_rows(&self) -> CMat {
        hcat(&[&self.v0e, &self.v0i, &self.v1i])
    }

    /// Rows acting on the flux trace: `[W0e μ^e(0)⁻¹ | W0i μ^i(0)⁻¹ | W1i μ^i(1)⁻¹]`.
    pub fn flux_rows(&self, coeffs: &EdgeCoefficients) -> CMat {
        let (wbar0e, wbar0i, wbar1i) = self.wbar(coeffs);
        hcat(&[&wbar0e, &wbar0i, &wbar1i])
    }

    /// `[U0e | U0i | U1i]` in trace column order.
    pub fn u_rows(&self) -> CMat {
        hcat(&[&self.u0e, &self.u0i, &self.u1i])
    }

    /// `(W̄0e, W̄0i, W̄1i)`: derivative matrices scaled by `μ⁻¹` at their endpoint.
    pub fn wbar(&self, coeffs: &EdgeCoefficients) -> (CMat, CMat, CMat) {
        self.wbar_with(&coeffs.endpoint_mu())
    }

    pub fn wbar_with(&self, endpoint_mu: &[f64]) -> (CMat, CMat, CMat) {
        let (l, m) = (self.ell, self.m);
        let scale = |w: &CMat, off: usize| {
            let mut out = w.clone();
            for (j, mut col) in out.column_iter_mut().enumerate() {
                col /= c(endpoint_mu[off + j]);
            }
            out
        };
        (scale(&self.w0e, 0), scale(&self.w0i, l), scale(&self.w1i, l + m))
    }

    pub fn value_residual(&self, trace: &TraceVector) -> CVec {
        self.value_rows() * &trace.value
    }

    /// Residual of the derivative rows; nonlocal kernels are taken as zero.
    pub fn flux_residual(&self, trace: &TraceVector, coeffs: &EdgeCoefficients) -> CVec {
        self.flux_rows(coeffs) * &trace.flux + self.u_rows() * &trace.value
    }

    /// Largest imaginary part among all matrix entries.
    pub fn max_imag(&self) -> f64 {
        [&self.v0e, &self.v0i, &self.v1i, &self.w0e, &self.w0i, &self.w1i, &self.u0e, &self.u0i, &self.u1i]
            .into_iter()
            .map(linalg::max_imag)
            .chain(self.kernels.iter().map(|k| k.direction.iter().map(|z| z.im.abs()).fold(0.0, f64::max)))
            .fold(0.0, f64::max)
    }

    /// Multiplies one row (value rows first, then flux rows) by `factor`.
    pub fn scale_row(&mut self, row: usize, factor: Complex64) {
        let k0 = self.k0();
        if row < k0 {
            for m in [&mut self.v0e, &mut self.v0i, &mut self.v1i] {
                let scaled = m.row(row) * factor;
                m.set_row(row, &scaled);
            }
        } else {
            let r = row - k0;
            for m in [&mut self.w0e, &mut self.w0i, &mut self.w1i, &mut self.u0e, &mut self.u0i, &mut self.u1i] {
                let scaled = m.row(r) * factor;
                m.set_row(r, &scaled);
            }
            for k in &mut self.kernels {
                k.direction[r] *= factor;
            }
        }
    }
}

pub(crate) fn hcat(blocks: &[&CMat]) -> CMat {
    let rows = blocks.iter().map(|b| b.nrows()).max().unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        if b.ncols() > 0 {
            out.view_mut((0, off), b.shape()).copy_from(*b);
        }
        off += b.ncols();
    }
    out
}

fn split_columns(m: &CMat, ell: usize, n_int: usize) -> (CMat, CMat, CMat) {
    (
        m.columns(0, ell).into_owned(),
        m.columns(ell, n_int).into_owned(),
        m.columns(ell + n_int, n_int).into_owned(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpacesBC {
    pub ell: usize,
    pub m: usize,
    pub y1_basis: CMat,
    pub y0_basis: CMat,
    /// `(ℓ+2m) × (ℓ+2m)` matrix acting on the value trace, added to the flux trace.
    pub local_u: Option<CMat>,
    pub kernels: Vec<NonlocalKernel>,
}

impl BoundarySpacesBC {
    pub fn new(ell: usize, m: usize, y1_basis: CMat, y0_basis: CMat) -> Result<Self> {
        let n = ell + 2 * m;
        if y1_basis.nrows() != n || y0_basis.nrows() != n {
            return Err(Error::DimensionMismatch(format!("basis rows must equal ℓ + 2m = {n}")));
        }
        Ok(Self { ell, m, y1_basis, y0_basis, local_u: None, kernels: Vec::new() })
    }

    pub fn trace_len(&self) -> usize {
        self.ell + 2 * self.m
    }

    pub fn d0(&self) -> usize {
        self.y0_basis.ncols()
    }

    pub fn d1(&self) -> usize {
        self.y1_basis.ncols()
    }

    pub fn check_bases(&self) -> Result<()> {
        for b in [&self.y0_basis, &self.y1_basis] {
            let r = linalg::rank(b);
            if r < b.ncols() {
                return Err(Error::RankDeficientBasis { rank: r, cols: b.ncols() });
            }
        }
        Ok(())
    }

    /// Rows annihilating `Y1` (value conditions).
    pub fn value_rows(&self) -> CMat {
        linalg::orthogonal_complement(&self.y1_basis).adjoint()
    }

    /// Rows annihilating `Y0` (flux conditions).
    pub fn flux_rows(&self) -> CMat {
        linalg::orthogonal_complement(&self.y0_basis).adjoint()
    }

    pub fn value_residual(&self, trace: &TraceVector) -> CVec {
        self.value_rows() * &trace.value
    }

    /// Residual of the flux membership; nonlocal kernels are taken as zero.
    pub fn flux_residual(&self, trace: &TraceVector) -> CVec {
        let mut v = trace.flux.clone();
        if let Some(u) = &self.local_u {
            v += u * &trace.value;
        }
        self.flux_rows() * v
    }

    /// Row form of the same conditions.
    pub fn to_boundary_matrices(&self, coeffs: &EdgeCoefficients) -> Result<BoundaryMatricesBC> {
        let n = self.trace_len();
        if self.d0() + self.d1() != n {
            return Err(Error::NotComplementary(format!(
                "dim Y0 + dim Y1 = {} ≠ {n}",
                self.d0() + self.d1()
            )));
        }
        let joint = hcat(&[
            &linalg::orthonormal_range(&self.y0_basis),
            &linalg::orthonormal_range(&self.y1_basis),
        ]);
        let (smin, smax) = linalg::extreme_singular_values(&joint);
        if joint.ncols() != n || smin <= n as f64 * 1e-12 * smax {
            return Err(Error::NotComplementary(format!(
                "Y0 ∩ Y1 ≠ {{0}} (σ_min = {smin:e})"
            )));
        }
        let a1 = self.value_rows();
        let a0 = self.flux_rows();
        let mu = coeffs.endpoint_mu();
        let (v0e, v0i, v1i) = split_columns(&a1, self.ell, self.m);
        let mut a0_mu = a0.clone();
        for (j, mut col) in a0_mu.column_iter_mut().enumerate() {
            col *= c(mu[j]);
        }
        let (w0e, w0i, w1i) = split_columns(&a0_mu, self.ell, self.m);
        let u = match &self.local_u {
            Some(u) => &a0 * u,
            None => CMat::zeros(a0.nrows(), n),
        };
        let (u0e, u0i, u1i) = split_columns(&u, self.ell, self.m);
        let mut bc = BoundaryMatricesBC::new(v0e, v0i, v1i, w0e, w0i, w1i)?.with_u(u0e, u0i, u1i)?;
        bc.kernels = self
            .kernels
            .iter()
            .map(|k| NonlocalKernel { edge: k.edge, direction: &a0 * &k.direction, samples: k.samples.clone() })
            .collect();
        Ok(bc)
    }
}

/// `f(j) = ∫₀¹ h_j(s) f(s) ds`, `j = 0, 1`, on a single interval.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalIntervalBC {
    /// Samples of `h0` and `h1` on uniform grids over `[0, 1]`.
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
    /// Window of the invertibility certificate, in `(0, 1]`.
    pub t0: f64,
}

/// Any of the supported boundary-condition families.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryConditions {
    Matrices(BoundaryMatricesBC),
    Spaces(BoundarySpacesBC),
    NonlocalInterval(NonlocalIntervalBC),
}

/// `diag(μ^e(0)⁻¹, μ^i(0)⁻¹, μ^i(1)⁻¹)` as a vector.
fn inverse_endpoint_mu(coeffs: &EdgeCoefficients) -> Vec<f64> {
    coeffs.endpoint_mu().into_iter().map(|m| 1.0 / m).collect()
}

fn check_coeffs(graph: &MetricGraph, coeffs: &EdgeCoefficients) -> Result<()> {
    graph.validate()?;
    coeffs.validate(graph)
}

/// Continuity plus Kirchhoff conditions at every vertex.
pub fn from_standard(graph: &MetricGraph, coeffs: &EdgeCoefficients) -> Result<BoundarySpacesBC> {
    check_coeffs(graph, coeffs)?;
    let y1 = graph.continuity_space();
    let cinv = inverse_endpoint_mu(coeffs);
    let mut y0 = linalg::orthogonal_complement(&y1);
    for (i, mut row) in y0.row_iter_mut().enumerate() {
        row *= c(cinv[i]);
    }
    BoundarySpacesBC::new(graph.ell(), graph.m(), y1, y0)
}

/// Diagonal of `D̃` in trace order: `α_v / deg(v)` for the vertex `v` hosting each slot.
pub fn delta_weights(graph: &MetricGraph, alpha: &[Complex64]) -> Result<Vec<Complex64>> {
    if alpha.len() != graph.n {
        return Err(Error::DimensionMismatch(format!(
            "{} vertex coefficients for {} vertices",
            alpha.len(),
            graph.n
        )));
    }
    let deg = graph.degree_matrices().degrees();
    for (v, a) in alpha.iter().enumerate() {
        if deg[v] == 0 && *a != ZERO {
            return Err(Error::ZeroDegreeVertex { vertex: v, alpha: a.to_string() });
        }
    }
    Ok(graph.slot_vertices().into_iter().map(|v| alpha[v] / deg[v] as f64).collect())
}

/// δ-type conditions: continuity and `Σ λ ∂f = α_v f(v)` at every vertex.
pub fn from_delta(graph: &MetricGraph, coeffs: &EdgeCoefficients, alpha: &[Complex64]) -> Result<BoundarySpacesBC> {
    let weights = delta_weights(graph, alpha)?;
    let mut bc = from_standard(graph, coeffs)?;
    if weights.iter().any(|w| *w != ZERO) {
        let cinv = inverse_endpoint_mu(coeffs);
        let diag: Vec<Complex64> = weights.iter().zip(&cinv).map(|(w, ci)| -w * ci).collect();
        bc.local_u = Some(linalg::block_diag(&diag));
    }
    Ok(bc)
}

/// Continuity plus Kirchhoff sums coupled to arbitrary endpoint values:
/// `Φ^{e,−}M^e f^e(0) + Φ^{i,−}M^{i,−} f^i(0) + Φ^{i,+}M^{i,+} f^i(1)` on the right-hand side.
pub fn from_nonlocal_matrices(
    graph: &MetricGraph,
    coeffs: &EdgeCoefficients,
    me: &CMat,
    mi_minus: &CMat,
    mi_plus: &CMat,
) -> Result<BoundarySpacesBC> {
    let (l, m) = (graph.ell(), graph.m());
    if me.shape() != (l, l) || mi_minus.shape() != (m, m) || mi_plus.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "coupling matrices must be {l}x{l}, {m}x{m}, {m}x{m}"
        )));
    }
    let mut bc = from_standard(graph, coeffs)?;
    let n = graph.trace_len();
    let mut coupling = CMat::zeros(n, n);
    coupling.view_mut((0, 0), (l, l)).copy_from(me);
    coupling.view_mut((l, l), (m, m)).copy_from(mi_minus);
    coupling.view_mut((l + m, l + m), (m, m)).copy_from(mi_plus);
    if coupling.iter().any(|z| *z != ZERO) {
        let cinv = inverse_endpoint_mu(coeffs);
        for (i, mut row) in coupling.row_iter_mut().enumerate() {
            row *= c(-cinv[i]);
        }
        bc.local_u = Some(coupling);
    }
    Ok(bc)
}

/// `(f'(0), f'(1)) = K (f(0), f(1))` on a compact graph.
pub fn from_matrix_mixed(graph: &MetricGraph, coeffs: &EdgeCoefficients, k: &CMat) -> Result<BoundarySpacesBC> {
    if graph.ell() > 0 {
        return Err(Error::ExternalEdgesPresent(graph.ell()));
    }
    check_coeffs(graph, coeffs)?;
    let n = graph.trace_len();
    if k.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!("K must be {n}x{n}")));
    }
    let mu = coeffs.endpoint_mu();
    let mut u = k.clone();
    for (i, mut row) in u.row_iter_mut().enumerate() {
        let sign = if i < graph.m() { -1.0 } else { 1.0 };
        row *= c(sign * mu[i]);
    }
    let mut bc = BoundarySpacesBC::new(0, graph.m(), CMat::identity(n, n), CMat::zeros(n, 0))?;
    bc.local_u = Some(u);
    Ok(bc)
}

/// `(f(0), f(1)) ∈ Y` and `(−λ(0) f'(0), λ(1) f'(1)) + W (f(0), f(1)) ∈ Y^⊥`
/// on a compact graph; `W` is given in the coordinates of `y_basis`.
pub fn from_generalized_node(
    graph: &MetricGraph,
    coeffs: &EdgeCoefficients,
    y_basis: &CMat,
    w: &CMat,
) -> Result<BoundarySpacesBC> {
    if graph.ell() > 0 {
        return Err(Error::ExternalEdgesPresent(graph.ell()));
    }
    check_coeffs(graph, coeffs)?;
    let n = graph.trace_len();
    let d = y_basis.ncols();
    if y_basis.nrows() != n || w.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!("Y basis must be {n}xd and W dxd")));
    }
    let r = linalg::rank(y_basis);
    if r < d {
        return Err(Error::RankDeficientBasis { rank: r, cols: d });
    }
    let cinv = inverse_endpoint_mu(coeffs);
    let mut y0 = linalg::orthogonal_complement(y_basis);
    for (i, mut row) in y0.row_iter_mut().enumerate() {
        row *= c(cinv[i]);
    }
    let mut bc = BoundarySpacesBC::new(0, graph.m(), y_basis.clone(), y0)?;
    if d > 0 && w.iter().any(|z| *z != ZERO) {
        let coords = linalg::left_inverse(y_basis).ok_or(Error::RankDeficientBasis { rank: r, cols: d })?;
        let mut u = y_basis * w * coords;
        for (i, mut row) in u.row_iter_mut().enumerate() {
            row *= c(-cinv[i]);
        }
        bc.local_u = Some(u);
    }
    Ok(bc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoefficientProfile;
    use crate::linalg::ONE;

    fn cm(rows: usize, cols: usize, v: &[f64]) -> CMat {
        CMat::from_row_slice(rows, cols, &v.iter().map(|x| c(*x)).collect::<Vec<_>>())
    }

    fn cv(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|x| c(*x)).collect()
    }

    fn small(v: &CVec) -> bool {
        v.iter().all(|z| z.norm() < 1e-12)
    }

    #[test]
    fn standard_interval_is_neumann() {
        let g = MetricGraph::interval();
        let bc = from_standard(&g, &EdgeCoefficients::uniform(&g, 1.0)).unwrap();
        assert_eq!((bc.d1(), bc.d0()), (2, 0));
    }

    #[test]
    fn standard_loop_is_periodic() {
        let g = MetricGraph::loop_edge();
        let co = EdgeCoefficients::uniform(&g, 1.0);
        let bc = from_standard(&g, &co).unwrap();
        assert_eq!((bc.d1(), bc.d0()), (1, 1));
        let y0 = &bc.y0_basis;
        assert!((y0[(0, 0)] + y0[(1, 0)]).norm() < 1e-14);
        // f = cos(2πs): f(0) = f(1), f'(0) = f'(1) = 0; f = sin(2πs): f'(0) = f'(1) = 2π
        let t = TraceVector::from_derivatives(&g, &co, &cv(&[0.0, 0.0]), &cv(&[6.0, 6.0]));
        assert!(small(&bc.value_residual(&t)) && small(&bc.flux_residual(&t)));
        let t = TraceVector::from_derivatives(&g, &co, &cv(&[0.0, 0.0]), &cv(&[6.0, 5.0]));
        assert!(!small(&bc.flux_residual(&t)));
    }

    #[test]
    fn standard_star_spaces_are_orthogonal() {
        let g = MetricGraph::new(3, vec![(0, 1), (0, 2)], vec![0]);
        let bc = from_standard(&g, &EdgeCoefficients::uniform(&g, 1.0)).unwrap();
        assert_eq!((bc.d1(), bc.d0()), (3, 2));
        let cross = bc.y0_basis.adjoint() * &bc.y1_basis;
        assert!(cross.iter().all(|z| z.norm() < 1e-13));
        assert_eq!(linalg::rank(&hcat(&[&bc.y0_basis, &bc.y1_basis])), 5);
    }

    #[test]
    fn kirchhoff_star_residuals() {
        // compact 3-star, λ = (1, 4, 9): Σ λ_j f_j'(0) = 0 and continuity at the center
        let g = MetricGraph::star(3);
        let mut co = EdgeCoefficients::uniform(&g, 1.0);
        co.internal = [1.0, 4.0, 9.0].map(CoefficientProfile::constant).to_vec();
        let bc = from_standard(&g, &co).unwrap();
        let values = cv(&[2.0, 2.0, 2.0, -1.0, 3.0, 0.5]);
        let derivs = cv(&[6.0, -0.5, -4.0 / 9.0, 0.0, 0.0, 0.0]);
        let t = TraceVector::from_derivatives(&g, &co, &values, &derivs);
        assert!(small(&bc.value_residual(&t)));
        assert!(small(&bc.flux_residual(&t)));
        let mut broken = derivs.clone();
        broken[0] = c(5.0);
        let t = TraceVector::from_derivatives(&g, &co, &values, &broken);
        assert!(!small(&bc.flux_residual(&t)));
    }

    #[test]
    fn delta_zero_equals_standard() {
        let g = MetricGraph::new(4, vec![(0, 1), (1, 2), (2, 0)], vec![3, 0]);
        let co = EdgeCoefficients::uniform(&g, 2.0);
        assert_eq!(from_delta(&g, &co, &[ZERO; 4]).unwrap(), from_standard(&g, &co).unwrap());
    }

    #[test]
    fn delta_weights_on_star() {
        let g = MetricGraph::star(3);
        let w = delta_weights(&g, &cv(&[3.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(&w[..3], &[ONE; 3]);
        assert!(w[3..].iter().all(|z| *z == ZERO));
        let g = MetricGraph::new(3, vec![(0, 1)], vec![]);
        assert!(matches!(
            delta_weights(&g, &cv(&[0.0, 0.0, 1.0])),
            Err(Error::ZeroDegreeVertex { vertex: 2, .. })
        ));
    }

    #[test]
    fn delta_interval_is_robin() {
        let g = MetricGraph::interval();
        let co = EdgeCoefficients::uniform(&g, 2.0);
        let (a0, a1) = (0.7, -1.3);
        let bc = from_delta(&g, &co, &cv(&[a0, a1])).unwrap();
        // λ f'(0) = a0 f(0), −λ f'(1) = a1 f(1)
        let (f0, f1) = (1.5, -0.25);
        let t = TraceVector::from_derivatives(&g, &co, &cv(&[f0, f1]), &cv(&[a0 * f0 / 2.0, -a1 * f1 / 2.0]));
        assert!(small(&bc.flux_residual(&t)));
        let t = TraceVector::from_derivatives(&g, &co, &cv(&[f0, f1]), &cv(&[a0 * f0, -a1 * f1 / 2.0]));
        assert!(!small(&bc.flux_residual(&t)));
    }

    #[test]
    fn nonlocal_matrices_generalise_delta() {
        let g = MetricGraph::star(3);
        let co = EdgeCoefficients::uniform(&g, 1.0);
        let alpha = cv(&[3.0, 0.0, 0.0, 0.0]);
        let w = delta_weights(&g, &alpha).unwrap();
        let mi_minus = linalg::block_diag(&w[..3]);
        let nl = from_nonlocal_matrices(&g, &co, &CMat::zeros(0, 0), &mi_minus, &CMat::zeros(3, 3)).unwrap();
        assert_eq!(nl, from_delta(&g, &co, &alpha).unwrap());

        let zero = from_nonlocal_matrices(&g, &co, &CMat::zeros(0, 0), &CMat::zeros(3, 3), &CMat::zeros(3, 3)).unwrap();
        assert_eq!(zero, from_standard(&g, &co).unwrap());

        assert!(matches!(
            from_nonlocal_matrices(&g, &co, &CMat::zeros(1, 1), &CMat::zeros(3, 3), &CMat::zeros(3, 3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn nonlocal_interval_head_coupling() {
        // interval, M^{i,+} = [β]: at vertex 1, −λ f'(1) = β f(1)
        let g = MetricGraph::interval();
        let co = EdgeCoefficients::uniform(&g, 1.0);
        let beta = 2.5;
        let bc = from_nonlocal_matrices(&g, &co, &CMat::zeros(0, 0), &CMat::zeros(1, 1), &cm(1, 1, &[beta])).unwrap();
        let t = TraceVector::from_derivatives(&g, &co, &cv(&[0.3, 2.0]), &cv(&[0.0, -beta * 2.0]));
        assert!(small(&bc.flux_residual(&t)));
    }

    #[test]
    fn matrix_mixed_examples() {
        let g = MetricGraph::interval();
        let co = EdgeCoefficients::uniform(&g, 1.0);
        let bc = from_matrix_mixed(&g, &co, &CMat::zeros(2, 2)).unwrap();
        assert_eq!((bc.d0(), bc.d1()), (0, 2));
        let t = TraceVector::from_derivatives(&g, &co, &cv(&[1.0, 4.0]), &cv(&[0.0, 0.0]));
        assert!(small(&bc.flux_residual(&t)));

        let k = cm(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        let bc = from_matrix_mixed(&g, &co, &k).unwrap();
        let t = TraceVector::from_derivatives(&g, &co, &cv(&[1.0, 4.0]), &cv(&[-1.0, -4.0]));
        assert!(small(&bc.flux_residual(&t)));

        let ext = MetricGraph::new(2, vec![(0, 1)], vec![0]);
        assert!(matches!(
            from_matrix_mixed(&ext, &EdgeCoefficients::uniform(&ext, 1.0), &CMat::zeros(3, 3)),
            Err(Error::ExternalEdgesPresent(1))
        ));
    }

    #[test]
    fn generalized_node_examples() {
        let g = MetricGraph::interval();
        let co = EdgeCoefficients::uniform(&g, 1.0);
        let periodic = from_generalized_node(&g, &co, &cm(2, 1, &[1.0, 1.0]), &CMat::zeros(1, 1)).unwrap();
        let looped = from_standard(&MetricGraph::loop_edge(), &co).unwrap();
        assert_eq!(linalg::rank(&hcat(&[&periodic.y0_basis, &looped.y0_basis])), 1);
        assert_eq!(linalg::rank(&hcat(&[&periodic.y1_basis, &looped.y1_basis])), 1);

        let neumann = from_generalized_node(&g, &co, &CMat::identity(2, 2), &CMat::zeros(2, 2)).unwrap();
        assert_eq!(neumann.d0(), 0);

        // Y = ℂ², λ = 4: (−4 f'(0), 4 f'(1)) + W (f(0), f(1)) = 0
        let co4 = EdgeCoefficients::uniform(&g, 4.0);
        let w = cm(2, 2, &[1.0, 2.0, -0.5, 3.0]);
        let bc = from_generalized_node(&g, &co4, &CMat::identity(2, 2), &w).unwrap();
        let (f0, f1) = (0.4, -1.1);
        let wv = [1.0 * f0 + 2.0 * f1, -0.5 * f0 + 3.0 * f1];
        let t = TraceVector::from_derivatives(&g, &co4, &cv(&[f0, f1]), &cv(&[wv[0] / 4.0, -wv[1] / 4.0]));
        assert!(small(&bc.flux_residual(&t)));

        assert!(matches!(
            from_generalized_node(&g, &co, &cm(2, 2, &[1.0, 2.0, 2.0, 4.0]), &CMat::zeros(2, 2)),
            Err(Error::RankDeficientBasis { .. })
        ));
    }

    #[test]
    fn periodic_to_matrices() {
        let g = MetricGraph::loop_edge();
        let co = EdgeCoefficients::uniform(&g, 1.0);
        let m = from_standard(&g, &co).unwrap().to_boundary_matrices(&co).unwrap();
        assert_eq!((m.k0(), m.k1()), (1, 1));
        // V0 = −V1 and W0 = W1 up to scaling
        assert!((m.v0i[(0, 0)] + m.v1i[(0, 0)]).norm() < 1e-14);
        assert!((m.w0i[(0, 0)] - m.w1i[(0, 0)]).norm() < 1e-14);
        assert!(m.v0i[(0, 0)].norm() > 0.1 && m.w0i[(0, 0)].norm() > 0.1);
    }

    #[test]
    fn to_matrices_edge_cases() {
        let g = MetricGraph::interval();
        let co = EdgeCoefficients::uniform(&g, 1.0);
        let neumann = from_standard(&g, &co).unwrap().to_boundary_matrices(&co).unwrap();
        assert_eq!((neumann.k0(), neumann.k1()), (0, 2));

        let e1 = cm(2, 1, &[1.0, 0.0]);
        let bad = BoundarySpacesBC::new(0, 1, e1.clone(), e1).unwrap();
        assert!(matches!(bad.to_boundary_matrices(&co), Err(Error::NotComplementary(_))));
    }

    #[test]
    fn matrices_residual_examples() {
        let dirichlet = BoundaryMatricesBC::compact(cm(2, 1, &[1.0, 0.0]), cm(2, 1, &[0.0, 1.0]), CMat::zeros(0, 1), CMat::zeros(0, 1)).unwrap();
        let t = TraceVector::new(CVec::from_vec(cv(&[0.0, 0.0])), CVec::from_vec(cv(&[3.14, 3.14])));
        assert!(small(&dirichlet.value_residual(&t)));
        let ones = TraceVector::new(CVec::from_vec(cv(&[1.0, 1.0])), CVec::zeros(2));
        assert_eq!(dirichlet.value_residual(&ones), CVec::from_vec(cv(&[1.0, 1.0])));

        let g = MetricGraph::interval();
        let co = EdgeCoefficients::uniform(&g, 1.0);
        let periodic = BoundaryMatricesBC::compact(cm(1, 1, &[1.0]), cm(1, 1, &[-1.0]), cm(1, 1, &[1.0]), cm(1, 1, &[1.0])).unwrap();
        assert!(small(&periodic.flux_residual(&TraceVector::zeros(2), &co)));
    }

    #[test]
    fn antisymmetric_witness_satisfies_conditions() {
        // f(s) = e^{√λ s} − e^{√λ(1−s)} against f(0)+f(1) = 0, f'(0) − f'(1) = 0
        let g = MetricGraph::interval();
        let co = EdgeCoefficients::uniform(&g, 1.0);
        let bc = BoundaryMatricesBC::compact(cm(1, 1, &[1.0]), cm(1, 1, &[1.0]), cm(1, 1, &[1.0]), cm(1, 1, &[1.0])).unwrap();
        let r = Complex64::new(2.0, 0.0).sqrt();
        let f = |s: f64| (r * s).exp() - (r * (1.0 - s)).exp();
        let df = |s: f64| r * (r * s).exp() + r * (r * (1.0 - s)).exp();
        let t = TraceVector::from_derivatives(&g, &co, &[f(0.0), f(1.0)], &[df(0.0), df(1.0)]);
        assert!(bc.value_residual(&t)[0].norm() < 1e-12);
        assert!(bc.flux_residual(&t, &co)[0].norm() < 1e-12);
    }

    #[test]
    fn kernel_quadrature() {
        let k = NonlocalKernel { edge: 0, direction: CVec::zeros(1), samples: vec![1.0, 1.0] };
        let f: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        assert!((k.integrate(&f) - 0.5).abs() < 1e-14);
    }
}
