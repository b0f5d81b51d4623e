//! Well-posedness checks for the wave/heat problem under given vertex conditions.
//!
//! "Invertible" is always decided the same way: rows are scaled to unit
//! ∞-norm, then `σ_min > tol · σ_max` with `tol = (ℓ+2m) · 1e-12`. The
//! zeroth-order (`U`) terms and nonlocal kernels never change a verdict.

use nalgebra::{Dyn, LU};
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::bc::{hcat, BoundaryMatricesBC, BoundarySpacesBC};
use crate::coeffs::{interp_uniform, EdgeCoefficients};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};

/// Relative tolerance per trace slot for the invertibility test.
pub const TOL_PER_SLOT: f64 = 1e-12;

/// Smallest `t0` tried by [`check_nonlocal_interval_auto`].
pub const MIN_T0: f64 = 1.0 / 1024.0;

/// Grid used for the discretized nonlocal operator in reports.
pub const NONLOCAL_REPORT_GRID: usize = 64;

const U_NOTE: &str = "verdict is independent of the zeroth-order U terms and nonlocal kernels";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    WellPosed,
    NotWellPosed,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Criterion {
    Determinant,
    DirectSum,
    NonlocalYoung,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Evidence {
    Determinant {
        det_re: f64,
        det_im: f64,
        sigma_min: f64,
        sigma_max: f64,
        tolerance: f64,
        k0: usize,
        k1: usize,
    },
    DirectSum {
        dim_y0: usize,
        dim_y1: usize,
        trace_len: usize,
        rank_sum: usize,
        sigma_min: f64,
        sigma_max: f64,
        tolerance: f64,
    },
    NonlocalYoung {
        t0: f64,
        bound: f64,
        grid: usize,
        sigma_min: f64,
    },
}

/// Outgoing/incoming coupling of characteristic boundary values, with `M_out` factorized.
#[derive(Debug, Clone)]
pub struct VertexUpdate {
    pub m_out: CMat,
    pub m_in: CMat,
    lu: LU<Complex64, Dyn, Dyn>,
}

impl VertexUpdate {
    pub fn solve(&self, rhs: &CVec) -> CVec {
        self.lu.solve(rhs).expect("factorization of a checked matrix")
    }
}

impl PartialEq for VertexUpdate {
    fn eq(&self, other: &Self) -> bool {
        self.m_out == other.m_out && self.m_in == other.m_in
    }
}

impl Serialize for VertexUpdate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("VertexUpdate", 2)?;
        st.serialize_field("m_out", &matrix_rows(&self.m_out))?;
        st.serialize_field("m_in", &matrix_rows(&self.m_in))?;
        st.end()
    }
}

/// Rows of `[re, im]` pairs.
pub fn matrix_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellPosednessReport {
    pub verdict: Verdict,
    pub criterion: Criterion,
    pub evidence: Evidence,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex_update: Option<VertexUpdate>,
    pub notes: Vec<String>,
}

impl WellPosednessReport {
    pub fn is_well_posed(&self) -> bool {
        self.verdict == Verdict::WellPosed
    }

    /// Determinant value, if the determinant criterion was used.
    pub fn determinant(&self) -> Option<Complex64> {
        match self.evidence {
            Evidence::Determinant { det_re, det_im, .. } => Some(Complex64::new(det_re, det_im)),
            _ => None,
        }
    }

    pub fn young_bound(&self) -> Option<f64> {
        match self.evidence {
            Evidence::NonlocalYoung { bound, .. } => Some(bound),
            _ => None,
        }
    }
}

/// `(σ_min, σ_max)` after row equilibration.
fn equilibrated_extremes(m: &CMat) -> (f64, f64) {
    linalg::extreme_singular_values(&linalg::row_equilibrate(m))
}

fn invertible(smin: f64, smax: f64, tol: f64) -> bool {
    smax > 0.0 && smin > tol * smax
}

/// `[[V0e, V1i, V0i], [W̄0e, W̄1i, W̄0i]]`.
pub fn determinant_matrix(bc: &BoundaryMatricesBC, endpoint_mu: &[f64]) -> Result<CMat> {
    bc.check_dims()?;
    if endpoint_mu.len() != bc.trace_len() {
        return Err(Error::DimensionMismatch(format!(
            "{} endpoint coefficients for trace length {}",
            endpoint_mu.len(),
            bc.trace_len()
        )));
    }
    let (wb0e, wb0i, wb1i) = bc.wbar_with(endpoint_mu);
    let top = hcat(&[&bc.v0e, &bc.v1i, &bc.v0i]);
    let bottom = hcat(&[&wb0e, &wb1i, &wb0i]);
    let n = bc.trace_len();
    let mut m = CMat::zeros(n, n);
    if top.nrows() > 0 {
        m.view_mut((0, 0), top.shape()).copy_from(&top);
    }
    if bottom.nrows() > 0 {
        m.view_mut((top.nrows(), 0), bottom.shape()).copy_from(&bottom);
    }
    Ok(m)
}

pub fn check_boundary_matrices(bc: &BoundaryMatricesBC, coeffs: &EdgeCoefficients) -> Result<WellPosednessReport> {
    check_boundary_matrices_with_mu(bc, &coeffs.endpoint_mu())
}

pub fn check_boundary_matrices_with_mu(bc: &BoundaryMatricesBC, endpoint_mu: &[f64]) -> Result<WellPosednessReport> {
    let m = determinant_matrix(bc, endpoint_mu)?;
    let n = bc.trace_len();
    let det = m.clone().determinant();
    let (smin, smax) = equilibrated_extremes(&m);
    let tol = n as f64 * TOL_PER_SLOT;
    let ok = invertible(smin, smax, tol);
    let mut notes = vec![U_NOTE.to_string()];
    notes.push(format!("phase space: {} value conditions on ℓ + 2m = {n} trace slots", bc.k0()));
    let vertex_update = if ok { Some(build_update(bc, endpoint_mu)?) } else { None };
    Ok(WellPosednessReport {
        verdict: if ok { Verdict::WellPosed } else { Verdict::NotWellPosed },
        criterion: Criterion::Determinant,
        evidence: Evidence::Determinant {
            det_re: det.re,
            det_im: det.im,
            sigma_min: smin,
            sigma_max: smax,
            tolerance: tol,
            k0: bc.k0(),
            k1: bc.k1(),
        },
        vertex_update,
        notes,
    })
}

pub fn check_boundary_spaces(bc: &BoundarySpacesBC) -> Result<WellPosednessReport> {
    bc.check_bases()?;
    let n = bc.trace_len();
    let q0 = linalg::orthonormal_range(&bc.y0_basis);
    let q1 = linalg::orthonormal_range(&bc.y1_basis);
    let joint = hcat(&[&q0, &q1]);
    let joint = if joint.nrows() == n { joint } else { CMat::zeros(n, 0) };
    let rank_sum = linalg::rank(&joint);
    let (smin, smax) = linalg::extreme_singular_values(&joint);
    let tol = n as f64 * TOL_PER_SLOT;
    let ok = bc.d0() + bc.d1() == n && invertible(smin, smax, tol);
    let mut notes = vec![U_NOTE.to_string()];
    notes.push(format!("phase space: {} value conditions on ℓ + 2m = {n} trace slots", n.saturating_sub(bc.d1())));
    if bc.d0() + bc.d1() != n {
        notes.push(format!("dim Y0 + dim Y1 = {} differs from {n}", bc.d0() + bc.d1()));
    }
    Ok(WellPosednessReport {
        verdict: if ok { Verdict::WellPosed } else { Verdict::NotWellPosed },
        criterion: Criterion::DirectSum,
        evidence: Evidence::DirectSum {
            dim_y0: bc.d0(),
            dim_y1: bc.d1(),
            trace_len: n,
            rank_sum,
            sigma_min: smin,
            sigma_max: smax,
            tolerance: tol,
        },
        vertex_update: None,
        notes,
    })
}

fn build_update(bc: &BoundaryMatricesBC, endpoint_mu: &[f64]) -> Result<VertexUpdate> {
    let (wb0e, wb0i, wb1i) = bc.wbar_with(endpoint_mu);
    let half = c(0.5);
    let values = hcat(&[&bc.v0e, &bc.v1i, &bc.v0i]) * half;
    let flux_in = hcat(&[&wb0e, &wb1i, &wb0i]) * half;
    let flux_out = -&flux_in;
    let n = bc.trace_len();
    let (k0, k1) = (bc.k0(), bc.k1());
    let mut m_out = CMat::zeros(n, n);
    let mut m_in = CMat::zeros(n, n);
    if k0 > 0 {
        m_out.view_mut((0, 0), (k0, n)).copy_from(&values);
        m_in.view_mut((0, 0), (k0, n)).copy_from(&values);
    }
    if k1 > 0 {
        m_out.view_mut((k0, 0), (k1, n)).copy_from(&flux_out);
        m_in.view_mut((k0, 0), (k1, n)).copy_from(&flux_in);
    }
    let lu = m_out.clone().lu();
    Ok(VertexUpdate { m_out, m_in, lu })
}

/// Coupling of outgoing characteristic values `x = (q^e(0), p^i(1), q^i(0))`
/// to incoming ones `(p^e(0), q^i(1), p^i(0))`, with `p = u_t + μu_s` and
/// `q = u_t − μu_s`. Value rows enforce the time-differentiated value
/// conditions, flux rows the derivative conditions; `U` terms are left to the
/// caller.
pub fn vertex_update_matrix(bc: &BoundaryMatricesBC, coeffs: &EdgeCoefficients) -> Result<VertexUpdate> {
    vertex_update_matrix_with_mu(bc, &coeffs.endpoint_mu())
}

pub fn vertex_update_matrix_with_mu(bc: &BoundaryMatricesBC, endpoint_mu: &[f64]) -> Result<VertexUpdate> {
    // M_out is the determinant matrix with halved rows and negated flux rows,
    // so both share one invertibility decision.
    let m = determinant_matrix(bc, endpoint_mu)?;
    let (smin, smax) = equilibrated_extremes(&m);
    if !invertible(smin, smax, bc.trace_len() as f64 * TOL_PER_SLOT) {
        let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
        return Err(Error::SingularUpdate { ratio });
    }
    build_update(bc, endpoint_mu)
}

fn check_t0(t0: f64) -> Result<()> {
    if !(t0 > 0.0 && t0 <= 1.0) {
        return Err(Error::BadT0(t0));
    }
    Ok(())
}

/// `‖h‖_{L¹[a, b]}` for `h` sampled uniformly on `[0, 1]`, by trapezoid over
/// the sample nodes inside `[a, b]`.
pub fn l1_norm_on(samples: &[f64], a: f64, b: f64) -> f64 {
    let n = samples.len();
    if n < 2 || b <= a {
        return 0.0;
    }
    let h = 1.0 / (n - 1) as f64;
    let mut xs = vec![a];
    let first = (a / h).floor() as usize + 1;
    xs.extend((first..n).map(|i| i as f64 * h).take_while(|&x| x < b));
    xs.push(b);
    xs.windows(2)
        .map(|w| {
            let (fa, fb) = (interp_uniform(samples, 1.0, w[0]).abs(), interp_uniform(samples, 1.0, w[1]).abs());
            0.5 * (w[1] - w[0]) * (fa + fb)
        })
        .sum()
}

/// Row-sum bound `max_j (‖ψh_j‖ + ‖h_j‖)` over `[0, t0]`, with `ψh(s) = h(1 − s)`.
pub fn young_bound(h0: &[f64], h1: &[f64], t0: f64) -> f64 {
    let row = |h: &[f64]| l1_norm_on(h, 1.0 - t0, 1.0) + l1_norm_on(h, 0.0, t0);
    row(h1).max(row(h0))
}

/// Young-inequality check for `f(j) = ∫ h_j f`, `j = 0, 1`, on the unit interval.
pub fn check_nonlocal_interval(h0: &[f64], h1: &[f64], t0: f64, p: f64) -> Result<WellPosednessReport> {
    check_t0(t0)?;
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must be at least 1")));
    }
    if h0.len() < 2 || h1.len() < 2 {
        return Err(Error::InvalidArgument("kernels need at least two samples".into()));
    }
    let bound = young_bound(h0, h1, t0);
    let r = discretize_nonlocal_r(h0, h1, t0, NONLOCAL_REPORT_GRID);
    let sigma_min = linalg::singular_values(&r).last().copied().unwrap_or(0.0);
    let ok = bound < 1.0;
    let mut notes = vec![format!("the L¹ bound is valid for every p ≥ 1 (p = {p})")];
    if !ok {
        notes.push("bound ≥ 1 does not disprove well-posedness; retry with a smaller t0".into());
    }
    Ok(WellPosednessReport {
        verdict: if ok { Verdict::WellPosed } else { Verdict::Inconclusive },
        criterion: Criterion::NonlocalYoung,
        evidence: Evidence::NonlocalYoung { t0, bound, grid: NONLOCAL_REPORT_GRID, sigma_min },
        vertex_update: None,
        notes,
    })
}

/// Halves `t0` until the bound certifies or `t0` drops below [`MIN_T0`].
pub fn check_nonlocal_interval_auto(h0: &[f64], h1: &[f64], t0: f64, p: f64) -> Result<WellPosednessReport> {
    let mut t = t0;
    loop {
        let mut report = check_nonlocal_interval(h0, h1, t, p)?;
        if report.is_well_posed() || t / 2.0 < MIN_T0 {
            if t != t0 {
                report.notes.push(format!("t0 shrunk from {t0} to {t}"));
            }
            return Ok(report);
        }
        t /= 2.0;
    }
}

/// Trapezoid discretization of `(K u)(t_k) = ∫₀^{t_k} h(s) u(t_k − s) ds` on
/// `n` nodes over `[0, t0]`.
fn convolution_block(h: impl Fn(f64) -> f64, t0: f64, n: usize) -> CMat {
    let tau = t0 / (n - 1) as f64;
    let mut k = CMat::zeros(n, n);
    for row in 1..n {
        for j in 0..=row {
            let w = if j == 0 || j == row { 0.5 * tau } else { tau };
            k[(row, row - j)] = c(w * h(j as f64 * tau));
        }
    }
    k
}

/// `Id − [[K̃1, −K1], [K̃0, K0]]` on an `n`-node grid over `[0, t0]`.
pub fn discretize_nonlocal_r(h0: &[f64], h1: &[f64], t0: f64, n: usize) -> CMat {
    let n = n.max(2);
    let direct = |h: &[f64]| convolution_block(|s| interp_uniform(h, 1.0, s), t0, n);
    let reflected = |h: &[f64]| convolution_block(|s| interp_uniform(h, 1.0, 1.0 - s), t0, n);
    let mut r = CMat::identity(2 * n, 2 * n);
    let blocks = [(0, 0, reflected(h1), -1.0), (0, n, direct(h1), 1.0), (n, 0, reflected(h0), -1.0), (n, n, direct(h0), -1.0)];
    for (i, j, b, sign) in blocks {
        let mut view = r.view_mut((i, j), (n, n));
        view += b * c(sign);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bc;
    use crate::coeffs::CoefficientProfile;
    use crate::graph::MetricGraph;
    use proptest::prelude::*;

    fn cm(rows: usize, cols: usize, v: &[f64]) -> CMat {
        CMat::from_row_slice(rows, cols, &v.iter().map(|x| c(*x)).collect::<Vec<_>>())
    }

    pub(crate) fn star3(alpha: f64, beta: f64, gamma: f64, eps: f64, delta: f64) -> BoundaryMatricesBC {
        BoundaryMatricesBC::new(
            cm(2, 1, &[0.0, 1.0]),
            cm(2, 2, &[1.0, -1.0, 0.0, -1.0]),
            CMat::zeros(2, 2),
            cm(3, 1, &[0.0, alpha, 0.0]),
            cm(3, 2, &[0.0, 0.0, beta, gamma, 0.0, 0.0]),
            cm(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, eps]),
        )
        .unwrap()
        .with_u(CMat::zeros(3, 1), CMat::zeros(3, 2), cm(3, 2, &[0.0, 0.0, 0.0, 0.0, 0.0, -delta]))
        .unwrap()
    }

    fn fig1() -> MetricGraph {
        MetricGraph::new(3, vec![(0, 1), (0, 2)], vec![0])
    }

    fn antiperiodic_mixed() -> BoundaryMatricesBC {
        BoundaryMatricesBC::compact(cm(1, 1, &[1.0]), cm(1, 1, &[1.0]), cm(1, 1, &[1.0]), cm(1, 1, &[1.0])).unwrap()
    }

    #[test]
    fn star_determinant() {
        let g = fig1();
        let co = EdgeCoefficients::uniform(&g, 1.0);
        let r = check_boundary_matrices(&star3(1.0, 2.0, 3.0, 4.0, 0.0), &co).unwrap();
        assert_eq!(r.verdict, Verdict::WellPosed);
        assert!((r.determinant().unwrap() - c(24.0)).norm() < 1e-9);
        assert!(r.vertex_update.is_some());
        for (a, b, g_, e) in [(2.0, -1.0, 0.5, 3.0), (0.3, 0.3, 0.3, -2.0)] {
            let r = check_boundary_matrices(&star3(a, b, g_, e, 0.0), &co).unwrap();
            assert!((r.determinant().unwrap() - c(e * (a + b + g_))).norm() < 1e-9);
        }
        let r = check_boundary_matrices(&star3(1.0, 2.0, 3.0, 0.0, 0.0), &co).unwrap();
        assert_eq!(r.verdict, Verdict::NotWellPosed);
        assert!(r.vertex_update.is_none());
        // α + β + γ = 0 also fails
        let r = check_boundary_matrices(&star3(1.0, 2.0, -3.0, 4.0, 0.0), &co).unwrap();
        assert_eq!(r.verdict, Verdict::NotWellPosed);
    }

    #[test]
    fn delta_does_not_change_verdict() {
        let co = EdgeCoefficients::uniform(&fig1(), 1.0);
        let a = check_boundary_matrices(&star3(1.0, 2.0, 3.0, 4.0, 0.0), &co).unwrap();
        let b = check_boundary_matrices(&star3(1.0, 2.0, 3.0, 4.0, 7.0), &co).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(a.determinant(), b.determinant());
    }

    #[test]
    fn interval_classics() {
        let g = MetricGraph::interval();
        let co = EdgeCoefficients::uniform(&g, 1.0);
        let periodic = BoundaryMatricesBC::compact(cm(1, 1, &[1.0]), cm(1, 1, &[-1.0]), cm(1, 1, &[1.0]), cm(1, 1, &[1.0])).unwrap();
        assert!(check_boundary_matrices(&periodic, &co).unwrap().is_well_posed());

        let bad_dirichlet = BoundaryMatricesBC::compact(cm(1, 1, &[1.0]), cm(1, 1, &[0.0]), cm(1, 1, &[0.0]), cm(1, 1, &[0.0]))
            .unwrap()
            .with_u(CMat::zeros(1, 0), cm(1, 1, &[0.0]), cm(1, 1, &[1.0]))
            .unwrap();
        let r = check_boundary_matrices(&bad_dirichlet, &co).unwrap();
        assert_eq!(r.verdict, Verdict::NotWellPosed);
        assert_eq!(r.determinant().unwrap(), c(0.0));

        let dirichlet = BoundaryMatricesBC::compact(cm(2, 1, &[1.0, 0.0]), cm(2, 1, &[0.0, 1.0]), CMat::zeros(0, 1), CMat::zeros(0, 1)).unwrap();
        let r = check_boundary_matrices(&dirichlet, &co).unwrap();
        assert!(r.is_well_posed());
        assert!((r.determinant().unwrap().norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unequal_endpoint_speeds() {
        let g = MetricGraph::interval();
        let mut co = EdgeCoefficients::uniform(&g, 1.0);
        co.internal = vec![CoefficientProfile::QuadraticSquare { alpha: 1.0, beta: 1.0 }];
        let r = check_boundary_matrices(&antiperiodic_mixed(), &co).unwrap();
        assert!(r.is_well_posed());
        assert!((r.determinant().unwrap().norm() - 0.5).abs() < 1e-9);
        let r = check_boundary_matrices(&antiperiodic_mixed(), &EdgeCoefficients::uniform(&g, 1.0)).unwrap();
        assert_eq!(r.verdict, Verdict::NotWellPosed);
        assert!(r.determinant().unwrap().norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let bc = antiperiodic_mixed();
        assert!(matches!(check_boundary_matrices_with_mu(&bc, &[1.0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn spaces_checks() {
        let g = fig1();
        let co = EdgeCoefficients::uniform(&g, 1.0);
        assert!(check_boundary_spaces(&bc::from_standard(&g, &co).unwrap()).unwrap().is_well_posed());

        let e1 = cm(2, 1, &[1.0, 0.0]);
        let same = BoundarySpacesBC::new(0, 1, e1.clone(), e1).unwrap();
        assert_eq!(check_boundary_spaces(&same).unwrap().verdict, Verdict::NotWellPosed);

        let gi = MetricGraph::star(2);
        let coi = EdgeCoefficients::uniform(&gi, 1.0);
        let k = CMat::from_fn(4, 4, |i, j| c((i * 4 + j) as f64 - 7.0));
        let mixed = bc::from_matrix_mixed(&gi, &coi, &k).unwrap();
        assert!(check_boundary_spaces(&mixed).unwrap().is_well_posed());

        let rankdef = BoundarySpacesBC::new(0, 1, cm(2, 2, &[1.0, 2.0, 1.0, 2.0]), CMat::zeros(2, 0)).unwrap();
        assert!(matches!(check_boundary_spaces(&rankdef), Err(Error::RankDeficientBasis { .. })));
    }

    #[test]
    fn update_matrix_examples() {
        let g = MetricGraph::loop_edge();
        let co = EdgeCoefficients::uniform(&g, 1.0);
        let periodic = BoundaryMatricesBC::compact(cm(1, 1, &[1.0]), cm(1, 1, &[-1.0]), cm(1, 1, &[1.0]), cm(1, 1, &[1.0])).unwrap();
        let up = vertex_update_matrix(&periodic, &co).unwrap();
        assert_eq!(up.m_out, cm(2, 2, &[-0.5, 0.5, -0.5, -0.5]));
        assert!((up.m_out.clone().determinant() - c(0.5)).norm() < 1e-15);

        let dirichlet = BoundaryMatricesBC::compact(cm(2, 1, &[1.0, 0.0]), cm(2, 1, &[0.0, 1.0]), CMat::zeros(0, 1), CMat::zeros(0, 1)).unwrap();
        let up = vertex_update_matrix(&dirichlet, &co).unwrap();
        assert_eq!(up.m_out, cm(2, 2, &[0.0, 0.5, 0.5, 0.0]));
        // Dirichlet reflects: outgoing = −incoming
        let x = up.solve(&(-&up.m_in * CVec::from_vec(vec![c(1.0), c(2.0)])));
        assert!((x - CVec::from_vec(vec![c(-1.0), c(-2.0)])).norm() < 1e-15);

        assert!(matches!(
            vertex_update_matrix(&antiperiodic_mixed(), &co),
            Err(Error::SingularUpdate { .. })
        ));
    }

    #[test]
    fn standard_star_scattering_matrix() {
        let g = MetricGraph::star(3);
        let co = EdgeCoefficients::uniform(&g, 1.0);
        let bc = bc::from_standard(&g, &co).unwrap().to_boundary_matrices(&co).unwrap();
        let up = vertex_update_matrix(&bc, &co).unwrap();
        // incoming p on edge 0 tail only; outgoing q at the tails
        let mut inc = CVec::zeros(6);
        inc[3] = c(1.0);
        let x = up.solve(&(-&up.m_in * inc));
        let q_out: Vec<f64> = (3..6).map(|i| x[i].re).collect();
        assert!((q_out[0] + 1.0 / 3.0).abs() < 1e-13);
        assert!((q_out[1] - 2.0 / 3.0).abs() < 1e-13 && (q_out[2] - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn nonlocal_examples() {
        let zero = vec![0.0; 11];
        let one = vec![1.0; 11];
        let r = check_nonlocal_interval(&zero, &zero, 0.5, 2.0).unwrap();
        assert!(r.is_well_posed() && r.young_bound() == Some(0.0));
        assert_eq!(discretize_nonlocal_r(&zero, &zero, 0.5, 8), CMat::identity(16, 16));

        let r = check_nonlocal_interval(&one, &one, 0.25, 2.0).unwrap();
        assert!((r.young_bound().unwrap() - 0.5).abs() < 1e-14);
        assert!(r.is_well_posed());
        let r = check_nonlocal_interval(&one, &one, 0.9, 2.0).unwrap();
        assert!((r.young_bound().unwrap() - 1.8).abs() < 1e-14);
        assert_eq!(r.verdict, Verdict::Inconclusive);

        let auto = check_nonlocal_interval_auto(&one, &one, 0.9, 2.0).unwrap();
        assert!(auto.is_well_posed());
        match auto.evidence {
            Evidence::NonlocalYoung { t0, .. } => assert!(t0 <= 0.5),
            _ => unreachable!(),
        }

        assert!(matches!(check_nonlocal_interval(&one, &one, 0.0, 2.0), Err(Error::BadT0(_))));
        assert!(matches!(check_nonlocal_interval(&one, &one, 1.5, 2.0), Err(Error::BadT0(_))));
    }

    #[test]
    fn nonlocal_sigma_min() {
        let one = vec![1.0; 11];
        let r = discretize_nonlocal_r(&one, &one, 0.25, 64);
        let smin = *linalg::singular_values(&r).last().unwrap();
        assert!(smin >= 1.0 - 0.5 - 10.0 / 64.0, "σ_min = {smin}");
    }

    #[test]
    fn narrow_kernel_concentrates_near_diagonal() {
        // h0 supported on [0, 0.02]; with t0 = 1 and n = 101 the spacing is 0.01
        let mut h0 = vec![0.0; 101];
        h0[0] = 1.0;
        h0[1] = 1.0;
        let r = discretize_nonlocal_r(&h0, &vec![0.0; 101], 1.0, 101);
        let n = 101;
        for i in 0..n {
            for j in 0..n {
                let entry = r[(n + i, n + j)] - if i == j { c(1.0) } else { c(0.0) };
                if i < j || i - j > 1 {
                    assert_eq!(entry, c(0.0), "({i}, {j})");
                }
            }
        }
        assert!(r[(n + 5, n + 4)].norm() > 0.0);
    }

    fn random_bc(rng_vals: &[f64], k0: usize, ell: usize, m: usize, degenerate: u8) -> BoundaryMatricesBC {
        let n = ell + 2 * m;
        let k1 = n - k0;
        let mut it = rng_vals.iter().cycle();
        let mut next = |r: usize, cc: usize| CMat::from_fn(r, cc, |_, _| Complex64::new(*it.next().unwrap(), *it.next().unwrap()));
        let mut bc = BoundaryMatricesBC::new(next(k0, ell), next(k0, m), next(k0, m), next(k1, ell), next(k1, m), next(k1, m)).unwrap();
        match degenerate {
            1 if k1 > 0 => bc.scale_row(k0, c(0.0)),
            2 if k0 > 1 => {
                let (r0v, r0i, r1i) = (bc.v0e.row(0).into_owned(), bc.v0i.row(0).into_owned(), bc.v1i.row(0).into_owned());
                bc.v0e.set_row(1, &(r0v * c(3.0)));
                bc.v0i.set_row(1, &(r0i * c(3.0)));
                bc.v1i.set_row(1, &(r1i * c(3.0)));
            }
            _ => {}
        }
        bc
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn verdict_matches_update_solvability(
            vals in prop::collection::vec(-2.0f64..2.0, 64),
            ell in 0usize..3,
            m in 1usize..4,
            k0_frac in 0.0f64..1.0,
            degenerate in 0u8..3,
            mus in prop::collection::vec(0.5f64..2.0, 8),
        ) {
            let n = ell + 2 * m;
            let k0 = ((n as f64 + 1.0) * k0_frac).floor().min(n as f64) as usize;
            let bc = random_bc(&vals, k0, ell, m, degenerate);
            let mu: Vec<f64> = mus.iter().cycle().take(n).copied().collect();
            let report = check_boundary_matrices_with_mu(&bc, &mu).unwrap();
            let update = vertex_update_matrix_with_mu(&bc, &mu);
            prop_assert_eq!(report.is_well_posed(), update.is_ok());
            prop_assert_eq!(report.vertex_update.is_some(), report.is_well_posed());
        }

        #[test]
        fn row_scaling_keeps_verdict(
            vals in prop::collection::vec(-2.0f64..2.0, 64),
            m in 1usize..3,
            row in 0usize..6,
            up in any::<bool>(),
            degenerate in 0u8..3,
        ) {
            let n = 2 * m;
            let bc = random_bc(&vals, m, 0, m, degenerate);
            let mu = vec![1.0; n];
            let before = check_boundary_matrices_with_mu(&bc, &mu).unwrap().verdict;
            let mut scaled = bc.clone();
            scaled.scale_row(row % n, c(if up { 1e6 } else { 1e-6 }));
            prop_assert_eq!(check_boundary_matrices_with_mu(&scaled, &mu).unwrap().verdict, before);
        }

        #[test]
        fn spaces_and_matrices_agree(
            vals in prop::collection::vec(-1.0f64..1.0, 128),
            m in 1usize..4,
            d0_frac in 0.0f64..1.0,
            overlap in any::<bool>(),
        ) {
            let n = 2 * m;
            let d0 = ((n as f64 + 1.0) * d0_frac).floor().min(n as f64) as usize;
            let mut it = vals.iter().cycle();
            let full = CMat::from_fn(n, n, |_, _| Complex64::new(*it.next().unwrap(), *it.next().unwrap()));
            let y0 = full.columns(0, d0).into_owned();
            let mut y1 = full.columns(d0, n - d0).into_owned();
            if overlap && d0 > 0 && n - d0 > 0 {
                y1.set_column(0, &(full.column(0) * c(2.0)));
            }
            let bc = BoundarySpacesBC::new(0, m, y1, y0).unwrap();
            prop_assume!(bc.check_bases().is_ok());
            let co = EdgeCoefficients::uniform(&MetricGraph::new(1, vec![(0, 0); m], vec![]), 1.0);
            let spaces = check_boundary_spaces(&bc).unwrap();
            match bc.to_boundary_matrices(&co) {
                Ok(mats) => prop_assert_eq!(check_boundary_matrices(&mats, &co).unwrap().verdict, spaces.verdict),
                Err(_) => prop_assert_eq!(spaces.verdict, Verdict::NotWellPosed),
            }
        }

    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn nonlocal_certificate_is_sound(
            a0 in 0.0f64..3.0, a1 in 0.0f64..3.0, b in -2.0f64..2.0, t0 in 0.05f64..1.0,
        ) {
            let h0: Vec<f64> = (0..21).map(|i| a0 * (1.0 + b * i as f64 / 20.0)).collect();
            let h1: Vec<f64> = (0..21).map(|i| a1 * (i as f64 / 20.0)).collect();
            let report = check_nonlocal_interval(&h0, &h1, t0, 1.0).unwrap();
            if report.is_well_posed() {
                let beta = report.young_bound().unwrap();
                for n in [32, 64, 128] {
                    let smin = *linalg::singular_values(&discretize_nonlocal_r(&h0, &h1, t0, n)).last().unwrap();
                    prop_assert!(smin >= 1.0 - beta - 10.0 / n as f64, "n = {}, σ = {}, β = {}", n, smin, beta);
                }
            }
        }
    }
}
