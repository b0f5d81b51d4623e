use graphevolve_core::bc::{self, BoundaryConditions};
use graphevolve_core::propagate::{heat_init, heat_run, wave_init, wave_run};
use graphevolve_core::wellposed::check_boundary_matrices;
use graphevolve_core::{
    CVec, CoefficientProfile, Complex64, Descriptor, EdgeCoefficients, HeatParams, InitialData, MetricGraph, TraceVector,
    WaveParams,
};
use proptest::prelude::*;

fn star_coeffs(lambdas: &[f64]) -> (MetricGraph, EdgeCoefficients) {
    let g = MetricGraph::star(lambdas.len());
    let mut co = EdgeCoefficients::uniform(&g, 1.0);
    co.internal = lambdas.iter().map(|l| CoefficientProfile::constant(*l)).collect();
    (g, co)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// A trace that is continuous at the centre with `Σ λ f' = 0` there, and
    /// zero flux at the leaves, satisfies both forms of the standard conditions.
    #[test]
    fn kirchhoff_traces_satisfy_both_forms(
        lambdas in prop::collection::vec(0.25f64..4.0, 2..6),
        centre in -3.0f64..3.0,
        leaves in prop::collection::vec(-3.0f64..3.0, 6),
        raw_flux in prop::collection::vec(-3.0f64..3.0, 6),
    ) {
        let (g, co) = star_coeffs(&lambdas);
        let m = lambdas.len();
        // trace fluxes are μ f', so the balance is Σ μ · (μ f') = 0
        let mu: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
        let shift = (0..m).map(|j| mu[j] * raw_flux[j]).sum::<f64>() / lambdas.iter().sum::<f64>();
        let value: Vec<Complex64> = (0..2 * m)
            .map(|i| Complex64::new(if i < m { centre } else { leaves[i - m] }, 0.0))
            .collect();
        let flux: Vec<Complex64> = (0..2 * m)
            .map(|i| Complex64::new(if i < m { raw_flux[i] - shift * mu[i] } else { 0.0 }, 0.0))
            .collect();
        let trace = TraceVector::new(CVec::from_vec(value), CVec::from_vec(flux));
        let spaces = bc::from_standard(&g, &co).unwrap();
        prop_assert!(spaces.value_residual(&trace).norm() < 1e-12);
        prop_assert!(spaces.flux_residual(&trace).norm() < 1e-12);
        let mats = spaces.to_boundary_matrices(&co).unwrap();
        prop_assert!(mats.value_residual(&trace).norm() < 1e-12);
        prop_assert!(mats.flux_residual(&trace, &co).norm() < 1e-12);
        prop_assert!(check_boundary_matrices(&mats, &co).unwrap().is_well_posed());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn heat_mass_is_conserved(
        lambdas in prop::collection::vec(0.25f64..4.0, 2..5),
        centers in prop::collection::vec(0.1f64..0.9, 5),
    ) {
        let (g, co) = star_coeffs(&lambdas);
        let bcs = BoundaryConditions::Spaces(bc::from_standard(&g, &co).unwrap());
        let mut init = InitialData::zero(&g);
        for (e, c) in init.internal.iter_mut().zip(&centers) {
            e.u0 = Descriptor::Gaussian { center: *c, width: 0.1, amplitude: 1.0 };
        }
        let mut st = heat_init(&g, &co, &bcs, &init, &HeatParams::new(1e-2, 0.5, 40)).unwrap();
        let out = heat_run(&mut st, 0.5, 5).unwrap();
        let mass = &out.diagnostics.mass;
        prop_assert!(mass.iter().all(|v| ((v - mass[0]) / mass[0]).abs() < 1e-10));
    }
}

#[test]
fn spaces_and_matrices_propagate_identically() {
    let (g, co) = star_coeffs(&[1.0, 1.0, 1.0]);
    let spaces = bc::from_standard(&g, &co).unwrap();
    let mats = spaces.to_boundary_matrices(&co).unwrap();
    let mut init = InitialData::zero(&g);
    init.internal[0].u0 = Descriptor::Gaussian { center: 0.5, width: 0.05, amplitude: 1.0 };
    init.internal[1].u1 = Descriptor::SineMode { k: 1.0, amplitude: 0.5 };
    let params = WaveParams::new(0.01, 2.0);
    let mut a = wave_init(&g, &co, &BoundaryConditions::Spaces(spaces), &init, &params).unwrap();
    let mut b = wave_init(&g, &co, &BoundaryConditions::Matrices(mats), &init, &params).unwrap();
    let ra = wave_run(&mut a, 2.0, 50).unwrap();
    let rb = wave_run(&mut b, 2.0, 50).unwrap();
    for (x, y) in ra.snapshots.iter().zip(&rb.snapshots) {
        for (ex, ey) in x.edges.iter().zip(&y.edges) {
            for (u, v) in ex.u.iter().zip(&ey.u) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn half_line_star_conserves_energy_until_truncation() {
    // two unit edges and a half-line long enough that nothing reaches its end
    let g = MetricGraph::new(3, vec![(0, 1), (0, 2)], vec![0]);
    let co = EdgeCoefficients::uniform(&g, 1.0);
    let bcs = BoundaryConditions::Spaces(bc::from_standard(&g, &co).unwrap());
    let mut init = InitialData::zero(&g);
    init.internal[0].u0 = Descriptor::Gaussian { center: 0.5, width: 0.05, amplitude: 1.0 };
    let params = WaveParams { external_lengths: vec![4.0], ..WaveParams::new(0.005, 2.0) };
    let mut st = wave_init(&g, &co, &bcs, &init, &params).unwrap();
    let out = wave_run(&mut st, 2.0, 40).unwrap();
    let e = &out.diagnostics.energy;
    assert!(e.iter().all(|v| ((v - e[0]) / e[0]).abs() < 1e-6));
}
