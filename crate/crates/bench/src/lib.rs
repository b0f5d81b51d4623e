//! Benchmark fixtures.

use graphevolve_core::bc::{self, BoundaryConditions};
use graphevolve_core::propagate::{heat_init, wave_init, HeatState, WaveState};
use graphevolve_core::{Descriptor, EdgeCoefficients, HeatParams, InitialData, MetricGraph, WaveParams};

/// Kirchhoff star with `arms` unit edges and a pulse on the first arm.
fn star(arms: usize) -> (MetricGraph, EdgeCoefficients, BoundaryConditions, InitialData) {
    let g = MetricGraph::star(arms);
    let co = EdgeCoefficients::uniform(&g, 1.0);
    let bc = BoundaryConditions::Spaces(bc::from_standard(&g, &co).expect("standard conditions"));
    let mut init = InitialData::zero(&g);
    init.internal[0].u0 = Descriptor::Gaussian { center: 0.5, width: 0.05, amplitude: 1.0 };
    (g, co, bc, init)
}

pub fn wave_star(arms: usize, cells: usize) -> WaveState {
    let (g, co, bc, init) = star(arms);
    wave_init(&g, &co, &bc, &init, &WaveParams::new(1.0 / cells as f64, 1.0)).expect("wave fixture")
}

pub fn heat_star(arms: usize, cells: usize) -> HeatState {
    let (g, co, bc, init) = star(arms);
    heat_init(&g, &co, &bc, &init, &HeatParams::new(1e-3, 0.5, cells)).expect("heat fixture")
}
