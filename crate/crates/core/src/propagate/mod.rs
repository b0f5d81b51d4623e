//! Time stepping for the wave and heat equations on a metric graph.
//!
//! Fields live on uniform per-edge grids. Edges are ordered external first,
//! then internal, matching the trace order.

mod data;
mod heat;
mod wave;

pub use data::{Descriptor, EdgeInitial, InitialData};
pub use heat::{heat_init, heat_run, heat_step, HeatParams, HeatState};
pub use wave::{wave_init, wave_run, wave_step, WaveEdge, WaveParams, WaveState, DEFAULT_SNAP_TOL};

use serde::Serialize;

use crate::bc::{BoundaryConditions, BoundaryMatricesBC};
use crate::coeffs::EdgeCoefficients;
use crate::error::{Error, Result};
use crate::graph::{MetricGraph, TraceSlot};
use crate::wellposed::{self, WellPosednessReport};

/// Imaginary parts below this are treated as zero in boundary data.
pub const REAL_DATA_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeKind {
    #[serde(rename = "e")]
    External,
    #[serde(rename = "i")]
    Internal,
}

impl EdgeKind {
    pub fn tag(self) -> &'static str {
        match self {
            Self::External => "e",
            Self::Internal => "i",
        }
    }
}

/// Uniform grid of `cells + 1` nodes over `[0, length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGrid {
    pub kind: EdgeKind,
    pub index: usize,
    pub length: f64,
    pub cells: usize,
}

impl EdgeGrid {
    pub fn h(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn nodes(&self) -> usize {
        self.cells + 1
    }

    pub fn s(&self, i: usize) -> f64 {
        if i == self.cells {
            self.length
        } else {
            i as f64 * self.h()
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.nodes()).map(|i| self.s(i)).collect()
    }

    pub fn trapezoid(&self, f: impl Fn(usize) -> f64) -> f64 {
        let n = self.cells;
        let inner: f64 = (1..n).map(&f).sum();
        self.h() * (inner + 0.5 * (f(0) + f(n)))
    }
}

/// Position of a trace slot on the edge list: `(edge, node)`.
pub(crate) fn slot_node(graph: &MetricGraph, grids: &[EdgeGrid], slot: usize) -> (usize, usize) {
    let ell = graph.ell();
    match graph.slot(slot) {
        TraceSlot::External(k) => (k, 0),
        TraceSlot::Tail(j) => (ell + j, 0),
        TraceSlot::Head(j) => (ell + j, grids[ell + j].cells),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeField {
    pub kind: EdgeKind,
    pub index: usize,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ut: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub edges: Vec<EdgeField>,
}

/// Recorded time series; all vectors have the same length.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: Vec<f64>,
    pub energy: Vec<f64>,
    pub mass: Vec<f64>,
}

impl Diagnostics {
    pub fn push(&mut self, t: f64, energy: f64, mass: f64) {
        self.t.push(t);
        self.energy.push(energy);
        self.mass.push(mass);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub diagnostics: Diagnostics,
    pub snapshots: Vec<Snapshot>,
}

/// Runs the checker matching the condition family and returns the row form.
/// Refuses anything the checker does not certify.
pub(crate) fn gated_matrices(
    graph: &MetricGraph,
    coeffs: &EdgeCoefficients,
    bc: &BoundaryConditions,
) -> Result<(BoundaryMatricesBC, WellPosednessReport)> {
    graph.validate()?;
    coeffs.validate(graph)?;
    let (mats, report) = match bc {
        BoundaryConditions::Matrices(m) => (m.clone(), wellposed::check_boundary_matrices(m, coeffs)?),
        BoundaryConditions::Spaces(s) => {
            let report = wellposed::check_boundary_spaces(s)?;
            if !report.is_well_posed() {
                return Err(Error::NotWellPosed("Y0 and Y1 are not complementary".into()));
            }
            (s.to_boundary_matrices(coeffs)?, report)
        }
        BoundaryConditions::NonlocalInterval(_) => {
            return Err(Error::InvalidArgument("integral boundary conditions have no row form".into()))
        }
    };
    if mats.ell != graph.ell() || mats.m != graph.m() {
        return Err(Error::DimensionMismatch(format!(
            "conditions are for ℓ = {}, m = {} but the graph has ℓ = {}, m = {}",
            mats.ell,
            mats.m,
            graph.ell(),
            graph.m()
        )));
    }
    if !report.is_well_posed() {
        return Err(Error::NotWellPosed(format!("{:?} criterion failed", report.criterion)));
    }
    let imag = mats.max_imag();
    if imag > REAL_DATA_TOL {
        return Err(Error::ComplexBoundaryData(imag));
    }
    Ok((mats, report))
}

pub(crate) fn check_external_lengths(graph: &MetricGraph, lengths: &[f64]) -> Result<()> {
    if lengths.len() != graph.ell() {
        return Err(Error::DimensionMismatch(format!(
            "{} truncation lengths for {} external edges",
            lengths.len(),
            graph.ell()
        )));
    }
    if let Some(l) = lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(format!("truncation length {l} must be positive")));
    }
    Ok(())
}

/// Number of steps of size `dt` covering `t_final` exactly.
pub(crate) fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(t_final >= 0.0 && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("T = {t_final}, dt = {dt}")));
    }
    let steps = (t_final / dt).round();
    if (steps * dt - t_final).abs() > 1e-9 * t_final.max(dt) {
        return Err(Error::InvalidArgument(format!("T = {t_final} is not a multiple of dt = {dt}")));
    }
    Ok(steps as usize)
}
