//! Wave and diffusion equations on finite metric graphs.
//!
//! The crate covers graph bookkeeping, edge coefficients and their
//! travel-time transforms, vertex/boundary conditions in matrix and subspace
//! form, well-posedness checks for the wave problem, and explicit (wave) and
//! implicit (heat) time stepping.

pub mod bc;
pub mod coeffs;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod propagate;
pub mod wellposed;

pub use bc::{
    BoundaryConditions, BoundaryMatricesBC, BoundarySpacesBC, NonlocalIntervalBC, NonlocalKernel, TraceVector,
};
pub use coeffs::{CoefficientProfile, Domain, EdgeCoefficients};
pub use error::{Error, Result};
pub use graph::{MetricGraph, TraceSlot};
pub use linalg::{CMat, CVec};
pub use num_complex::Complex64;
pub use wellposed::{Criterion, Evidence, Verdict, VertexUpdate, WellPosednessReport};
pub use propagate::{Descriptor, Diagnostics, EdgeInitial, HeatParams, InitialData, Snapshot, WaveParams};
