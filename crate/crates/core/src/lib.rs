//! Numerical Schrödinger map flow on the circle and verification of
//! div-curl type estimates for conservation laws in one space dimension.

pub mod config;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod diagnostics;
pub mod divcurl;
pub mod flow;
pub mod initial;
pub mod map;
pub mod runner;

pub use error::{Result, SmfError};
pub use geometry::{Representation, Tangent, TargetGeometry, TargetKind, TargetPoint, Vec3};
pub use grid::{DiffScheme, PeriodicGrid, ScalarField};
pub use map::{MapDerivatives, MapState, TangentField};
pub use diagnostics::{DiagnosticsSample, DiagnosticsSeries, InterpolationMonitors, Monitor};
pub use flow::{Evolution, RunStatus, Scheme, SchemeConfig, Trajectory};
pub use initial::InitialData;
pub use divcurl::{BalanceSystem, DivCurlReport, Domain};
pub use config::{RunConfig, Scenario};
pub use runner::{run, sweep, RunSummary, SweepTable};
