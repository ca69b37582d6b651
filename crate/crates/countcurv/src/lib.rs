//! Intrinsic count-metric geometry on cell complexes.
//!
//! Length is a count: one face crossing costs one unit, distances are BFS
//! shortest crossing counts, and curvature is read off the mismatch between
//! a measured count radius and the radius reconstructed from ball/sphere
//! counts with baseline calibrations. A smooth conformal relaxation
//! `g = e^(2u) g0` provides the continuum ground truth the estimators are
//! validated against, at quantified rates.
//!
//! Module map:
//! - [`complex`]: locally finite complexes, the count metric, BFS reports.
//! - [`lattice`]: baseline l1 lattices and exact calibration constants.
//! - [`oracle`]: conformal density fields, analytic curvatures, eikonal
//!   geodesic distances, ball volumes and circle perimeters.
//! - [`sampler`]: quasi-uniform sampling, Voronoi complexes, hypothesis
//!   audits.
//! - [`estimators`]: excess radius, unified and R-normalized estimators,
//!   admissible radii, batch evaluation.
//! - [`directional`]: geodesic slices, Fermi tubes, sectional estimates,
//!   curvature-operator reconstruction, Ricci/scalar assembly.
//! - [`harness`]: reproducible experiments, rate fits, CSV/JSON reporting.

pub mod complex;
pub mod directional;
pub mod estimators;
pub mod harness;
pub mod lattice;
pub mod oracle;
pub mod sampler;

mod geom;

pub use complex::{BallReport, CellComplex, CellId, ComplexError};
pub use lattice::{Calibration, CalibrationKind, LatticeError, LatticeSpec};
