//! Quasistatic rate-independent evolution of shape-memory-alloy
//! microstructure on tetrahedral meshes.
//!
//! A state is a pair `(y, z)` of a continuous piecewise-affine deformation and
//! a per-element phase label. Evolution proceeds by incremental minimization
//! of energy plus dissipation, with energy-balance bookkeeping and a
//! posteriori stability and admissibility audits.

pub mod dissipation;
pub mod energy;
pub mod mesh;
pub mod solver;
pub mod sum;
pub mod tensor3;

pub use dissipation::{DissipationMetric, Norm, PhaseHistory};
pub use energy::{Deformation, EnergyBreakdown, MaterialModel};
pub use mesh::{PhaseField, TetMesh};
pub use solver::{Problem, SolverConfig, SolverError, State};
pub use tensor3::{Mat3, Vec3};
