//! Time-incremental minimization and certificate checks.

pub mod admissibility;
pub mod descent;
pub mod evolve;
pub mod incremental;
pub mod labeling;
pub mod oracle;
pub mod stability;

use serde::{Deserialize, Serialize};

use crate::dissipation::{DissipationError, DissipationMetric};
use crate::energy::{total_energy, Deformation, EnergyError, LoadProgram, MaterialModel};
use crate::mesh::{MeshError, PhaseField, TetMesh};

pub use admissibility::{check_admissibility, AdmissibilityReport};
pub use descent::{minimize_y, DescentReport};
pub use evolve::{evolve, EvolveError, StepRecord, Trajectory};
pub use incremental::{incremental_step, StepReport};
pub use labeling::{minimize_z, LabelingReport};
pub use oracle::{exhaustive_minimum, OracleReport};
pub use stability::{check_stability, CompetitorSpec, StabilityReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("start state is not admissible: element {element} has det F = {det}")]
    Inadmissible { element: usize, det: f64 },
    #[error("line search collapsed: element {element} blocks every step (det safeguard)")]
    LineSearch { element: usize },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("too many labelings for exhaustive enumeration: {0}")]
    CapExceeded(String),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Dissipation(#[from] DissipationError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Everything that defines the incremental problems except the state.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub mesh: TetMesh,
    pub material: MaterialModel,
    pub loads: LoadProgram,
    pub metric: DissipationMetric,
}

/// A state `q = (y, z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub y: Deformation,
    pub z: PhaseField,
}

impl Problem {
    /// `E(t, q)` with exact interface norms.
    pub fn energy(&self, t: f64, q: &State) -> Result<f64, SolverError> {
        Ok(total_energy(t, &self.mesh, &q.y, &q.z, &self.material, &self.loads)?.total)
    }

    /// Incremental objective `E(t, q) + 𝒟(z, z_ref)`.
    pub fn objective(&self, t: f64, q: &State, z_ref: &PhaseField) -> Result<f64, SolverError> {
        Ok(self.energy(t, q)? + self.metric.total(&self.mesh, &q.z, z_ref)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Relative decrease of `E + 𝒟` per alternation below which the
    /// alternation stops.
    pub tol_outer: f64,
    pub max_outer: usize,
    /// y-step stops when `|∇E| ≤ tol_g (1 + |E|)`.
    pub tol_g: f64,
    pub max_iters: usize,
    /// Step shrink factor in backtracking.
    pub backtrack: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// A trial step is rejected if any `det F_e` drops below `theta_safe`
    /// times its pre-step value.
    pub theta_safe: f64,
    /// Curvature pairs kept for the quasi-Newton direction; 0 = steepest descent.
    pub memory: usize,
    pub max_sweeps: usize,
    /// Extra seeded random starts for the z-step (best-of selection).
    pub z_restarts: usize,
    /// Also start the alternation from every uniform labeling and keep the
    /// best result.
    pub uniform_starts: bool,
    pub tol_bal: f64,
    pub competitors: CompetitorSpec,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_outer: 1e-12,
            max_outer: 30,
            tol_g: 1e-7,
            max_iters: 5000,
            backtrack: 0.5,
            armijo: 1e-4,
            theta_safe: 0.5,
            memory: 8,
            max_sweeps: 200,
            z_restarts: 0,
            uniform_starts: true,
            tol_bal: 1e-3,
            competitors: CompetitorSpec::default(),
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("tol_outer", self.tol_outer),
            ("tol_g", self.tol_g),
            ("tol_bal", self.tol_bal),
            ("armijo", self.armijo),
            ("competitors.tol", self.competitors.tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SolverError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("theta_safe", self.theta_safe), ("backtrack", self.backtrack)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(SolverError::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.armijo >= 1.0 {
            return Err(SolverError::Config("armijo must be < 1".into()));
        }
        if self.max_iters == 0 || self.max_outer == 0 || self.max_sweeps == 0 {
            return Err(SolverError::Config("iteration caps must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Relative closeness used by tests and reports.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}
