//! Rate-independent dissipation between phase fields.

use serde::{Deserialize, Serialize};

use crate::mesh::{PhaseField, TetMesh};
use crate::sum::pairwise_sum;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DissipationError {
    #[error("label {label} out of range for {n_phases} phases")]
    LabelOutOfRange { label: usize, n_phases: usize },
    #[error("phase fields do not match the mesh ({0})")]
    MeshMismatch(String),
    #[error("invalid weight table: {0}")]
    BadWeights(String),
    #[error("empty interval [{s}, {t}]")]
    EmptyInterval { s: f64, t: f64 },
    #[error("invalid phase history: {0}")]
    BadHistory(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    L1,
    L2,
    Linf,
}

/// Pointwise dissipation `D(z1, z2) = |e_{z1} − e_{z2}|`, optionally replaced
/// by a symmetric transformation-cost table `w_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationMetric {
    n_phases: usize,
    norm: Norm,
    weights: Option<Vec<Vec<f64>>>,
}

impl DissipationMetric {
    pub fn new(n_phases: usize, norm: Norm) -> Self {
        DissipationMetric { n_phases, norm, weights: None }
    }

    /// Weight table; validated to define a metric on labels.
    pub fn with_weights(n_phases: usize, weights: Vec<Vec<f64>>) -> Result<Self, DissipationError> {
        let bad = |m: String| Err(DissipationError::BadWeights(m));
        if weights.len() != n_phases || weights.iter().any(|r| r.len() != n_phases) {
            return bad(format!("table must be {n_phases}×{n_phases}"));
        }
        for i in 0..n_phases {
            if weights[i][i] != 0.0 {
                return bad(format!("diagonal entry ({i},{i}) must be 0"));
            }
            for j in 0..n_phases {
                let w = weights[i][j];
                if !w.is_finite() || (i != j && !(w > 0.0)) {
                    return bad(format!("entry ({i},{j}) = {w} must be finite and > 0"));
                }
                if w != weights[j][i] {
                    return bad(format!("table is not symmetric at ({i},{j})"));
                }
                for k in 0..n_phases {
                    if weights[i][k] > w + weights[j][k] {
                        return bad(format!("triangle inequality fails for ({i},{k}) via {j}"));
                    }
                }
            }
        }
        Ok(DissipationMetric { n_phases, norm: Norm::L1, weights: Some(weights) })
    }

    pub fn n_phases(&self) -> usize {
        self.n_phases
    }

    pub fn pointwise(&self, z1: usize, z2: usize) -> Result<f64, DissipationError> {
        for label in [z1, z2] {
            if label >= self.n_phases {
                return Err(DissipationError::LabelOutOfRange { label, n_phases: self.n_phases });
            }
        }
        Ok(self.cost(z1, z2))
    }

    /// Unchecked pointwise cost for labels already validated.
    pub(crate) fn cost(&self, z1: usize, z2: usize) -> f64 {
        if z1 == z2 {
            return 0.0;
        }
        if let Some(w) = &self.weights {
            return w[z1][z2];
        }
        match self.norm {
            Norm::L1 => 2.0,
            Norm::L2 => std::f64::consts::SQRT_2,
            Norm::Linf => 1.0,
        }
    }

    /// Largest pointwise cost between distinct labels.
    pub fn max_cost(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.n_phases {
            for j in 0..self.n_phases {
                m = m.max(self.cost(i, j));
            }
        }
        m
    }

    /// `𝒟(z1, z2) = Σ_e vol_e D(z1(e), z2(e))`.
    pub fn total(&self, mesh: &TetMesh, z1: &PhaseField, z2: &PhaseField) -> Result<f64, DissipationError> {
        for z in [z1, z2] {
            if z.len() != mesh.n_tets() {
                return Err(DissipationError::MeshMismatch(format!(
                    "{} labels for {} tetrahedra",
                    z.len(),
                    mesh.n_tets()
                )));
            }
            if z.n_phases() != self.n_phases {
                return Err(DissipationError::MeshMismatch(format!(
                    "field has {} phases, metric {}",
                    z.n_phases(),
                    self.n_phases
                )));
            }
        }
        let mut terms = Vec::with_capacity(mesh.n_tets());
        for e in 0..mesh.n_tets() {
            terms.push(mesh.volumes[e] * self.pointwise(z1.labels[e], z2.labels[e])?);
        }
        Ok(pairwise_sum(&terms))
    }
}

/// Right-continuous, piecewise-constant phase history: `z(t) = fields[k]` for
/// `t ∈ [times[k], times[k+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseHistory<'a> {
    pub times: &'a [f64],
    pub fields: &'a [PhaseField],
}

impl<'a> PhaseHistory<'a> {
    pub fn new(times: &'a [f64], fields: &'a [PhaseField]) -> Result<Self, DissipationError> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(DissipationError::BadHistory(format!(
                "{} times for {} fields",
                times.len(),
                fields.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DissipationError::BadHistory("times must be strictly increasing".into()));
        }
        Ok(PhaseHistory { times, fields })
    }

    /// Field at time `t` (clamped to the first record before `times[0]`).
    pub fn at(&self, t: f64) -> &PhaseField {
        let k = self.times.partition_point(|&s| s <= t);
        &self.fields[k.saturating_sub(1)]
    }

    /// `Diss_𝒟(z, [s, t])`: for a piecewise-constant history the supremum over
    /// partitions is the sum of `𝒟` over the jumps at recorded times in `(s, t]`.
    pub fn dissipation(
        &self,
        mesh: &TetMesh,
        metric: &DissipationMetric,
        s: f64,
        t: f64,
    ) -> Result<f64, DissipationError> {
        if !(s <= t) {
            return Err(DissipationError::EmptyInterval { s, t });
        }
        let mut jumps = Vec::new();
        for k in 1..self.times.len() {
            if self.times[k] > s && self.times[k] <= t {
                jumps.push(metric.total(mesh, &self.fields[k - 1], &self.fields[k])?);
            }
        }
        Ok(pairwise_sum(&jumps))
    }

    /// `Σ_j 𝒟(z(τ_{j−1}), z(τ_j))` for an explicit partition `τ`.
    pub fn partition_sum(
        &self,
        mesh: &TetMesh,
        metric: &DissipationMetric,
        partition: &[f64],
    ) -> Result<f64, DissipationError> {
        let mut terms = Vec::new();
        for w in partition.windows(2) {
            terms.push(metric.total(mesh, self.at(w[0]), self.at(w[1]))?);
        }
        Ok(pairwise_sum(&terms))
    }
}
