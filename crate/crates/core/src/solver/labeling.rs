//! The z-step: minimize `E(t, y, ·) + 𝒟(·, z_ref)` over labelings with `y`
//! frozen, by iterated conditional modes.
//!
//! With `y` fixed, the bulk term is a sum of per-element unaries, the
//! interfacial term a sum of per-face pairwise costs, and the loads do not
//! depend on `z`, so each single-element relabel has a local cost.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Problem, SolverConfig, SolverError};
use crate::energy::interface::face_interface_vector;
use crate::energy::{deformation_gradient, Deformation};
use crate::mesh::{FaceRef, PhaseField};
use crate::sum::pairwise_sum;

#[derive(Debug, Clone, PartialEq)]
pub struct LabelingReport {
    /// Sweeps of the start that was finally selected.
    pub sweeps: usize,
    /// Elements whose label differs from the start labeling.
    pub changed: usize,
    /// z-dependent part of the objective, `E_b + E_int + 𝒟`.
    pub objective: f64,
    /// 0 for the given start, `k` for the `k`-th random restart.
    pub selected_start: usize,
    pub hit_sweep_cap: bool,
}

/// Unary and pairwise costs of all labels at frozen `y`.
pub(crate) struct LabelTables<'a> {
    problem: &'a Problem,
    /// `vol_e Ŵ_i(F_e)`, row-major `[e][i]`.
    bulk: Vec<f64>,
    /// `area_f Ψ_i(ξ_f)`, row-major `[f][i]`.
    face: Vec<f64>,
    m: usize,
}

impl<'a> LabelTables<'a> {
    pub(crate) fn new(problem: &'a Problem, y: &Deformation) -> Self {
        let mesh = &problem.mesh;
        let m = problem.material.n_phases();
        let bulk: Vec<Vec<f64>> = (0..mesh.n_tets())
            .into_par_iter()
            .map(|e| {
                let f = deformation_gradient(mesh, y, e);
                (0..m).map(|i| mesh.volumes[e] * problem.material.bulk.density(i, &f)).collect()
            })
            .collect();
        let face: Vec<Vec<f64>> = (0..mesh.interior_faces.len())
            .into_par_iter()
            .map(|f| {
                let xi = face_interface_vector(mesh, y, f);
                let area = mesh.interior_faces[f].area;
                (0..m).map(|i| area * problem.material.interface.psi(i, &xi)).collect()
            })
            .collect();
        LabelTables { problem, bulk: bulk.concat(), face: face.concat(), m }
    }

    fn pair(&self, f: usize, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.face[f * self.m + i] + self.face[f * self.m + j]
        }
    }

    /// Contribution of element `e` carrying label `i` to the objective, given
    /// its neighbours' labels.
    pub(crate) fn local(&self, e: usize, i: usize, labels: &[usize], z_ref: &[usize]) -> f64 {
        let mesh = &self.problem.mesh;
        let mut c = self.bulk[e * self.m + i] + mesh.volumes[e] * self.problem.metric.cost(i, z_ref[e]);
        for fr in mesh.tet_faces[e] {
            if let FaceRef::Interior(f) = fr {
                c += self.pair(f, i, labels[mesh.across(f, e)]);
            }
        }
        c
    }

    /// `E_b + E_int + 𝒟(z, z_ref)` from the tables.
    pub(crate) fn objective(&self, labels: &[usize], z_ref: &[usize]) -> f64 {
        let mesh = &self.problem.mesh;
        let mut terms: Vec<f64> = (0..mesh.n_tets())
            .map(|e| {
                self.bulk[e * self.m + labels[e]]
                    + mesh.volumes[e] * self.problem.metric.cost(labels[e], z_ref[e])
            })
            .collect();
        for (f, face) in mesh.interior_faces.iter().enumerate() {
            terms.push(self.pair(f, labels[face.minus], labels[face.plus]));
        }
        pairwise_sum(&terms)
    }

    /// Ascending-order ICM sweeps until no label changes. A label is replaced
    /// only by one with strictly lower local cost; ties keep the current label.
    fn icm(&self, labels: &mut [usize], z_ref: &[usize], max_sweeps: usize) -> (usize, bool) {
        let n = labels.len();
        for sweep in 1..=max_sweeps {
            let mut changed = false;
            for e in 0..n {
                let current = labels[e];
                let c0 = self.local(e, current, labels, z_ref);
                let mut best = (current, c0);
                for i in (0..self.m).filter(|&i| i != current) {
                    let c = self.local(e, i, labels, z_ref);
                    if c < best.1 {
                        best = (i, c);
                    }
                }
                // a margin at roundoff level keeps ICM from cycling on ties
                if best.0 != current && best.1 < c0 - 1e-14 * (1.0 + c0.abs()) {
                    labels[e] = best.0;
                    changed = true;
                }
            }
            if !changed {
                return (sweep, false);
            }
        }
        (max_sweeps, true)
    }
}

/// Minimize `z ↦ E(t, y, z) + 𝒟(z, z_ref)` starting from `z_start`.
///
/// With `z_restarts > 0`, additional seeded random starts are run and the
/// best result kept; the given start always takes part, so the result is never
/// worse than ICM from `z_start` alone.
pub fn minimize_z(
    problem: &Problem,
    t: f64,
    y: &Deformation,
    z_start: &PhaseField,
    z_ref: &PhaseField,
    config: &SolverConfig,
) -> Result<(PhaseField, LabelingReport), SolverError> {
    let mesh = &problem.mesh;
    y.check_against(mesh)?;
    z_start.check_against(mesh)?;
    z_ref.check_against(mesh)?;
    let tables = LabelTables::new(problem, y);
    let m = problem.material.n_phases();

    let mut starts = vec![z_start.labels.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ t.to_bits().rotate_left(17));
    for _ in 0..config.z_restarts {
        starts.push((0..mesh.n_tets()).map(|_| rng.gen_range(0..m)).collect());
    }

    let mut best: Option<(Vec<usize>, LabelingReport)> = None;
    for (k, mut labels) in starts.into_iter().enumerate() {
        let (sweeps, capped) = tables.icm(&mut labels, &z_ref.labels, config.max_sweeps);
        let objective = tables.objective(&labels, &z_ref.labels);
        if best.as_ref().is_none_or(|(_, r)| objective < r.objective) {
            let changed = labels.iter().zip(&z_start.labels).filter(|(a, b)| a != b).count();
            let report = LabelingReport { sweeps, changed, objective, selected_start: k, hit_sweep_cap: capped };
            best = Some((labels, report));
        }
    }
    let (labels, report) = best.expect("at least one start");
    Ok((PhaseField::new(labels, z_start.n_phases() - 1)?, report))
}
