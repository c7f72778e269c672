//! A posteriori global-stability audit against finite competitor families.
//!
//! A state `q` is stable at `t` if no competitor `q̃` satisfies
//! `E(t, q̃) + 𝒟(z, z̃) < E(t, q)`. Only finitely many competitors are tested,
//! so a pass certifies stability with respect to those families only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::labeling::LabelTables;
use super::oracle::all_labelings;
use super::{minimize_y, Problem, SolverConfig, SolverError, State};
use crate::mesh::PhaseField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompetitorSpec {
    /// Every single-element relabel with `y` kept fixed.
    pub single_flips: bool,
    /// Every uniform labeling, with `y` re-optimized.
    pub uniform: bool,
    /// Seeded random labelings, with `y` re-optimized.
    pub n_random: usize,
    /// Enumerate all labelings, with `y` re-optimized, when the mesh has at
    /// most this many elements.
    pub exhaustive_cap: usize,
    /// A competitor violates stability when its margin is below
    /// `−tol (1 + |E(t, q)|)`.
    pub tol: f64,
}

impl Default for CompetitorSpec {
    fn default() -> Self {
        CompetitorSpec { single_flips: true, uniform: true, n_random: 8, exhaustive_cap: 8, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    SingleFlip,
    Uniform,
    Random,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub labels: Vec<usize>,
    /// `E(t, q̃) + 𝒟(z, z̃) − E(t, q)`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: Family,
    pub tested: usize,
    /// Competitors whose y re-optimization failed (counted, not judged).
    pub skipped: usize,
    pub worst_margin: f64,
    /// At most [`MAX_LISTED`] violators, worst first.
    pub violations: Vec<Violation>,
    pub n_violations: usize,
}

pub const MAX_LISTED: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub t: f64,
    pub energy: f64,
    pub threshold: f64,
    pub families: Vec<FamilyReport>,
    pub worst_margin: f64,
    pub stable: bool,
}

fn summarize(family: Family, margins: Vec<(Vec<usize>, Option<f64>)>, threshold: f64) -> FamilyReport {
    let tested = margins.len();
    let skipped = margins.iter().filter(|(_, m)| m.is_none()).count();
    let mut bad: Vec<Violation> = margins
        .iter()
        .filter_map(|(l, m)| m.filter(|&m| m < threshold).map(|margin| Violation { labels: l.clone(), margin }))
        .collect();
    let worst_margin = margins.iter().filter_map(|(_, m)| *m).fold(f64::INFINITY, f64::min);
    bad.sort_by(|a, b| a.margin.total_cmp(&b.margin));
    let n_violations = bad.len();
    bad.truncate(MAX_LISTED);
    FamilyReport { family, tested, skipped, worst_margin, violations: bad, n_violations }
}

/// Audit `q` at time `t` against the configured competitor families.
pub fn check_stability(
    problem: &Problem,
    t: f64,
    q: &State,
    spec: &CompetitorSpec,
    config: &SolverConfig,
) -> Result<StabilityReport, SolverError> {
    q.y.check_against(&problem.mesh)?;
    q.z.check_against(&problem.mesh)?;
    let energy = problem.energy(t, q)?;
    let threshold = -spec.tol * (1.0 + energy.abs());
    let n = problem.mesh.n_tets();
    let m = q.z.n_phases();
    let mut families = Vec::new();

    if spec.single_flips {
        let tables = LabelTables::new(problem, &q.y);
        let tables = &tables;
        let z = &q.z.labels;
        let margins: Vec<(Vec<usize>, Option<f64>)> = (0..n)
            .into_par_iter()
            .flat_map_iter(|e| {
                let here = tables.local(e, z[e], z, z);
                (0..m).filter(move |&i| i != z[e]).map(move |i| {
                    let mut labels = z.clone();
                    labels[e] = i;
                    let margin = tables.local(e, i, z, z) - here;
                    (labels, Some(margin))
                }).collect::<Vec<_>>()
            })
            .collect();
        families.push(summarize(Family::SingleFlip, margins, threshold));
    }

    let relaxed = |labels: Vec<usize>| -> (Vec<usize>, Option<f64>) {
        let margin = (|| {
            let z = PhaseField::new(labels.clone(), q.z.variants)?;
            let (y, _) = minimize_y(problem, t, &z, &q.y, config)?;
            let cand = State { y, z };
            Ok::<f64, SolverError>(problem.objective(t, &cand, &q.z)? - energy)
        })();
        (labels, margin.ok())
    };

    if spec.uniform {
        let margins = (0..m).into_par_iter().map(|i| relaxed(vec![i; n])).collect();
        families.push(summarize(Family::Uniform, margins, threshold));
    }
    if spec.n_random > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
        let draws: Vec<Vec<usize>> =
            (0..spec.n_random).map(|_| (0..n).map(|_| rng.gen_range(0..m)).collect()).collect();
        let margins = draws.into_par_iter().map(relaxed).collect();
        families.push(summarize(Family::Random, margins, threshold));
    }
    if n <= spec.exhaustive_cap {
        let margins = all_labelings(n, m).into_par_iter().map(relaxed).collect();
        families.push(summarize(Family::Exhaustive, margins, threshold));
    }

    let worst_margin = families.iter().map(|f| f.worst_margin).fold(f64::INFINITY, f64::min);
    let stable = families.iter().all(|f| f.n_violations == 0);
    Ok(StabilityReport { t, energy, threshold, families, worst_margin, stable })
}
