//! Brute-force reference for tiny meshes: enumerate every labeling, relax `y`
//! for each, and keep the best incremental objective.

use rayon::prelude::*;

use super::{minimize_y, Problem, SolverConfig, SolverError, State};
use crate::mesh::PhaseField;

/// All `m^n` labelings of `n` elements in lexicographic order.
pub fn all_labelings(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; n];
    loop {
        out.push(cur.clone());
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < m {
                break;
            }
            cur[i] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub labelings: usize,
    /// Labelings whose y-relaxation failed.
    pub failed: usize,
    pub best: State,
    /// `E(t, best) + 𝒟(z_best, z_prev)`.
    pub best_objective: f64,
    /// Objective per labeling in enumeration order (`NaN` where it failed).
    pub objectives: Vec<f64>,
}

/// Exhaustive minimum of `E(t, ·) + 𝒟(·, z_prev)` with `y` relaxed from
/// `q_prev.y` for each labeling. Refuses more than `max_labelings` labelings.
pub fn exhaustive_minimum(
    problem: &Problem,
    t: f64,
    q_prev: &State,
    config: &SolverConfig,
    max_labelings: usize,
) -> Result<OracleReport, SolverError> {
    let n = problem.mesh.n_tets();
    let m = q_prev.z.n_phases();
    let count = (m as f64).powi(n as i32);
    if count > max_labelings as f64 {
        return Err(SolverError::CapExceeded(format!(
            "{m}^{n} labelings exceed the cap of {max_labelings}"
        )));
    }
    q_prev.z.check_against(&problem.mesh)?;
    let results: Vec<Option<(State, f64)>> = all_labelings(n, m)
        .into_par_iter()
        .map(|labels| {
            (|| {
                let z = PhaseField::new(labels, q_prev.z.variants)?;
                let (y, _) = minimize_y(problem, t, &z, &q_prev.y, config)?;
                let q = State { y, z };
                let obj = problem.objective(t, &q, &q_prev.z)?;
                Ok::<_, SolverError>((q, obj))
            })()
            .ok()
        })
        .collect();
    let objectives: Vec<f64> = results.iter().map(|r| r.as_ref().map_or(f64::NAN, |(_, o)| *o)).collect();
    let failed = results.iter().filter(|r| r.is_none()).count();
    let (best, best_objective) = results
        .into_iter()
        .flatten()
        .fold(None::<(State, f64)>, |acc, (q, o)| match acc {
            Some((_, bo)) if bo <= o => acc,
            _ => Some((q, o)),
        })
        .ok_or_else(|| SolverError::Config("no labeling admitted a y-relaxation".into()))?;
    Ok(OracleReport { labelings: objectives.len(), failed, best, best_objective, objectives })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_order_and_count() {
        let all = all_labelings(3, 2);
        assert_eq!(all.len(), 8);
        assert_eq!(all[0], vec![0, 0, 0]);
        assert_eq!(all[1], vec![0, 0, 1]);
        assert_eq!(all[7], vec![1, 1, 1]);
        assert_eq!(all_labelings(4, 3).len(), 81);
    }
}
