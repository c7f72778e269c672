//! One incremental problem: minimize `E(t_k, q) + 𝒟(z, z_{k−1})` by
//! alternating the y-step and the z-step.
//!
//! Single-element relabels cannot nucleate a new phase when the gain only
//! appears after `y` relaxes, so besides the warm start from `q_{k−1}` the
//! alternation can also be started from every uniform labeling; the best
//! result wins.

use super::{minimize_y, minimize_z, DescentReport, Problem, SolverConfig, SolverError, State};
use crate::mesh::PhaseField;

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// `E(t, q_prev)` (no dissipation at the start).
    pub objective_start: f64,
    pub objective_final: f64,
    /// `E + 𝒟` after every half-step of the warm-started alternation, then
    /// the running best after each additional start.
    pub objective_sequence: Vec<f64>,
    pub alternations: usize,
    pub y_iters: usize,
    pub z_sweeps: usize,
    /// `|∇_y E|` at the returned state (smoothed interface norms).
    pub grad_norm: f64,
    /// Smallest `det F_e` over every y-iterate of the step.
    pub min_det: f64,
    /// Some y-step of the selected run hit its iteration cap or stalled.
    pub y_unconverged: bool,
    /// `None` for the warm start, `Some(i)` when the run started from the
    /// uniform labeling `i` won.
    pub selected_start: Option<usize>,
    /// The solve was worse than keeping `q_prev`, which was returned instead.
    pub kept_previous: bool,
}

struct Run {
    q: State,
    objective: f64,
    sequence: Vec<f64>,
    alternations: usize,
    y_iters: usize,
    z_sweeps: usize,
    grad_norm: f64,
    min_det: f64,
    y_unconverged: bool,
}

impl Run {
    fn absorb(&mut self, yr: &DescentReport) {
        self.y_iters += yr.iterations;
        self.grad_norm = yr.grad_norm;
        self.min_det = self.min_det.min(yr.min_det);
        self.y_unconverged |= !yr.converged;
    }
}

/// Alternate y- and z-steps from `start`.
///
/// Stops when a z-step leaves the labels unchanged (the preceding y-step
/// already made `y` stationary for them) or when one alternation lowers the
/// objective by at most `tol_outer (1 + |E|)`; in the latter case a final
/// y-step restores stationarity.
fn alternate(
    problem: &Problem,
    t: f64,
    start: State,
    z_prev: &PhaseField,
    config: &SolverConfig,
) -> Result<Run, SolverError> {
    let first = problem.objective(t, &start, z_prev)?;
    let mut run = Run {
        q: start,
        objective: first,
        sequence: vec![first],
        alternations: 0,
        y_iters: 0,
        z_sweeps: 0,
        grad_norm: f64::NAN,
        min_det: f64::INFINITY,
        y_unconverged: false,
    };
    let mut last = first;
    let mut y_fresh = false;
    for _ in 0..config.max_outer {
        run.alternations += 1;
        let (y, yr) = minimize_y(problem, t, &run.q.z, &run.q.y, config)?;
        run.q.y = y;
        run.absorb(&yr);
        y_fresh = true;
        run.sequence.push(problem.objective(t, &run.q, z_prev)?);

        let (z, zr) = minimize_z(problem, t, &run.q.y, &run.q.z, z_prev, config)?;
        run.z_sweeps += zr.sweeps;
        let changed = z != run.q.z;
        run.q.z = z;
        let now = problem.objective(t, &run.q, z_prev)?;
        run.sequence.push(now);
        if !changed {
            break;
        }
        y_fresh = false;
        if last - now <= config.tol_outer * (1.0 + now.abs()) {
            break;
        }
        last = now;
    }
    if !y_fresh {
        let (y, yr) = minimize_y(problem, t, &run.q.z, &run.q.y, config)?;
        run.q.y = y;
        run.absorb(&yr);
        run.sequence.push(problem.objective(t, &run.q, z_prev)?);
    }
    run.objective = problem.objective(t, &run.q, z_prev)?;
    Ok(run)
}

/// Solve the incremental problem at time `t` from the previous state.
///
/// The returned objective is never larger than `E(t, q_prev)`.
pub fn incremental_step(
    problem: &Problem,
    t: f64,
    q_prev: &State,
    config: &SolverConfig,
) -> Result<(State, StepReport), SolverError> {
    let z_prev = &q_prev.z;
    let start = problem.objective(t, q_prev, z_prev)?;
    let mut best = alternate(problem, t, q_prev.clone(), z_prev, config)?;
    let mut selected_start = None;
    let mut sequence = best.sequence.clone();
    let (mut y_iters, mut z_sweeps) = (best.y_iters, best.z_sweeps);
    let mut min_det = best.min_det;

    if config.uniform_starts {
        for label in 0..z_prev.n_phases() {
            let z = PhaseField::uniform(z_prev.len(), label, z_prev.variants)?;
            if z == *z_prev {
                continue;
            }
            let run = alternate(problem, t, State { y: q_prev.y.clone(), z }, z_prev, config)?;
            y_iters += run.y_iters;
            z_sweeps += run.z_sweeps;
            min_det = min_det.min(run.min_det);
            if run.objective < best.objective {
                best = run;
                selected_start = Some(label);
            }
            sequence.push(best.objective);
        }
    }

    let mut report = StepReport {
        objective_start: start,
        objective_final: best.objective,
        objective_sequence: sequence,
        alternations: best.alternations,
        y_iters,
        z_sweeps,
        grad_norm: best.grad_norm,
        min_det,
        y_unconverged: best.y_unconverged,
        selected_start,
        kept_previous: false,
    };
    if best.objective > start {
        report.kept_previous = true;
        report.objective_final = start;
        report.objective_sequence.push(start);
        let g = crate::energy::total_gradient(t, &problem.mesh, &q_prev.y, &q_prev.z, &problem.material, &problem.loads)?;
        report.grad_norm = crate::sum::norm(&g);
        return Ok((q_prev.clone(), report));
    }
    Ok((best.q, report))
}
