//! Time-incremental evolution with per-step energy-balance bookkeeping.

use serde::{Deserialize, Serialize};

use super::{check_stability, incremental_step, Problem, SolverConfig, SolverError, StabilityReport, State};
use crate::energy::{total_energy, work_integral, EnergyBreakdown};
use crate::sum::{norm, pairwise_sum};
use crate::tensor3::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub t: f64,
    pub energy: EnergyBreakdown,
    /// `𝒟(z_{k−1}, z_k)`.
    pub step_dissipation: f64,
    pub cumulative_dissipation: f64,
    /// `∫_{t_{k−1}}^{t_k} ∂_t E(θ, q_k) dθ`.
    pub lower: f64,
    /// `∫_{t_{k−1}}^{t_k} ∂_t E(θ, q_{k−1}) dθ`.
    pub upper: f64,
    /// `E(t_k, q_k) + 𝒟(z_{k−1}, z_k) − E(t_{k−1}, q_{k−1})`, which must lie
    /// between `lower` and `upper`.
    pub change: f64,
    /// `E(t_k, q_k) + Diss − E(0, q_0) − Σ_{j ≤ k} upper_j`.
    pub balance_residual: f64,
    /// Accumulated allowance for `balance_residual`.
    pub slack: f64,
    pub min_det: f64,
    pub y_iters: usize,
    pub z_sweeps: usize,
    pub grad_norm: f64,
    pub y_unconverged: bool,
    pub kept_previous: bool,
    /// The objective sequence of the step was nonincreasing.
    pub monotone: bool,
}

impl StepRecord {
    /// Tolerance for the two-sided bound at this step.
    pub fn bound_tolerance(&self, tol_bal: f64) -> f64 {
        tol_bal * (1.0 + self.energy.total.abs())
    }

    pub fn two_sided_holds(&self, tol_bal: f64) -> bool {
        let tol = self.bound_tolerance(tol_bal);
        self.lower - tol <= self.change && self.change <= self.upper + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub initial_energy: EnergyBreakdown,
    /// Audit of `q_0` at `t = 0` against the configured competitor families.
    pub initial_stability: Option<StabilityReport>,
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory holds the initial state")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("step {step} failed: {source}")]
pub struct EvolveError {
    pub step: usize,
    pub source: SolverError,
    /// States and records up to the last completed step.
    pub partial: Box<Trajectory>,
}

/// Run `n_steps` incremental problems on the uniform grid `t_k = k T / N`.
pub fn evolve(
    problem: &Problem,
    q0: &State,
    horizon: f64,
    n_steps: usize,
    config: &SolverConfig,
) -> Result<Trajectory, EvolveError> {
    let fail = |source: SolverError, traj: &Trajectory| EvolveError {
        step: traj.records.len() + 1,
        source,
        partial: Box::new(traj.clone()),
    };
    let empty = Trajectory {
        times: vec![0.0],
        states: vec![q0.clone()],
        initial_energy: EnergyBreakdown { bulk: 0.0, interface: 0.0, external_work: 0.0, spring: 0.0, total: 0.0 },
        initial_stability: None,
        records: Vec::new(),
    };
    if n_steps == 0 || !(horizon > 0.0) {
        return Err(fail(SolverError::Config(format!("need N ≥ 1 and T > 0, got N = {n_steps}, T = {horizon}")), &empty));
    }
    if let Err(e) = config.validate() {
        return Err(fail(e, &empty));
    }
    let energy_at = |t: f64, q: &State| {
        total_energy(t, &problem.mesh, &q.y, &q.z, &problem.material, &problem.loads).map_err(SolverError::from)
    };
    let initial_energy = energy_at(0.0, q0).map_err(|e| fail(e, &empty))?;
    if !initial_energy.total.is_finite() {
        let (element, det) = crate::energy::min_determinant(&problem.mesh, &q0.y);
        return Err(fail(SolverError::Inadmissible { element, det }, &empty));
    }
    let initial_stability =
        check_stability(problem, 0.0, q0, &config.competitors, config).map_err(|e| fail(e, &empty))?;
    if !initial_stability.stable {
        log::warn!(
            "initial state is not stable at t = 0 (worst competitor margin {:e})",
            initial_stability.worst_margin
        );
    }
    let mut traj = Trajectory { initial_energy, initial_stability: Some(initial_stability), ..empty };

    let mut diss = Vec::new();
    let mut uppers = Vec::new();
    let mut slack_terms = Vec::new();
    for k in 1..=n_steps {
        let t_prev = traj.times[k - 1];
        let t = if k == n_steps { horizon } else { k as f64 * horizon / n_steps as f64 };
        let q_prev = traj.states[k - 1].clone();
        let step = (|| {
            let (q, report) = incremental_step(problem, t, &q_prev, config)?;
            let energy = energy_at(t, &q)?;
            let e_prev = if k == 1 { traj.initial_energy.total } else { traj.records[k - 2].energy.total };
            let d = problem.metric.total(&problem.mesh, &q_prev.z, &q.z)?;
            let lower = work_integral(t_prev, t, &problem.mesh, &q.y, &problem.loads)?;
            let upper = work_integral(t_prev, t, &problem.mesh, &q_prev.y, &problem.loads)?;
            Ok::<_, SolverError>((q, report, energy, e_prev, d, lower, upper))
        })();
        let (q, report, energy, e_prev, d, lower, upper) = step.map_err(|e| fail(e, &traj))?;

        diss.push(d);
        uppers.push(upper);
        let cumulative_dissipation = pairwise_sum(&diss);
        let dy: Vec<Vec3> = q.y.positions.iter().zip(&q_prev.y.positions).map(|(a, b)| *a - *b).collect();
        // gap between the two work integrals, the first-order effect of the
        // unresolved gradient, and the per-step acceptance tolerance
        slack_terms.push(
            (upper - lower).max(0.0)
                + report.grad_norm * norm(&dy)
                + config.tol_bal * (1.0 + energy.total.abs()),
        );
        let monotone = report.objective_sequence.windows(2).all(|w| {
            w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs())
        });
        traj.records.push(StepRecord {
            k,
            t,
            energy,
            step_dissipation: d,
            cumulative_dissipation,
            lower,
            upper,
            change: energy.total + d - e_prev,
            balance_residual: energy.total + cumulative_dissipation - traj.initial_energy.total - pairwise_sum(&uppers),
            slack: pairwise_sum(&slack_terms),
            min_det: report.min_det,
            y_iters: report.y_iters,
            z_sweeps: report.z_sweeps,
            grad_norm: report.grad_norm,
            y_unconverged: report.y_unconverged,
            kept_previous: report.kept_previous,
            monotone,
        });
        traj.times.push(t);
        traj.states.push(q);
    }
    Ok(traj)
}
