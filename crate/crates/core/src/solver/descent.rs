//! The y-step: minimize `E(t, ·, z)` over nodal positions with `z` frozen.
//!
//! Limited-memory quasi-Newton directions (steepest descent when the memory
//! is 0 or the direction fails to descend), Armijo backtracking, and a
//! determinant safeguard that keeps every iterate orientation preserving.

use std::collections::VecDeque;

use super::{Problem, SolverConfig, SolverError};
use crate::energy::{determinants, smoothed_total_energy, total_gradient, Deformation};
use crate::mesh::PhaseField;
use crate::sum;
use crate::tensor3::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct DescentReport {
    pub iterations: usize,
    pub grad_norm: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// Smoothed energy of every accepted iterate, starting with the initial one.
    pub history: Vec<f64>,
    /// Smallest `det F_e` over all accepted iterates.
    pub min_det: f64,
    pub converged: bool,
    /// The line search could not make progress at floating-point resolution.
    pub stalled: bool,
}

/// Consecutive accepted steps without resolvable energy decrease after which
/// the y-step reports a stall.
const FLAT_LIMIT: usize = 10;

struct Curvature {
    s: Vec<Vec3>,
    y: Vec<Vec3>,
    rho: f64,
}

fn two_loop(g: &[Vec3], memory: &VecDeque<Curvature>) -> Vec<Vec3> {
    let mut q: Vec<Vec3> = g.to_vec();
    let mut alpha = Vec::with_capacity(memory.len());
    for c in memory.iter().rev() {
        let a = c.rho * sum::dot(&c.s, &q);
        for (qi, yi) in q.iter_mut().zip(&c.y) {
            *qi -= yi.scale(a);
        }
        alpha.push(a);
    }
    if let Some(c) = memory.back() {
        let gamma = sum::dot(&c.s, &c.y) / sum::dot(&c.y, &c.y);
        for qi in q.iter_mut() {
            *qi = qi.scale(gamma);
        }
    }
    for (c, a) in memory.iter().zip(alpha.into_iter().rev()) {
        let b = c.rho * sum::dot(&c.y, &q);
        for (qi, si) in q.iter_mut().zip(&c.s) {
            *qi += si.scale(a - b);
        }
    }
    q.iter().map(|v| -*v).collect()
}

fn max_abs(v: &[Vec3]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.max_abs()))
}

enum Trial {
    Accepted { y: Deformation, energy: f64, dets: Vec<f64> },
    Blocked { element: usize },
    NoDecrease,
}

/// Backtracking along `d` from `y` with energy `e0` and slope `slope = ∇E·d`.
#[allow(clippy::too_many_arguments)]
fn line_search(
    problem: &Problem,
    t: f64,
    z: &PhaseField,
    y: &Deformation,
    dets: &[f64],
    d: &[Vec3],
    e0: f64,
    slope: f64,
    s0: f64,
    config: &SolverConfig,
) -> Result<Trial, SolverError> {
    let mut s = s0;
    let mut blocked = None;
    let mut decrease_failed = false;
    for _ in 0..80 {
        let trial = y.stepped(d, s);
        let new_dets = determinants(&problem.mesh, &trial);
        let bad = new_dets.iter().zip(dets).position(|(&dn, &d0)| !(dn > config.theta_safe * d0));
        if let Some(element) = bad {
            blocked = Some(element);
            s *= config.backtrack;
            continue;
        }
        let e = smoothed_total_energy(t, &problem.mesh, &trial, z, &problem.material, &problem.loads)?;
        if e.is_finite() && e <= e0 + config.armijo * s * slope {
            return Ok(Trial::Accepted { y: trial, energy: e, dets: new_dets });
        }
        decrease_failed = true;
        s *= config.backtrack;
    }
    match (blocked, decrease_failed) {
        (Some(element), false) => Ok(Trial::Blocked { element }),
        _ => Ok(Trial::NoDecrease),
    }
}

/// Minimize `y ↦ E(t, y, z)` starting from `y_start`.
///
/// Stops when `|∇E| ≤ tol_g (1 + |E|)`, at `max_iters`, or when the line
/// search stalls at floating-point resolution. Every accepted iterate has
/// lower energy than the previous one and all determinants positive.
pub fn minimize_y(
    problem: &Problem,
    t: f64,
    z: &PhaseField,
    y_start: &Deformation,
    config: &SolverConfig,
) -> Result<(Deformation, DescentReport), SolverError> {
    let mesh = &problem.mesh;
    y_start.check_against(mesh)?;
    z.check_against(mesh)?;
    let mut dets = determinants(mesh, y_start);
    if let Some((element, &det)) = dets.iter().enumerate().find(|(_, &d)| !(d > 0.0)) {
        return Err(SolverError::Inadmissible { element, det });
    }
    let mut y = y_start.clone();
    let mut energy = smoothed_total_energy(t, mesh, &y, z, &problem.material, &problem.loads)?;
    let mut grad = total_gradient(t, mesh, &y, z, &problem.material, &problem.loads)?;
    let h_char = mesh.volumes.iter().fold(f64::INFINITY, |m, &v| m.min(v)).cbrt();
    let mut memory: VecDeque<Curvature> = VecDeque::new();
    let mut flat_steps = 0;
    let mut report = DescentReport {
        iterations: 0,
        grad_norm: sum::norm(&grad),
        energy_initial: energy,
        energy_final: energy,
        history: vec![energy],
        min_det: dets.iter().fold(f64::INFINITY, |m, &d| m.min(d)),
        converged: false,
        stalled: false,
    };

    loop {
        report.grad_norm = sum::norm(&grad);
        if report.grad_norm <= config.tol_g * (1.0 + energy.abs()) {
            report.converged = true;
            break;
        }
        if report.iterations >= config.max_iters {
            break;
        }

        let mut d = if config.memory > 0 { two_loop(&grad, &memory) } else { grad.iter().map(|g| -*g).collect() };
        let mut slope = sum::dot(&grad, &d);
        if !(slope < 0.0) {
            memory.clear();
            d = grad.iter().map(|g| -*g).collect();
            slope = -report.grad_norm * report.grad_norm;
        }
        let quasi_newton = !memory.is_empty();
        let s0 = if quasi_newton { 1.0 } else { (0.1 * h_char / max_abs(&d)).min(1.0) };
        let mut outcome = line_search(problem, t, z, &y, &dets, &d, energy, slope, s0, config)?;
        if quasi_newton && !matches!(outcome, Trial::Accepted { .. }) {
            memory.clear();
            d = grad.iter().map(|g| -*g).collect();
            slope = -report.grad_norm * report.grad_norm;
            let s0 = (0.1 * h_char / max_abs(&d)).min(1.0);
            outcome = line_search(problem, t, z, &y, &dets, &d, energy, slope, s0, config)?;
        }

        let (y_new, e_new, dets_new) = match outcome {
            Trial::Accepted { y, energy, dets } => (y, energy, dets),
            Trial::Blocked { element } => return Err(SolverError::LineSearch { element }),
            Trial::NoDecrease => {
                report.stalled = true;
                break;
            }
        };
        // accepted steps that no longer change the energy beyond roundoff
        if energy - e_new <= 4.0 * f64::EPSILON * (1.0 + energy.abs()) {
            flat_steps += 1;
        } else {
            flat_steps = 0;
        }
        let g_new = total_gradient(t, mesh, &y_new, z, &problem.material, &problem.loads)?;
        if config.memory > 0 {
            let s: Vec<Vec3> = y_new.positions.iter().zip(&y.positions).map(|(a, b)| *a - *b).collect();
            let yv: Vec<Vec3> = g_new.iter().zip(&grad).map(|(a, b)| *a - *b).collect();
            let sy = sum::dot(&s, &yv);
            if sy > 1e-14 * sum::norm(&s) * sum::norm(&yv) && sy > 0.0 {
                if memory.len() == config.memory {
                    memory.pop_front();
                }
                memory.push_back(Curvature { s, y: yv, rho: 1.0 / sy });
            }
        }
        y = y_new;
        energy = e_new;
        grad = g_new;
        dets = dets_new;
        report.iterations += 1;
        report.history.push(energy);
        report.min_det = dets.iter().fold(report.min_det, |m, &d| m.min(d));
        if flat_steps >= FLAT_LIMIT {
            report.grad_norm = sum::norm(&grad);
            report.stalled = true;
            break;
        }
    }
    report.energy_final = energy;
    Ok((y, report))
}
