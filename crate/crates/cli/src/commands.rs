//! The `run`, `check`, `oracle` and `energy` subcommands.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use smasim_core::energy::{gauss_identity_check, measure_totals, total_energy, EnergyBreakdown};
use smasim_core::solver::stability::Family;
use smasim_core::solver::{
    check_admissibility, check_stability, evolve, exhaustive_minimum, incremental_step, relative_gap,
    AdmissibilityReport, CompetitorSpec, SolverConfig, SolverError, StabilityReport, State, Trajectory,
};
use smasim_core::tensor3::Vec3;

use crate::output::{self, OutputError};
use crate::scenario::{apply_override, Scenario, ScenarioError, Setup};

/// Relative objective gap tolerated between the solver and the oracle.
pub const TOL_ORACLE: f64 = 1e-6;
/// Tolerance for the discrete Gauss identities and null-Lagrangian totals.
pub const IDENTITY_TOL: f64 = 1e-10;
pub const ORACLE_MAX_ELEMENTS: usize = 12;
pub const ORACLE_MAX_PHASES: usize = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("step {step}: {source} (partial outputs written)")]
    Evolve { step: usize, source: SolverError },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Scenario(_) | CliError::Input(_) => 2,
            CliError::Evolve { .. } | CliError::Solver(_) => 3,
            CliError::Output(_) => 4,
        }
    }
}

/// Whether every certificate of a command passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub scenario: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub overrides: Vec<String>,
    /// State file for `check` and `energy`; the scenario's initial state otherwise.
    pub state: Option<PathBuf>,
    pub time: Option<f64>,
}

struct Context {
    scenario: Scenario,
    setup: Setup,
    config: SolverConfig,
    out_dir: PathBuf,
}

fn prepare(opts: &Options) -> Result<Context, CliError> {
    let (scenario, base) = Scenario::load(&opts.scenario)?;
    let mut config = scenario.solver.clone();
    for o in &opts.overrides {
        config = apply_override(&config, o)?;
    }
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let setup = scenario.setup(&base)?;
    let out_dir = opts.out.clone().unwrap_or_else(|| scenario.output.dir.clone());
    log::info!(
        "scenario `{}`: {} elements, {} phases, {} steps to T = {}",
        scenario.name,
        setup.problem.mesh.n_tets(),
        scenario.n_phases(),
        scenario.steps,
        scenario.horizon
    );
    Ok(Context { scenario, setup, config, out_dir })
}

fn load_state(ctx: &Context, path: Option<&Path>) -> Result<State, CliError> {
    let Some(path) = path else {
        return Ok(ctx.setup.initial.clone());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let q: State = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Input(format!("{}: field `{}`: {}", path.display(), e.path(), e.inner())))?;
    let mesh = &ctx.setup.problem.mesh;
    q.y.check_against(mesh).map_err(|e| CliError::Input(e.to_string()))?;
    q.z.check_against(mesh).map_err(|e| CliError::Input(e.to_string()))?;
    if q.z.n_phases() != ctx.scenario.n_phases() {
        return Err(CliError::Input(format!(
            "state has {} phases, scenario {}",
            q.z.n_phases(),
            ctx.scenario.n_phases()
        )));
    }
    Ok(q)
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyDigest {
    pub family: Family,
    pub tested: usize,
    pub skipped: usize,
    pub n_violations: usize,
    pub worst_margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityDigest {
    pub t: f64,
    pub stable: bool,
    pub worst_margin: f64,
    pub threshold: f64,
    pub families: Vec<FamilyDigest>,
}

impl From<&StabilityReport> for StabilityDigest {
    fn from(r: &StabilityReport) -> Self {
        StabilityDigest {
            t: r.t,
            stable: r.stable,
            worst_margin: r.worst_margin,
            threshold: r.threshold,
            families: r
                .families
                .iter()
                .map(|f| FamilyDigest {
                    family: f.family,
                    tested: f.tested,
                    skipped: f.skipped,
                    n_violations: f.n_violations,
                    worst_margin: f.worst_margin,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub elements: usize,
    pub phases: usize,
    pub steps: usize,
    pub completed_steps: usize,
    pub horizon: f64,
    pub seed: u64,
    pub initial_energy: EnergyBreakdown,
    pub final_energy: EnergyBreakdown,
    pub total_dissipation: f64,
    pub final_balance_residual: f64,
    pub accumulated_slack: f64,
    pub min_det: f64,
    pub two_sided_ok: bool,
    pub balance_ok: bool,
    pub orientation_ok: bool,
    pub monotone_ok: bool,
    pub dissipation_nondecreasing: bool,
    /// Steps where some per-step certificate failed.
    pub failed_steps: Vec<usize>,
    /// Steps whose y-solve stopped above the gradient tolerance.
    pub y_unconverged_steps: Vec<usize>,
    pub initial_stability: Option<StabilityDigest>,
    pub final_stability: Option<StabilityDigest>,
    pub certificates_ok: bool,
    pub error: Option<String>,
    pub elapsed_seconds: f64,
}

fn summarize(ctx: &Context, traj: &Trajectory, error: Option<String>, elapsed: f64) -> RunSummary {
    let tol_bal = ctx.config.tol_bal;
    let recs = &traj.records;
    let last = recs.last();
    let two_sided_ok = recs.iter().all(|r| r.two_sided_holds(tol_bal));
    let orientation_ok = recs.iter().all(|r| r.min_det > 0.0);
    let monotone_ok = recs.iter().all(|r| r.monotone);
    let dissipation_nondecreasing = recs.windows(2).all(|w| w[1].cumulative_dissipation >= w[0].cumulative_dissipation);
    let balance_ok = last.is_none_or(|r| r.balance_residual.abs() <= r.slack);
    let failed_steps = recs
        .iter()
        .filter(|r| !(r.two_sided_holds(tol_bal) && r.min_det > 0.0 && r.monotone))
        .map(|r| r.k)
        .collect();
    let certificates_ok =
        error.is_none() && two_sided_ok && orientation_ok && monotone_ok && dissipation_nondecreasing && balance_ok;
    RunSummary {
        name: ctx.scenario.name.clone(),
        elements: ctx.setup.problem.mesh.n_tets(),
        phases: ctx.scenario.n_phases(),
        steps: ctx.scenario.steps,
        completed_steps: recs.len(),
        horizon: ctx.scenario.horizon,
        seed: ctx.config.seed,
        initial_energy: traj.initial_energy,
        final_energy: last.map_or(traj.initial_energy, |r| r.energy),
        total_dissipation: last.map_or(0.0, |r| r.cumulative_dissipation),
        final_balance_residual: last.map_or(0.0, |r| r.balance_residual),
        accumulated_slack: last.map_or(0.0, |r| r.slack),
        min_det: recs.iter().fold(f64::INFINITY, |m, r| m.min(r.min_det)),
        two_sided_ok,
        balance_ok,
        orientation_ok,
        monotone_ok,
        dissipation_nondecreasing,
        failed_steps,
        y_unconverged_steps: recs.iter().filter(|r| r.y_unconverged).map(|r| r.k).collect(),
        initial_stability: traj.initial_stability.as_ref().map(StabilityDigest::from),
        final_stability: None,
        certificates_ok,
        error,
        elapsed_seconds: elapsed,
    }
}

pub fn run(opts: &Options) -> Result<(Verdict, RunSummary), CliError> {
    let ctx = prepare(opts)?;
    let problem = &ctx.setup.problem;
    let clock = Instant::now();
    let (traj, failure) = match evolve(problem, &ctx.setup.initial, ctx.scenario.horizon, ctx.scenario.steps, &ctx.config) {
        Ok(traj) => (traj, None),
        Err(e) => {
            log::error!("{e}");
            (*e.partial.clone(), Some(e))
        }
    };
    for r in &traj.records {
        log::info!(
            "step {:>3}  t = {:.4}  E = {:.10e}  Diss = {:.6e}  residual = {:.3e}",
            r.k,
            r.t,
            r.energy.total,
            r.cumulative_dissipation,
            r.balance_residual
        );
    }

    let out = &ctx.out_dir;
    let spec = &ctx.scenario.output;
    output::write_file(&out.join(&spec.trace), &output::trace_csv(problem, &traj))?;
    if spec.vtk {
        for (k, (q, t)) in traj.states.iter().zip(&traj.times).enumerate() {
            let title = format!("{} step {k} t={}", ctx.scenario.name, output::num(*t));
            output::write_file(&out.join("vtk").join(format!("step_{k:04}.vtk")), &output::vtk(problem, q, &title))?;
        }
    }
    output::write_json(&out.join(&spec.final_state), traj.final_state())?;

    let mut summary = summarize(&ctx, &traj, failure.as_ref().map(|e| e.to_string()), 0.0);
    if failure.is_none() {
        let t = *traj.times.last().expect("times");
        let report = check_stability(problem, t, traj.final_state(), &ctx.config.competitors, &ctx.config)?;
        summary.final_stability = Some(StabilityDigest::from(&report));
    }
    summary.elapsed_seconds = clock.elapsed().as_secs_f64();
    output::write_json(&out.join(&spec.summary), &summary)?;
    if let Some(e) = failure {
        return Err(CliError::Evolve { step: e.step, source: e.source });
    }
    Ok((Verdict::from(summary.certificates_ok), summary))
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussEntry {
    pub phase: usize,
    pub elements: usize,
    pub curl: f64,
    pub piola: f64,
    pub scale: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TotalsEntry {
    pub phase: usize,
    /// The phase region stays off ∂Ω, so its totals must vanish.
    pub interior: bool,
    pub area: f64,
    pub max_abs: f64,
    /// `None` when the region touches ∂Ω and nothing is asserted.
    pub ok: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub t: f64,
    pub energy: EnergyBreakdown,
    pub admissibility: AdmissibilityReport,
    pub stability: StabilityReport,
    pub gauss: Vec<GaussEntry>,
    pub null_lagrangian: Vec<TotalsEntry>,
    pub passed: bool,
}

pub fn check(opts: &Options) -> Result<(Verdict, CheckReport), CliError> {
    let ctx = prepare(opts)?;
    let q = load_state(&ctx, opts.state.as_deref())?;
    let t = opts.time.unwrap_or(0.0);
    let problem = &ctx.setup.problem;
    let mesh = &problem.mesh;
    let energy = total_energy(t, mesh, &q.y, &q.z, &problem.material, &problem.loads).map_err(SolverError::from)?;
    let admissibility = check_admissibility(mesh, &q.y, ctx.scenario.output.voxel_size)?;
    let stability = if admissibility.orientation_ok {
        check_stability(problem, t, &q, &ctx.config.competitors, &ctx.config)?
    } else {
        // competitors cannot be relaxed from an inverted state
        StabilityReport { t, energy: energy.total, threshold: f64::NAN, families: Vec::new(), worst_margin: f64::NAN, stable: false }
    };

    // test fields vanish on ∂Ω, random elsewhere
    let on_boundary: BTreeSet<usize> = mesh.boundary_faces.iter().flat_map(|f| f.nodes).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed);
    let v: Vec<Vec3> = (0..mesh.n_nodes())
        .map(|i| {
            let r = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if on_boundary.contains(&i) {
                Vec3::ZERO
            } else {
                r
            }
        })
        .collect();
    let mut gauss = Vec::new();
    let mut null_lagrangian = Vec::new();
    for phase in 0..q.z.n_phases() {
        let region: Vec<usize> = (0..mesh.n_tets()).filter(|&e| q.z.labels[e] == phase).collect();
        if region.is_empty() {
            continue;
        }
        let g = gauss_identity_check(mesh, &q.y, &region, &v).map_err(SolverError::from)?;
        let tol = IDENTITY_TOL * g.scale;
        gauss.push(GaussEntry {
            phase,
            elements: region.len(),
            curl: g.curl,
            piola: g.piola,
            scale: g.scale,
            ok: g.curl <= tol && g.piola <= tol,
        });
        let m = measure_totals(mesh, &q.y, &q.z, phase).map_err(SolverError::from)?;
        null_lagrangian.push(TotalsEntry {
            phase,
            interior: m.interior,
            area: m.area,
            max_abs: m.max_abs(),
            ok: m.interior.then(|| m.max_abs() <= IDENTITY_TOL),
        });
    }
    let passed = admissibility.orientation_ok
        && admissibility.ciarlet_necas_ok
        && stability.stable
        && gauss.iter().all(|g| g.ok)
        && null_lagrangian.iter().all(|n| n.ok != Some(false));
    let report = CheckReport { t, energy, admissibility, stability, gauss, null_lagrangian, passed };
    output::write_json(&ctx.out_dir.join("check.json"), &report)?;
    Ok((Verdict::from(passed), report))
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub t: f64,
    pub labelings: usize,
    pub failed: usize,
    pub argmin: Vec<usize>,
    pub best_objective: f64,
    /// Objective per labeling in lexicographic order (`null` where the
    /// y-relaxation failed).
    pub objectives: Vec<Option<f64>>,
    pub solver_labels: Vec<usize>,
    pub solver_objective: f64,
    pub gap: f64,
    pub tol_oracle: f64,
    pub within_tol: bool,
    /// Exhaustive-family audit of the solver's answer.
    pub exhaustive_stable: bool,
    pub exhaustive_worst_margin: f64,
    /// The same verdict from the enumeration oracle.
    pub oracle_stable: bool,
    pub verdicts_agree: bool,
}

/// Exhaustive reference for the first incremental problem `t_1 = T/N`.
pub fn oracle(opts: &Options) -> Result<(Verdict, OracleSummary), CliError> {
    let ctx = prepare(opts)?;
    let problem = &ctx.setup.problem;
    let n = problem.mesh.n_tets();
    let m = ctx.scenario.n_phases();
    if n > ORACLE_MAX_ELEMENTS || m > ORACLE_MAX_PHASES {
        return Err(CliError::Solver(SolverError::CapExceeded(format!(
            "oracle needs ≤ {ORACLE_MAX_ELEMENTS} elements and ≤ {ORACLE_MAX_PHASES} phases, got {n} and {m}"
        ))));
    }
    let cap = ORACLE_MAX_PHASES.pow(ORACLE_MAX_ELEMENTS as u32);
    let t = ctx.scenario.horizon / ctx.scenario.steps as f64;
    let q0 = &ctx.setup.initial;
    let reference = exhaustive_minimum(problem, t, q0, &ctx.config, cap)?;
    let (q, step) = incremental_step(problem, t, q0, &ctx.config)?;
    let gap = relative_gap(step.objective_final, reference.best_objective);

    let spec = CompetitorSpec {
        single_flips: false,
        uniform: false,
        n_random: 0,
        exhaustive_cap: n,
        tol: ctx.config.competitors.tol,
    };
    let audit = check_stability(problem, t, &q, &spec, &ctx.config)?;
    let around = exhaustive_minimum(problem, t, &q, &ctx.config, cap)?;
    let energy = problem.energy(t, &q)?;
    let oracle_stable = around.best_objective - energy >= audit.threshold;

    let summary = OracleSummary {
        t,
        labelings: reference.labelings,
        failed: reference.failed,
        argmin: reference.best.z.labels.clone(),
        best_objective: reference.best_objective,
        objectives: reference.objectives.iter().map(|&o| o.is_finite().then_some(o)).collect(),
        solver_labels: q.z.labels.clone(),
        solver_objective: step.objective_final,
        gap,
        tol_oracle: TOL_ORACLE,
        within_tol: gap <= TOL_ORACLE,
        exhaustive_stable: audit.stable,
        exhaustive_worst_margin: audit.worst_margin,
        oracle_stable,
        verdicts_agree: audit.stable == oracle_stable,
    };
    output::write_json(&ctx.out_dir.join("oracle.json"), &summary)?;
    Ok((Verdict::from(summary.within_tol && summary.verdicts_agree), summary))
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub t: f64,
    pub energy: EnergyBreakdown,
    pub min_det: f64,
}

pub fn energy(opts: &Options) -> Result<(Verdict, EnergyReport), CliError> {
    let ctx = prepare(opts)?;
    let q = load_state(&ctx, opts.state.as_deref())?;
    let t = opts.time.unwrap_or(0.0);
    let p = &ctx.setup.problem;
    let energy = total_energy(t, &p.mesh, &q.y, &q.z, &p.material, &p.loads).map_err(SolverError::from)?;
    let (_, min_det) = smasim_core::energy::min_determinant(&p.mesh, &q.y);
    let report = EnergyReport { t, energy, min_det };
    output::write_json(&ctx.out_dir.join("energy.json"), &report)?;
    Ok((Verdict::from(energy.total.is_finite()), report))
}
