//! Scenario files: everything needed to set up and run one evolution.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use smasim_core::dissipation::{DissipationMetric, Norm};
use smasim_core::energy::bulk::{is_spd, DEFAULT_P, DEFAULT_Q};
use smasim_core::energy::interface::DEFAULT_SMOOTHING;
use smasim_core::energy::{
    BulkCoefficients, BulkDensity, Deformation, InterfaceDensity, InterfaceWeights, LoadProgram, MaterialModel,
};
use smasim_core::mesh::{build_box_mesh, load_mesh, BoxSides, PhaseField, TetMesh};
use smasim_core::solver::{Problem, SolverConfig, State};
use smasim_core::tensor3::{Mat3, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("scenario field `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("scenario field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Box {
        cells: [usize; 3],
        #[serde(default = "unit_lengths")]
        size: [f64; 3],
        #[serde(default)]
        sides: BoxSides,
    },
    /// JSON mesh document, relative to the scenario file.
    File { path: PathBuf },
}

fn unit_lengths() -> [f64; 3] {
    [1.0; 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    /// `F_0 = Id` (austenite) followed by the martensite wells.
    pub wells: Vec<Mat3>,
    pub bulk: Vec<BulkCoefficients>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    pub interface: Vec<InterfaceWeights>,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
}

fn default_p() -> f64 {
    DEFAULT_P
}

fn default_q() -> f64 {
    DEFAULT_Q
}

fn default_smoothing() -> f64 {
    DEFAULT_SMOOTHING
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DissipationSpec {
    Norm(Norm),
    Weights(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DeformationSpec {
    Identity,
    Affine { matrix: Mat3, #[serde(default)] offset: Vec3 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseSpec {
    Uniform(usize),
    Labels(Vec<usize>),
    /// Elements whose centroid `x` has `normal·x < offset` get `below`, the
    /// rest `above`.
    HalfSpace { normal: Vec3, offset: f64, below: usize, above: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default = "identity_spec")]
    pub y: DeformationSpec,
    #[serde(default = "austenite_spec")]
    pub z: PhaseSpec,
}

fn identity_spec() -> DeformationSpec {
    DeformationSpec::Identity
}

fn austenite_spec() -> PhaseSpec {
    PhaseSpec::Uniform(0)
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec { y: identity_spec(), z: austenite_spec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Output directory, relative to the working directory; `--out` wins.
    pub dir: PathBuf,
    pub trace: String,
    pub summary: String,
    pub final_state: String,
    /// Write one VTK file per time step into `dir/vtk`.
    pub vtk: bool,
    /// Voxel edge length for the Ciarlet–Nečas check.
    pub voxel_size: f64,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            trace: "trace.csv".into(),
            summary: "summary.json".into(),
            final_state: "final_state.json".into(),
            vtk: true,
            voxel_size: 1.0 / 64.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub mesh: MeshSpec,
    pub material: MaterialSpec,
    pub dissipation: DissipationSpec,
    pub loads: LoadProgram,
    pub horizon: f64,
    pub steps: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A scenario turned into solver inputs.
#[derive(Debug, Clone)]
pub struct Setup {
    pub problem: Problem,
    pub initial: State,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Parse {
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Read and validate a scenario; returns it with the directory that
    /// relative mesh paths refer to.
    pub fn load(path: &Path) -> Result<(Scenario, PathBuf), ScenarioError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Scenario::from_json(&text)?, base))
    }

    /// Checks that need no mesh.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let m = &self.material;
        if m.wells.len() < 2 {
            return Err(invalid("material.wells", "need austenite and at least one martensite well"));
        }
        if m.wells[0] != Mat3::IDENTITY {
            return Err(invalid("material.wells[0]", "the austenite well must be the identity"));
        }
        for (i, w) in m.wells.iter().enumerate() {
            if !is_spd(w) {
                return Err(invalid(format!("material.wells[{i}]"), "well matrix is not symmetric positive definite"));
            }
        }
        let n = m.wells.len();
        if m.bulk.len() != n {
            return Err(invalid("material.bulk", format!("{} coefficient sets for {n} phases", m.bulk.len())));
        }
        if m.interface.len() != n {
            return Err(invalid("material.interface", format!("{} weight sets for {n} phases", m.interface.len())));
        }
        if !(self.horizon > 0.0) {
            return Err(invalid("horizon", format!("must be > 0, got {}", self.horizon)));
        }
        if self.steps < 1 {
            return Err(invalid("steps", "must be ≥ 1"));
        }
        if self.loads.horizon() < self.horizon {
            return Err(invalid(
                "loads.samples",
                format!("loads end at t = {} before the horizon {}", self.loads.horizon(), self.horizon),
            ));
        }
        self.solver.validate().map_err(|e| invalid("solver", e.to_string()))?;
        if !(self.output.voxel_size > 0.0) {
            return Err(invalid("output.voxel_size", "must be > 0"));
        }
        let label_ok = |l: usize| l < n;
        match &self.initial.z {
            PhaseSpec::Uniform(l) if !label_ok(*l) => return Err(invalid("initial.z.uniform", "label out of range")),
            PhaseSpec::Labels(v) => {
                if let Some(e) = v.iter().position(|&l| !label_ok(l)) {
                    return Err(invalid(format!("initial.z.labels[{e}]"), "label out of range"));
                }
            }
            PhaseSpec::HalfSpace { normal, below, above, .. } => {
                if !label_ok(*below) || !label_ok(*above) {
                    return Err(invalid("initial.z.half_space", "label out of range"));
                }
                if !(normal.norm() > 0.0) {
                    return Err(invalid("initial.z.half_space.normal", "must be nonzero"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn n_phases(&self) -> usize {
        self.material.wells.len()
    }

    pub fn build_mesh(&self, base: &Path) -> Result<TetMesh, ScenarioError> {
        match &self.mesh {
            MeshSpec::Box { cells, size, sides } => {
                build_box_mesh(*cells, *size, *sides).map_err(|e| invalid("mesh.box", e.to_string()))
            }
            MeshSpec::File { path } => {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full).map_err(|source| ScenarioError::Io { path: full, source })?;
                load_mesh(&text).map_err(|e| invalid("mesh.file", e.to_string()))
            }
        }
    }

    pub fn build_material(&self) -> Result<MaterialModel, ScenarioError> {
        let m = &self.material;
        let bulk = BulkDensity::new(&m.wells, &m.bulk, m.p, m.q).map_err(|e| invalid("material", e.to_string()))?;
        let interface =
            InterfaceDensity::new(m.interface.clone(), m.smoothing).map_err(|e| invalid("material.interface", e))?;
        Ok(MaterialModel { bulk, interface })
    }

    pub fn build_metric(&self) -> Result<DissipationMetric, ScenarioError> {
        match &self.dissipation {
            DissipationSpec::Norm(norm) => Ok(DissipationMetric::new(self.n_phases(), *norm)),
            DissipationSpec::Weights(w) => DissipationMetric::with_weights(self.n_phases(), w.clone())
                .map_err(|e| invalid("dissipation.weights", e.to_string())),
        }
    }

    pub fn initial_state(&self, mesh: &TetMesh) -> Result<State, ScenarioError> {
        let y = match &self.initial.y {
            DeformationSpec::Identity => Deformation::identity(mesh),
            DeformationSpec::Affine { matrix, offset } => Deformation::affine(mesh, matrix, offset),
        };
        let variants = self.n_phases() - 1;
        let labels = match &self.initial.z {
            PhaseSpec::Uniform(l) => vec![*l; mesh.n_tets()],
            PhaseSpec::Labels(v) => v.clone(),
            PhaseSpec::HalfSpace { normal, offset, below, above } => (0..mesh.n_tets())
                .map(|e| if normal.dot(&mesh.centroid(e)) < *offset { *below } else { *above })
                .collect(),
        };
        let z = PhaseField::new(labels, variants).map_err(|e| invalid("initial.z", e.to_string()))?;
        z.check_against(mesh).map_err(|e| invalid("initial.z", e.to_string()))?;
        Ok(State { y, z })
    }

    pub fn setup(&self, base: &Path) -> Result<Setup, ScenarioError> {
        let mesh = self.build_mesh(base)?;
        self.loads.validate(mesh.n_tets()).map_err(|e| invalid("loads", e))?;
        let material = self.build_material()?;
        let metric = self.build_metric()?;
        let initial = self.initial_state(&mesh)?;
        Ok(Setup { problem: Problem { mesh, material, loads: self.loads.clone(), metric }, initial })
    }
}

/// Apply `KEY=VAL` to the solver configuration. Keys may be dotted
/// (`competitors.n_random`); values are JSON, or plain strings.
pub fn apply_override(config: &SolverConfig, assignment: &str) -> Result<SolverConfig, ScenarioError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| invalid("--tol-override", format!("expected KEY=VAL, got `{assignment}`")))?;
    let mut doc = serde_json::to_value(config).expect("config serializes");
    let mut slot = &mut doc;
    for part in key.split('.') {
        slot = slot
            .get_mut(part)
            .ok_or_else(|| invalid(format!("solver.{key}"), "no such solver setting"))?;
    }
    *slot = serde_json::from_str(value).unwrap_or_else(|_| serde_json::Value::String(value.to_string()));
    let updated: SolverConfig =
        serde_json::from_value(doc).map_err(|e| invalid(format!("solver.{key}"), e.to_string()))?;
    updated.validate().map_err(|e| invalid(format!("solver.{key}"), e.to_string()))?;
    Ok(updated)
}
