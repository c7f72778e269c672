//! External loads: body force, traction on Γ1 and an elastic spring on Γ0.
//!
//! All load data are sampled on a time grid and interpolated linearly, so on
//! each load interval the rates are constant and `∂_t E` at frozen `(y, z)`
//! is affine in `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Deformation, EnergyError};
use crate::mesh::{BoundaryTag, TetMesh};
use crate::sum::{pairwise_sum, scatter};
use crate::tensor3::{Mat3, Vec3};

/// Affine map `x ↦ A x + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineMap {
    pub matrix: Mat3,
    #[serde(default)]
    pub offset: Vec3,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap { matrix: Mat3::IDENTITY, offset: Vec3::ZERO };

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.matrix.mul_vec(x) + self.offset
    }

    fn lerp(&self, o: &AffineMap, s: f64) -> AffineMap {
        AffineMap {
            matrix: self.matrix + (o.matrix - self.matrix).scale(s),
            offset: self.offset + (o.offset - self.offset).scale(s),
        }
    }

    fn rate(&self, o: &AffineMap, dt: f64) -> AffineMap {
        AffineMap {
            matrix: (o.matrix - self.matrix).scale(1.0 / dt),
            offset: (o.offset - self.offset).scale(1.0 / dt),
        }
    }
}

impl Default for AffineMap {
    fn default() -> Self {
        AffineMap::IDENTITY
    }
}

/// Body force density (force per reference volume).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyForce {
    Uniform(Vec3),
    PerElement(Vec<Vec3>),
}

impl Default for BodyForce {
    fn default() -> Self {
        BodyForce::Uniform(Vec3::ZERO)
    }
}

impl BodyForce {
    fn at(&self, e: usize) -> Vec3 {
        match self {
            BodyForce::Uniform(b) => *b,
            BodyForce::PerElement(v) => v[e],
        }
    }

    fn combine(&self, o: &BodyForce, w0: f64, w1: f64) -> BodyForce {
        match (self, o) {
            (BodyForce::Uniform(a), BodyForce::Uniform(b)) => BodyForce::Uniform(a.scale(w0) + b.scale(w1)),
            _ => {
                let n = self.len().max(o.len());
                BodyForce::PerElement((0..n).map(|e| self.at(e).scale(w0) + o.at(e).scale(w1)).collect())
            }
        }
    }

    fn len(&self) -> usize {
        match self {
            BodyForce::Uniform(_) => 0,
            BodyForce::PerElement(v) => v.len(),
        }
    }
}

/// Load values at one grid time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSample {
    pub t: f64,
    #[serde(default)]
    pub body_force: BodyForce,
    /// Traction on Γ1 (force per reference area).
    #[serde(default)]
    pub traction: Vec3,
    /// Spring target `y_D(t)` on Γ0.
    #[serde(default)]
    pub target: AffineMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadProgram {
    pub samples: Vec<LoadSample>,
    /// Spring stiffness `K ≥ 0`.
    #[serde(default)]
    pub spring: f64,
}

/// Interpolated loads (or their rates) at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadState {
    pub body_force: BodyForce,
    pub traction: Vec3,
    pub target: AffineMap,
}

impl LoadProgram {
    /// Constant zero loads on `[0, horizon]`.
    pub fn unloaded(horizon: f64) -> Self {
        LoadProgram {
            samples: vec![
                LoadSample { t: 0.0, ..Default::default() },
                LoadSample { t: horizon, ..Default::default() },
            ],
            spring: 0.0,
        }
    }

    pub fn validate(&self, n_tets: usize) -> Result<(), String> {
        if self.samples.len() < 2 {
            return Err("at least two load samples are required".into());
        }
        if self.samples[0].t != 0.0 {
            return Err(format!("first load sample must be at t = 0, got {}", self.samples[0].t));
        }
        for (k, w) in self.samples.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(format!("load times must be strictly increasing (samples {k}, {})", k + 1));
            }
        }
        for (k, s) in self.samples.iter().enumerate() {
            if let BodyForce::PerElement(v) = &s.body_force {
                if v.len() != n_tets {
                    return Err(format!(
                        "samples[{k}].body_force has {} entries, mesh has {n_tets} tetrahedra",
                        v.len()
                    ));
                }
            }
        }
        if !(self.spring >= 0.0) {
            return Err(format!("spring constant must be ≥ 0, got {}", self.spring));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    fn check_time(&self, t: f64) -> Result<(), EnergyError> {
        if !(t >= 0.0 && t <= self.horizon()) {
            return Err(EnergyError::TimeOutOfRange { t, horizon: self.horizon() });
        }
        Ok(())
    }

    /// Index `k` of the load interval `[t_k, t_{k+1}]` used for rates at `t`:
    /// right-sided at interior grid points, left-sided at the horizon.
    fn interval(&self, t: f64) -> usize {
        let last = self.samples.len() - 2;
        self.samples.windows(2).position(|w| t < w[1].t).unwrap_or(last).min(last)
    }

    pub fn is_grid_point(&self, t: f64) -> bool {
        self.samples.iter().any(|s| s.t == t)
    }

    pub fn at(&self, t: f64) -> Result<LoadState, EnergyError> {
        self.check_time(t)?;
        let k = self.interval(t);
        let (a, b) = (&self.samples[k], &self.samples[k + 1]);
        let s = (t - a.t) / (b.t - a.t);
        Ok(LoadState {
            body_force: a.body_force.combine(&b.body_force, 1.0 - s, s),
            traction: a.traction + (b.traction - a.traction).scale(s),
            target: a.target.lerp(&b.target, s),
        })
    }

    /// Rates of change on load interval `k`.
    fn rates(&self, k: usize) -> LoadState {
        let (a, b) = (&self.samples[k], &self.samples[k + 1]);
        let dt = b.t - a.t;
        LoadState {
            body_force: a.body_force.combine(&b.body_force, -1.0 / dt, 1.0 / dt),
            traction: (b.traction - a.traction).scale(1.0 / dt),
            target: a.target.rate(&b.target, dt),
        }
    }
}

// Edge-midpoint rule on a triangle; exact for quadratics.
fn midpoints<T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>>(v: [T; 3]) -> [T; 3] {
    [(v[0] + v[1]) * 0.5, (v[1] + v[2]) * 0.5, (v[2] + v[0]) * 0.5]
}

/// Work of the body force and traction, `∫ b·y + ∫_{Γ1} s·y`.
fn work_with(mesh: &TetMesh, y: &Deformation, body: &BodyForce, traction: &Vec3) -> f64 {
    let x = &y.positions;
    let mut terms: Vec<f64> = (0..mesh.n_tets())
        .into_par_iter()
        .map(|e| {
            let t = &mesh.tets[e];
            let mean = (x[t[0]] + x[t[1]] + x[t[2]] + x[t[3]]).scale(0.25);
            mesh.volumes[e] * body.at(e).dot(&mean)
        })
        .collect();
    terms.extend(mesh.boundary_faces.iter().filter(|f| f.tag == BoundaryTag::Gamma1).map(|f| {
        let mean = (x[f.nodes[0]] + x[f.nodes[1]] + x[f.nodes[2]]).scale(1.0 / 3.0);
        f.area * traction.dot(&mean)
    }));
    pairwise_sum(&terms)
}

/// Mismatch `y − y_D` at the three edge midpoints of each Γ0 face, with the
/// face area and the reference midpoints.
fn spring_mismatch<'a>(
    mesh: &'a TetMesh,
    y: &'a Deformation,
    target: &'a AffineMap,
) -> impl Iterator<Item = (f64, [Vec3; 3], [Vec3; 3])> + 'a {
    mesh.boundary_faces.iter().filter(|f| f.tag == BoundaryTag::Gamma0).map(move |f| {
        let xm = midpoints(f.nodes.map(|n| mesh.nodes[n]));
        let ym = midpoints(f.nodes.map(|n| y.positions[n]));
        let w = [0, 1, 2].map(|i| ym[i] - target.apply(&xm[i]));
        (f.area, w, xm)
    })
}

fn spring_with(mesh: &TetMesh, y: &Deformation, target: &AffineMap, k: f64) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    let terms: Vec<f64> = spring_mismatch(mesh, y, target)
        .map(|(area, w, _)| area / 3.0 * w.iter().map(Vec3::norm_squared).sum::<f64>())
        .collect();
    0.5 * k * pairwise_sum(&terms)
}

/// `W_ext(t, y) = ∫ b(t)·y + ∫_{Γ1} s(t)·y`.
pub fn external_work(t: f64, mesh: &TetMesh, y: &Deformation, program: &LoadProgram) -> Result<f64, EnergyError> {
    let s = program.at(t)?;
    Ok(work_with(mesh, y, &s.body_force, &s.traction))
}

/// `E_spr(t, y) = (K/2) ∫_{Γ0} |y − y_D(t)|²`.
pub fn spring_energy(t: f64, mesh: &TetMesh, y: &Deformation, program: &LoadProgram) -> Result<f64, EnergyError> {
    let s = program.at(t)?;
    Ok(spring_with(mesh, y, &s.target, program.spring))
}

/// Load contribution to the total energy, `−W_ext + E_spr`.
pub fn loading(t: f64, mesh: &TetMesh, y: &Deformation, program: &LoadProgram) -> Result<f64, EnergyError> {
    Ok(spring_energy(t, mesh, y, program)? - external_work(t, mesh, y, program)?)
}

/// Nodal gradient of `−W_ext + E_spr`.
pub fn loading_gradient(
    t: f64,
    mesh: &TetMesh,
    y: &Deformation,
    program: &LoadProgram,
) -> Result<Vec<Vec3>, EnergyError> {
    let s = program.at(t)?;
    let mut tet_locals: Vec<([usize; 4], [Vec3; 4])> = Vec::with_capacity(mesh.n_tets());
    for e in 0..mesh.n_tets() {
        let g = -s.body_force.at(e).scale(0.25 * mesh.volumes[e]);
        tet_locals.push((mesh.tets[e], [g; 4]));
    }
    let mut grad = scatter(mesh.n_nodes(), &tet_locals);

    let mut face_locals: Vec<([usize; 3], [Vec3; 3])> = Vec::new();
    for f in mesh.boundary_faces.iter().filter(|f| f.tag == BoundaryTag::Gamma1) {
        let g = -s.traction.scale(f.area / 3.0);
        face_locals.push((f.nodes, [g; 3]));
    }
    if program.spring > 0.0 {
        let k = program.spring;
        for (f, (area, w, _)) in mesh
            .boundary_faces
            .iter()
            .filter(|f| f.tag == BoundaryTag::Gamma0)
            .zip(spring_mismatch(mesh, y, &s.target))
        {
            // midpoint m_i is the average of nodes i and i+1
            let c = 0.5 * k * area / 3.0;
            let g = [w[0] + w[2], w[0] + w[1], w[1] + w[2]].map(|v| v.scale(c));
            face_locals.push((f.nodes, g));
        }
    }
    crate::sum::add_into(&mut grad, &scatter(mesh.n_nodes(), &face_locals));
    Ok(grad)
}

/// `∂_t E` at frozen `y` from load rates on interval `k`, evaluated at `t`.
fn time_derivative_on(
    k: usize,
    t: f64,
    mesh: &TetMesh,
    y: &Deformation,
    program: &LoadProgram,
) -> Result<f64, EnergyError> {
    let rate = program.rates(k);
    let mut v = -work_with(mesh, y, &rate.body_force, &rate.traction);
    if program.spring > 0.0 {
        let state = program.at(t)?;
        let terms: Vec<f64> = spring_mismatch(mesh, y, &state.target)
            .map(|(area, w, xm)| {
                let mut s = 0.0;
                for i in 0..3 {
                    let ydot = rate.target.apply(&xm[i]);
                    s += w[i].dot(&ydot);
                }
                area / 3.0 * s
            })
            .collect();
        v -= program.spring * pairwise_sum(&terms);
    }
    Ok(v)
}

/// Partial time derivative of the energy at frozen state.
///
/// At a load grid point the one-sided (right, or left at the horizon) value is
/// returned and the flag is set.
pub fn energy_time_derivative(
    t: f64,
    mesh: &TetMesh,
    y: &Deformation,
    program: &LoadProgram,
) -> Result<(f64, bool), EnergyError> {
    program.check_time(t)?;
    let k = program.interval(t);
    Ok((time_derivative_on(k, t, mesh, y, program)?, program.is_grid_point(t)))
}

/// `∫_{t0}^{t1} ∂_t E(θ, y) dθ` at frozen `y`, by the trapezoid rule on each
/// load interval (exact: the integrand is affine on each interval).
pub fn work_integral(
    t0: f64,
    t1: f64,
    mesh: &TetMesh,
    y: &Deformation,
    program: &LoadProgram,
) -> Result<f64, EnergyError> {
    program.check_time(t0)?;
    program.check_time(t1)?;
    if t1 < t0 {
        return Ok(-work_integral(t1, t0, mesh, y, program)?);
    }
    let mut pieces = Vec::new();
    for k in 0..program.samples.len() - 1 {
        let (a, b) = (program.samples[k].t.max(t0), program.samples[k + 1].t.min(t1));
        if b > a {
            let fa = time_derivative_on(k, a, mesh, y, program)?;
            let fb = time_derivative_on(k, b, mesh, y, program)?;
            pieces.push(0.5 * (b - a) * (fa + fb));
        }
    }
    Ok(pairwise_sum(&pieces))
}
