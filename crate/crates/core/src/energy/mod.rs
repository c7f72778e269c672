//! Energy functionals and their nodal gradients.
//!
//! The total energy is `E(t, y, z) = E_b + E_int − W_ext(t, y) + E_spr(t, y)`.
//! The spring term enters with a plus sign so that it penalizes distance from
//! the target map on Γ0.

pub mod bulk;
pub mod identities;
pub mod interface;
pub mod loading;

use serde::{Deserialize, Serialize};

use crate::mesh::{MeshError, PhaseField, TetMesh};
use crate::sum::add_into;
use crate::tensor3::{det, Mat3, Vec3};

pub use bulk::{bulk_energy, bulk_energy_gradient, BulkCoefficients, BulkDensity, MaterialError};
pub use identities::{gauss_identity_check, measure_totals, GaussResiduals, MeasureTotals};
pub use interface::{interface_energy, interface_energy_gradient, InterfaceDensity, InterfaceWeights};
pub use loading::{
    energy_time_derivative, external_work, loading, loading_gradient, spring_energy, work_integral,
    AffineMap, BodyForce, LoadProgram, LoadSample,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnergyError {
    #[error("element {element} is not orientation preserving (det F = {det})")]
    Inverted { element: usize, det: f64 },
    #[error("tangential traces disagree on interior face {face} (mismatch {mismatch})")]
    NonConforming { face: usize, mismatch: f64 },
    #[error("interface norm is not differentiable on face {face}; use a positive smoothing")]
    Nonsmooth { face: usize },
    #[error("time {t} is outside the load horizon [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("test field must vanish on ∂Ω where the region touches it (node {node})")]
    TestFieldOnBoundary { node: usize },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Nodal deformed positions of a continuous piecewise-affine map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deformation {
    pub positions: Vec<Vec3>,
}

impl Deformation {
    pub fn identity(mesh: &TetMesh) -> Self {
        Deformation { positions: mesh.nodes.clone() }
    }

    pub fn affine(mesh: &TetMesh, a: &Mat3, d: &Vec3) -> Self {
        Deformation { positions: mesh.nodes.iter().map(|x| a.mul_vec(x) + *d).collect() }
    }

    pub fn check_against(&self, mesh: &TetMesh) -> Result<(), EnergyError> {
        if self.positions.len() != mesh.n_nodes() {
            return Err(EnergyError::SizeMismatch(format!(
                "deformation has {} nodes, mesh has {}",
                self.positions.len(),
                mesh.n_nodes()
            )));
        }
        Ok(())
    }

    /// `self + s·dir`.
    pub fn stepped(&self, dir: &[Vec3], s: f64) -> Deformation {
        Deformation {
            positions: self.positions.iter().zip(dir).map(|(x, d)| *x + d.scale(s)).collect(),
        }
    }
}

/// Constant gradient `F_e` of `y` on element `e`.
pub fn deformation_gradient(mesh: &TetMesh, y: &Deformation, e: usize) -> Mat3 {
    let t = &mesh.tets[e];
    let x = &y.positions;
    let ds = Mat3::from_cols(x[t[1]] - x[t[0]], x[t[2]] - x[t[0]], x[t[3]] - x[t[0]]);
    ds * mesh.ref_inverse[e]
}

/// `det F_e` for every element.
pub fn determinants(mesh: &TetMesh, y: &Deformation) -> Vec<f64> {
    crate::sum::par_collect(mesh.n_tets(), |e| det(&deformation_gradient(mesh, y, e)))
}

/// Element with the smallest determinant and its value.
pub fn min_determinant(mesh: &TetMesh, y: &Deformation) -> (usize, f64) {
    determinants(mesh, y)
        .into_iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (e, d)| if d < acc.1 { (e, d) } else { acc })
}

/// Bulk and interface densities of all phases.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    pub bulk: BulkDensity,
    pub interface: InterfaceDensity,
}

impl MaterialModel {
    pub fn n_phases(&self) -> usize {
        self.bulk.n_phases()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub bulk: f64,
    pub interface: f64,
    pub external_work: f64,
    pub spring: f64,
    pub total: f64,
}

/// Total energy with its parts (interface norms unsmoothed). An inverted
/// element makes `bulk` and `total` infinite.
pub fn total_energy(
    t: f64,
    mesh: &TetMesh,
    y: &Deformation,
    z: &PhaseField,
    material: &MaterialModel,
    loads: &LoadProgram,
) -> Result<EnergyBreakdown, EnergyError> {
    y.check_against(mesh)?;
    z.check_against(mesh)?;
    let bulk = bulk_energy(mesh, y, z, &material.bulk);
    let external_work = external_work(t, mesh, y, loads)?;
    let spring = spring_energy(t, mesh, y, loads)?;
    if bulk.is_infinite() {
        return Ok(EnergyBreakdown {
            bulk,
            interface: f64::NAN,
            external_work,
            spring,
            total: f64::INFINITY,
        });
    }
    let interface = interface_energy(mesh, y, z, &material.interface)?;
    Ok(EnergyBreakdown {
        bulk,
        interface,
        external_work,
        spring,
        total: bulk + interface - external_work + spring,
    })
}

/// Total energy with the interface norms smoothed as on the gradient path;
/// `+∞` for inverted states.
pub fn smoothed_total_energy(
    t: f64,
    mesh: &TetMesh,
    y: &Deformation,
    z: &PhaseField,
    material: &MaterialModel,
    loads: &LoadProgram,
) -> Result<f64, EnergyError> {
    let bulk = bulk_energy(mesh, y, z, &material.bulk);
    if bulk.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let int = interface::interface_energy_with(mesh, y, z, &material.interface, material.interface.smoothing)?;
    Ok(bulk + int + loading(t, mesh, y, loads)?)
}

/// Gradient of [`smoothed_total_energy`] with respect to nodal positions.
pub fn total_gradient(
    t: f64,
    mesh: &TetMesh,
    y: &Deformation,
    z: &PhaseField,
    material: &MaterialModel,
    loads: &LoadProgram,
) -> Result<Vec<Vec3>, EnergyError> {
    let mut g = bulk_energy_gradient(mesh, y, z, &material.bulk)?;
    add_into(&mut g, &interface_energy_gradient(mesh, y, z, &material.interface)?);
    add_into(&mut g, &loading_gradient(t, mesh, y, loads)?);
    Ok(g)
}
