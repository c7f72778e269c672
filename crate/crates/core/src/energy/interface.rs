//! Interface-polyconvex surface energy on phase boundaries.
//!
//! For phase `i` the density is the weighted-norm family
//! `Ψ_i(ξ) = α_i|ξ| + β_i|c| + γ̂_i|H|` on `ξ = (n, H, c) ∈ ℝ¹⁵` with
//! `H = ∇_S y × n` and `c = (cof ∇_S y) n`. Each phase-boundary face between
//! phases `i` and `j` carries `area · (Ψ_i(ξ) + Ψ_j(ξ))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{deformation_gradient, Deformation, EnergyError};
use crate::mesh::{phase_boundary, PhaseBoundary, PhaseField, TetMesh};
use crate::sum::{pairwise_sum, scatter};
use crate::tensor3::{
    cof_derivative, contract_first, cross_tensor, surface_projection, InterfaceVector, Mat3,
    Vec3,
};

/// Default smoothing of the norms on the gradient path.
pub const DEFAULT_SMOOTHING: f64 = 1e-8;

/// Relative tolerance on the mismatch between the face-intrinsic surface
/// gradient and the projected element gradients.
pub const TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceWeights {
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceDensity {
    pub phases: Vec<InterfaceWeights>,
    /// `ε_s` in `|v|_ε = √(|v|² + ε_s²) − ε_s`.
    pub smoothing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Whole,
    C,
    H,
}

fn smoothed_norm(sq: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        sq.sqrt()
    } else {
        (sq + eps * eps).sqrt() - eps
    }
}

impl InterfaceDensity {
    pub fn new(phases: Vec<InterfaceWeights>, smoothing: f64) -> Result<Self, String> {
        for (i, w) in phases.iter().enumerate() {
            if !(w.alpha > 0.0) {
                return Err(format!("phase {i}: alpha must be > 0, got {}", w.alpha));
            }
            if !(w.beta >= 0.0) || !(w.gamma_hat >= 0.0) {
                return Err(format!("phase {i}: beta and gamma_hat must be ≥ 0"));
            }
        }
        if !(smoothing >= 0.0) {
            return Err(format!("smoothing must be ≥ 0, got {smoothing}"));
        }
        Ok(InterfaceDensity { phases, smoothing })
    }

    pub fn min_alpha(&self) -> f64 {
        self.phases.iter().map(|w| w.alpha).fold(f64::INFINITY, f64::min)
    }

    /// `Ψ_i(ξ)` with norms smoothed by `eps` (`eps = 0`: exact, 1-homogeneous).
    pub fn psi_with(&self, phase: usize, xi: &InterfaceVector, eps: f64) -> f64 {
        let w = &self.phases[phase];
        let (n2, h2, c2) = (xi.n.norm_squared(), xi.h.norm_squared(), xi.c.norm_squared());
        let mut v = w.alpha * smoothed_norm(n2 + h2 + c2, eps);
        if w.beta > 0.0 {
            v += w.beta * smoothed_norm(c2, eps);
        }
        if w.gamma_hat > 0.0 {
            v += w.gamma_hat * smoothed_norm(h2, eps);
        }
        v
    }

    pub fn psi(&self, phase: usize, xi: &InterfaceVector) -> f64 {
        self.psi_with(phase, xi, 0.0)
    }

    /// `g_i(F, n) = Ψ_i(n, F×n, cof F n)`.
    pub fn g(&self, phase: usize, f: &Mat3, n: &Vec3) -> f64 {
        self.psi(phase, &InterfaceVector::from_surface_gradient(f, n))
    }

    /// Derivatives of `Ψ_i` with respect to the `H` and `c` parts.
    fn psi_partials(
        &self,
        phase: usize,
        xi: &InterfaceVector,
        eps: f64,
    ) -> Result<(Mat3, Vec3), Part> {
        let w = &self.phases[phase];
        let (h2, c2) = (xi.h.norm_squared(), xi.c.norm_squared());
        let whole = xi.n.norm_squared() + h2 + c2;
        let denom = |sq: f64, part: Part| {
            let s = (sq + eps * eps).sqrt();
            if s == 0.0 {
                Err(part)
            } else {
                Ok(s)
            }
        };
        let s = denom(whole, Part::Whole)?;
        let mut dh = xi.h.scale(w.alpha / s);
        let mut dc = xi.c.scale(w.alpha / s);
        if w.beta > 0.0 {
            dc += xi.c.scale(w.beta / denom(c2, Part::C)?);
        }
        if w.gamma_hat > 0.0 {
            dh += xi.h.scale(w.gamma_hat / denom(h2, Part::H)?);
        }
        Ok((dh, dc))
    }
}

/// Surface gradient of `y` on interior face `face`, computed from the face's
/// own three nodes: `F_S = [x_b − x_a, x_c − x_a, 0] · [X_b − X_a, X_c − X_a, n]⁻¹`.
pub fn face_surface_gradient(mesh: &TetMesh, y: &Deformation, face: usize) -> Mat3 {
    let f = &mesh.interior_faces[face];
    let rinv = face_frame_inverse(mesh, f.nodes, &f.normal);
    let [a, b, c] = f.nodes;
    let x = &y.positions;
    Mat3::from_cols(x[b] - x[a], x[c] - x[a], Vec3::ZERO) * rinv
}

fn face_frame_inverse(mesh: &TetMesh, nodes: [usize; 3], n: &Vec3) -> Mat3 {
    let [a, b, c] = nodes;
    let r = Mat3::from_cols(mesh.nodes[b] - mesh.nodes[a], mesh.nodes[c] - mesh.nodes[a], *n);
    r.inverse().expect("non-degenerate face")
}

/// Interface argument `ξ` on an interior face.
pub fn face_interface_vector(mesh: &TetMesh, y: &Deformation, face: usize) -> InterfaceVector {
    let fs = face_surface_gradient(mesh, y, face);
    InterfaceVector::from_surface_gradient(&fs, &mesh.interior_faces[face].normal)
}

/// Cost `area · (Ψ_i + Ψ_j)(ξ_f)` of a face separating phases `i ≠ j`;
/// zero when `i == j`.
pub fn face_cost(
    density: &InterfaceDensity,
    area: f64,
    xi: &InterfaceVector,
    i: usize,
    j: usize,
) -> f64 {
    if i == j {
        0.0
    } else {
        area * (density.psi(i, xi) + density.psi(j, xi))
    }
}

/// Check that both adjacent elements have the same tangential trace on `face`.
fn check_traces(mesh: &TetMesh, y: &Deformation, face: usize, fs: &Mat3) -> Result<(), EnergyError> {
    let f = &mesh.interior_faces[face];
    for e in [f.minus, f.plus] {
        let proj = surface_projection(&deformation_gradient(mesh, y, e), &f.normal)
            .map_err(|err| EnergyError::Geometry(err.to_string()))?;
        let mismatch = (proj - *fs).max_abs();
        if mismatch > TRACE_TOL * (1.0 + fs.max_abs()) {
            return Err(EnergyError::NonConforming { face, mismatch });
        }
    }
    Ok(())
}

fn boundary_of(mesh: &TetMesh, z: &PhaseField) -> Result<PhaseBoundary, EnergyError> {
    phase_boundary(mesh, z).map_err(EnergyError::Mesh)
}

/// Interfacial energy with exact (unsmoothed) norms.
pub fn interface_energy(
    mesh: &TetMesh,
    y: &Deformation,
    z: &PhaseField,
    density: &InterfaceDensity,
) -> Result<f64, EnergyError> {
    interface_energy_with(mesh, y, z, density, 0.0)
}

/// Interfacial energy with norms smoothed by `eps`.
pub fn interface_energy_with(
    mesh: &TetMesh,
    y: &Deformation,
    z: &PhaseField,
    density: &InterfaceDensity,
    eps: f64,
) -> Result<f64, EnergyError> {
    let pb = boundary_of(mesh, z)?;
    let terms: Vec<Result<f64, EnergyError>> = pb
        .faces
        .par_iter()
        .map(|pf| {
            let fs = face_surface_gradient(mesh, y, pf.face);
            check_traces(mesh, y, pf.face, &fs)?;
            let xi = InterfaceVector::from_surface_gradient(&fs, &pf.normal);
            Ok(pf.area
                * (density.psi_with(pf.plus_label, &xi, eps)
                    + density.psi_with(pf.minus_label, &xi, eps)))
        })
        .collect();
    let terms: Vec<f64> = terms.into_iter().collect::<Result<_, _>>()?;
    Ok(pairwise_sum(&terms))
}

/// Gradient of [`interface_energy_with`] at smoothing `density.smoothing`.
type FaceLocal = ([usize; 3], [Vec3; 3]);

pub fn interface_energy_gradient(
    mesh: &TetMesh,
    y: &Deformation,
    z: &PhaseField,
    density: &InterfaceDensity,
) -> Result<Vec<Vec3>, EnergyError> {
    let eps = density.smoothing;
    let pb = boundary_of(mesh, z)?;
    let locals: Vec<Result<FaceLocal, EnergyError>> = pb
        .faces
        .par_iter()
        .map(|pf| {
            let f = &mesh.interior_faces[pf.face];
            let n = pf.normal;
            let rinv = face_frame_inverse(mesh, f.nodes, &n);
            let fs = face_surface_gradient(mesh, y, pf.face);
            let xi = InterfaceVector::from_surface_gradient(&fs, &n);
            let mut dh = Mat3::ZERO;
            let mut dc = Vec3::ZERO;
            for label in [pf.plus_label, pf.minus_label] {
                let (h, c) = density
                    .psi_partials(label, &xi, eps)
                    .map_err(|_| EnergyError::Nonsmooth { face: pf.face })?;
                dh += h;
                dc += c;
            }
            // H = F_S N with N = Id × n  ⇒  ∂/∂F_S = dH Nᵀ
            let nmat = cross_tensor(&Mat3::IDENTITY, &n);
            let g_h = dh * nmat.transpose();
            // c_a = cof(F_S)_aj n_j  ⇒  ∂/∂F_S = (dc ⊗ n) : ∂cof
            let g_c = contract_first(&dc.outer(&n), &cof_derivative(&fs));
            let g = (g_h + g_c).scale(pf.area);
            // F_S = D R⁻¹  ⇒  ∂/∂D = G R⁻ᵀ, with D's columns x_b − x_a, x_c − x_a.
            let gd = g * rinv.transpose();
            let (gb, gc) = (gd.col(0), gd.col(1));
            Ok((f.nodes, [-(gb + gc), gb, gc]))
        })
        .collect();
    let locals: Vec<_> = locals.into_iter().collect::<Result<_, _>>()?;
    Ok(scatter(mesh.n_nodes(), &locals))
}
