//! Polyconvex bulk densities with shape-memory wells.
//!
//! Phase `i` has density
//!
//! ```text
//! Ŵ_i(F) = a|G|^p + b|cof G|^q + γ(det G − 1)² − δ ln det G + κ|cof G|^p/(det G)^(p−1) + c_i,
//! G = F·F_i⁻¹,
//! ```
//!
//! and `+∞` when `det F ≤ 0`. Every term is a convex function of
//! `(G, cof G, det G)`; right-multiplication by the constant `F_i⁻¹` keeps it
//! polyconvex in `F` because det and cof are multiplicative. The offset `c_i`
//! is fixed so that `Ŵ_i(F_i) = 0`.

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{deformation_gradient, Deformation, EnergyError};
use crate::mesh::{PhaseField, TetMesh};
use crate::sum::{pairwise_sum, scatter};
use crate::tensor3::{cof, cof_derivative, contract_first, det, Mat3, Vec3};

/// Coefficients of one phase as given by the user. `delta = None` selects the
/// value that makes the well stress-free (see [`stress_free_delta`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BulkCoefficients {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BulkPhase {
    pub well: Mat3,
    pub well_inverse: Mat3,
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub delta: f64,
    pub kappa: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BulkDensity {
    pub phases: Vec<BulkPhase>,
    pub p: f64,
    pub q: f64,
}

pub const DEFAULT_P: f64 = 4.0;
pub const DEFAULT_Q: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MaterialError {
    #[error("phase {phase}: well matrix is not symmetric positive definite")]
    WellNotSpd { phase: usize },
    #[error("the austenite well F_0 must be the identity")]
    AusteniteNotIdentity,
    #[error("phase {phase}: coefficient `{name}` must be ≥ 0, got {value}")]
    NegativeCoefficient { phase: usize, name: &'static str, value: f64 },
    #[error("exponent p must exceed 3 (got {0})")]
    BadP(f64),
    #[error("exponent q must be ≥ 2 (got {0})")]
    BadQ(f64),
    #[error("phase {phase}: no stress-free δ ≥ 0 exists for these coefficients (would be {value})")]
    NoStressFreeDelta { phase: usize, value: f64 },
    #[error("at least two phases are required, got {0}")]
    TooFewPhases(usize),
    #[error("{0}")]
    Other(String),
}

/// Eigenvalues of a symmetric matrix, ascending. `None` if not symmetric.
pub fn symmetric_eigenvalues(m: &Mat3) -> Option<[f64; 3]> {
    let asym = (*m - m.transpose()).max_abs();
    if asym > 1e-12 * (1.0 + m.max_abs()) || !m.is_finite() {
        return None;
    }
    let nm = Matrix3::from_fn(|i, j| m.0[i][j]);
    let mut ev: Vec<f64> = SymmetricEigen::new(nm).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    Some([ev[0], ev[1], ev[2]])
}

pub fn is_spd(m: &Mat3) -> bool {
    symmetric_eigenvalues(m).is_some_and(|ev| ev[0] > 0.0)
}

/// The δ for which `∂Ŵ/∂F` vanishes at `F = F_i`.
///
/// At `G = Id` every term has a gradient proportional to `Id`:
/// `a p 3^{(p−2)/2}`, `2 b q 3^{(q−2)/2}`, `κ (3 − p) 3^{(p−2)/2}` and `−δ`.
pub fn stress_free_delta(c: &BulkCoefficients, p: f64, q: f64) -> f64 {
    let s3 = |e: f64| 3f64.powf((e - 2.0) / 2.0);
    c.a * p * s3(p) + 2.0 * c.b * q * s3(q) + c.kappa * (3.0 - p) * s3(p)
}

impl BulkDensity {
    /// `wells[0]` must be the identity. Offsets are calibrated here.
    pub fn new(
        wells: &[Mat3],
        coefficients: &[BulkCoefficients],
        p: f64,
        q: f64,
    ) -> Result<Self, MaterialError> {
        if !(p > 3.0) {
            return Err(MaterialError::BadP(p));
        }
        if !(q >= 2.0) {
            return Err(MaterialError::BadQ(q));
        }
        if wells.len() < 2 {
            return Err(MaterialError::TooFewPhases(wells.len()));
        }
        if wells.len() != coefficients.len() {
            return Err(MaterialError::Other(format!(
                "{} wells but {} coefficient sets",
                wells.len(),
                coefficients.len()
            )));
        }
        if (wells[0] - Mat3::IDENTITY).max_abs() != 0.0 {
            return Err(MaterialError::AusteniteNotIdentity);
        }
        let mut phases = Vec::with_capacity(wells.len());
        for (i, (w, c)) in wells.iter().zip(coefficients).enumerate() {
            if !is_spd(w) {
                return Err(MaterialError::WellNotSpd { phase: i });
            }
            for (name, value) in [("a", c.a), ("b", c.b), ("gamma", c.gamma), ("kappa", c.kappa)] {
                if !(value >= 0.0) {
                    return Err(MaterialError::NegativeCoefficient { phase: i, name, value });
                }
            }
            let delta = match c.delta {
                Some(d) if !(d >= 0.0) => {
                    return Err(MaterialError::NegativeCoefficient { phase: i, name: "delta", value: d })
                }
                Some(d) => d,
                None => {
                    let d = stress_free_delta(c, p, q);
                    if d < 0.0 {
                        return Err(MaterialError::NoStressFreeDelta { phase: i, value: d });
                    }
                    d
                }
            };
            let mut phase = BulkPhase {
                well: *w,
                well_inverse: w.inverse().expect("SPD is invertible"),
                a: c.a,
                b: c.b,
                gamma: c.gamma,
                delta,
                kappa: c.kappa,
                offset: 0.0,
            };
            phase.offset = -phase.uncalibrated(&Mat3::IDENTITY, p, q);
            phases.push(phase);
        }
        Ok(BulkDensity { phases, p, q })
    }

    pub fn n_phases(&self) -> usize {
        self.phases.len()
    }

    /// `Ŵ_i(F)`; `+∞` when `det F ≤ 0`.
    pub fn density(&self, phase: usize, f: &Mat3) -> f64 {
        let ph = &self.phases[phase];
        let g = *f * ph.well_inverse;
        if !(det(&g) > 0.0) {
            return f64::INFINITY;
        }
        ph.uncalibrated(&g, self.p, self.q) + ph.offset
    }

    /// `∂Ŵ_i/∂F`, or `None` when `det F ≤ 0`.
    pub fn stress(&self, phase: usize, f: &Mat3) -> Option<Mat3> {
        let ph = &self.phases[phase];
        let g = *f * ph.well_inverse;
        let d = det(&g);
        if !(d > 0.0) {
            return None;
        }
        let (p, q) = (self.p, self.q);
        let c = cof(&g);
        let gn = g.norm();
        let cn = c.norm();

        let d_dg = g.scale(ph.a * p * gn.powf(p - 2.0));
        let mut d_dcof = c.scale(ph.b * q * cn.powf(q - 2.0));
        let mut d_ddet = 2.0 * ph.gamma * (d - 1.0) - ph.delta / d;
        if ph.kappa > 0.0 {
            d_dcof += c.scale(ph.kappa * p * cn.powf(p - 2.0) * d.powf(1.0 - p));
            d_ddet += ph.kappa * (1.0 - p) * cn.powf(p) * d.powf(-p);
        }
        let dg = d_dg + contract_first(&d_dcof, &cof_derivative(&g)) + c.scale(d_ddet);
        // G = F B  ⇒  ∂/∂F = (∂/∂G) Bᵀ
        Some(dg * ph.well_inverse.transpose())
    }

    /// Constants `(c1, c2)` with `Ŵ_i(F) ≥ c1 |F|^p − c2` for every `F`, or
    /// `None` when `γ_i = 0 < δ_i` (the determinant terms then have no floor
    /// on their own).
    ///
    /// Uses `|F B| ≥ σ_min(B)|F|`, `σ_min(F_i⁻¹) = 1/λ_max(F_i)`, and the floor
    /// `m = c_i + min_d [γ(d−1)² − δ ln d]` of the determinant terms, so
    /// `c2 = −m`. A single constant `C(−1 + |F|^p)` is not available in
    /// general: at the well `Ŵ_i = 0` while `|F_i|^p > 1`.
    pub fn coercivity_bound(&self, phase: usize) -> Option<(f64, f64)> {
        let ph = &self.phases[phase];
        let lam_max = symmetric_eigenvalues(&ph.well)?[2];
        let growth = ph.a * lam_max.powf(-self.p);
        let floor = if ph.delta == 0.0 {
            0.0
        } else if ph.gamma > 0.0 {
            let d = 0.5 * (1.0 + (1.0 + 2.0 * ph.delta / ph.gamma).sqrt());
            ph.gamma * (d - 1.0).powi(2) - ph.delta * d.ln()
        } else {
            return None;
        };
        Some((growth, -(ph.offset + floor)))
    }
}

impl BulkPhase {
    fn uncalibrated(&self, g: &Mat3, p: f64, q: f64) -> f64 {
        let terms = self.terms(g, p, q);
        terms.iter().sum()
    }

    /// The five non-constant terms at `G` (already composed with the well).
    pub fn terms(&self, g: &Mat3, p: f64, q: f64) -> [f64; 5] {
        let d = det(g);
        let c = cof(g);
        let inj = if self.kappa > 0.0 { self.kappa * c.norm().powf(p) / d.powf(p - 1.0) } else { 0.0 };
        [
            self.a * g.norm().powf(p),
            self.b * c.norm().powf(q),
            self.gamma * (d - 1.0).powi(2),
            -self.delta * d.ln(),
            inj,
        ]
    }
}

/// `Σ_e vol_e Ŵ_{z(e)}(F_e)`. `+∞` if any element is inverted.
pub fn bulk_energy(mesh: &TetMesh, y: &Deformation, z: &PhaseField, model: &BulkDensity) -> f64 {
    let terms: Vec<f64> = (0..mesh.n_tets())
        .into_par_iter()
        .map(|e| mesh.volumes[e] * model.density(z.labels[e], &deformation_gradient(mesh, y, e)))
        .collect();
    if terms.iter().any(|t| t.is_infinite()) {
        return f64::INFINITY;
    }
    pairwise_sum(&terms)
}

/// Per-element bulk energy densities (`+∞` where inverted).
pub fn element_densities(
    mesh: &TetMesh,
    y: &Deformation,
    z: &PhaseField,
    model: &BulkDensity,
) -> Vec<f64> {
    (0..mesh.n_tets())
        .into_par_iter()
        .map(|e| model.density(z.labels[e], &deformation_gradient(mesh, y, e)))
        .collect()
}

/// Nodal gradient of the energy `vol_e Ŵ(F_e)` of one element with stress `P`.
pub(crate) fn element_nodal_gradient(mesh: &TetMesh, e: usize, p: &Mat3) -> [Vec3; 4] {
    // F = Ds Dm⁻¹  ⇒  ∂E/∂Ds = vol · P Dm⁻ᵀ
    let h = (*p * mesh.ref_inverse[e].transpose()).scale(mesh.volumes[e]);
    let (g1, g2, g3) = (h.col(0), h.col(1), h.col(2));
    [-(g1 + g2 + g3), g1, g2, g3]
}

/// Node indices and gradient contributions of one element.
type Local<const N: usize> = ([usize; N], [Vec3; N]);

pub fn bulk_energy_gradient(
    mesh: &TetMesh,
    y: &Deformation,
    z: &PhaseField,
    model: &BulkDensity,
) -> Result<Vec<Vec3>, EnergyError> {
    let locals: Vec<Result<Local<4>, EnergyError>> = (0..mesh.n_tets())
        .into_par_iter()
        .map(|e| {
            let f = deformation_gradient(mesh, y, e);
            let p = model
                .stress(z.labels[e], &f)
                .ok_or(EnergyError::Inverted { element: e, det: det(&f) })?;
            Ok((mesh.tets[e], element_nodal_gradient(mesh, e, &p)))
        })
        .collect();
    let locals: Vec<_> = locals.into_iter().collect::<Result<_, _>>()?;
    Ok(scatter(mesh.n_nodes(), &locals))
}
