//! Discrete Gauss identities for the interface measures.
//!
//! For a region `R` of tetrahedra and piecewise-affine `y`, `v`:
//!
//! ```text
//! ∫_R ∇y (∇×v) = Σ_{f ⊂ ∂R} area_f (∇y × n_f) v(c_f)
//! ∫_R cof∇y : ∇v = Σ_{f ⊂ ∂R} area_f (cof∇y) n_f · v(c_f)
//! ```
//!
//! Both hold element by element (the integrands are exact under the
//! divergence theorem). Contributions of faces between two region elements
//! cancel because `(F × n)` and `(cof F) n` only see the tangential part of `F`,
//! which is continuous for conforming `y`; the Piola identity is what removes
//! the volume term in the second line.

use super::{deformation_gradient, Deformation, EnergyError};
use crate::mesh::{FaceRef, PhaseField, TetMesh};
use crate::sum::pairwise_sum;
use crate::tensor3::{cof, cross_tensor, Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussResiduals {
    /// `|∫_R ∇y(∇×v) − Σ_f (∇y×n) v area|`, max-norm over components.
    pub curl: f64,
    /// `|∫_R cof∇y:∇v − Σ_f (cof∇y) n·v area|`.
    pub piola: f64,
    /// `1 + max|∇y| · max|∇v| · area(∂R)`.
    pub scale: f64,
    /// The face sums themselves (the measures `H`, `c` tested against `v`).
    pub h_total: Vec3,
    pub c_total: f64,
}

/// Gradient of a piecewise-affine field given by nodal values on element `e`.
pub fn field_gradient(mesh: &TetMesh, v: &[Vec3], e: usize) -> Mat3 {
    let t = &mesh.tets[e];
    let ds = Mat3::from_cols(v[t[1]] - v[t[0]], v[t[2]] - v[t[0]], v[t[3]] - v[t[0]]);
    ds * mesh.ref_inverse[e]
}

/// `(∇×v)_j = ε_jlm ∂_l v_m` from the gradient `(∇v)_ml = ∂_l v_m`.
pub fn curl(grad_v: &Mat3) -> Vec3 {
    let g = &grad_v.0;
    Vec3([g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1]])
}

struct RegionFace {
    element: usize,
    normal: Vec3,
    area: f64,
    nodes: [usize; 3],
    /// Lies on ∂Ω.
    outer: bool,
}

/// Faces of the region boundary with normals pointing out of the region.
fn region_boundary(mesh: &TetMesh, in_region: &[bool]) -> Vec<RegionFace> {
    let mut out = Vec::new();
    for e in (0..mesh.n_tets()).filter(|&e| in_region[e]) {
        for fr in mesh.tet_faces[e] {
            match fr {
                FaceRef::Boundary(b) => {
                    let f = &mesh.boundary_faces[b];
                    out.push(RegionFace { element: e, normal: f.normal, area: f.area, nodes: f.nodes, outer: true });
                }
                FaceRef::Interior(i) => {
                    if in_region[mesh.across(i, e)] {
                        continue;
                    }
                    let f = &mesh.interior_faces[i];
                    let n = if f.minus == e { f.normal } else { -f.normal };
                    out.push(RegionFace { element: e, normal: n, area: f.area, nodes: f.nodes, outer: false });
                }
            }
        }
    }
    out
}

pub fn gauss_identity_check(
    mesh: &TetMesh,
    y: &Deformation,
    region: &[usize],
    v: &[Vec3],
) -> Result<GaussResiduals, EnergyError> {
    if v.len() != mesh.n_nodes() || y.positions.len() != mesh.n_nodes() {
        return Err(EnergyError::SizeMismatch(format!(
            "test field has {} values, deformation {}, mesh {} nodes",
            v.len(),
            y.positions.len(),
            mesh.n_nodes()
        )));
    }
    let mut in_region = vec![false; mesh.n_tets()];
    for &e in region {
        if e >= mesh.n_tets() {
            return Err(EnergyError::SizeMismatch(format!("region element {e} out of range")));
        }
        in_region[e] = true;
    }
    for e in (0..mesh.n_tets()).filter(|&e| in_region[e]) {
        for fr in mesh.tet_faces[e] {
            if let FaceRef::Boundary(b) = fr {
                for &n in &mesh.boundary_faces[b].nodes {
                    if v[n] != Vec3::ZERO {
                        return Err(EnergyError::TestFieldOnBoundary { node: n });
                    }
                }
            }
        }
    }

    let mut vol_h = [Vec::new(), Vec::new(), Vec::new()];
    let mut vol_c = Vec::new();
    let (mut max_f, mut max_gv) = (0.0_f64, 0.0_f64);
    for e in (0..mesh.n_tets()).filter(|&e| in_region[e]) {
        let f = deformation_gradient(mesh, y, e);
        let gv = field_gradient(mesh, v, e);
        let w = f.mul_vec(&curl(&gv)).scale(mesh.volumes[e]);
        for k in 0..3 {
            vol_h[k].push(w.0[k]);
        }
        vol_c.push(mesh.volumes[e] * cof(&f).ddot(&gv));
        max_f = max_f.max(f.norm());
        max_gv = max_gv.max(gv.norm());
    }

    let mut face_h = [Vec::new(), Vec::new(), Vec::new()];
    let mut face_c = Vec::new();
    let mut area = Vec::new();
    for RegionFace { element: e, normal: n, area: a, nodes, .. } in region_boundary(mesh, &in_region) {
        let f = deformation_gradient(mesh, y, e);
        let vc = (v[nodes[0]] + v[nodes[1]] + v[nodes[2]]).scale(1.0 / 3.0);
        let h = cross_tensor(&f, &n).mul_vec(&vc).scale(a);
        for k in 0..3 {
            face_h[k].push(h.0[k]);
        }
        face_c.push(a * cof(&f).mul_vec(&n).dot(&vc));
        area.push(a);
    }

    let h_total = Vec3([0, 1, 2].map(|k| pairwise_sum(&face_h[k])));
    let vol_h_total = Vec3([0, 1, 2].map(|k| pairwise_sum(&vol_h[k])));
    let c_total = pairwise_sum(&face_c);
    Ok(GaussResiduals {
        curl: (vol_h_total - h_total).max_abs(),
        piola: (pairwise_sum(&vol_c) - c_total).abs(),
        scale: 1.0 + max_f * max_gv * pairwise_sum(&area),
        h_total,
        c_total,
    })
}

/// Totals `J_i(Ω) = (Σ area n, Σ area ∇_S y × n, Σ area cof(∇_S y) n)` over the
/// phase boundary `S_i`, with `n` the outer normal of `Ω_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureTotals {
    pub a: Vec3,
    pub h: Mat3,
    pub c: Vec3,
    /// `Ω_i` stays away from ∂Ω (no element of phase `i` has a face on ∂Ω),
    /// so `S_i` is closed and the totals must vanish.
    pub interior: bool,
    /// Reference area of `S_i`.
    pub area: f64,
}

impl MeasureTotals {
    pub fn max_abs(&self) -> f64 {
        self.a.max_abs().max(self.h.max_abs()).max(self.c.max_abs())
    }
}

pub fn measure_totals(
    mesh: &TetMesh,
    y: &Deformation,
    z: &PhaseField,
    phase: usize,
) -> Result<MeasureTotals, EnergyError> {
    z.check_against(mesh).map_err(EnergyError::Mesh)?;
    let in_phase: Vec<bool> = z.labels.iter().map(|&l| l == phase).collect();
    let mut a = [Vec::new(), Vec::new(), Vec::new()];
    let mut h: Vec<Vec<f64>> = vec![Vec::new(); 9];
    let mut c = [Vec::new(), Vec::new(), Vec::new()];
    let mut areas = Vec::new();
    let mut interior = true;
    for RegionFace { element: e, normal: n, area, outer, .. } in region_boundary(mesh, &in_phase) {
        if outer {
            interior = false;
            continue;
        }
        let fs = crate::tensor3::surface_projection(&deformation_gradient(mesh, y, e), &n)
            .map_err(|err| EnergyError::Geometry(err.to_string()))?;
        let hf = cross_tensor(&fs, &n);
        let cf = cof(&fs).mul_vec(&n);
        for k in 0..3 {
            a[k].push(area * n.0[k]);
            c[k].push(area * cf.0[k]);
            for l in 0..3 {
                h[3 * k + l].push(area * hf.0[k][l]);
            }
        }
        areas.push(area);
    }
    let mut hm = Mat3::ZERO;
    for k in 0..3 {
        for l in 0..3 {
            hm.0[k][l] = pairwise_sum(&h[3 * k + l]);
        }
    }
    Ok(MeasureTotals {
        a: Vec3([0, 1, 2].map(|k| pairwise_sum(&a[k]))),
        h: hm,
        c: Vec3([0, 1, 2].map(|k| pairwise_sum(&c[k]))),
        interior,
        area: pairwise_sum(&areas),
    })
}
