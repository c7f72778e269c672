//! Admissibility audit: orientation of every element and a voxel estimate of
//! the Ciarlet–Nečas condition `∫_Ω det ∇y ≤ L³(y(Ω))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::energy::{determinants, Deformation};
use crate::mesh::TetMesh;
use crate::sum::pairwise_sum;
use crate::tensor3::{Mat3, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub min_det: f64,
    /// Elements with `det F ≤ 0`.
    pub inverted: Vec<usize>,
    pub orientation_ok: bool,
    /// `∫_Ω det ∇y`.
    pub det_integral: f64,
    /// Voxel estimate of `L³(y(Ω))`.
    pub image_volume: f64,
    pub voxel_size: f64,
    /// Deformed boundary area.
    pub surface_area: f64,
    /// `2 h_vox · surface_area`, the allowance for voxel resolution.
    pub slack: f64,
    pub ciarlet_necas_ok: bool,
}

const INSIDE_TOL: f64 = 1e-12;

/// Indices of voxel centers inside the deformed element with vertices `p`.
fn covered_voxels(p: [Vec3; 4], origin: Vec3, h: f64, dims: [usize; 3]) -> Vec<usize> {
    let m = Mat3::from_cols(p[1] - p[0], p[2] - p[0], p[3] - p[0]);
    let Some(minv) = m.inverse() else { return Vec::new() };
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for k in 0..3 {
        let (a, b) = p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v.0[k]), b.max(v.0[k])));
        // voxel i has center origin + (i + ½) h
        lo[k] = (((a - origin.0[k]) / h - 0.5).ceil().max(0.0)) as usize;
        hi[k] = ((((b - origin.0[k]) / h - 0.5).floor() + 1.0).max(0.0) as usize).min(dims[k]);
    }
    let mut out = Vec::new();
    for k in lo[2]..hi[2] {
        for j in lo[1]..hi[1] {
            for i in lo[0]..hi[0] {
                let c = origin + Vec3::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h, (k as f64 + 0.5) * h);
                let l = minv.mul_vec(&(c - p[0]));
                if l.0.iter().all(|&x| x >= -INSIDE_TOL) && l.0.iter().sum::<f64>() <= 1.0 + INSIDE_TOL {
                    out.push(i + dims[0] * (j + dims[1] * k));
                }
            }
        }
    }
    out
}

pub fn check_admissibility(
    mesh: &TetMesh,
    y: &Deformation,
    voxel_size: f64,
) -> Result<AdmissibilityReport, SolverError> {
    y.check_against(mesh)?;
    if !(voxel_size > 0.0) {
        return Err(SolverError::Config(format!("voxel size must be > 0, got {voxel_size}")));
    }
    let dets = determinants(mesh, y);
    let inverted: Vec<usize> = (0..dets.len()).filter(|&e| !(dets[e] > 0.0)).collect();
    let min_det = dets.iter().fold(f64::INFINITY, |m, &d| m.min(d));
    let det_integral = pairwise_sum(&dets.iter().zip(&mesh.volumes).map(|(d, v)| d * v).collect::<Vec<_>>());

    let x = &y.positions;
    let surface_area = pairwise_sum(
        &mesh
            .boundary_faces
            .iter()
            .map(|f| 0.5 * (x[f.nodes[1]] - x[f.nodes[0]]).cross(&(x[f.nodes[2]] - x[f.nodes[0]])).norm())
            .collect::<Vec<_>>(),
    );

    let mut lo = Vec3([f64::INFINITY; 3]);
    let mut hi = Vec3([f64::NEG_INFINITY; 3]);
    for p in x {
        for k in 0..3 {
            lo.0[k] = lo.0[k].min(p.0[k]);
            hi.0[k] = hi.0[k].max(p.0[k]);
        }
    }
    let dims = [0, 1, 2].map(|k| (((hi.0[k] - lo.0[k]) / voxel_size).ceil() as usize).max(1));
    let total = dims[0] * dims[1] * dims[2];
    if total > 200_000_000 {
        return Err(SolverError::Config(format!("voxel grid of {total} cells is too fine")));
    }
    let hits: Vec<Vec<usize>> = (0..mesh.n_tets())
        .into_par_iter()
        .map(|e| {
            let t = mesh.tets[e];
            covered_voxels([x[t[0]], x[t[1]], x[t[2]], x[t[3]]], lo, voxel_size, dims)
        })
        .collect();
    let mut covered = vec![false; total];
    for v in hits.into_iter().flatten() {
        covered[v] = true;
    }
    let count = covered.iter().filter(|&&c| c).count();
    let image_volume = count as f64 * voxel_size.powi(3);
    let slack = 2.0 * voxel_size * surface_area;
    Ok(AdmissibilityReport {
        min_det,
        orientation_ok: inverted.is_empty(),
        inverted,
        det_integral,
        image_volume,
        voxel_size,
        surface_area,
        slack,
        ciarlet_necas_ok: det_integral <= image_volume + slack,
    })
}
