#![allow(dead_code)]

use rand::Rng;
use smasim_core::dissipation::{DissipationMetric, Norm};
use smasim_core::energy::{
    AffineMap, BulkCoefficients, BulkDensity, Deformation, InterfaceDensity, InterfaceWeights,
    LoadProgram, LoadSample, MaterialModel,
};
use smasim_core::mesh::{build_box_mesh, BoxSides, TetMesh};
use smasim_core::solver::Problem;
use smasim_core::tensor3::{Mat3, Vec3};

pub fn coeffs(a: f64, b: f64, gamma: f64) -> BulkCoefficients {
    BulkCoefficients { a, b, gamma, delta: None, kappa: 0.0 }
}

/// Austenite plus `variants` martensite variants stretched along successive axes.
pub fn material(variants: usize, alpha: f64) -> MaterialModel {
    let mut wells = vec![Mat3::IDENTITY];
    for v in 0..variants {
        let mut d = [0.97; 3];
        d[v % 3] = 1.08;
        wells.push(Mat3::diag(d[0], d[1], d[2]));
    }
    let c: Vec<_> = (0..=variants).map(|i| coeffs(1.0 + 0.1 * i as f64, 0.5, 1.0)).collect();
    let bulk = BulkDensity::new(&wells, &c, 4.0, 2.0).unwrap();
    let w: Vec<_> = (0..=variants)
        .map(|i| InterfaceWeights { alpha: alpha * (1.0 + 0.2 * i as f64), beta: 0.3 * alpha, gamma_hat: 0.2 * alpha })
        .collect();
    MaterialModel { bulk, interface: InterfaceDensity::new(w, 1e-8).unwrap() }
}

pub fn cube(n: usize, sides: BoxSides) -> TetMesh {
    build_box_mesh([n, n, n], [1.0; 3], sides).unwrap()
}

pub fn clamped_x() -> BoxSides {
    use smasim_core::mesh::BoundaryTag::Gamma0;
    BoxSides { x_min: Gamma0, x_max: Gamma0, ..Default::default() }
}

/// Spring target `diag(1 + strain·t/T, 1, 1)` ramping on `[0, T]`.
pub fn stretch_ramp(horizon: f64, strain: f64, spring: f64) -> LoadProgram {
    let target = |s: f64| AffineMap { matrix: Mat3::diag(1.0 + s, 1.0, 1.0), offset: Vec3::ZERO };
    LoadProgram {
        samples: vec![
            LoadSample { t: 0.0, target: target(0.0), ..Default::default() },
            LoadSample { t: horizon, target: target(strain), ..Default::default() },
        ],
        spring,
    }
}

pub fn problem(mesh: TetMesh, material: MaterialModel, loads: LoadProgram, metric: DissipationMetric) -> Problem {
    Problem { mesh, material, loads, metric }
}

pub fn l1(n_phases: usize) -> DissipationMetric {
    DissipationMetric::new(n_phases, Norm::L1)
}

/// Random admissible deformation: a random well-conditioned affine map plus a
/// small nodal perturbation.
pub fn random_deformation<R: Rng>(mesh: &TetMesh, rng: &mut R, amplitude: f64) -> Deformation {
    let mut a = Mat3::IDENTITY;
    for i in 0..3 {
        for j in 0..3 {
            a.0[i][j] += rng.gen_range(-0.15..0.15);
        }
    }
    let d = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let mut y = Deformation::affine(mesh, &a, &d);
    for p in y.positions.iter_mut() {
        *p += Vec3::new(
            rng.gen_range(-amplitude..amplitude),
            rng.gen_range(-amplitude..amplitude),
            rng.gen_range(-amplitude..amplitude),
        );
    }
    y
}

pub fn random_matrix<R: Rng>(rng: &mut R, scale: f64) -> Mat3 {
    let mut a = Mat3::ZERO;
    for i in 0..3 {
        for j in 0..3 {
            a.0[i][j] = rng.gen_range(-scale..scale);
        }
    }
    a
}

/// Random rotation from a normalized quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Mat3 {
    let q: [f64; 4] = [0, 1, 2, 3].map(|_| rng.gen_range(-1.0..1.0));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|c| c / n);
    Mat3([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])
}
