//! Acceptance gate: one pass/fail line per criterion, with runtime bounds.
//! Runs without the libtest harness so the lines come out in order.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smasim_core::dissipation::{DissipationMetric, Norm, PhaseHistory};
use smasim_core::energy::interface::interface_energy_with;
use smasim_core::energy::{
    bulk_energy, bulk_energy_gradient, gauss_identity_check, interface_energy, interface_energy_gradient, loading,
    loading_gradient, measure_totals, AffineMap, BodyForce, BulkCoefficients, BulkDensity, Deformation,
    InterfaceDensity, InterfaceWeights, LoadProgram, LoadSample, MaterialModel,
};
use smasim_core::mesh::{build_box_mesh, partition_perimeter, BoundaryTag, BoxSides, PhaseField, TetMesh};
use smasim_core::solver::check_admissibility;
use smasim_core::tensor3::{cof, cof_derivative, det, surface_projection, InterfaceVector, Mat3, Vec3};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn smasim(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_smasim")).args(args).output().map_err(|e| e.to_string())
}

fn cube(n: usize, sides: BoxSides) -> TetMesh {
    build_box_mesh([n, n, n], [1.0; 3], sides).unwrap()
}

fn material(variants: usize, alpha: f64) -> MaterialModel {
    let mut wells = vec![Mat3::IDENTITY];
    for v in 0..variants {
        let mut d = [0.97; 3];
        d[v % 3] = 1.08;
        wells.push(Mat3::diag(d[0], d[1], d[2]));
    }
    let c: Vec<_> = (0..=variants)
        .map(|i| BulkCoefficients { a: 1.0 + 0.1 * i as f64, b: 0.5, gamma: 1.0, delta: None, kappa: 0.0 })
        .collect();
    let w = (0..=variants)
        .map(|i| InterfaceWeights { alpha: alpha * (1.0 + 0.2 * i as f64), beta: 0.3 * alpha, gamma_hat: 0.2 * alpha })
        .collect();
    MaterialModel { bulk: BulkDensity::new(&wells, &c, 4.0, 2.0).unwrap(), interface: InterfaceDensity::new(w, 1e-8).unwrap() }
}

fn random_matrix(rng: &mut ChaCha8Rng, scale: f64) -> Mat3 {
    Mat3([[0; 3]; 3].map(|r| r.map(|_: i32| rng.gen_range(-scale..scale))))
}

fn random_gradient(rng: &mut ChaCha8Rng) -> Mat3 {
    loop {
        let f = Mat3::IDENTITY + random_matrix(rng, 0.4);
        if det(&f) > 0.1 {
            return f;
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm() > 0.1 {
            return v.normalized();
        }
    }
}

/// Rotation from a normalized random quaternion.
fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    let q: [f64; 4] = [0; 4].map(|_| rng.gen_range(-1.0..1.0));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|c| c / n);
    Mat3([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])
}

fn random_deformation(mesh: &TetMesh, rng: &mut ChaCha8Rng, amplitude: f64) -> Deformation {
    let a = Mat3::IDENTITY + random_matrix(rng, 0.15);
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

fn random_labels(rng: &mut ChaCha8Rng, n: usize, variants: usize) -> PhaseField {
    PhaseField::new((0..n).map(|_| rng.gen_range(0..=variants)).collect(), variants).unwrap()
}

fn rel(a: &Mat3, b: &Mat3) -> f64 {
    (*a - *b).max_abs() / (1.0 + a.max_abs().max(b.max_abs()))
}

fn tensor_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let a = random_matrix(&mut rng, 2.0);
        let b = random_matrix(&mut rng, 2.0);
        worst = worst.max(rel(&(cof(&a).transpose() * a), &Mat3::IDENTITY.scale(det(&a))));
        worst = worst.max(rel(&cof(&(a * b)), &(cof(&a) * cof(&b))));
        let d = det(&(a * b));
        worst = worst.max((d - det(&a) * det(&b)).abs() / (1.0 + d.abs()));
    }
    ensure(worst <= 1e-11, || format!("identity residual {worst:e} > 1e-11"))?;
    let h = 1e-6;
    let mut fd_worst: f64 = 0.0;
    for _ in 0..100 {
        let a = random_matrix(&mut rng, 2.0);
        let d = cof_derivative(&a);
        for k in 0..3 {
            for l in 0..3 {
                let (mut ap, mut am) = (a, a);
                ap.0[k][l] += h;
                am.0[k][l] -= h;
                let fd = (cof(&ap) - cof(&am)).scale(0.5 / h);
                for i in 0..3 {
                    for j in 0..3 {
                        fd_worst = fd_worst.max((fd.0[i][j] - d[i][j][k][l]).abs() / (1.0 + d[i][j][k][l].abs()));
                    }
                }
            }
        }
    }
    ensure(fd_worst <= 1e-6, || format!("cof_derivative FD error {fd_worst:e} > 1e-6"))?;
    Ok(format!("identity residual {worst:.1e}, derivative error {fd_worst:.1e}"))
}

fn energy_law_suite() -> Outcome {
    let m = material(2, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let mut frame: f64 = 0.0;
    for _ in 0..100 {
        let r = random_rotation(&mut rng);
        let f = random_gradient(&mut rng);
        let n = random_unit(&mut rng);
        for phase in 0..3 {
            let w = m.bulk.density(phase, &f);
            frame = frame.max((w - m.bulk.density(phase, &(r * f))).abs() / (1.0 + w.abs()));
            let g = m.interface.g(phase, &f, &n);
            frame = frame.max((g - m.interface.g(phase, &(r * f), &n)).abs() / (1.0 + g));
            ensure(g == m.interface.g(phase, &f, &-n), || "interface density is not even in n".into())?;
        }
    }
    ensure(frame <= 1e-10, || format!("frame indifference residual {frame:e}"))?;
    let alpha_min = m.interface.min_alpha();
    for _ in 0..100 {
        let f = random_gradient(&mut rng);
        let n = random_unit(&mut rng);
        let xi = InterfaceVector::from_surface_gradient(&surface_projection(&f, &n).unwrap(), &n);
        for phase in 0..3 {
            let psi = m.interface.psi(phase, &xi);
            ensure(psi >= alpha_min * xi.norm(), || format!("Ψ = {psi} below α_min|ξ|"))?;
            for lambda in [0.0, 0.5, 2.0, 13.0] {
                let s = m.interface.psi(phase, &xi.scale(lambda));
                ensure((s - lambda * psi).abs() <= 1e-12 * (1.0 + lambda * psi), || "Ψ is not 1-homogeneous".into())?;
            }
        }
    }
    for phase in 0..3 {
        let mut last = f64::NEG_INFINITY;
        let mut s = 0.5;
        while s > 1e-12 {
            let w = m.bulk.density(phase, &Mat3::diag(1.0, s, 1.0));
            ensure(w > last, || format!("density not increasing as det → 0 (phase {phase}, s = {s})"))?;
            last = w;
            s *= 0.5;
        }
    }
    Ok(format!("frame residual {frame:.1e}"))
}

fn gradient_loads() -> LoadProgram {
    let sample = |t: f64, s: f64| LoadSample {
        t,
        body_force: BodyForce::Uniform(Vec3::new(0.3 * s, -0.2, 0.1 + s)),
        traction: Vec3::new(s, 0.5, -0.4 * s),
        target: AffineMap { matrix: Mat3::diag(1.0 + 0.1 * s, 1.0, 1.0 - 0.05 * s), offset: Vec3::new(0.0, 0.02 * s, 0.0) },
    };
    LoadProgram { samples: vec![sample(0.0, 0.0), sample(0.5, 1.0), sample(1.0, 0.3)], spring: 7.0 }
}

fn fd_error(y: &Deformation, analytic: &[Vec3], f: impl Fn(&Deformation) -> f64) -> f64 {
    let h = 1e-5;
    let scale = analytic.iter().fold(0.0_f64, |m, g| m.max(g.max_abs()));
    let mut worst: f64 = 0.0;
    for node in 0..y.positions.len() {
        for k in 0..3 {
            let (mut yp, mut ym) = (y.clone(), y.clone());
            yp.positions[node].0[k] += h;
            ym.positions[node].0[k] -= h;
            let fd = (f(&yp) - f(&ym)) / (2.0 * h);
            let g = analytic[node].0[k];
            worst = worst.max((fd - g).abs() / g.abs().max(1e-2 * scale).max(1e-12));
        }
    }
    worst
}

fn gradient_suite() -> Outcome {
    let sides = BoxSides { x_min: BoundaryTag::Gamma0, x_max: BoundaryTag::Gamma1, ..Default::default() };
    let mesh = cube(2, sides);
    ensure(mesh.n_tets() == 48, || "mesh is not 48 tets".into())?;
    let m = material(2, 0.1);
    let loads = gradient_loads();
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let y = random_deformation(&mesh, &mut rng, 0.03);
        let z = random_labels(&mut rng, 48, 2);
        let g = bulk_energy_gradient(&mesh, &y, &z, &m.bulk).unwrap();
        worst = worst.max(fd_error(&y, &g, |y| bulk_energy(&mesh, y, &z, &m.bulk)));
        let g = interface_energy_gradient(&mesh, &y, &z, &m.interface).unwrap();
        let eps = m.interface.smoothing;
        worst = worst.max(fd_error(&y, &g, |y| interface_energy_with(&mesh, y, &z, &m.interface, eps).unwrap()));
        for t in [0.2, 0.5, 0.9] {
            let g = loading_gradient(t, &mesh, &y, &loads).unwrap();
            worst = worst.max(fd_error(&y, &g, |y| loading(t, &mesh, y, &loads).unwrap()));
        }
    }
    ensure(worst <= 1e-5, || format!("gradient relative error {worst:e} > 1e-5"))?;
    Ok(format!("worst relative error {worst:.1e}"))
}

fn interior_test_field(mesh: &TetMesh, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    let on_boundary = |p: &Vec3| p.0.iter().any(|&c| c.abs() < 1e-12 || (c - 1.0).abs() < 1e-12);
    mesh.nodes
        .iter()
        .map(|p| {
            let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if on_boundary(p) {
                Vec3::ZERO
            } else {
                v
            }
        })
        .collect()
}

fn identity_suite() -> Outcome {
    let mesh = cube(3, BoxSides::default());
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let y = random_deformation(&mesh, &mut rng, 0.05);
        let v = interior_test_field(&mesh, &mut rng);
        let region: Vec<usize> = (0..mesh.n_tets()).filter(|_| rng.gen_bool(0.4)).collect();
        let r = gauss_identity_check(&mesh, &y, &region, &v).unwrap();
        worst = worst.max(r.curl.max(r.piola) / r.scale);
    }
    ensure(worst <= 1e-10, || format!("Gauss residual {worst:e}·scale"))?;
    // a cell block strictly inside the 4³ box
    let mesh = cube(4, BoxSides::default());
    let mut labels = vec![0; mesh.n_tets()];
    for k in 1..3 {
        for j in 1..3 {
            for i in 1..3 {
                let c = i + 4 * (j + 4 * k);
                labels[6 * c..6 * c + 6].fill(1);
            }
        }
    }
    let z = PhaseField::new(labels, 1).unwrap();
    let mut totals: f64 = 0.0;
    for _ in 0..10 {
        let y = random_deformation(&mesh, &mut rng, 0.04);
        let t = measure_totals(&mesh, &y, &z, 1).unwrap();
        ensure(t.interior, || "inclusion touches the boundary".into())?;
        totals = totals.max(t.max_abs());
    }
    ensure(totals <= 1e-10, || format!("measure totals {totals:e}"))?;
    Ok(format!("Gauss residual {worst:.1e}·scale, inclusion totals {totals:.1e}"))
}

fn bv_suite() -> Outcome {
    let mesh = cube(2, BoxSides::default());
    let m = material(2, 0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mut ratio: f64 = 0.0;
    for _ in 0..100 {
        let y = random_deformation(&mesh, &mut rng, 0.03);
        let z = random_labels(&mut rng, mesh.n_tets(), 2);
        let per: f64 = partition_perimeter(&mesh, &z).unwrap().iter().sum();
        let bound = interface_energy(&mesh, &y, &z, &m.interface).unwrap() / m.interface.min_alpha();
        if per > 0.0 {
            ratio = ratio.max(per / bound);
        }
    }
    ensure(ratio <= 1.0 + 1e-12, || format!("perimeter exceeds E_int/α_min by factor {ratio}"))?;
    Ok(format!("max perimeter/(E_int/α_min) = {ratio:.3}"))
}

fn dissipation_suite() -> Outcome {
    for n in 2..=9 {
        let table: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 + (i as f64 - j as f64).abs() / n as f64 }).collect())
            .collect();
        let mut metrics: Vec<_> = [Norm::L1, Norm::L2, Norm::Linf].map(|norm| DissipationMetric::new(n, norm)).into();
        metrics.push(DissipationMetric::with_weights(n, table).unwrap());
        for m in &metrics {
            for i in 0..n {
                for j in 0..n {
                    let d = m.pointwise(i, j).unwrap();
                    ensure(d == m.pointwise(j, i).unwrap() && (d > 0.0) == (i != j), || format!("axioms fail at ({i},{j})"))?;
                    for k in 0..n {
                        ensure(m.pointwise(i, k).unwrap() <= d + m.pointwise(j, k).unwrap(), || "triangle fails".into())?;
                    }
                }
            }
        }
    }
    let mesh = cube(2, BoxSides::default());
    let metric = DissipationMetric::new(3, Norm::L1);
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let times: Vec<f64> = (0..=12).map(|k| k as f64 / 12.0).collect();
    let mut fields = vec![PhaseField::uniform(mesh.n_tets(), 0, 2).unwrap()];
    for _ in 1..times.len() {
        let mut next = fields.last().unwrap().clone();
        for l in next.labels.iter_mut() {
            if rng.gen_bool(0.2) {
                *l = rng.gen_range(0..3);
            }
        }
        fields.push(next);
    }
    let history = PhaseHistory::new(&times, &fields).unwrap();
    let diss = history.dissipation(&mesh, &metric, 0.0, 1.0).unwrap();
    let jumps: f64 = fields.windows(2).map(|w| metric.total(&mesh, &w[0], &w[1]).unwrap()).sum();
    ensure((diss - jumps).abs() <= 1e-12 * (1.0 + jumps), || format!("Diss {diss} ≠ jump sum {jumps}"))?;
    for _ in 0..1000 {
        let mut p: Vec<f64> = (0..rng.gen_range(1..20)).map(|_| rng.gen_range(0.0..1.0)).collect();
        p.extend([0.0, 1.0]);
        p.sort_by(f64::total_cmp);
        let s = history.partition_sum(&mesh, &metric, &p).unwrap();
        ensure(s <= diss + 1e-12, || format!("partition sum {s} > Diss {diss}"))?;
    }
    Ok(format!("M ≤ 8 axioms, Diss = {diss:.4} over 1000 partitions"))
}

/// Parsed trace CSV: one map per row.
fn read_trace(path: &Path) -> Result<Vec<std::collections::HashMap<String, f64>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().ok_or("empty trace")?.split(',').map(String::from).collect();
    lines
        .map(|l| {
            let vals: Result<Vec<f64>, _> = l.split(',').map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| e.to_string())?;
            Ok(header.iter().cloned().zip(vals).collect())
        })
        .collect()
}

fn incremental_suite(out: &Path) -> Outcome {
    let dir = out.join("ramp");
    let s = scenario("spring_ramp_384");
    let o = smasim(&["run", "--scenario", s.to_str().unwrap(), "--out", dir.to_str().unwrap()])?;
    ensure(o.status.success(), || format!("run failed: {}", String::from_utf8_lossy(&o.stderr)))?;
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).map_err(|e| e.to_string())?;
    ensure(summary["elements"] == 384 && summary["phases"] == 2, || "not the 384-tet 2-phase scenario".into())?;
    let rows = read_trace(&dir.join("trace.csv"))?;
    ensure(rows.len() == 11, || format!("{} trace rows", rows.len()))?;
    let tol_bal = 1e-3;
    for w in rows.windows(2) {
        let (prev, r) = (&w[0], &w[1]);
        let change = r["E_total"] + r["D_step"] - prev["E_total"];
        let tol = tol_bal * (1.0 + r["E_total"].abs());
        ensure(r["lower_2sided"] - tol <= change && change <= r["upper_2sided"] + tol, || {
            format!("step {}: {} ≤ {change} ≤ {} fails", r["k"], r["lower_2sided"], r["upper_2sided"])
        })?;
        ensure(r["min_detF"] > 0.0, || format!("step {}: min det {}", r["k"], r["min_detF"]))?;
        ensure(r["Diss_cum"] >= prev["Diss_cum"], || format!("Diss decreases at step {}", r["k"]))?;
    }
    let residual = rows.last().unwrap()["balance_residual"];
    let slack = summary["accumulated_slack"].as_f64().unwrap();
    ensure(residual.abs() <= slack, || format!("|residual| {residual:e} > slack {slack:e}"))?;
    ensure(summary["monotone_ok"] == true, || "objective sequence not monotone".into())?;
    let diss = rows.last().unwrap()["Diss_cum"];
    Ok(format!("10 steps, Diss = {diss:.4}, |r_N| = {:.2e} ≤ slack {slack:.2e}", residual.abs()))
}

fn oracle_suite(out: &Path) -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["tiny_ramp", "tiny_traction", "tiny_heavy_interface"] {
        let dir = out.join(name);
        let s = scenario(name);
        let o = smasim(&["oracle", "--scenario", s.to_str().unwrap(), "--out", dir.to_str().unwrap()])?;
        ensure(o.status.success(), || format!("{name}: oracle failed: {}", String::from_utf8_lossy(&o.stderr)))?;
        let r: serde_json::Value = serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())?;
        ensure(r["labelings"] == 64, || format!("{name}: {} labelings", r["labelings"]))?;
        let gap = r["gap"].as_f64().unwrap();
        ensure(gap <= 1e-6, || format!("{name}: gap {gap:e}"))?;
        ensure(r["verdicts_agree"] == true, || format!("{name}: stability verdicts disagree"))?;
        worst = worst.max(gap);
    }
    Ok(format!("3 scenarios × 64 labelings, worst gap {worst:.1e}, verdicts agree"))
}

fn admissibility_suite() -> Outcome {
    let h = 1.0 / 64.0;
    let mesh = cube(3, BoxSides::default());
    let r = check_admissibility(&mesh, &Deformation::identity(&mesh), h).unwrap();
    ensure(r.orientation_ok && r.ciarlet_necas_ok, || "identity fails".into())?;
    ensure((r.image_volume - 1.0).abs() <= r.slack, || format!("identity image volume {}", r.image_volume))?;

    let a = cube(2, BoxSides::default());
    let shifted: Vec<Vec3> = a.nodes.iter().map(|p| *p + Vec3::new(2.0, 0.0, 0.0)).collect();
    let union = a.disjoint_union(&TetMesh::from_parts(shifted, a.tets.clone(), &[]).unwrap()).unwrap();
    let mut y = Deformation::identity(&union);
    for p in y.positions.iter_mut().skip(a.n_nodes()) {
        *p -= Vec3::new(2.0, 0.0, 0.0);
    }
    let r = check_admissibility(&union, &y, h).unwrap();
    ensure(r.orientation_ok && !r.ciarlet_necas_ok, || "overlap not detected".into())?;
    ensure((r.slack - 2.0 * h * r.surface_area).abs() < 1e-12, || "slack is not 2·h·area".into())?;
    let overlap = (r.det_integral, r.image_volume);

    let mut y = Deformation::identity(&a);
    let centre = a.nodes.iter().position(|p| (*p - Vec3::new(0.5, 0.5, 0.5)).norm() < 1e-12).unwrap();
    y.positions[centre] = Vec3::new(-0.3, 0.5, 0.5);
    let r = check_admissibility(&a, &y, h).unwrap();
    ensure(!r.orientation_ok && !r.inverted.is_empty(), || "reflected block not detected".into())?;
    Ok(format!(
        "overlap ∫det = {:.3} vs image {:.3}; {} inverted elements flagged",
        overlap.0,
        overlap.1,
        r.inverted.len()
    ))
}

fn determinism_suite(out: &Path) -> Outcome {
    let s = scenario("spring_ramp_384");
    let mut traces = Vec::new();
    for threads in ["1", "4"] {
        let dir = out.join(format!("threads_{threads}"));
        let o = smasim(&["run", "--scenario", s.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--threads", threads, "--seed", "7"])?;
        ensure(o.status.success(), || format!("run at {threads} threads failed"))?;
        traces.push(std::fs::read(dir.join("trace.csv")).map_err(|e| e.to_string())?);
    }
    ensure(traces[0] == traces[1], || "trace CSVs differ between 1 and 4 threads".into())?;
    Ok(format!("{} bytes identical at 1 and 4 threads", traces[0].len()))
}

type Criterion = (&'static str, Duration, Box<dyn Fn() -> Outcome>);

fn main() {
    let out = tempfile::tempdir().expect("temporary directory");
    let out = out.path().to_path_buf();
    let secs = Duration::from_secs;
    let criteria: Vec<Criterion> = vec![
        ("tensor identities and cofactor derivative", secs(1), Box::new(tensor_suite)),
        ("energy laws", secs(5), Box::new(energy_law_suite)),
        ("analytic gradients vs finite differences", secs(30), Box::new(gradient_suite)),
        ("Gauss identities and null-Lagrangian totals", secs(10), Box::new(identity_suite)),
        ("perimeter bounded by interface energy", secs(10), Box::new(bv_suite)),
        ("dissipation metric and trajectory dissipation", secs(5), Box::new(dissipation_suite)),
        ("384-tet spring ramp certificates", secs(300), Box::new({
            let out = out.clone();
            move || incremental_suite(&out)
        })),
        ("exhaustive oracle agreement", secs(120), Box::new({
            let out = out.clone();
            move || oracle_suite(&out)
        })),
        ("admissibility checks", secs(30), Box::new(admissibility_suite)),
        ("determinism across thread counts", Duration::MAX, Box::new({
            let out = out.clone();
            move || determinism_suite(&out)
        })),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let outcome = run();
        let elapsed = clock.elapsed();
        let verdict = match outcome {
            Ok(detail) if elapsed <= *limit => ("PASS", detail),
            Ok(detail) => ("FAIL", format!("{detail}; took {:.2} s, limit {:?}", elapsed.as_secs_f64(), limit)),
            Err(why) => ("FAIL", why),
        };
        if verdict.0 == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {}: {}: {} ({:.2} s)", i + 1, verdict.0, name, verdict.1, elapsed.as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
