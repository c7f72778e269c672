//! Trace CSV, legacy VTK and JSON writers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use smasim_core::energy::bulk::element_densities;
use smasim_core::energy::{determinants, min_determinant, EnergyBreakdown};
use smasim_core::solver::{Problem, State, Trajectory};

pub const TRACE_HEADER: &str = "k,t,E_bulk,E_int,W_ext,E_spring,E_total,D_step,Diss_cum,lower_2sided,upper_2sided,\
balance_residual,min_detF,y_iters,z_sweeps";

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct OutputError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    let wrap = |source| OutputError { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(wrap)?;
    }
    std::fs::write(path, contents).map_err(wrap)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), OutputError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_file(path, &text)
}

/// 17 significant digits: enough to round-trip every double.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[allow(clippy::too_many_arguments)]
fn trace_row(
    out: &mut String,
    k: usize,
    t: f64,
    e: &EnergyBreakdown,
    reals: [f64; 6],
    y_iters: usize,
    z_sweeps: usize,
) {
    let mut cols = vec![k.to_string(), num(t), num(e.bulk), num(e.interface), num(e.external_work), num(e.spring)];
    cols.push(num(e.total));
    cols.extend(reals.iter().map(|&x| num(x)));
    cols.push(y_iters.to_string());
    cols.push(z_sweeps.to_string());
    out.push_str(&cols.join(","));
    out.push('\n');
}

/// One row for `q_0` and one per completed step.
pub fn trace_csv(problem: &Problem, traj: &Trajectory) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    let (_, det0) = min_determinant(&problem.mesh, &traj.states[0].y);
    trace_row(&mut out, 0, 0.0, &traj.initial_energy, [0.0, 0.0, 0.0, 0.0, 0.0, det0], 0, 0);
    for r in &traj.records {
        let reals = [r.step_dissipation, r.cumulative_dissipation, r.lower, r.upper, r.balance_residual, r.min_det];
        trace_row(&mut out, r.k, r.t, &r.energy, reals, r.y_iters, r.z_sweeps);
    }
    out
}

/// Legacy ASCII unstructured grid on the deformed nodes, with the phase
/// label, `det F` and the bulk energy density as cell data.
pub fn vtk(problem: &Problem, q: &State, title: &str) -> String {
    let mesh = &problem.mesh;
    let n = mesh.n_tets();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.n_nodes());
    for p in &q.y.positions {
        let _ = writeln!(s, "{} {} {}", num(p.0[0]), num(p.0[1]), num(p.0[2]));
    }
    let _ = writeln!(s, "CELLS {n} {}", 5 * n);
    for t in &mesh.tets {
        let _ = writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {n}");
    for _ in 0..n {
        s.push_str("10\n");
    }
    let _ = writeln!(s, "CELL_DATA {n}\nSCALARS phase int 1\nLOOKUP_TABLE default");
    for l in &q.z.labels {
        let _ = writeln!(s, "{l}");
    }
    let mut scalars = |name: &str, v: &[f64]| {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in v {
            let _ = writeln!(s, "{}", num(*x));
        }
    };
    scalars("detF", &determinants(mesh, &q.y));
    scalars("bulk_density", &element_densities(mesh, &q.y, &q.z, &problem.material.bulk));
    s
}
