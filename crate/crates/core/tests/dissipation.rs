mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smasim_core::dissipation::{DissipationMetric, Norm, PhaseHistory};
use smasim_core::mesh::{BoxSides, PhaseField};

#[test]
fn metric_axioms_hold_exhaustively() {
    for variants in 1..=8 {
        let n = variants + 1;
        let mut metrics: Vec<DissipationMetric> =
            [Norm::L1, Norm::L2, Norm::Linf].into_iter().map(|norm| DissipationMetric::new(n, norm)).collect();
        // a non-uniform table: w_ij = 1 + |i − j|/n is a metric
        let w: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 + (i as f64 - j as f64).abs() / n as f64 }).collect())
            .collect();
        metrics.push(DissipationMetric::with_weights(n, w).unwrap());
        for m in &metrics {
            for i in 0..n {
                assert_eq!(m.pointwise(i, i).unwrap(), 0.0);
                for j in 0..n {
                    let d = m.pointwise(i, j).unwrap();
                    assert_eq!(d, m.pointwise(j, i).unwrap());
                    if i != j {
                        assert!(d > 0.0);
                    }
                    for k in 0..n {
                        assert!(m.pointwise(i, k).unwrap() <= d + m.pointwise(j, k).unwrap());
                    }
                }
            }
        }
    }
}

#[test]
fn unit_vector_norms() {
    // e_i − e_j has ℓ¹ norm 2, ℓ² norm √2 and ℓ∞ norm 1
    let m = DissipationMetric::new(4, Norm::L1);
    assert_eq!(m.pointwise(1, 3).unwrap(), 2.0);
    assert_eq!(DissipationMetric::new(4, Norm::L2).pointwise(0, 3).unwrap(), 2f64.sqrt());
    assert_eq!(DissipationMetric::new(4, Norm::Linf).pointwise(2, 0).unwrap(), 1.0);
}

#[test]
fn total_dissipation_is_a_metric_on_fields() {
    let mesh = common::cube(2, BoxSides::default());
    let metric = DissipationMetric::new(3, Norm::L1);
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut random = || PhaseField::new((0..mesh.n_tets()).map(|_| rng.gen_range(0..3)).collect(), 2).unwrap();
    for _ in 0..50 {
        let (a, b, c) = (random(), random(), random());
        let ab = metric.total(&mesh, &a, &b).unwrap();
        assert_eq!(ab, metric.total(&mesh, &b, &a).unwrap());
        assert_eq!(metric.total(&mesh, &a, &a).unwrap(), 0.0);
        let ac = metric.total(&mesh, &a, &c).unwrap();
        let cb = metric.total(&mesh, &c, &b).unwrap();
        assert!(ab <= ac + cb + 1e-14);
    }
}

#[test]
fn trajectory_dissipation_is_jump_sum_and_dominates_partitions() {
    let mesh = common::cube(2, BoxSides::default());
    let metric = DissipationMetric::new(3, Norm::L1);
    let mut rng = ChaCha8Rng::seed_from_u64(52);
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
    let jumps: f64 = (1..fields.len()).map(|k| metric.total(&mesh, &fields[k - 1], &fields[k]).unwrap()).sum();
    assert!((diss - jumps).abs() <= 1e-12 * (1.0 + jumps));
    assert_eq!(history.partition_sum(&mesh, &metric, &times).unwrap(), diss);

    for _ in 0..1000 {
        let mut p: Vec<f64> = (0..rng.gen_range(1..20)).map(|_| rng.gen_range(0.0..1.0)).collect();
        p.push(0.0);
        p.push(1.0);
        p.sort_by(f64::total_cmp);
        let s = history.partition_sum(&mesh, &metric, &p).unwrap();
        assert!(s <= diss + 1e-12, "{s} > {diss}");
    }
}
