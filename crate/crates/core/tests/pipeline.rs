mod common;

use common::{load, normalized_error, poly, span_distance, system};
use nalgebra::DVector;
use realrad::gif::prolong_rows;
use realrad::numlin::{rank_kernel, SubspaceBasis};
use realrad::pipeline::{
    bench_geometric, geometric_polynomial, gif_m, linear_generator_error, write_bench_csv,
    PipelineConfig, RadicalReport, TerminationReason,
};
use realrad::polysys::{coefficient_matrix, monomial_count, PolySystem};
use realrad::report::to_json;
use realrad::solver::{Method, SolverConfig};

fn run(p: &PolySystem) -> RadicalReport {
    gif_m(p, &PipelineConfig::default()).unwrap()
}

/// Every input polynomial lies in the ideal of the final generators, checked
/// in the span of their prolongations.
fn assert_sandwich(rep: &RadicalReport) {
    let n = rep.input.nvars();
    let g = &rep.final_generators;
    let dg = g.degree();
    let top = rep.input.degree().max(dg);
    let rows = coefficient_matrix(g, dg).unwrap().matrix;
    let prolonged = prolong_rows(&rows, n, dg, top - dg).unwrap();
    let span = SubspaceBasis::span_of(&prolonged.transpose(), 1e-10).unwrap();
    for p in rep.input.polys() {
        let one = PolySystem::new(n, vec![p.clone()]).unwrap();
        let v: DVector<f64> = coefficient_matrix(&one, top).unwrap().matrix.row(0).transpose();
        let v = &v / v.norm();
        assert!((&v - span.project(&v)).norm() <= 1e-8, "input {p} not in the ideal");
    }
}

fn assert_vanish(rep: &RadicalReport, points: &[Vec<f64>]) {
    for g in rep.final_generators.polys() {
        let g = g.normalized();
        for x in points {
            assert!(g.eval(x).abs() <= 1e-6, "{g} at {x:?}");
        }
    }
}

#[test]
fn involutive_input_is_returned() {
    let p = load("mwz41.poly");
    let rep = run(&p);
    assert_eq!(rep.rounds.len(), 1);
    assert!(rep.terminated);
    assert_eq!(rep.reason, TerminationReason::RankEqualsDim);
    let r = &rep.rounds[0];
    assert_eq!((r.kernel_dim, r.rank), (7, 7));
    assert_eq!(r.reduction_factor, (10, 7));
    for q in p.polys() {
        assert!(span_distance(&rep.final_generators, q, 2) < 1e-8);
    }
    assert_eq!(rep.final_generators.len(), 3);
    assert_sandwich(&rep);
    assert_vanish(&rep, &[vec![1.0, 1.0, 1.0], vec![0.0, 0.0, 0.0]]);
}

#[test]
fn sphere_and_paraboloid_take_two_rounds() {
    let rep = run(&load("mwz43.poly"));
    assert_eq!(rep.rounds.len(), 2);
    let (r1, r2) = (&rep.rounds[0], &rep.rounds[1]);
    assert_eq!(r1.reduction_factor, (20, 12));
    assert_eq!((r1.kernel_dim, r1.rank), (12, 7));
    assert!(r1.solution.kernel.dim() >= 13);
    assert!(span_distance(&r1.new_generators, &poly(3, "x3 - 1"), r1.new_generators.degree()) < 1e-6);
    assert_eq!(r2.reduction_factor, (10, 5));
    assert_eq!((r2.kernel_dim, r2.rank), (5, 5));
    assert!(rep.terminated);
    assert_sandwich(&rep);
    let ring: Vec<Vec<f64>> = (0..8)
        .map(|k| {
            let t = k as f64 * 0.7;
            vec![t.cos(), t.sin(), 1.0]
        })
        .collect();
    assert_vanish(&rep, &ring);
}

#[test]
fn octic_pair_reduces_to_the_square_root() {
    let rep = run(&load("deg8.poly"));
    let target = poly(1, &format!("x1^2 - {}", 2f64.sqrt()));
    assert_eq!(rep.final_generators.len(), 1);
    assert!(normalized_error(&rep.final_generators.polys()[0], &target) <= 1e-8);
    assert_sandwich(&rep);
    let r = 2f64.powf(0.25);
    assert_vanish(&rep, &[vec![r], vec![-r]]);
}

#[test]
fn round_one_reduction_factor_is_exact() {
    for name in ["mwz41.poly", "mwz42.poly", "mwz44.poly", "cyl2.poly", "cyl3.poly"] {
        let rep = run(&load(name));
        let r = &rep.rounds[0];
        let n = rep.input.nvars();
        let full = monomial_count(n, r.gif.output.degree()) as usize;
        let m = rank_kernel(r.gif.output.rowspace().matrix(), 1e-10).unwrap().rank;
        assert_eq!(r.reduction_factor, (full, full - m), "{name}");
        assert_eq!(r.moment_side_reduced, full - m);
        assert!(r.rank <= r.solved_side);
        assert!(r.solve.converged, "{name}");
        assert!(r.solve.final_residual <= 1e-12);
    }
}

#[test]
fn circle_is_its_own_radical() {
    let rep = run(&load("cyl2.poly"));
    assert_eq!(rep.rounds.len(), 1);
    assert_eq!(rep.rounds[0].reduction_factor, (6, 5));
    assert_vanish(&rep, &[vec![1.0, 0.0], vec![0.6, 0.8]]);
}

#[test]
fn kernel_dims_do_not_grow() {
    for name in ["mwz43.poly", "deg8.poly", "quartic.poly"] {
        let rep = run(&load(name));
        for w in rep.rounds.windows(2) {
            if w[0].gif.output.degree() == w[1].gif.output.degree() {
                assert!(w[1].kernel_dim <= w[0].kernel_dim, "{name}");
            }
        }
    }
}

#[test]
fn zero_system_is_an_error() {
    let z = system(2, &["0"]);
    assert!(gif_m(&z, &PipelineConfig::default()).is_err());
}

#[test]
fn small_geometric_sweep() {
    let rows = bench_geometric(7, &PipelineConfig::default()).unwrap();
    assert_eq!(rows.iter().map(|r| r.d).collect::<Vec<_>>(), vec![1, 3, 5, 7]);
    for r in &rows {
        assert!(r.generator_error <= 1e-6, "d={} err={}", r.d, r.generator_error);
    }
    let mut out = Vec::new();
    write_bench_csv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "d,seconds,iterations,residual,generator_error");
    assert_eq!(text.lines().count(), 5);
    assert!(bench_geometric(4, &PipelineConfig::default()).is_err());

    let p3 = geometric_polynomial(3);
    assert_eq!(p3.len(), 4);
    let rep = run(&PolySystem::new(1, vec![p3]).unwrap());
    assert!(linear_generator_error(&rep.final_generators) <= 1e-6);
}

#[test]
fn json_report_follows_the_schema() {
    let rep = run(&load("quartic.poly"));
    let v: serde_json::Value = serde_json::from_str(&to_json(&rep)).unwrap();
    assert!(v["input"].is_array() || v["input"].is_string());
    assert!(v["final_generators"].as_array().unwrap().iter().all(|g| g.is_string()));
    assert_eq!(v["terminated"], serde_json::Value::Bool(true));
    assert_eq!(v["reason"], "rank_equals_dim");
    let rounds = v["rounds"].as_array().unwrap();
    assert_eq!(rounds.len(), rep.rounds.len());
    for r in rounds {
        for key in ["k", "l", "degree", "kernel_dim"] {
            assert!(r["gif"][key].is_u64(), "gif.{key}");
        }
        for key in ["full_side", "eta", "m"] {
            assert!(r["moment"][key].is_u64(), "moment.{key}");
        }
        assert!(r["moment"]["faces"].as_array().unwrap().iter().all(|f| f.is_u64()));
        assert!(r["solve"]["method"].is_string());
        assert!(r["solve"]["iterations"].is_u64());
        assert!(r["solve"]["residual"].is_f64());
        assert!(r["solve"]["seconds"].is_f64());
        assert!(r["rank"].is_u64());
        assert!(r["new_generators"].as_array().unwrap().iter().all(|g| g.is_string()));
    }
}

#[test]
fn contradictory_system_has_the_unit_ideal() {
    let rep = run(&system(2, &["x1", "x1 - 1"]));
    assert!(rep.terminated);
    assert_eq!(rep.rounds[0].kernel_dim, 0);
    assert_eq!(rep.final_generators.len(), 1);
    let one = &rep.final_generators.polys()[0];
    assert_eq!(one.degree(), Some(0));
    assert!((one.eval(&[3.0, -2.0]) - 1.0).abs() < 1e-15);
}

#[test]
fn projections_with_restarts_match_douglas_rachford() {
    for name in ["mwz42.poly", "mwz44.poly", "cyl2.poly"] {
        let p = load(name);
        let ranks = |method| {
            let cfg = PipelineConfig {
                restarts: 4,
                solver: SolverConfig { method, ..SolverConfig::default() },
                ..PipelineConfig::default()
            };
            gif_m(&p, &cfg).unwrap().rounds.iter().map(|r| r.rank).collect::<Vec<_>>()
        };
        assert_eq!(ranks(Method::Map), ranks(Method::Dr), "{name}");
    }
}
