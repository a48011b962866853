//! Behavior under mesh refinement that single-level tests cannot see.

use riesz_trace::geometry::{generate_structured_mesh, Domain};
use riesz_trace::hilbert::DEFAULT_RANK_TOL;
use riesz_trace::pipeline::Pipeline;
use riesz_trace::sampling::rng;
use riesz_trace::solver::{regularity_report, step_datum};
use riesz_trace::spectral::h1_equivalence_check;

#[test]
fn h1_equivalence_range_is_mesh_stable() {
    let mut ranges = Vec::new();
    let mut step_sums = Vec::new();
    for n in [8, 16, 32] {
        let mesh = generate_structured_mesh(Domain::UnitSquare, n);
        let p = Pipeline::build(&mesh, DEFAULT_RANK_TOL).unwrap();
        // the same seed draws the same smooth fields at every level
        let (lo, hi) = h1_equivalence_check(&mesh, &p.suite, &p.eigen, 50, &mut rng(11)).unwrap();
        assert!(0.0 < lo && lo <= hi && hi.is_finite());
        ranges.push((lo, hi));
        let step = regularity_report(&step_datum(&mesh), &p.pair, &p.eigen).unwrap();
        assert!(step.holds());
        step_sums.push(step.s_one_sum);
    }
    let drift = |get: fn(&(f64, f64)) -> f64| {
        let v: Vec<f64> = ranges.iter().map(get).collect();
        v.iter().copied().fold(0.0, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min)
    };
    assert!(drift(|r| r.0) < 2.0 && drift(|r| r.1) < 2.0, "{ranges:?}");
    // the step datum is not in H^{1/2}, so its s = 1 sum keeps growing
    assert!(step_sums.windows(2).all(|w| w[1] > w[0]), "{step_sums:?}");
}

#[test]
fn lift_singular_values_decay() {
    for domain in [Domain::UnitSquare, Domain::LShape] {
        let p = Pipeline::build(&generate_structured_mesh(domain, 8), DEFAULT_RANK_TOL).unwrap();
        let s = p.suite.k.singular_values();
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        assert!(s[s.len() - 1] > 0.0, "the lift is injective");
        assert!(s[s.len() - 1] < 0.25 * s[0], "{domain:?}: {s:?}");
    }
}
