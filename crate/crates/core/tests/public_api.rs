//! End-to-end checks through the public surface only.

use roughlab::curve_ops::measure_decay;
use roughlab::dyadic::{check_cz, cz_decompose, cz_fuzz};
use roughlab::lorentz::lorentz_norm;
use roughlab::stopping_time::fuzz;
use roughlab::{GridFunction, LorentzExponents, MultiIndexGamma};

fn unit_square(n: usize, l: f64) -> GridFunction {
    GridFunction::from_real_fn(2, n, l, |x| if x.iter().all(|&t| (0.0..1.0).contains(&t)) { 1.0 } else { 0.0 }).unwrap()
}

#[test]
fn indicator_norms_follow_the_closed_form() {
    // ||1_E||_{p,q} = (p/q)^{1/q} |E|^{1/p}, and |E| = 1 here.
    let f = unit_square(16, 4.0);
    for (p, q) in [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (2.0, 4.0)] {
        let got = lorentz_norm(&f, LorentzExponents::new(p, q).unwrap());
        let want = (p / q).powf(1.0 / q);
        assert!((got - want).abs() < 1e-12, "p={p} q={q}: {got} vs {want}");
    }
    let weak = lorentz_norm(&f, LorentzExponents::weak(1.0).unwrap());
    assert!((weak - 1.0).abs() < 1e-12);
}

#[test]
fn decomposition_of_a_point_mass_is_consistent() {
    let mut f = GridFunction::zeros(2, 16, 4.0).unwrap();
    f.values_mut()[0] = 64.0.into();
    let cz = cz_decompose(&f, 1.0).unwrap();
    assert!(!cz.cubes.is_empty());
    assert!(check_cz(&f, &cz).all());
    assert!(cz.means.iter().all(|&m| m > 1.0));
}

#[test]
fn random_decompositions_keep_their_invariants() {
    let trials = cz_fuzz(25, 16, 4.0, 42).unwrap();
    assert_eq!(trials.len(), 25);
    for t in &trials {
        assert!(t.check.all(), "trial {}: {:?}", t.trial, t.check);
        assert!(t.selected_measure <= t.measure_budget * (1.0 + 1e-12));
    }
}

#[test]
fn stopping_time_fuzz_finds_no_counterexample() {
    let report = fuzz(200, 30, 5);
    assert_eq!(report.failures, 0, "{:?}", report.worst_witness);
    assert_eq!(report.exhaustive_failures, 0);
    assert!(report.exhaustive_checked > 0);
}

#[test]
fn curve_measure_decays_at_the_square_root_rate() {
    let report = measure_decay(MultiIndexGamma::zero(), 2.0, &[16.0, 64.0, 256.0]).unwrap();
    assert!(report.warning.is_none());
    let sups: Vec<f64> = report.rows.iter().map(|r| r.normalized_sup).collect();
    let (lo, hi) = sups.iter().fold((f64::MAX, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
    assert!(lo > 0.0 && hi / lo < 2.0, "{sups:?}");
}

#[test]
fn sub_quadratic_curves_carry_a_warning() {
    let report = measure_decay(MultiIndexGamma::zero(), 1.5, &[16.0]).unwrap();
    assert!(report.warning.is_some());
    assert!(measure_decay(MultiIndexGamma::zero(), 1.0, &[16.0]).is_err());
}
