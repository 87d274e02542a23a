use super::*;
use crate::littlewood_paley::{build_lp_family, SquareFlavor};
use crate::littlewood_paley::square_envelope;
use proptest::prelude::*;
use rand::Rng;

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cosine(n: usize) -> CircleFunction {
    CircleFunction::from_fn(n, |a| real((2.0 * PI * a).cos())).unwrap()
}

fn rel(a: &GridFunction, b: &GridFunction) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm()
}

#[test]
fn lacunary_basics() {
    let g1 = lacunary_omega(1, 8, 64).unwrap();
    assert!((g1.sup_norm() - 1.0).abs() < 1e-14);
    assert!((g1.eval(0.1) - Complex64::from_polar(1.0, 2.0 * PI * 0.8)).norm() < 1e-12);
    for n in 1..=4 {
        let g = lacunary_omega(n, 4, 2048).unwrap();
        assert!((g.lp_norm(2.0) - 1.0).abs() < 1e-12);
        assert!(g.mean().norm() < 1e-14);
    }
}

#[test]
fn lacunary_fourth_moment_counts_quadruples() {
    // Only the trivial solutions of C^a + C^b = C^c + C^d survive: 2N^2 - N.
    for &(n, c) in &[(3usize, 3u64), (5, 2), (4, 4)] {
        let g = lacunary_omega(n, c, 4096).unwrap();
        let direct = g.lp_norm(4.0).powi(4);
        // Spectral route: sum over the autocorrelation of the coefficients.
        let modes = g.modes(1e-12);
        let mut spectral = 0.0;
        for a in &modes {
            for b in &modes {
                for cc in &modes {
                    for d in &modes {
                        if a.0 + b.0 == cc.0 + d.0 {
                            spectral += (a.1 * b.1 * cc.1.conj() * d.1.conj()).re;
                        }
                    }
                }
            }
        }
        let count = (2 * n * n - n) as f64 / (n * n) as f64;
        assert!((direct - spectral).abs() < 1e-10, "{direct} vs {spectral}");
        assert!((direct - count).abs() < 1e-10);
    }
}

#[test]
fn lacunary_resolution_cap() {
    let err = lacunary_omega(3, 8, 1024).unwrap_err();
    assert!(matches!(err, LabError::Validation(_)));
    assert!(err.to_string().contains("N <= 2"), "{err}");
    assert!(lacunary_omega(3, 1, 1024).is_err());
}

#[test]
fn truncation_properties() {
    let big = truncated_omega(4, 3, 0.49, 1024).unwrap();
    let g = lacunary_omega(4, 3, 1024).unwrap();
    if g.sup_norm() < big.threshold {
        assert_eq!(big.excised_measure, 0.0);
    }
    let mut last = f64::INFINITY;
    for &e in &[0.01, 0.1, 0.2, 0.3, 0.45] {
        let t = truncated_omega(6, 3, e, 4096).unwrap();
        assert!(t.omega.sup_norm() <= t.threshold + t.subtracted_mean.norm() + 1e-12);
        assert!(t.omega.mean().norm() < 1e-14);
        assert!(t.excised_measure <= last);
        last = t.excised_measure;
    }
    // A threshold above the supremum keeps everything.
    let n = 2usize;
    let t = truncated_omega(n, 3, 0.49, 64).unwrap();
    let g = lacunary_omega(n, 3, 64).unwrap();
    assert!(g.sup_norm() > t.threshold || t.omega.values().iter().zip(g.values()).all(|(a, b)| (a - b).norm() < 1e-14));
    assert!(truncated_omega(2, 3, 0.5, 64).is_err());
}

#[test]
fn kernel_closed_form_and_rejections() {
    let k = make_kernel(&cosine(32), 128, 16.0, (0, 0)).unwrap();
    for (idx, v) in k.base.values().iter().enumerate() {
        let p = k.base.point(idx);
        let r = p[0].hypot(p[1]);
        let want = if r == 0.0 { 0.0 } else { p[0] / (r * r * r) * annulus(r) };
        assert!((v - want).norm() < 1e-8, "{v} vs {want}");
    }
    let zero = make_kernel(&CircleFunction::zero(16).unwrap(), 64, 16.0, (0, 0)).unwrap();
    assert_eq!(zero.base.sup_norm(), 0.0);
    let one = CircleFunction::from_fn(16, |_| real(1.0)).unwrap();
    assert!(matches!(make_kernel(&one, 64, 16.0, (0, 0)), Err(LabError::Validation(_))));
    assert!(matches!(make_kernel(&cosine(16), 64, 16.0, (0, 3)), Err(LabError::NumericalGuard(_))));
}

#[test]
fn shell_weight_integrates_to_ln2() {
    let rule = composite(64, 0.25, 4.0, |a, b| gauss_legendre(16, a, b));
    let total = rule.integrate(|s| shell_weight(s) / s);
    assert!((total - LN_2).abs() < 1e-12, "{total}");
}

#[test]
fn constant_and_zero_inputs() {
    let f = GridFunction::from_real_fn(2, 128, 64.0, |_| 3.0).unwrap();
    let t = apply_t(&cosine(32), &f, (-2, 2)).unwrap();
    assert!(t.sup_norm() <= 1e-8 * 3.0 * cosine(32).l1_norm());
    let t0 = apply_t(&CircleFunction::zero(32).unwrap(), &f, (-2, 2)).unwrap();
    assert_eq!(t0.sup_norm(), 0.0);
}

#[test]
fn riesz_multiplier_oracle() {
    let rep = riesz_oracle(512, 256.0, (-4, 4), 5, 11).unwrap();
    assert!((rep.kappa / (2.0 * PI) - 1.0).abs() < 0.01, "kappa {}", rep.kappa);
    for e in &rep.errors {
        assert!(*e <= 0.02, "relative error {e} (band {:?})", rep.band);
    }
}

#[test]
fn modal_shell_matches_sampled_kernel() {
    // One shell applied through the exact symbol against the FFT convolution
    // with the radially averaged, grid-sampled kernel.
    let (n, side) = (512, 64.0);
    let omega = cosine(32);
    let base = make_kernel(&omega, n, side, (0, 0)).unwrap().base;
    let avg = base.radial_average().unwrap();
    let f = band_limited_input(2, n, side, 0.0, 0.05, &mut stream_rng(3, 0)).unwrap();
    let brute = f.apply_table(&avg.spectrum());
    let modal = apply_t(&omega, &f, (0, 0)).unwrap();
    // The sampled kernel carries grid aliasing the exact symbol does not.
    let e = rel(&modal, &brute);
    assert!(e < 1e-3, "relative gap {e}");
}

#[test]
fn linearity_in_f_and_omega() {
    let (n, side) = (128, 64.0);
    let f = band_limited_input(2, n, side, 0.0, 0.5, &mut stream_rng(5, 0)).unwrap();
    let g = band_limited_input(2, n, side, 0.0, 0.5, &mut stream_rng(5, 1)).unwrap();
    let w1 = cosine(32);
    let w2 = CircleFunction::from_fn(32, |a| Complex64::from_polar(1.0, 2.0 * PI * 3.0 * a)).unwrap();
    let (a, b) = (Complex64::new(0.7, -0.2), Complex64::new(-1.3, 0.5));
    let j = (-1, 2);
    let lhs = apply_t(&w1, &f.axpby(a, &g, b).unwrap(), j).unwrap();
    let rhs = apply_t(&w1, &f, j).unwrap().axpby(a, &apply_t(&w1, &g, j).unwrap(), b).unwrap();
    assert!(rel(&lhs, &rhs) < 1e-10);
    let lhs = apply_t(&w1.axpby(a, &w2, b).unwrap(), &f, j).unwrap();
    let rhs = apply_t(&w1, &f, j).unwrap().axpby(a, &apply_t(&w2, &f, j).unwrap(), b).unwrap();
    assert!(rel(&lhs, &rhs) < 1e-10);
}

#[test]
fn scale_covariance() {
    // T_{J-1} (delta_{-1} f) = delta_{-1} (T_J f).
    let (n, side) = (256, 64.0);
    // Dilation acts on the continuum transform, so the input must be
    // localized as well as effectively band-limited.
    let f = GridFunction::from_real_fn(2, n, side, |x| {
        let (u, v) = (x[0] - 1.0, x[1] + 0.5);
        (-(u * u + v * v) / (2.0 * 1.5 * 1.5)).exp() * (1.0 + 0.3 * u)
    })
    .unwrap();
    let omega = CircleFunction::from_fn(32, |a| real((2.0 * PI * a).cos() + 0.5 * (6.0 * PI * a).sin())).unwrap();
    let lhs = apply_t(&omega, &f.dilate(-1).unwrap(), (-2, 1)).unwrap();
    let rhs = apply_t(&omega, &f, (-1, 2)).unwrap().dilate(-1).unwrap();
    let e = rel(&lhs, &rhs);
    assert!(e < 1e-6, "covariance gap {e}");
}

#[test]
fn maximal_operator_dominates_members() {
    let (n, side) = (128, 32.0);
    let mut rng = stream_rng(21, 0);
    let f = GridFunction::from_real_fn(2, n, side, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        (-r2 / 4.0).exp() * (1.0 + 0.5 * (x[0] * 0.7).cos())
    })
    .unwrap();
    let omega = CircleFunction::from_fn(16, |a| real(1.0 + (2.0 * PI * a).cos().abs())).unwrap();
    let m = apply_m(&omega, &f, None).unwrap();
    assert!(m.values().iter().all(|v| v.re >= 0.0 && v.im == 0.0));
    let hs = default_h_set(&f);
    let h = hs[rng.gen_range(0..hs.len())];
    let single = apply_m(&omega, &f, Some(&[h])).unwrap();
    for (a, b) in m.values().iter().zip(single.values()) {
        assert!(a.re >= b.re);
    }
    let z = apply_m(&CircleFunction::zero(16).unwrap(), &f, None).unwrap();
    assert_eq!(z.sup_norm(), 0.0);
    assert!(apply_m(&omega, &f, Some(&[side])).is_err());
}

#[test]
fn maximal_operator_on_spike_follows_inverse_square() {
    // For a point mass, sup_h h^{-2} chi0(r/h) = r^{-2} sup_t t^2 chi0(t).
    let (n, side) = (128, 32.0);
    let h = side / n as f64;
    let mut vals = vec![ZERO; n * n];
    vals[(n / 2) * n + n / 2] = real(1.0 / (h * h));
    let f = GridFunction::from_values(2, n, side, vals).unwrap();
    let one = CircleFunction::from_fn(8, |_| real(1.0)).unwrap();
    let hs: Vec<f64> = (0..=64).map(|k| 2f64.powf(k as f64 / 16.0 - 1.0)).collect();
    let m = apply_m(&one, &f, Some(&hs)).unwrap();
    let peak = (1..1000).map(|i| i as f64 / 1000.0).map(|t| t * t * chi0(t)).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for idx in 0..f.len() {
        let p = f.point(idx);
        let r = p[0].hypot(p[1]);
        if r >= 4.0 * h && r <= side / 8.0 {
            worst = worst.max((m.values()[idx].re * r * r / peak - 1.0).abs());
        }
    }
    assert!(worst < 0.05, "worst relative gap {worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn maximal_operator_is_sublinear(seed in 0u64..1000) {
        let (n, side) = (64, 16.0);
        let f = band_limited_input(2, n, side, 0.0, 0.6, &mut stream_rng(seed, 0)).unwrap();
        let g = band_limited_input(2, n, side, 0.0, 0.6, &mut stream_rng(seed, 1)).unwrap();
        let omega = cosine(16);
        let hs = [0.5, 1.0, 2.0];
        let mfg = apply_m(&omega, &f.add(&g).unwrap(), Some(&hs)).unwrap();
        let mf = apply_m(&omega, &f, Some(&hs)).unwrap();
        let mg = apply_m(&omega, &g, Some(&hs)).unwrap();
        let scale = mf.sup_norm() + mg.sup_norm();
        for i in 0..f.len() {
            prop_assert!(mfg.values()[i].re <= mf.values()[i].re + mg.values()[i].re + 1e-12 * scale);
        }
    }
}

#[test]
fn atom_construction() {
    let a = radial_atom(0, 256, 8.0).unwrap();
    let integral = a.integral().norm() / (a.sup_norm() * PI);
    assert!(integral < 1e-12, "{integral}");
    assert!(a.sup_norm() <= 1.0 / PI);
    assert!(a.support_radius(0.0) <= 1.0);
    let a2 = radial_atom(2, 256, 16.0).unwrap();
    assert!(a2.sup_norm() <= 1.0 / (16.0 * PI));
    assert!(radial_atom(3, 256, 16.0).is_err());
    assert!(radial_atom(-3, 256, 16.0).is_err());
}

#[test]
fn atom_dilation_matches_profile() {
    let (n, side) = (2048, 8.0);
    let a0 = radial_atom(0, n, side).unwrap();
    let a1 = radial_atom(1, n, side).unwrap();
    // Contracting the wider atom keeps the spectrum well inside the band.
    let e = a1.dilate(-1).unwrap().sub(&a0).unwrap().sup_norm() / a0.sup_norm();
    assert!(e < 1e-8, "dilation gap {e}");
}

#[test]
fn low_frequency_suppression() {
    let (n, side) = (256, 16.0);
    let fam = build_lp_family(2, 1, 2, 0.25, side).unwrap();
    let g = GridFunction::zeros(2, n, side).unwrap();
    let band = fam.covered_band(&g, 1e-8).unwrap();
    let a = band_limited_input(2, n, side, band.0, band.1, &mut stream_rng(1, 0)).unwrap();
    let s = suppress_low_freq(&a, 0, 100, &fam).unwrap();
    assert!(s.residual_relative < 1e-6, "{}", s.residual_relative);

    let atom = radial_atom(0, n, side).unwrap();
    let (lo, _) = fam.admissible_range(&atom).unwrap();
    let c0s: Vec<i32> = (0..=(-lo).min(4)).collect();
    assert!(c0s.len() >= 3);
    let res: Vec<f64> = c0s.iter().map(|&c0| suppress_low_freq(&atom, 0, c0, &fam).unwrap().residual_l2.ln()).collect();
    let xs: Vec<f64> = c0s.iter().map(|&c| c as f64).collect();
    assert!(fit_slope(&xs, &res) < 0.0, "residuals {res:?}");

    let zero = GridFunction::zeros(2, n, side).unwrap();
    assert_eq!(suppress_low_freq(&zero, 0, 2, &fam).unwrap().atom.sup_norm(), 0.0);
}

#[test]
fn kernel_frequency_pieces() {
    let (n, side) = (256, 16.0);
    let fam = build_lp_family(2, 1, 2, 0.25, side).unwrap();
    let z = k_pieces(&CircleFunction::zero(16).unwrap(), &fam, n, side).unwrap();
    assert!(z.pieces.iter().all(|p| p.sup_norm() == 0.0));
    let kp = k_pieces(&cosine(32), &fam, n, side).unwrap();
    for p in &kp.pieces {
        for (m, v) in kp.sup.values().iter().zip(p.values()) {
            assert!(m.re >= v.norm());
        }
    }
    let total: f64 = kp.pieces.iter().map(|p| p.l2_norm().powi(2)).sum();
    let (lo, hi) = square_envelope(&kp.kernel, SquareFlavor::Isotropic, &fam).unwrap();
    let base = kp.kernel.l2_norm().powi(2);
    assert!(total >= lo * lo * base * (1.0 - 1e-9) && total <= hi * hi * base * (1.0 + 1e-9));
    assert!(kp.aggregate.l2_norm().powi(2) - total < 1e-9 * total);
}

#[test]
fn polar_and_grid_engines_agree() {
    let exps = [LorentzExponents::new(1.0, 1.0).unwrap(), LorentzExponents::new(1.0, 2.0).unwrap()];
    let polar = polar_norms(1, 8, &exps, &PolarOptions::default()).unwrap();
    let atom = radial_atom(0, 1024, 32.0).unwrap();
    let ta = apply_pv(&lacunary_omega(1, 8, 64).unwrap(), &atom).unwrap();
    for (e, p) in exps.iter().zip(&polar) {
        let g = lorentz_norm(&ta, *e);
        assert!((g / p - 1.0).abs() < 0.03, "q={}: grid {g} vs polar {p}", e.q);
    }
}

#[test]
fn slope_fit() {
    let x = [1.0, 2.0, 3.0];
    assert!((fit_slope(&x, &[2.0, 4.0, 6.0]) - 2.0).abs() < 1e-15);
}

