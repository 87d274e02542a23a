use super::*;
use crate::dyadic::hl_maximal;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn gaussian_blob(n: usize, side: f64, w: f64) -> GridFunction {
    GridFunction::from_real_fn(2, n, side, |x| {
        let (u, v) = (x[0] - 0.3, x[1] + 0.2);
        (-(u * u + v * v) / (2.0 * w * w)).exp() * (1.0 + 0.4 * u - 0.2 * v)
    })
    .unwrap()
}

fn rel(a: &GridFunction, b: &GridFunction) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm()
}

fn window_mass(w: Window) -> f64 {
    let (a, b) = w.abs_support();
    let rule = composite(16, a, b, |x, y| gauss_legendre(32, x, y));
    let pos = rule.integrate(|t| w.value(t));
    let neg = rule.integrate(|t| w.value(-t));
    pos + neg
}

#[test]
fn zero_and_constant_inputs() {
    let zero = GridFunction::zeros(2, 64, 16.0).unwrap();
    let one = GridFunction::from_real_fn(2, 64, 16.0, |_| 1.0).unwrap();
    let w = Window::dyadic();
    let mass = window_mass(w);
    for l in [0, 2, 5] {
        let cm = CurveMeasure::mu(l, 2.0, w).unwrap();
        assert_eq!(curve_convolve(&zero, &cm, 16).unwrap().sup_norm(), 0.0);
        let out = curve_convolve(&one, &cm, 16).unwrap();
        let gap = out.values().iter().map(|v| (v - c(mass)).norm()).fold(0.0, f64::max);
        assert!(gap < 1e-12, "l={l}: {gap} vs mass {mass}");
    }
    assert_eq!(hilbert_along(&zero, 2.0, (0, 2)).unwrap().sup_norm(), 0.0);
    assert_eq!(maximal_along(&zero, 2.0, Window::dyadic(), (0, 2), None).unwrap().sup_norm(), 0.0);
    let avg = local_average(&one, 2.0, Window::Full { radius: 1.0 }).unwrap();
    let eta_mass = window_mass(Window::Full { radius: 1.0 });
    assert!(avg.values().iter().all(|v| (v - c(eta_mass)).norm() < 1e-12));
    assert_eq!(local_average(&zero, 2.0, Window::eta()).unwrap().sup_norm(), 0.0);
}

#[test]
fn principal_value_cancels_on_constants() {
    let one = GridFunction::from_real_fn(2, 64, 16.0, |_| 1.0).unwrap();
    for gamma in [MultiIndexGamma::zero(), MultiIndexGamma::real(0.5, 0.25).unwrap(), MultiIndexGamma::real(1.0, 0.0).unwrap()] {
        for l in [0, 1, 4] {
            let out = curve_convolve(&one, &CurveMeasure::sigma(l, 2.0, gamma).unwrap(), 16).unwrap();
            assert!(out.sup_norm() < 1e-10, "gamma {gamma:?} l={l}: {}", out.sup_norm());
        }
    }
}

#[test]
fn quadrature_self_convergence() {
    let f = band_limited_input(2, 256, 64.0, 0.0, 0.5, &mut stream_rng(5, 0)).unwrap();
    let measures = [
        CurveMeasure::mu(0, 2.0, Window::dyadic()).unwrap(),
        CurveMeasure::sigma(-1, 2.0, MultiIndexGamma::real(0.5, 0.0).unwrap()).unwrap(),
        CurveMeasure::sigma(2, 1.5, MultiIndexGamma::zero()).unwrap(),
        CurveMeasure::nu(5, 2.0, c(0.5), Window::eta()).unwrap(),
    ];
    for cm in &measures {
        let a = curve_convolve(&f, cm, 16).unwrap();
        let b = curve_convolve(&f, cm, 32).unwrap();
        let e = rel(&a, &b);
        assert!(e <= 1e-9, "{cm:?}: {e}");
    }
}

#[test]
fn rejections() {
    let f = GridFunction::zeros(2, 64, 16.0).unwrap();
    let cm = CurveMeasure::mu(0, 2.0, Window::dyadic()).unwrap();
    assert!(matches!(curve_convolve(&f, &cm, 15), Err(crate::LabError::Validation(_))));
    let far = CurveMeasure::mu(-1, 2.0, Window::dyadic()).unwrap();
    assert!(matches!(curve_convolve(&f, &far, 16), Err(crate::LabError::NumericalGuard(_))));
    assert!(CurveMeasure::mu(0, 1.0, Window::dyadic()).is_err());
    assert!(CurveMeasure::new(0, 2.0, Window::dyadic(), MeasureKind::Sigma { gamma: MultiIndexGamma::zero() }).is_err());
    assert!(CurveMeasure::mu(0, 2.0, Window::Bump { a: -1.0, b: 1.0 }).is_err());
    assert!(CurveMeasure::mu(0, 2.0, Window::Bump { a: 1.0, b: 1.0 + 1e-4 }).is_err());
    let line = GridFunction::zeros(1, 64, 16.0).unwrap();
    assert!(curve_convolve(&line, &cm, 16).is_err());
    assert!(hilbert_along(&f, 2.0, (2, 1)).is_err());
}

#[test]
fn unit_scale_windows_have_moderate_c4_norms() {
    for w in [Window::Annulus, Window::dyadic(), Window::Full { radius: 1.0 }] {
        let c4 = w.c4_norm();
        assert!(c4 > 0.0 && c4 < 1e5, "{w:?}: {c4}");
    }
    // The norm scales like width^{-4}.
    let narrow = Window::Bump { a: 1.0, b: 1.1 }.c4_norm();
    let wide = Window::Bump { a: 1.0, b: 2.0 }.c4_norm();
    assert!(narrow / wide > 1e3 && narrow / wide < 1e5, "{}", narrow / wide);
}

#[test]
fn hilbert_flips_x1_parity() {
    // Even in x_1 goes to odd in x_1 under p.v. int f(x_1 - t, .) dt / t.
    let (n, side) = (128, 32.0);
    let f = GridFunction::from_real_fn(2, n, side, |x| (-(x[0] * x[0]) / 2.0 - (x[1] - 0.5).powi(2) / 2.0).exp() * (1.0 + 0.3 * x[1]))
        .unwrap();
    let h = hilbert_along(&f, 2.0, (0, 3)).unwrap();
    let v = h.values();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mirror = ((n - i) % n) * n + j;
            worst = worst.max((v[i * n + j] + v[mirror]).norm());
        }
    }
    assert!(worst <= 1e-10 * h.sup_norm(), "parity defect {worst}");
    assert!(h.sup_norm() > 1e-3);
}

/// Samples of `g` at `(2 x_1, 2^m x_2)` for `m = 2`, on the same grid,
/// zero where the scaled point leaves the torus.
fn parabolic_resample(g: &GridFunction) -> GridFunction {
    let n = g.n() as i64;
    let idx = |i: i64, k: i64| Some(k * i - (k - 1) * n / 2).filter(|j| (0..n).contains(j));
    let mut vals = vec![c(0.0); (n * n) as usize];
    for i in 0..n {
        for j in 0..n {
            if let (Some(a), Some(b)) = (idx(i, 2), idx(j, 4)) {
                vals[(i * n + j) as usize] = g.values()[(a * n + b) as usize];
            }
        }
    }
    g.with_values(vals)
}

#[test]
fn parabolic_scaling_covariance() {
    // H_l (f o S) = (H_{l-1} f) o S with S(x) = (2 x_1, 4 x_2).
    let (n, side) = (512, 32.0);
    let f = gaussian_blob(n, side, 1.0);
    let scaled = GridFunction::from_real_fn(2, n, side, |x| {
        let (u, v) = (2.0 * x[0] - 0.3, 4.0 * x[1] + 0.2);
        (-(u * u + v * v) / 2.0).exp() * (1.0 + 0.4 * u - 0.2 * v)
    })
    .unwrap();
    assert!(rel(&parabolic_resample(&f), &scaled) < 1e-13);
    let lhs = hilbert_along(&scaled, 2.0, (1, 3)).unwrap();
    let rhs = parabolic_resample(&hilbert_along(&f, 2.0, (0, 2)).unwrap());
    let e = rel(&lhs, &rhs);
    assert!(e < 1e-8, "covariance gap {e}");
}

#[test]
fn hilbert_symbol_is_bounded_and_stable() {
    let g = GridFunction::zeros(2, 256, 32.0).unwrap();
    let a = hilbert_symbol_sup(&g, 2.0, (0, 2)).unwrap();
    let b = hilbert_symbol_sup(&g, 2.0, (0, 4)).unwrap();
    let d = hilbert_symbol_sup(&g, 2.0, default_l_range(&g, 2.0)).unwrap();
    eprintln!("symbol sup: {a} {b} {d}");
    assert!(a.is_finite() && b.is_finite() && d.is_finite());
    assert!(b / a < 1.5 && d / b < 1.5 && d < 10.0, "{a} {b} {d}");
}

#[test]
fn hypersingular_reduces_and_composes() {
    let (n, side) = (128, 16.0);
    let f = gaussian_blob(n, side, 1.0);
    let h = hilbert_along(&f, 2.0, (0, 3)).unwrap();
    let h0 = hypersingular(&f, 2.0, MultiIndexGamma::zero(), (0, 3)).unwrap();
    assert!(h0.sub(&h).unwrap().sup_norm() <= 1e-10 * h.sup_norm());
    // On pure exponentials: H_gamma D^{gamma'} e = |xi^{gamma'}| H_gamma e.
    let (q1, q2) = (5.0, -3.0);
    let e = GridFunction::from_fn(2, n, side, |x| Complex64::from_polar(1.0, 2.0 * PI * (q1 * x[0] + q2 * x[1]) / side)).unwrap();
    let g = MultiIndexGamma::real(0.5, 0.25).unwrap();
    let gp = MultiIndexGamma::real(0.25, 1.0).unwrap();
    let lhs = hypersingular(&e.frac_diff(gp).unwrap(), 2.0, g, (0, 3)).unwrap();
    let factor = (q1.abs() / side).powf(0.25) * (q2.abs() / side).powf(1.0);
    let rhs = hypersingular(&e, 2.0, g, (0, 3)).unwrap().scale(c(factor));
    assert!(lhs.sub(&rhs).unwrap().sup_norm() <= 1e-10 * rhs.sup_norm());
    assert!(hypersingular(&f, 2.0, MultiIndexGamma { gamma1: c(-0.1), gamma2: c(0.0) }, (0, 3)).is_err());
}

#[test]
fn hypersingular_l2_ratios() {
    let (n, side) = (128, 16.0);
    let inputs: Vec<GridFunction> =
        (0..5).map(|k| band_limited_input(2, n, side, 0.0, 0.5, &mut stream_rng(17, k)).unwrap()).collect();
    // Imaginary axis: polynomial growth in |Im gamma|.
    for y in [0.0, 1.0, 2.0, 4.0] {
        let g = MultiIndexGamma::new(Complex64::new(0.0, y), Complex64::new(0.0, 0.5 * y)).unwrap();
        let r = hypersingular(&inputs[0], 2.0, g, (0, 3)).unwrap().l2_norm() / inputs[0].l2_norm();
        eprintln!("Im gamma scale {y}: ratio {r}");
        assert!(r.is_finite() && r < 10.0 * (1.0 + y).powi(2));
    }
    // Re(gamma_1 + gamma_2) = 1/2.
    let g = MultiIndexGamma::real(0.25, 0.25).unwrap();
    let ratios: Vec<f64> =
        inputs.iter().map(|f| hypersingular(f, 2.0, g, (0, 3)).unwrap().l2_norm() / f.l2_norm()).collect();
    eprintln!("critical-line ratios {ratios:?}");
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(lo > 0.0 && hi / lo < 2.0);
}

#[test]
fn dyadic_nu_pieces_sum_to_local_average() {
    let f = band_limited_input(2, 128, 16.0, 0.0, 0.5, &mut stream_rng(2, 0)).unwrap();
    let eta = Window::eta();
    let direct = local_average(&f, 2.0, eta).unwrap();
    let mut total = GridFunction::zeros(2, 128, 16.0).unwrap();
    for l in 3..=8 {
        let piece = curve_convolve(&f, &CurveMeasure::nu(l, 2.0, c(0.5), eta).unwrap(), 16).unwrap();
        total = total.add(&piece).unwrap();
    }
    assert!(rel(&total, &direct) < 1e-10, "{}", rel(&total, &direct));
    // Pieces beyond the support of eta vanish.
    assert!(CurveMeasure::nu(2, 2.0, c(0.5), eta).unwrap().t_support().is_none());
}

#[test]
fn local_average_gains_half_a_derivative() {
    // |A^(xi)| (1 + |xi|)^{1/2} stays within a fixed range along dyadic shells.
    let g = GridFunction::zeros(2, 256, 16.0).unwrap();
    let table = curve_multiplier(&g, &CurveMeasure::mu(0, 2.0, Window::Full { radius: 1.0 }).unwrap(), 16).unwrap();
    let mut shells = Vec::new();
    for k in 0..4 {
        let (lo, hi) = (2f64.powi(k), 2f64.powi(k + 1));
        let top = (0..g.len())
            .filter_map(|idx| {
                let xi = g.freq_point(idx);
                let r = xi[0].hypot(xi[1]);
                (r >= lo && r < hi).then(|| table[idx].norm() * (1.0 + r).sqrt())
            })
            .fold(0.0, f64::max);
        shells.push(top);
    }
    eprintln!("normalized shell sups {shells:?}");
    let (lo, hi) = shells.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo < 3.0);
}

#[test]
fn maximal_along_dominates_and_compares_with_parabolic_boxes() {
    let (n, side) = (128, 16.0);
    let f = GridFunction::from_real_fn(2, n, side, |x| (-(x[0] * x[0]) * 2.0).exp() * (-(x[1] * x[1]) * 2.0).exp()).unwrap();
    let w = Window::dyadic();
    let max = maximal_along(&f, 2.0, w, (0, 3), None).unwrap();
    for l in 0..=3 {
        let single = curve_convolve(&f, &CurveMeasure::mu(l, 2.0, w).unwrap(), 16).unwrap();
        for (a, b) in max.values().iter().zip(single.values()) {
            assert!(a.re >= b.norm());
        }
    }
    let hl = hl_maximal(&f, SquareFlavor::Parabolic { m: 2.0 });
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for idx in 0..f.len() {
        let p = f.point(idx);
        if p[0].abs() <= 2.0 && p[1].abs() <= 2.0 {
            let r = max.values()[idx].re / hl.values()[idx].re;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    eprintln!("maximal / parabolic HL on the core: [{lo}, {hi}]");
    assert!(hi.is_finite() && hi < 10.0);
}

#[test]
fn transference_truncation() {
    // The exponential bump at scale 2^-7 has Fourier coefficients decaying
    // only like exp(-c sqrt(k)), so short expansions are visibly truncated.
    let eta = Window::eta();
    let errs: Vec<f64> = [32, 512, 4096]
        .iter()
        .map(|&k_max| transference_error(eta, Transference { k_max, scales: 5 }).unwrap())
        .collect();
    eprintln!("transference error by K: {errs:?}");
    assert!(errs[0] > 0.5 && errs[1] < 0.05 && errs[2] < 1e-4);
    let ck = transference_coefficients(eta, 1.0, 2048).unwrap();
    let tail: f64 = (1024..=2048).map(|k| ck[2048 + k].norm() + ck[2048 - k].norm()).sum();
    let total: f64 = ck.iter().map(|c| c.norm()).sum();
    eprintln!("coefficient tail share beyond |k| = 1024: {}", tail / total);
    assert!(tail < 1e-3 * total);
    assert!(transference_coefficients(Window::dyadic(), 1.0, 4).is_err());
}

#[test]
fn transference_reproduces_the_unit_scale() {
    let (n, side) = (64, 4.0);
    let f = GridFunction::from_real_fn(2, n, side, |x| (-(x[0] * x[0] + x[1] * x[1]) * 8.0).exp()).unwrap();
    let eta = Window::eta();
    let direct = maximal_along(&f, 2.0, eta, (-3, -1), None).unwrap();
    let via = maximal_along(&f, 2.0, eta, (-3, -1), Some(Transference { k_max: 4096, scales: 1 })).unwrap();
    let e = rel(&via, &direct);
    assert!(e < 1e-6, "{e}");
}

#[test]
fn measure_decay_table() {
    let rep = measure_decay(MultiIndexGamma::zero(), 2.0, &[0.0, 16.0, 64.0, 256.0, 1024.0]).unwrap();
    assert!(rep.warning.is_none());
    assert_eq!(rep.rows[0].normalized_sup, 0.0);
    let sups: Vec<f64> = rep.rows[1..].iter().map(|r| r.normalized_sup).collect();
    eprintln!("normalized sups {sups:?}");
    let (lo, hi) = sups.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo <= 3.0);
    for r in &rep.rows[1..] {
        assert!(r.rule_gap <= 1e-8 && r.refine_gap <= 1e-6 && r.converged, "{r:?}");
    }
    assert!(measure_decay(MultiIndexGamma::zero(), 1.5, &[8.0]).unwrap().warning.is_some());
    assert!(measure_decay(MultiIndexGamma::zero(), 1.0, &[8.0]).is_err());
}

#[test]
fn curve_square_function_reductions() {
    let (n, side) = (64, 16.0);
    let zero = GridFunction::zeros(2, n, side).unwrap();
    assert_eq!(curve_square_function(&[(0, zero.clone()), (1, zero.clone())], 2.0, Window::dyadic()).unwrap(), 0.0);
    let f = gaussian_blob(n, side, 0.7);
    let single = curve_square_function(&[(1, f.clone()), (2, zero)], 2.0, Window::dyadic()).unwrap();
    let direct = curve_convolve(&f, &CurveMeasure::mu(1, 2.0, Window::dyadic()).unwrap(), 16).unwrap().abs();
    let want = lorentz_norm(&direct, LorentzExponents::new(1.0, 2.0).unwrap());
    assert!((single / want - 1.0).abs() < 1e-12);
    assert!(curve_square_function(&[], 2.0, Window::dyadic()).is_err());
}

#[test]
fn square_function_ratio_is_finite_across_scales() {
    let rows = square_function_ratio(128, 16.0, 2.0, &[0, 1, 2], (0, 3)).unwrap();
    for r in &rows {
        eprintln!("{r:?}");
        assert!(r.ratio.is_finite() && r.ratio > 0.0);
    }
}

#[test]
fn sobolev_experiment_runs_and_validates() {
    let cfg = SobolevConfig { trials: 4, n: 128, side: 16.0, max_freq: 1.0, ..SobolevConfig::default() };
    let rep = sobolev_smoothing_experiment(&cfg).unwrap();
    assert_eq!(rep.rows.len(), 4);
    assert!(rep.max / rep.median <= 3.0);
    assert!(sobolev_smoothing_experiment(&SobolevConfig { m: 1.5, ..cfg.clone() }).is_err());
    assert!(sobolev_smoothing_experiment(&SobolevConfig { max_freq: 3.0, ..cfg }).is_err());
}
