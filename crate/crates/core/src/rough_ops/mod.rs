//! Rough homogeneous singular integrals `T_Omega` in the plane, the maximal
//! variant, lacunary angular parts and the atoms they are tested on.
//!
//! Every convolution is applied as an exact continuum multiplier. The kernel
//! `Omega(theta) |x|^{-2} w(|x|)` of one dyadic shell has transform
//! `sum_nu Omega^_nu e^{i nu phi} 2 pi (-i)^{|nu|} H_{|nu|}(rho)` with
//! `H_nu(rho) = int w(s) J_nu(2 pi rho s) ds / s`, so each angular mode only
//! needs a one-dimensional radial table. Summing the shells over all `j`
//! recovers the principal-value symbol `2 pi (-i)^{|nu|} / |nu|`.

mod polar;
mod synthetic;

pub use polar::{polar_norms, AtomProfile, PolarOptions};
pub use synthetic::{lacunary_profile, lacunary_profile_engine_norm, lacunary_profile_norm};

use crate::error::{ensure, LabError, Result};
use crate::grid::GridFunction;
use crate::littlewood_paley::{band_limited_input, lp_piece, LPFamily};
use crate::rng::stream_rng;
use crate::lorentz::{lorentz_norm, LorentzExponents};
use crate::numerics::bessel::bessel_j_one;
use crate::numerics::fft::fft_1d;
use crate::numerics::profile::{annulus, chi0};
use crate::numerics::quadrature::{composite, gauss_legendre, Rule};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Samples of `Omega` at `alpha_j = j / n`, the circle being parametrized by
/// `(cos 2 pi alpha, sin 2 pi alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleFunction {
    n_samples: usize,
    values: Vec<Complex64>,
    mean: Complex64,
}

impl CircleFunction {
    pub fn from_values(values: Vec<Complex64>) -> Result<Self> {
        let n = values.len();
        ensure!(n >= 2 && n.is_power_of_two(), validation, "circle sample count must be a power of two >= 2, got {n}");
        ensure!(values.iter().all(|v| v.re.is_finite() && v.im.is_finite()), validation, "circle samples must be finite");
        let mean = values.iter().sum::<Complex64>() / n as f64;
        Ok(CircleFunction { n_samples: n, values, mean })
    }

    pub fn from_fn(n_samples: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::from_values((0..n_samples).map(|j| f(j as f64 / n_samples as f64)).collect())
    }

    pub fn zero(n_samples: usize) -> Result<Self> {
        Self::from_values(vec![ZERO; n_samples])
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn mean(&self) -> Complex64 {
        self.mean
    }

    /// `int_0^1 |Omega|^p d alpha` to the power `1/p`, by the trapezoid rule.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm().powf(p)).sum();
        (s / self.n_samples as f64).powf(1.0 / p)
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() / self.n_samples as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn subtract_mean(&self) -> CircleFunction {
        let m = self.mean;
        // Rebuild so the cached mean matches the stored samples.
        Self::from_values(self.values.iter().map(|v| v - m).collect()).expect("shape already validated")
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: Complex64, other: &CircleFunction, b: Complex64) -> Result<CircleFunction> {
        ensure!(self.n_samples == other.n_samples, validation, "circle functions sampled at different resolutions");
        Self::from_values(self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect())
    }

    /// Fourier coefficients `(nu, Omega^_nu)` with `|Omega^_nu|` above
    /// `rel * max`. The Nyquist coefficient is split evenly between `+-n/2`.
    pub fn modes(&self, rel: f64) -> Vec<(i64, Complex64)> {
        let n = self.n_samples;
        let mut buf = self.values.clone();
        fft_1d(&mut buf, false);
        let scale = 1.0 / n as f64;
        let top = buf.iter().fold(0.0f64, |m, v| m.max(v.norm())) * scale;
        let mut out = Vec::new();
        for (k, v) in buf.iter().enumerate() {
            let c = v * scale;
            if top == 0.0 || c.norm() <= rel * top {
                continue;
            }
            if k == n / 2 {
                out.push((-(k as i64), c * 0.5));
                out.push((k as i64, c * 0.5));
            } else if k < n / 2 {
                out.push((k as i64, c));
            } else {
                out.push((k as i64 - n as i64, c));
            }
        }
        out.sort_by_key(|m| m.0);
        out
    }

    /// Trigonometric interpolant at `alpha`.
    pub fn eval(&self, alpha: f64) -> Complex64 {
        self.modes(0.0).iter().map(|&(nu, c)| c * Complex64::from_polar(1.0, 2.0 * PI * nu as f64 * alpha)).sum()
    }
}

/// `C^N` as an exact integer when it fits.
fn int_pow(c: u64, n: u32) -> Option<u64> {
    c.checked_pow(n)
}

fn check_lacunary(n_big: usize, c: u64, n_samples: usize) -> Result<()> {
    ensure!(c >= 2, validation, "lacunarity ratio C must be >= 2, got {c}");
    ensure!(n_big >= 1, validation, "lacunary sum needs N >= 1");
    ensure!(
        n_samples >= 2 && n_samples.is_power_of_two(),
        validation,
        "circle sample count must be a power of two, got {n_samples}"
    );
    let fits = int_pow(c, n_big as u32).and_then(|p| p.checked_mul(4)).is_some_and(|p| (n_samples as u64) > p);
    if !fits {
        let mut max_n = 0usize;
        while int_pow(c, max_n as u32 + 1).and_then(|p| p.checked_mul(4)).is_some_and(|p| (n_samples as u64) > p) {
            max_n += 1;
        }
        return Err(LabError::validation(format!(
            "resolution cap exceeded: N={n_big} with C={c} needs more than 4*C^N samples, \
             {n_samples} samples admit N <= {max_n}"
        )));
    }
    Ok(())
}

/// `G_N(alpha) = N^{-1/2} sum_{j=1}^N e^{2 pi i C^j alpha}`.
pub fn lacunary_omega(n_big: usize, c: u64, n_samples: usize) -> Result<CircleFunction> {
    check_lacunary(n_big, c, n_samples)?;
    let ns = n_samples as u64;
    let amp = 1.0 / (n_big as f64).sqrt();
    let freqs: Vec<u64> = (1..=n_big as u32).map(|j| c.pow(j) % ns).collect();
    let values = (0..ns)
        .map(|k| {
            freqs
                .iter()
                .map(|&f| Complex64::from_polar(amp, 2.0 * PI * ((f * k) % ns) as f64 / ns as f64))
                .sum()
        })
        .collect();
    CircleFunction::from_values(values)
}

/// Thresholded lacunary function together with the excised set's measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedOmega {
    pub omega: CircleFunction,
    pub threshold: f64,
    pub excised_measure: f64,
    pub subtracted_mean: Complex64,
}

/// `G_N (1 - 1_E)` minus its mean, `E = {|G_N| > N^eps0}`.
pub fn truncated_omega(n_big: usize, c: u64, eps0: f64, n_samples: usize) -> Result<TruncatedOmega> {
    ensure!(eps0 > 0.0 && eps0 < 0.5, validation, "truncation exponent must lie in (0, 1/2), got {eps0}");
    let g = lacunary_omega(n_big, c, n_samples)?;
    let threshold = (n_big as f64).powf(eps0);
    let mut cut = 0usize;
    let kept: Vec<Complex64> = g
        .values
        .iter()
        .map(|&v| {
            if v.norm() > threshold {
                cut += 1;
                ZERO
            } else {
                v
            }
        })
        .collect();
    let kept = CircleFunction::from_values(kept)?;
    let subtracted_mean = kept.mean;
    Ok(TruncatedOmega {
        omega: kept.subtract_mean(),
        threshold,
        excised_measure: cut as f64 / n_samples as f64,
        subtracted_mean,
    })
}

/// `K chi` sampled on the grid, with the shell range it is applied over.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellKernel {
    pub base: GridFunction,
    pub j_range: (i32, i32),
}

fn check_cancellation(omega: &CircleFunction) -> Result<()> {
    ensure!(
        omega.mean.norm() <= 1e-10 * omega.l1_norm(),
        validation,
        "angular part has mean {:e} (relative {:e}); the singular integral needs mean zero",
        omega.mean.norm(),
        omega.mean.norm() / omega.l1_norm().max(f64::MIN_POSITIVE)
    );
    Ok(())
}

fn check_shells(f: &GridFunction, j_range: (i32, i32)) -> Result<()> {
    ensure!(f.dim() == 2, validation, "rough operators act on two-dimensional grids");
    let (lo, hi) = j_range;
    ensure!(lo <= hi, validation, "empty shell range [{lo}, {hi}]");
    let cap = f.n() as f64 / 16.0;
    for j in [lo, hi] {
        ensure!(2f64.powi(j.abs()) <= cap, guard, "shell 2^{j} exceeds the aliasing guard n/16 = {cap}");
    }
    ensure!(
        4.0 * 2f64.powi(hi) <= 0.5 * f.side(),
        guard,
        "shell 2^{hi} has support radius {} beyond the torus half-width {}",
        4.0 * 2f64.powi(hi),
        0.5 * f.side()
    );
    Ok(())
}

/// `Omega(x/|x|) |x|^{-2} chi(|x|)` on the grid, angular values by
/// trigonometric interpolation.
pub fn make_kernel(omega: &CircleFunction, n: usize, side: f64, j_range: (i32, i32)) -> Result<ShellKernel> {
    check_cancellation(omega)?;
    let modes = omega.modes(1e-15);
    let base = GridFunction::from_fn(2, n, side, |x| {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let w = annulus(r);
        if w == 0.0 {
            return ZERO;
        }
        let theta = x[1].atan2(x[0]);
        let ang: Complex64 = modes.iter().map(|&(nu, c)| c * Complex64::from_polar(1.0, nu as f64 * theta)).sum();
        ang * (w / (r * r))
    })?;
    check_shells(&base, j_range)?;
    Ok(ShellKernel { base, j_range })
}

/// Uniform table of a smooth radial profile with 8-point Lagrange lookup.
#[derive(Debug, Clone)]
struct RadialTable {
    step: f64,
    values: Vec<f64>,
}

impl RadialTable {
    fn build(top: f64, step: f64, f: impl Fn(f64) -> f64 + Sync) -> RadialTable {
        let count = (top / step).ceil() as usize + 8;
        let values = (0..count).into_par_iter().map(|i| f(i as f64 * step)).collect();
        RadialTable { step, values }
    }

    fn eval(&self, rho: f64) -> f64 {
        let u = rho / self.step;
        let i0 = (u.floor() as isize - 3).clamp(0, self.values.len() as isize - 8) as usize;
        let mut acc = 0.0;
        for a in 0..8 {
            let mut l = 1.0;
            let xa = (i0 + a) as f64;
            for b in 0..8 {
                if a != b {
                    let xb = (i0 + b) as f64;
                    l *= (u - xb) / (xa - xb);
                }
            }
            acc += l * self.values[i0 + a];
        }
        acc
    }
}

/// Composite Gauss-Legendre rule resolving `J(2 pi rho s)` on `[a, b]` for
/// every `rho <= top`.
fn oscillatory_rule(a: f64, b: f64, top: f64) -> Rule {
    let panels = ((b - a) * top / 2.0).ceil() as usize + 4;
    composite(panels, a, b, |x, y| gauss_legendre(16, x, y))
}

/// Averaged shell profile `w(s) = (ln 2)^{-1} int chi(t) chi(s/t) dt/t`,
/// supported in `[1/4, 4]`.
pub fn shell_weight(s: f64) -> f64 {
    if !(0.25..=4.0).contains(&s) {
        return 0.0;
    }
    let rule = composite(24, 0.5, 2.0, |a, b| gauss_legendre(16, a, b));
    rule.integrate(|t| annulus(t) * annulus(s / t) / t) / LN_2
}

/// `H_nu(rho) = int w(s) J_nu(2 pi rho s) ds/s` for `rho <= top`.
fn shell_table(nu: usize, top: f64) -> RadialTable {
    let rule = oscillatory_rule(0.25, 4.0, top);
    let weights: Vec<(f64, f64)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&s, &w)| (s, w * shell_weight(s) / s))
        .filter(|p| p.1 != 0.0)
        .collect();
    RadialTable::build(top, 1.0 / 128.0, |rho| {
        weights.iter().map(|&(s, w)| w * bessel_j_one(nu, 2.0 * PI * rho * s)).sum()
    })
}

/// `G_nu(rho) = int_0^1 chi0(r) J_nu(2 pi rho r) r dr` for `rho <= top`.
fn ball_table(nu: usize, top: f64) -> RadialTable {
    let rule = oscillatory_rule(0.0, 1.0, top);
    let weights: Vec<(f64, f64)> =
        rule.nodes.iter().zip(&rule.weights).map(|(&r, &w)| (r, w * chi0(r) * r)).filter(|p| p.1 != 0.0).collect();
    RadialTable::build(top, 1.0 / 64.0, |rho| {
        weights.iter().map(|&(r, w)| w * bessel_j_one(nu, 2.0 * PI * rho * r)).sum()
    })
}

/// `2 pi (-i)^{|nu|}`.
fn mode_phase(nu: i64) -> Complex64 {
    let c = match nu.unsigned_abs() % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    };
    c * (2.0 * PI)
}

/// Largest `|xi|` on the grid.
fn max_frequency(f: &GridFunction) -> f64 {
    f.nyquist() * 2f64.sqrt()
}

/// Multiplier table `sum_nu c_nu e^{i nu phi} 2 pi (-i)^{|nu|} R_{|nu|}(rho)`
/// for radial profiles `R_nu` given per distinct order.
fn modal_table(
    f: &GridFunction,
    modes: &[(i64, Complex64)],
    radial: impl Fn(usize, f64) -> f64 + Sync,
) -> Vec<Complex64> {
    let n = f.n();
    (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let xi = f.freq_point(idx);
            let rho = xi[0].hypot(xi[1]);
            let phi = xi[1].atan2(xi[0]);
            let mut acc = ZERO;
            for &(nu, c) in modes {
                if nu != 0 && rho == 0.0 {
                    continue;
                }
                let r = radial(nu.unsigned_abs() as usize, rho);
                if r != 0.0 {
                    acc += c * mode_phase(nu) * Complex64::from_polar(r, nu as f64 * phi);
                }
            }
            acc
        })
        .collect()
}

fn tables_for(modes: &[(i64, Complex64)], build: impl Fn(usize) -> RadialTable + Sync) -> BTreeMap<usize, RadialTable> {
    let mut orders: Vec<usize> = modes.iter().map(|m| m.0.unsigned_abs() as usize).collect();
    orders.sort_unstable();
    orders.dedup();
    orders.into_par_iter().map(|nu| (nu, build(nu))).collect()
}

/// Symbol of `sum_{j in j_range} delta_j A[K chi]` on the grid of `f`.
pub fn shell_multiplier(omega: &CircleFunction, f: &GridFunction, j_range: (i32, i32)) -> Result<Vec<Complex64>> {
    check_cancellation(omega)?;
    check_shells(f, j_range)?;
    let modes = omega.modes(1e-15);
    let top = 2f64.powi(j_range.1) * max_frequency(f) + 0.1;
    let tables = tables_for(&modes, |nu| shell_table(nu, top));
    Ok(modal_table(f, &modes, |nu, rho| {
        let t = &tables[&nu];
        (j_range.0..=j_range.1).map(|j| t.eval(2f64.powi(j) * rho)).sum()
    }))
}

/// `T_Omega f = sum_{j in j_range} (delta_j A[K chi]) * f`.
pub fn apply_t(omega: &CircleFunction, f: &GridFunction, j_range: (i32, i32)) -> Result<GridFunction> {
    let table = shell_multiplier(omega, f, j_range)?;
    Ok(f.apply_table(&table))
}

/// Principal-value operator with every shell included, through its
/// homogeneous symbol `sum_nu c_nu e^{i nu phi} 2 pi (-i)^{|nu|} / |nu|`.
pub fn apply_pv(omega: &CircleFunction, f: &GridFunction) -> Result<GridFunction> {
    check_cancellation(omega)?;
    ensure!(f.dim() == 2, validation, "rough operators act on two-dimensional grids");
    let modes: Vec<(i64, Complex64)> = omega.modes(1e-15).into_iter().filter(|m| m.0 != 0).collect();
    let table = modal_table(f, &modes, |nu, _| 1.0 / nu as f64);
    Ok(f.apply_table(&table))
}

/// Outcome of the first-order (Riesz) multiplier comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszReport {
    /// Constant fitted from the calibration input.
    pub kappa: f64,
    /// Radial band (fractions of Nyquist) the inputs were drawn from.
    pub band: (f64, f64),
    /// Relative L2 error of each test input against `-i kappa xi_1/|xi|`.
    pub errors: Vec<f64>,
}

/// Longest band of `|xi|` (fractions of Nyquist) on which the shells in
/// `j_range` reproduce the full first-order radial symbol within `tol`.
pub fn riesz_band(f: &GridFunction, j_range: (i32, i32), tol: f64) -> Result<(f64, f64)> {
    check_shells(f, j_range)?;
    let nyq = f.nyquist();
    let table = shell_table(1, 2f64.powi(j_range.1) * nyq + 0.1);
    let samples = 1024;
    let ok: Vec<bool> = (1..=samples)
        .map(|i| {
            let rho = nyq * i as f64 / samples as f64;
            let s: f64 = (j_range.0..=j_range.1).map(|j| table.eval(2f64.powi(j) * rho)).sum();
            (s - 1.0).abs() <= tol
        })
        .collect();
    let (mut best, mut start) = ((0usize, 0usize), None);
    for (i, &v) in ok.iter().chain(std::iter::once(&false)).enumerate() {
        match (v, start) {
            (true, None) => start = Some(i),
            (false, Some(s0)) => {
                if i - s0 > best.1 - best.0 {
                    best = (s0, i);
                }
                start = None;
            }
            _ => {}
        }
    }
    ensure!(best.1 > best.0, guard, "shells {j_range:?} do not reproduce any band to {tol:e}");
    Ok(((best.0 + 1) as f64 / samples as f64, best.1 as f64 / samples as f64))
}

/// Compare `T_Omega` for `Omega = cos 2 pi alpha` with the multiplier
/// `-i kappa xi_1 / |xi|` on random inputs from the reproduced band; `kappa`
/// is fitted on one extra calibration input.
pub fn riesz_oracle(n: usize, side: f64, j_range: (i32, i32), inputs: usize, seed: u64) -> Result<RieszReport> {
    let omega = CircleFunction::from_fn(64, |a| Complex64::new((2.0 * PI * a).cos(), 0.0))?;
    let probe = GridFunction::zeros(2, n, side)?;
    let band = riesz_band(&probe, j_range, 1e-3)?;
    let riesz = |f: &GridFunction| {
        f.fourier_multiplier(|xi| {
            let r = xi[0].hypot(xi[1]);
            if r == 0.0 {
                ZERO
            } else {
                Complex64::new(0.0, -xi[0] / r)
            }
        })
    };
    let draw = |k: u64| band_limited_input(2, n, side, band.0, band.1, &mut stream_rng(seed, k));
    let f0 = draw(0)?;
    let (t0, r0) = (apply_t(&omega, &f0, j_range)?, riesz(&f0)?);
    let dot: f64 = t0.values().iter().zip(r0.values()).map(|(a, b)| (a * b.conj()).re).sum();
    let kappa = dot / r0.values().iter().map(|v| v.norm_sqr()).sum::<f64>();
    let errors = (1..=inputs as u64)
        .map(|k| {
            let f = draw(k)?;
            let want = riesz(&f)?.scale(Complex64::new(kappa, 0.0));
            Ok(apply_t(&omega, &f, j_range)?.sub(&want)?.l2_norm() / want.l2_norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RieszReport { kappa, band, errors })
}

/// Dyadic `h = 2^k` between two grid cells and a quarter of the torus side.
pub fn default_h_set(f: &GridFunction) -> Vec<f64> {
    let lo = (2.0 * f.spacing()).log2().ceil() as i32;
    let hi = (0.25 * f.side()).log2().floor() as i32;
    (lo..=hi).map(|k| 2f64.powi(k)).collect()
}

/// `sup_h |(h^{-2} chi0(|y|/h) Omega(y/|y|)) * f|`, no cancellation needed.
pub fn apply_m(omega: &CircleFunction, f: &GridFunction, h_set: Option<&[f64]>) -> Result<GridFunction> {
    ensure!(f.dim() == 2, validation, "rough operators act on two-dimensional grids");
    let hs: Vec<f64> = match h_set {
        Some(h) => h.to_vec(),
        None => default_h_set(f),
    };
    ensure!(!hs.is_empty(), validation, "empty set of maximal-operator scales");
    for &h in &hs {
        ensure!(h.is_finite() && h > 0.0, validation, "maximal-operator scale must be positive, got {h}");
        ensure!(h >= f.spacing(), guard, "scale {h} is below the grid spacing {}", f.spacing());
        ensure!(h <= 0.5 * f.side(), guard, "scale {h} exceeds the torus half-width {}", 0.5 * f.side());
    }
    let modes = omega.modes(1e-15);
    let mut best = vec![0.0f64; f.len()];
    if modes.is_empty() {
        return Ok(f.with_values(vec![ZERO; f.len()]));
    }
    let hmax = hs.iter().cloned().fold(0.0, f64::max);
    let top = hmax * max_frequency(f) + 0.1;
    let tables = tables_for(&modes, |nu| ball_table(nu, top));
    for &h in &hs {
        let table = modal_table(f, &modes, |nu, rho| tables[&nu].eval(h * rho));
        let g = f.apply_table(&table);
        best.par_iter_mut().zip(g.values().par_iter()).for_each(|(b, v)| *b = b.max(v.norm()));
    }
    Ok(f.with_values(best.into_iter().map(|v| Complex64::new(v, 0.0)).collect()))
}

/// Smallest atom scale that keeps eight cells across its radius.
fn check_atom(scale: i32, n: usize, side: f64) -> Result<()> {
    let radius = 2f64.powi(scale);
    ensure!(radius < 0.5 * side, guard, "atom radius {radius} does not fit the torus half-width {}", 0.5 * side);
    ensure!(radius >= 8.0 * side / n as f64, guard, "atom radius {radius} spans fewer than 8 grid cells");
    Ok(())
}

/// Smooth radial mean-zero atom supported in the ball of radius `2^scale`
/// with `||a||_inf = |ball|^{-1}`, the profile of [`AtomProfile`] balanced on
/// the grid itself so the discrete integral vanishes.
pub fn radial_atom(scale: i32, n: usize, side: f64) -> Result<GridFunction> {
    check_atom(scale, n, side)?;
    let radius = 2f64.powi(scale);
    let g = GridFunction::zeros(2, n, side)?;
    let s_of = |idx: usize| {
        let p = g.point(idx);
        p[0].hypot(p[1]) / radius
    };
    let (inner, outer): (f64, f64) = (0..g.len())
        .map(|idx| {
            let s = s_of(idx);
            (AtomProfile::inner(s), AtomProfile::outer(s))
        })
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let profile = AtomProfile::with_mu(inner / outer);
    let scale_factor = 1.0 / (radius * radius);
    let values = (0..g.len()).map(|idx| Complex64::new(scale_factor * profile.value(s_of(idx)), 0.0)).collect();
    GridFunction::from_values(2, n, side, values)
}

/// Low-frequency suppressed atom and the size of what was removed.
#[derive(Debug, Clone)]
pub struct Suppressed {
    pub atom: GridFunction,
    pub k_range: (i32, i32),
    pub residual_l2: f64,
    pub residual_relative: f64,
}

/// `sum_{k >= -C0 - i} L^k_0 ... L^k_r a` over the admissible scales.
pub fn suppress_low_freq(a: &GridFunction, i_atom: i32, c0: i32, fam: &LPFamily) -> Result<Suppressed> {
    let (lo, hi) = fam.admissible_range(a)?;
    let start = lo.max(-c0 - i_atom);
    ensure!(start <= hi, validation, "no admissible scale k >= {} (admissible range [{lo}, {hi}])", -c0 - i_atom);
    let mut acc = vec![0.0f64; a.len()];
    for k in start..=hi {
        acc.iter_mut().zip(fam.product_table(a, k)).for_each(|(s, v)| *s += v);
    }
    let table: Vec<Complex64> = acc.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let out = a.apply_table(&table);
    let residual_l2 = out.sub(a)?.l2_norm();
    let norm = a.l2_norm();
    Ok(Suppressed {
        atom: out,
        k_range: (start, hi),
        residual_l2,
        residual_relative: if norm > 0.0 { residual_l2 / norm } else { 0.0 },
    })
}

/// Frequency pieces `K^k = L^k_0 (K chi)` with their pointwise sup and
/// square aggregate.
#[derive(Debug, Clone)]
pub struct KPieces {
    pub ks: Vec<i32>,
    pub pieces: Vec<GridFunction>,
    pub sup: GridFunction,
    pub aggregate: GridFunction,
    pub kernel: GridFunction,
}

pub fn k_pieces(omega: &CircleFunction, fam: &LPFamily, n: usize, side: f64) -> Result<KPieces> {
    let kernel = make_kernel(omega, n, side, (0, 0))?.base;
    let (lo, hi) = fam.admissible_range(&kernel)?;
    let ks: Vec<i32> = (lo..=hi).collect();
    let pieces = ks.iter().map(|&k| lp_piece(&kernel, fam, k, 0)).collect::<Result<Vec<_>>>()?;
    let mut sup = vec![0.0f64; kernel.len()];
    let mut sq = vec![0.0f64; kernel.len()];
    for p in &pieces {
        for ((s, q), v) in sup.iter_mut().zip(sq.iter_mut()).zip(p.values()) {
            *s = s.max(v.norm());
            *q += v.norm_sqr();
        }
    }
    let real = |v: Vec<f64>| kernel.with_values(v.into_iter().map(|x| Complex64::new(x, 0.0)).collect());
    Ok(KPieces { ks, pieces, sup: real(sup), aggregate: real(sq.into_iter().map(f64::sqrt).collect()), kernel })
}

/// How the sharpness experiment evaluates `T_Omega a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SharpnessEngine {
    /// Separation into angular modes and radial profiles; any `N`.
    Polar,
    /// Periodic grid with the principal-value symbol; small `C^N` only.
    Grid { n: usize, side: f64, n_samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub n_big: usize,
    pub q: f64,
    pub norm: f64,
    pub log2_n: f64,
    pub log2_norm: f64,
    /// Least-squares slope of `log2 norm` against `log2 N` for this `q`.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub rows: Vec<SharpnessRow>,
    /// `(q, fitted slope)` in the order of the requested `qs`.
    pub slopes: Vec<(f64, f64)>,
    /// Measure of the excised set per `N` when the truncated family is used.
    pub excised: Vec<(usize, f64)>,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `||T_{Omega_N} a||_{L^{1,q}}` for each `N` and `q`, `a` the unit radial
/// atom, with fitted growth exponents per `q`.
pub fn sharpness_experiment(
    qs: &[f64],
    ns: &[usize],
    c: u64,
    eps0: Option<f64>,
    engine: SharpnessEngine,
) -> Result<SharpnessReport> {
    ensure!(!qs.is_empty() && ns.len() >= 2, validation, "need at least one q and two values of N");
    let exps = qs.iter().map(|&q| LorentzExponents::new(1.0, q)).collect::<Result<Vec<_>>>()?;
    ensure!(c >= 2, validation, "lacunarity ratio C must be >= 2, got {c}");
    let mut excised = Vec::new();
    let norms: Vec<Vec<f64>> = match engine {
        SharpnessEngine::Polar => {
            ensure!(eps0.is_none(), validation, "the truncated family needs the grid engine");
            ns.iter().map(|&nb| polar_norms(nb, c, &exps, &PolarOptions::default())).collect::<Result<_>>()?
        }
        SharpnessEngine::Grid { n, side, n_samples } => {
            let atom = radial_atom(0, n, side)?;
            let mut out = Vec::new();
            for &nb in ns {
                let omega = match eps0 {
                    Some(e) => {
                        let t = truncated_omega(nb, c, e, n_samples)?;
                        excised.push((nb, t.excised_measure));
                        t.omega
                    }
                    None => lacunary_omega(nb, c, n_samples)?,
                };
                let ta = apply_pv(&omega, &atom)?;
                out.push(exps.iter().map(|&e| lorentz_norm(&ta, e)).collect());
            }
            out
        }
    };
    let log_n: Vec<f64> = ns.iter().map(|&v| (v as f64).log2()).collect();
    let mut slopes = Vec::new();
    let mut rows = Vec::new();
    for (qi, &q) in qs.iter().enumerate() {
        let ys: Vec<f64> = norms.iter().map(|r| r[qi].log2()).collect();
        ensure!(ys.iter().all(|y| y.is_finite()), guard, "vanishing or non-finite norm in the sharpness run");
        let slope = fit_slope(&log_n, &ys);
        slopes.push((q, slope));
        for (i, &nb) in ns.iter().enumerate() {
            rows.push(SharpnessRow { n_big: nb, q, norm: norms[i][qi], log2_n: log_n[i], log2_norm: ys[i], slope });
        }
    }
    rows.sort_by(|a, b| a.n_big.cmp(&b.n_big).then(a.q.total_cmp(&b.q)));
    Ok(SharpnessReport { rows, slopes, excised })
}

#[cfg(test)]
mod tests;
