//! Periodic grids standing in for functions on the line or the plane.
//!
//! Samples live at `x_i = -L/2 + i h` with `h = L/n`, row-major with axis 0
//! as the slow index. The continuous transform is approximated by
//! `F(q/L) = h^d sum_x f(x) e^{-2 pi i x q/L}` for `q` in `[-n/2, n/2)`,
//! which makes `sum |f|^2 h^d = L^{-d} sum |F|^2` exact.

pub mod io;

use crate::error::{ensure, LabError, Result};
use crate::numerics::fft::{fft_1d, fft_2d, transpose, ZoomPlan};
use crate::numerics::profile::annulus;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Complex samples on the torus `[-L/2, L/2)^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    dim: usize,
    n: usize,
    #[serde(rename = "L")]
    l: f64,
    values: Vec<Complex64>,
}

/// Complex differentiation order `(gamma1, gamma2)` with nonnegative real parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiIndexGamma {
    pub gamma1: Complex64,
    pub gamma2: Complex64,
}

impl MultiIndexGamma {
    pub fn new(gamma1: Complex64, gamma2: Complex64) -> Result<Self> {
        ensure!(
            gamma1.re >= 0.0 && gamma2.re >= 0.0,
            validation,
            "differentiation order needs nonnegative real parts, got ({gamma1}, {gamma2})"
        );
        Ok(MultiIndexGamma { gamma1, gamma2 })
    }

    pub fn real(g1: f64, g2: f64) -> Result<Self> {
        Self::new(Complex64::new(g1, 0.0), Complex64::new(g2, 0.0))
    }

    pub fn zero() -> Self {
        MultiIndexGamma { gamma1: ZERO, gamma2: ZERO }
    }
}

impl std::ops::Add for MultiIndexGamma {
    type Output = MultiIndexGamma;
    fn add(self, o: Self) -> Self {
        MultiIndexGamma { gamma1: self.gamma1 + o.gamma1, gamma2: self.gamma2 + o.gamma2 }
    }
}

/// `|x|^g` with the limit convention at `x = 0`: 1 when `Re g = 0`, else 0.
pub fn abs_pow(x: f64, g: Complex64) -> Complex64 {
    if x == 0.0 {
        if g.re > 0.0 {
            ZERO
        } else {
            Complex64::new(1.0, 0.0)
        }
    } else if g.im == 0.0 {
        Complex64::new(x.abs().powf(g.re), 0.0)
    } else {
        (g * x.abs().ln()).exp()
    }
}

/// Signed frequency index of FFT slot `k` on an `n`-point axis.
#[inline]
pub fn freq_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

impl GridFunction {
    fn check_shape(dim: usize, n: usize, l: f64) -> Result<()> {
        ensure!(dim == 1 || dim == 2, validation, "dimension must be 1 or 2, got {dim}");
        ensure!(n >= 8 && n.is_power_of_two(), validation, "n must be a power of two >= 8, got {n}");
        ensure!(l.is_finite() && l > 0.0, validation, "side length must be positive, got {l}");
        Ok(())
    }

    pub fn zeros(dim: usize, n: usize, l: f64) -> Result<Self> {
        Self::check_shape(dim, n, l)?;
        Ok(GridFunction { dim, n, l, values: vec![ZERO; n.pow(dim as u32)] })
    }

    pub fn from_values(dim: usize, n: usize, l: f64, values: Vec<Complex64>) -> Result<Self> {
        Self::check_shape(dim, n, l)?;
        ensure!(
            values.len() == n.pow(dim as u32),
            validation,
            "expected {} values, got {}",
            n.pow(dim as u32),
            values.len()
        );
        Ok(GridFunction { dim, n, l, values })
    }

    /// Sample `f` at the grid points; `f` receives the coordinates.
    pub fn from_fn(dim: usize, n: usize, l: f64, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Result<Self> {
        let mut g = Self::zeros(dim, n, l)?;
        let h = l / n as f64;
        let c = |i: usize| -0.5 * l + i as f64 * h;
        if dim == 1 {
            g.values.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(&[c(i)]));
        } else {
            g.values.par_chunks_mut(n).enumerate().for_each(|(i0, row)| {
                for (i1, v) in row.iter_mut().enumerate() {
                    *v = f(&[c(i0), c(i1)]);
                }
            });
        }
        Ok(g)
    }

    pub fn from_real_fn(dim: usize, n: usize, l: f64, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Self> {
        Self::from_fn(dim, n, l, |x| Complex64::new(f(x), 0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn side(&self) -> f64 {
        self.l
    }
    pub fn spacing(&self) -> f64 {
        self.l / self.n as f64
    }
    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coordinate of sample `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.l + i as f64 * self.spacing()
    }

    /// Coordinates of flat index `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        if self.dim == 1 {
            [self.coord(idx), 0.0]
        } else {
            [self.coord(idx / self.n), self.coord(idx % self.n)]
        }
    }

    /// Grid of the same shape holding `values`.
    pub fn with_values(&self, values: Vec<Complex64>) -> GridFunction {
        assert_eq!(values.len(), self.values.len());
        GridFunction { dim: self.dim, n: self.n, l: self.l, values }
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.dim == other.dim && self.n == other.n && self.l == other.l
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Sync) -> GridFunction {
        self.with_values(self.values.par_iter().map(|&v| f(v)).collect())
    }

    pub fn abs(&self) -> GridFunction {
        self.map(|v| Complex64::new(v.norm(), 0.0))
    }

    pub fn scale(&self, c: Complex64) -> GridFunction {
        self.map(|v| v * c)
    }

    /// `a self + b other`.
    pub fn axpby(&self, a: Complex64, other: &GridFunction, b: Complex64) -> Result<GridFunction> {
        ensure!(self.same_grid(other), validation, "grid mismatch in linear combination");
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect()))
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.axpby(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.axpby(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    /// Discrete integral `sum f h^d`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.cell_measure()
    }

    /// Discrete `L^p` norm for `p` in `[1, inf)`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm().powf(p)).sum();
        (s * self.cell_measure()).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.cell_measure()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest `|x|` (Euclidean, in torus coordinates) where `|f|` exceeds
    /// `rel` times its maximum; zero for the zero function.
    pub fn support_radius(&self, rel: f64) -> f64 {
        let thr = rel * self.sup_norm();
        if thr == 0.0 {
            return 0.0;
        }
        (0..self.values.len())
            .filter(|&i| self.values[i].norm() > thr)
            .map(|i| {
                let p = self.point(i);
                (p[0] * p[0] + p[1] * p[1]).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Physical frequency `q/L` of FFT slot `k`.
    pub fn freq(&self, k: usize) -> f64 {
        freq_index(k, self.n) as f64 / self.l
    }

    /// Frequencies of flat spectral index `idx` (FFT order).
    pub fn freq_point(&self, idx: usize) -> [f64; 2] {
        if self.dim == 1 {
            [self.freq(idx), 0.0]
        } else {
            [self.freq(idx / self.n), self.freq(idx % self.n)]
        }
    }

    /// Largest resolvable frequency `n/(2L)`.
    pub fn nyquist(&self) -> f64 {
        0.5 * self.n as f64 / self.l
    }

    fn raw_fft(&self, buf: &mut [Complex64], inverse: bool) {
        if self.dim == 1 {
            fft_1d(buf, inverse);
        } else {
            fft_2d(buf, self.n, inverse);
        }
    }

    /// Centered transform `F(q/L)` in FFT slot order.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        self.raw_fft(&mut buf, false);
        let cm = self.cell_measure();
        let n = self.n;
        buf.par_iter_mut().enumerate().for_each(|(idx, v)| {
            let parity = if self.dim == 1 {
                freq_index(idx, n)
            } else {
                freq_index(idx / n, n) + freq_index(idx % n, n)
            };
            let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *v *= sign * cm;
        });
        buf
    }

    /// Inverse of [`GridFunction::spectrum`] on a grid shaped like `self`.
    pub fn from_spectrum(&self, spec: Vec<Complex64>) -> GridFunction {
        let mut buf = spec;
        let n = self.n;
        let dim = self.dim;
        buf.par_iter_mut().enumerate().for_each(|(idx, v)| {
            let parity = if dim == 1 { freq_index(idx, n) } else { freq_index(idx / n, n) + freq_index(idx % n, n) };
            if parity.rem_euclid(2) != 0 {
                *v = -*v;
            }
        });
        self.raw_fft(&mut buf, true);
        let s = 1.0 / self.l.powi(dim as i32);
        buf.par_iter_mut().for_each(|v| *v *= s);
        self.with_values(buf)
    }

    /// Spectral-side squared `L^2` norm, `L^{-d} sum |F|^2`.
    pub fn spectral_l2_sq(&self) -> f64 {
        let s: f64 = self.spectrum().iter().map(|v| v.norm_sqr()).sum();
        s / self.l.powi(self.dim as i32)
    }

    /// Evaluate `symbol` at every discrete frequency, in FFT slot order.
    /// Non-finite values are rejected with the offending frequency.
    pub fn symbol_table(&self, symbol: impl Fn(&[f64]) -> Complex64 + Sync) -> Result<Vec<Complex64>> {
        let table: Vec<Complex64> = (0..self.values.len())
            .into_par_iter()
            .map(|idx| {
                let xi = self.freq_point(idx);
                symbol(&xi[..self.dim])
            })
            .collect();
        if let Some(idx) = table.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            let xi = self.freq_point(idx);
            return Err(LabError::validation(format!(
                "symbol is not finite at frequency {:?}: {}",
                &xi[..self.dim],
                table[idx]
            )));
        }
        Ok(table)
    }

    /// Multiply the transform by a precomputed table (FFT slot order).
    pub fn apply_table(&self, table: &[Complex64]) -> GridFunction {
        assert_eq!(table.len(), self.values.len());
        let mut buf = self.values.clone();
        self.raw_fft(&mut buf, false);
        buf.par_iter_mut().zip(table.par_iter()).for_each(|(v, s)| *v *= s);
        self.raw_fft(&mut buf, true);
        let s = 1.0 / self.values.len() as f64;
        buf.par_iter_mut().for_each(|v| *v *= s);
        self.with_values(buf)
    }

    /// Fourier multiplier with `symbol(xi)` evaluated at physical frequencies.
    pub fn fourier_multiplier(&self, symbol: impl Fn(&[f64]) -> Complex64 + Sync) -> Result<GridFunction> {
        let table = self.symbol_table(symbol)?;
        Ok(self.apply_table(&table))
    }

    /// Fractional differentiation with symbol `|xi_1|^{g1} |xi_2|^{g2}`.
    pub fn frac_diff(&self, gamma: MultiIndexGamma) -> Result<GridFunction> {
        ensure!(self.dim == 2, validation, "fractional differentiation is two-dimensional");
        ensure!(gamma.gamma1.re >= 0.0 && gamma.gamma2.re >= 0.0, validation, "negative real part in {gamma:?}");
        self.fourier_multiplier(|xi| abs_pow(xi[0], gamma.gamma1) * abs_pow(xi[1], gamma.gamma2))
    }

    /// Evaluate the transform at the scaled lattice `s * q / L`, zero where
    /// `|s q| >= n/2` on some axis. Returns FFT slot order and the spectral
    /// energy fraction discarded by the band cut.
    pub fn zoomed_spectrum(&self, s: f64) -> (Vec<Complex64>, f64) {
        let n = self.n;
        let plan = ZoomPlan::new(n, s);
        // Pre-twist e^{i pi s k} and post-twist e^{i pi s (p - n/2)} from the
        // centered coordinates.
        let pre: Vec<Complex64> = (0..n).map(|k| half_turns(s, k as i64)).collect();
        let post: Vec<Complex64> = (0..n).map(|p| half_turns(s, p as i64 - (n / 2) as i64)).collect();
        let axis = |buf: &mut [Complex64]| {
            buf.par_chunks_mut(n).for_each_init(Vec::new, |scratch, row| {
                for (v, t) in row.iter_mut().zip(&pre) {
                    *v *= t;
                }
                plan.apply(row, scratch);
                for (v, t) in row.iter_mut().zip(&post) {
                    *v *= t;
                }
                // Reorder from centered p to FFT slot order.
                row.rotate_left(n / 2);
            });
        };
        let mut buf = self.values.clone();
        if self.dim == 1 {
            axis(&mut buf);
        } else {
            axis(&mut buf);
            transpose(&mut buf, n);
            axis(&mut buf);
            transpose(&mut buf, n);
        }
        let cm = self.cell_measure();
        let half = (n / 2) as f64;
        let outside = |q: i64| {
            let x = s * q as f64;
            x < -half || x >= half
        };
        let cut = |idx: usize| {
            if self.dim == 1 {
                outside(freq_index(idx, n))
            } else {
                outside(freq_index(idx / n, n)) || outside(freq_index(idx % n, n))
            }
        };
        for (idx, v) in buf.iter_mut().enumerate() {
            *v = if cut(idx) { ZERO } else { *v * cm };
        }
        // Energy of the original transform beyond the scaled band edge.
        let mut frac = 0.0;
        if s > 1.0 {
            let edge = half / s;
            let beyond = |q: i64| (q as f64).abs() >= edge;
            let spec = self.spectrum();
            let total: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
            let lost: f64 = spec
                .iter()
                .enumerate()
                .filter(|(idx, _)| {
                    if self.dim == 1 {
                        beyond(freq_index(*idx, n))
                    } else {
                        beyond(freq_index(idx / n, n)) || beyond(freq_index(idx % n, n))
                    }
                })
                .map(|(_, v)| v.norm_sqr())
                .sum();
            if total > 0.0 {
                frac = lost / total;
            }
        }
        (buf, frac)
    }

    /// `delta_j f(x) = 2^{-jd} f(2^{-j} x)`, resampled spectrally.
    pub fn dilate(&self, j: i32) -> Result<GridFunction> {
        if j == 0 {
            return Ok(self.clone());
        }
        let factor = 2f64.powi(j.abs());
        ensure!(
            factor <= self.n as f64 / 16.0,
            guard,
            "dilation 2^{j} exceeds the aliasing guard n/16 = {}",
            self.n / 16
        );
        if j > 0 {
            let r = self.support_radius(1e-12);
            ensure!(
                r * factor < 0.5 * self.l,
                guard,
                "dilated support radius {} exceeds the torus half-width {}",
                r * factor,
                0.5 * self.l
            );
        }
        let (spec, lost) = self.zoomed_spectrum(2f64.powi(j));
        ensure!(lost <= 1e-20, guard, "dilation by 2^{j} discards spectral energy fraction {lost:e}");
        Ok(self.from_spectrum(spec))
    }

    /// Radial average `C^{-1} int chi(t) t^{-d} g(x/t) dt/t` with the
    /// default 129-node rule.
    pub fn radial_average(&self) -> Result<GridFunction> {
        self.radial_average_with(129)
    }

    /// Radial average with `nodes` log-spaced trapezoid nodes over `[1/2, 2]`.
    pub fn radial_average_with(&self, nodes: usize) -> Result<GridFunction> {
        ensure!(self.dim == 2, validation, "radial averaging is two-dimensional");
        ensure!(nodes >= 3, validation, "radial averaging needs at least 3 nodes");
        ensure!(2.0 * 8.0 * std::f64::consts::SQRT_2 < 0.5 * self.l, guard, "torus too small for the averaged annulus");
        let thr = 1e-12 * self.sup_norm();
        for (idx, v) in self.values.iter().enumerate() {
            if v.norm() > thr {
                let p = self.point(idx);
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                ensure!(
                    (0.125..=8.0).contains(&r),
                    guard,
                    "input not supported in the annulus 1/8 <= |x| <= 8 (value {} at |x| = {r})",
                    v.norm()
                );
            }
        }
        let rule = radial_rule(nodes);
        let c: f64 = rule.iter().map(|p| p.1).sum();
        let parts: Vec<Vec<Complex64>> =
            rule.par_iter().filter(|p| p.1 > 0.0).map(|&(t, w)| {
                let (spec, _) = self.zoomed_spectrum(t);
                spec.into_iter().map(|v| v * w).collect()
            })
            .collect();
        let mut acc = vec![ZERO; self.values.len()];
        for part in &parts {
            for (a, v) in acc.iter_mut().zip(part) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|v| *v /= c);
        Ok(self.from_spectrum(acc))
    }
}

/// `e^{i pi s k}` with the exponent reduced exactly for dyadic `s`.
fn half_turns(s: f64, k: i64) -> Complex64 {
    let x = s * k as f64;
    let r = x - 2.0 * (x / 2.0).floor();
    Complex64::from_polar(1.0, PI * r)
}

/// `(t, weight)` pairs of the log-trapezoid rule for `chi(t) dt/t` on `[1/2, 2]`.
pub fn radial_rule(nodes: usize) -> Vec<(f64, f64)> {
    let lo = 0.5f64.ln();
    let step = 4f64.ln() / (nodes - 1) as f64;
    (0..nodes)
        .map(|i| {
            let t = (lo + i as f64 * step).exp();
            let w = if i == 0 || i + 1 == nodes { 0.5 } else { 1.0 };
            (t, w * step * annulus(t))
        })
        .collect()
}
