//! Cached FFT plans, separable 2D transforms and the chirp-z zoom transform.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

type Plan = Arc<dyn Fft<f64>>;

static PLANS: Lazy<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>> =
    Lazy::new(|| Mutex::new((FftPlanner::new(), HashMap::new())));

fn plan(n: usize, inverse: bool) -> Plan {
    let mut guard = PLANS.lock().expect("fft planner poisoned");
    let (planner, cache) = &mut *guard;
    cache
        .entry((n, inverse))
        .or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Unnormalized in-place transform of one contiguous sequence.
pub fn fft_1d(buf: &mut [Complex64], inverse: bool) {
    plan(buf.len(), inverse).process(buf);
}

/// Unnormalized transform of every contiguous row of length `n`.
pub fn fft_rows(buf: &mut [Complex64], n: usize, inverse: bool) {
    let p = plan(n, inverse);
    buf.par_chunks_mut(n).for_each(|row| p.process(row));
}

/// Transpose a square row-major `n x n` array.
pub fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Unnormalized separable transform of a square `n x n` row-major array.
pub fn fft_2d(buf: &mut [Complex64], n: usize, inverse: bool) {
    fft_rows(buf, n, inverse);
    transpose(buf, n);
    fft_rows(buf, n, inverse);
    transpose(buf, n);
}

/// `exp(-i pi * s * k^2 / n)` evaluated with the exponent reduced before the
/// trigonometric call. When `s` is a power of two the reduction is exact.
fn chirp(s: f64, k: i64, n: usize) -> Complex64 {
    let k2 = (k as i128) * (k as i128);
    let modulus = 2 * n as i128;
    let (mant, exp) = dyadic_parts(s);
    let phase = match (mant, exp) {
        (Some(1), e) if e >= 0 => {
            let r = ((k2 << e) % modulus) as f64;
            -PI * r / n as f64
        }
        (Some(1), e) => {
            let big = modulus << (-e);
            let r = (k2 % big) as f64;
            -PI * r / (n as f64 * 2f64.powi(-e))
        }
        _ => {
            let x = s * (k2 as f64) / n as f64;
            -PI * (x - 2.0 * (x / 2.0).floor())
        }
    };
    Complex64::from_polar(1.0, phase)
}

/// Returns `(Some(1), e)` when `s == 2^e` exactly for a moderate `e`.
fn dyadic_parts(s: f64) -> (Option<i64>, i32) {
    if s > 0.0 {
        let e = s.log2().round() as i32;
        if (-40..=40).contains(&e) && 2f64.powi(e) == s {
            return (Some(1), e);
        }
    }
    (None, 0)
}

/// Chirp-z evaluation of `y_p = sum_k x_k exp(-2 pi i s p k / n)` for
/// `p = 0..n`, by Bluestein's convolution.
pub struct ZoomPlan {
    n: usize,
    m: usize,
    pre: Vec<Complex64>,
    kernel_hat: Vec<Complex64>,
}

impl ZoomPlan {
    pub fn new(n: usize, s: f64) -> Self {
        let m = (2 * n).next_power_of_two();
        let pre: Vec<Complex64> = (0..n).map(|k| chirp(s, k as i64, n)).collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..n {
            let c = chirp(s, k as i64, n).conj();
            kernel[k] = c;
            if k > 0 {
                kernel[m - k] = c;
            }
        }
        fft_1d(&mut kernel, false);
        ZoomPlan { n, m, pre, kernel_hat: kernel }
    }

    /// Transform `x` in place; `scratch` must hold at least `m` entries.
    pub fn apply(&self, x: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        scratch.clear();
        scratch.resize(self.m, Complex64::new(0.0, 0.0));
        for k in 0..self.n {
            scratch[k] = x[k] * self.pre[k];
        }
        fft_1d(scratch, false);
        for (a, b) in scratch.iter_mut().zip(&self.kernel_hat) {
            *a *= b;
        }
        fft_1d(scratch, true);
        let norm = 1.0 / self.m as f64;
        for p in 0..self.n {
            x[p] = scratch[p] * self.pre[p] * norm;
        }
    }
}
