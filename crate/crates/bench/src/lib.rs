//! Shared inputs for the criterion benches.

use roughlab::littlewood_paley::band_limited_input;
use roughlab::rng::stream_rng;
use roughlab::GridFunction;

/// Smooth off-center bump on the `n x n` torus of side `side`.
pub fn blob(n: usize, side: f64) -> GridFunction {
    GridFunction::from_real_fn(2, n, side, |x| {
        let (u, v) = (x[0] - 0.3, x[1] + 0.2);
        (-(u * u + v * v) / 2.0).exp() * (1.0 + 0.4 * u - 0.2 * v)
    })
    .expect("valid grid")
}

/// Random input with spectrum in `[lo, hi]` (fractions of Nyquist).
pub fn random_band(n: usize, side: f64, lo: f64, hi: f64, seed: u64) -> GridFunction {
    band_limited_input(2, n, side, lo, hi, &mut stream_rng(seed, 0)).expect("valid band")
}

/// Nonnegative sparse input for the Calderon-Zygmund scan.
pub fn sparse_mass(n: usize, side: f64) -> GridFunction {
    GridFunction::from_real_fn(2, n, side, |x| {
        let h = (x[0] * 12.9898 + x[1] * 78.233).sin() * 43758.5453;
        let frac = h - h.floor();
        if frac > 0.8 { 10.0 * frac } else { 0.0 }
    })
    .expect("valid grid")
}
