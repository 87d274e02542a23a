//! Mode-by-mode evaluation of `T_Omega a` for lacunary `Omega` and a radial
//! atom `a`.
//!
//! Rotation invariance gives `T_{e^{i nu theta}} a = e^{i nu theta} g_nu(r)`
//! with a real radial profile `g_nu`, so `|T a|` on the circle of radius `r`
//! is `N^{-1/2} |sum_j g_{C^j}(r) e^{i C^j theta}|`. Only a few consecutive
//! modes matter at any radius, and because the frequencies are powers of
//! `C` the angular distribution of that sum equals the distribution of
//! `sum_j g_j(r) e^{i C^{j - j_lo} phi}` for uniform `phi`. A log-spaced
//! radial grid times a short uniform angular grid then samples the whole
//! plane, out to radii far beyond any periodic grid.

use super::RadialTable;
use crate::error::{ensure, Result};
use crate::lorentz::{LorentzExponents, Rearrangement};
use crate::numerics::bessel::bessel_j_one;
use crate::numerics::profile::exp_bump;
use crate::numerics::quadrature::{composite, gauss_legendre, Rule};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, LN_2, PI};

/// Unit-scale radial atom profile `A(s) = (e / pi) b(s) (1 - mu s^2)`, `b`
/// the exponential bump: a positive inner bump minus the annular bump
/// `mu s^2 b(s)`, balanced so that `int A(|x|) dx = 0`. The maximum of `|A|`
/// is `A(0) = 1/pi`, the reciprocal area of the unit disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomProfile {
    pub mu: f64,
}

impl AtomProfile {
    pub fn inner(s: f64) -> f64 {
        exp_bump(s)
    }

    pub fn outer(s: f64) -> f64 {
        s * s * exp_bump(s)
    }

    pub fn with_mu(mu: f64) -> Self {
        AtomProfile { mu }
    }

    /// Balance fixed by the continuum integrals `int b(s) s ds = mu int b(s) s^3 ds`.
    pub fn continuum() -> Self {
        let rule = composite(8, 0.0, 1.0, |a, b| gauss_legendre(32, a, b));
        let inner = rule.integrate(|s| Self::inner(s) * s);
        let outer = rule.integrate(|s| Self::outer(s) * s);
        AtomProfile { mu: inner / outer }
    }

    pub fn value(&self, s: f64) -> f64 {
        (Self::inner(s) - self.mu * Self::outer(s)) * (E / PI)
    }

    /// Two-dimensional Fourier transform `2 pi int_0^1 A(s) J_0(2 pi rho s) s ds`.
    pub fn transform(&self, rho: f64) -> f64 {
        let panels = (rho / 2.0).ceil() as usize + 8;
        let rule = composite(panels, 0.0, 1.0, |x, y| gauss_legendre(32, x, y));
        2.0 * PI * rule.integrate(|s| self.value(s) * bessel_j_one(0, 2.0 * PI * rho * s) * s)
    }
}

/// Sampling controls of the polar evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarOptions {
    /// Radial nodes per octave.
    pub per_octave: usize,
    /// Modes weaker than this fraction of the strongest one at a radius are dropped.
    pub keep: f64,
    /// Cap on the angular samples per radius.
    pub max_angular: usize,
    /// Innermost radius sampled; `T a` is smooth and tends to 0 at the origin.
    pub r_min: f64,
    /// Outermost radius as a multiple of `C^N`.
    pub tail: f64,
    /// The atom transform is treated as zero past the last frequency where
    /// it exceeds this fraction of its maximum.
    pub spectrum_cut: f64,
}

impl Default for PolarOptions {
    fn default() -> Self {
        PolarOptions { per_octave: 24, keep: 1e-3, max_angular: 16384, r_min: 0.05, tail: 1e3, spectrum_cut: 1e-7 }
    }
}

/// Radius below which profiles come from the Hankel integral rather than
/// direct quadrature over the atom's support.
const NEAR: f64 = 2.0;

struct Engine {
    atom: AtomProfile,
    spectrum: RadialTable,
    rho_cut: f64,
    /// Nodes and `rho`-weighted atom transform for the Hankel integral.
    hankel: Vec<(f64, f64)>,
}

impl Engine {
    fn new(opts: &PolarOptions) -> Self {
        let atom = AtomProfile::continuum();
        let spectrum = RadialTable::build(160.0, 1.0 / 32.0, |rho| atom.transform(rho));
        let top = spectrum.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let last = spectrum.values.iter().rposition(|v| v.abs() > opts.spectrum_cut * top).unwrap_or(0);
        let rho_cut = (last + 1) as f64 * spectrum.step;
        let rule = composite((rho_cut * (NEAR + 1.0) / 2.0).ceil() as usize + 4, 0.0, rho_cut, |a, b| {
            gauss_legendre(16, a, b)
        });
        let hankel = rule.nodes.iter().zip(&rule.weights).map(|(&p, &w)| (p, w * p * atom.transform(p))).collect();
        Engine { atom, spectrum, rho_cut, hankel }
    }

    fn spectrum_at(&self, rho: f64) -> f64 {
        if rho >= self.rho_cut {
            0.0
        } else {
            self.spectrum.eval(rho)
        }
    }

    /// `g_nu(r) = (4 pi^2 / nu) int a^(rho) J_nu(2 pi rho r) rho d rho`.
    fn hankel_profile(&self, nu: usize, r: f64) -> f64 {
        let s: f64 = self.hankel.iter().map(|&(p, w)| w * bessel_j_one(nu, 2.0 * PI * p * r)).sum();
        4.0 * PI * PI / nu as f64 * s
    }

    /// `g_nu(r)` as the absolutely convergent integral of
    /// `A(|z|) e^{i nu arg(x - z)} |x - z|^{-2}` over the unit disc, `x = (r, 0)`, `r >= 2`.
    fn disc_profile(&self, nu: f64, r: f64) -> f64 {
        // Largest phase rate of `nu arg(x - z)` over the disc, reached at `z = (1, 0)`.
        let kappa = nu / (r - 1.0);
        let panels = (kappa * 0.5 / (2.0 * PI) / 2.0).ceil() as usize + 2;
        let half = |a: f64, b: f64| composite(panels, a, b, |x, y| gauss_legendre(16, x, y));
        let mut rule: Rule = half(0.0, 0.5);
        let upper = half(0.5, 1.0);
        rule.nodes.extend(upper.nodes);
        rule.weights.extend(upper.weights);
        let m = {
            let m = ((1.5 * kappa).ceil() as usize + 48).max(64);
            m + (m & 1)
        };
        let trig: Vec<(f64, f64)> = (0..m).map(|k| (2.0 * PI * k as f64 / m as f64).sin_cos()).collect();
        let mut acc = 0.0;
        for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
            let a = self.atom.value(s);
            if a == 0.0 {
                continue;
            }
            let mut ring = 0.0;
            for &(sn, cs) in &trig {
                let dx = r - s * cs;
                let dy = -s * sn;
                ring += (nu * dy.atan2(dx)).cos() / (dx * dx + dy * dy);
            }
            acc += w * a * s * ring;
        }
        acc * 2.0 * PI / m as f64
    }
}

/// `(value, measure)` samples of `|T_{Omega_N} a|` on one circle.
fn circle_samples(eng: &Engine, opts: &PolarOptions, freqs: &[f64], c: u64, amp: f64, r: f64, weight: f64) -> Vec<(f64, f64)> {
    let mut strong: Vec<(usize, f64)> = if r < NEAR {
        let limit = 2.0 * PI * eng.rho_cut * r + 30.0;
        freqs
            .iter()
            .enumerate()
            .filter(|(_, &nu)| nu <= limit)
            .map(|(j, &nu)| (j, eng.hankel_profile(nu as usize, r)))
            .collect()
    } else {
        let predicted: Vec<f64> = freqs.iter().map(|&nu| eng.spectrum_at(nu / (2.0 * PI * r)).abs()).collect();
        let top = predicted.iter().cloned().fold(0.0, f64::max);
        freqs
            .iter()
            .enumerate()
            .filter(|(j, _)| predicted[*j] > 1e-2 * opts.keep * top)
            .map(|(j, &nu)| (j, eng.disc_profile(nu, r)))
            .collect()
    };
    let top = strong.iter().fold(0.0f64, |m, g| m.max(g.1.abs()));
    if top == 0.0 {
        return Vec::new();
    }
    strong.retain(|g| g.1.abs() >= opts.keep * top);
    // Drop the weaker end mode until the angular grid resolves the span.
    let samples_for = |s: &[(usize, f64)]| {
        let span = (s[s.len() - 1].0 - s[0].0) as u32;
        (c as f64).powi(span as i32) * 4.0
    };
    while strong.len() > 1 && samples_for(&strong) > opts.max_angular as f64 {
        if strong[0].1.abs() < strong[strong.len() - 1].1.abs() {
            strong.remove(0);
        } else {
            strong.pop();
        }
    }
    if strong.len() == 1 {
        return vec![(amp * strong[0].1.abs(), weight * 2.0 * PI)];
    }
    let m = (samples_for(&strong) as usize).max(16).next_power_of_two();
    let j0 = strong[0].0;
    let steps: Vec<(u64, f64)> = strong
        .iter()
        .map(|&(j, g)| {
            let mut f = 1u64;
            for _ in j0..j {
                f = f * c % m as u64;
            }
            (f, g)
        })
        .collect();
    let w = weight * 2.0 * PI / m as f64;
    (0..m as u64)
        .map(|k| {
            let z: Complex64 = steps
                .iter()
                .map(|&(f, g)| Complex64::from_polar(g, 2.0 * PI * ((f * k) % m as u64) as f64 / m as f64))
                .sum();
            (amp * z.norm(), w)
        })
        .collect()
}

/// `||T_{Omega_N} a||_{L^{p,q}}` for each requested exponent pair, with
/// `Omega_N = N^{-1/2} sum_{j=1}^N e^{i C^j theta}` and `a` the unit atom.
pub fn polar_norms(n_big: usize, c: u64, exps: &[LorentzExponents], opts: &PolarOptions) -> Result<Vec<f64>> {
    ensure!(c >= 2, validation, "lacunarity ratio C must be >= 2, got {c}");
    ensure!(n_big >= 1, validation, "lacunary sum needs N >= 1");
    ensure!(opts.per_octave >= 4 && opts.keep > 0.0 && opts.keep < 1.0, validation, "invalid polar sampling options");
    let top_exp = n_big as f64 * (c as f64).log2();
    ensure!(top_exp < 900.0, validation, "C^N = 2^{top_exp} overflows double precision");
    let eng = Engine::new(opts);
    let freqs: Vec<f64> = (1..=n_big as i32).map(|j| (c as f64).powi(j)).collect();
    let amp = 1.0 / (n_big as f64).sqrt();
    let r_max = opts.tail * freqs[freqs.len() - 1];
    let step = LN_2 / opts.per_octave as f64;
    let count = ((r_max / opts.r_min).ln() / step).ceil() as usize;
    let pairs: Vec<Vec<(f64, f64)>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let r = opts.r_min * ((k as f64 + 0.5) * step).exp();
            circle_samples(&eng, opts, &freqs, c, amp, r, r * r * step)
        })
        .collect();
    let rearr = Rearrangement::from_weighted(pairs.into_iter().flatten());
    Ok(exps.iter().map(|&e| rearr.lorentz_norm(e)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuum_atom_has_mean_zero_and_unit_bound() {
        let a = AtomProfile::continuum();
        let mean = composite(8, 0.0, 1.0, |x, y| gauss_legendre(32, x, y)).integrate(|s| a.value(s) * s);
        assert!(mean.abs() < 1e-15, "mean {mean}");
        assert!((a.value(0.0) - 1.0 / PI).abs() < 1e-15);
        let low = (0..=1000).map(|i| a.value(i as f64 / 1000.0)).fold(0.0, f64::min);
        assert!(-low < 1.0 / PI);
        assert!(a.transform(0.0).abs() < 1e-12, "{}", a.transform(0.0));
    }

    #[test]
    fn hankel_and_disc_profiles_agree_outside_support() {
        let eng = Engine::new(&PolarOptions::default());
        for &nu in &[8usize, 20, 64] {
            for &r in &[2.0, 3.0, 6.0] {
                let a = eng.hankel_profile(nu, r);
                let b = eng.disc_profile(nu as f64, r);
                let scale = eng.disc_profile(nu as f64, nu as f64 / (2.0 * PI * 0.75)).abs().max(a.abs());
                assert!((a - b).abs() < 1e-5 * scale, "nu={nu} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn far_field_follows_atom_transform() {
        // g_nu(r) ~ r^{-2} a^(nu / (2 pi r)) once r is large.
        let eng = Engine::new(&PolarOptions::default());
        let nu = 4096.0;
        let r = nu / (2.0 * PI * 0.75);
        let exact = eng.disc_profile(nu, r);
        let approx = eng.spectrum_at(0.75) / (r * r);
        assert!((exact - approx).abs() < 1e-2 * approx.abs(), "{exact} vs {approx}");
    }
}
