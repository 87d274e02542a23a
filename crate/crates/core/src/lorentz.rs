//! Decreasing rearrangements and the quasi-norms built on them.
//!
//! `||f||_{p,q} = (int_0^inf (t^{1/p} f*(t))^q dt/t)^{1/q}`, with the usual
//! supremum for `q = inf`. On a step rearrangement every piece integrates
//! in closed form, so the only error is round-off.

use crate::error::{ensure, Result};
use crate::grid::GridFunction;
use serde::{Deserialize, Serialize};

/// Lorentz exponents `(p, q)`; `q = f64::INFINITY` selects weak `L^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzExponents {
    pub p: f64,
    pub q: f64,
}

impl LorentzExponents {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        ensure!(p.is_finite() && p > 0.0, validation, "Lorentz p must lie in (0, inf), got {p}");
        ensure!(q > 0.0 && !q.is_nan(), validation, "Lorentz q must lie in (0, inf], got {q}");
        Ok(LorentzExponents { p, q })
    }

    pub fn weak(p: f64) -> Result<Self> {
        Self::new(p, f64::INFINITY)
    }

    pub fn is_weak(&self) -> bool {
        self.q.is_infinite()
    }

    /// Parse `q` given as a number or `inf`.
    pub fn parse_q(s: &str) -> Result<f64> {
        match s.trim() {
            "inf" | "infinity" | "Inf" => Ok(f64::INFINITY),
            t => t
                .parse::<f64>()
                .map_err(|_| crate::LabError::validation(format!("cannot parse Lorentz q from {s:?}"))),
        }
    }
}

/// Step-function decreasing rearrangement: `f*(t) = levels[i]` on the i-th
/// block of length `widths[i]`, levels strictly decreasing and positive.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Rearrangement {
    pub levels: Vec<f64>,
    pub widths: Vec<f64>,
}

impl Rearrangement {
    /// Rearrangement of `|value|` against per-sample measures.
    pub fn from_weighted(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut v: Vec<(f64, f64)> = pairs
            .into_iter()
            .map(|(a, w)| (a.abs(), w))
            .filter(|&(a, w)| a > 0.0 && w > 0.0)
            .collect();
        // Stable sort keeps input order among ties.
        v.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut out = Rearrangement::default();
        for (a, w) in v {
            match out.levels.last() {
                Some(&last) if last == a => *out.widths.last_mut().unwrap() += w,
                _ => {
                    out.levels.push(a);
                    out.widths.push(w);
                }
            }
        }
        out
    }

    pub fn total_measure(&self) -> f64 {
        self.widths.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Cumulative right endpoints `T_i`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.widths
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect()
    }

    /// Closed-form `L^{p,q}` quasi-norm.
    pub fn lorentz_norm(&self, e: LorentzExponents) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.to_log().ln_lorentz_norm(e).exp()
    }

    pub fn to_log(&self) -> LogSteps {
        LogSteps {
            ln_levels: self.levels.iter().map(|a| a.ln()).collect(),
            ln_widths: self.widths.iter().map(|w| w.ln()).collect(),
        }
    }

    /// `L log^gamma L` Luxemburg norm (natural log), by bisection.
    pub fn llogl_norm(&self, gamma: f64) -> Result<f64> {
        ensure!(gamma >= 0.0 && gamma.is_finite(), validation, "L log L exponent must be >= 0, got {gamma}");
        if self.is_empty() {
            return Ok(0.0);
        }
        let phi = |lam: f64| {
            neumaier(self.levels.iter().zip(&self.widths).map(|(a, w)| {
                let u = a / lam;
                w * u * (std::f64::consts::E + u).ln().powf(gamma)
            }))
        };
        let l1: f64 = neumaier(self.levels.iter().zip(&self.widths).map(|(a, w)| a * w));
        let sup = self.levels[0];
        let mut lo = l1 / (1.0 + (std::f64::consts::E + sup / l1).ln().powf(gamma));
        let mut hi = l1 * (1.0 + (std::f64::consts::E + sup).ln().powf(gamma));
        // The bracket from the norm bounds may need widening in extreme cases.
        while phi(lo) < 1.0 {
            lo *= 0.5;
        }
        while phi(hi) > 1.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            let v = phi(mid);
            if (v - 1.0).abs() <= 1e-10 {
                return Ok(mid);
            }
            if v > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo * hi).sqrt())
    }

    /// Expand into per-sample values (testing helper for uniform widths).
    pub fn expand_uniform(&self, cell: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for (a, w) in self.levels.iter().zip(&self.widths) {
            let k = (w / cell).round() as usize;
            out.extend(std::iter::repeat(*a).take(k));
        }
        out
    }
}

/// Step rearrangement stored through logarithms of its levels and widths,
/// for profiles whose values leave the range of `f64`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LogSteps {
    pub ln_levels: Vec<f64>,
    pub ln_widths: Vec<f64>,
}

impl LogSteps {
    /// `ln ||f||_{p,q}`; levels must be strictly decreasing.
    pub fn ln_lorentz_norm(&self, e: LorentzExponents) -> f64 {
        if self.ln_levels.is_empty() {
            return f64::NEG_INFINITY;
        }
        // ln T_i by running log-sum-exp of the widths.
        let mut ln_t = Vec::with_capacity(self.ln_widths.len());
        let mut acc = f64::NEG_INFINITY;
        for &w in &self.ln_widths {
            acc = if acc == f64::NEG_INFINITY { w } else { acc.max(w) + (-(acc - w).abs()).exp().ln_1p() };
            ln_t.push(acc);
        }
        let inv_p = 1.0 / e.p;
        if e.is_weak() {
            return self.ln_levels.iter().zip(&ln_t).map(|(a, t)| a + inv_p * t).fold(f64::NEG_INFINITY, f64::max);
        }
        let q = e.q;
        let r = q * inv_p;
        // ln of a_i^q (p/q) (T_i^r - T_{i-1}^r), the difference formed
        // without cancellation.
        let logs: Vec<f64> = self
            .ln_levels
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let base = q * a + (e.p / q).ln();
                if i == 0 {
                    base + r * ln_t[0]
                } else {
                    let prev = ln_t[i - 1];
                    base + r * prev + (r * (self.ln_widths[i] - prev).exp().ln_1p()).exp_m1().ln()
                }
            })
            .collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s = neumaier(logs.iter().map(|l| (l - top).exp()));
        (top + s.ln()) / q
    }
}

/// Compensated summation.
pub fn neumaier(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub fn rearrange(f: &GridFunction) -> Rearrangement {
    let cm = f.cell_measure();
    Rearrangement::from_weighted(f.values().iter().map(|v| (v.norm(), cm)))
}

pub fn lorentz_norm(f: &GridFunction, e: LorentzExponents) -> f64 {
    rearrange(f).lorentz_norm(e)
}

pub fn llogl_norm(f: &GridFunction, gamma: f64) -> Result<f64> {
    rearrange(f).llogl_norm(gamma)
}

/// Constant `c` with `||f||_{p,q2} <= c ||f||_{p,q1}` for `q1 <= q2`,
/// namely `(q1/p)^{1/q1 - 1/q2}`.
pub fn q_monotonicity_constant(p: f64, q1: f64, q2: f64) -> f64 {
    (q1 / p).powf(1.0 / q1 - 1.0 / q2)
}

/// `||sum c_i f_i||_{1,q}` divided by `sum |c_i| (1 + log+(1/|c_i|))^{1-1/q}`.
pub fn stein_weiss_ratio(fs: &[GridFunction], cs: &[f64], q: f64) -> Result<f64> {
    ensure!(q >= 1.0, validation, "Stein-Weiss check needs q in [1, inf], got {q}");
    ensure!(!fs.is_empty() && fs.len() == cs.len(), validation, "need one coefficient per function");
    let e = LorentzExponents::new(1.0, q)?;
    let total: f64 = cs.iter().map(|c| c.abs()).sum();
    ensure!(total <= 1.0 + 1e-12, validation, "coefficients must satisfy sum |c_i| <= 1, got {total}");
    for (i, f) in fs.iter().enumerate() {
        ensure!(f.same_grid(&fs[0]), validation, "function {i} lives on a different grid");
        let nrm = lorentz_norm(f, e);
        ensure!(nrm <= 1.0 + 1e-12, validation, "function {i} has L^(1,q) norm {nrm} > 1");
    }
    let mut acc = fs[0].scale(cs[0].into());
    for (f, &c) in fs.iter().zip(cs).skip(1) {
        acc = acc.axpby(1.0.into(), f, c.into())?;
    }
    let expo = if q.is_infinite() { 1.0 } else { 1.0 - 1.0 / q };
    let denom: f64 = cs
        .iter()
        .filter(|c| **c != 0.0)
        .map(|c| c.abs() * (1.0 + (1.0 / c.abs()).ln().max(0.0)).powf(expo))
        .sum();
    ensure!(denom > 0.0, validation, "all coefficients vanish");
    Ok(lorentz_norm(&acc, e) / denom)
}
