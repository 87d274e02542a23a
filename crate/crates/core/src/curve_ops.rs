//! Operators along the curve `(t, |t|^m)` in the plane.
//!
//! Every operator here is a sum of convolutions with measures carried by a
//! dyadic piece `|t| ~ 2^{-l}` of the curve. A convolution is applied as a
//! Fourier multiplier: the translate `f(x_1 - t, x_2 - |t|^m)` is an exact
//! phase shift of the spectrum, and the `t`-integral is done by composite
//! Gauss-Legendre quadrature at every grid frequency. Nodes at `t` and `-t`
//! are always combined before summation, so principal values cancel
//! exactly.

use crate::error::{ensure, Result};
use crate::grid::{GridFunction, MultiIndexGamma};
use crate::littlewood_paley::{angular_projection, band_limited_input, build_lp_family, square_function, SquareFlavor};
use crate::lorentz::{lorentz_norm, LorentzExponents};
use crate::numerics::profile::{annulus, exp_bump, smooth_step};
use crate::numerics::quadrature::{clenshaw_curtis, composite, gauss_legendre, Rule};
use crate::rng::stream_rng;
use crate::rough_ops::radial_atom;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Fewest Gauss-Legendre nodes per panel accepted by [`curve_convolve`].
pub const MIN_QUAD_NODES: usize = 16;

/// Largest accepted `C^4` norm of a window; only degenerate widths reach it.
pub const C4_LIMIT: f64 = 1e14;

/// Smooth cutoff profiles in the curve parameter `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Window {
    /// `chi0(t/2) - chi0(t)`, even, supported on `1/2 <= |t| <= 2`.
    Annulus,
    /// Exponential bump on `[a, b]`, an interval on one side of the origin.
    Bump { a: f64, b: f64 },
    /// Even exponential bump on `inner <= |t| <= outer`.
    Ring { inner: f64, outer: f64 },
    /// Even exponential bump on `|t| <= radius`.
    Full { radius: f64 },
}

impl Window {
    /// Window of the dyadic measures `d mu_l`.
    pub fn dyadic() -> Self {
        Window::Bump { a: 0.5, b: 2.0 }
    }

    /// Cutoff of the maximal and averaging operators: supported in
    /// `|t| < 2^{-5}` and vanishing on `|t| < 2^{-6}`.
    pub fn eta() -> Self {
        Window::Ring { inner: 2f64.powi(-6), outer: 2f64.powi(-5) }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Window::Annulus => true,
            Window::Bump { a, b } => a.is_finite() && b.is_finite() && a < b && a * b > 0.0,
            Window::Ring { inner, outer } => inner >= 0.0 && inner < outer && outer.is_finite(),
            Window::Full { radius } => radius > 0.0 && radius.is_finite(),
        };
        ensure!(ok, validation, "malformed window {self:?}");
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Window::Annulus => annulus(t),
            Window::Bump { a, b } => exp_bump((t - 0.5 * (a + b)) / (0.5 * (b - a))),
            Window::Ring { inner, outer } => exp_bump((t.abs() - 0.5 * (inner + outer)) / (0.5 * (outer - inner))),
            Window::Full { radius } => exp_bump(t / radius),
        }
    }

    /// Interval of `|t|` outside which the window vanishes.
    pub fn abs_support(&self) -> (f64, f64) {
        match *self {
            Window::Annulus => (0.5, 2.0),
            Window::Bump { a, b } => (a.abs().min(b.abs()), a.abs().max(b.abs())),
            Window::Ring { inner, outer } => (inner, outer),
            Window::Full { radius } => (0.0, radius),
        }
    }

    pub fn is_even(&self) -> bool {
        !matches!(self, Window::Bump { .. })
    }

    /// `max_{k <= 4} sup |w^{(k)}|` by central differences over the support.
    pub fn c4_norm(&self) -> f64 {
        let (lo, hi) = match *self {
            Window::Bump { a, b } => (a, b),
            _ => (-self.abs_support().1, self.abs_support().1),
        };
        let samples = 4000;
        let h = (hi - lo) / samples as f64;
        let d = (hi - lo) / 400.0;
        let f = |t: f64| self.value(t);
        (0..=samples)
            .map(|i| {
                let t = lo + i as f64 * h;
                let (m2, m1, z, p1, p2) = (f(t - 2.0 * d), f(t - d), f(t), f(t + d), f(t + 2.0 * d));
                let d1 = (p1 - m1) / (2.0 * d);
                let d2 = (p1 - 2.0 * z + m1) / (d * d);
                let d3 = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * d * d * d);
                let d4 = (p2 - 4.0 * p1 + 6.0 * z - 4.0 * m1 + m2) / (d * d * d * d);
                z.abs().max(d1.abs()).max(d2.abs()).max(d3.abs()).max(d4.abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Density carried by a [`CurveMeasure`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MeasureKind {
    /// `2^l w(2^l t) dt`.
    Mu,
    /// `w(2^l t) |t|^{gamma_1 + gamma_2 m} dt / t` in the principal-value sense.
    Sigma { gamma: MultiIndexGamma },
    /// `w(2^l t) eta(t) |t|^{m alpha} dt / |t|`.
    Nu { alpha: Complex64, eta: Window },
}

/// A measure on the dyadic piece `|t| ~ 2^{-l}` of the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveMeasure {
    pub l: i32,
    pub m: f64,
    pub window: Window,
    pub kind: MeasureKind,
    /// `C^4` norm of the unit-scale window, measured on construction.
    pub c4_norm: f64,
}

impl CurveMeasure {
    pub fn new(l: i32, m: f64, window: Window, kind: MeasureKind) -> Result<Self> {
        ensure!(m.is_finite() && m > 1.0, validation, "curve exponent must exceed 1, got {m}");
        ensure!((-40..=60).contains(&l), validation, "scale index {l} outside [-40, 60]");
        window.validate()?;
        match kind {
            MeasureKind::Mu => {}
            MeasureKind::Sigma { gamma } => {
                ensure!(window.is_even(), validation, "principal-value measures need an even window");
                ensure!(gamma.gamma1.re >= 0.0 && gamma.gamma2.re >= 0.0, validation, "negative real part in {gamma:?}");
            }
            MeasureKind::Nu { alpha, eta } => {
                eta.validate()?;
                ensure!(alpha.re >= 0.0, validation, "negative real part in alpha = {alpha}");
            }
        }
        let c4_norm = window.c4_norm();
        ensure!(c4_norm.is_finite() && c4_norm <= C4_LIMIT, validation, "window C^4 norm {c4_norm:e} exceeds {C4_LIMIT:e}");
        Ok(CurveMeasure { l, m, window, kind, c4_norm })
    }

    pub fn mu(l: i32, m: f64, window: Window) -> Result<Self> {
        Self::new(l, m, window, MeasureKind::Mu)
    }

    pub fn sigma(l: i32, m: f64, gamma: MultiIndexGamma) -> Result<Self> {
        Self::new(l, m, Window::Annulus, MeasureKind::Sigma { gamma })
    }

    pub fn nu(l: i32, m: f64, alpha: Complex64, eta: Window) -> Result<Self> {
        Self::new(l, m, Window::Annulus, MeasureKind::Nu { alpha, eta })
    }

    /// Interval of `|t|` carrying the measure, `None` when it is empty.
    pub fn t_support(&self) -> Option<(f64, f64)> {
        let scale = 2f64.powi(-self.l);
        let (a, b) = self.window.abs_support();
        let (mut lo, mut hi) = (a * scale, b * scale);
        if let MeasureKind::Nu { eta, .. } = self.kind {
            let (c, d) = eta.abs_support();
            lo = lo.max(c);
            hi = hi.min(d);
        }
        (lo < hi).then_some((lo, hi))
    }

    /// Signed density at `t`, before the `dt`.
    fn density(&self, t: f64) -> Complex64 {
        let s = t.abs();
        let u = 2f64.powi(self.l) * t;
        match self.kind {
            MeasureKind::Mu => Complex64::new(2f64.powi(self.l) * self.window.value(u), 0.0),
            MeasureKind::Sigma { gamma } => {
                let g = gamma.gamma1 + gamma.gamma2 * self.m;
                Complex64::new(s, 0.0).powc(g - 1.0) * self.window.value(u) * t.signum()
            }
            MeasureKind::Nu { alpha, eta } => {
                Complex64::new(s, 0.0).powc(alpha * self.m - 1.0) * self.window.value(u) * eta.value(t)
            }
        }
    }

    /// Imaginary part of the power of `|t|` in the density.
    fn power_phase(&self) -> f64 {
        match self.kind {
            MeasureKind::Mu => 0.0,
            MeasureKind::Sigma { gamma } => (gamma.gamma1 + gamma.gamma2 * self.m).im,
            MeasureKind::Nu { alpha, .. } => (alpha * self.m).im,
        }
    }
}

/// Quadrature node at `|t| = s` with the weights of `t = s` and `t = -s`.
#[derive(Debug, Clone, Copy)]
struct Node {
    s: f64,
    plus: Complex64,
    minus: Complex64,
}

/// Rule on `[s0, s1]` fine enough for `osc` oscillations of the integrand.
fn panel_rule(s0: f64, s1: f64, osc: f64, nodes: usize, make: fn(usize, f64, f64) -> Rule) -> Rule {
    let panels = osc.ceil() as usize + 16;
    composite(panels, s0, s1, |a, b| make(nodes, a, b))
}

fn gl(n: usize, a: f64, b: f64) -> Rule {
    gauss_legendre(n, a, b)
}

fn cc(n: usize, a: f64, b: f64) -> Rule {
    clenshaw_curtis(n + n % 2, a, b)
}

/// Oscillations of `e^{-2 pi i (xi_1 t + xi_2 |t|^m)}` over `s0 <= |t| <= s1`
/// for `|xi_i| <= nyq`.
fn oscillations(s0: f64, s1: f64, m: f64, nyq: f64) -> f64 {
    nyq * ((s1 - s0) + (s1.powf(m) - s0.powf(m)))
}

fn measure_nodes(cm: &CurveMeasure, nyq: f64, quad_nodes: usize) -> Vec<Node> {
    let Some((s0, s1)) = cm.t_support() else {
        return Vec::new();
    };
    let mut osc = oscillations(s0, s1, cm.m, nyq);
    let ip = cm.power_phase();
    if ip != 0.0 && s0 > 0.0 {
        osc += ip.abs() * (s1 / s0).ln() / (2.0 * PI);
    }
    let rule = panel_rule(s0, s1, osc, quad_nodes, gl);
    let odd = matches!(cm.kind, MeasureKind::Sigma { .. });
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&s, &w)| {
            let plus = cm.density(s) * w;
            let minus = if odd { -plus } else { cm.density(-s) * w };
            Node { s, plus, minus }
        })
        .collect()
}

/// Check that the curve piece carried by `cm` fits the torus of `g`.
fn check_fit(g: &GridFunction, cm: &CurveMeasure) -> Result<()> {
    ensure!(g.dim() == 2, validation, "curve operators need a two-dimensional grid");
    if let Some((_, t1)) = cm.t_support() {
        let quarter = 0.25 * g.side();
        ensure!(
            t1 <= quarter && t1.powf(cm.m) <= quarter,
            guard,
            "curve piece l={} reaches |t| = {t1}, |t|^m = {} beyond a quarter of the torus side {}",
            cm.l,
            t1.powf(cm.m),
            g.side()
        );
    }
    Ok(())
}

/// `sum_nodes e^{-2 pi i xi_2 s^m} (plus e^{-2 pi i xi_1 s} + minus e^{2 pi i xi_1 s})`
/// at every grid frequency, in FFT slot order.
fn nodes_table(g: &GridFunction, m: f64, nodes: &[Node]) -> Vec<Complex64> {
    let n = g.n();
    let q = nodes.len();
    if q == 0 {
        return vec![Complex64::new(0.0, 0.0); n * n];
    }
    let freqs: Vec<f64> = (0..n).map(|k| g.freq(k)).collect();
    let lift: Vec<Complex64> = freqs
        .par_iter()
        .flat_map_iter(|&xi| nodes.iter().map(move |nd| Complex64::from_polar(1.0, -2.0 * PI * xi * nd.s.powf(m))))
        .collect();
    let shift: Vec<Complex64> = freqs
        .par_iter()
        .flat_map_iter(|&xi| {
            nodes.iter().map(move |nd| {
                let (sn, cs) = (2.0 * PI * xi * nd.s).sin_cos();
                (nd.plus + nd.minus) * cs - Complex64::i() * (nd.plus - nd.minus) * sn
            })
        })
        .collect();
    let mut table = vec![Complex64::new(0.0, 0.0); n * n];
    table.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let a = &shift[i * q..(i + 1) * q];
        for (j, out) in row.iter_mut().enumerate() {
            let b = &lift[j * q..(j + 1) * q];
            *out = a.iter().zip(b).fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x * y);
        }
    });
    table
}

/// Multiplier of convolution with `cm` on the grid of `g`.
pub fn curve_multiplier(g: &GridFunction, cm: &CurveMeasure, quad_nodes: usize) -> Result<Vec<Complex64>> {
    ensure!(quad_nodes >= MIN_QUAD_NODES, validation, "quadrature needs at least {MIN_QUAD_NODES} nodes per panel, got {quad_nodes}");
    check_fit(g, cm)?;
    Ok(nodes_table(g, cm.m, &measure_nodes(cm, g.nyquist(), quad_nodes)))
}

/// `f * cm`, the integral of `f(x_1 - t, x_2 - |t|^m)` against the density of `cm`.
pub fn curve_convolve(f: &GridFunction, cm: &CurveMeasure, quad_nodes: usize) -> Result<GridFunction> {
    Ok(f.apply_table(&curve_multiplier(f, cm, quad_nodes)?))
}

/// Dyadic scales `[-log2 n + 4, log2 n - 4]` whose curve pieces (window
/// `|t| <= 2^{1-l}`) fit the torus.
pub fn default_l_range(g: &GridFunction, m: f64) -> (i32, i32) {
    let k = g.n().trailing_zeros() as i32;
    let quarter = 0.25 * g.side();
    let mut lo = -k + 4;
    while lo < k - 4 {
        let t1 = 2f64.powi(1 - lo);
        if t1 <= quarter && t1.powf(m) <= quarter {
            break;
        }
        lo += 1;
    }
    (lo, (k - 4).max(lo))
}

fn check_range(l_range: (i32, i32)) -> Result<()> {
    ensure!(l_range.0 <= l_range.1, validation, "empty scale range {l_range:?}");
    Ok(())
}

fn sigma_table(g: &GridFunction, m: f64, gamma: MultiIndexGamma, l_range: (i32, i32)) -> Result<Vec<Complex64>> {
    check_range(l_range)?;
    let mut total = vec![Complex64::new(0.0, 0.0); g.len()];
    for l in l_range.0..=l_range.1 {
        let t = curve_multiplier(g, &CurveMeasure::sigma(l, m, gamma)?, MIN_QUAD_NODES)?;
        total.iter_mut().zip(&t).for_each(|(a, b)| *a += b);
    }
    Ok(total)
}

/// Truncated Hilbert transform along the curve, `sum_{l in l_range} f * d sigma_l^0`.
pub fn hilbert_along(f: &GridFunction, m: f64, l_range: (i32, i32)) -> Result<GridFunction> {
    Ok(f.apply_table(&sigma_table(f, m, MultiIndexGamma::zero(), l_range)?))
}

/// `sup |m(xi)|` of the truncated Hilbert transform on the grid of `g`.
/// Applying the operator to `e^{2 pi i x.xi}` returns `m(xi)` times the
/// exponential, so this is the amplitude ratio over a full frequency comb.
pub fn hilbert_symbol_sup(g: &GridFunction, m: f64, l_range: (i32, i32)) -> Result<f64> {
    Ok(sigma_table(g, m, MultiIndexGamma::zero(), l_range)?.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// `H_gamma f = sum_l (D^gamma f) * d sigma_l^gamma`.
pub fn hypersingular(f: &GridFunction, m: f64, gamma: MultiIndexGamma, l_range: (i32, i32)) -> Result<GridFunction> {
    let d = f.frac_diff(gamma)?;
    Ok(d.apply_table(&sigma_table(f, m, gamma, l_range)?))
}

/// `A f = int eta(t) f(x_1 - t, x_2 - |t|^m) dt`.
pub fn local_average(f: &GridFunction, m: f64, eta: Window) -> Result<GridFunction> {
    curve_convolve(f, &CurveMeasure::mu(0, m, eta)?, MIN_QUAD_NODES)
}

/// Continuous-scale option of [`maximal_along`]: the dilates
/// `h^{-1} eta(t / h)`, `h = 2^{-l} s`, are expanded as
/// `eta~(2^l t) sum_{|k| <= k_max} c_k(s) e^{2 pi i k 2^l t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transference {
    pub k_max: usize,
    /// Values of `s` sampled geometrically in `[1/2, 2]`.
    pub scales: usize,
}

impl Default for Transference {
    fn default() -> Self {
        Transference { k_max: 32, scales: 9 }
    }
}

/// Plateau equal to 1 where every dilate `eta(t / s)`, `1/2 <= s <= 2`, lives,
/// supported in `2^{-8} < |t| < 2^{-3}`.
pub fn transference_cutoff(t: f64) -> f64 {
    let a = t.abs();
    let (i0, i1, o0, o1) = (2f64.powi(-8), 2f64.powi(-7), 2f64.powi(-4), 2f64.powi(-3));
    smooth_step((a - i0) / (i1 - i0)) * (1.0 - smooth_step((a - o0) / (o1 - o0)))
}

fn check_transference_eta(eta: Window) -> Result<()> {
    let (a, b) = eta.abs_support();
    ensure!(
        a >= 2f64.powi(-6) && b <= 2f64.powi(-5),
        validation,
        "transference needs eta supported in 2^-6 <= |t| <= 2^-5, got {eta:?}"
    );
    Ok(())
}

/// `c_k(s) = int s^{-1} eta(t / s) e^{-2 pi i k t} dt` for `|k| <= k_max`, index `k + k_max`.
pub fn transference_coefficients(eta: Window, s: f64, k_max: usize) -> Result<Vec<Complex64>> {
    check_transference_eta(eta)?;
    ensure!((0.5..=2.0).contains(&s), validation, "scale s = {s} outside [1/2, 2]");
    let (a, b) = eta.abs_support();
    let osc = k_max as f64 * 2.0 * b * s;
    let rule = panel_rule(a * s, b * s, osc, 32, gl);
    let k_max = k_max as i64;
    Ok((-k_max..=k_max)
        .map(|k| {
            rule.nodes.iter().zip(&rule.weights).fold(Complex64::new(0.0, 0.0), |acc, (&t, &w)| {
                let e = Complex64::from_polar(1.0, -2.0 * PI * k as f64 * t);
                acc + (e * eta.value(t / s) + e.conj() * eta.value(-t / s)) * (w / s)
            })
        })
        .collect())
}

/// Sup over `t` and the sampled scales of the relative error of the
/// truncated expansion of `s^{-1} eta(t / s)`.
pub fn transference_error(eta: Window, tr: Transference) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in transference_scales(tr.scales) {
        let c = transference_coefficients(eta, s, tr.k_max)?;
        let top = (0..=2000).map(|i| eta.value(i as f64 / 2000.0 * eta.abs_support().1) / s).fold(0.0, f64::max);
        for i in 0..=4000 {
            let t = 2f64.powi(-3) * i as f64 / 4000.0;
            let approx = expansion(&c, tr.k_max, t) * transference_cutoff(t);
            worst = worst.max((approx.re - eta.value(t / s) / s).abs() / top);
        }
    }
    Ok(worst)
}

fn expansion(c: &[Complex64], k_max: usize, t: f64) -> Complex64 {
    c.iter()
        .enumerate()
        .map(|(i, ck)| ck * Complex64::from_polar(1.0, 2.0 * PI * (i as f64 - k_max as f64) * t))
        .sum()
}

fn transference_scales(count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![1.0];
    }
    (0..count).map(|i| 2f64.powf(-1.0 + 2.0 * i as f64 / (count - 1) as f64)).collect()
}

/// Multiplier of `2^l eta~(2^l t) sum_k c_k(s) e^{2 pi i k 2^l t} dt`.
fn transference_table(g: &GridFunction, m: f64, l: i32, c: &[Complex64], k_max: usize) -> Result<Vec<Complex64>> {
    let probe = CurveMeasure::mu(l, m, Window::Ring { inner: 2f64.powi(-8), outer: 2f64.powi(-3) })?;
    check_fit(g, &probe)?;
    let scale = 2f64.powi(l);
    let (s0, s1) = (2f64.powi(-8) / scale, 2f64.powi(-3) / scale);
    let osc = oscillations(s0, s1, m, g.nyquist()) + k_max as f64 * (s1 - s0) * scale;
    let rule = panel_rule(s0, s1, osc, MIN_QUAD_NODES, gl);
    let dens = |t: f64| expansion(c, k_max, scale * t) * transference_cutoff(scale * t) * scale;
    let nodes: Vec<Node> =
        rule.nodes.iter().zip(&rule.weights).map(|(&s, &w)| Node { s, plus: dens(s) * w, minus: dens(-s) * w }).collect();
    Ok(nodes_table(g, m, &nodes))
}

/// `sup_l |f * d mu_l|` with `d mu_l = 2^l eta(2^l t) dt`, or with the
/// continuous scales of the transference expansion.
pub fn maximal_along(
    f: &GridFunction,
    m: f64,
    eta: Window,
    l_range: (i32, i32),
    transference: Option<Transference>,
) -> Result<GridFunction> {
    check_range(l_range)?;
    let mut best = vec![0.0f64; f.len()];
    let mut absorb = |g: GridFunction| {
        best.par_iter_mut().zip(g.values().par_iter()).for_each(|(b, v)| *b = b.max(v.norm()));
    };
    match transference {
        None => {
            for l in l_range.0..=l_range.1 {
                absorb(curve_convolve(f, &CurveMeasure::mu(l, m, eta)?, MIN_QUAD_NODES)?);
            }
        }
        Some(tr) => {
            ensure!(tr.scales >= 1, validation, "transference needs at least one scale");
            let coeffs = transference_scales(tr.scales)
                .into_iter()
                .map(|s| transference_coefficients(eta, s, tr.k_max))
                .collect::<Result<Vec<_>>>()?;
            for l in l_range.0..=l_range.1 {
                for c in &coeffs {
                    absorb(f.apply_table(&transference_table(f, m, l, c, tr.k_max)?));
                }
            }
        }
    }
    Ok(f.with_values(best.into_iter().map(|v| Complex64::new(v, 0.0)).collect()))
}

/// `|| (sum_l |f_l * d mu_l|^2)^{1/2} ||_{L^{1,2}}` for the family `(l, f_l)`.
pub fn curve_square_function(fs: &[(i32, GridFunction)], m: f64, window: Window) -> Result<f64> {
    ensure!(!fs.is_empty(), validation, "square function needs at least one member");
    let first = &fs[0].1;
    ensure!(fs.iter().all(|(_, g)| g.same_grid(first)), validation, "family members live on different grids");
    let mut acc = vec![0.0f64; first.len()];
    for (l, g) in fs {
        let out = curve_convolve(g, &CurveMeasure::mu(*l, m, window)?, MIN_QUAD_NODES)?;
        acc.par_iter_mut().zip(out.values().par_iter()).for_each(|(a, v)| *a += v.norm_sqr());
    }
    let agg = first.with_values(acc.into_iter().map(|v| Complex64::new(v.sqrt(), 0.0)).collect());
    Ok(lorentz_norm(&agg, LorentzExponents::new(1.0, 2.0)?))
}

/// One scale of the square-function ratio sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareRatioRow {
    pub scale: i32,
    pub lhs: f64,
    /// `L^1` norm of `(sum_l S_parab(f_l)^2)^{1/2}`, the computable stand-in
    /// for the vector-valued parabolic Hardy norm.
    pub proxy: f64,
    pub ratio: f64,
}

/// Square-function ratio for the family `f_l = Q_l a` of angular pieces of a
/// radial atom of radius `2^scale`, over the scales the grid admits.
pub fn square_function_ratio(n: usize, side: f64, m: f64, scales: &[i32], l_range: (i32, i32)) -> Result<Vec<SquareRatioRow>> {
    check_range(l_range)?;
    ensure!(!scales.is_empty(), validation, "no atom scales requested");
    let fam = build_lp_family(2, 1, 4, 0.25, side)?;
    scales
        .iter()
        .map(|&scale| {
            let atom = radial_atom(scale, n, side)?;
            let mut family = Vec::new();
            let mut sq = vec![0.0f64; atom.len()];
            for l in l_range.0..=l_range.1 {
                let piece = angular_projection(&atom, l, m)?;
                let s = square_function(&piece, SquareFlavor::Parabolic { m }, &fam)?;
                sq.iter_mut().zip(s.values()).for_each(|(a, v)| *a += v.norm_sqr());
                family.push((l, piece));
            }
            let lhs = curve_square_function(&family, m, Window::dyadic())?;
            let agg = atom.with_values(sq.into_iter().map(|v| Complex64::new(v.sqrt(), 0.0)).collect());
            let proxy = agg.lp_norm(1.0);
            ensure!(proxy > 0.0, guard, "atom of scale {scale} has no angular content in l-range {l_range:?}");
            Ok(SquareRatioRow { scale, lhs, proxy, ratio: lhs / proxy })
        })
        .collect()
}

/// One entry of the decay table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub radius: f64,
    /// `(1 + R)^{1/2} sup_{|xi| = R} |d sigma_0^gamma ^(xi)|`.
    pub normalized_sup: f64,
    /// Largest Gauss-Legendre versus Clenshaw-Curtis gap, relative to the sup.
    pub rule_gap: f64,
    /// Change under doubling the nodes per panel, relative to the sup.
    pub refine_gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub warning: Option<String>,
}

/// Tolerance on `refine_gap` below which an entry counts as converged.
pub const DECAY_REFINE_TOL: f64 = 1e-6;

/// `d sigma_0^gamma` sampled on a rule: `(s, s^m, weight)` with the odd
/// pairing folded into the weight.
fn sigma0_nodes(gamma: MultiIndexGamma, m: f64, rule: &Rule) -> Vec<(f64, f64, Complex64)> {
    let g = gamma.gamma1 + gamma.gamma2 * m;
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&s, &w)| (s, s.powf(m), Complex64::new(s, 0.0).powc(g - 1.0) * annulus(s) * w))
        .collect()
}

fn sigma0_transform(nodes: &[(f64, f64, Complex64)], xi: [f64; 2]) -> Complex64 {
    nodes.iter().fold(Complex64::new(0.0, 0.0), |acc, &(s, sm, w)| {
        let lift = Complex64::from_polar(1.0, -2.0 * PI * xi[1] * sm);
        acc + w * lift * Complex64::new(0.0, -2.0 * (2.0 * PI * xi[0] * s).sin())
    })
}

/// Normalized sup of `|d sigma_0^gamma ^|` on circles `|xi| = R`, by direct
/// oscillatory quadrature with two unrelated rule families.
pub fn measure_decay(gamma: MultiIndexGamma, m: f64, radii: &[f64]) -> Result<DecayReport> {
    ensure!(m.is_finite() && m > 1.0, validation, "curve exponent must exceed 1, got {m}");
    ensure!(gamma.gamma1.re >= 0.0 && gamma.gamma2.re >= 0.0, validation, "negative real part in {gamma:?}");
    ensure!(radii.iter().all(|r| r.is_finite() && *r >= 0.0), validation, "radii must be finite and nonnegative");
    let warning = (m < 2.0).then(|| format!("m = {m} < 2: the (1 + R)^(-1/2) decay is not claimed"));
    let g = gamma.gamma1 + gamma.gamma2 * m;
    let rows = radii
        .iter()
        .map(|&r| {
            let osc = oscillations(0.5, 2.0, m, r) + g.im.abs() * 4f64.ln() / (2.0 * PI);
            let rules = [
                panel_rule(0.5, 2.0, osc, MIN_QUAD_NODES, gl),
                panel_rule(0.5, 2.0, osc, 2 * MIN_QUAD_NODES, gl),
                panel_rule(0.5, 2.0, osc, MIN_QUAD_NODES, cc),
            ]
            .map(|r| sigma0_nodes(gamma, m, &r));
            let dirs = ((32.0 * r.sqrt()).ceil() as usize).max(128);
            let vals: Vec<[Complex64; 3]> = (0..dirs)
                .into_par_iter()
                .map(|k| {
                    let th = 2.0 * PI * k as f64 / dirs as f64;
                    let xi = [r * th.cos(), r * th.sin()];
                    [0, 1, 2].map(|i| sigma0_transform(&rules[i], xi))
                })
                .collect();
            let sup = vals.iter().map(|v| v[1].norm()).fold(0.0, f64::max);
            let denom = if sup > 0.0 { sup } else { 1.0 };
            let refine_gap = vals.iter().map(|v| (v[0] - v[1]).norm()).fold(0.0, f64::max) / denom;
            let rule_gap = vals.iter().map(|v| (v[2] - v[1]).norm()).fold(0.0, f64::max) / denom;
            DecayRow { radius: r, normalized_sup: (1.0 + r).sqrt() * sup, rule_gap, refine_gap, converged: refine_gap <= DECAY_REFINE_TOL }
        })
        .collect();
    Ok(DecayReport { rows, warning })
}

/// Outcome of the Sobolev smoothing sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    /// `(trial, ratio)`; trials whose input vanishes are skipped.
    pub rows: Vec<(usize, f64)>,
    pub max: f64,
    pub median: f64,
}

/// Configuration of [`sobolev_smoothing_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevConfig {
    pub m: f64,
    pub trials: usize,
    pub n: usize,
    pub side: f64,
    /// Inputs are random with spectra in `|xi| <= max_freq`.
    pub max_freq: f64,
    pub eta: Window,
    pub seed: u64,
}

impl Default for SobolevConfig {
    fn default() -> Self {
        SobolevConfig { m: 2.0, trials: 20, n: 512, side: 64.0, max_freq: 2.0, eta: Window::Full { radius: 1.0 }, seed: 0 }
    }
}

/// `||(Id - Delta)^{1/(2m)} A f||_m / ||f||_{L^{m,2}}` over random band-limited inputs.
pub fn sobolev_smoothing_experiment(cfg: &SobolevConfig) -> Result<SobolevReport> {
    ensure!(cfg.m >= 2.0 && cfg.m.is_finite(), validation, "the smoothing estimate needs m >= 2, got {}", cfg.m);
    ensure!(cfg.trials >= 1, validation, "at least one trial required");
    let probe = GridFunction::zeros(2, cfg.n, cfg.side)?;
    ensure!(
        cfg.max_freq > 0.0 && cfg.max_freq <= 0.5 * probe.nyquist(),
        validation,
        "input band {} must lie below half the Nyquist frequency {}",
        cfg.max_freq,
        probe.nyquist()
    );
    let table = curve_multiplier(&probe, &CurveMeasure::mu(0, cfg.m, cfg.eta)?, MIN_QUAD_NODES)?;
    let sobolev = probe.symbol_table(|xi| {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        Complex64::new((1.0 + 4.0 * PI * PI * r2).powf(0.5 / cfg.m), 0.0)
    })?;
    let combined: Vec<Complex64> = table.iter().zip(&sobolev).map(|(a, b)| a * b).collect();
    let exps = LorentzExponents::new(cfg.m, 2.0)?;
    let hi = cfg.max_freq / probe.nyquist();
    let mut rows = Vec::new();
    for trial in 0..cfg.trials {
        let f = band_limited_input(2, cfg.n, cfg.side, 0.0, hi, &mut stream_rng(cfg.seed, trial as u64))?;
        let den = lorentz_norm(&f, exps);
        if den == 0.0 {
            continue;
        }
        let num = f.apply_table(&combined).lp_norm(cfg.m);
        rows.push((trial, num / den));
    }
    ensure!(!rows.is_empty(), guard, "every trial input vanished");
    let mut sorted: Vec<f64> = rows.iter().map(|r| r.1).collect();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    let median = if k % 2 == 1 { sorted[k / 2] } else { 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]) };
    Ok(SobolevReport { max: sorted[k - 1], median, rows })
}

#[cfg(test)]
mod tests;
