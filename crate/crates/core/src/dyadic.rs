//! Dyadic geometry: cubes, parabolic rectangles and their tendrils, dyadic
//! maximal functions, and the Calderon-Zygmund decomposition.
//!
//! Cube coordinates are measured from the torus corner `(-L/2, ..., -L/2)`,
//! so the root cube `[0, L)^d` has scale `log2 L` and coordinates zero.

use crate::error::{ensure, Result};
use crate::grid::GridFunction;
use crate::littlewood_paley::SquareFlavor;
use crate::lorentz::neumaier;
use crate::numerics::quadrature::gauss_legendre;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// The cube `2^scale ([0,1)^d + k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub scale: i32,
    pub k: Vec<i64>,
}

impl DyadicCube {
    pub fn new(scale: i32, k: Vec<i64>) -> Self {
        DyadicCube { scale, k }
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn side(&self) -> f64 {
        2f64.powi(self.scale)
    }

    pub fn measure(&self) -> f64 {
        self.side().powi(self.dim() as i32)
    }

    pub fn center(&self) -> Vec<f64> {
        self.k.iter().map(|&k| (k as f64 + 0.5) * self.side()).collect()
    }

    /// Whether `other` is contained in `self`, by integer arithmetic.
    pub fn contains(&self, other: &DyadicCube) -> bool {
        if self.dim() != other.dim() || other.scale > self.scale {
            return false;
        }
        let shift = (self.scale - other.scale) as u32;
        self.k.iter().zip(&other.k).all(|(&a, &b)| (b >> shift) == a)
    }

    pub fn parent(&self) -> DyadicCube {
        DyadicCube { scale: self.scale + 1, k: self.k.iter().map(|&k| k >> 1).collect() }
    }

    pub fn children(&self) -> Vec<DyadicCube> {
        let d = self.dim();
        (0..(1usize << d))
            .map(|bits| DyadicCube {
                scale: self.scale - 1,
                k: (0..d).map(|a| 2 * self.k[a] + ((bits >> (d - 1 - a)) & 1) as i64).collect(),
            })
            .collect()
    }

    /// Bounds of the same-center dilate `2^t I`, as `(lo, hi)` per axis.
    pub fn dilated_box(&self, t: i32) -> Vec<(f64, f64)> {
        let half = 0.5 * 2f64.powi(self.scale + t);
        self.center().into_iter().map(|c| (c - half, c + half)).collect()
    }
}

/// `ceil(x)` that treats values within `1e-9` of an integer as that integer.
fn ceil_tol(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as i64
    } else {
        x.ceil() as i64
    }
}

fn frac_tol(x: f64) -> f64 {
    let f = x - x.floor();
    if f > 1.0 - 1e-9 || f < 1e-9 {
        0.0
    } else {
        f
    }
}

/// Dyadic rectangle of dimensions `2^sigma x 2^{sigma + (m-1) tau + theta}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicRect {
    pub sigma: i32,
    pub tau: i32,
    pub theta: f64,
    pub m: f64,
    pub k1: i64,
    pub k2: i64,
}

impl ParabolicRect {
    pub fn new(sigma: i32, tau: i32, m: f64, k1: i64, k2: i64) -> Result<Self> {
        ensure!(m > 1.0 && m.is_finite(), validation, "curve exponent must exceed 1, got {m}");
        ensure!(sigma <= tau, validation, "need sigma <= tau, got ({sigma}, {tau})");
        if m < 2.0 {
            let f = frac_tol((m - 1.0) * (tau - sigma) as f64);
            ensure!(
                f < m - 1.0,
                validation,
                "tau = {tau} inadmissible for sigma = {sigma}, m = {m}: frac((m-1)(tau-sigma)) = {f}"
            );
        }
        let e = ceil_tol((m - 1.0) * tau as f64);
        let theta = (e as f64 - (m - 1.0) * tau as f64).max(0.0);
        Ok(ParabolicRect { sigma, tau, theta, m, k1, k2 })
    }

    /// Parabolic cube: `tau = sigma`.
    pub fn cube(sigma: i32, m: f64, k1: i64, k2: i64) -> Result<Self> {
        Self::new(sigma, sigma, m, k1, k2)
    }

    pub fn is_cube(&self) -> bool {
        self.sigma == self.tau
    }

    /// Integer exponents of the two side lengths.
    pub fn exponents(&self) -> (i32, i32) {
        (self.sigma, self.sigma + ceil_tol((self.m - 1.0) * self.tau as f64) as i32)
    }

    pub fn dims(&self) -> (f64, f64) {
        let (a, b) = self.exponents();
        (2f64.powi(a), 2f64.powi(b))
    }

    pub fn measure(&self) -> f64 {
        let (a, b) = self.dims();
        a * b
    }

    /// `[lo, hi)` bounds on each axis.
    pub fn bounds(&self) -> [(f64, f64); 2] {
        let (a, b) = self.dims();
        [(self.k1 as f64 * a, (self.k1 + 1) as f64 * a), (self.k2 as f64 * b, (self.k2 + 1) as f64 * b)]
    }

    /// Geometric inclusion `other ⊆ self`, by integer arithmetic.
    pub fn contains(&self, other: &ParabolicRect) -> bool {
        let (a, b) = self.exponents();
        let (c, d) = other.exponents();
        c <= a && d <= b && (other.k1 >> (a - c)) == self.k1 && (other.k2 >> (b - d)) == self.k2
    }

    /// The unique rectangle with parameters `(sigma, tau)` containing `inner`,
    /// if those parameters are admissible and large enough.
    pub fn enclosing(inner: &ParabolicRect, sigma: i32, tau: i32) -> Option<ParabolicRect> {
        let probe = ParabolicRect::new(sigma, tau, inner.m, 0, 0).ok()?;
        let (a, b) = probe.exponents();
        let (c, d) = inner.exponents();
        if c > a || d > b {
            return None;
        }
        Some(ParabolicRect { k1: inner.k1 >> (a - c), k2: inner.k2 >> (b - d), ..probe })
    }
}

/// `T(Q) = {x + (t, |t|^m) : x in 2Q, |t| <= 2^{tau+2}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendril {
    /// `2Q` as `[a1, b1] x [a2, b2]`.
    pub base: [(f64, f64); 2],
    pub tmax: f64,
    pub m: f64,
}

impl Tendril {
    pub fn new(q: &ParabolicRect) -> Self {
        let [(a1, b1), (a2, b2)] = q.bounds();
        let (w1, w2) = (b1 - a1, b2 - a2);
        Tendril {
            base: [(a1 - 0.5 * w1, b1 + 0.5 * w1), (a2 - 0.5 * w2, b2 + 0.5 * w2)],
            tmax: 2f64.powi(q.tau + 2),
            m: q.m,
        }
    }

    /// Axis-aligned bounding box, exact.
    pub fn bbox(&self) -> [(f64, f64); 2] {
        let [(a1, b1), (a2, b2)] = self.base;
        [(a1 - self.tmax, b1 + self.tmax), (a2, b2 + self.tmax.powf(self.m))]
    }

    /// Admissible parameter interval `{t : p1 - t in [a1, b1], |t| <= tmax}`.
    fn t_range(&self, p1: f64) -> Option<(f64, f64)> {
        let (a1, b1) = self.base[0];
        let lo = (p1 - b1).max(-self.tmax);
        let hi = (p1 - a1).min(self.tmax);
        (lo <= hi).then_some((lo, hi))
    }

    /// Range of `|t|^m` over `[lo, hi]`.
    fn g_range(&self, lo: f64, hi: f64) -> (f64, f64) {
        let gmax = lo.abs().max(hi.abs()).powf(self.m);
        let gmin = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()).powf(self.m) };
        (gmin, gmax)
    }

    /// Exact membership test.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let Some((lo, hi)) = self.t_range(p[0]) else { return false };
        let (gmin, gmax) = self.g_range(lo, hi);
        let (a2, b2) = self.base[1];
        // Need |t|^m in [p2 - b2, p2 - a2] for some t, and |t|^m sweeps [gmin, gmax].
        gmin <= p[1] - a2 && gmax >= p[1] - b2
    }

    /// Measure by integrating the vertical section length over `p1`.
    pub fn measure(&self) -> f64 {
        let [(a1, b1), (a2, b2)] = self.base;
        let t = self.tmax;
        let mut cuts = vec![a1 - t, b1 - t, a1, b1, 0.5 * (a1 + b1), a1 + t, b1 + t];
        cuts.retain(|c| *c >= a1 - t && *c <= b1 + t);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let section = |p1: f64| match self.t_range(p1) {
            Some((lo, hi)) => {
                let (gmin, gmax) = self.g_range(lo, hi);
                (b2 - a2) + gmax - gmin
            }
            None => 0.0,
        };
        neumaier(cuts.windows(2).map(|w| gauss_legendre(64, w[0], w[1]).integrate(section)))
    }

    /// Measure by counting cell centers of a `res x res` raster of the box.
    pub fn raster_measure(&self, res: usize) -> f64 {
        let [(x0, x1), (y0, y1)] = self.bbox();
        let (dx, dy) = ((x1 - x0) / res as f64, (y1 - y0) / res as f64);
        let count: usize = (0..res)
            .into_par_iter()
            .map(|i| {
                let p1 = x0 + (i as f64 + 0.5) * dx;
                (0..res).filter(|&j| self.contains([p1, y0 + (j as f64 + 0.5) * dy])).count()
            })
            .sum();
        count as f64 * dx * dy
    }

    /// Monte Carlo estimate with its standard error.
    pub fn monte_carlo_measure(&self, samples: usize, rng: &mut impl Rng) -> (f64, f64) {
        let [(x0, x1), (y0, y1)] = self.bbox();
        let area = (x1 - x0) * (y1 - y0);
        let hits = (0..samples)
            .filter(|_| self.contains([rng.gen_range(x0..x1), rng.gen_range(y0..y1)]))
            .count() as f64;
        let p = hits / samples as f64;
        (p * area, area * (p * (1.0 - p) / samples as f64).sqrt())
    }
}

pub fn tendril(q: &ParabolicRect) -> Tendril {
    Tendril::new(q)
}

// ---------------------------------------------------------------------------
// Maximal functions

/// Periodic sliding sum of width `w` starting at each index.
fn sliding_sum(row: &[f64], w: usize, out: &mut [f64]) {
    let n = row.len();
    let mut s: f64 = (0..w).map(|i| row[i % n]).sum();
    for i in 0..n {
        out[i] = s;
        s += row[(i + w) % n] - row[i];
    }
}

/// Periodic sliding max: `out[x] = max_{s in [x-w+1, x]} row[s]`.
pub(crate) fn sliding_max(row: &[f64], w: usize, out: &mut [f64]) {
    let n = row.len();
    let mut dq: VecDeque<usize> = VecDeque::new();
    // Walk positions x - w + 1 .. x over an unrolled index range.
    for j in 0..(n + w - 1) {
        let idx = (j + n - (w - 1)) % n;
        while let Some(&b) = dq.back() {
            if row[(b + n - (w - 1)) % n] <= row[idx] {
                dq.pop_back();
            } else {
                break;
            }
        }
        dq.push_back(j);
        while let Some(&f) = dq.front() {
            if f + w <= j {
                dq.pop_front();
            } else {
                break;
            }
        }
        if j + 1 >= w {
            let x = j + 1 - w;
            out[x] = row[(dq.front().unwrap() + n - (w - 1)) % n];
        }
    }
}

/// Apply a per-row operation along both axes of an `n x n` array.
fn separable(a: &[f64], n: usize, w: (usize, usize), op: fn(&[f64], usize, &mut [f64])) -> Vec<f64> {
    // Axis 1 (contiguous).
    let mut tmp = vec![0.0; n * n];
    tmp.par_chunks_mut(n).zip(a.par_chunks(n)).for_each(|(o, r)| op(r, w.1, o));
    // Axis 0 through a transpose.
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = tmp[i * n + j];
        }
    }
    let mut t2 = vec![0.0; n * n];
    t2.par_chunks_mut(n).zip(t.par_chunks(n)).for_each(|(o, r)| op(r, w.0, o));
    for i in 0..n {
        for j in 0..n {
            tmp[i * n + j] = t2[j * n + i];
        }
    }
    tmp
}

/// Box shapes (in cells) used by each flavor.
fn box_shapes(f: &GridFunction, flavor: SquareFlavor) -> Vec<(usize, usize)> {
    let n = f.n();
    let levels = n.trailing_zeros();
    let pow = |k: u32| 1usize << k;
    match (f.dim(), flavor) {
        (1, _) => (0..=levels).map(|k| (1, pow(k))).collect(),
        (_, SquareFlavor::Isotropic) => (0..=levels).map(|k| (pow(k), pow(k))).collect(),
        (_, SquareFlavor::Product) => {
            (0..=levels).flat_map(|a| (0..=levels).map(move |b| (pow(a), pow(b)))).collect()
        }
        (_, SquareFlavor::Parabolic { m }) => {
            let h = f.spacing();
            let cells = |len: f64| ((len / h).round() as usize).clamp(1, n);
            let kmin = (h.log2() / m.max(1.0)).floor() as i32 - 1;
            let kmax = f.side().log2().ceil() as i32 + 1;
            let mut shapes: Vec<(usize, usize)> =
                (kmin..=kmax).map(|k| (cells(2f64.powi(k)), cells(2f64.powf(k as f64 * m)))).collect();
            shapes.sort();
            shapes.dedup();
            shapes
        }
    }
}

/// Uncentered dyadic maximal function of `|f|` over periodic boxes.
pub fn hl_maximal(f: &GridFunction, flavor: SquareFlavor) -> GridFunction {
    let n = f.n();
    let a: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    let mut best = vec![0.0f64; a.len()];
    for (w0, w1) in box_shapes(f, flavor) {
        let area = (w0 * w1) as f64;
        let m = if f.dim() == 1 {
            let mut s = vec![0.0; n];
            sliding_sum(&a, w1, &mut s);
            s.iter_mut().for_each(|v| *v /= area);
            let mut out = vec![0.0; n];
            sliding_max(&s, w1, &mut out);
            out
        } else {
            let mut s = separable(&a, n, (w0, w1), sliding_sum);
            s.iter_mut().for_each(|v| *v /= area);
            separable(&s, n, (w0, w1), sliding_max)
        };
        for (b, v) in best.iter_mut().zip(m) {
            *b = b.max(v);
        }
    }
    f.with_values(best.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
}

/// `sup_alpha alpha |{Mf > alpha}| / ||f||_1` over the given levels.
pub fn weak_11_constant(f: &GridFunction, mf: &GridFunction, alphas: &[f64]) -> f64 {
    let l1 = f.lp_norm(1.0);
    if l1 == 0.0 {
        return 0.0;
    }
    alphas
        .iter()
        .map(|&al| al * mf.values().iter().filter(|v| v.re > al).count() as f64 * f.cell_measure() / l1)
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Calderon-Zygmund decomposition

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CZResult {
    pub cubes: Vec<DyadicCube>,
    pub alpha: f64,
    pub means: Vec<f64>,
    pub total_selected_measure: f64,
    /// Largest mean among visited, unselected cubes.
    pub off_set_max_avg: f64,
    pub root: DyadicCube,
    pub cell_scale: i32,
}

impl CZResult {
    pub fn max_mean(&self) -> f64 {
        self.means.iter().cloned().fold(0.0, f64::max)
    }
}

/// Mean pyramid: `sums[level][flat]`, level 0 = single cells.
struct Pyramid {
    dim: usize,
    sums: Vec<Vec<f64>>,
}

impl Pyramid {
    fn new(f: &[f64], n: usize, dim: usize) -> Self {
        let mut sums = vec![f.to_vec()];
        let mut side = n;
        while side > 1 {
            let prev = sums.last().unwrap();
            let half = side / 2;
            let next: Vec<f64> = if dim == 1 {
                (0..half).map(|i| prev[2 * i] + prev[2 * i + 1]).collect()
            } else {
                (0..half * half)
                    .map(|idx| {
                        let (i, j) = (idx / half, idx % half);
                        prev[(2 * i) * side + 2 * j]
                            + prev[(2 * i) * side + 2 * j + 1]
                            + prev[(2 * i + 1) * side + 2 * j]
                            + prev[(2 * i + 1) * side + 2 * j + 1]
                    })
                    .collect()
            };
            sums.push(next);
            side = half;
        }
        Pyramid { dim, sums }
    }

    fn mean(&self, level: usize, k: &[i64]) -> f64 {
        let side = 1usize << (self.sums.len() - 1 - level);
        let idx = if self.dim == 1 { k[0] as usize } else { k[0] as usize * side + k[1] as usize };
        let cells = (1usize << level).pow(self.dim as u32) as f64;
        self.sums[level][idx] / cells
    }
}

/// Maximal dyadic cubes with mean strictly above `alpha`, scanning the tree
/// rooted at the torus down to single cells.
pub fn cz_decompose(f: &GridFunction, alpha: f64) -> Result<CZResult> {
    ensure!(alpha > 0.0 && alpha.is_finite(), validation, "level alpha must be positive, got {alpha}");
    let l2 = f.side().log2();
    ensure!(
        (l2 - l2.round()).abs() < 1e-12,
        validation,
        "the dyadic root needs a power-of-two side length, got {}",
        f.side()
    );
    let mut vals = Vec::with_capacity(f.len());
    for (i, v) in f.values().iter().enumerate() {
        ensure!(v.im == 0.0 && v.re >= 0.0, validation, "input must be real and nonnegative (index {i}: {v})");
        vals.push(v.re);
    }
    let n = f.n();
    let dim = f.dim();
    let root_scale = l2.round() as i32;
    let cell_scale = root_scale - n.trailing_zeros() as i32;
    let pyr = Pyramid::new(&vals, n, dim);
    let top = pyr.sums.len() - 1;
    let root = DyadicCube::new(root_scale, vec![0; dim]);

    let mut cubes = Vec::new();
    let mut means = Vec::new();
    let mut off_max = 0.0f64;
    let mut stack = vec![root.clone()];
    while let Some(c) = stack.pop() {
        let level = top - (root_scale - c.scale) as usize;
        let mean = pyr.mean(level, &c.k);
        if mean > alpha {
            cubes.push(c);
            means.push(mean);
        } else {
            off_max = off_max.max(mean);
            if c.scale > cell_scale {
                let mut ch = c.children();
                ch.reverse();
                stack.extend(ch);
            }
        }
    }
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by(|&a, &b| cubes[a].cmp(&cubes[b]));
    let cubes: Vec<DyadicCube> = order.iter().map(|&i| cubes[i].clone()).collect();
    let means: Vec<f64> = order.iter().map(|&i| means[i]).collect();
    let total = neumaier(cubes.iter().map(|c| c.measure()));
    Ok(CZResult { cubes, alpha, means, total_selected_measure: total, off_set_max_avg: off_max, root, cell_scale })
}

/// Report of the four decomposition invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CZCheck {
    pub disjoint: bool,
    pub means_above: bool,
    pub parents_below: bool,
    pub measure_bound: bool,
}

impl CZCheck {
    pub fn all(&self) -> bool {
        self.disjoint && self.means_above && self.parents_below && self.measure_bound
    }
}

/// Recompute the invariants from scratch by direct cell sums.
pub fn check_cz(f: &GridFunction, cz: &CZResult) -> CZCheck {
    let n = f.n();
    let dim = f.dim();
    let cm = f.cell_measure();
    let cube_mean = |c: &DyadicCube| -> f64 {
        let span = 1i64 << (c.scale - cz.cell_scale);
        let mut s = 0.0;
        let lo: Vec<i64> = c.k.iter().map(|k| k * span).collect();
        if dim == 1 {
            for i in lo[0]..lo[0] + span {
                s += f.values()[i as usize].re;
            }
        } else {
            for i in lo[0]..lo[0] + span {
                for j in lo[1]..lo[1] + span {
                    s += f.values()[i as usize * n + j as usize].re;
                }
            }
        }
        s * cm / c.measure()
    };
    let mut disjoint = true;
    for (i, a) in cz.cubes.iter().enumerate() {
        for b in &cz.cubes[i + 1..] {
            if a.contains(b) || b.contains(a) {
                disjoint = false;
            }
        }
    }
    let means_above = cz.cubes.iter().all(|c| cube_mean(c) > cz.alpha);
    let parents_below = cz.cubes.iter().filter(|c| c.scale < cz.root.scale).all(|c| cube_mean(&c.parent()) <= cz.alpha);
    let l1: f64 = f.values().iter().map(|v| v.re).sum::<f64>() * cm;
    let measure_bound = cz.total_selected_measure <= l1 / cz.alpha * (1.0 + 1e-12);
    CZCheck { disjoint, means_above, parents_below, measure_bound }
}

/// One randomized decomposition and its invariant check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CZTrial {
    pub trial: usize,
    pub alpha: f64,
    pub cubes: usize,
    pub selected_measure: f64,
    /// `||F||_1 / alpha`, the bound on the selected measure.
    pub measure_budget: f64,
    pub check: CZCheck,
}

/// Random nonnegative sparse input on the `n x n` torus of side `side` for
/// trial `t`, with a level drawn from `[0.05, 5)`.
pub fn random_cz_input(n: usize, side: f64, seed: u64, t: usize) -> Result<(GridFunction, f64)> {
    let mut rng = crate::rng::stream_rng(seed, t as u64);
    let sparsity = rng.gen_range(0.0..1.0);
    let alpha = rng.gen_range(0.05..5.0);
    let vals = (0..n * n)
        .map(|_| Complex64::new(if rng.gen_bool(sparsity) { rng.gen_range(0.0..10.0) } else { 0.0 }, 0.0))
        .collect();
    Ok((GridFunction::from_values(2, n, side, vals)?, alpha))
}

/// Decompose `trials` random inputs and check every invariant.
pub fn cz_fuzz(trials: usize, n: usize, side: f64, seed: u64) -> Result<Vec<CZTrial>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let (f, alpha) = random_cz_input(n, side, seed, t)?;
            let cz = cz_decompose(&f, alpha)?;
            Ok(CZTrial {
                trial: t,
                alpha,
                cubes: cz.cubes.len(),
                selected_measure: cz.total_selected_measure,
                measure_budget: f.lp_norm(1.0) / alpha,
                check: check_cz(&f, &cz),
            })
        })
        .collect()
}

/// `t_I`: zero unless `I` lies in a selected cube `J`, else `scale(J) - scale(I)`.
pub fn stopping_height(i: &DyadicCube, cz: &CZResult) -> Result<u32> {
    ensure!(
        i.dim() == cz.root.dim() && cz.root.contains(i) && i.scale >= cz.cell_scale,
        validation,
        "cube {i:?} is not in the dyadic tree of the decomposition"
    );
    Ok(cz.cubes.iter().find(|j| j.contains(i)).map(|j| (j.scale - i.scale) as u32).unwrap_or(0))
}

/// `||sum c_I chi_{2^{t_I} I} / |2^{t_I} I| ||_2 / alpha^{1/2}`, evaluated
/// exactly from pairwise box overlaps.
pub fn dilated_box_l2(cubes: &[(DyadicCube, f64)], cz: &CZResult, alpha: f64) -> Result<f64> {
    ensure!(alpha > 0.0, validation, "alpha must be positive");
    let total: f64 = cubes.iter().map(|c| c.1).sum();
    ensure!(cubes.iter().all(|c| c.1 >= 0.0), validation, "coefficients must be nonnegative");
    ensure!(total <= 1.0 + 1e-12, validation, "coefficients must satisfy sum c_I <= 1, got {total}");
    let boxes: Vec<(Vec<(f64, f64)>, f64)> = cubes
        .iter()
        .map(|(c, w)| {
            let t = stopping_height(c, cz)? as i32;
            let b = c.dilated_box(t);
            let vol: f64 = b.iter().map(|(lo, hi)| hi - lo).product();
            Ok((b, w / vol))
        })
        .collect::<Result<_>>()?;
    let sq: f64 = neumaier(boxes.iter().enumerate().flat_map(|(i, (bi, wi))| {
        boxes[i..].iter().enumerate().map(move |(j, (bj, wj))| {
            let overlap: f64 = bi.iter().zip(bj).map(|(a, b)| (a.1.min(b.1) - a.0.max(b.0)).max(0.0)).product();
            let mult = if j == 0 { 1.0 } else { 2.0 };
            mult * wi * wj * overlap
        })
    }));
    Ok(sq.max(0.0).sqrt() / alpha.sqrt())
}
