//! Compactly supported Littlewood-Paley families built by symbol recursion.
//!
//! The base kernel `Psi_0` is a bump sampled on a fine lattice of spacing `h`
//! and multiplied by a symmetric polynomial chosen so that its discrete
//! moments of order `1..=N0` vanish. Its transform `D` is a trigonometric
//! polynomial, and every scale-`k` operator is a multiplier built from
//! `D(2^{-k} xi)`:
//!
//! ```text
//! S^k_0 = D(2^{-k} .)          S^k_{s+1} = (2 - (S^k_s)^2) (S^k_s)^2
//! L^k_0 = S^k_0 - S^{k-1}_0    L^k_{s+1} = (2 - (S^k_s)^2 - (S^{k-1}_s)^2) (S^k_s + S^{k-1}_s)
//! ```
//!
//! so `S^k_{s+1} - S^{k-1}_{s+1} = L^k_0 ... L^k_{s+1}` and the sum over `k`
//! telescopes. Kernels `Psi_s`, `psi_s` are recovered exactly on the lattice
//! by an inverse FFT of the (trigonometric polynomial) symbols.

use crate::dyadic::{hl_maximal, sliding_max};
use crate::error::{ensure, LabError, Result};
use crate::grid::{freq_index, GridFunction};
use crate::lorentz::{lorentz_norm, neumaier, LorentzExponents};
use crate::numerics::fft::{fft_1d, fft_2d};
use crate::numerics::profile::{chi0, exp_bump, plateau};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Geometry of a square function or maximal function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SquareFlavor {
    Isotropic,
    Parabolic { m: f64 },
    Product,
}

/// Largest kernel lattice (points) the construction will allocate.
const KERNEL_BUDGET: usize = 1 << 22;

/// Real kernel on the lattice `h Z^d`, stored on the box `[-half, half]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeKernel {
    dim: usize,
    h: f64,
    half: usize,
    values: Vec<f64>,
}

impl LatticeKernel {
    pub fn half(&self) -> usize {
        self.half
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Radius of the stored box, `half * h`.
    pub fn radius(&self) -> f64 {
        self.half as f64 * self.h
    }

    /// Density value at lattice offset `a`, zero outside the box.
    pub fn get(&self, a: &[i64]) -> f64 {
        let side = 2 * self.half + 1;
        let mut idx = 0;
        for &ai in &a[..self.dim] {
            if ai.unsigned_abs() as usize > self.half {
                return 0.0;
            }
            idx = idx * side + (ai + self.half as i64) as usize;
        }
        self.values[idx]
    }

    fn offsets(&self) -> impl Iterator<Item = ([i64; 2], f64)> + '_ {
        let side = 2 * self.half + 1;
        let half = self.half as i64;
        let dim = self.dim;
        self.values.iter().enumerate().map(move |(i, &v)| {
            if dim == 1 {
                ([i as i64 - half, 0], v)
            } else {
                ([(i / side) as i64 - half, (i % side) as i64 - half], v)
            }
        })
    }

    pub fn l1(&self) -> f64 {
        neumaier(self.values.iter().map(|v| v.abs())) * self.h.powi(self.dim as i32)
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sum (x/unit)^beta psi(x) h^d`.
    pub fn moment(&self, beta: [u32; 2], unit: f64) -> f64 {
        let s = self.h / unit;
        let cell = self.h.powi(self.dim as i32);
        neumaier(self.offsets().map(|(a, v)| {
            let x1 = (a[0] as f64 * s).powi(beta[0] as i32);
            let x2 = if self.dim == 2 { (a[1] as f64 * s).powi(beta[1] as i32) } else { 1.0 };
            x1 * x2 * v
        })) * cell
    }

    /// Crop a full periodic lattice array of side `nk` to `[-half, half]^d`.
    fn crop(dim: usize, h: f64, nk: usize, half: usize, full: &[f64]) -> Self {
        let side = 2 * half + 1;
        let wrap = |a: i64| a.rem_euclid(nk as i64) as usize;
        let mut values = Vec::with_capacity(side.pow(dim as u32));
        if dim == 1 {
            for a in -(half as i64)..=half as i64 {
                values.push(full[wrap(a)]);
            }
        } else {
            for a in -(half as i64)..=half as i64 {
                for b in -(half as i64)..=half as i64 {
                    values.push(full[wrap(a) * nk + wrap(b)]);
                }
            }
        }
        LatticeKernel { dim, h, half, values }
    }
}

/// A built family: base lattice, kernels `Psi_s`, `psi_s` for `s = 0..=r`,
/// and construction diagnostics.
#[derive(Debug, Clone)]
pub struct LPFamily {
    pub dim: usize,
    pub r: usize,
    pub n0: usize,
    pub eps: f64,
    /// Lattice points per base radius.
    pub cells: usize,
    /// Lattice spacing.
    pub h: f64,
    /// Side of the periodic lattice used to recover kernels.
    pub kernel_n: usize,
    base: Vec<f64>,
    pub big_psi: Vec<LatticeKernel>,
    pub small_psi: Vec<LatticeKernel>,
    /// Largest `|Psi_s|` outside the `eps` ball, relative to its peak.
    pub support_leak: f64,
    /// Largest `|moment_beta(psi_s)| / ||psi_s||_1` over `|beta| <= N0`
    /// (coordinates in units of the kernel radius).
    pub max_moment: f64,
    /// `max |psi_0 - (Psi_0 - pushforward Psi_0)| / max |psi_0|`.
    pub identity_residual: f64,
}

fn iterate(mut y: f64, s: usize) -> f64 {
    for _ in 0..s {
        let y2 = y * y;
        y = (2.0 - y2) * y2;
    }
    y
}

/// `L^k_s` for `s = 0..=r` from the base symbol at scales `k` and `k - 1`.
fn ladder(dk: f64, dkm: f64, out: &mut [f64]) {
    out[0] = dk - dkm;
    let (mut a, mut b) = (dk, dkm);
    for s in 1..out.len() {
        out[s] = (2.0 - a * a - b * b) * (a + b);
        a = iterate(a, 1);
        b = iterate(b, 1);
    }
}

/// Multi-indices `(2p, 2q)` with `p <= q` and `p + q <= n0/2`, or `(2p, 0)` in 1D.
fn even_orbits(dim: usize, n0: usize) -> Vec<(u32, u32)> {
    let top = (n0 / 2) as u32;
    if dim == 1 {
        (0..=top).map(|p| (2 * p, 0)).collect()
    } else {
        (0..=top).flat_map(|p| (p..=top - p).map(move |q| (2 * p, 2 * q))).filter(|&(a, b)| a / 2 + b / 2 <= top).collect()
    }
}

fn next_pow2(x: usize) -> usize {
    x.next_power_of_two()
}

/// Construct the family. `side` is the torus side the kernels must fit in.
pub fn build_lp_family(dim: usize, r: usize, n0: usize, eps: f64, side: f64) -> Result<LPFamily> {
    ensure!(dim == 1 || dim == 2, validation, "dimension must be 1 or 2, got {dim}");
    ensure!(r <= 5, validation, "recursion depth must be at most 5, got {r}");
    ensure!(n0 <= 100 * dim, validation, "moment order {n0} exceeds the budget 100*d");
    ensure!(eps > 0.0 && eps.is_finite(), validation, "support radius must be positive, got {eps}");
    ensure!(eps < 0.5 * side, validation, "support ball of radius {eps} does not fit a torus of side {side}");
    let cells = if dim == 2 { (n0 / 2 + 1).max(5) } else { (n0 + 2).max(8) };
    let r0 = eps / 4f64.powi(r as i32);
    let h = r0 / cells as f64;

    // Base masses on [-cells, cells]^d.
    let c = cells as i64;
    let side_b = 2 * cells + 1;
    let pts: Vec<[i64; 2]> = if dim == 1 {
        (-c..=c).map(|a| [a, 0]).collect()
    } else {
        (-c..=c).flat_map(|a| (-c..=c).map(move |b| [a, b])).collect()
    };
    let u = |a: [i64; 2]| [a[0] as f64 / cells as f64, a[1] as f64 / cells as f64];
    let bump = |a: [i64; 2]| {
        let v = u(a);
        exp_bump((v[0] * v[0] + v[1] * v[1]).sqrt())
    };
    let orbits = even_orbits(dim, n0);
    let mono = |a: [i64; 2], e: (u32, u32)| {
        let v = u(a);
        v[0].powi(e.0 as i32) * v[1].powi(e.1 as i32)
    };
    let basis = |a: [i64; 2], e: (u32, u32)| {
        if dim == 1 || e.0 == e.1 {
            mono(a, e)
        } else {
            mono(a, e) + mono(a, (e.1, e.0))
        }
    };
    let k = orbits.len();
    let mut mat = DMatrix::<f64>::zeros(k, k);
    for (i, &ei) in orbits.iter().enumerate() {
        for (j, &ej) in orbits.iter().enumerate() {
            mat[(i, j)] = neumaier(pts.iter().map(|&a| mono(a, ei) * bump(a) * basis(a, ej)));
        }
    }
    let mut rhs = DVector::<f64>::zeros(k);
    rhs[0] = 1.0;
    let coef = mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| LabError::validation(format!("moment system for N0={n0} on {cells} cells is singular")))?;
    let base: Vec<f64> = pts
        .iter()
        .map(|&a| bump(a) * orbits.iter().zip(coef.iter()).map(|(&e, &cj)| cj * basis(a, e)).sum::<f64>())
        .collect();
    debug_assert_eq!(base.len(), side_b.pow(dim as u32));

    // Kernel halves (in lattice cells).
    let big_half: Vec<usize> = (0..=r).map(|s| cells * 4usize.pow(s as u32)).collect();
    let small_half: Vec<usize> =
        (0..=r).map(|s| if s == 0 { 2 * cells } else { 6 * cells * 4usize.pow(s as u32 - 1) }).collect();
    let max_half = big_half.iter().chain(&small_half).copied().max().unwrap();
    let nk = next_pow2(2 * max_half + 2);
    ensure!(
        nk.pow(dim as u32) <= KERNEL_BUDGET,
        validation,
        "kernel lattice of side {nk} exceeds the memory budget (reduce r or N0)"
    );

    // D on the lattice DFT grid.
    let total = nk.pow(dim as u32);
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    let wrap = |a: i64| a.rem_euclid(nk as i64) as usize;
    for (&a, &m) in pts.iter().zip(&base) {
        let idx = if dim == 1 { wrap(a[0]) } else { wrap(a[0]) * nk + wrap(a[1]) };
        buf[idx] = Complex64::new(m, 0.0);
    }
    let fft = |b: &mut [Complex64], inv: bool| if dim == 1 { fft_1d(b, inv) } else { fft_2d(b, nk, inv) };
    fft(&mut buf, false);
    let d: Vec<f64> = buf.iter().map(|v| v.re).collect();
    let d2: Vec<f64> = (0..total)
        .map(|idx| {
            if dim == 1 {
                d[(2 * idx) % nk]
            } else {
                d[((2 * (idx / nk)) % nk) * nk + (2 * (idx % nk)) % nk]
            }
        })
        .collect();
    let density = 1.0 / (total as f64 * h.powi(dim as i32));
    let to_kernel = |sym: &[f64]| -> Vec<f64> {
        let mut b: Vec<Complex64> = sym.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft(&mut b, true);
        b.iter().map(|v| v.re * density).collect()
    };

    let mut big_psi = Vec::with_capacity(r + 1);
    let mut small_psi = Vec::with_capacity(r + 1);
    let mut support_leak = 0.0f64;
    let mut sk = d.clone();
    let mut skm = d2.clone();
    for s in 0..=r {
        let l_sym: Vec<f64> = if s == 0 {
            d.iter().zip(&d2).map(|(a, b)| a - b).collect()
        } else {
            sk.iter().zip(&skm).map(|(&a, &b)| (2.0 - a * a - b * b) * (a + b)).collect()
        };
        if s > 0 {
            sk.iter_mut().for_each(|v| *v = iterate(*v, 1));
            skm.iter_mut().for_each(|v| *v = iterate(*v, 1));
        }
        let full_big = to_kernel(&sk);
        let peak = full_big.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (idx, v) in full_big.iter().enumerate() {
            let (a, b) = if dim == 1 { (freq_index(idx, nk), 0) } else { (freq_index(idx / nk, nk), freq_index(idx % nk, nk)) };
            let rad = ((a * a + b * b) as f64).sqrt() * h;
            if rad > eps {
                support_leak = support_leak.max(v.abs() / peak);
            }
        }
        big_psi.push(LatticeKernel::crop(dim, h, nk, big_half[s], &full_big));
        small_psi.push(LatticeKernel::crop(dim, h, nk, small_half[s], &to_kernel(&l_sym)));
    }

    // Moments of psi_s in units of its support radius.
    let mut max_moment = 0.0f64;
    let mut worst = (0usize, [0u32; 2]);
    for (s, ker) in small_psi.iter().enumerate() {
        let l1 = ker.l1();
        let unit = ker.radius();
        for b1 in 0..=n0 as u32 {
            for b2 in 0..=(if dim == 2 { n0 as u32 - b1 } else { 0 }) {
                let rel = ker.moment([b1, b2], unit).abs() / l1;
                if rel > max_moment {
                    max_moment = rel;
                    worst = (s, [b1, b2]);
                }
            }
        }
    }
    ensure!(
        max_moment <= 1e-8,
        guard,
        "moment tolerance failure: psi_{} moment {:?} is {max_moment:e} of its L1 norm",
        worst.0,
        worst.1
    );

    // psi_0 against Psi_0 minus its pushforward under x -> 2x.
    let p0 = &small_psi[0];
    let b0 = &big_psi[0];
    let mut identity_residual = 0.0f64;
    for (a, v) in p0.offsets() {
        let even = a[0] % 2 == 0 && a[1] % 2 == 0;
        let push = if even { b0.get(&[a[0] / 2, a[1] / 2]) } else { 0.0 };
        identity_residual = identity_residual.max((v - (b0.get(&a) - push)).abs());
    }
    identity_residual /= p0.peak();

    Ok(LPFamily {
        dim,
        r,
        n0,
        eps,
        cells,
        h,
        kernel_n: nk,
        base,
        big_psi,
        small_psi,
        support_leak,
        max_moment,
        identity_residual,
    })
}

impl LPFamily {
    fn band(&self) -> f64 {
        0.5 / self.h
    }

    /// Transform of the base kernel, `sum_a m_a e^{-2 pi i h a.eta}`, cut to
    /// the principal band `|eta_i| < 1/(2h)`.
    pub fn base_symbol(&self, eta: &[f64]) -> f64 {
        if eta.iter().take(self.dim).any(|e| e.abs() >= self.band()) {
            return 0.0;
        }
        let c = self.cells as i64;
        let side = 2 * self.cells + 1;
        let mut acc = 0.0;
        for (i, &m) in self.base.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let phase = if self.dim == 1 {
                (i as i64 - c) as f64 * eta[0]
            } else {
                ((i / side) as i64 - c) as f64 * eta[0] + ((i % side) as i64 - c) as f64 * eta[1]
            };
            acc += m * (2.0 * PI * self.h * phase).cos();
        }
        acc
    }

    /// `D(2^{-k} xi)` at every frequency of `g`, FFT slot order.
    pub fn base_table(&self, g: &GridFunction, k: i32) -> Vec<f64> {
        let n = g.n();
        let scale = 2f64.powi(-k);
        let c = self.cells as i64;
        let side = 2 * self.cells + 1;
        let band = self.band();
        let etas: Vec<f64> = (0..n).map(|i| scale * g.freq(i)).collect();
        // e[a][i] = exp(-2 pi i h a eta_i) for a in [-c, c], zero outside the band.
        let e: Vec<Vec<Complex64>> = (-c..=c)
            .map(|a| {
                etas.iter()
                    .map(|&eta| {
                        if eta.abs() >= band {
                            Complex64::new(0.0, 0.0)
                        } else {
                            Complex64::from_polar(1.0, -2.0 * PI * self.h * a as f64 * eta)
                        }
                    })
                    .collect()
            })
            .collect();
        if self.dim == 1 {
            return (0..n).map(|i| (0..side).map(|a| self.base[a] * e[a][i].re).sum()).collect();
        }
        // gsum[a][i2] = sum_b m(a, b) e[b][i2]
        let gsum: Vec<Vec<Complex64>> = (0..side)
            .map(|a| {
                (0..n)
                    .map(|i2| (0..side).map(|b| e[b][i2] * self.base[a * side + b]).sum::<Complex64>())
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; n * n];
        out.par_chunks_mut(n).enumerate().for_each(|(i1, row)| {
            for (i2, o) in row.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..side {
                    acc += e[a][i1] * gsum[a][i2];
                }
                *o = acc.re;
            }
        });
        out
    }

    /// Frequency (along an axis) where `|L^0_0| = |D(xi) - D(2 xi)|` peaks;
    /// `2^k` times this is the characteristic frequency of piece `k`.
    pub fn peak_frequency(&self) -> f64 {
        let top = self.band();
        (1..=2000)
            .map(|i| top * i as f64 / 2000.0)
            .map(|x| (x, (self.base_symbol(&[x, 0.0]) - self.base_symbol(&[2.0 * x, 0.0])).abs()))
            .fold((0.0, -1.0), |best, c| if c.1 > best.1 { c } else { best })
            .0
    }

    /// Largest support radius among the kernels used at scale 0.
    pub fn max_radius(&self) -> f64 {
        self.big_psi.iter().chain(&self.small_psi).map(|k| k.radius()).fold(0.0, f64::max)
    }

    /// Scales `k` whose kernels fit the torus of `g`, up to the first scale at
    /// which the base symbol equals 1 to machine precision on the whole grid.
    pub fn admissible_range(&self, g: &GridFunction) -> Result<(i32, i32)> {
        ensure!(g.dim() == self.dim, validation, "family is {}-dimensional, grid is {}-dimensional", self.dim, g.dim());
        let k_lo = (2.0 * self.max_radius() / g.side()).log2().ceil() as i32;
        let nyq = g.nyquist();
        let probes: Vec<[f64; 2]> = if self.dim == 1 { vec![[nyq, 0.0]] } else { vec![[nyq, 0.0], [nyq, nyq]] };
        // Flat to rounding: no worse than twice the defect at the origin.
        let floor = 1e-15 + 2.0 * (1.0 - self.base_symbol(&[0.0, 0.0])).abs();
        let mut k_hi = k_lo;
        while probes.iter().any(|p| {
            let s = 2f64.powi(-k_hi);
            (1.0 - self.base_symbol(&[s * p[0], s * p[1]])).abs() > floor
        }) {
            k_hi += 1;
            ensure!(k_hi < k_lo + 200, guard, "no flat scale found for the base symbol");
        }
        Ok((k_lo, k_hi))
    }

    /// Longest radial band `[lo, hi]` (fractions of Nyquist) on which the
    /// telescoped sum `S^{k_hi}_r - S^{k_lo - 1}_r` is within `tol` of 1 in
    /// every sampled direction.
    pub fn covered_band(&self, g: &GridFunction, tol: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.admissible_range(g)?;
        let nyq = g.nyquist();
        let dirs: Vec<[f64; 2]> = if self.dim == 1 {
            vec![[1.0, 0.0]]
        } else {
            (0..=32).map(|i| (i as f64 * PI / 64.0).sin_cos()).map(|(s, c)| [c, s]).collect()
        };
        let samples = 1024;
        let ok: Vec<bool> = (1..=samples)
            .map(|i| {
                let t = i as f64 / samples as f64;
                dirs.iter().all(|d| {
                    let at = |k: i32| {
                        let s = 2f64.powi(-k) * t * nyq;
                        iterate(self.base_symbol(&[s * d[0], s * d[1]]), self.r)
                    };
                    (1.0 - at(hi) + at(lo - 1)).abs() <= tol
                })
            })
            .collect();
        let (mut best, mut start) = ((0, 0), None);
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
        ensure!(best.1 > best.0, guard, "no frequency band is reproduced to {tol:e} on this grid");
        Ok(((best.0 + 1) as f64 / samples as f64, best.1 as f64 / samples as f64))
    }

    fn check_k(&self, g: &GridFunction, k: i32) -> Result<()> {
        let (lo, _) = self.admissible_range(g)?;
        ensure!(
            k >= lo,
            validation,
            "scale k={k} is below the admissible range (kernels of radius {} must fit side {})",
            self.max_radius() * 2f64.powi(-k),
            g.side()
        );
        Ok(())
    }

    /// Symbols `L^k_s` for `s = 0..=r` at every frequency.
    pub fn ladder_tables(&self, g: &GridFunction, k: i32) -> Vec<Vec<f64>> {
        let dk = self.base_table(g, k);
        let dkm = self.base_table(g, k - 1);
        let mut out = vec![vec![0.0; dk.len()]; self.r + 1];
        let mut buf = vec![0.0; self.r + 1];
        for i in 0..dk.len() {
            ladder(dk[i], dkm[i], &mut buf);
            for s in 0..=self.r {
                out[s][i] = buf[s];
            }
        }
        out
    }

    /// Symbol of `S^k_s`.
    pub fn s_table(&self, g: &GridFunction, k: i32, s: usize) -> Vec<f64> {
        self.base_table(g, k).into_iter().map(|v| iterate(v, s)).collect()
    }

    /// Symbol of `L^k_0 L^k_1 ... L^k_r`.
    pub fn product_table(&self, g: &GridFunction, k: i32) -> Vec<f64> {
        let dk = self.base_table(g, k);
        let dkm = self.base_table(g, k - 1);
        let mut buf = vec![0.0; self.r + 1];
        dk.iter()
            .zip(&dkm)
            .map(|(&a, &b)| {
                ladder(a, b, &mut buf);
                buf.iter().product()
            })
            .collect()
    }
}

fn complex_table(t: &[f64]) -> Vec<Complex64> {
    t.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// `L^k_s f`, convolution with `2^{kd} psi_s(2^k .)`.
pub fn lp_piece(f: &GridFunction, fam: &LPFamily, k: i32, s: usize) -> Result<GridFunction> {
    ensure!(s <= fam.r, validation, "piece index s={s} exceeds the recursion depth {}", fam.r);
    fam.check_k(f, k)?;
    let t = fam.ladder_tables(f, k).swap_remove(s);
    Ok(f.apply_table(&complex_table(&t)))
}

/// `sum_k L^k_0 ... L^k_r f` over the admissible scales.
pub fn reproduce(f: &GridFunction, fam: &LPFamily) -> Result<GridFunction> {
    let (lo, hi) = fam.admissible_range(f)?;
    let mut acc = vec![0.0; f.len()];
    for k in lo..=hi {
        for (a, v) in acc.iter_mut().zip(fam.product_table(f, k)) {
            *a += v;
        }
    }
    Ok(f.apply_table(&complex_table(&acc)))
}

/// `||f - reproduce(f)||_2 / ||f||_2`.
pub fn reproduce_residual(f: &GridFunction, fam: &LPFamily) -> Result<f64> {
    let g = reproduce(f, fam)?;
    Ok(g.sub(f)?.l2_norm() / f.l2_norm())
}

/// Largest relative gap between `(S^k_{s+1} - S^{k-1}_{s+1}) f` and
/// `L^k_{s+1} (S^k_s - S^{k-1}_s) f` over admissible `k` and `s < r`, each
/// side applied as a composition of multipliers.
pub fn telescope_residual(f: &GridFunction, fam: &LPFamily) -> Result<f64> {
    let (lo, hi) = fam.admissible_range(f)?;
    let norm = f.l2_norm();
    let mut worst = 0.0f64;
    for k in lo..=hi {
        let dk = fam.base_table(f, k);
        let dkm = fam.base_table(f, k - 1);
        let ladders = fam.ladder_tables(f, k);
        for s in 0..fam.r {
            let diff = |t: usize| -> Vec<Complex64> {
                dk.iter().zip(&dkm).map(|(&a, &b)| Complex64::new(iterate(a, t) - iterate(b, t), 0.0)).collect()
            };
            let lhs = f.apply_table(&diff(s + 1));
            let rhs = f.apply_table(&diff(s)).apply_table(&complex_table(&ladders[s + 1]));
            worst = worst.max(lhs.sub(&rhs)?.l2_norm() / norm);
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Square functions

/// Scales of the anisotropic pieces `chi0(rho_{k+1}) - chi0(rho_k)` that are
/// nonzero somewhere on the grid, `rho_k(xi) = |(2^{-k} xi_1, 2^{-km} xi_2)|`.
fn parabolic_range(g: &GridFunction, m: f64) -> Vec<i32> {
    let nyq = g.nyquist();
    let lo = 1.0 / g.side();
    let rho = |k: i32, x1: f64, x2: f64| ((2f64.powi(-k) * x1).powi(2) + (2f64.powf(-k as f64 * m) * x2).powi(2)).sqrt();
    (-200..200)
        .filter(|&k| rho(k, nyq, nyq) > 0.5 && rho(k + 1, lo, 0.0).min(rho(k + 1, 0.0, lo)) < 1.0)
        .collect()
}

fn parabolic_table(g: &GridFunction, m: f64, k: i32) -> Vec<f64> {
    let rho = |k: i32, xi: [f64; 2]| ((2f64.powi(-k) * xi[0]).powi(2) + (2f64.powf(-k as f64 * m) * xi[1]).powi(2)).sqrt();
    (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let xi = g.freq_point(idx);
            chi0(rho(k + 1, xi)) - chi0(rho(k, xi))
        })
        .collect()
}

/// Visit the symbol table of every square-function piece.
fn for_each_piece(g: &GridFunction, flavor: SquareFlavor, fam: &LPFamily, mut visit: impl FnMut(&[f64])) -> Result<()> {
    match flavor {
        SquareFlavor::Isotropic => {
            let (lo, hi) = fam.admissible_range(g)?;
            for k in lo..=hi {
                let dk = fam.base_table(g, k);
                let dkm = fam.base_table(g, k - 1);
                let t: Vec<f64> = dk.iter().zip(&dkm).map(|(a, b)| a - b).collect();
                visit(&t);
            }
        }
        SquareFlavor::Parabolic { m } => {
            ensure!(g.dim() == 2, validation, "parabolic pieces need a two-dimensional grid");
            ensure!(m > 1.0, validation, "parabolic flavor needs m > 1, got {m}");
            for k in parabolic_range(g, m) {
                visit(&parabolic_table(g, m, k));
            }
        }
        SquareFlavor::Product => {
            ensure!(g.dim() == 2, validation, "product pieces need a two-dimensional grid");
            let fam1 = build_lp_family(1, fam.r, fam.n0, fam.eps, g.side())?;
            let line = GridFunction::zeros(1, g.n(), g.side())?;
            let (lo, hi) = fam1.admissible_range(&line)?;
            let axis: Vec<Vec<f64>> = (lo..=hi)
                .map(|k| {
                    let a = fam1.base_table(&line, k);
                    let b = fam1.base_table(&line, k - 1);
                    a.iter().zip(&b).map(|(x, y)| x - y).collect()
                })
                .collect();
            let n = g.n();
            for t1 in &axis {
                for t2 in &axis {
                    let t: Vec<f64> = (0..n * n).map(|idx| t1[idx / n] * t2[idx % n]).collect();
                    visit(&t);
                }
            }
        }
    }
    Ok(())
}

/// Pointwise aggregate `(sum_k |phi_k * f|^2)^{1/2}`.
pub fn square_function(f: &GridFunction, flavor: SquareFlavor, fam: &LPFamily) -> Result<GridFunction> {
    let mut acc = vec![0.0f64; f.len()];
    for_each_piece(f, flavor, fam, |t| {
        let piece = f.apply_table(&complex_table(t));
        acc.par_iter_mut().zip(piece.values().par_iter()).for_each(|(a, v)| *a += v.norm_sqr());
    })?;
    Ok(f.with_values(acc.into_iter().map(|v| Complex64::new(v.sqrt(), 0.0)).collect()))
}

/// `||(sum_k |phi_k * f|^2)^{1/2}||_{L^{p,q}}`.
pub fn square_norm(f: &GridFunction, e: LorentzExponents, flavor: SquareFlavor, fam: &LPFamily) -> Result<f64> {
    Ok(lorentz_norm(&square_function(f, flavor, fam)?, e))
}

/// Min and max of `(sum_k |phi_k^(xi)|^2)^{1/2}` over the spectral support of `f`.
pub fn square_envelope(f: &GridFunction, flavor: SquareFlavor, fam: &LPFamily) -> Result<(f64, f64)> {
    let mut acc = vec![0.0f64; f.len()];
    for_each_piece(f, flavor, fam, |t| acc.iter_mut().zip(t).for_each(|(a, v)| *a += v * v))?;
    let spec = f.spectrum();
    let top = spec.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (a, v) in acc.iter().zip(&spec) {
        if v.norm() > 1e-12 * top {
            lo = lo.min(a.sqrt());
            hi = hi.max(a.sqrt());
        }
    }
    Ok((lo, hi))
}

/// Centered max over the disc of radius `rad` cells (periodic).
fn disc_max(a: &[f64], n: usize, dim: usize, rad: usize) -> Vec<f64> {
    let rad = rad.min(n / 2);
    let centered = |row: &[f64], w: usize, out: &mut [f64]| {
        let mut tmp = vec![0.0; row.len()];
        sliding_max(row, 2 * w + 1, &mut tmp);
        for x in 0..row.len() {
            out[x] = tmp[(x + w) % row.len()];
        }
    };
    if dim == 1 {
        let mut out = vec![0.0; n];
        centered(a, rad, &mut out);
        return out;
    }
    // Horizontal maxima for each half-width needed by the disc.
    let widths: Vec<usize> = (0..=rad).map(|dy| (((rad * rad - dy * dy) as f64).sqrt()).floor() as usize).collect();
    let mut uniq = widths.clone();
    uniq.sort();
    uniq.dedup();
    let rows: Vec<Vec<f64>> = uniq
        .par_iter()
        .map(|&w| {
            let mut out = vec![0.0; n * n];
            out.chunks_mut(n).zip(a.chunks(n)).for_each(|(o, r)| centered(r, w, o));
            out
        })
        .collect();
    let by_width = |w: usize| &rows[uniq.binary_search(&w).unwrap()];
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, orow)| {
        for (dy, &w) in widths.iter().enumerate() {
            let t = by_width(w);
            for di in [dy as i64, -(dy as i64)] {
                let src = (i as i64 + di).rem_euclid(n as i64) as usize;
                for (o, v) in orow.iter_mut().zip(&t[src * n..(src + 1) * n]) {
                    *o = f64::max(*o, *v);
                }
            }
        }
    });
    out
}

/// `max_{x,k} sup_{|y| <= 2^{-k} b} |phi_k*f(x+y)| / (M[|phi_k*f|^r](x))^{1/r}`,
/// with `phi_k = psi_0^k` and lengths measured in units of the inverse peak
/// frequency of `psi_0` (so piece `k` oscillates at frequency about `2^k`).
pub fn peak_maximal_check(f: &GridFunction, fam: &LPFamily, b: f64, r_exp: f64) -> Result<f64> {
    ensure!(r_exp > 0.0 && r_exp <= 1.0, validation, "exponent r must lie in (0, 1], got {r_exp}");
    ensure!((0.5..=4.0).contains(&b), validation, "radius factor b must lie in [1/2, 4], got {b}");
    let norm = f.l2_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = fam.admissible_range(f)?;
    let unit = fam.peak_frequency();
    let mut worst = 0.0f64;
    for k in lo..=hi {
        let dk = fam.base_table(f, k);
        let dkm = fam.base_table(f, k - 1);
        let t: Vec<Complex64> = dk.iter().zip(&dkm).map(|(a, b)| Complex64::new(a - b, 0.0)).collect();
        let piece = f.apply_table(&t);
        if piece.l2_norm() <= 1e-12 * norm {
            continue;
        }
        let a: Vec<f64> = piece.values().iter().map(|v| v.norm()).collect();
        let rad = (2f64.powi(-k) * b / (unit * f.spacing())).floor() as usize;
        let lhs = disc_max(&a, f.n(), f.dim(), rad);
        let powed = piece.with_values(a.iter().map(|v| Complex64::new(v.powf(r_exp), 0.0)).collect());
        let m = hl_maximal(&powed, SquareFlavor::Isotropic);
        for (l, mv) in lhs.iter().zip(m.values()) {
            let rhs = mv.re.powf(1.0 / r_exp);
            if rhs > 0.0 {
                worst = worst.max(l / rhs);
            }
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Angular and parabolic projections

/// Sector cutoff `zeta(2^{l(m-1)} |xi_1| / |xi_2|)`, zero on the row `xi_2 = 0`.
pub fn angular_symbol(xi: &[f64], l: i32, m: f64) -> f64 {
    if xi[1] == 0.0 {
        return 0.0;
    }
    let a = 1.0 / (10f64.powf(m) * m);
    plateau(2f64.powf(l as f64 * (m - 1.0)) * xi[0].abs() / xi[1].abs(), a, 1.0 / a)
}

pub fn angular_projection(f: &GridFunction, l: i32, m: f64) -> Result<GridFunction> {
    ensure!(f.dim() == 2, validation, "angular projections need a two-dimensional grid");
    ensure!(m > 1.0, validation, "curve exponent must exceed 1, got {m}");
    f.fourier_multiplier(|xi| Complex64::new(angular_symbol(xi, l, m), 0.0))
}

/// Low-pass `chi0(|(2^{-l} xi_1, 2^{-lm} xi_2)|)`.
pub fn lowpass_symbol(xi: &[f64], l: i32, m: f64) -> f64 {
    let a = 2f64.powi(-l) * xi[0];
    let b = 2f64.powf(-(l as f64) * m) * xi[1];
    chi0((a * a + b * b).sqrt())
}

pub fn lowpass_parabolic(f: &GridFunction, l: i32, m: f64) -> Result<GridFunction> {
    ensure!(f.dim() == 2, validation, "parabolic low-pass needs a two-dimensional grid");
    f.fourier_multiplier(|xi| Complex64::new(lowpass_symbol(xi, l, m), 0.0))
}

// ---------------------------------------------------------------------------
// Verification driver

/// Random function whose spectrum fills `lo*nyq <= |xi| <= hi*nyq`.
pub fn band_limited_input(dim: usize, n: usize, side: f64, lo: f64, hi: f64, rng: &mut impl Rng) -> Result<GridFunction> {
    let g = GridFunction::zeros(dim, n, side)?;
    let nyq = g.nyquist();
    let spec: Vec<Complex64> = (0..g.len())
        .map(|idx| {
            let xi = g.freq_point(idx);
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt() / nyq;
            let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if r >= lo && r <= hi {
                Complex64::new(a, b)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(g.from_spectrum(spec))
}

/// Summary of [`lp_verify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LPReport {
    pub max_moment: f64,
    pub support_leak: f64,
    pub identity_residual: f64,
    pub reproduce_residual: f64,
    pub telescope_residual: f64,
    pub k_range: (i32, i32),
    /// Radial band of the inputs, as fractions of Nyquist.
    pub band: (f64, f64),
    pub inputs: usize,
}

/// Symbol tolerance defining the band the scale range covers.
pub const COVER_TOL: f64 = 1e-8;

/// Build-time diagnostics plus reproducing and telescoping residuals on
/// `inputs` random functions whose spectra lie in the covered band
/// (telescoping on the first two).
pub fn lp_verify(fam: &LPFamily, n: usize, side: f64, inputs: usize, seed: u64) -> Result<LPReport> {
    let probe = GridFunction::zeros(fam.dim, n, side)?;
    let k_range = fam.admissible_range(&probe)?;
    let band = fam.covered_band(&probe, COVER_TOL)?;
    let results: Vec<Result<(f64, f64)>> = (0..inputs)
        .map(|i| {
            let mut rng = crate::rng::stream_rng(seed, i as u64);
            let f = band_limited_input(fam.dim, n, side, band.0, band.1, &mut rng)?;
            let rep = reproduce_residual(&f, fam)?;
            let tel = if i < 2 { telescope_residual(&f, fam)? } else { 0.0 };
            Ok((rep, tel))
        })
        .collect();
    let mut rep = 0.0f64;
    let mut tel = 0.0f64;
    for r in results {
        let (a, b) = r?;
        rep = rep.max(a);
        tel = tel.max(b);
    }
    Ok(LPReport {
        max_moment: fam.max_moment,
        support_leak: fam.support_leak,
        identity_residual: fam.identity_residual,
        reproduce_residual: rep,
        telescope_residual: tel,
        k_range,
        band,
        inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn fam1() -> LPFamily {
        build_lp_family(1, 3, 8, 0.25, 1.0).unwrap()
    }

    #[test]
    fn one_dimensional_family_invariants() {
        let fam = fam1();
        assert!(fam.max_moment <= 1e-8, "{}", fam.max_moment);
        assert!(fam.support_leak <= 1e-12, "{}", fam.support_leak);
        assert!(fam.identity_residual <= 1e-12, "{}", fam.identity_residual);
        for k in &fam.big_psi {
            assert!(k.radius() <= fam.eps + 1e-15);
        }
        // Psi_0 has unit mass.
        let mass = fam.big_psi[0].moment([0, 0], 1.0);
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn base_table_matches_symbol() {
        let fam = build_lp_family(2, 1, 4, 0.25, 1.0).unwrap();
        let g = GridFunction::zeros(2, 32, 1.0).unwrap();
        for k in [-2, 0, 3] {
            let t = fam.base_table(&g, k);
            for idx in [0usize, 5, 77, 500, 1023] {
                let xi = g.freq_point(idx);
                let s = 2f64.powi(-k);
                let want = fam.base_symbol(&[s * xi[0], s * xi[1]]);
                assert!((t[idx] - want).abs() < 1e-12, "{k} {idx}");
            }
        }
    }

    #[test]
    fn reproducing_identity_1d() {
        let fam = build_lp_family(1, 3, 8, 0.25, 0.75).unwrap();
        let g = GridFunction::zeros(1, 1024, 0.75).unwrap();
        let (lo, hi) = fam.covered_band(&g, COVER_TOL).unwrap();
        assert!(lo < 0.7 && hi == 1.0, "{lo} {hi}");
        let mut rng = stream_rng(1, 0);
        let f = band_limited_input(1, 1024, 0.75, lo, hi, &mut rng).unwrap();
        assert!(reproduce_residual(&f, &fam).unwrap() < 1e-6);
        assert!(telescope_residual(&f, &fam).unwrap() < 1e-12);
    }

    #[test]
    fn single_frequency_piece() {
        let fam = fam1();
        let g = GridFunction::zeros(1, 256, 1.0).unwrap();
        let q = 100usize;
        let f = GridFunction::from_fn(1, 256, 1.0, |x| Complex64::from_polar(1.0, 2.0 * PI * q as f64 * x[0])).unwrap();
        let (lo, _) = fam.admissible_range(&g).unwrap();
        for s in 0..=fam.r {
            let out = lp_piece(&f, &fam, lo + 1, s).unwrap();
            let tab = fam.ladder_tables(&g, lo + 1);
            let mult = tab[s][q];
            let err = out.sub(&f.scale(Complex64::new(mult, 0.0))).unwrap().sup_norm();
            assert!(err < 1e-10, "{s} {err}");
        }
        assert!(lp_piece(&f, &fam, lo - 1, 0).is_err());
        let zero = GridFunction::zeros(1, 256, 1.0).unwrap();
        assert_eq!(lp_piece(&zero, &fam, lo, 2).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn square_norm_envelope_l2() {
        let fam = build_lp_family(2, 1, 4, 0.25, 1.0).unwrap();
        let mut rng = stream_rng(2, 0);
        let f = band_limited_input(2, 64, 1.0, 0.3, 0.9, &mut rng).unwrap();
        let e = LorentzExponents::new(2.0, 2.0).unwrap();
        for flavor in [SquareFlavor::Isotropic, SquareFlavor::Parabolic { m: 2.0 }, SquareFlavor::Product] {
            let (lo, hi) = square_envelope(&f, flavor, &fam).unwrap();
            let ratio = square_norm(&f, e, flavor, &fam).unwrap() / f.l2_norm();
            assert!(ratio >= lo * (1.0 - 1e-9) && ratio <= hi * (1.0 + 1e-9), "{flavor:?} {lo} {ratio} {hi}");
        }
        let zero = GridFunction::zeros(2, 64, 1.0).unwrap();
        assert_eq!(square_norm(&zero, e, SquareFlavor::Isotropic, &fam).unwrap(), 0.0);
    }

    #[test]
    fn peak_maximal_bounded_and_stable() {
        let fam = build_lp_family(2, 1, 4, 0.25, 4.0).unwrap();
        let bump = |x: &[f64]| exp_bump((x[0] * x[0] + x[1] * x[1]).sqrt() / 0.5);
        let f1 = GridFunction::from_real_fn(2, 64, 4.0, bump).unwrap();
        let f2 = GridFunction::from_real_fn(2, 128, 4.0, bump).unwrap();
        let r1 = peak_maximal_check(&f1, &fam, 1.0, 1.0).unwrap();
        let r2 = peak_maximal_check(&f2, &fam, 1.0, 1.0).unwrap();
        assert!(r1.is_finite() && r1 <= 10.0, "{r1}");
        assert!((r2 / r1 - 1.0).abs() <= 0.2, "{r1} {r2}");
        let zero = GridFunction::zeros(2, 64, 4.0).unwrap();
        assert_eq!(peak_maximal_check(&zero, &fam, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn angular_symbol_properties() {
        let m = 2.0;
        for l in 0..6 {
            // Normal direction to (t, t^m) at t = 2^{-l}.
            let t = 2f64.powi(-l);
            let xi = [m * t.powf(m - 1.0), -1.0];
            assert_eq!(angular_symbol(&xi, l, m), 1.0);
            for &x in &[0.3, 1.7, 40.0] {
                let s = 2f64.powf(l as f64 * (m - 1.0));
                assert_eq!(angular_symbol(&[x, 2.0], l, m), angular_symbol(&[s * x, 2.0], 0, m));
            }
        }
        assert_eq!(angular_symbol(&[1.0, 0.0], 0, m), 0.0);
        // Spectrum on the xi_2 = 0 row is removed.
        let f = GridFunction::from_fn(2, 32, 1.0, |x| Complex64::from_polar(1.0, 2.0 * PI * 3.0 * x[0])).unwrap();
        assert!(angular_projection(&f, 0, m).unwrap().l2_norm() <= 1e-10 * f.l2_norm());
    }

    #[test]
    fn lowpass_properties() {
        let c = GridFunction::from_real_fn(2, 32, 1.0, |_| 2.5).unwrap();
        let out = lowpass_parabolic(&c, 1, 2.0).unwrap();
        assert!(out.sub(&c).unwrap().sup_norm() < 1e-12);
        // (2^{-l} xi_1, 2^{-lm} xi_2) of norm >= 1 is killed.
        let f = GridFunction::from_fn(2, 32, 1.0, |x| Complex64::from_polar(1.0, 2.0 * PI * (5.0 * x[0] + 9.0 * x[1]))).unwrap();
        assert!(lowpass_parabolic(&f, 1, 2.0).unwrap().l2_norm() <= 1e-10 * f.l2_norm());
        let lp = lowpass_parabolic(&f, 3, 1.5).unwrap();
        let hp = f.sub(&lp).unwrap();
        assert_eq!(f.sub(&lp).unwrap().sub(&hp).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_lp_family(2, 6, 8, 0.25, 1.0).is_err());
        assert!(build_lp_family(2, 3, 8, 0.6, 1.0).is_err());
        assert!(build_lp_family(3, 1, 8, 0.25, 1.0).is_err());
    }
}
