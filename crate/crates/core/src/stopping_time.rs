//! Stopping-time selection on a finite set carrying two partial orders.
//!
//! Given `Lambda` with a strict order `≺`, an inclusion order `⊆`, weights
//! `A > 0` and a measure `nu` on a marked subset `Gamma`, the construction
//! finds `B ⊆ Lambda` and `q: Gamma -> Lambda` with
//!
//! 1. `gamma ⊆ q(gamma)`;
//! 2. `q(gamma) ∉ B` implies `q(gamma) = gamma`;
//! 3. `sum_{B} A <= nu(Gamma)`;
//! 4. `nu({gamma : q(gamma) ≺ lambda, gamma ⊆ lambda}) < A(lambda)` for all `lambda`.
//!
//! Masses are fixed-point numerators over `2^40`, so the strict comparison
//! in (4) never depends on float rounding.

use crate::dyadic::ParabolicRect;
use crate::error::{ensure, LabError, Result};
use crate::rng::stream_rng;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Fixed-point scale of masses.
pub const MASS_SCALE: f64 = (1u64 << 40) as f64;

/// Nonnegative mass `num / 2^40`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Mass(pub u128);

impl Mass {
    pub fn from_f64(x: f64) -> Result<Mass> {
        ensure!(x >= 0.0 && x.is_finite(), validation, "mass must be finite and nonnegative, got {x}");
        Ok(Mass((x * MASS_SCALE).round() as u128))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / MASS_SCALE
    }

    /// Exact test `self < a`.
    pub fn lt_real(self, a: f64) -> bool {
        let v = a * MASS_SCALE;
        if v >= 2f64.powi(127) {
            return true;
        }
        if v <= 0.0 {
            return false;
        }
        self.0 < v.ceil() as u128
    }

    pub fn to_rational(self) -> BigRational {
        BigRational::new(BigInt::from(self.0), BigInt::from(1u64 << 40))
    }
}

impl std::iter::Sum for Mass {
    fn sum<I: Iterator<Item = Mass>>(iter: I) -> Mass {
        Mass(iter.map(|m| m.0).sum())
    }
}

/// Dense boolean relation on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    n: usize,
    bits: Vec<bool>,
}

impl Relation {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                bits[i * n + j] = f(i, j);
            }
        }
        Relation { n, bits }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    pub fn pairs(&self) -> Vec<[usize; 2]> {
        (0..self.n * self.n).filter(|&k| self.bits[k]).map(|k| [k / self.n, k % self.n]).collect()
    }

    fn restrict(&self, keep: &[usize]) -> Relation {
        Relation::from_fn(keep.len(), |i, j| self.get(keep[i], keep[j]))
    }
}

/// Finite instance of the stopping-time problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PosetInstance {
    /// Opaque element ids, in input order (which also breaks ties).
    pub ids: Vec<u64>,
    /// `prec.get(i, j)` means `i ≺ j` (strict).
    pub prec: Relation,
    /// `incl.get(i, j)` means `i ⊆ j` (reflexive).
    pub incl: Relation,
    pub a: Vec<f64>,
    /// Element indices of `Gamma`, ascending.
    pub gamma: Vec<usize>,
    /// `nu` of each `Gamma` element, aligned with `gamma`.
    pub nu: Vec<Mass>,
}

/// JSON form of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub elements: Vec<u64>,
    pub prec: Vec<[u64; 2]>,
    pub incl: Vec<[u64; 2]>,
    pub weights: Vec<f64>,
    pub gamma: Vec<u64>,
    /// Fixed-point numerators over 2^40.
    pub nu: Vec<u128>,
}

impl PosetInstance {
    pub fn new(
        ids: Vec<u64>,
        prec: impl Fn(usize, usize) -> bool,
        incl: impl Fn(usize, usize) -> bool,
        a: Vec<f64>,
        gamma: Vec<usize>,
        nu: Vec<Mass>,
    ) -> Result<Self> {
        let n = ids.len();
        ensure!(a.len() == n, validation, "need one weight per element");
        ensure!(gamma.len() == nu.len(), validation, "need one mass per marked element");
        for (i, &w) in a.iter().enumerate() {
            ensure!(w > 0.0 && w.is_finite(), validation, "weight of element {} must be positive, got {w}", ids[i]);
        }
        let mut sorted_ids = ids.clone();
        sorted_ids.sort();
        sorted_ids.dedup();
        ensure!(sorted_ids.len() == n, validation, "element ids must be distinct");
        let mut pairs: Vec<(usize, Mass)> = gamma.into_iter().zip(nu).collect();
        pairs.sort_by_key(|p| p.0);
        for w in pairs.windows(2) {
            ensure!(w[0].0 != w[1].0, validation, "marked element {} listed twice", ids[w[0].0]);
        }
        if let Some(p) = pairs.last() {
            ensure!(p.0 < n, validation, "marked element index {} outside the ground set", p.0);
        }
        Ok(PosetInstance {
            ids,
            prec: Relation::from_fn(n, prec),
            incl: Relation::from_fn(n, incl),
            a,
            gamma: pairs.iter().map(|p| p.0).collect(),
            nu: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn total_nu(&self) -> Mass {
        self.nu.iter().copied().sum()
    }

    /// Check both orders on every triple; returns the first violation.
    pub fn validate_orders(&self) -> Result<()> {
        let n = self.len();
        let id = |i: usize| self.ids[i];
        for i in 0..n {
            ensure!(!self.prec.get(i, i), validation, "strict order is reflexive at {}", id(i));
            ensure!(self.incl.get(i, i), validation, "inclusion is not reflexive at {}", id(i));
            for j in 0..n {
                if i != j {
                    ensure!(
                        !(self.prec.get(i, j) && self.prec.get(j, i)),
                        validation,
                        "strict order is not antisymmetric on ({}, {})",
                        id(i),
                        id(j)
                    );
                    ensure!(
                        !(self.incl.get(i, j) && self.incl.get(j, i)),
                        validation,
                        "inclusion is not antisymmetric on ({}, {})",
                        id(i),
                        id(j)
                    );
                }
                for k in 0..n {
                    ensure!(
                        !(self.prec.get(i, j) && self.prec.get(j, k)) || self.prec.get(i, k),
                        validation,
                        "strict order is not transitive on ({}, {}, {})",
                        id(i),
                        id(j),
                        id(k)
                    );
                    ensure!(
                        !(self.incl.get(i, j) && self.incl.get(j, k)) || self.incl.get(i, k),
                        validation,
                        "inclusion is not transitive on ({}, {}, {})",
                        id(i),
                        id(j),
                        id(k)
                    );
                }
            }
        }
        Ok(())
    }

    pub fn to_record(&self) -> InstanceRecord {
        let map = |p: Vec<[usize; 2]>| p.into_iter().map(|[i, j]| [self.ids[i], self.ids[j]]).collect();
        InstanceRecord {
            elements: self.ids.clone(),
            prec: map(self.prec.pairs()),
            incl: map(self.incl.pairs()),
            weights: self.a.clone(),
            gamma: self.gamma.iter().map(|&g| self.ids[g]).collect(),
            nu: self.nu.iter().map(|m| m.0).collect(),
        }
    }

    pub fn from_record(r: &InstanceRecord) -> Result<Self> {
        let index = |id: u64| {
            r.elements
                .iter()
                .position(|&e| e == id)
                .ok_or_else(|| LabError::validation(format!("unknown element id {id}")))
        };
        let n = r.elements.len();
        let mut prec = vec![false; n * n];
        let mut incl = vec![false; n * n];
        for [a, b] in &r.prec {
            prec[index(*a)? * n + index(*b)?] = true;
        }
        for [a, b] in &r.incl {
            incl[index(*a)? * n + index(*b)?] = true;
        }
        let gamma = r.gamma.iter().map(|&g| index(g)).collect::<Result<Vec<_>>>()?;
        PosetInstance::new(
            r.elements.clone(),
            |i, j| prec[i * n + j],
            |i, j| incl[i * n + j],
            r.weights.clone(),
            gamma,
            r.nu.iter().map(|&v| Mass(v)).collect(),
        )
    }

    fn restrict(&self, keep: &[usize]) -> PosetInstance {
        let pos = |e: usize| keep.iter().position(|&k| k == e);
        let (gamma, nu): (Vec<usize>, Vec<Mass>) =
            self.gamma.iter().zip(&self.nu).filter_map(|(&g, &m)| pos(g).map(|p| (p, m))).unzip();
        PosetInstance {
            ids: keep.iter().map(|&k| self.ids[k]).collect(),
            prec: self.prec.restrict(keep),
            incl: self.incl.restrict(keep),
            a: keep.iter().map(|&k| self.a[k]).collect(),
            gamma,
            nu,
        }
    }
}

/// `Lambda_* = Gamma ∪ {lambda : A(lambda) <= nu(Gamma), some gamma ⊆ lambda}`.
pub fn restrict_lambda_star(inst: &PosetInstance) -> PosetInstance {
    let total = inst.total_nu();
    let keep: Vec<usize> = (0..inst.len())
        .filter(|&l| {
            inst.gamma.contains(&l)
                || (!total.lt_real(inst.a[l]) && inst.gamma.iter().any(|&g| inst.incl.get(g, l)))
        })
        .collect();
    inst.restrict(&keep)
}

/// Output `(B, q)`; `q[i]` is the image of `gamma[i]`, as element indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoppingResult {
    pub b: Vec<usize>,
    pub q: Vec<usize>,
}

/// Run the construction, consuming one `≺`-maximal element per step (the
/// lowest index among ties).
pub fn run_stopping_time(inst: &PosetInstance) -> Result<StoppingResult> {
    let n = inst.len();
    let mut alive = vec![true; n];
    let mut pending: Vec<bool> = vec![true; inst.gamma.len()];
    let mut q = vec![usize::MAX; inst.gamma.len()];
    let mut b = Vec::new();
    for _ in 0..n {
        let lmax = (0..n)
            .find(|&l| alive[l] && !(0..n).any(|mu| alive[mu] && inst.prec.get(l, mu)))
            .ok_or_else(|| {
                let l = (0..n).find(|&l| alive[l]).unwrap();
                let mu = (0..n).find(|&mu| alive[mu] && inst.prec.get(l, mu)).unwrap();
                LabError::validation(format!(
                    "strict order has no maximal element among the remaining set (cycle through ({}, {}))",
                    inst.ids[l], inst.ids[mu]
                ))
            })?;
        let below: Vec<usize> =
            (0..inst.gamma.len()).filter(|&i| pending[i] && inst.incl.get(inst.gamma[i], lmax)).collect();
        let mass: Mass = below.iter().map(|&i| inst.nu[i]).sum();
        if mass.lt_real(inst.a[lmax]) {
            if let Some(i) = inst.gamma.iter().position(|&g| g == lmax) {
                if pending[i] {
                    pending[i] = false;
                    q[i] = lmax;
                }
            }
        } else {
            for i in below {
                pending[i] = false;
                q[i] = lmax;
            }
            b.push(lmax);
        }
        alive[lmax] = false;
    }
    ensure!(q.iter().all(|&x| x != usize::MAX), validation, "marked element missing from the ground set");
    b.sort();
    Ok(StoppingResult { b, q })
}

/// Per-property outcome; `None` means the property holds.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifyReport {
    pub p1: Option<String>,
    pub p2: Option<String>,
    pub p3: Option<String>,
    pub p4: Option<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.p1.is_none() && self.p2.is_none() && self.p3.is_none() && self.p4.is_none()
    }

    pub fn first_witness(&self) -> Option<String> {
        [&self.p1, &self.p2, &self.p3, &self.p4].into_iter().flatten().next().cloned()
    }
}

fn sum_a_exact(inst: &PosetInstance, b: &[usize]) -> BigRational {
    b.iter().fold(BigRational::from_integer(BigInt::from(0)), |acc, &l| {
        acc + BigRational::from_float(inst.a[l]).expect("finite weight")
    })
}

/// Check the four postconditions by direct enumeration.
pub fn verify_stopping(inst: &PosetInstance, res: &StoppingResult) -> VerifyReport {
    let mut rep = VerifyReport::default();
    let id = |i: usize| inst.ids.get(i).copied().unwrap_or(u64::MAX);
    if res.q.len() != inst.gamma.len() || res.q.iter().chain(&res.b).any(|&x| x >= inst.len()) {
        rep.p1 = Some("q is not a total map into the ground set".into());
        return rep;
    }
    for (i, &g) in inst.gamma.iter().enumerate() {
        let qg = res.q[i];
        if rep.p1.is_none() && !inst.incl.get(g, qg) {
            rep.p1 = Some(format!("gamma {} is not contained in q(gamma) = {}", id(g), id(qg)));
        }
        if rep.p2.is_none() && !res.b.contains(&qg) && qg != g {
            rep.p2 = Some(format!("q({}) = {} is neither selected nor the identity", id(g), id(qg)));
        }
    }
    let lhs = sum_a_exact(inst, &res.b);
    let rhs = inst.total_nu().to_rational();
    if lhs > rhs {
        rep.p3 = Some(format!("sum of A over B is {} > nu(Gamma) = {}", lhs_f64(&lhs), inst.total_nu().to_f64()));
    }
    for l in 0..inst.len() {
        let mass: Mass = (0..inst.gamma.len())
            .filter(|&i| inst.prec.get(res.q[i], l) && inst.incl.get(inst.gamma[i], l))
            .map(|i| inst.nu[i])
            .sum();
        if !mass.lt_real(inst.a[l]) {
            rep.p4 = Some(format!(
                "lambda {}: captured mass {} >= A = {}",
                id(l),
                mass.to_f64(),
                inst.a[l]
            ));
            break;
        }
    }
    rep
}

fn lhs_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exhaustive search over all `(B, q)` obeying (1) and (2) for small
/// instances. Returns whether any assignment satisfies all four properties.
pub fn exhaustive_exists(inst: &PosetInstance) -> Result<bool> {
    let n = inst.len();
    ensure!(n <= 12, validation, "exhaustive search is limited to 12 elements, got {n}");
    let total = inst.total_nu().to_rational();
    for mask in 0u32..(1 << n) {
        let b: Vec<usize> = (0..n).filter(|&l| mask >> l & 1 == 1).collect();
        if sum_a_exact(inst, &b) > total {
            continue;
        }
        let options: Vec<Vec<usize>> = inst
            .gamma
            .iter()
            .map(|&g| {
                let mut o = vec![g];
                o.extend(b.iter().copied().filter(|&l| l != g && inst.incl.get(g, l)));
                o
            })
            .collect();
        let mut choice = vec![0usize; options.len()];
        loop {
            let q: Vec<usize> = choice.iter().zip(&options).map(|(&c, o)| o[c]).collect();
            let res = StoppingResult { b: b.clone(), q };
            if verify_stopping(inst, &res).passed() {
                return Ok(true);
            }
            // Odometer increment.
            let mut k = 0;
            loop {
                if k == choice.len() {
                    break;
                }
                choice[k] += 1;
                if choice[k] < options[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }
    }
    Ok(false)
}

/// Build the instance for a family of parabolic cubes: `Gamma` = cubes with
/// `c != 0` flagged by `bad`, `Lambda = Lambda_*` over the rectangle family,
/// `A(Q) = alpha 2^{sigma + m tau}`, `≺` compares `tau`, `⊆` is geometric.
pub fn instantiate_parabolic(
    cubes: &[(ParabolicRect, f64)],
    alpha: f64,
    m: f64,
    bad: impl Fn(&ParabolicRect) -> bool,
) -> Result<(PosetInstance, Vec<ParabolicRect>)> {
    ensure!(alpha > 0.0 && alpha.is_finite(), validation, "alpha must be positive, got {alpha}");
    let mut gamma_rects = Vec::new();
    let mut gamma_nu = Vec::new();
    for (q, c) in cubes {
        ensure!(*c >= 0.0 && c.is_finite(), validation, "cube coefficient must be nonnegative, got {c}");
        ensure!((q.m - m).abs() < 1e-12, validation, "cube carries curve exponent {} but m = {m}", q.m);
        if *c != 0.0 && bad(q) {
            ensure!(q.is_cube(), validation, "marked rectangle {q:?} is not a parabolic cube (sigma != tau)");
            gamma_rects.push(q.clone());
            gamma_nu.push(Mass::from_f64(*c)?);
        }
    }
    let total: Mass = gamma_nu.iter().copied().sum();
    let key = |q: &ParabolicRect| (q.sigma, q.tau, q.k1, q.k2);
    let mut all: Vec<ParabolicRect> = gamma_rects.clone();
    if total.0 > 0 {
        let budget = (total.to_f64() / alpha).log2();
        for g in &gamma_rects {
            let smax = (budget / (1.0 + m)).floor() as i32;
            for sigma in g.sigma..=smax.max(g.sigma) {
                let tmax = ((budget - sigma as f64) / m).floor() as i32;
                for tau in sigma..=tmax {
                    if let Some(q) = ParabolicRect::enclosing(g, sigma, tau) {
                        let a = alpha * 2f64.powf(sigma as f64 + m * tau as f64);
                        if !total.lt_real(a) {
                            all.push(q);
                        }
                    }
                }
            }
        }
    }
    all.sort_by(|a, b| key(a).cmp(&key(b)));
    all.dedup_by(|a, b| key(a) == key(b));
    let gamma: Vec<usize> =
        gamma_rects.iter().map(|g| all.iter().position(|q| key(q) == key(g)).unwrap()).collect();
    let a: Vec<f64> = all.iter().map(|q| alpha * 2f64.powf(q.sigma as f64 + m * q.tau as f64)).collect();
    let inst = PosetInstance::new(
        (0..all.len() as u64).collect(),
        |i, j| all[i].tau < all[j].tau,
        |i, j| all[j].contains(&all[i]),
        a,
        gamma,
        gamma_nu,
    )?;
    Ok((inst, all))
}

// ---------------------------------------------------------------------------
// Random instances

/// Family an instance is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceKind {
    /// Random parabolic rectangles with generic weights.
    Geometric,
    /// Random parabolic rectangles with `A` placed on or next to the masses it competes with.
    Adversarial,
    /// Random abstract partial orders.
    Abstract,
}

fn closure(n: usize, rel: &mut [bool]) {
    for k in 0..n {
        for i in 0..n {
            if rel[i * n + k] {
                for j in 0..n {
                    if rel[k * n + j] {
                        rel[i * n + j] = true;
                    }
                }
            }
        }
    }
}

fn random_dag(n: usize, p: f64, rng: &mut impl Rng) -> Vec<bool> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut rel = vec![false; n * n];
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                rel[perm[a] * n + perm[b]] = true;
            }
        }
    }
    closure(n, &mut rel);
    rel
}

/// Draw a random instance with at most `max_size` elements.
pub fn random_instance(kind: InstanceKind, max_size: usize, rng: &mut impl Rng) -> PosetInstance {
    let size = if rng.gen_bool(0.3) { rng.gen_range(0..=max_size.min(7)) } else { rng.gen_range(0..=max_size) };
    let random_mass = |rng: &mut dyn rand::RngCore| {
        if rng.gen_bool(0.3) {
            Mass((rng.gen_range(1u64..=8) as u128) << 37)
        } else {
            Mass(rng.gen_range(1u128..=1u128 << 40))
        }
    };
    match kind {
        InstanceKind::Abstract => {
            let prec = random_dag(size, rng.gen_range(0.05..0.5), rng);
            let mut incl = random_dag(size, rng.gen_range(0.05..0.5), rng);
            for i in 0..size {
                incl[i * size + i] = true;
            }
            let gamma: Vec<usize> = (0..size).filter(|_| rng.gen_bool(0.5)).collect();
            let nu: Vec<Mass> = gamma.iter().map(|_| random_mass(rng)).collect();
            let total = nu.iter().copied().sum::<Mass>().to_f64().max(1e-3);
            let a = (0..size).map(|_| total * rng.gen_range(0.01..1.5)).collect();
            PosetInstance::new((0..size as u64).collect(), |i, j| prec[i * size + j], |i, j| incl[i * size + j], a, gamma, nu)
                .expect("generated instance is well formed")
        }
        InstanceKind::Geometric | InstanceKind::Adversarial => {
            let m = *[1.5, 2.0, 2.5, 3.0].choose(rng).unwrap();
            let mut rects: Vec<ParabolicRect> = Vec::new();
            let mut attempts = 0;
            while rects.len() < size && attempts < 50 * (size + 1) {
                attempts += 1;
                let sigma = rng.gen_range(-3..=0);
                let tau = sigma + rng.gen_range(0..=3);
                let Ok(probe) = ParabolicRect::new(sigma, tau, m, 0, 0) else { continue };
                let (w1, w2) = probe.dims();
                // Keep positions inside a fixed window so inclusions are common.
                let k1 = rng.gen_range(0..((2.0 / w1).ceil() as i64).max(1));
                let k2 = rng.gen_range(0..((8.0 / w2).ceil() as i64).max(1));
                let q = ParabolicRect { k1, k2, ..probe };
                if !rects.iter().any(|r| r.sigma == q.sigma && r.tau == q.tau && r.k1 == q.k1 && r.k2 == q.k2) {
                    rects.push(q);
                }
            }
            let n = rects.len();
            let gamma: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            let nu: Vec<Mass> = gamma.iter().map(|_| random_mass(rng)).collect();
            let total = nu.iter().copied().sum::<Mass>().to_f64().max(1e-3);
            let a: Vec<f64> = if kind == InstanceKind::Geometric {
                (0..n).map(|_| total * rng.gen_range(0.01..1.5)).collect()
            } else {
                (0..n)
                    .map(|l| {
                        let below: Mass =
                            gamma.iter().zip(&nu).filter(|(&g, _)| rects[l].contains(&rects[g])).map(|(_, &m)| m).sum();
                        let base = match rng.gen_range(0..4) {
                            0 => below.0 as i128,
                            1 => below.0 as i128 + 1,
                            2 => below.0 as i128 - 1,
                            _ => (below.0 / 2) as i128,
                        };
                        (base.max(1) as f64) / MASS_SCALE
                    })
                    .collect()
            };
            PosetInstance::new(
                (0..n as u64).collect(),
                |i, j| rects[i].tau < rects[j].tau,
                |i, j| rects[j].contains(&rects[i]),
                a,
                gamma,
                nu,
            )
            .expect("generated instance is well formed")
        }
    }
}

/// Summary of a fuzzing campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub trials: usize,
    pub failures: usize,
    pub exhaustive_checked: usize,
    pub exhaustive_failures: usize,
    pub worst_witness: Option<String>,
}

/// Outcome of one fuzzing trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub kind: InstanceKind,
    pub size: usize,
    pub selected: usize,
    /// First violated property, on the instance or on its `Lambda*` restriction.
    pub witness: Option<String>,
    /// Exhaustive cross-check, run when the instance has at most 7 elements.
    pub exhaustive: Option<bool>,
}

const FUZZ_KINDS: [InstanceKind; 3] = [InstanceKind::Geometric, InstanceKind::Adversarial, InstanceKind::Abstract];

/// Trial `t` of the campaign seeded with `seed`; kinds cycle through all families.
pub fn fuzz_trial(t: usize, max_size: usize, seed: u64) -> TrialOutcome {
    let mut rng = stream_rng(seed, t as u64);
    let kind = FUZZ_KINDS[t % 3];
    let inst = random_instance(kind, max_size, &mut rng);
    let mut selected = 0;
    let witness = match inst.validate_orders().and_then(|_| run_stopping_time(&inst)) {
        Err(e) => Some(e.to_string()),
        Ok(res) => {
            selected = res.b.len();
            let rep = verify_stopping(&inst, &res);
            let star = restrict_lambda_star(&inst);
            let rep_star = run_stopping_time(&star).map(|r| verify_stopping(&star, &r));
            rep.first_witness().or_else(|| match rep_star {
                Ok(r) => r.first_witness().map(|w| format!("restricted: {w}")),
                Err(e) => Some(format!("restricted: {e}")),
            })
        }
    };
    let exhaustive = (inst.len() <= 7).then(|| exhaustive_exists(&inst).unwrap_or(false));
    TrialOutcome { trial: t, kind, size: inst.len(), selected, witness, exhaustive }
}

/// Run `trials` random instances, verify each result, and cross-check
/// small instances exhaustively.
pub fn fuzz(trials: usize, max_size: usize, seed: u64) -> FuzzReport {
    let outcomes: Vec<TrialOutcome> = (0..trials).into_par_iter().map(|t| fuzz_trial(t, max_size, seed)).collect();
    FuzzReport {
        trials,
        failures: outcomes.iter().filter(|o| o.witness.is_some()).count(),
        exhaustive_checked: outcomes.iter().filter(|o| o.exhaustive.is_some()).count(),
        exhaustive_failures: outcomes.iter().filter(|o| o.exhaustive == Some(false)).count(),
        worst_witness: outcomes.iter().find_map(|o| o.witness.as_ref().map(|w| format!("trial {}: {w}", o.trial))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mass(x: f64) -> Mass {
        Mass::from_f64(x).unwrap()
    }

    fn single(a: f64) -> PosetInstance {
        PosetInstance::new(vec![0], |_, _| false, |i, j| i == j, vec![a], vec![0], vec![mass(1.0)]).unwrap()
    }

    #[test]
    fn empty_instance() {
        let inst = PosetInstance::new(vec![], |_, _| false, |_, _| false, vec![], vec![], vec![]).unwrap();
        let res = run_stopping_time(&inst).unwrap();
        assert!(res.b.is_empty() && res.q.is_empty());
        assert!(verify_stopping(&inst, &res).passed());
        assert!(restrict_lambda_star(&inst).is_empty());
    }

    #[test]
    fn single_element_both_cases() {
        let res = run_stopping_time(&single(2.0)).unwrap();
        assert_eq!(res, StoppingResult { b: vec![], q: vec![0] });
        assert!(verify_stopping(&single(2.0), &res).passed());
        assert!(exhaustive_exists(&single(2.0)).unwrap());
        let res = run_stopping_time(&single(0.5)).unwrap();
        assert_eq!(res, StoppingResult { b: vec![0], q: vec![0] });
        assert!(verify_stopping(&single(0.5), &res).passed());
    }

    #[test]
    fn strict_inequality_at_exact_tie() {
        // nu = A exactly: (3.3) fails, so the element is selected.
        let res = run_stopping_time(&single(1.0)).unwrap();
        assert_eq!(res.b, vec![0]);
        assert!(verify_stopping(&single(1.0), &res).passed());
    }

    #[test]
    fn mass_comparison_is_exact() {
        let m = Mass(3);
        assert!(m.lt_real(3.5 / MASS_SCALE));
        assert!(!m.lt_real(3.0 / MASS_SCALE));
        assert!(m.lt_real(4.0 / MASS_SCALE));
        assert!(!m.lt_real(2.9 / MASS_SCALE));
    }

    fn chain3() -> PosetInstance {
        // lambda0 top, lambda1 ⊇ gamma (3), lambda2 ⊇ gamma (4); gamma 3, 4 ⊆ lambda0.
        let incl = |i: usize, j: usize| i == j || matches!((i, j), (3, 0) | (4, 0) | (3, 1) | (4, 2));
        let prec = |i: usize, j: usize| (i != 0 && j == 0) || (i >= 3 && j != 0 && j < 3 && i != j);
        PosetInstance::new(vec![0, 1, 2, 3, 4], prec, incl, vec![1.0, 0.1, 0.1, 5.0, 5.0], vec![3, 4], vec![mass(0.6), mass(0.6)])
            .unwrap()
    }

    #[test]
    fn scaling_weights_can_enlarge_selection() {
        let inst = chain3();
        inst.validate_orders().unwrap();
        let r1 = run_stopping_time(&inst).unwrap();
        assert_eq!(r1.b, vec![0]);
        let mut scaled = inst.clone();
        scaled.a.iter_mut().for_each(|a| *a *= 2.0);
        let r2 = run_stopping_time(&scaled).unwrap();
        assert_eq!(r2.b, vec![1, 2]);
        assert!(verify_stopping(&inst, &r1).passed() && verify_stopping(&scaled, &r2).passed());
        // Large enough scaling empties the selection.
        scaled.a.iter_mut().for_each(|a| *a *= 100.0);
        assert!(run_stopping_time(&scaled).unwrap().b.is_empty());
    }

    #[test]
    fn tampered_result_is_caught() {
        let inst = chain3();
        let mut res = run_stopping_time(&inst).unwrap();
        res.q[0] = 2; // gamma 3 is not inside lambda 2
        let rep = verify_stopping(&inst, &res);
        assert!(rep.p1.is_some() || rep.p4.is_some());
    }

    #[test]
    fn invalid_orders_are_rejected() {
        let cyc = PosetInstance::new(vec![0, 1], |i, j| i != j, |i, j| i == j, vec![1.0, 1.0], vec![], vec![]).unwrap();
        assert!(cyc.validate_orders().is_err());
        assert!(run_stopping_time(&cyc).is_err());
        assert!(PosetInstance::new(vec![0], |_, _| false, |_, _| true, vec![0.0], vec![], vec![]).is_err());
    }

    #[test]
    fn lambda_star_brute_force() {
        let mut rng = stream_rng(11, 0);
        for t in 0..200 {
            let inst = random_instance([InstanceKind::Geometric, InstanceKind::Abstract][t % 2], 20, &mut rng);
            let star = restrict_lambda_star(&inst);
            let total = inst.total_nu().to_f64();
            for l in 0..inst.len() {
                let member = inst.gamma.contains(&l)
                    || (inst.a[l] <= total && inst.gamma.iter().any(|&g| inst.incl.get(g, l)));
                assert_eq!(member, star.ids.contains(&inst.ids[l]));
            }
            assert_eq!(star.total_nu(), inst.total_nu());
        }
        // All weights above nu(Gamma): only Gamma survives.
        let mut inst = chain3();
        inst.a = vec![10.0; 5];
        assert_eq!(restrict_lambda_star(&inst).ids, vec![3, 4]);
    }

    #[test]
    fn record_roundtrip() {
        let inst = chain3();
        let rec = inst.to_record();
        let json = serde_json::to_string(&rec).unwrap();
        let back = PosetInstance::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn parabolic_instance() {
        let m = 2.0;
        let none: Vec<(ParabolicRect, f64)> = vec![(ParabolicRect::cube(0, m, 0, 0).unwrap(), 1.0)];
        let (inst, _) = instantiate_parabolic(&none, 0.01, m, |_| false).unwrap();
        assert!(inst.is_empty());

        let i = ParabolicRect::cube(-2, m, 1, 3).unwrap();
        let (inst, rects) = instantiate_parabolic(&[(i.clone(), 1.0)], 0.05, m, |_| true).unwrap();
        inst.validate_orders().unwrap();
        let res = run_stopping_time(&inst).unwrap();
        assert!(verify_stopping(&inst, &res).passed());
        let img = &rects[res.q[0]];
        assert!(img.contains(&i) && img.tau >= i.tau);
        assert!(inst.len() <= 7 && exhaustive_exists(&inst).unwrap() || inst.len() > 7);
        // Equal tau: incomparable.
        for a in 0..inst.len() {
            for b in 0..inst.len() {
                if rects[a].tau == rects[b].tau {
                    assert!(!inst.prec.get(a, b));
                }
            }
        }
        let bad = ParabolicRect::new(-2, -1, m, 0, 0).unwrap();
        assert!(instantiate_parabolic(&[(bad, 1.0)], 0.05, m, |_| true).is_err());
    }

    #[test]
    fn fuzz_smoke() {
        let rep = fuzz(60, 30, 7);
        assert_eq!(rep.failures, 0, "{:?}", rep.worst_witness);
        assert_eq!(rep.exhaustive_failures, 0);
        assert!(rep.exhaustive_checked > 0);
        assert_eq!(fuzz(10, 20, 3), fuzz(10, 20, 3));
    }
}
