//! Gauss-Legendre and Clenshaw-Curtis rules on `[a, b]`.

use gauss_quad::legendre::GaussLegendre;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::Mutex;

/// Nodes and weights of a rule mapped to some interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Affine map of a rule on `[-1, 1]` to `[a, b]`.
    fn mapped(base: &Rule, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        Rule {
            nodes: base.nodes.iter().map(|x| mid + half * x).collect(),
            weights: base.weights.iter().map(|w| half * w).collect(),
        }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

static GL_CACHE: Lazy<Mutex<HashMap<usize, Rule>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// `n`-point Gauss-Legendre rule on `[a, b]`, nodes ascending.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule {
    assert!(n > 0, "quadrature needs at least one node");
    let mut cache = GL_CACHE.lock().expect("quadrature cache poisoned");
    let base = cache.entry(n).or_insert_with(|| {
        let gl = GaussLegendre::new(NonZeroUsize::new(n).unwrap());
        let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        Rule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
    });
    Rule::mapped(base, a, b)
}

/// Clenshaw-Curtis rule with `n + 1` Chebyshev extreme points on `[a, b]`.
pub fn clenshaw_curtis(n: usize, a: f64, b: f64) -> Rule {
    assert!(n >= 2 && n % 2 == 0, "Clenshaw-Curtis order must be even and >= 2");
    let mut nodes = Vec::with_capacity(n + 1);
    let mut weights = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let theta = PI * k as f64 / n as f64;
        nodes.push(-theta.cos());
        let ck = if k == 0 || k == n { 1.0 } else { 2.0 };
        let mut s = 0.0;
        for j in 1..=n / 2 {
            let bj = if 2 * j == n { 1.0 } else { 2.0 };
            s += bj / (4.0 * (j * j) as f64 - 1.0) * (2.0 * j as f64 * theta).cos();
        }
        weights.push(ck / n as f64 * (1.0 - s));
    }
    Rule::mapped(&Rule { nodes, weights }, a, b)
}

/// Composite rule: `panels` equal subintervals of `[a, b]`, each carrying
/// the rule produced by `make`.
pub fn composite(panels: usize, a: f64, b: f64, make: impl Fn(f64, f64) -> Rule) -> Rule {
    let mut out = Rule { nodes: Vec::new(), weights: Vec::new() };
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let r = make(a + p as f64 * h, a + (p + 1) as f64 * h);
        out.nodes.extend(r.nodes);
        out.weights.extend(r.weights);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials_and_smooth_functions() {
        let gl = gauss_legendre(10, 0.0, 2.0);
        assert!((gl.integrate(|x| x.powi(19)) - 2f64.powi(20) / 20.0).abs() < 1e-9);
        let cc = clenshaw_curtis(64, 0.0, 2.0);
        assert!((cc.integrate(|x| x.exp()) - (2f64.exp() - 1.0)).abs() < 1e-13);
        assert!((cc.integrate(|x| x.powi(5)) - 64.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn composite_matches_single_panel_on_polynomials() {
        let c = composite(7, -1.0, 3.0, |a, b| gauss_legendre(4, a, b));
        assert!((c.integrate(|x| x * x) - 28.0 / 3.0).abs() < 1e-12);
    }
}
