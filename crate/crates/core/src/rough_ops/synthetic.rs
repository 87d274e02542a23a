//! The radial shell profile `P_N = N^{-1/2} |x|^{-2}` on `C <= |x| < C^{N+1}`,
//! the magnitude a lacunary rough operator produces on an atom.
//!
//! Its rearrangement is `f*(t) = N^{-1/2} pi / (t + pi C^2)` up to
//! `t = pi (C^{2N+2} - C^2)`, so `||P_N||_{1,q}` reduces to a one-dimensional
//! integral in `u = ln(t / pi C^2)`. Levels reach `C^{-2N}`, hence the
//! log-domain step representation.

use crate::error::{ensure, Result};
use crate::lorentz::{LogSteps, LorentzExponents};
use crate::numerics::quadrature::{composite, gauss_legendre};
use std::f64::consts::PI;

/// Log-domain steps of `P_N`: each annulus `[C^j, C^{j+1})` is cut into
/// `substeps` geometric sub-annuli, each carrying the average of `P_N`
/// over it so that the `L^1` mass is exact.
pub fn lacunary_profile(n_big: usize, c: u64, substeps: usize) -> Result<LogSteps> {
    ensure!(n_big >= 1 && c >= 2 && substeps >= 1, validation, "profile needs N >= 1, C >= 2 and at least one substep");
    let ln_c = (c as f64).ln();
    let d = ln_c / substeps as f64;
    let ln_amp = -0.5 * (n_big as f64).ln();
    let mut out = LogSteps::default();
    for j in 1..=n_big {
        for k in 0..substeps {
            let ln_a = j as f64 * ln_c + k as f64 * d;
            let ln_width = PI.ln() + 2.0 * ln_a + (2.0 * d).exp_m1().ln();
            // Mass 2 pi d N^{-1/2} spread over the sub-annulus.
            out.ln_levels.push(ln_amp + (2.0 * PI * d).ln() - ln_width);
            out.ln_widths.push(ln_width);
        }
    }
    Ok(out)
}

/// `||P_N||_{L^{1,q}}` by quadrature of the closed-form rearrangement.
pub fn lacunary_profile_norm(n_big: usize, c: u64, q: f64) -> Result<f64> {
    ensure!(n_big >= 1 && c >= 2, validation, "profile needs N >= 1 and C >= 2");
    ensure!(q.is_finite() && q > 0.0, validation, "finite q > 0 required, got {q}");
    let ln_c = (c as f64).ln();
    // u_top = ln(C^{2N} - 1).
    let u_top = 2.0 * n_big as f64 * ln_c + (-(-2.0 * n_big as f64 * ln_c).exp()).ln_1p();
    // sigma(u)^q with sigma the logistic function.
    let f = |u: f64| (-q * (-u).exp().ln_1p()).exp();
    let left = composite(64, -80.0 / q.min(1.0), 0.0, |a, b| gauss_legendre(32, a, b)).integrate(f);
    // int_0^U sigma^q = U - int_0^U (1 - sigma^q), the latter decaying like e^{-u}.
    let deficit_end = u_top.min(60.0);
    let deficit =
        composite(64, 0.0, deficit_end, |a, b| gauss_legendre(32, a, b)).integrate(|u| -(-q * (-u).exp().ln_1p()).exp_m1());
    let integral = left + u_top - deficit;
    Ok((-0.5 * (n_big as f64).ln() + PI.ln() + integral.ln() / q).exp())
}

/// `ln ||P_N||_{L^{1,q}}` through the step representation and the general
/// Lorentz engine.
pub fn lacunary_profile_engine_norm(n_big: usize, c: u64, q: f64, substeps: usize) -> Result<f64> {
    let steps = lacunary_profile(n_big, c, substeps)?;
    Ok(steps.ln_lorentz_norm(LorentzExponents::new(1.0, q)?).exp())
}
