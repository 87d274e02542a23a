//! Explicit smooth cutoff profiles.
//!
//! Every cutoff in the crate is assembled from `e^{-1/t}`, so outputs are
//! reproducible bit for bit across platforms with IEEE `exp`.

/// `e^{-1/t}` for `t > 0`, zero otherwise.
#[inline]
pub fn flat_exp(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth monotone transition from 0 (at `u <= 0`) to 1 (at `u >= 1`).
#[inline]
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = flat_exp(u);
        a / (a + flat_exp(1.0 - u))
    }
}

/// Radial low-pass profile: 1 on `|s| <= 1/2`, 0 on `|s| >= 1`.
#[inline]
pub fn chi0(s: f64) -> f64 {
    1.0 - smooth_step(2.0 * s.abs() - 1.0)
}

/// Annular profile `chi0(s/2) - chi0(s)`, supported on `1/2 <= |s| <= 2`.
///
/// Nonnegative, and `sum_j annulus(2^j s) = 1` for every `s != 0`.
#[inline]
pub fn annulus(s: f64) -> f64 {
    chi0(0.5 * s) - chi0(s)
}

/// Unnormalized bump `exp(-1/(1-s^2))` on `|s| < 1`.
#[inline]
pub fn exp_bump(s: f64) -> f64 {
    let u = 1.0 - s * s;
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// Plateau profile equal to 1 on `[a, b]`, with smooth shoulders of relative
/// width 1/2 (vanishing below `a/2` and above `3b/2`).
#[inline]
pub fn plateau(s: f64, a: f64, b: f64) -> f64 {
    let s = s.abs();
    smooth_step((s - 0.5 * a) / (0.5 * a)) * (1.0 - smooth_step((s - b) / (0.5 * b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chi0_plateau_and_support() {
        assert_eq!(chi0(0.0), 1.0);
        assert_eq!(chi0(0.5), 1.0);
        assert_eq!(chi0(1.0), 0.0);
        assert_eq!(chi0(-3.0), 0.0);
        assert!(chi0(0.75) > 0.0 && chi0(0.75) < 1.0);
    }

    #[test]
    fn annulus_support() {
        assert_eq!(annulus(0.49), 0.0);
        assert_eq!(annulus(2.01), 0.0);
        assert_eq!(annulus(1.0), 1.0);
    }

    proptest! {
        #[test]
        fn annulus_partition_of_unity(s in 1e-3f64..1e3) {
            let total: f64 = (-20..=20).map(|j| annulus(2f64.powi(j) * s)).sum();
            prop_assert!((total - 1.0).abs() < 1e-14);
        }

        #[test]
        fn smooth_step_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(smooth_step(lo) <= smooth_step(hi));
        }
    }
}
