//! Integer-order Bessel functions of the first kind by Miller's backward
//! recurrence, normalized with `J_0 + 2 sum_k J_{2k} = 1`.

/// Fill `out[k] = J_k(x)` for `k = 0..out.len()`.
pub fn bessel_j_all(x: f64, out: &mut [f64]) {
    let nmax = out.len();
    if nmax == 0 {
        return;
    }
    let ax = x.abs();
    if ax < 1e-300 {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[0] = 1.0;
        return;
    }
    // Start well above both the requested order and the turning point.
    let start = {
        let base = nmax.max(ax.ceil() as usize);
        let s = base + 30 + (12.0 * ax.cbrt()) as usize;
        s + (s & 1)
    };
    let mut jp1 = 0.0f64;
    let mut j = 1e-300f64;
    let mut norm = 0.0f64;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / ax * j - jp1;
        jp1 = j;
        j = jm1;
        let idx = k - 1;
        if idx < nmax {
            out[idx] = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            // Rescale everything produced so far.
            let sc = 1e-250;
            j *= sc;
            jp1 *= sc;
            norm *= sc;
            for v in out.iter_mut().skip(idx) {
                *v *= sc;
            }
        }
    }
    norm += j;
    let inv = 1.0 / norm;
    for (k, v) in out.iter_mut().enumerate() {
        *v *= inv;
        if x < 0.0 && k % 2 == 1 {
            *v = -*v;
        }
    }
}

/// Single value `J_n(x)`.
pub fn bessel_j(n: usize, x: f64) -> f64 {
    let mut buf = vec![0.0; n + 1];
    bessel_j_all(x, &mut buf);
    buf[n]
}

/// `J_n(x)` for one order without allocation: the Hankel asymptotic series
/// when `x` is well past the turning region, backward recurrence otherwise.
pub fn bessel_j_one(n: usize, x: f64) -> f64 {
    let ax = x.abs();
    let sign = if x < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
    let nu = n as f64;
    if ax > 25.0 + 0.5 * nu * nu {
        return sign * hankel_asymptotic(nu, ax);
    }
    if ax < 1e-300 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let start = {
        let base = (n + 1).max(ax.ceil() as usize);
        let s = base + 30 + (12.0 * ax.cbrt()) as usize;
        s + (s & 1)
    };
    let (mut jp1, mut j, mut norm, mut hit) = (0.0f64, 1e-300f64, 0.0f64, 0.0f64);
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / ax * j - jp1;
        jp1 = j;
        j = jm1;
        let idx = k - 1;
        if idx == n {
            hit = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            hit *= 1e-250;
        }
    }
    norm += j;
    sign * hit / norm
}

fn hankel_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let (mut p, mut q) = (1.0f64, 0.0f64);
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        let mag = term.abs();
        if mag > last || mag < 1e-17 {
            break;
        }
        last = mag;
        // k odd feeds Q with sign (-1)^((k-1)/2); k even feeds P with (-1)^(k/2).
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
    }
    let chi = x - (0.5 * nu + 0.25) * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
