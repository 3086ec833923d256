//! Numerical quadrature: adaptive Gauss–Kronrod (7/15) and composite Simpson.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: C64,
    pub abs_err: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = hl * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let err = ((kron - gauss) * hl).norm();
    (kron * hl, err)
}

/// Adaptive Gauss–Kronrod integration of a complex integrand over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the total
/// estimate falls below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate_complex<F: Fn(f64) -> C64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    const MAX_INTERVALS: usize = 4000;
    let (v0, e0) = gk15(&f, a, b);
    let mut parts: Vec<(f64, f64, C64, f64)> = vec![(a, b, v0, e0)];
    loop {
        let total: C64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        let target = abs_tol.max(rel_tol * total.norm());
        if err <= target {
            return Ok(QuadResult { value: total, abs_err: err, intervals: parts.len() });
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Accuracy {
                what: format!("adaptive quadrature on [{a}, {b}]"),
                achieved: err,
            });
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (vl, el) = gk15(&f, lo, mid);
        let (vr, er) = gk15(&f, mid, hi);
        parts.push((lo, mid, vl, el));
        parts.push((mid, hi, vr, er));
    }
}

/// Real-valued convenience wrapper around [`integrate_complex`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<(f64, f64)> {
    let r = integrate_complex(|x| C64::new(f(x), 0.0), a, b, abs_tol, rel_tol)?;
    Ok((r.value.re, r.abs_err))
}

/// Composite Simpson rule with `n` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(2) + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Simpson's rule refined by doubling until successive Richardson estimates agree.
pub fn simpson_refined<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let mut n = 64;
    let mut prev = simpson(&f, a, b, n);
    while n < (1 << 22) {
        n *= 2;
        let cur = simpson(&f, a, b, n);
        let extrap = cur + (cur - prev) / 15.0;
        if (cur - prev).abs() <= rel_tol * extrap.abs() {
            return Ok(extrap);
        }
        prev = cur;
    }
    Err(Error::Accuracy { what: "Simpson refinement".into(), achieved: prev })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_polynomials_and_exponentials() {
        let (v, _) = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((v - (64.0 / 6.0 - 6.0)).abs() < 1e-13);
        let (v, _) = integrate(|x| (-x).exp(), 0.0, 40.0, 1e-15, 1e-14).unwrap();
        assert!((v - (1.0 - (-40f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn complex_integrand() {
        let r = integrate_complex(|x| C64::new(0.0, x).exp(), 0.0, std::f64::consts::PI, 1e-14, 1e-14).unwrap();
        assert!((r.value - C64::new(0.0, 2.0)).norm() < 1e-13);
    }

    #[test]
    fn simpson_matches_closed_form() {
        let v = simpson_refined(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn oscillatory_integrand_needs_subdivision() {
        let r = integrate_complex(|x| C64::new((50.0 * x).cos(), 0.0), 0.0, 1.0, 1e-13, 1e-13).unwrap();
        assert!((r.value.re - (50f64).sin() / 50.0).abs() < 1e-12);
        assert!(r.intervals > 1);
    }
}
