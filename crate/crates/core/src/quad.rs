//! Scalar quadrature helpers.

use crate::error::{Error, Result};

/// Adaptive Simpson on [a, b] to absolute tolerance `tol`.
///
/// Classic recursive bisection with the 1/15 Richardson error estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth > 60 {
            return Err(Error::QuadratureFailure(format!(
                "adaptive Simpson recursion depth exceeded on [{a}, {b}]"
            )));
        }
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        let l = recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1)?;
        let r = recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1)?;
        Ok(l + r)
    }

    if !(b > a) {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 0)
}

/// Uniform-grid trapezoid on [a, b] with `n` panels. Deliberately naive;
/// serves as the independent oracle against the adaptive routine.
pub fn trapezoid<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for i in 1..n {
        acc += f(a + h * i as f64);
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_matches_closed_forms() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-11);
        let v = adaptive_simpson(&|x: f64| (-x).exp(), 0.0, 50.0, 1e-13).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trapezoid_agrees_with_simpson() {
        let f = |x: f64| (-x).exp() / (1.0 + x * x);
        let s = adaptive_simpson(&f, 0.0, 40.0, 1e-13).unwrap();
        let t = trapezoid(&f, 0.0, 40.0, 400_000);
        assert!((s - t).abs() < 1e-8);
    }
}
