//! Closed-form one-dimensional profiles: flat plateaus and the smoothed
//! logarithm used to turn a b-form into a folded one.
//!
//! Each profile returns `(value, derivative)` so it can be lifted into any
//! [`Real`](crate::real::Real) by the chain rule.

fn psi(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

fn dpsi(s: f64) -> f64 {
    if s > 0.0 {
        psi(s) / (s * s)
    } else {
        0.0
    }
}

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`, flat to all orders at both ends.
pub fn smooth_step(u: f64) -> (f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0);
    }
    let a = psi(u);
    let b = psi(1.0 - u);
    let s = a + b;
    let val = a / s;
    let der = (dpsi(u) * b + a * dpsi(1.0 - u)) / (s * s);
    (val, der)
}

/// Even plateau: 1 on `|x| <= inner`, 0 on `|x| >= outer`.
pub fn bump(x: f64, inner: f64, outer: f64) -> (f64, f64) {
    let width = outer - inner;
    let u = (x.abs() - inner) / width;
    let (s, ds) = smooth_step(u);
    let sign = if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    };
    (1.0 - s, -ds * sign / width)
}

/// Odd quintic `g` with `g(t) = 1/t` for `|t| >= eps`, matching value and two
/// derivatives at `eps`; `g(t) = t * h(t)` with `h > 0` inside the collar.
pub fn flog_derivative(t: f64, eps: f64) -> (f64, f64) {
    if t.abs() >= eps {
        return (1.0 / t, -1.0 / (t * t));
    }
    let u = t / eps;
    let u2 = u * u;
    let g = (3.0 * u - 3.0 * u * u2 + u * u2 * u2) / eps;
    let dg = (3.0 - 9.0 * u2 + 5.0 * u2 * u2) / (eps * eps);
    (g, dg)
}

/// Even primitive of [`flog_derivative`], equal to `ln|t|` for `|t| >= eps`.
pub fn flog(t: f64, eps: f64) -> (f64, f64) {
    if t.abs() >= eps {
        return (t.abs().ln(), 1.0 / t);
    }
    let u2 = (t / eps).powi(2);
    let poly = 1.5 * u2 - 0.75 * u2 * u2 + u2 * u2 * u2 / 6.0;
    let value = poly + eps.ln() - 11.0 / 12.0;
    (value, flog_derivative(t, eps).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn bump_plateau_and_support() {
        assert_eq!(bump(0.0, 0.2, 0.5).0, 1.0);
        assert_eq!(bump(-0.19, 0.2, 0.5).0, 1.0);
        assert_eq!(bump(0.5, 0.2, 0.5).0, 0.0);
        assert_eq!(bump(-0.8, 0.2, 0.5).0, 0.0);
        let mid = bump(0.35, 0.2, 0.5).0;
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bump_derivative_matches_difference_quotient() {
        for &x in &[-0.45, -0.3, 0.25, 0.33, 0.41] {
            let d = bump(x, 0.2, 0.5).1;
            let n = fd(|y| bump(y, 0.2, 0.5).0, x);
            assert!((d - n).abs() < 1e-7, "x={x}: {d} vs {n}");
        }
    }

    #[test]
    fn flog_matches_log_outside_collar_and_is_c2_at_edge() {
        let eps = 0.5;
        for &t in &[0.5, 0.7, -0.6, 1.3] {
            assert_eq!(flog(t, eps).0, f64::ln(f64::abs(t)));
        }
        let below = flog_derivative(eps * (1.0 - 1e-12), eps);
        let above = flog_derivative(eps, eps);
        assert!((below.0 - above.0).abs() < 1e-9);
        assert!((below.1 - above.1).abs() < 1e-8);
        let v_in = flog(eps * (1.0 - 1e-12), eps).0;
        assert!((v_in - eps.ln()).abs() < 1e-9);
    }

    #[test]
    fn flog_profile_is_even_with_positive_h() {
        let eps = 0.3;
        for i in 1..100 {
            let t = eps * i as f64 / 100.0;
            assert_eq!(flog(t, eps).0, flog(-t, eps).0);
            let (g, _) = flog_derivative(t, eps);
            assert!(g / t > 0.0);
            let n = fd(|s| flog(s, eps).0, t);
            assert!((n - g).abs() < 1e-6);
        }
    }
}
