//! The asymmetric squared loss and its first two derivatives.
//!
//! Residuals exactly at zero take the `x >= 0` branch everywhere.

/// `rho_tau(x) = |tau - 1{x < 0}| x^2`.
#[inline]
pub fn rho(tau: f64, x: f64) -> f64 {
    asym_weight(tau, x) * x * x
}

/// First derivative of [`rho`]: `2 tau x` for `x >= 0`, `2 (1 - tau) x` otherwise.
#[inline]
pub fn g(tau: f64, x: f64) -> f64 {
    2.0 * asym_weight(tau, x) * x
}

/// Second derivative of [`rho`] (piecewise constant).
#[inline]
pub fn h(tau: f64, x: f64) -> f64 {
    2.0 * asym_weight(tau, x)
}

/// `tau` on the nonnegative half-line, `1 - tau` on the negative one.
#[inline]
pub fn asym_weight(tau: f64, x: f64) -> f64 {
    if x >= 0.0 {
        tau
    } else {
        1.0 - tau
    }
}

/// Bounds `[2 min(tau, 1-tau), 2 max(tau, 1-tau)]` of [`h`].
pub fn h_bounds(tau: f64) -> (f64, f64) {
    (2.0 * tau.min(1.0 - tau), 2.0 * tau.max(1.0 - tau))
}

/// Empirical tau-expectile of a sample: the minimizer of `sum rho_tau(y_i - m)`.
///
/// Solved exactly: the minimizer is a weighted mean with weights fixed by
/// which observations lie above `m`, so we iterate until the partition stops
/// changing.
pub fn sample_expectile(tau: f64, y: &[f64]) -> f64 {
    let mut m = y.iter().sum::<f64>() / y.len() as f64;
    for _ in 0..(2 * y.len() + 10) {
        let (mut num, mut den) = (0.0, 0.0);
        for &v in y {
            let w = asym_weight(tau, v - m);
            num += w * v;
            den += w;
        }
        let next = num / den;
        if next == m {
            break;
        }
        m = next;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rho_examples() {
        assert_eq!(rho(0.5, 3.0), 4.5);
        assert!((rho(0.7, -2.0) - 1.2).abs() < 1e-15);
        assert_eq!(rho(0.3, 0.0), 0.0);
        assert_eq!(rho(0.9, 0.0), 0.0);
    }

    #[test]
    fn g_examples() {
        assert!((g(0.7, -2.0) + 1.2).abs() < 1e-15);
        assert_eq!(g(0.5, 4.0), 4.0);
        assert_eq!(g(0.2, 0.0), 0.0);
    }

    #[test]
    fn h_examples() {
        assert_eq!(h(0.5, -3.0), 1.0);
        assert_eq!(h(0.5, 3.0), 1.0);
        assert!((h(0.7, -1.0) - 0.6).abs() < 1e-15);
        assert_eq!(h(0.7, 0.0), 1.4);
    }

    #[test]
    fn sample_expectile_at_half_is_mean() {
        let y = [1.0, 2.0, 7.0, -3.0];
        assert!((sample_expectile(0.5, &y) - 1.75).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn rho_convex(tau in 0.01f64..0.99, a in -50.0f64..50.0, b in -50.0f64..50.0, t in 0.0f64..1.0) {
            let lhs = rho(tau, t * a + (1.0 - t) * b);
            let rhs = t * rho(tau, a) + (1.0 - t) * rho(tau, b);
            prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn g_sign_matches_x(tau in 0.01f64..0.99, x in -50.0f64..50.0) {
            prop_assert!(g(tau, x).signum() == x.signum() || x == 0.0);
        }

        #[test]
        fn h_within_bounds(tau in 0.001f64..0.999, x in -1e6f64..1e6) {
            let (lo, hi) = h_bounds(tau);
            let v = h(tau, x);
            prop_assert!(lo <= v && v <= hi);
        }

        #[test]
        fn h_is_forward_difference_of_g(tau in 0.01f64..0.99, x in 0.5f64..20.0, sign in prop::bool::ANY) {
            // g is linear on each half-line, so the difference quotient is exact
            // up to rounding.
            let x = if sign { x } else { -x };
            let step: f64 = 0.25;
            let fd = (g(tau, x + step.copysign(x)) - g(tau, x)) / step.copysign(x);
            prop_assert!((fd - h(tau, x)).abs() < 1e-12);
        }

        #[test]
        fn quadratic_majorizer(tau in 0.01f64..0.99, x in -10.0f64..10.0, d in -10.0f64..10.0) {
            let bound = rho(tau, x) - g(tau, x) * d + tau.max(1.0 - tau) * d * d;
            prop_assert!(rho(tau, x - d) <= bound + 1e-10 * (1.0 + bound.abs()));
        }
    }
}
