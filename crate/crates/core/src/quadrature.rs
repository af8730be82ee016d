//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Small and self-contained: only used to integrate smooth one-dimensional
//! densities when solving for the expectile index of an error law.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_47,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, PartialEq)]
pub struct QuadError {
    pub estimate: f64,
    pub error: f64,
    pub reason: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-12,
            max_intervals: 4000,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (k, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += w * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<f64, QuadError> {
    let (value, error) = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(QuadError {
                estimate: total,
                error: total_err,
                reason: "integrand produced a non-finite value",
            });
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        if heap.len() >= tol.max_intervals {
            return Err(QuadError {
                estimate: total,
                error: total_err,
                reason: "subdivision limit reached",
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(QuadError {
                estimate: total,
                error: total_err,
                reason: "interval too small to bisect",
            });
        }
        let (v1, e1) = kronrod(&f, worst.a, mid);
        let (v2, e2) = kronrod(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        // Re-sum occasionally so cancellation in the running totals cannot drift.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Integrates over `[a, +inf)` via `x = a + t / (1 - t)`.
pub fn integrate_upper<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Result<f64, QuadError> {
    integrate(
        |t| {
            let s = 1.0 - t;
            let v = f(a + t / s) / (s * s);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Integrates over `(-inf, b]` via `x = b - t / (1 - t)`.
pub fn integrate_lower<F: Fn(f64) -> f64>(f: F, b: f64, tol: Tolerance) -> Result<f64, QuadError> {
    integrate_upper(|x| f(2.0 * b - x), b, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, -1.0, 3.0, Tolerance::default()).unwrap();
        assert!((v - 12.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_mass() {
        let f = |x: f64| (-0.5 * x * x).exp();
        let v = integrate_lower(f, 0.0, Tolerance::default()).unwrap()
            + integrate_upper(f, 0.0, Tolerance::default()).unwrap();
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn exponential_tail() {
        let v = integrate_upper(|x| x * (-x).exp(), 0.0, Tolerance::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        let w = integrate_lower(|x| x.exp(), 0.0, Tolerance::default()).unwrap();
        assert!((w - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate(|_| f64::NAN, 0.0, 1.0, Tolerance::default()).unwrap_err();
        assert!(err.reason.contains("non-finite"));
    }

    #[test]
    fn slowly_decaying_tail_fails() {
        // 1/x on [1, inf) diverges.
        let r = integrate_upper(
            |x| 1.0 / x,
            1.0,
            Tolerance {
                max_intervals: 200,
                ..Tolerance::default()
            },
        );
        assert!(r.is_err());
    }
}
