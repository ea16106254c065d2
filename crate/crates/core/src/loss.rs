//! Pointwise losses `g(u, v)` and their partial derivatives.
//!
//! `square(u, v) = (u - v)^2` and `sigmoid(u, v) = 1 / (1 + exp(u v))`. The
//! sigmoid is evaluated through `exp(-|u v|)` so that neither the value nor
//! the derivative overflows for large products.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Square,
    Sigmoid,
}

impl LossKind {
    pub fn value(self, u: f64, v: f64) -> f64 {
        match self {
            LossKind::Square => (u - v) * (u - v),
            LossKind::Sigmoid => logistic_tail(u * v),
        }
    }

    pub fn partial_u(self, u: f64, v: f64) -> f64 {
        match self {
            LossKind::Square => 2.0 * (u - v),
            LossKind::Sigmoid => -sigmoid_slope(u * v) * v,
        }
    }

    pub fn partial_v(self, u: f64, v: f64) -> f64 {
        match self {
            LossKind::Square => -2.0 * (u - v),
            LossKind::Sigmoid => -sigmoid_slope(u * v) * u,
        }
    }

    /// Single-letter tag used in variant names: `Q` for square, `G` for sigmoid.
    pub fn letter(self) -> char {
        match self {
            LossKind::Square => 'Q',
            LossKind::Sigmoid => 'G',
        }
    }
}

pub fn loss_value(kind: LossKind, u: f64, v: f64) -> f64 {
    kind.value(u, v)
}

pub fn loss_partial_u(kind: LossKind, u: f64, v: f64) -> f64 {
    kind.partial_u(u, v)
}

pub fn loss_partial_v(kind: LossKind, u: f64, v: f64) -> f64 {
    kind.partial_v(u, v)
}

/// `1 / (1 + e^t)`.
fn logistic_tail(t: f64) -> f64 {
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// `e^t / (1 + e^t)^2`, symmetric in `t`.
fn sigmoid_slope(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(loss_value(LossKind::Square, 2.0, 3.0), 1.0);
        assert_eq!(loss_value(LossKind::Sigmoid, 0.0, -7.5), 0.5);
        let expected = 1.0 / (1.0 + 10f64.exp());
        assert!((loss_value(LossKind::Sigmoid, 10.0, 1.0) - expected).abs() < 1e-18);
        assert!((expected - 4.5398e-5).abs() < 1e-8);
        assert_eq!(loss_partial_u(LossKind::Square, 1.5, 1.5), 0.0);
        assert_eq!(loss_partial_u(LossKind::Sigmoid, 0.0, 1.0), -0.25);
    }

    #[test]
    fn saturates_without_nan() {
        for t in [-1e4, -800.0, 800.0, 1e4] {
            let v = loss_value(LossKind::Sigmoid, t, 1.0);
            assert!((0.0..=1.0).contains(&v));
            assert!(loss_partial_u(LossKind::Sigmoid, t, 1.0).is_finite());
            assert!(loss_partial_v(LossKind::Sigmoid, t, 1.0).abs() < 1e-300);
        }
    }

    #[test]
    fn matches_raw_formula_in_safe_range() {
        for t in [-30.0, -2.0, -0.1, 0.3, 5.0, 40.0] {
            let raw = 1.0 / (1.0 + f64::exp(t));
            let s = 1.0 / (1.0 + f64::exp(t));
            let raw_slope = s * s * f64::exp(t);
            assert!((logistic_tail(t) - raw).abs() <= 1e-15 * raw.max(1e-300) + 1e-300);
            assert!((sigmoid_slope(t) - raw_slope).abs() <= 1e-14 * raw_slope);
        }
    }

    fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    proptest! {
        #[test]
        fn partials_match_finite_differences(u in -4.0f64..4.0, v in -4.0f64..4.0) {
            for kind in [LossKind::Square, LossKind::Sigmoid] {
                let du = central(|x| kind.value(x, v), u);
                let dv = central(|x| kind.value(u, x), v);
                let gu = kind.partial_u(u, v);
                let gv = kind.partial_v(u, v);
                prop_assert!((du - gu).abs() <= 1e-5 * gu.abs().max(1e-3));
                prop_assert!((dv - gv).abs() <= 1e-5 * gv.abs().max(1e-3));
            }
        }

        #[test]
        fn square_nonnegative(u in -1e3f64..1e3, v in -1e3f64..1e3) {
            prop_assert!(LossKind::Square.value(u, v) >= 0.0);
        }

        #[test]
        fn sigmoid_decreasing_in_product(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(LossKind::Sigmoid.value(lo, 1.0) >= LossKind::Sigmoid.value(hi, 1.0));
            let v = LossKind::Sigmoid.value(a, 1.0);
            prop_assert!(v > 0.0 && v <= 1.0);
        }
    }
}
