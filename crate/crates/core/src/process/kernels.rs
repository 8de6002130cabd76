//! Closed-form covariances of `X` and `S(y) = ∫_anchor^y X`.

use super::{BridgeOutside, ProcessKind, ProcessSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) enum Kernel {
    Bm { anchor: f64 },
    Bb { anchor: f64, horizon: f64, hold: bool },
    Ou { anchor: f64, rate: f64 },
}

/// `Cov(B(a), ∫_0^b B)` for standard Brownian motion, `a, b >= 0`.
pub(crate) fn bm_cross(a: f64, b: f64) -> f64 {
    if a >= b {
        0.5 * b * b
    } else {
        a * b - 0.5 * a * a
    }
}

/// `Cov(∫_0^a B, ∫_0^b B)`, `a, b >= 0`.
pub(crate) fn bm_level(a: f64, b: f64) -> f64 {
    let (m, big) = if a <= b { (a, b) } else { (b, a) };
    m * m * (big / 2.0 - m / 6.0)
}

fn same_side(u: f64, v: f64) -> bool {
    (u > 0.0 && v > 0.0) || (u < 0.0 && v < 0.0)
}

/// `Var ∫_0^h X` for the stationary OU process.
fn ou_integral_variance(rate: f64, h: f64) -> f64 {
    let x = rate * h.abs();
    // x + expm1(-x) loses digits for small x
    let core = if x < 1e-2 {
        x * x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x * (1.0 / 120.0 - x / 720.0))))
    } else {
        x + (-x).exp_m1()
    };
    core / rate.powi(3)
}

/// `sgn(z) (1 - exp(-rate |z|)) / rate`.
fn ou_e(rate: f64, z: f64) -> f64 {
    -z.signum() * (-rate * z.abs()).exp_m1() / rate
}

impl Kernel {
    pub(crate) fn of(spec: &ProcessSpec) -> Result<Kernel> {
        let anchor = spec.anchor;
        Ok(match spec.kind {
            ProcessKind::BrownianMotion => Kernel::Bm { anchor },
            ProcessKind::BrownianBridge { horizon } => Kernel::Bb {
                anchor,
                horizon,
                hold: spec.bridge_outside == BridgeOutside::HoldConstant,
            },
            ProcessKind::OrnsteinUhlenbeck { rate } => Kernel::Ou { anchor, rate },
            ProcessKind::Custom => return Err(Error::NoClosedForm),
        })
    }

    /// Effective integration end of the bridge integral at relative position `u`,
    /// or `None` where the integral is identically zero.
    fn bridge_end(horizon: f64, hold: bool, u: f64) -> Option<f64> {
        if u <= 0.0 {
            None
        } else if u <= horizon {
            Some(u)
        } else if hold {
            Some(horizon)
        } else {
            None
        }
    }

    /// `Cov(X(s), X(t))`.
    pub(crate) fn slope(&self, s: f64, t: f64) -> f64 {
        match *self {
            Kernel::Bm { anchor } => {
                let (u, v) = (s - anchor, t - anchor);
                if same_side(u, v) { u.abs().min(v.abs()) } else { 0.0 }
            }
            Kernel::Bb { anchor, horizon, .. } => {
                let (u, v) = (s - anchor, t - anchor);
                let inside = |z: f64| (0.0..=horizon).contains(&z);
                if inside(u) && inside(v) { u.min(v) - u * v / horizon } else { 0.0 }
            }
            Kernel::Ou { rate, .. } => (-rate * (s - t).abs()).exp() / (2.0 * rate),
        }
    }

    /// `Cov(X(s), S(t))`.
    pub(crate) fn cross(&self, s: f64, t: f64) -> f64 {
        match *self {
            Kernel::Bm { anchor } => {
                let (u, v) = (s - anchor, t - anchor);
                if same_side(u, v) { v.signum() * bm_cross(u.abs(), v.abs()) } else { 0.0 }
            }
            Kernel::Bb { anchor, horizon, hold } => {
                let u = s - anchor;
                if !(0.0..=horizon).contains(&u) {
                    return 0.0;
                }
                match Self::bridge_end(horizon, hold, t - anchor) {
                    Some(b) => bm_cross(u, b) - u * b * b / (2.0 * horizon),
                    None => 0.0,
                }
            }
            Kernel::Ou { anchor, rate } => {
                let (u, v) = (s - anchor, t - anchor);
                (ou_e(rate, u) - ou_e(rate, u - v)) / (2.0 * rate)
            }
        }
    }

    /// `Cov(S(s), S(t))`.
    pub(crate) fn level(&self, s: f64, t: f64) -> f64 {
        match *self {
            Kernel::Bm { anchor } => {
                let (u, v) = (s - anchor, t - anchor);
                if same_side(u, v) { bm_level(u.abs(), v.abs()) } else { 0.0 }
            }
            Kernel::Bb { anchor, horizon, hold } => {
                let a = Self::bridge_end(horizon, hold, s - anchor);
                let b = Self::bridge_end(horizon, hold, t - anchor);
                match (a, b) {
                    (Some(a), Some(b)) => {
                        let (a, b) = if a <= b { (a, b) } else { (b, a) };
                        bm_level(a, b) - a * a * b * b / (4.0 * horizon)
                    }
                    _ => 0.0,
                }
            }
            Kernel::Ou { anchor, rate } => {
                let (u, v) = (s - anchor, t - anchor);
                0.5 * (ou_integral_variance(rate, u) + ou_integral_variance(rate, v)
                    - ou_integral_variance(rate, u - v))
            }
        }
    }
}
