//! The Gauss hypergeometric family `₂F₁(1, 1-2/η; 2-2/η; -x)` that appears in
//! Rayleigh-fading interference Laplace transforms.
//!
//! With `b = 1 - 2/η` the function is `F(x) = Σ b/(b+n) (-x)^n`, which also
//! has the Euler form `F(x) = ∫₀¹ dw / (1 + x w^{1/b})`.

use std::f64::consts::PI;

use super::quadrature::{integrate_1d, QuadratureSpec};
use crate::error::{Error, Result};

const SERIES_LIMIT: f64 = 0.5;
const LARGE_ARGUMENT: f64 = 4.0;

fn check(eta: f64, x: f64) -> Result<()> {
    if !(eta > 2.0) || !eta.is_finite() {
        return Err(Error::invalid(
            "eta",
            format!("hypergeometric parameter needs eta > 2, got {eta}"),
        ));
    }
    if !(x >= 0.0) {
        return Err(Error::invalid("x", format!("argument must be >= 0, got {x}")));
    }
    Ok(())
}

/// `₂F₁(1, 1-2/η; 2-2/η; -x)` for `η > 2`, `x >= 0`.
///
/// Uses `arctan(√x)/√x` when η = 4, otherwise [`hyp2f1_lt_general`].
pub fn hyp2f1_lt(eta: f64, x: f64) -> Result<f64> {
    check(eta, x)?;
    if (eta - 4.0).abs() < 1e-9 {
        return Ok(atan_sqrt_over_sqrt(x));
    }
    hyp2f1_lt_general(eta, x)
}

/// Same function without the η = 4 shortcut: power series for `x <= 0.5`,
/// the Euler integral for moderate `x` and the inverse-argument expansion for
/// `x >= 4`.
pub fn hyp2f1_lt_general(eta: f64, x: f64) -> Result<f64> {
    check(eta, x)?;
    let b = 1.0 - 2.0 / eta;
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if x <= SERIES_LIMIT {
        Ok(series(b, x))
    } else if x < LARGE_ARGUMENT {
        euler_integral(b, x)
    } else {
        Ok(inverse_argument(b, x))
    }
}

/// `arctan(√x)/√x`, continuous at zero.
pub(crate) fn atan_sqrt_over_sqrt(x: f64) -> f64 {
    if x < 1e-8 {
        return 1.0 - x / 3.0;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    let r = x.sqrt();
    r.atan() / r
}

fn series(b: f64, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0;
    for n in 0..200 {
        let term = b / (b + n as f64) * power;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        power *= -x;
    }
    sum
}

fn euler_integral(b: f64, x: f64) -> Result<f64> {
    let p = 1.0 / b;
    let spec = QuadratureSpec::new(1e-13, 1e-300, 200);
    let r = integrate_1d(|w| 1.0 / (1.0 + x * w.powf(p)), 0.0, 1.0, &spec);
    if !r.converged {
        return Err(Error::NonConvergence {
            what: format!("2F1 Euler integral at b={b}, x={x}"),
        });
    }
    Ok(r.value)
}

/// Splits `∫₀^∞ - ∫₁^∞` of the Euler form; the tail expands in powers of `1/x`.
fn inverse_argument(b: f64, x: f64) -> f64 {
    let head = b * PI / (PI * b).sin() * x.powf(-b);
    let inv = 1.0 / x;
    let mut tail = 0.0;
    let mut power = inv;
    for k in 0..400 {
        let term = b / (k as f64 + 1.0 - b) * power;
        if k % 2 == 0 {
            tail += term;
        } else {
            tail -= term;
        }
        if term < 1e-17 * tail.abs() {
            break;
        }
        power *= inv;
    }
    head - tail
}
