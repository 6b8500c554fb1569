//! Densities of the ordered nearest-BS distances of a typical user in a
//! homogeneous PPP, and an exact sampler for them.
//!
//! All densities return 0 outside their support so that integrators may
//! probe a full box domain. Negative arguments are rejected.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::OrderedDistances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistancePdfKind {
    Joint123,
    MarginalR1,
    MarginalR2,
    JointR2R3,
    ConditionalR1GivenR2,
}

fn non_negative(r: f64) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        Err(Error::NegativeDistance(r))
    } else {
        Ok(r)
    }
}

fn positive_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("lambda", format!("must be > 0, got {lambda}")))
    }
}

/// Joint density of `(r1, r2, r3)`: `(2πλ)³ x y z e^{-πλz²}` on `x <= y <= z`.
pub fn joint_pdf_r123(d: OrderedDistances, lambda: f64) -> Result<f64> {
    positive_lambda(lambda)?;
    let (x, y, z) = (non_negative(d.r1)?, non_negative(d.r2)?, non_negative(d.r3)?);
    if !(x <= y && y <= z) {
        return Ok(0.0);
    }
    let a = 2.0 * PI * lambda;
    Ok(a * a * a * x * y * z * (-PI * lambda * z * z).exp())
}

/// Nearest-BS distance density `2πλ r e^{-πλr²}`.
pub fn marginal_pdf_r1(r: f64, lambda: f64) -> Result<f64> {
    positive_lambda(lambda)?;
    let r = non_negative(r)?;
    Ok(2.0 * PI * lambda * r * (-PI * lambda * r * r).exp())
}

/// Second-nearest distance density `2(πλ)² y³ e^{-πλy²}`.
pub fn marginal_pdf_r2(y: f64, lambda: f64) -> Result<f64> {
    positive_lambda(lambda)?;
    let y = non_negative(y)?;
    let a = PI * lambda;
    Ok(2.0 * a * a * y * y * y * (-a * y * y).exp())
}

/// Joint density of `(r2, r3)`: `4(πλ)³ y³ z e^{-πλz²}` on `y <= z`.
pub fn joint_pdf_r2_r3(y: f64, z: f64, lambda: f64) -> Result<f64> {
    positive_lambda(lambda)?;
    let (y, z) = (non_negative(y)?, non_negative(z)?);
    if y > z {
        return Ok(0.0);
    }
    let a = PI * lambda;
    Ok(4.0 * a * a * a * y * y * y * z * (-a * z * z).exp())
}

/// Density of `r1` given `r2`: `2x/r2²` on `[0, r2]`.
pub fn conditional_pdf_r1_given_r2(x: f64, r2: f64) -> Result<f64> {
    let (x, r2) = (non_negative(x)?, non_negative(r2)?);
    if r2 == 0.0 {
        return Err(Error::invalid("r2", "conditioning distance must be > 0"));
    }
    if x > r2 {
        return Ok(0.0);
    }
    Ok(2.0 * x / (r2 * r2))
}

/// Dispatches on `kind`; unused coordinates are ignored (`x, y, z` are
/// `r1, r2, r3` for joint kinds, `x` alone for the marginals, and `(x, y)` for
/// the conditional).
pub fn pdf(kind: DistancePdfKind, x: f64, y: f64, z: f64, lambda: f64) -> Result<f64> {
    match kind {
        DistancePdfKind::Joint123 => joint_pdf_r123(OrderedDistances { r1: x, r2: y, r3: z }, lambda),
        DistancePdfKind::MarginalR1 => marginal_pdf_r1(x, lambda),
        DistancePdfKind::MarginalR2 => marginal_pdf_r2(x, lambda),
        DistancePdfKind::JointR2R3 => joint_pdf_r2_r3(x, y, lambda),
        DistancePdfKind::ConditionalR1GivenR2 => conditional_pdf_r1_given_r2(x, y),
    }
}

/// Draws `(r1, r2, r3)` exactly.
///
/// `πλ r3²` is Gamma(3, 1), i.e. a sum of three unit exponentials. Given `r3`,
/// `r1` and `r2` are the order statistics of two iid draws `r3 √U`.
pub fn sample_ordered_distances<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<OrderedDistances> {
    positive_lambda(lambda)?;
    let exp = Exp::new(PI * lambda).expect("rate is positive");
    let r3_sq: f64 = exp.sample(rng) + exp.sample(rng) + exp.sample(rng);
    let r3 = r3_sq.sqrt();
    let a = r3 * rng.random::<f64>().sqrt();
    let b = r3 * rng.random::<f64>().sqrt();
    Ok(OrderedDistances {
        r1: a.min(b),
        r2: a.max(b),
        r3,
    })
}

/// CDF of the nearest distance, `1 - e^{-πλr²}`.
pub fn cdf_r1(r: f64, lambda: f64) -> f64 {
    1.0 - (-PI * lambda * r * r).exp()
}

/// CDF of the second-nearest distance, `1 - e^{-a}(1 + a)` with `a = πλy²`.
pub fn cdf_r2(y: f64, lambda: f64) -> f64 {
    let a = PI * lambda * y * y;
    1.0 - (-a).exp() * (1.0 + a)
}
