//! Analytic coverage probabilities.
//!
//! Conditioned on the serving distances, Rayleigh fading turns coverage into
//! a product of interference Laplace transforms; the unconditional value
//! integrates that product against the distance densities. Integrals run in
//! normalized distances `u = r √(πλ)`, which keeps the Gaussian tails at unit
//! scale whatever the intensity.

use std::cell::RefCell;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{db_to_linear, validate_scheme, Association, NetworkParams, SchemeSpec};
use crate::numerics::{
    atan_sqrt_over_sqrt, hyp2f1_lt, hyp2f1_lt_general, integrate_1d, integrate_ordered_2d, IntegrationResult,
    QuadratureSpec,
};

/// Selects between the η = 4 closed forms and the general-η expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum LtMethod {
    /// arctan closed forms when η = 4, general expressions otherwise.
    #[default]
    Auto,
    /// Hypergeometric / quadrature expressions for every η.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveSource {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCurve {
    pub thresholds_db: Vec<f64>,
    pub values: Vec<f64>,
    pub scheme: SchemeSpec,
    pub params: NetworkParams,
    pub source: CurveSource,
}

impl CoverageCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True if every value lies in [0, 1] and the curve never rises by more
    /// than `slack` as the threshold grows.
    pub fn is_valid(&self, slack: f64) -> bool {
        self.thresholds_db.len() == self.values.len()
            && self.values.iter().all(|v| (0.0..=1.0).contains(v))
            && self.values.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

fn closed_form(params: &NetworkParams, method: LtMethod) -> bool {
    method == LtMethod::Auto && (params.eta - 4.0).abs() < 1e-9
}

fn hyp(params: &NetworkParams, method: LtMethod, x: f64) -> Result<f64> {
    match method {
        LtMethod::Auto => hyp2f1_lt(params.eta, x),
        LtMethod::General => hyp2f1_lt_general(params.eta, x),
    }
}

/// `1 - y·arctan(1/y)` without cancellation for large `y`.
fn one_minus_y_atan_inv(y: f64) -> f64 {
    if y == f64::INFINITY {
        return 0.0;
    }
    if y < 4.0 {
        return 1.0 - y * (1.0 / y).atan();
    }
    let inv2 = 1.0 / (y * y);
    let mut sum = 0.0;
    let mut power = inv2;
    let mut k = 1;
    loop {
        let term = power / (2 * k + 1) as f64;
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < 1e-17 * sum || k > 60 {
            return sum;
        }
        power *= inv2;
        k += 1;
    }
}

fn check_s(s: f64) -> Result<()> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::invalid("s", format!("Laplace argument must be >= 0, got {s}")));
    }
    Ok(())
}

/// Laplace transform of the nearest-BS interference, conditioned on `r2`:
/// `∫₀^{r2} 2r₁ / (r2² (1 + sP r₁^{-η})) dr₁`, the nearest BS being uniform
/// over the disc of radius `r2`.
pub fn lt_i1_coop(s: f64, r2: f64, params: &NetworkParams, method: LtMethod) -> Result<f64> {
    check_s(s)?;
    if !(r2 > 0.0) {
        return Err(Error::invalid("r2", format!("must be > 0, got {r2}")));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    let a = s * params.tx_power;
    if closed_form(params, method) {
        return Ok(one_minus_y_atan_inv(a.sqrt() / (r2 * r2)));
    }
    // r₁ = r2·w: ∫₀¹ 2w^{η+1} / (w^η + c) dw with c = sP r2^{-η}
    let eta = params.eta;
    let c = a / r2.powf(eta);
    if c == f64::INFINITY {
        return Ok(0.0);
    }
    let spec = QuadratureSpec::new(1e-12, 1e-15, 200);
    let r = integrate_1d(
        |w| {
            let we = w.powf(eta);
            2.0 * w * we / (we + c)
        },
        0.0,
        1.0,
        &spec,
    );
    if !r.converged {
        return Err(Error::NonConvergence {
            what: format!("nearest-BS Laplace transform at s={s}, r2={r2}"),
        });
    }
    Ok(r.value)
}

/// Laplace transform of the aggregate interference from BSs beyond `r3`:
/// `exp(-2πλ sP r3^{2-η}/(η-2) · ₂F₁(1, 1-2/η; 2-2/η; -sP r3^{-η}))`.
pub fn lt_ir2_coop(s: f64, r3: f64, params: &NetworkParams, method: LtMethod) -> Result<f64> {
    check_s(s)?;
    if !(r3 > 0.0) {
        return Err(Error::invalid("r3", format!("must be > 0, got {r3}")));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    let eta = params.eta;
    let z = s * params.tx_power / r3.powf(eta);
    let area = PI * params.lambda * r3 * r3;
    let exponent = if closed_form(params, method) {
        // πλ r3² √z arctan(√z)
        area * z * atan_sqrt_over_sqrt(z)
    } else {
        2.0 * area * z / (eta - 2.0) * hyp(params, method, z)?
    };
    Ok((-exponent).exp())
}

/// `ρ(T) = 2T/(η-2) ₂F₁(1, 1-2/η; 2-2/η; -T)`, the interference factor of a
/// PPP beyond the serving distance relative to the serving signal.
pub fn interference_factor(t: f64, params: &NetworkParams, method: LtMethod) -> Result<f64> {
    if closed_form(params, method) {
        return Ok(t * atan_sqrt_over_sqrt(t));
    }
    Ok(2.0 * t / (params.eta - 2.0) * hyp(params, method, t)?)
}

fn check_threshold(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::invalid("threshold", format!("must be >= 0, got {t}")));
    }
    Ok(())
}

/// Collects the first error raised inside an integrand closure.
struct ErrorSlot(RefCell<Option<Error>>);

impl ErrorSlot {
    fn new() -> Self {
        Self(RefCell::new(None))
    }

    fn take(&self, r: Result<f64>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    fn finish(self, r: IntegrationResult, what: impl FnOnce() -> String) -> Result<f64> {
        if let Some(e) = self.0.into_inner() {
            return Err(e);
        }
        if !r.converged {
            return Err(Error::NonConvergence { what: what() });
        }
        Ok(r.value.clamp(0.0, 1.0))
    }
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

/// Best-connected coverage: the user is served by its nearest BS and every
/// other BS interferes.
pub fn coverage_best(t: f64, params: &NetworkParams, method: LtMethod) -> Result<f64> {
    check_threshold(t)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    if t == f64::INFINITY {
        return Ok(0.0);
    }
    let rho = interference_factor(t, params, method)?;
    let scale = params.length_scale();
    let noise = t * params.noise_power / params.tx_power;
    let r = integrate_1d(
        |u| {
            let density = 2.0 * u * (-u * u * (1.0 + rho)).exp();
            if density == 0.0 || noise == 0.0 {
                return density;
            }
            density * (-noise * (u * scale).powf(params.eta)).exp()
        },
        0.0,
        f64::INFINITY,
        &spec(),
    );
    ErrorSlot::new().finish(r, || format!("best-connected coverage at T={t}"))
}

/// Blackout coverage without cooperation: served by the second-nearest BS;
/// the skipped nearest BS interferes unless `ic` cancels it.
pub fn coverage_blackout_nocoop(t: f64, params: &NetworkParams, ic: bool, method: LtMethod) -> Result<f64> {
    check_threshold(t)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    if t == f64::INFINITY {
        return Ok(0.0);
    }
    let scale = params.length_scale();
    let slot = ErrorSlot::new();
    let r = integrate_1d(
        |u| {
            let density = 2.0 * u * u * u * (-u * u).exp();
            if density == 0.0 {
                return 0.0;
            }
            let r2 = u * scale;
            let s = t * r2.powf(params.eta) / params.tx_power;
            let mut value = density * slot.take(lt_ir2_coop(s, r2, params, method));
            if !ic {
                value *= slot.take(lt_i1_coop(s, r2, params, method));
            }
            if params.noise_power > 0.0 {
                value *= (-s * params.noise_power).exp();
            }
            value
        },
        0.0,
        f64::INFINITY,
        &spec(),
    );
    slot.finish(r, || format!("blackout coverage at T={t}, ic={ic}"))
}

/// Blackout coverage with non-coherent joint transmission from the second-
/// and third-nearest BSs. `s = T / (P (r2^{-η} + r3^{-η}))`.
pub fn coverage_blackout_coop(t: f64, params: &NetworkParams, ic: bool, method: LtMethod) -> Result<f64> {
    check_threshold(t)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    if t == f64::INFINITY {
        return Ok(0.0);
    }
    let scale = params.length_scale();
    let eta = params.eta;
    let slot = ErrorSlot::new();
    let r = integrate_ordered_2d(
        |u2, u3| {
            let density = 4.0 * u2 * u2 * u2 * u3 * (-u3 * u3).exp();
            if density == 0.0 {
                return 0.0;
            }
            let (r2, r3) = (u2 * scale, u3 * scale);
            let s = t * r2.powf(eta) / (params.tx_power * (1.0 + (r2 / r3).powf(eta)));
            let mut value = density * slot.take(lt_ir2_coop(s, r3, params, method));
            if !ic {
                value *= slot.take(lt_i1_coop(s, r2, params, method));
            }
            if params.noise_power > 0.0 {
                value *= (-s * params.noise_power).exp();
            }
            value
        },
        &spec(),
    );
    slot.finish(r, || format!("cooperative blackout coverage at T={t}, ic={ic}"))
}

/// Coverage of `scheme` at linear threshold `t`.
pub fn coverage(scheme: SchemeSpec, t: f64, params: &NetworkParams, method: LtMethod) -> Result<f64> {
    let scheme = validate_scheme(scheme)?;
    if scheme.coherent {
        return Err(Error::CoherentNotAnalytic);
    }
    match scheme.association {
        Association::BestConnected => coverage_best(t, params, method),
        Association::SkipNoCoop => coverage_blackout_nocoop(t, params, scheme.ic, method),
        Association::SkipCoop => coverage_blackout_coop(t, params, scheme.ic, method),
    }
}

/// Analytic coverage over a dB threshold grid. Thresholds are evaluated in
/// parallel; the result does not depend on evaluation order.
pub fn coverage_curve(scheme: SchemeSpec, params: &NetworkParams, thresholds_db: &[f64]) -> Result<CoverageCurve> {
    let scheme = validate_scheme(scheme)?;
    if scheme.coherent {
        return Err(Error::CoherentNotAnalytic);
    }
    let values = thresholds_db
        .par_iter()
        .map(|&db| coverage(scheme, db_to_linear(db)?, params, LtMethod::Auto))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageCurve {
        thresholds_db: thresholds_db.to_vec(),
        values,
        scheme,
        params: *params,
        source: CurveSource::Analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::db_grid;

    fn params(lambda: f64) -> NetworkParams {
        NetworkParams::interference_limited(lambda, 4.0).unwrap()
    }

    fn best_closed_form(t: f64) -> f64 {
        1.0 / (1.0 + t.sqrt() * (PI / 2.0 - (1.0 / t.sqrt()).atan()))
    }

    #[test]
    fn stable_atan_helper_matches_direct_form() {
        for y in [0.0f64, 0.1, 1.0, 3.99, 4.0, 10.0, 100.0] {
            let direct = 1.0 - y * (1.0 / y).atan();
            let v = one_minus_y_atan_inv(y);
            assert!((v - direct).abs() < 1e-12, "{y}");
        }
        // series tail: 1/(3y²) leading
        assert!((one_minus_y_atan_inv(1e6) - 1.0 / 3e12).abs() < 1e-24);
    }

    #[test]
    fn laplace_transforms_at_zero() {
        let p = params(50.0);
        assert_eq!(lt_i1_coop(0.0, 0.1, &p, LtMethod::Auto).unwrap(), 1.0);
        assert_eq!(lt_ir2_coop(0.0, 0.1, &p, LtMethod::General).unwrap(), 1.0);
        assert!(lt_i1_coop(1.0, 0.0, &p, LtMethod::Auto).is_err());
        assert!(lt_i1_coop(-1.0, 0.1, &p, LtMethod::Auto).is_err());
    }

    #[test]
    fn laplace_transforms_decrease_in_s() {
        let p = params(50.0);
        let mut prev = (1.0, 1.0);
        for i in 1..40 {
            let s = 1e-8 * 1.5f64.powi(i);
            let cur = (
                lt_i1_coop(s, 0.1, &p, LtMethod::General).unwrap(),
                lt_ir2_coop(s, 0.15, &p, LtMethod::General).unwrap(),
            );
            assert!(cur.0 <= prev.0 && cur.1 <= prev.1);
            assert!(cur.0 > 0.0 && cur.1 > 0.0);
            prev = cur;
        }
    }

    #[test]
    fn nearest_lt_closed_form_matches_quadrature() {
        let p = params(50.0);
        let (t, r2, r3): (f64, f64, f64) = (1.0, 0.1, 0.15);
        let s = t / (p.tx_power * (r2.powi(-4) + r3.powi(-4)));
        let closed = lt_i1_coop(s, r2, &p, LtMethod::Auto).unwrap();
        let general = lt_i1_coop(s, r2, &p, LtMethod::General).unwrap();
        assert!((closed - general).abs() < 1e-8);
        // printed η = 4 form in terms of T, r2, r3
        let q = (t * r3.powi(4) / (r2.powi(4) + r3.powi(4))).sqrt();
        let printed = 1.0 - q * (1.0 / q).atan();
        assert!((closed - printed).abs() < 1e-12);
    }

    #[test]
    fn beyond_lt_closed_form_matches_hypergeometric() {
        let p = params(70.0);
        let (t, r2, r3) = (2.0f64, 0.05f64, 0.08f64);
        let s = t / (p.tx_power * (r2.powi(-4) + r3.powi(-4)));
        let closed = lt_ir2_coop(s, r3, &p, LtMethod::Auto).unwrap();
        let general = lt_ir2_coop(s, r3, &p, LtMethod::General).unwrap();
        assert!((closed - general).abs() < 1e-8);
        let printed = (-PI
            * 70.0
            * (t / (r2.powi(-4) + r3.powi(-4))).sqrt()
            * (t * r2.powi(4) / (r2.powi(4) + r3.powi(4))).sqrt().atan())
        .exp();
        assert!((closed - printed).abs() < 1e-12);
    }

    #[test]
    fn beyond_lt_decreases_with_intensity() {
        let s = 1e-5;
        let mut prev = 1.0;
        for lambda in [1.0, 10.0, 50.0, 100.0, 500.0] {
            let v = lt_ir2_coop(s, 0.1, &params(lambda), LtMethod::Auto).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn best_connected_anchor() {
        let p = params(50.0);
        let v = coverage_best(1.0, &p, LtMethod::Auto).unwrap();
        assert!((v - best_closed_form(1.0)).abs() < 1e-8);
        assert!((v - 0.5600).abs() < 1e-4);
        for t in [0.01, 0.3, 5.0, 100.0] {
            let v = coverage_best(t, &p, LtMethod::General).unwrap();
            assert!((v - best_closed_form(t)).abs() < 1e-7, "{t}");
        }
    }

    #[test]
    fn interference_factor_matches_integral_form() {
        // ρ(T) = T^{2/η} ∫_{T^{-2/η}}^∞ dw / (1 + w^{η/2})
        for eta in [3.0, 4.0, 5.5] {
            let p = NetworkParams::interference_limited(50.0, eta).unwrap();
            for t in [0.1f64, 1.0, 10.0] {
                let lo = t.powf(-2.0 / eta);
                // w = lo·v^{-k} turns the algebraic tail into a smooth integrand on (0, 1]
                let k = 4.0 / (eta - 2.0);
                let r = integrate_1d(
                    |v| {
                        if v == 0.0 {
                            return 0.0;
                        }
                        let w = lo * v.powf(-k);
                        lo * k * v.powf(-k - 1.0) / (1.0 + w.powf(eta / 2.0))
                    },
                    0.0,
                    1.0,
                    &QuadratureSpec::new(1e-13, 1e-15, 400),
                );
                let oracle = t.powf(2.0 / eta) * r.value;
                let v = interference_factor(t, &p, LtMethod::Auto).unwrap();
                assert!((v - oracle).abs() < 1e-8 * oracle.max(1.0), "eta={eta} t={t}");
            }
        }
    }

    #[test]
    fn degenerate_thresholds() {
        let p = params(50.0);
        for scheme in SchemeSpec::analytic_variants() {
            assert_eq!(coverage(scheme, 0.0, &p, LtMethod::Auto).unwrap(), 1.0);
            assert!(coverage(scheme, 1e-6, &p, LtMethod::Auto).unwrap() > 0.99);
            assert!(coverage(scheme, 1e6, &p, LtMethod::Auto).unwrap() < 0.01);
        }
    }

    #[test]
    fn interference_cancellation_helps() {
        let p = params(50.0);
        for db in db_grid(-10.0, 20.0, 2.5).unwrap() {
            let t = db_to_linear(db).unwrap();
            let nc = coverage_blackout_nocoop(t, &p, false, LtMethod::Auto).unwrap();
            let nc_ic = coverage_blackout_nocoop(t, &p, true, LtMethod::Auto).unwrap();
            let c = coverage_blackout_coop(t, &p, false, LtMethod::Auto).unwrap();
            let c_ic = coverage_blackout_coop(t, &p, true, LtMethod::Auto).unwrap();
            assert!(nc <= nc_ic && c <= c_ic && nc <= c && nc_ic <= c_ic, "db={db}");
        }
    }

    #[test]
    fn noise_lowers_coverage() {
        let quiet = params(50.0);
        let noisy = NetworkParams {
            noise_power: 1e-6,
            ..quiet
        };
        for scheme in SchemeSpec::analytic_variants() {
            let a = coverage(scheme, 1.0, &quiet, LtMethod::Auto).unwrap();
            let b = coverage(scheme, 1.0, &noisy, LtMethod::Auto).unwrap();
            assert!(b < a, "{scheme}");
        }
    }

    #[test]
    fn coherent_is_not_analytic() {
        let p = params(50.0);
        assert_eq!(
            coverage_curve(SchemeSpec::skip_coop_coherent(false), &p, &[0.0]),
            Err(Error::CoherentNotAnalytic)
        );
    }

    #[test]
    fn best_curve_is_monotone() {
        let p = params(50.0);
        let grid = db_grid(-10.0, 20.0, 1.0).unwrap();
        let curve = coverage_curve(SchemeSpec::best(), &p, &grid).unwrap();
        assert_eq!(curve.len(), 31);
        assert!(curve.is_valid(0.0));
    }
}
