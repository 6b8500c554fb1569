//! Spectral efficiency, handover rate and cost, and mobility-aware average
//! throughput.

use std::cell::RefCell;
use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{coverage, LtMethod};
use crate::error::{Error, Result};
use crate::model::{validate_scheme, Association, MobilityParams, NetworkParams, OverheadParams, SchemeSpec};
use crate::numerics::{integrate_1d, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputPoint {
    pub velocity_kmh: f64,
    pub ho_delay: f64,
    pub scheme: SchemeSpec,
    /// Cell-boundary crossings per second, H(v). Skipping schemes execute
    /// half of them.
    pub ho_rate: f64,
    /// Fraction of time spent in handover signalling, clamped to [0, 1].
    pub ho_cost: f64,
    /// nats/s/Hz.
    pub spectral_efficiency: f64,
    /// nats/s.
    pub throughput_nats: f64,
    /// bit/s.
    pub throughput_bits: f64,
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

/// `E[ln(1 + SINR)]` of the scheme's stationary SINR (blackout phase for
/// skipping schemes), in nats/s/Hz.
///
/// Integrates `∫₀^∞ P(SINR > t)/(1 + t) dt` in the variable `z = ln(1 + t)`,
/// where the integrand `P(SINR > e^z - 1)` decays exponentially.
pub fn spectral_efficiency(scheme: SchemeSpec, params: &NetworkParams) -> Result<f64> {
    spectral_efficiency_with(scheme, params, LtMethod::Auto)
}

pub fn spectral_efficiency_with(scheme: SchemeSpec, params: &NetworkParams, method: LtMethod) -> Result<f64> {
    let scheme = validate_scheme(scheme)?;
    if scheme.coherent {
        return Err(Error::CoherentNotAnalytic);
    }
    let failure = RefCell::new(None);
    let r = integrate_1d(
        |z| {
            let t = z.exp_m1();
            if !t.is_finite() {
                return 0.0;
            }
            match coverage(scheme, t, params, method) {
                Ok(c) => c,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        f64::INFINITY,
        &QuadratureSpec::new(1e-7, 1e-10, 200),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if !r.converged {
        return Err(Error::NonConvergence {
            what: format!("spectral efficiency of {scheme}"),
        });
    }
    Ok(r.value)
}

/// Time-average over the alternating best-connected and blackout phases.
pub fn skipping_avg_se(se_best: f64, se_blackout: f64) -> Result<f64> {
    if !(se_best >= 0.0 && se_blackout >= 0.0) {
        return Err(Error::invalid(
            "spectral_efficiency",
            format!("must be >= 0, got ({se_best}, {se_blackout})"),
        ));
    }
    Ok((se_best + se_blackout) / 2.0)
}

/// Spectral efficiency seen over a whole trajectory: the best-connected value
/// for the conventional scheme and the 50/50 average for skipping schemes.
pub fn scheme_average_se(scheme: SchemeSpec, params: &NetworkParams) -> Result<f64> {
    let best = spectral_efficiency(SchemeSpec::best(), params)?;
    if !scheme.is_skipping() {
        return Ok(best);
    }
    skipping_avg_se(best, spectral_efficiency(scheme, params)?)
}

/// Cell-boundary crossings per second, `4v√λ/π` with `v` in km/s.
pub fn ho_rate(velocity_kmh: f64, lambda: f64) -> Result<f64> {
    let mobility = MobilityParams::new(velocity_kmh, 0.0)?;
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", format!("must be > 0, got {lambda}")));
    }
    Ok(4.0 * mobility.velocity_km_per_s() * lambda.sqrt() / PI)
}

/// Fraction of time lost to handover signalling. Skipping schemes execute one
/// handover per two boundary crossings.
pub fn ho_cost(scheme: SchemeSpec, crossing_rate: f64, delay: f64) -> Result<f64> {
    if !(crossing_rate >= 0.0 && delay >= 0.0) {
        return Err(Error::invalid(
            "ho_cost",
            format!("rate and delay must be >= 0, got ({crossing_rate}, {delay})"),
        ));
    }
    let executed = match scheme.association {
        Association::BestConnected => crossing_rate,
        Association::SkipNoCoop | Association::SkipCoop => crossing_rate / 2.0,
    };
    Ok((executed * delay).clamp(0.0, 1.0))
}

/// `W·se·(1 - u)·(1 - D_HO)` with the scheme's control overhead `u`.
pub fn average_throughput(
    scheme: SchemeSpec,
    params: &NetworkParams,
    mobility: &MobilityParams,
    overhead: &OverheadParams,
    se: f64,
) -> Result<ThroughputPoint> {
    let scheme = validate_scheme(scheme)?;
    if !(se >= 0.0) {
        return Err(Error::invalid("spectral_efficiency", format!("must be >= 0, got {se}")));
    }
    let crossings = ho_rate(mobility.velocity_kmh, params.lambda)?;
    let cost = ho_cost(scheme, crossings, mobility.ho_delay)?;
    let nats = params.bandwidth * se * (1.0 - overhead.for_scheme(&scheme)) * (1.0 - cost);
    Ok(ThroughputPoint {
        velocity_kmh: mobility.velocity_kmh,
        ho_delay: mobility.ho_delay,
        scheme,
        ho_rate: crossings,
        ho_cost: cost,
        spectral_efficiency: se,
        throughput_nats: nats,
        throughput_bits: nats_to_bits(nats),
    })
}

/// Evaluates every (velocity, scheme, delay) combination, ordered by
/// velocity, then scheme, then delay. Spectral efficiencies are computed once
/// per scheme.
pub fn throughput_sweep(
    params: &NetworkParams,
    schemes: &[SchemeSpec],
    velocities_kmh: &[f64],
    delays: &[f64],
    overhead: &OverheadParams,
) -> Result<Vec<ThroughputPoint>> {
    for s in schemes {
        validate_scheme(*s)?;
    }
    let best = spectral_efficiency(SchemeSpec::best(), params)?;
    let blackout = schemes
        .par_iter()
        .map(|s| {
            if s.is_skipping() {
                spectral_efficiency(*s, params)
            } else {
                Ok(best)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(velocities_kmh.len() * schemes.len() * delays.len());
    for &v in velocities_kmh {
        for (scheme, &se_blackout) in schemes.iter().zip(&blackout) {
            let se = if scheme.is_skipping() {
                skipping_avg_se(best, se_blackout)?
            } else {
                best
            };
            for &d in delays {
                let mobility = MobilityParams::new(v, d)?;
                points.push(average_throughput(*scheme, params, &mobility, overhead, se)?);
            }
        }
    }
    Ok(points)
}

/// Relative throughput gain of `a` over `b`.
pub fn gain(a: &ThroughputPoint, b: &ThroughputPoint) -> f64 {
    a.throughput_nats / b.throughput_nats - 1.0
}
