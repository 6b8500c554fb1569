//! Shared domain types.
//!
//! Units: distances in km, intensity in BS/km², power in W, bandwidth in Hz.
//! Velocity is carried in km/h and converted to km/s only through
//! [`MobilityParams::velocity_km_per_s`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical-layer and deployment parameters of the single-tier network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// BS intensity in BS/km².
    pub lambda: f64,
    /// Transmit power of every BS in W.
    pub tx_power: f64,
    /// Path-loss exponent, strictly greater than 2.
    pub eta: f64,
    /// Noise power in W. Zero means interference limited.
    pub noise_power: f64,
    /// Overall bandwidth in Hz.
    pub bandwidth: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            lambda: 50.0,
            tx_power: 1.0,
            eta: 4.0,
            noise_power: 0.0,
            bandwidth: 10e6,
        }
    }
}

impl NetworkParams {
    pub fn new(lambda: f64, tx_power: f64, eta: f64, noise_power: f64, bandwidth: f64) -> Result<Self> {
        Self {
            lambda,
            tx_power,
            eta,
            noise_power,
            bandwidth,
        }
        .validated()
    }

    /// Interference-limited parameters with the given intensity and exponent.
    pub fn interference_limited(lambda: f64, eta: f64) -> Result<Self> {
        Self {
            lambda,
            eta,
            ..Self::default()
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid("lambda", format!("must be > 0, got {}", self.lambda)));
        }
        if !(self.tx_power.is_finite() && self.tx_power > 0.0) {
            return Err(Error::invalid(
                "tx_power",
                format!("must be > 0, got {}", self.tx_power),
            ));
        }
        if !(self.eta.is_finite() && self.eta > 2.0) {
            return Err(Error::invalid("eta", format!("must be > 2, got {}", self.eta)));
        }
        if !(self.noise_power.is_finite() && self.noise_power >= 0.0) {
            return Err(Error::invalid(
                "noise_power",
                format!("must be >= 0, got {}", self.noise_power),
            ));
        }
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::invalid(
                "bandwidth",
                format!("must be > 0, got {}", self.bandwidth),
            ));
        }
        Ok(self)
    }

    /// Characteristic inter-site length 1/√(πλ) in km.
    pub fn length_scale(&self) -> f64 {
        1.0 / (std::f64::consts::PI * self.lambda).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityParams {
    /// User velocity in km/h.
    pub velocity_kmh: f64,
    /// Delay of a single handover in s.
    pub ho_delay: f64,
}

impl MobilityParams {
    pub fn new(velocity_kmh: f64, ho_delay: f64) -> Result<Self> {
        if !(velocity_kmh.is_finite() && velocity_kmh >= 0.0) {
            return Err(Error::invalid("velocity", format!("must be >= 0, got {velocity_kmh}")));
        }
        if !(ho_delay.is_finite() && ho_delay >= 0.0) {
            return Err(Error::invalid("ho_delay", format!("must be >= 0, got {ho_delay}")));
        }
        Ok(Self { velocity_kmh, ho_delay })
    }

    pub fn velocity_km_per_s(&self) -> f64 {
        self.velocity_kmh / 3600.0
    }
}

/// Fraction of capacity consumed by control signalling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadParams {
    pub u_conventional: f64,
    pub u_skipping: f64,
}

impl Default for OverheadParams {
    fn default() -> Self {
        Self {
            u_conventional: 0.3,
            u_skipping: 0.15,
        }
    }
}

impl OverheadParams {
    pub fn new(u_conventional: f64, u_skipping: f64) -> Result<Self> {
        for (name, u) in [("u_conventional", u_conventional), ("u_skipping", u_skipping)] {
            if !(0.0..1.0).contains(&u) {
                return Err(Error::invalid(name, format!("must lie in [0, 1), got {u}")));
            }
        }
        Ok(Self {
            u_conventional,
            u_skipping,
        })
    }

    pub fn for_scheme(&self, scheme: &SchemeSpec) -> f64 {
        match scheme.association {
            Association::BestConnected => self.u_conventional,
            Association::SkipNoCoop | Association::SkipCoop => self.u_skipping,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Association {
    /// Served by the nearest BS at all times.
    BestConnected,
    /// Blackout phase served by the second-nearest BS alone.
    SkipNoCoop,
    /// Blackout phase served jointly by the second- and third-nearest BSs.
    SkipCoop,
}

/// Association scheme together with the IC and coherence flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub association: Association,
    /// Cancel the nearest BS's signal from the interference.
    pub ic: bool,
    /// Phase-aligned (precoded) joint transmission; simulation only.
    pub coherent: bool,
}

impl SchemeSpec {
    pub const BEST: SchemeSpec = SchemeSpec {
        association: Association::BestConnected,
        ic: false,
        coherent: false,
    };

    pub const fn best() -> Self {
        Self::BEST
    }

    pub const fn skip(ic: bool) -> Self {
        Self {
            association: Association::SkipNoCoop,
            ic,
            coherent: false,
        }
    }

    pub const fn skip_coop(ic: bool) -> Self {
        Self {
            association: Association::SkipCoop,
            ic,
            coherent: false,
        }
    }

    pub const fn skip_coop_coherent(ic: bool) -> Self {
        Self {
            association: Association::SkipCoop,
            ic,
            coherent: true,
        }
    }

    /// The five schemes that have an analytic coverage expression.
    pub fn analytic_variants() -> [SchemeSpec; 5] {
        [
            Self::best(),
            Self::skip(false),
            Self::skip(true),
            Self::skip_coop(false),
            Self::skip_coop(true),
        ]
    }

    pub fn is_skipping(&self) -> bool {
        self.association != Association::BestConnected
    }

    /// Stable identifier used in output files, e.g. `skip-comp-ic`.
    pub fn id(&self) -> String {
        let mut id = String::from(match self.association {
            Association::BestConnected => "best",
            Association::SkipNoCoop => "skip",
            Association::SkipCoop => "skip-comp",
        });
        if self.coherent {
            id.push_str("-coherent");
        }
        if self.ic {
            id.push_str("-ic");
        }
        id
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Returns the scheme unchanged if its flags are consistent.
pub fn validate_scheme(scheme: SchemeSpec) -> Result<SchemeSpec> {
    if scheme.coherent && scheme.association != Association::SkipCoop {
        return Err(Error::CoherentWithoutCoop);
    }
    if scheme.ic && scheme.association == Association::BestConnected {
        return Err(Error::IcOnBestConnected);
    }
    Ok(scheme)
}

/// Distances in km from the user to its three nearest BSs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderedDistances {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl OrderedDistances {
    pub fn new(r1: f64, r2: f64, r3: f64) -> Result<Self> {
        for r in [r1, r2, r3] {
            if r.is_nan() || r < 0.0 {
                return Err(Error::NegativeDistance(r));
            }
        }
        if !(r1 <= r2 && r2 <= r3) {
            return Err(Error::invalid(
                "distances",
                format!("must satisfy r1 <= r2 <= r3, got ({r1}, {r2}, {r3})"),
            ));
        }
        Ok(Self { r1, r2, r3 })
    }

    pub fn is_ordered(&self) -> bool {
        0.0 <= self.r1 && self.r1 <= self.r2 && self.r2 <= self.r3
    }
}

/// SINR threshold as a linear ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SinrThreshold(f64);

impl SinrThreshold {
    pub fn new(linear: f64) -> Result<Self> {
        if !(linear > 0.0) {
            return Err(Error::invalid("threshold", format!("must be > 0, got {linear}")));
        }
        Ok(Self(linear))
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(db_to_linear(db)?)
    }

    pub fn linear(&self) -> f64 {
        self.0
    }

    pub fn db(&self) -> f64 {
        10.0 * self.0.log10()
    }
}

pub fn db_to_linear(db: f64) -> Result<f64> {
    if !db.is_finite() {
        return Err(Error::invalid("threshold_db", format!("must be finite, got {db}")));
    }
    Ok(10f64.powf(db / 10.0))
}

pub fn linear_to_db(linear: f64) -> Result<f64> {
    if !(linear > 0.0 && linear.is_finite()) {
        return Err(Error::invalid(
            "linear",
            format!("must be finite and > 0, got {linear}"),
        ));
    }
    Ok(10.0 * linear.log10())
}

/// Inclusive dB grid `start, start + step, ..., <= stop`.
pub fn db_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::invalid(
            "grid",
            format!("need finite start <= stop and step > 0, got ({start}, {stop}, {step})"),
        ));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn db_conversion_examples() {
        assert_eq!(db_to_linear(0.0).unwrap(), 1.0);
        assert!((db_to_linear(10.0).unwrap() - 10.0).abs() < 1e-12);
        assert!((db_to_linear(-10.0).unwrap() - 0.1).abs() < 1e-15);
        assert!(db_to_linear(f64::NAN).is_err());
        assert!(db_to_linear(f64::INFINITY).is_err());
    }

    #[test]
    fn scheme_validation_examples() {
        assert!(validate_scheme(SchemeSpec::best()).is_ok());
        let bad = SchemeSpec {
            association: Association::SkipNoCoop,
            ic: true,
            coherent: true,
        };
        assert_eq!(validate_scheme(bad), Err(Error::CoherentWithoutCoop));
        assert!(validate_scheme(SchemeSpec::skip_coop(true)).is_ok());
        let ic_best = SchemeSpec {
            ic: true,
            ..SchemeSpec::best()
        };
        assert_eq!(validate_scheme(ic_best), Err(Error::IcOnBestConnected));
    }

    #[test]
    fn param_invariants() {
        assert!(NetworkParams::new(50.0, 1.0, 2.0, 0.0, 1e7).is_err());
        assert!(NetworkParams::new(0.0, 1.0, 4.0, 0.0, 1e7).is_err());
        assert!(NetworkParams::new(50.0, 1.0, 4.0, -1.0, 1e7).is_err());
        assert!(NetworkParams::new(50.0, 1.0, 4.0, 0.0, 1e7).is_ok());
        assert!(OverheadParams::new(1.0, 0.1).is_err());
        assert!(MobilityParams::new(-1.0, 0.7).is_err());
        assert!(OrderedDistances::new(0.2, 0.1, 0.3).is_err());
        assert_eq!(
            OrderedDistances::new(-0.1, 0.1, 0.3),
            Err(Error::NegativeDistance(-0.1))
        );
        assert!(SinrThreshold::new(0.0).is_err());
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(db_grid(-10.0, 20.0, 1.0).unwrap().len(), 31);
        assert_eq!(db_grid(-10.0, 20.0, 2.5).unwrap().len(), 13);
        assert!(db_grid(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn scheme_ids_are_distinct() {
        let ids: std::collections::HashSet<_> = SchemeSpec::analytic_variants()
            .iter()
            .chain(&[
                SchemeSpec::skip_coop_coherent(false),
                SchemeSpec::skip_coop_coherent(true),
            ])
            .map(|s| s.id())
            .collect();
        assert_eq!(ids.len(), 7);
    }

    fn any_scheme() -> impl Strategy<Value = SchemeSpec> {
        (0..3u8, any::<bool>(), any::<bool>()).prop_map(|(a, ic, coherent)| SchemeSpec {
            association: match a {
                0 => Association::BestConnected,
                1 => Association::SkipNoCoop,
                _ => Association::SkipCoop,
            },
            ic,
            coherent,
        })
    }

    proptest! {
        #[test]
        fn db_round_trip(x in 1e-3f64..1e3) {
            let back = db_to_linear(linear_to_db(x).unwrap()).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * x.max(1.0));
        }

        #[test]
        fn validation_names_the_broken_rule(s in any_scheme()) {
            let coherent_rule = s.coherent && s.association != Association::SkipCoop;
            let ic_rule = s.ic && s.association == Association::BestConnected;
            match validate_scheme(s) {
                Ok(v) => {
                    prop_assert_eq!(v, s);
                    prop_assert!(!coherent_rule && !ic_rule);
                }
                Err(Error::CoherentWithoutCoop) => prop_assert!(coherent_rule),
                Err(Error::IcOnBestConnected) => prop_assert!(ic_rule && !coherent_rule),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}
