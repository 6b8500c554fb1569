//! Run configuration: built-in defaults, overlaid by an optional JSON file,
//! overlaid by command-line flags.

use std::fs;
use std::path::Path;

use coop_handover::montecarlo::{default_window_radius, SimulationSpec};
use coop_handover::{MobilityParams, NetworkParams, OverheadParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_BATCH: u64 = 10_000;
pub const DEFAULT_DELAYS: [f64; 2] = [0.7, 2.0];

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

/// The JSON config file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub lambda_bs_per_km2: Option<f64>,
    pub eta: Option<f64>,
    pub tx_power_w: Option<f64>,
    pub noise_power_w: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub velocity_kmh: Option<OneOrMany>,
    pub ho_delay_s: Option<OneOrMany>,
    pub u_c_conventional: Option<f64>,
    pub u_c_skipping: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub window_radius_km: Option<f64>,
    pub batch_size: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Values supplied on the command line; `None` leaves the file or default
/// value in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub eta: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub velocities: Option<Vec<f64>>,
    pub delays: Option<Vec<f64>>,
}

/// Fully resolved configuration, serialized verbatim into output headers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub lambda_bs_per_km2: f64,
    pub eta: f64,
    pub tx_power_w: f64,
    pub noise_power_w: f64,
    pub bandwidth_hz: f64,
    pub velocity_kmh: Vec<f64>,
    pub ho_delay_s: Vec<f64>,
    pub u_c_conventional: f64,
    pub u_c_skipping: f64,
    pub trials: u64,
    pub seed: u64,
    pub window_radius_km: f64,
    pub batch_size: u64,
}

pub fn velocity_grid(vmin: f64, vmax: f64, vstep: f64) -> Result<Vec<f64>, CliError> {
    if !(vstep > 0.0 && vmin.is_finite() && vmax.is_finite() && vmax >= vmin) {
        return Err(CliError::Config(format!(
            "velocity grid needs vmin <= vmax and vstep > 0, got {vmin}..{vmax} step {vstep}"
        )));
    }
    let n = ((vmax - vmin) / vstep + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| vmin + i as f64 * vstep).collect())
}

impl RunConfig {
    pub fn resolve(file: ConfigFile, flags: Overrides) -> Result<Self, CliError> {
        let net = NetworkParams::default();
        let overhead = OverheadParams::default();
        let lambda = flags.lambda.or(file.lambda_bs_per_km2).unwrap_or(net.lambda);
        let window_radius_km = match file.window_radius_km {
            Some(r) => r,
            None if lambda > 0.0 && lambda.is_finite() => default_window_radius(lambda),
            None => f64::NAN,
        };
        let cfg = Self {
            lambda_bs_per_km2: lambda,
            eta: flags.eta.or(file.eta).unwrap_or(net.eta),
            tx_power_w: file.tx_power_w.unwrap_or(net.tx_power),
            noise_power_w: file.noise_power_w.unwrap_or(net.noise_power),
            bandwidth_hz: file.bandwidth_hz.unwrap_or(net.bandwidth),
            velocity_kmh: match flags.velocities {
                Some(v) => v,
                None => match file.velocity_kmh {
                    Some(v) => v.into_vec(),
                    None => velocity_grid(0.0, 200.0, 10.0)?,
                },
            },
            ho_delay_s: match flags.delays {
                Some(d) => d,
                None => file
                    .ho_delay_s
                    .map(OneOrMany::into_vec)
                    .unwrap_or_else(|| DEFAULT_DELAYS.to_vec()),
            },
            u_c_conventional: file.u_c_conventional.unwrap_or(overhead.u_conventional),
            u_c_skipping: file.u_c_skipping.unwrap_or(overhead.u_skipping),
            trials: flags.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            window_radius_km,
            batch_size: file.batch_size.unwrap_or(DEFAULT_BATCH),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        self.network()?;
        self.overhead()?;
        self.simulation().validate(self.lambda_bs_per_km2)?;
        if self.velocity_kmh.is_empty() {
            return Err(CliError::Config("velocity_kmh must not be empty".into()));
        }
        if self.ho_delay_s.is_empty() {
            return Err(CliError::Config("ho_delay_s must not be empty".into()));
        }
        for &v in &self.velocity_kmh {
            for &d in &self.ho_delay_s {
                MobilityParams::new(v, d)?;
            }
        }
        Ok(())
    }

    pub fn network(&self) -> Result<NetworkParams, CliError> {
        Ok(NetworkParams::new(
            self.lambda_bs_per_km2,
            self.tx_power_w,
            self.eta,
            self.noise_power_w,
            self.bandwidth_hz,
        )?)
    }

    pub fn overhead(&self) -> Result<OverheadParams, CliError> {
        Ok(OverheadParams::new(self.u_c_conventional, self.u_c_skipping)?)
    }

    pub fn simulation(&self) -> SimulationSpec {
        SimulationSpec {
            trials: self.trials,
            window_radius: self.window_radius_km,
            seed: self.seed,
            batch_size: self.batch_size,
        }
    }
}
