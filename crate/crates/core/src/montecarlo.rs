//! Monte Carlo oracle: PPP snapshots with Rayleigh fading around a user at
//! the origin.
//!
//! Randomness: trials are grouped in batches of `batch_size`. Batch `b` draws
//! from ChaCha8 seeded with `seed_from_u64(seed)` on stream `b`, so batches are
//! independent and may run in any order. Per-batch tallies are reduced in batch
//! order, which makes every output bit-exact for a fixed
//! `(seed, trials, batch_size)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{CoverageCurve, CurveSource};
use crate::error::{Error, Result};
use crate::model::{db_to_linear, validate_scheme, Association, NetworkParams, OrderedDistances, SchemeSpec};

/// Minimum expected number of BSs in the simulation window.
pub const MIN_EXPECTED_POINTS: f64 = 100.0;
/// Expected number of BSs in the default window.
pub const DEFAULT_EXPECTED_POINTS: f64 = 500.0;
const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub trials: u64,
    /// Radius of the disc, centred on the user, that holds the BSs (km).
    pub window_radius: f64,
    pub seed: u64,
    pub batch_size: u64,
}

/// `R = √(500/(πλ))`, i.e. 500 BSs expected in the window.
pub fn default_window_radius(lambda: f64) -> f64 {
    (DEFAULT_EXPECTED_POINTS / (PI * lambda)).sqrt()
}

impl SimulationSpec {
    pub fn new(lambda: f64, trials: u64, seed: u64) -> Self {
        Self {
            trials,
            window_radius: default_window_radius(lambda),
            seed,
            batch_size: 10_000,
        }
    }

    pub fn validate(&self, lambda: f64) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::invalid("trials", "must be >= 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::invalid("batch_size", "must be >= 1"));
        }
        if !(self.window_radius > 0.0 && self.window_radius.is_finite()) {
            return Err(Error::invalid(
                "window_radius",
                format!("must be > 0, got {}", self.window_radius),
            ));
        }
        let expected = PI * lambda * self.window_radius * self.window_radius;
        if !(expected >= MIN_EXPECTED_POINTS) {
            return Err(Error::invalid(
                "window_radius",
                format!("expected BS count λπR² = {expected:.1} is below {MIN_EXPECTED_POINTS}"),
            ));
        }
        Ok(())
    }

    fn batches(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let n = self.trials.div_ceil(self.batch_size);
        (0..n).map(move |b| (b, self.batch_size.min(self.trials - b * self.batch_size)))
    }
}

fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrSample {
    pub scheme: SchemeSpec,
    pub sinr: f64,
    pub distances: OrderedDistances,
}

/// BS positions of a PPP on the disc of radius `window_radius` around the
/// origin.
pub fn sample_ppp<R: Rng + ?Sized>(lambda: f64, window_radius: f64, rng: &mut R) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    sample_ppp_into(lambda, window_radius, rng, &mut out);
    out
}

fn sample_ppp_into<R: Rng + ?Sized>(lambda: f64, window_radius: f64, rng: &mut R, out: &mut Vec<[f64; 2]>) {
    out.clear();
    let mean = lambda * PI * window_radius * window_radius;
    let count: f64 = Poisson::new(mean).expect("positive Poisson mean").sample(rng);
    let r2 = window_radius * window_radius;
    while out.len() < count as usize {
        let x = window_radius * (2.0 * rng.random::<f64>() - 1.0);
        let y = window_radius * (2.0 * rng.random::<f64>() - 1.0);
        if x * x + y * y <= r2 {
            out.push([x, y]);
        }
    }
}

/// Unit-power circularly-symmetric complex Gaussian fading coefficient.
fn draw_fading<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// One network snapshot reduced to what every scheme needs: the three nearest
/// BSs with their fading, and the received power of everything farther.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Realization {
    pub distances: OrderedDistances,
    /// Fading of the three nearest BSs, nearest first.
    pub fading: [Complex64; 3],
    /// Path gains `r^{-η}` of the three nearest BSs.
    gains: [f64; 3],
    /// Received interference power from all BSs beyond the third.
    pub far_interference: f64,
}

impl Realization {
    /// Draws one fading coefficient per position, in position order.
    pub fn draw<R: Rng + ?Sized>(positions: &[[f64; 2]], rng: &mut R, params: &NetworkParams) -> Result<Self> {
        let fading: Vec<Complex64> = positions.iter().map(|_| draw_fading(rng)).collect();
        Self::from_parts(positions, &fading, params)
    }

    pub fn from_parts(positions: &[[f64; 2]], fading: &[Complex64], params: &NetworkParams) -> Result<Self> {
        assert_eq!(positions.len(), fading.len(), "one fading coefficient per BS");
        if positions.len() < 3 {
            return Err(Error::TooFewPoints { found: positions.len() });
        }
        let sq: Vec<f64> = positions.iter().map(|p| p[0] * p[0] + p[1] * p[1]).collect();
        let nearest = three_smallest(&sq);
        let gain = path_gain(params.eta);
        let mut far = 0.0;
        for (i, (&d2, h)) in sq.iter().zip(fading).enumerate() {
            if !nearest.contains(&i) {
                far += h.norm_sqr() * gain(d2);
            }
        }
        let [a, b, c] = nearest;
        Ok(Self {
            distances: OrderedDistances {
                r1: sq[a].sqrt(),
                r2: sq[b].sqrt(),
                r3: sq[c].sqrt(),
            },
            fading: [fading[a], fading[b], fading[c]],
            gains: [gain(sq[a]), gain(sq[b]), gain(sq[c])],
            far_interference: params.tx_power * far,
        })
    }

    /// Received power from the `i`-th nearest BS (0-based).
    fn power(&self, i: usize, p: f64) -> f64 {
        p * self.fading[i].norm_sqr() * self.gains[i]
    }

    pub fn sinr(&self, scheme: SchemeSpec, params: &NetworkParams) -> f64 {
        let p = params.tx_power;
        let nearest = if scheme.ic { 0.0 } else { self.power(0, p) };
        let (signal, interference) = match scheme.association {
            Association::BestConnected => (
                self.power(0, p),
                self.far_interference + self.power(1, p) + self.power(2, p),
            ),
            Association::SkipNoCoop => (self.power(1, p), self.far_interference + self.power(2, p) + nearest),
            Association::SkipCoop => {
                let (a2, a3) = (self.gains[1].sqrt(), self.gains[2].sqrt());
                let signal = if scheme.coherent {
                    let amp = self.fading[1].norm() * a2 + self.fading[2].norm() * a3;
                    p * amp * amp
                } else {
                    p * (self.fading[1] * a2 + self.fading[2] * a3).norm_sqr()
                };
                (signal, self.far_interference + nearest)
            }
        };
        signal / (interference + params.noise_power)
    }
}

fn path_gain(eta: f64) -> impl Fn(f64) -> f64 {
    let half = eta / 2.0;
    let quartic = (eta - 4.0).abs() < 1e-12;
    move |d2: f64| if quartic { 1.0 / (d2 * d2) } else { d2.powf(-half) }
}

/// Indices of the three smallest values, ascending; ties keep index order.
fn three_smallest(values: &[f64]) -> [usize; 3] {
    let mut best = [usize::MAX; 3];
    let mut keys = [f64::INFINITY; 3];
    for (i, &v) in values.iter().enumerate() {
        if v < keys[2] || best[2] == usize::MAX {
            let mut j = 2;
            while j > 0 && (v < keys[j - 1] || best[j - 1] == usize::MAX) {
                keys[j] = keys[j - 1];
                best[j] = best[j - 1];
                j -= 1;
            }
            keys[j] = v;
            best[j] = i;
        }
    }
    best
}

/// SINR of `scheme` for one snapshot with freshly drawn fading.
pub fn sinr_sample<R: Rng + ?Sized>(
    scheme: SchemeSpec,
    positions: &[[f64; 2]],
    rng: &mut R,
    params: &NetworkParams,
) -> Result<SinrSample> {
    let scheme = validate_scheme(scheme)?;
    let snap = Realization::draw(positions, rng, params)?;
    Ok(SinrSample {
        scheme,
        sinr: snap.sinr(scheme, params),
        distances: snap.distances,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCoverage {
    pub curve: CoverageCurve,
    /// 95% normal-approximation half-widths, one per threshold.
    pub ci_half_widths: Vec<f64>,
    pub trials: u64,
    pub redraws: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci_half_width: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    /// `covered[s][k]`: trials of scheme `s` with SINR above threshold `k`.
    covered: Vec<Vec<u64>>,
    log_sum: Vec<f64>,
    log_sq_sum: Vec<f64>,
    redraws: u64,
}

impl Tally {
    fn new(schemes: usize, thresholds: usize) -> Self {
        Self {
            covered: vec![vec![0; thresholds]; schemes],
            log_sum: vec![0.0; schemes],
            log_sq_sum: vec![0.0; schemes],
            redraws: 0,
        }
    }

    fn absorb(&mut self, other: &Tally) {
        for (a, b) in self.covered.iter_mut().zip(&other.covered) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.log_sum.iter_mut().zip(&other.log_sum) {
            *a += b;
        }
        for (a, b) in self.log_sq_sum.iter_mut().zip(&other.log_sq_sum) {
            *a += b;
        }
        self.redraws += other.redraws;
    }
}

/// Tallies of a simulation that evaluates several schemes on shared snapshots.
#[derive(Debug, Clone)]
pub struct MonteCarloRun {
    pub schemes: Vec<SchemeSpec>,
    pub thresholds_db: Vec<f64>,
    pub params: NetworkParams,
    pub trials: u64,
    pub redraws: u64,
    tally: Tally,
}

/// Simulates `sim.trials` snapshots and evaluates every scheme on each.
pub fn simulate(
    schemes: &[SchemeSpec],
    params: &NetworkParams,
    sim: &SimulationSpec,
    thresholds_db: &[f64],
) -> Result<MonteCarloRun> {
    let params = params.validated()?;
    sim.validate(params.lambda)?;
    for s in schemes {
        validate_scheme(*s)?;
    }
    let thresholds = thresholds_db
        .iter()
        .map(|&db| db_to_linear(db))
        .collect::<Result<Vec<_>>>()?;
    let batches: Vec<(u64, u64)> = sim.batches().collect();
    let tallies: Vec<Tally> = batches
        .par_iter()
        .map(|&(b, n)| run_batch(schemes, &params, sim, &thresholds, b, n))
        .collect();
    let mut total = Tally::new(schemes.len(), thresholds.len());
    for t in &tallies {
        total.absorb(t);
    }
    Ok(MonteCarloRun {
        schemes: schemes.to_vec(),
        thresholds_db: thresholds_db.to_vec(),
        params,
        trials: sim.trials,
        redraws: total.redraws,
        tally: total,
    })
}

fn run_batch(
    schemes: &[SchemeSpec],
    params: &NetworkParams,
    sim: &SimulationSpec,
    thresholds: &[f64],
    batch: u64,
    trials: u64,
) -> Tally {
    let mut rng = batch_rng(sim.seed, batch);
    let mut tally = Tally::new(schemes.len(), thresholds.len());
    let mut positions = Vec::new();
    let mut fading = Vec::new();
    for _ in 0..trials {
        let snap = loop {
            sample_ppp_into(params.lambda, sim.window_radius, &mut rng, &mut positions);
            fading.clear();
            fading.extend(positions.iter().map(|_| draw_fading(&mut rng)));
            match Realization::from_parts(&positions, &fading, params) {
                Ok(s) => break s,
                Err(_) => tally.redraws += 1,
            }
        };
        for (s, scheme) in schemes.iter().enumerate() {
            let sinr = snap.sinr(*scheme, params);
            for (k, &t) in thresholds.iter().enumerate() {
                if sinr > t {
                    tally.covered[s][k] += 1;
                }
            }
            let rate = sinr.ln_1p();
            tally.log_sum[s] += rate;
            tally.log_sq_sum[s] += rate * rate;
        }
    }
    tally
}

impl MonteCarloRun {
    fn index(&self, scheme: SchemeSpec) -> Result<usize> {
        self.schemes
            .iter()
            .position(|s| *s == scheme)
            .ok_or_else(|| Error::invalid("scheme", format!("{scheme} was not simulated")))
    }

    pub fn coverage(&self, scheme: SchemeSpec) -> Result<EmpiricalCoverage> {
        let i = self.index(scheme)?;
        let n = self.trials as f64;
        let values: Vec<f64> = self.tally.covered[i].iter().map(|&c| c as f64 / n).collect();
        let ci_half_widths = values.iter().map(|p| Z_95 * (p * (1.0 - p) / n).sqrt()).collect();
        Ok(EmpiricalCoverage {
            curve: CoverageCurve {
                thresholds_db: self.thresholds_db.clone(),
                values,
                scheme,
                params: self.params,
                source: CurveSource::MonteCarlo,
            },
            ci_half_widths,
            trials: self.trials,
            redraws: self.redraws,
        })
    }

    /// Sample mean of `ln(1 + SINR)` in nats/s/Hz.
    pub fn spectral_efficiency(&self, scheme: SchemeSpec) -> Result<Estimate> {
        let i = self.index(scheme)?;
        let n = self.trials as f64;
        let mean = self.tally.log_sum[i] / n;
        let var = if self.trials > 1 {
            ((self.tally.log_sq_sum[i] - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Ok(Estimate {
            mean,
            ci_half_width: Z_95 * (var / n).sqrt(),
            trials: self.trials,
        })
    }
}

pub fn empirical_coverage(
    scheme: SchemeSpec,
    params: &NetworkParams,
    sim: &SimulationSpec,
    thresholds_db: &[f64],
) -> Result<EmpiricalCoverage> {
    simulate(&[scheme], params, sim, thresholds_db)?.coverage(scheme)
}

pub fn empirical_spectral_efficiency(
    scheme: SchemeSpec,
    params: &NetworkParams,
    sim: &SimulationSpec,
) -> Result<Estimate> {
    simulate(&[scheme], params, sim, &[])?.spectral_efficiency(scheme)
}
