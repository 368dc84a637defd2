//! Synthetic loss data generation.
//!
//! The protocol: simulate homogeneous Poisson event times by drawing iid
//! exponential inter-arrival times, attach iid Pareto severities, then drop
//! every event whose loss falls below the reporting level in force at its
//! time. Both variates use the inverse-cdf transform, so a run is a pure
//! function of its seed.
//!
//! All randomness comes from ChaCha12 seeded with `seed_from_u64`; replicate
//! studies derive per-replicate seeds with [`replicate_seed`].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Dataset, LossEvent, ModelParams, ObservationWindow, Records, ThresholdSchedule, YearLoss,
};

/// Configuration for one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub true_params: ModelParams,
    pub schedule: ThresholdSchedule,
    /// Number of whole observation years M.
    pub years: u32,
    pub seed: u64,
}

impl SimConfig {
    /// The simulation set up used throughout the numerical studies:
    /// λ = 50, Pareto(2, 3), threshold L_m = 2·exp(0.03·m).
    pub fn standard(years: u32, seed: u64) -> Self {
        Self {
            true_params: ModelParams::new(50.0, 2.0, 3.0).expect("standard parameters are valid"),
            schedule: ThresholdSchedule::ExponentialAnnual {
                base: 2.0,
                rate: 0.03,
            },
            years,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.years == 0 {
            return Err(Error::invalid("sim config", "need at least one year"));
        }
        self.schedule.validate()?;
        if let Some(defined) = self.schedule.defined_years() {
            if defined < self.years as usize {
                return Err(Error::invalid(
                    "sim config",
                    format!("schedule covers {defined} years but {} are simulated", self.years),
                ));
            }
        }
        Ok(())
    }
}

/// Derive the seed for replicate `replicate` from a base seed.
///
/// Uses one SplitMix64 scramble of `base + replicate`, the usual way of
/// spreading consecutive indices across seed space.
pub fn replicate_seed(base: u64, replicate: u64) -> u64 {
    let mut z = base.wrapping_add(replicate.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Exponential(rate) variate by inverse cdf.
fn exponential(rng: &mut impl Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Pareto(α, β) variate by inverse cdf: `x = β·((1 − u)^(−1/α) − 1)`.
pub fn pareto(rng: &mut impl Rng, alpha: f64, beta: f64) -> f64 {
    let u: f64 = rng.random();
    beta * ((1.0 - u).powf(-1.0 / alpha) - 1.0)
}

/// Simulate the pre-truncation sample: event times over `[0, M]` with their
/// Pareto losses. The returned dataset carries a zero threshold (everything
/// reported); pass it through [`apply_threshold`] to impose the schedule.
pub fn simulate_events(config: &SimConfig) -> Result<Dataset> {
    config.validate()?;
    let lambda = config.true_params.lambda();
    let alpha = config.true_params.alpha();
    let beta = config.true_params.beta();
    let t_end = config.years as f64;

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        t += exponential(&mut rng, lambda);
        if t > t_end {
            break;
        }
        events.push(LossEvent {
            time: t,
            loss: pareto(&mut rng, alpha, beta),
        });
    }
    Dataset::from_events(
        events,
        ObservationWindow::whole_years(config.years)?,
        ThresholdSchedule::Constant { level: 0.0 },
    )
}

/// Keep exactly the events with `loss ≥ L(t)` and attach the schedule to the
/// resulting dataset. Ordering is preserved; applying the same schedule twice
/// is a no-op.
pub fn apply_threshold(data: &Dataset, schedule: &ThresholdSchedule) -> Result<Dataset> {
    schedule.validate()?;
    let events = data
        .events()
        .ok_or_else(|| Error::Domain("apply_threshold needs event-time data".into()))?;
    let window = *data.window();
    let kept: Vec<LossEvent> = events
        .iter()
        .filter(|e| e.loss >= schedule.level_for_year(window.year_index(e.time)))
        .copied()
        .collect();
    Dataset::from_events(kept, window, schedule.clone())
}

/// Collapse event times to annual counts ñ_1..ñ_M, keeping each loss tagged
/// with its (1-based) year. Requires a whole-year window.
pub fn to_annual_counts(data: &Dataset) -> Result<Dataset> {
    let events = data
        .events()
        .ok_or_else(|| Error::Domain("to_annual_counts needs event-time data".into()))?;
    let window = *data.window();
    let years = window.num_whole_years()?;
    let mut counts = vec![0u64; years];
    let mut losses = Vec::with_capacity(events.len());
    for event in events {
        let year = window.year_index(event.time);
        counts[year - 1] += 1;
        losses.push(YearLoss {
            year,
            loss: event.loss,
        });
    }
    Dataset::from_annual_counts(counts, losses, window, data.schedule().clone())
}

/// Annual counts as a plain slice, for summaries and tests.
pub fn annual_counts(data: &Dataset) -> Option<&[u64]> {
    match data.records() {
        Records::AnnualCounts { counts, .. } => Some(counts),
        Records::EventTimes(_) => None,
    }
}
