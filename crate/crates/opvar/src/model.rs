//! Parameter, schedule and data types, plus the elementary density and
//! intensity formulas the rest of the crate builds on.
//!
//! The model: loss events follow a Poisson process with yearly intensity λ,
//! severities are iid Pareto with cdf `F(x) = 1 − (1 + x/β)^(−α)`, and only
//! losses at or above a known reporting level `L(t)` are recorded. Reported
//! events then follow a thinned Poisson process with intensity
//! `θ(t) = λ·(1 − F(L(t)))`.
//!
//! All times are expressed in years. Schedule and intensity lookups take the
//! time *elapsed since the start of observation*, so year `m` (1-based) covers
//! `t ∈ [m−1, m)`; an event exactly at a year boundary belongs to the later
//! year.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack when checking that a window length is a whole number of years.
const YEAR_EPS: f64 = 1e-9;

/// Model parameters γ = (λ, α, β): Poisson intensity plus Pareto shape and scale.
///
/// All three are strictly positive; validity is enforced at construction and
/// assumed by every operation thereafter. The coordinate order (λ, α, β) is
/// used for gradients, covariance matrices and chain samples throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    lambda: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct RawParams {
    lambda: f64,
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.lambda, raw.alpha, raw.beta)
    }
}

impl ModelParams {
    /// Create parameters, checking λ > 0, α > 0, β > 0 (all finite).
    pub fn new(lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("alpha", alpha), ("beta", beta)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(
                    "parameter",
                    format!("{name} must be finite and positive, got {v}"),
                ));
            }
        }
        Ok(Self {
            lambda,
            alpha,
            beta,
        })
    }

    /// Events-per-year intensity λ of the pre-truncation Poisson process.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Pareto shape α (tail index).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Pareto scale β, in currency units.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Parameters as `[λ, α, β]`, the coordinate order used by gradients and chains.
    pub fn to_array(&self) -> [f64; 3] {
        [self.lambda, self.alpha, self.beta]
    }

    /// Rebuild from `[λ, α, β]`.
    pub fn from_array(values: [f64; 3]) -> Result<Self> {
        Self::new(values[0], values[1], values[2])
    }
}

/// The known reporting level `L(t)`.
///
/// All supported laws are piecewise constant per annum, which keeps every
/// integral over the thinned intensity an exact finite sum. Year indexing is
/// 1-based and follows the exponential law `L_m = L_0·exp(r·m)` with `m = 1`
/// for the first observation year, so the first year's level is `L_0·e^r`,
/// not `L_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ThresholdSchedule {
    /// A single level for all times. `Constant { level: 0.0 }` reports everything.
    Constant { level: f64 },
    /// One level per observation year, `levels[m-1]` in force over `[m−1, m)`.
    PiecewiseAnnual { levels: Vec<f64> },
    /// `L_m = base·exp(rate·m)` for year m, constant within each year.
    ExponentialAnnual { base: f64, rate: f64 },
}

impl ThresholdSchedule {
    /// Check the schedule invariants: every level nonnegative (infinity is a
    /// legal sentinel meaning "report nothing"), rates finite.
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Err(Error::invalid("schedule", detail));
        match self {
            ThresholdSchedule::Constant { level } => {
                if level.is_nan() || *level < 0.0 {
                    return bad(format!("constant level must be >= 0, got {level}"));
                }
            }
            ThresholdSchedule::PiecewiseAnnual { levels } => {
                if levels.is_empty() {
                    return bad("piecewise schedule needs at least one level".into());
                }
                for (i, level) in levels.iter().enumerate() {
                    if level.is_nan() || *level < 0.0 {
                        return bad(format!("level for year {} must be >= 0, got {level}", i + 1));
                    }
                }
            }
            ThresholdSchedule::ExponentialAnnual { base, rate } => {
                if !base.is_finite() || *base < 0.0 {
                    return bad(format!("base level must be finite and >= 0, got {base}"));
                }
                if !rate.is_finite() {
                    return bad(format!("rate must be finite, got {rate}"));
                }
            }
        }
        Ok(())
    }

    /// Reporting level in force during year `m` (1-based).
    ///
    /// A piecewise schedule extends its final level beyond the last defined
    /// year; whether it covers the observation window is checked when a
    /// dataset is assembled.
    pub fn level_for_year(&self, year: usize) -> f64 {
        debug_assert!(year >= 1);
        match self {
            ThresholdSchedule::Constant { level } => *level,
            ThresholdSchedule::PiecewiseAnnual { levels } => {
                levels[(year - 1).min(levels.len() - 1)]
            }
            ThresholdSchedule::ExponentialAnnual { base, rate } => {
                base * (rate * year as f64).exp()
            }
        }
    }

    /// Reporting level at elapsed time `t ≥ 0` (years since observation start).
    pub fn level_at(&self, t: f64) -> f64 {
        match self {
            ThresholdSchedule::Constant { level } => *level,
            _ => self.level_for_year(t.max(0.0).floor() as usize + 1),
        }
    }

    /// Number of years the schedule is defined for, if it is finite.
    pub fn defined_years(&self) -> Option<usize> {
        match self {
            ThresholdSchedule::PiecewiseAnnual { levels } => Some(levels.len()),
            _ => None,
        }
    }
}

/// Pre-truncation event intensity λ(t), constant or piecewise constant.
///
/// Rates are absolute events-per-year levels. The numerical examples in this
/// crate use the constant case; the likelihood evaluators accept the
/// piecewise form as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IntensityFunction {
    Constant { rate: f64 },
    /// `rates[k]` applies on `[breakpoints[k-1], breakpoints[k])` with the
    /// first rate before the first breakpoint and the last one after the last;
    /// `rates.len() == breakpoints.len() + 1`.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        rates: Vec<f64>,
    },
}

impl IntensityFunction {
    /// The homogeneous intensity carrying the λ of `params`.
    pub fn homogeneous(params: &ModelParams) -> Self {
        IntensityFunction::Constant {
            rate: params.lambda(),
        }
    }

    /// Check levels are positive and breakpoints strictly increasing.
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Err(Error::invalid("intensity", detail));
        match self {
            IntensityFunction::Constant { rate } => {
                if !rate.is_finite() || *rate <= 0.0 {
                    return bad(format!("rate must be finite and positive, got {rate}"));
                }
            }
            IntensityFunction::PiecewiseConstant { breakpoints, rates } => {
                if rates.len() != breakpoints.len() + 1 {
                    return bad(format!(
                        "need one more rate than breakpoints, got {} rates for {} breakpoints",
                        rates.len(),
                        breakpoints.len()
                    ));
                }
                for rate in rates {
                    if !rate.is_finite() || *rate <= 0.0 {
                        return bad(format!("rates must be finite and positive, got {rate}"));
                    }
                }
                for pair in breakpoints.windows(2) {
                    if !(pair[0] < pair[1]) {
                        return bad("breakpoints must be strictly increasing".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// Intensity at elapsed time `t`.
    pub fn rate_at(&self, t: f64) -> f64 {
        match self {
            IntensityFunction::Constant { rate } => *rate,
            IntensityFunction::PiecewiseConstant { breakpoints, rates } => {
                let idx = breakpoints.partition_point(|&b| b <= t);
                rates[idx]
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, IntensityFunction::Constant { .. })
    }

    fn breakpoints(&self) -> &[f64] {
        match self {
            IntensityFunction::Constant { .. } => &[],
            IntensityFunction::PiecewiseConstant { breakpoints, .. } => breakpoints,
        }
    }
}

/// Observation period `[t_start, t_end]` with year boundaries at integer
/// offsets from the start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWindow")]
pub struct ObservationWindow {
    t_start: f64,
    t_end: f64,
}

#[derive(Deserialize)]
struct RawWindow {
    t_start: f64,
    t_end: f64,
}

impl TryFrom<RawWindow> for ObservationWindow {
    type Error = Error;
    fn try_from(raw: RawWindow) -> Result<Self> {
        ObservationWindow::new(raw.t_start, raw.t_end)
    }
}

impl ObservationWindow {
    pub fn new(t_start: f64, t_end: f64) -> Result<Self> {
        if !t_start.is_finite() || !t_end.is_finite() || t_end <= t_start {
            return Err(Error::invalid(
                "window",
                format!("need finite t_end > t_start, got [{t_start}, {t_end}]"),
            ));
        }
        Ok(Self { t_start, t_end })
    }

    /// A window of `years` whole years starting at time zero.
    pub fn whole_years(years: u32) -> Result<Self> {
        if years == 0 {
            return Err(Error::invalid("window", "need at least one year"));
        }
        Self::new(0.0, years as f64)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Window length `t_end − t_start` in years.
    pub fn length(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Years elapsed since the window start.
    pub fn elapsed(&self, t: f64) -> f64 {
        t - self.t_start
    }

    /// Number of whole observation years, if the length is a whole number.
    pub fn num_whole_years(&self) -> Result<usize> {
        let len = self.length();
        let rounded = len.round();
        if rounded < 1.0 || (len - rounded).abs() > YEAR_EPS * rounded.max(1.0) {
            return Err(Error::Domain(format!(
                "window length {len} is not a whole number of years"
            )));
        }
        Ok(rounded as usize)
    }

    /// 1-based year index of time `t`; events exactly at the window end are
    /// assigned to the final year.
    pub fn year_index(&self, t: f64) -> usize {
        let elapsed = self.elapsed(t);
        let last = self.length().ceil().max(1.0) as usize;
        (elapsed.floor() as usize + 1).min(last)
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.t_start && t <= self.t_end
    }
}

/// One reported (or simulated) loss event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossEvent {
    /// Event time in years (absolute, i.e. including the window start).
    pub time: f64,
    /// Loss amount in currency units.
    pub loss: f64,
}

/// A loss carrying only the 1-based year it occurred in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearLoss {
    pub year: usize,
    pub loss: f64,
}

/// The observations, in one of the two granularities the likelihoods support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Records {
    /// Full event times and losses, ordered by time.
    EventTimes(Vec<LossEvent>),
    /// Annual counts ñ_1..ñ_M plus losses tagged with their year.
    AnnualCounts {
        counts: Vec<u64>,
        losses: Vec<YearLoss>,
    },
}

/// Observed events above the reporting threshold, together with the window
/// they were collected over and the schedule that was in force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset")]
pub struct Dataset {
    records: Records,
    window: ObservationWindow,
    schedule: ThresholdSchedule,
}

#[derive(Deserialize)]
struct RawDataset {
    records: Records,
    window: ObservationWindow,
    schedule: ThresholdSchedule,
}

impl TryFrom<RawDataset> for Dataset {
    type Error = Error;
    fn try_from(raw: RawDataset) -> Result<Self> {
        match raw.records {
            Records::EventTimes(events) => Dataset::from_events(events, raw.window, raw.schedule),
            Records::AnnualCounts { counts, losses } => {
                Dataset::from_annual_counts(counts, losses, raw.window, raw.schedule)
            }
        }
    }
}

impl Dataset {
    /// Assemble an event-time dataset, checking ordering, window containment,
    /// threshold compliance and schedule coverage.
    pub fn from_events(
        events: Vec<LossEvent>,
        window: ObservationWindow,
        schedule: ThresholdSchedule,
    ) -> Result<Self> {
        schedule.validate()?;
        check_schedule_covers(&schedule, &window)?;
        let mut prev = window.t_start();
        for (index, event) in events.iter().enumerate() {
            if !event.time.is_finite() || !event.loss.is_finite() {
                return Err(Error::invalid(
                    "dataset",
                    format!("record {index} has non-finite fields"),
                ));
            }
            if event.time <= prev || event.time > window.t_end() {
                return Err(Error::invalid(
                    "dataset",
                    format!(
                        "event times must be strictly increasing within ({}, {}], record {index} has t = {}",
                        window.t_start(),
                        window.t_end(),
                        event.time
                    ),
                ));
            }
            let threshold = schedule.level_for_year(window.year_index(event.time));
            if event.loss < threshold {
                return Err(Error::BelowThreshold {
                    index,
                    loss: event.loss,
                    threshold,
                });
            }
            prev = event.time;
        }
        Ok(Self {
            records: Records::EventTimes(events),
            window,
            schedule,
        })
    }

    /// Assemble an annual-count dataset; the window must span whole years and
    /// the loss records must be consistent with the counts.
    pub fn from_annual_counts(
        counts: Vec<u64>,
        losses: Vec<YearLoss>,
        window: ObservationWindow,
        schedule: ThresholdSchedule,
    ) -> Result<Self> {
        schedule.validate()?;
        check_schedule_covers(&schedule, &window)?;
        let years = window.num_whole_years()?;
        if counts.len() != years {
            return Err(Error::invalid(
                "dataset",
                format!(
                    "need one count per observation year, got {} counts for {years} years",
                    counts.len()
                ),
            ));
        }
        let total: u64 = counts.iter().sum();
        if losses.len() as u64 != total {
            return Err(Error::invalid(
                "dataset",
                format!(
                    "counts sum to {total} but {} losses are recorded",
                    losses.len()
                ),
            ));
        }
        let mut per_year = vec![0u64; years];
        for (index, entry) in losses.iter().enumerate() {
            if entry.year < 1 || entry.year > years {
                return Err(Error::invalid(
                    "dataset",
                    format!("record {index} has year {} outside 1..={years}", entry.year),
                ));
            }
            let threshold = schedule.level_for_year(entry.year);
            if entry.loss < threshold {
                return Err(Error::BelowThreshold {
                    index,
                    loss: entry.loss,
                    threshold,
                });
            }
            per_year[entry.year - 1] += 1;
        }
        if per_year != counts {
            return Err(Error::invalid(
                "dataset",
                "per-year loss records do not match the annual counts",
            ));
        }
        Ok(Self {
            records: Records::AnnualCounts { counts, losses },
            window,
            schedule,
        })
    }

    pub fn records(&self) -> &Records {
        &self.records
    }

    pub fn window(&self) -> &ObservationWindow {
        &self.window
    }

    pub fn schedule(&self) -> &ThresholdSchedule {
        &self.schedule
    }

    /// Total number of reported events J.
    pub fn event_count(&self) -> usize {
        match &self.records {
            Records::EventTimes(events) => events.len(),
            Records::AnnualCounts { losses, .. } => losses.len(),
        }
    }

    pub fn is_event_times(&self) -> bool {
        matches!(self.records, Records::EventTimes(_))
    }

    /// Event records, if this dataset is in event-time form.
    pub fn events(&self) -> Option<&[LossEvent]> {
        match &self.records {
            Records::EventTimes(events) => Some(events),
            Records::AnnualCounts { .. } => None,
        }
    }

    /// Reporting level in force for an event at absolute time `t`: the level
    /// of the year `t` falls in, with the window end clamped to the final year.
    pub fn threshold_at(&self, t: f64) -> f64 {
        self.schedule.level_for_year(self.window.year_index(t))
    }

    /// The same observations re-validated against a different schedule.
    pub fn with_schedule(&self, schedule: ThresholdSchedule) -> Result<Self> {
        match self.records.clone() {
            Records::EventTimes(events) => Dataset::from_events(events, self.window, schedule),
            Records::AnnualCounts { counts, losses } => {
                Dataset::from_annual_counts(counts, losses, self.window, schedule)
            }
        }
    }
}

fn check_schedule_covers(schedule: &ThresholdSchedule, window: &ObservationWindow) -> Result<()> {
    if let Some(defined) = schedule.defined_years() {
        let needed = window.length().ceil() as usize;
        if defined < needed {
            return Err(Error::invalid(
                "schedule",
                format!("schedule defines {defined} years but the window spans {needed}"),
            ));
        }
    }
    Ok(())
}

/// Pareto survival `1 − F(x) = (1 + x/β)^(−α)`, the form used throughout to
/// avoid cancellation near the tail.
pub fn pareto_survival(x: f64, alpha: f64, beta: f64) -> f64 {
    (1.0 + x / beta).powf(-alpha)
}

/// Pareto cdf `F(x) = 1 − (1 + x/β)^(−α)` for x ≥ 0, α > 0, β > 0.
pub fn severity_cdf(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::Domain(format!(
            "severity parameters must be positive, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!(
            "severity cdf argument must be >= 0, got {x}"
        )));
    }
    Ok(1.0 - pareto_survival(x, alpha, beta))
}

/// Log-density of the left-truncated Pareto, `ln[f(x)/(1 − F(L))]` for x ≥ L.
///
/// The implied density integrates to one over `[L, ∞)`.
pub fn truncated_severity_logpdf(x: f64, alpha: f64, beta: f64, level: f64) -> Result<f64> {
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::Domain(format!(
            "severity parameters must be positive, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if level.is_nan() || level < 0.0 {
        return Err(Error::Domain(format!(
            "truncation level must be >= 0, got {level}"
        )));
    }
    if x.is_nan() || x < level {
        return Err(Error::Domain(format!(
            "observation {x} lies below its truncation level {level}"
        )));
    }
    // ln f(x) = ln(α/β) − (1+α)·ln(1 + x/β); ln(1 − F(L)) = −α·ln(1 + L/β).
    Ok((alpha / beta).ln() - (1.0 + alpha) * (1.0 + x / beta).ln()
        + alpha * (1.0 + level / beta).ln())
}

/// Intensity of the thinned process of reported events, `λ·(1 − F(L))`.
pub fn thinned_intensity(params: &ModelParams, level: f64) -> f64 {
    debug_assert!(level >= 0.0);
    params.lambda() * pareto_survival(level, params.alpha(), params.beta())
}

/// A maximal interval on which both the threshold and the intensity are constant.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Segment {
    pub duration: f64,
    pub level: f64,
    pub rate: f64,
}

/// Split `[t0, t1]` (elapsed years) into segments on which the schedule and
/// the intensity are both constant. Annual schedules break at integer years;
/// a constant schedule only breaks where the intensity does.
pub(crate) fn piecewise_segments(
    schedule: &ThresholdSchedule,
    intensity: &IntensityFunction,
    t0: f64,
    t1: f64,
) -> Vec<Segment> {
    debug_assert!(t1 >= t0);
    let mut cuts = vec![t0];
    if !matches!(schedule, ThresholdSchedule::Constant { .. }) {
        let mut year_edge = t0.floor() + 1.0;
        while year_edge < t1 {
            if year_edge > t0 {
                cuts.push(year_edge);
            }
            year_edge += 1.0;
        }
    }
    for &b in intensity.breakpoints() {
        if b > t0 && b < t1 {
            cuts.push(b);
        }
    }
    cuts.push(t1);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    cuts.windows(2)
        .filter(|pair| pair[1] > pair[0])
        .map(|pair| {
            let mid = 0.5 * (pair[0] + pair[1]);
            Segment {
                duration: pair[1] - pair[0],
                level: schedule.level_at(mid),
                rate: intensity.rate_at(mid),
            }
        })
        .collect()
}

/// Expected number of reported events over `[t, t+h]` (elapsed years):
/// `Λ(t, h) = ∫ λ(u)·(1 − F(L(u))) du`, evaluated as an exact finite sum over
/// the piecewise-constant segments of the schedule and the intensity.
pub fn cumulative_intensity(
    params: &ModelParams,
    schedule: &ThresholdSchedule,
    intensity: &IntensityFunction,
    t: f64,
    h: f64,
) -> Result<f64> {
    if !t.is_finite() || !h.is_finite() || t < 0.0 || h < 0.0 {
        return Err(Error::Domain(format!(
            "need elapsed time t >= 0 and duration h >= 0, got t = {t}, h = {h}"
        )));
    }
    if let Some(defined) = schedule.defined_years() {
        if t + h > defined as f64 + YEAR_EPS {
            return Err(Error::Domain(format!(
                "interval [{t}, {}] extends past the {defined} scheduled years",
                t + h
            )));
        }
    }
    if h == 0.0 {
        return Ok(0.0);
    }
    let total = piecewise_segments(schedule, intensity, t, t + h)
        .iter()
        .map(|seg| {
            seg.rate * pareto_survival(seg.level, params.alpha(), params.beta()) * seg.duration
        })
        .sum();
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64, alpha: f64, beta: f64) -> ModelParams {
        ModelParams::new(lambda, alpha, beta).unwrap()
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(ModelParams::new(0.0, 2.0, 3.0).is_err());
        assert!(ModelParams::new(50.0, -1.0, 3.0).is_err());
        assert!(ModelParams::new(50.0, 2.0, f64::NAN).is_err());
        assert!(ModelParams::new(50.0, 2.0, f64::INFINITY).is_err());
    }

    #[test]
    fn severity_cdf_matches_hand_values() {
        assert_eq!(severity_cdf(0.0, 2.0, 3.0).unwrap(), 0.0);
        // 1 − (5/3)^(−2) = 1 − 9/25 = 0.64
        let v = severity_cdf(2.0, 2.0, 3.0).unwrap();
        assert!((v - 0.64).abs() < 1e-15, "got {v}");
        assert!((severity_cdf(1e300, 2.0, 3.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(severity_cdf(-0.5, 2.0, 3.0).is_err());
        assert!(severity_cdf(1.0, 0.0, 3.0).is_err());
    }

    #[test]
    fn truncated_logpdf_matches_hand_values() {
        // f_L(2) with α=2, β=3, L=2: (2/3)(5/3)^{-3} / (5/3)^{-2} = 2/5.
        let v = truncated_severity_logpdf(2.0, 2.0, 3.0, 2.0).unwrap();
        assert!((v - 0.4f64.ln()).abs() < 1e-14, "got {v}");
        // L = 0 reduces to the untruncated density α/β at the origin.
        let v0 = truncated_severity_logpdf(0.0, 2.0, 3.0, 0.0).unwrap();
        assert!((v0 - (2.0f64 / 3.0).ln()).abs() < 1e-14);
        assert!(truncated_severity_logpdf(1.0, 2.0, 3.0, 2.0).is_err());
    }

    #[test]
    fn truncated_density_mass_is_one() {
        // Composite Simpson in y = ln(1 + x/β) over [L, L + 1e6·β]. The cutoff
        // tail mass (1 + 1e6)^{-α} stays below 1e-7 for the α range checked.
        for &(alpha, beta, level) in &[(1.5f64, 3.0f64, 2.0f64), (2.0, 3.0, 0.0), (4.0, 0.5, 7.0)] {
            let y0 = (1.0 + level / beta).ln();
            let y1 = (1.0 + (level + 1e6 * beta) / beta).ln();
            let n = 200_000;
            let h = (y1 - y0) / n as f64;
            let integrand = |y: f64| {
                // Clamp away the rounding of exp(ln(1 + L/β)) just below L.
                let x = (beta * (y.exp() - 1.0)).max(level);
                // dx = β e^y dy
                truncated_severity_logpdf(x, alpha, beta, level)
                    .unwrap()
                    .exp()
                    * beta
                    * y.exp()
            };
            let mut sum = integrand(y0) + integrand(y1);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                sum += w * integrand(y0 + i as f64 * h);
            }
            let mass = sum * h / 3.0;
            assert!((mass - 1.0).abs() < 1e-6, "mass {mass} for α={alpha}");
        }
    }

    #[test]
    fn thinned_intensity_hand_values() {
        let p = params(50.0, 2.0, 3.0);
        // 50·(1 + 2/3)^{-2} = 50·9/25 = 18.
        assert!((thinned_intensity(&p, 2.0) - 18.0).abs() < 1e-12);
        assert_eq!(thinned_intensity(&p, 0.0), 50.0);
        assert!(thinned_intensity(&p, 1e30) < 1e-12);
    }

    #[test]
    fn thinned_intensity_nonincreasing_in_level() {
        let p = params(50.0, 2.0, 3.0);
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let level = i as f64 * 0.37;
            let theta = thinned_intensity(&p, level);
            assert!(theta <= prev + 1e-15);
            assert!(theta > 0.0 && theta <= p.lambda());
            prev = theta;
        }
    }

    #[test]
    fn cumulative_intensity_constant_case() {
        let p = params(50.0, 2.0, 3.0);
        let schedule = ThresholdSchedule::Constant { level: 2.0 };
        let intensity = IntensityFunction::homogeneous(&p);
        let v = cumulative_intensity(&p, &schedule, &intensity, 0.3, 1.0).unwrap();
        // Exactly θ·h: a single segment, no quadrature.
        assert_eq!(v, thinned_intensity(&p, 2.0) * 1.0);
        assert!((v - 18.0).abs() < 1e-12);
        assert_eq!(
            cumulative_intensity(&p, &schedule, &intensity, 0.3, 0.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn cumulative_intensity_exponential_schedule_oracle() {
        // Direct five-term summation of 50·Σ (1 + (2/3)·e^{0.03 m})^{-2}.
        let p = params(50.0, 2.0, 3.0);
        let schedule = ThresholdSchedule::ExponentialAnnual {
            base: 2.0,
            rate: 0.03,
        };
        let intensity = IntensityFunction::homogeneous(&p);
        let direct: f64 = (1..=5)
            .map(|m| 50.0 * (1.0 + (2.0 / 3.0) * (0.03 * m as f64).exp()).powi(-2))
            .sum();
        let v = cumulative_intensity(&p, &schedule, &intensity, 0.0, 5.0).unwrap();
        assert!((v - direct).abs() < 1e-12, "{v} vs {direct}");
        assert!((v - 83.6).abs() < 0.1, "expected ≈ 83.6, got {v}");
    }

    #[test]
    fn cumulative_intensity_is_additive() {
        let p = params(37.0, 1.7, 2.2);
        let schedule = ThresholdSchedule::ExponentialAnnual {
            base: 1.5,
            rate: 0.05,
        };
        let intensity = IntensityFunction::PiecewiseConstant {
            breakpoints: vec![1.3, 3.7],
            rates: vec![30.0, 45.0, 40.0],
        };
        for &(t, h1, h2) in &[(0.0, 1.0, 4.0), (0.4, 0.9, 2.31), (2.0, 0.0, 3.0)] {
            let whole = cumulative_intensity(&p, &schedule, &intensity, t, h1 + h2).unwrap();
            let left = cumulative_intensity(&p, &schedule, &intensity, t, h1).unwrap();
            let right = cumulative_intensity(&p, &schedule, &intensity, t + h1, h2).unwrap();
            assert!((whole - (left + right)).abs() <= 1e-12 * whole.abs().max(1.0));
        }
    }

    #[test]
    fn cumulative_intensity_rejects_interval_outside_schedule() {
        let p = params(50.0, 2.0, 3.0);
        let schedule = ThresholdSchedule::PiecewiseAnnual {
            levels: vec![2.0, 2.1],
        };
        let intensity = IntensityFunction::homogeneous(&p);
        assert!(cumulative_intensity(&p, &schedule, &intensity, 0.0, 2.0).is_ok());
        assert!(cumulative_intensity(&p, &schedule, &intensity, 1.0, 1.5).is_err());
        assert!(cumulative_intensity(&p, &schedule, &intensity, -0.5, 1.0).is_err());
    }

    #[test]
    fn exponential_schedule_year_indexing_starts_at_one() {
        let schedule = ThresholdSchedule::ExponentialAnnual {
            base: 2.0,
            rate: 0.03,
        };
        // First observation year carries L_1 = 2·e^{0.03}, per the m = 1 convention.
        assert!((schedule.level_at(0.0) - 2.0 * 0.03f64.exp()).abs() < 1e-15);
        assert!((schedule.level_at(0.999) - 2.0 * 0.03f64.exp()).abs() < 1e-15);
        assert!((schedule.level_at(1.0) - 2.0 * 0.06f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn dataset_rejects_threshold_violations() {
        let window = ObservationWindow::whole_years(2).unwrap();
        let schedule = ThresholdSchedule::Constant { level: 2.0 };
        let events = vec![
            LossEvent {
                time: 0.5,
                loss: 3.0,
            },
            LossEvent {
                time: 1.5,
                loss: 1.0,
            },
        ];
        let err = Dataset::from_events(events, window, schedule).unwrap_err();
        match err {
            Error::BelowThreshold { index, .. } => assert_eq!(index, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn dataset_rejects_unordered_times() {
        let window = ObservationWindow::whole_years(2).unwrap();
        let schedule = ThresholdSchedule::Constant { level: 0.0 };
        let events = vec![
            LossEvent {
                time: 1.5,
                loss: 3.0,
            },
            LossEvent {
                time: 0.5,
                loss: 1.0,
            },
        ];
        assert!(Dataset::from_events(events, window, schedule).is_err());
    }

    #[test]
    fn annual_counts_must_balance() {
        let window = ObservationWindow::whole_years(2).unwrap();
        let schedule = ThresholdSchedule::Constant { level: 0.0 };
        let losses = vec![
            YearLoss {
                year: 1,
                loss: 1.0,
            },
            YearLoss {
                year: 2,
                loss: 2.0,
            },
        ];
        assert!(
            Dataset::from_annual_counts(vec![1, 1], losses.clone(), window, schedule.clone())
                .is_ok()
        );
        assert!(Dataset::from_annual_counts(vec![2, 0], losses, window, schedule).is_err());
    }
}
