//! Exact log-likelihoods and analytic score for truncated data.
//!
//! Two data granularities are supported. For event times, the reported
//! process is a (generally non-homogeneous) Poisson process with intensity
//! `θ(t) = λ(t)·(1 − F(L(t)))` and the log-likelihood is
//!
//! ```text
//! ℓ = Σ_j ln f(x_j) + Σ_j ln λ(t_j) − Λ(t0, T),
//! Λ(t0, T) = ∫ λ(u)·(1 − F(L(u))) du
//! ```
//!
//! (ordering constants dropped; note the *untruncated* severity density: the
//! truncation normalizer cancels against the thinned exposure). For annual
//! counts the per-year counts are Poisson with mean `θ_m = λ·(1 − F(L_m))`
//! and losses carry their year's truncation:
//!
//! ```text
//! ℓ = Σ_j ln f_{L_m(j)}(x_j) + Σ_m ln p(n_m | θ_m).
//! ```
//!
//! Values from the two shapes are not comparable to each other — each drops
//! different constants. Only differences and ratios within one shape matter
//! for estimation and sampling.
//!
//! Everything here is pure and reentrant; optimizers and samplers may
//! evaluate concurrently.

use crate::error::{Error, Result};
use crate::model::{
    pareto_survival, piecewise_segments, truncated_severity_logpdf, Dataset, IntensityFunction,
    ModelParams, Records,
};

/// A log-likelihood value with an optional gradient in (λ, α, β) order.
///
/// The evaluators return `gradient: None`; [`score_event_times`] computes the
/// analytic gradient where it exists (constant intensity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikValue {
    pub value: f64,
    pub gradient: Option<[f64; 3]>,
}

impl LogLikValue {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            gradient: None,
        }
    }

    pub fn with_gradient(mut self, gradient: [f64; 3]) -> Self {
        self.gradient = Some(gradient);
        self
    }
}

/// Log-likelihood of the dataset under the homogeneous model, dispatching on
/// the data shape. This is the evaluation the fitting and sampling routines
/// use.
pub fn loglik(params: &ModelParams, data: &Dataset) -> Result<LogLikValue> {
    match data.records() {
        Records::EventTimes(_) => {
            loglik_event_times(params, data, &IntensityFunction::homogeneous(params))
        }
        Records::AnnualCounts { .. } => loglik_annual_counts(params, data),
    }
}

/// Event-time log-likelihood with an explicit pre-truncation intensity λ(t).
///
/// The severity parameters come from `params`; the frequency comes entirely
/// from `intensity` (pass [`IntensityFunction::homogeneous`] for the standard
/// model, which uses `params.lambda()`).
pub fn loglik_event_times(
    params: &ModelParams,
    data: &Dataset,
    intensity: &IntensityFunction,
) -> Result<LogLikValue> {
    intensity.validate()?;
    let events = data
        .events()
        .ok_or_else(|| Error::Domain("event-time likelihood needs event-time data".into()))?;
    let window = data.window();
    let alpha = params.alpha();
    let beta = params.beta();

    let mut value = 0.0;
    for event in events {
        // ln f(x) = ln(α/β) − (1+α)·ln(1 + x/β)
        value += (alpha / beta).ln() - (1.0 + alpha) * (1.0 + event.loss / beta).ln();
        value += intensity.rate_at(window.elapsed(event.time)).ln();
    }
    let exposure = crate::model::cumulative_intensity(
        params,
        data.schedule(),
        intensity,
        0.0,
        window.length(),
    )?;
    Ok(LogLikValue::new(value - exposure))
}

/// Event-time log-likelihood with the threshold held constant between
/// consecutive reported events (and at its final value to the window end).
///
/// This replaces the exact exposure integral with
/// `Σ_j (1 − F(L(t_j)))·τ_j + (1 − F(L(t_E)))·(t_E − t_J)`,
/// a useful approximation for irregular schedules when events are frequent.
/// For a constant schedule it is exact. Annual schedules do not need it —
/// [`loglik_event_times`] already evaluates them exactly.
pub fn loglik_event_times_between_events(
    params: &ModelParams,
    data: &Dataset,
) -> Result<LogLikValue> {
    let events = data
        .events()
        .ok_or_else(|| Error::Domain("event-time likelihood needs event-time data".into()))?;
    let window = data.window();
    let lambda = params.lambda();
    let alpha = params.alpha();
    let beta = params.beta();

    let mut value = 0.0;
    let mut integral = 0.0;
    let mut prev = 0.0;
    for event in events {
        let t = window.elapsed(event.time);
        value += (alpha / beta).ln() - (1.0 + alpha) * (1.0 + event.loss / beta).ln();
        integral += pareto_survival(data.threshold_at(event.time), alpha, beta) * (t - prev);
        prev = t;
    }
    let t_end = window.length();
    let end_level = data.schedule().level_for_year(window.year_index(window.t_end()));
    integral += pareto_survival(end_level, alpha, beta) * (t_end - prev);
    value += events.len() as f64 * lambda.ln() - lambda * integral;
    Ok(LogLikValue::new(value))
}

/// Annual-count log-likelihood: truncated severity terms plus the full
/// Poisson pmf of each year's count at its thinned mean.
pub fn loglik_annual_counts(params: &ModelParams, data: &Dataset) -> Result<LogLikValue> {
    let (counts, losses) = match data.records() {
        Records::AnnualCounts { counts, losses } => (counts, losses),
        Records::EventTimes(_) => {
            return Err(Error::Domain(
                "annual-count likelihood needs annual-count data".into(),
            ))
        }
    };
    let lambda = params.lambda();
    let alpha = params.alpha();
    let beta = params.beta();
    let schedule = data.schedule();

    let mut value = 0.0;
    for entry in losses {
        value += truncated_severity_logpdf(
            entry.loss,
            alpha,
            beta,
            schedule.level_for_year(entry.year),
        )?;
    }
    for (m, &n) in counts.iter().enumerate() {
        let theta = lambda * pareto_survival(schedule.level_for_year(m + 1), alpha, beta);
        value += poisson_logpmf(n, theta);
    }
    Ok(LogLikValue::new(value))
}

/// `ln p(n | θ) = n·ln θ − θ − ln n!`, with the θ = 0 edge handled exactly.
fn poisson_logpmf(n: u64, theta: f64) -> f64 {
    if theta == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    n as f64 * theta.ln() - theta - statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}

/// Analytic gradient (∂/∂λ, ∂/∂α, ∂/∂β) of the event-time log-likelihood,
/// for constant intensity `params.lambda()` and the dataset's (piecewise
/// constant) schedule.
pub fn score_event_times(params: &ModelParams, data: &Dataset) -> Result<[f64; 3]> {
    let events = data
        .events()
        .ok_or_else(|| Error::Domain("event-time score needs event-time data".into()))?;
    let window = data.window();
    let lambda = params.lambda();
    let alpha = params.alpha();
    let beta = params.beta();
    let j = events.len() as f64;

    // Severity sums.
    let mut sum_ln1p = 0.0; // Σ ln(1 + x/β)
    let mut sum_ratio = 0.0; // Σ x / (1 + x/β)
    for event in events {
        sum_ln1p += (1.0 + event.loss / beta).ln();
        sum_ratio += event.loss / (1.0 + event.loss / beta);
    }

    // Exposure integral I = ∫ (1 − F(L(u))) du and its α, β derivatives,
    // summed exactly over the constant-threshold segments.
    let segments = piecewise_segments(
        data.schedule(),
        &IntensityFunction::Constant { rate: 1.0 },
        0.0,
        window.length(),
    );
    let mut integral = 0.0;
    let mut d_alpha = 0.0; // ∂I/∂α = −Σ d·S(L)·ln(1 + L/β)
    let mut d_beta = 0.0; // ∂I/∂β = Σ d·α·L/β²·(1 + L/β)^(−α−1)
    for seg in &segments {
        let surv = pareto_survival(seg.level, alpha, beta);
        integral += seg.duration * surv;
        if seg.level > 0.0 && seg.level.is_finite() {
            let ln1p_level = (1.0 + seg.level / beta).ln();
            d_alpha -= seg.duration * surv * ln1p_level;
            d_beta += seg.duration * alpha * seg.level / (beta * beta)
                * (1.0 + seg.level / beta).powf(-alpha - 1.0);
        }
    }

    let g_lambda = j / lambda - integral;
    let g_alpha = j / alpha - sum_ln1p - lambda * d_alpha;
    let g_beta = -j / beta + (1.0 + alpha) / (beta * beta) * sum_ratio - lambda * d_beta;
    Ok([g_lambda, g_alpha, g_beta])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LossEvent, ObservationWindow, ThresholdSchedule};
    use crate::simulate::{apply_threshold, simulate_events, to_annual_counts, SimConfig};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn params(lambda: f64, alpha: f64, beta: f64) -> ModelParams {
        ModelParams::new(lambda, alpha, beta).unwrap()
    }

    fn dataset(events: Vec<(f64, f64)>, years: u32, schedule: ThresholdSchedule) -> Dataset {
        Dataset::from_events(
            events
                .into_iter()
                .map(|(time, loss)| LossEvent { time, loss })
                .collect(),
            ObservationWindow::whole_years(years).unwrap(),
            schedule,
        )
        .unwrap()
    }

    /// Direct constant-threshold form: J·ln λ − λ(1 − F(L))·T + Σ ln f(x_j).
    fn constant_threshold_direct(p: &ModelParams, xs: &[f64], level: f64, t: f64) -> f64 {
        let (l, a, b) = (p.lambda(), p.alpha(), p.beta());
        let mut v = xs.len() as f64 * l.ln() - l * pareto_survival(level, a, b) * t;
        for &x in xs {
            v += (a / b).ln() - (1.0 + a) * (1.0 + x / b).ln();
        }
        v
    }

    #[test]
    fn no_events_leaves_only_the_survival_term() {
        let p = params(50.0, 2.0, 3.0);
        let data = dataset(vec![], 5, ThresholdSchedule::Constant { level: 2.0 });
        let v = loglik(&p, &data).unwrap().value;
        assert!((v - (-18.0 * 5.0)).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn constant_schedule_reduces_to_direct_form() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..100 {
            let p = params(
                rng.random_range(2.0..200.0),
                rng.random_range(0.8..5.0),
                rng.random_range(0.5..8.0),
            );
            let level = rng.random_range(0.0..4.0);
            let years = rng.random_range(1..=5);
            let config = SimConfig {
                true_params: p,
                schedule: ThresholdSchedule::Constant { level },
                years,
                seed: rng.random(),
            };
            let data = apply_threshold(&simulate_events(&config).unwrap(), &config.schedule)
                .unwrap();
            let xs: Vec<f64> = data.events().unwrap().iter().map(|e| e.loss).collect();
            let direct = constant_threshold_direct(&p, &xs, level, years as f64);
            let v = loglik(&p, &data).unwrap().value;
            assert!(
                (v - direct).abs() <= 1e-10 * direct.abs().max(1.0),
                "{v} vs {direct}"
            );
        }
    }

    #[test]
    fn two_event_exponential_schedule_oracle() {
        // Term-by-term hand evaluation with L_1 = 2e^{0.03}, L_2 = 2e^{0.06}.
        let p = params(50.0, 2.0, 3.0);
        let schedule = ThresholdSchedule::ExponentialAnnual {
            base: 2.0,
            rate: 0.03,
        };
        let data = dataset(vec![(0.5, 3.0), (1.5, 4.0)], 2, schedule);
        let l1 = 2.0 * 0.03f64.exp();
        let l2 = 2.0 * 0.06f64.exp();
        let expected = 2.0 * (2.0f64 / 3.0).ln()
            - 3.0 * ((1.0f64 + 3.0 / 3.0).ln() + (1.0f64 + 4.0 / 3.0).ln())
            + 2.0 * 50.0f64.ln()
            - 50.0 * ((1.0 + l1 / 3.0).powi(-2) + (1.0 + l2 / 3.0).powi(-2));
        let v = loglik(&p, &data).unwrap().value;
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
    }

    #[test]
    fn annual_counts_zero_counts_case() {
        let p = params(50.0, 2.0, 3.0);
        let schedule = ThresholdSchedule::PiecewiseAnnual {
            levels: vec![2.0, 3.0],
        };
        let data = Dataset::from_annual_counts(
            vec![0, 0],
            vec![],
            ObservationWindow::whole_years(2).unwrap(),
            schedule,
        )
        .unwrap();
        let theta1 = 50.0 * pareto_survival(2.0, 2.0, 3.0);
        let theta2 = 50.0 * pareto_survival(3.0, 2.0, 3.0);
        let v = loglik(&p, &data).unwrap().value;
        assert!((v - (-(theta1 + theta2))).abs() < 1e-12);
    }

    #[test]
    fn annual_counts_profile_rate_zeroes_the_lambda_score() {
        // counts (10, 10) at constant level 2: λ̂ = 20 / (2·0.36) = 27.77…;
        // the λ-derivative of the annual likelihood vanishes there.
        let lambda_hat = 20.0 / 0.72;
        let schedule = ThresholdSchedule::Constant { level: 2.0 };
        let losses: Vec<crate::model::YearLoss> = (0..20)
            .map(|i| crate::model::YearLoss {
                year: 1 + (i % 2),
                loss: 2.5 + 0.1 * i as f64,
            })
            .collect();
        let data = Dataset::from_annual_counts(
            vec![10, 10],
            losses,
            ObservationWindow::whole_years(2).unwrap(),
            schedule,
        )
        .unwrap();
        let h = 1e-6 * lambda_hat;
        let up = loglik(&params(lambda_hat + h, 2.0, 3.0), &data).unwrap().value;
        let down = loglik(&params(lambda_hat - h, 2.0, 3.0), &data).unwrap().value;
        let deriv = (up - down) / (2.0 * h);
        assert!(deriv.abs() < 1e-8, "∂ℓ/∂λ = {deriv}");
    }

    #[test]
    fn zero_threshold_annual_matches_untruncated_composition() {
        let p = params(30.0, 2.0, 3.0);
        let data = dataset(
            vec![(0.25, 1.0), (0.5, 0.3), (0.75, 5.0)],
            1,
            ThresholdSchedule::Constant { level: 0.0 },
        );
        let annual = to_annual_counts(&data).unwrap();
        let mut expected = 0.0;
        for &x in &[1.0, 0.3, 5.0] {
            expected += truncated_severity_logpdf(x, 2.0, 3.0, 0.0).unwrap();
        }
        expected += 3.0 * 30.0f64.ln() - 30.0 - statrs::function::gamma::ln_gamma(4.0);
        let v = loglik(&p, &annual).unwrap().value;
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn event_and_annual_forms_rank_parameters_consistently() {
        // The two shapes drop different constants but share the optimum; a
        // better parameter point under one form must be better under the other.
        let config = SimConfig::standard(5, 8);
        let data = apply_threshold(&simulate_events(&config).unwrap(), &config.schedule).unwrap();
        let annual = to_annual_counts(&data).unwrap();
        let good = params(50.0, 2.0, 3.0);
        let worse = params(80.0, 1.2, 6.0);
        let d_events =
            loglik(&good, &data).unwrap().value - loglik(&worse, &data).unwrap().value;
        let d_annual =
            loglik(&good, &annual).unwrap().value - loglik(&worse, &annual).unwrap().value;
        assert!(d_events > 0.0 && d_annual > 0.0);
    }

    #[test]
    fn score_matches_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let config = SimConfig::standard(5, 3);
        let data = apply_threshold(&simulate_events(&config).unwrap(), &config.schedule).unwrap();
        for _ in 0..100 {
            let p = params(
                rng.random_range(5.0..150.0),
                rng.random_range(0.8..5.0),
                rng.random_range(0.8..7.0),
            );
            let analytic = score_event_times(&p, &data).unwrap();
            let raw = p.to_array();
            for i in 0..3 {
                let h = 1e-5 * raw[i].abs();
                let mut up = raw;
                up[i] += h;
                let mut down = raw;
                down[i] -= h;
                let fd = (loglik(&ModelParams::from_array(up).unwrap(), &data)
                    .unwrap()
                    .value
                    - loglik(&ModelParams::from_array(down).unwrap(), &data)
                        .unwrap()
                        .value)
                    / (2.0 * h);
                let tol = 1e-6 * fd.abs().max(1.0);
                assert!(
                    (analytic[i] - fd).abs() < tol,
                    "coord {i}: {} vs {fd}",
                    analytic[i]
                );
            }
        }
    }

    #[test]
    fn zero_level_alpha_score_is_untruncated() {
        let p = params(50.0, 2.0, 3.0);
        let data = dataset(
            vec![(0.5, 1.0), (1.5, 2.0), (2.5, 4.0)],
            3,
            ThresholdSchedule::Constant { level: 0.0 },
        );
        let score = score_event_times(&p, &data).unwrap();
        let expected = 3.0 / 2.0
            - ((1.0f64 + 1.0 / 3.0).ln() + (1.0f64 + 2.0 / 3.0).ln() + (1.0f64 + 4.0 / 3.0).ln());
        assert!((score[1] - expected).abs() < 1e-12);
    }

    #[test]
    fn lambda_score_vanishes_at_profile_value() {
        let config = SimConfig::standard(5, 21);
        let data = apply_threshold(&simulate_events(&config).unwrap(), &config.schedule).unwrap();
        let j = data.event_count() as f64;
        // I = Λ/λ is λ-free; the profile rate is J/I.
        let p0 = params(1.0, 2.2, 2.7);
        let exposure = crate::model::cumulative_intensity(
            &p0,
            data.schedule(),
            &IntensityFunction::Constant { rate: 1.0 },
            0.0,
            data.window().length(),
        )
        .unwrap();
        let profiled = params(j / exposure, 2.2, 2.7);
        let score = score_event_times(&profiled, &data).unwrap();
        assert!(score[0].abs() < 1e-9 * j, "∂ℓ/∂λ = {}", score[0]);
    }

    #[test]
    fn between_events_mode_is_exact_for_constant_schedules() {
        let p = params(50.0, 2.0, 3.0);
        let config = SimConfig {
            true_params: p,
            schedule: ThresholdSchedule::Constant { level: 2.0 },
            years: 3,
            seed: 17,
        };
        let data = apply_threshold(&simulate_events(&config).unwrap(), &config.schedule).unwrap();
        let exact = loglik(&p, &data).unwrap().value;
        let held = loglik_event_times_between_events(&p, &data).unwrap().value;
        assert!((exact - held).abs() < 1e-10 * exact.abs());
    }

    #[test]
    fn between_events_mode_approximates_annual_exposure() {
        let config = SimConfig::standard(5, 29);
        let data = apply_threshold(&simulate_events(&config).unwrap(), &config.schedule).unwrap();
        let p = params(50.0, 2.0, 3.0);
        let exact = loglik(&p, &data).unwrap().value;
        let held = loglik_event_times_between_events(&p, &data).unwrap().value;
        // ~18 reported events per year keeps the held-threshold error small.
        assert!(
            (exact - held).abs() < 0.02 * exact.abs(),
            "{exact} vs {held}"
        );
    }

    #[test]
    fn loglik_is_finite_across_the_positive_orthant() {
        let config = SimConfig::standard(3, 55);
        let data = apply_threshold(&simulate_events(&config).unwrap(), &config.schedule).unwrap();
        let annual = to_annual_counts(&data).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..200 {
            let p = params(
                10f64.powf(rng.random_range(-3.0..3.0)),
                10f64.powf(rng.random_range(-2.0..1.5)),
                10f64.powf(rng.random_range(-2.0..2.0)),
            );
            assert!(loglik(&p, &data).unwrap().value.is_finite());
            assert!(loglik(&p, &annual).unwrap().value.is_finite());
        }
    }
}
