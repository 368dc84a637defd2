//! Maximum likelihood estimation.
//!
//! The intensity MLE has the closed form `λ̂ = J / ∫(1 − F(L(t)|β̂)) dt`
//! (event times) or `λ̂ = Σ n_m / Σ (1 − F(L_m|β̂))` (annual counts), so the
//! likelihood is profiled: quasi-Newton iteration runs over `(ln α, ln β)`
//! only, with λ substituted at its maximizer. Log-parameters make the
//! problem unconstrained.
//!
//! Three modes are provided: `Joint` (the profiled full likelihood),
//! `Marginal` (severity parameters from the truncated severity terms alone,
//! λ̂ recovered afterwards) and `Misspecified` (a joint fit that wrongly
//! assumes a constant threshold, for bias studies).
//!
//! Covariances come from the observed information matrix: the inverse of the
//! negative Hessian of the log-likelihood at the estimate, with the Hessian
//! computed by central finite differences.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{loglik, score_event_times};
use crate::model::{
    pareto_survival, piecewise_segments, Dataset, IntensityFunction, ModelParams, Records,
    ThresholdSchedule,
};
use crate::optim::{minimize, BfgsOptions};

/// Which objective produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MleMode {
    Joint,
    Marginal,
    Misspecified,
}

/// A symmetric 3×3 covariance in (λ, α, β) order.
pub type Covariance = [[f64; 3]; 3];

/// A maximum likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleResult {
    pub params_hat: ModelParams,
    /// Observed-information covariance; withheld when the negative Hessian is
    /// singular or not positive definite.
    pub covariance: Option<Covariance>,
    pub mode: MleMode,
    /// True when the optimizer met its tolerances and no nearby perturbation
    /// improved on the optimum.
    pub converged: bool,
    /// Full-model log-likelihood at the estimate (also for marginal fits).
    pub loglik_at_optimum: f64,
    pub iterations: usize,
}

impl MleResult {
    /// Standard errors: square roots of the covariance diagonal.
    pub fn standard_errors(&self) -> Option<[f64; 3]> {
        self.covariance
            .map(|c| [c[0][0].sqrt(), c[1][1].sqrt(), c[2][2].sqrt()])
    }
}

/// Exposure denominator for the profile rate: `∫ (1 − F(L(t))) dt` over the
/// window for event-time data, `Σ_m (1 − F(L_m))` for annual counts.
fn profile_denominator(alpha: f64, beta: f64, data: &Dataset) -> f64 {
    match data.records() {
        Records::EventTimes(_) => piecewise_segments(
            data.schedule(),
            &IntensityFunction::Constant { rate: 1.0 },
            0.0,
            data.window().length(),
        )
        .iter()
        .map(|seg| seg.duration * pareto_survival(seg.level, alpha, beta))
        .sum(),
        Records::AnnualCounts { counts, .. } => (1..=counts.len())
            .map(|m| pareto_survival(data.schedule().level_for_year(m), alpha, beta))
            .sum(),
    }
}

/// Closed-form intensity MLE given severity parameters.
pub fn profile_lambda(alpha: f64, beta: f64, data: &Dataset) -> Result<f64> {
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::Domain(format!(
            "severity parameters must be positive, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if data.event_count() == 0 {
        return Err(Error::NoEvents);
    }
    let denom = profile_denominator(alpha, beta, data);
    if !(denom > 0.0) {
        return Err(Error::Domain(
            "every reporting level is effectively infinite; the rate is unidentified".into(),
        ));
    }
    Ok(data.event_count() as f64 / denom)
}

/// Default initializer: tail ratio of the top decile for α, the median for β,
/// the naive count rate for λ. Crude on purpose; the optimizer does the rest.
pub fn default_init(data: &Dataset) -> Result<ModelParams> {
    let mut losses: Vec<f64> = match data.records() {
        Records::EventTimes(events) => events.iter().map(|e| e.loss).collect(),
        Records::AnnualCounts { losses, .. } => losses.iter().map(|l| l.loss).collect(),
    };
    if losses.is_empty() {
        return Err(Error::NoEvents);
    }
    losses.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = losses.len();
    let median = losses[n / 2].max(1e-12);
    let x90 = losses[(9 * n) / 10].max(1e-12);
    let tail: Vec<f64> = losses
        .iter()
        .filter(|&&x| x > x90)
        .map(|&x| (x / x90).ln())
        .collect();
    let alpha = if tail.is_empty() {
        2.0
    } else {
        let hill = tail.iter().sum::<f64>() / tail.len() as f64;
        (1.0 / hill.max(1e-6)).clamp(0.3, 20.0)
    };
    let beta = (median / (2f64.powf(1.0 / alpha) - 1.0)).clamp(1e-3, 1e6);
    let lambda = (n as f64 / data.window().length()).max(1e-6);
    ModelParams::new(lambda, alpha, beta)
}

/// Profiled negative log-likelihood over `z = (ln α, ln β)`, with its
/// gradient. At the profile rate the λ-score vanishes, so the profiled
/// gradient is the (α, β) score evaluated there (scaled by α, β for the log
/// parameterization). Event-time data uses the analytic score; annual counts
/// fall back to central differences.
fn profiled_objective(data: &Dataset) -> impl Fn(&[f64]) -> (f64, Vec<f64>) + '_ {
    let analytic = data.is_event_times();
    move |z: &[f64]| {
        let eval = |z: &[f64]| -> Option<(f64, ModelParams)> {
            let (alpha, beta) = (z[0].exp(), z[1].exp());
            if !(1e-8..=1e8).contains(&alpha) || !(1e-8..=1e8).contains(&beta) {
                return None;
            }
            let lambda = profile_lambda(alpha, beta, data).ok()?;
            if !lambda.is_finite() || lambda <= 0.0 {
                return None;
            }
            let params = ModelParams::new(lambda, alpha, beta).ok()?;
            let value = loglik(&params, data).ok()?.value;
            value.is_finite().then_some((value, params))
        };
        let Some((value, params)) = eval(z) else {
            return (f64::INFINITY, vec![0.0, 0.0]);
        };
        let grad = if analytic {
            match score_event_times(&params, data) {
                Ok(score) => vec![-params.alpha() * score[1], -params.beta() * score[2]],
                Err(_) => vec![0.0, 0.0],
            }
        } else {
            let mut g = vec![0.0, 0.0];
            let h = 1e-6;
            for (i, slot) in g.iter_mut().enumerate() {
                let mut up = z.to_vec();
                up[i] += h;
                let mut down = z.to_vec();
                down[i] -= h;
                if let (Some((fu, _)), Some((fd, _))) = (eval(&up), eval(&down)) {
                    *slot = -(fu - fd) / (2.0 * h);
                }
            }
            g
        };
        (-value, grad)
    }
}

/// Negative truncated-severity log-likelihood (the marginal objective) over
/// `z = (ln α, ln β)`, with analytic gradient. `losses` pairs each loss with
/// the level in force when it occurred.
fn marginal_objective(losses: &[(f64, f64)]) -> impl Fn(&[f64]) -> (f64, Vec<f64>) + '_ {
    move |z: &[f64]| {
        let (alpha, beta) = (z[0].exp(), z[1].exp());
        if !(1e-8..=1e8).contains(&alpha) || !(1e-8..=1e8).contains(&beta) {
            return (f64::INFINITY, vec![0.0, 0.0]);
        }
        let mut value = 0.0;
        let mut g_alpha = 0.0;
        let mut g_beta = 0.0;
        for &(x, level) in losses {
            let ln1p_x = (1.0 + x / beta).ln();
            let ln1p_level = (1.0 + level / beta).ln();
            value += (alpha / beta).ln() - (1.0 + alpha) * ln1p_x + alpha * ln1p_level;
            g_alpha += 1.0 / alpha - ln1p_x + ln1p_level;
            g_beta += -1.0 / beta + (1.0 + alpha) * x / (beta * beta * (1.0 + x / beta))
                - alpha * level / (beta * beta * (1.0 + level / beta));
        }
        if !value.is_finite() {
            return (f64::INFINITY, vec![0.0, 0.0]);
        }
        (-value, vec![-alpha * g_alpha, -beta * g_beta])
    }
}

fn check_not_degenerate(data: &Dataset) -> Result<()> {
    let mut iter = match data.records() {
        Records::EventTimes(events) => events.iter().map(|e| e.loss).collect::<Vec<_>>(),
        Records::AnnualCounts { losses, .. } => losses.iter().map(|l| l.loss).collect(),
    }
    .into_iter();
    let Some(first) = iter.next() else {
        return Err(Error::NoEvents);
    };
    if iter.all(|x| x == first) && data.event_count() > 1 {
        return Err(Error::DegenerateData(format!(
            "all {} losses equal {first}; the severity shape is unidentified",
            data.event_count()
        )));
    }
    Ok(())
}

/// Run BFGS on a 2-d objective, then probe 20 nearby perturbations; if any
/// beats the optimum, restart from the best one (at most twice).
fn optimize_severity<F>(objective: F, init: [f64; 2], tol: f64) -> (Vec<f64>, usize, bool)
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let opts = BfgsOptions {
        f_tol: tol,
        g_tol: 1e-6,
        max_iters: 500,
    };
    let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_0bf6);
    let mut start = init.to_vec();
    let mut total_iters = 0;
    for attempt in 0..3 {
        let out = minimize(&objective, &start, &opts);
        total_iters += out.iterations;
        let mut best: Option<(Vec<f64>, f64)> = None;
        for _ in 0..20 {
            let probe: Vec<f64> = out
                .x
                .iter()
                .map(|&xi| xi + 0.05 * standard_normal(&mut rng))
                .collect();
            let (fp, _) = objective(&probe);
            if fp < out.value - 1e-12 * (1.0 + out.value.abs())
                && fp < best.as_ref().map_or(f64::INFINITY, |b| b.1)
            {
                best = Some((probe, fp));
            }
        }
        match best {
            Some((probe, _)) if attempt < 2 => start = probe,
            Some(_) => return (out.x, total_iters, false),
            None => return (out.x, total_iters, out.converged),
        }
    }
    unreachable!("loop returns on the last attempt")
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    // Box–Muller, one variate per pair of uniforms.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn finish_fit(
    data: &Dataset,
    mode: MleMode,
    z_hat: &[f64],
    iterations: usize,
    converged: bool,
) -> Result<MleResult> {
    let (alpha, beta) = (z_hat[0].exp(), z_hat[1].exp());
    let lambda = profile_lambda(alpha, beta, data)?;
    let params_hat = ModelParams::new(lambda, alpha, beta)?;
    let value = loglik(&params_hat, data)?.value;
    let covariance = observed_information(&params_hat, data).ok();
    Ok(MleResult {
        params_hat,
        covariance,
        mode,
        converged,
        loglik_at_optimum: value,
        iterations,
    })
}

/// Joint MLE: maximize the profiled log-likelihood over (α, β), recover λ̂
/// from its closed form.
pub fn fit_joint(data: &Dataset, init: Option<&ModelParams>, tol: f64) -> Result<MleResult> {
    check_not_degenerate(data)?;
    let start = match init {
        Some(p) => *p,
        None => default_init(data)?,
    };
    let objective = profiled_objective(data);
    let (z, iterations, converged) =
        optimize_severity(&objective, [start.alpha().ln(), start.beta().ln()], tol);
    finish_fit(data, MleMode::Joint, &z, iterations, converged)
}

/// Marginal MLE: (α̂, β̂) maximize only the truncated severity terms; λ̂ is
/// recovered from the profile formula afterwards. The covariance is still the
/// full-model observed information at the estimate.
pub fn fit_marginal(data: &Dataset, init: Option<&ModelParams>, tol: f64) -> Result<MleResult> {
    check_not_degenerate(data)?;
    let start = match init {
        Some(p) => *p,
        None => default_init(data)?,
    };
    let losses: Vec<(f64, f64)> = match data.records() {
        Records::EventTimes(events) => events
            .iter()
            .map(|e| (e.loss, data.threshold_at(e.time)))
            .collect(),
        Records::AnnualCounts { losses, .. } => losses
            .iter()
            .map(|l| (l.loss, data.schedule().level_for_year(l.year)))
            .collect(),
    };
    let objective = marginal_objective(&losses);
    let (z, iterations, converged) =
        optimize_severity(&objective, [start.alpha().ln(), start.beta().ln()], tol);
    finish_fit(data, MleMode::Marginal, &z, iterations, converged)
}

/// Joint fit under the wrong assumption of a constant threshold `L ≡ l0`,
/// regardless of the schedule the data were truncated with.
pub fn fit_misspecified(
    data: &Dataset,
    l0: f64,
    init: Option<&ModelParams>,
    tol: f64,
) -> Result<MleResult> {
    let assumed = data.with_schedule(ThresholdSchedule::Constant { level: l0 })?;
    let mut result = fit_joint(&assumed, init, tol)?;
    result.mode = MleMode::Misspecified;
    Ok(result)
}

/// Central finite-difference Hessian of the log-likelihood in the raw
/// (λ, α, β) coordinates, step `h_i = 1e−4·max(|γ_i|, 1)` shrunk where needed
/// to stay in the positive orthant.
pub(crate) fn hessian_fd(params: &ModelParams, data: &Dataset) -> Result<[[f64; 3]; 3]> {
    let x = params.to_array();
    let f = |point: [f64; 3]| -> Result<f64> {
        let p = ModelParams::new(point[0], point[1], point[2])?;
        Ok(loglik(&p, data)?.value)
    };
    let mut h = [0.0; 3];
    for i in 0..3 {
        h[i] = 1e-4 * x[i].abs().max(1.0);
        if h[i] >= x[i] {
            h[i] = 0.5 * x[i];
        }
    }
    let f0 = f(x)?;
    let mut hess = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                let mut up = x;
                up[i] += h[i];
                let mut down = x;
                down[i] -= h[i];
                hess[i][i] = (f(up)? - 2.0 * f0 + f(down)?) / (h[i] * h[i]);
            } else {
                let mut pp = x;
                pp[i] += h[i];
                pp[j] += h[j];
                let mut pm = x;
                pm[i] += h[i];
                pm[j] -= h[j];
                let mut mp = x;
                mp[i] -= h[i];
                mp[j] += h[j];
                let mut mm = x;
                mm[i] -= h[i];
                mm[j] -= h[j];
                hess[i][j] = (f(pp)? - f(pm)? - f(mp)? + f(mm)?) / (4.0 * h[i] * h[j]);
            }
        }
    }
    for row in &hess {
        for v in row {
            if !v.is_finite() {
                return Err(Error::Numeric(
                    "non-finite entry in the finite-difference Hessian".into(),
                ));
            }
        }
    }
    Ok(hess)
}

/// Invert a symmetric positive definite 3×3 matrix via the adjugate.
pub(crate) fn invert_spd3(m: &[[f64; 3]; 3]) -> Result<Covariance> {
    // Sylvester's criterion on the leading principal minors.
    let m1 = m[0][0];
    let m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if !(m1 > 0.0 && m2 > 0.0 && det > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "leading minors ({m1:.3e}, {m2:.3e}, {det:.3e})"
        )));
    }
    let adj =
        |r1: usize, c1: usize, r2: usize, c2: usize| m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1];
    let mut inv = [[0.0; 3]; 3];
    inv[0][0] = adj(1, 1, 2, 2) / det;
    inv[0][1] = -adj(0, 1, 2, 2) / det;
    inv[0][2] = adj(0, 1, 1, 2) / det;
    inv[1][0] = -adj(1, 0, 2, 2) / det;
    inv[1][1] = adj(0, 0, 2, 2) / det;
    inv[1][2] = -adj(0, 0, 1, 2) / det;
    inv[2][0] = adj(1, 0, 2, 1) / det;
    inv[2][1] = -adj(0, 0, 2, 1) / det;
    inv[2][2] = adj(0, 0, 1, 1) / det;
    // Symmetrize away finite-difference roundoff.
    for i in 0..3 {
        for j in (i + 1)..3 {
            let avg = 0.5 * (inv[i][j] + inv[j][i]);
            inv[i][j] = avg;
            inv[j][i] = avg;
        }
    }
    Ok(inv)
}

/// Asymptotic covariance of the MLEs: the inverse of the observed information
/// matrix (negative Hessian of the log-likelihood) at the estimate.
pub fn observed_information(params_hat: &ModelParams, data: &Dataset) -> Result<Covariance> {
    let hess = hessian_fd(params_hat, data)?;
    let mut neg = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            neg[i][j] = -hess[i][j];
        }
    }
    invert_spd3(&neg)
}
