//! Minimal dense BFGS with backtracking line search.
//!
//! The fitting routines only ever minimize over the two log-severity
//! parameters, so a compact textbook implementation is all that is needed:
//! inverse-Hessian BFGS update, Armijo backtracking, descent-direction reset
//! on curvature failure.

pub(crate) struct BfgsOptions {
    /// Relative tolerance on the objective decrease.
    pub f_tol: f64,
    /// Infinity-norm tolerance on the gradient.
    pub g_tol: f64,
    pub max_iters: usize,
}

pub(crate) struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f`, which returns the objective and its gradient. Non-finite
/// objective values act as an infinite barrier for the line search.
pub(crate) fn minimize<F>(f: F, x0: &[f64], opts: &BfgsOptions) -> BfgsOutcome
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut grad) = f(&x);
    if !fx.is_finite() {
        return BfgsOutcome {
            x,
            value: fx,
            gradient: grad,
            iterations: 0,
            converged: false,
        };
    }

    // Inverse-Hessian approximation, row-major.
    let mut h = identity(n);
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..opts.max_iters {
        iterations += 1;
        if inf_norm(&grad) <= opts.g_tol {
            converged = true;
            break;
        }

        let mut direction = neg_matvec(&h, &grad);
        if dot(&direction, &grad) >= 0.0 {
            h = identity(n);
            direction = grad.iter().map(|g| -g).collect();
        }

        // Armijo backtracking.
        let slope = dot(&direction, &grad);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let trial: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(xi, di)| xi + step * di)
                .collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            // No downhill step exists at this resolution.
            converged = inf_norm(&grad) <= opts.g_tol.max(1e-5);
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * inf_norm(&s).max(1e-300) {
            bfgs_update(&mut h, &s, &y, sy);
        }

        let f_change = (fx - f_new).abs();
        x = x_new;
        grad = g_new;
        let done = f_change <= opts.f_tol * (1.0 + fx.abs());
        fx = f_new;
        if done && inf_norm(&grad) <= opts.g_tol {
            converged = true;
            break;
        }
    }

    BfgsOutcome {
        x,
        value: fx,
        gradient: grad,
        iterations,
        converged,
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn neg_matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| -dot(row, v)).collect()
}

/// H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ with ρ = 1/(yᵀs).
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                + rho * rho * yhy * s[i] * s[j]
                + rho * s[i] * s[j];
        }
    }
}
