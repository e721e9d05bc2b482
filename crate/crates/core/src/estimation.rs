//! Maximum-likelihood estimation of (α, γ) with the number of looks known.
//!
//! The optimizer works on the unconstrained coordinates a = ln(−α) and
//! g = ln γ and minimizes the mean negative log-likelihood by BFGS with a
//! strong-Wolfe line search.

use crate::error::{Error, Result};
use crate::model::{G0Params, Sample};
use crate::special::{digamma_unchecked, ln_gamma_unchecked};

/// Gradient norm, in the (ln(−α), ln γ) coordinates, below which a fit is declared converged.
pub const SCORE_TOL: f64 = 1e-6;
/// Iteration cap per starting point.
pub const MAX_ITERATIONS: usize = 500;

const PRIMARY_START_ALPHA: f64 = -3.0;
const RETRY_START_ALPHA: f64 = -1.5;
// The optimizer keeps going past SCORE_TOL while it still makes progress.
const POLISH_TOL: f64 = 1e-10;
// Bounds on a = ln(−α) and g = ln γ keep every evaluation finite.
const COORD_LIMIT: f64 = 700.0;

/// Outcome of a maximum-likelihood fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub params: G0Params,
    /// Total log-likelihood at `params`.
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Euclidean norm of the mean score in the (ln(−α), ln γ) coordinates.
    pub score_norm_at_opt: f64,
}

fn check_params(alpha: f64, gamma: f64) -> Result<()> {
    if !(alpha < 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be negative and finite, got {alpha}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma must be positive and finite, got {gamma}")));
    }
    Ok(())
}

/// Σᵢ log f(zᵢ; α, γ, L) with L taken from the sample.
pub fn log_likelihood(alpha: f64, gamma: f64, s: &Sample) -> Result<f64> {
    check_params(alpha, gamma)?;
    let density = G0Params::new(alpha, gamma, s.looks())?.density();
    Ok(s.values().iter().map(|&z| density.ln_pdf(z)).sum())
}

/// Mean score (∂/∂α, ∂/∂γ) of the log-likelihood, divided by n.
///
/// Both components vanish at the maximum-likelihood estimate.
pub fn score(alpha: f64, gamma: f64, s: &Sample) -> Result<(f64, f64)> {
    check_params(alpha, gamma)?;
    let l = s.looks();
    let (mean_log, mean_inv) = log_and_inverse_means(gamma, l, s.values());
    let d_alpha = digamma_unchecked(-alpha) - digamma_unchecked(l - alpha) - gamma.ln() + mean_log;
    let d_gamma = -alpha / gamma + (alpha - l) * mean_inv;
    Ok((d_alpha, d_gamma))
}

/// Means of log(γ + Lz) and 1/(γ + Lz) over the sample.
fn log_and_inverse_means(gamma: f64, l: f64, values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let (sl, si) = values.iter().fold((0.0, 0.0), |(sl, si), &z| {
        let u = gamma + l * z;
        (sl + u.ln(), si + 1.0 / u)
    });
    (sl / n, si / n)
}

/// Objective in (a, g) = (ln(−α), ln γ): mean negative log-likelihood and its gradient.
struct Objective<'a> {
    values: &'a [f64],
    looks: f64,
    mean_log_z: f64,
}

impl<'a> Objective<'a> {
    fn new(s: &'a Sample) -> Self {
        let values = s.values();
        let mean_log_z = values.iter().map(|z| z.ln()).sum::<f64>() / values.len() as f64;
        Self {
            values,
            looks: s.looks(),
            mean_log_z,
        }
    }

    fn eval(&self, x: [f64; 2]) -> Option<(f64, [f64; 2])> {
        if !(x[0].abs() <= COORD_LIMIT && x[1].abs() <= COORD_LIMIT) {
            return None;
        }
        let alpha = -x[0].exp();
        let gamma = x[1].exp();
        if !(alpha < 0.0 && alpha.is_finite() && gamma > 0.0 && gamma.is_finite()) {
            return None;
        }
        let l = self.looks;
        let (mean_log, mean_inv) = log_and_inverse_means(gamma, l, self.values);
        let mean_ll = l * l.ln() + ln_gamma_unchecked(l - alpha)
            - alpha * x[1]
            - ln_gamma_unchecked(-alpha)
            - ln_gamma_unchecked(l)
            + (l - 1.0) * self.mean_log_z
            + (alpha - l) * mean_log;
        let d_alpha = digamma_unchecked(-alpha) - digamma_unchecked(l - alpha) - x[1] + mean_log;
        let d_gamma = -alpha / gamma + (alpha - l) * mean_inv;
        // Chain rule: dα/da = α and dγ/dg = γ; the objective is the negated mean.
        let grad = [-d_alpha * alpha, -d_gamma * gamma];
        if mean_ll.is_finite() && grad[0].is_finite() && grad[1].is_finite() {
            Some((-mean_ll, grad))
        } else {
            None
        }
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: [f64; 2]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: [f64; 2], t: f64, d: [f64; 2]) -> [f64; 2] {
    [x[0] + t * d[0], x[1] + t * d[1]]
}

struct Point {
    x: [f64; 2],
    f: f64,
    g: [f64; 2],
}

/// Strong-Wolfe line search along `d` from `p` (Nocedal & Wright, Alg. 3.5/3.6).
fn line_search(obj: &Objective, p: &Point, d: [f64; 2]) -> Option<Point> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    const MAX_EVALS: usize = 40;
    let slope0 = dot(p.g, d);
    if !(slope0 < 0.0) {
        return None;
    }
    let at = |t: f64| obj.eval(axpy(p.x, t, d)).map(|(f, g)| Point { x: axpy(p.x, t, d), f, g });

    let mut evals = 0;
    let (mut t_prev, mut f_prev) = (0.0, p.f);
    let mut t = 1.0;
    let mut prev_slope = slope0;
    loop {
        evals += 1;
        if evals > MAX_EVALS {
            return None;
        }
        let Some(cur) = at(t) else {
            // Left the finite region: shrink toward the last good step.
            t = 0.5 * (t_prev + t);
            continue;
        };
        if cur.f > p.f + C1 * t * slope0 || (evals > 1 && cur.f >= f_prev) {
            return zoom(obj, p, d, (t_prev, f_prev, prev_slope), (t, cur.f), slope0, &mut evals);
        }
        let slope = dot(cur.g, d);
        if slope.abs() <= -C2 * slope0 {
            return Some(cur);
        }
        if slope >= 0.0 {
            return zoom(obj, p, d, (t, cur.f, slope), (t_prev, f_prev), slope0, &mut evals);
        }
        t_prev = t;
        f_prev = cur.f;
        prev_slope = slope;
        t *= 2.0;
    }
}

fn zoom(
    obj: &Objective,
    p: &Point,
    d: [f64; 2],
    lo: (f64, f64, f64),
    hi: (f64, f64),
    slope0: f64,
    evals: &mut usize,
) -> Option<Point> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    const MAX_EVALS: usize = 40;
    let (mut t_lo, mut f_lo, mut s_lo) = lo;
    let (mut t_hi, mut f_hi) = hi;
    let mut best: Option<Point> = None;
    while *evals < MAX_EVALS {
        *evals += 1;
        // Minimizer of the quadratic through (t_lo, f_lo, s_lo) and (t_hi, f_hi),
        // safeguarded into the middle of the bracket.
        let dt = t_hi - t_lo;
        let denom = 2.0 * (f_hi - f_lo - s_lo * dt);
        let mut t = if denom > 0.0 { t_lo - s_lo * dt * dt / denom } else { t_lo + 0.5 * dt };
        let (a, b) = if t_lo < t_hi { (t_lo, t_hi) } else { (t_hi, t_lo) };
        let margin = 0.1 * (b - a);
        if !(t > a + margin && t < b - margin) {
            t = 0.5 * (a + b);
        }
        let Some(cur) = obj.eval(axpy(p.x, t, d)).map(|(f, g)| Point { x: axpy(p.x, t, d), f, g }) else {
            t_hi = t;
            f_hi = f64::INFINITY;
            continue;
        };
        if cur.f > p.f + C1 * t * slope0 || cur.f >= f_lo {
            t_hi = t;
            f_hi = cur.f;
        } else {
            let slope = dot(cur.g, d);
            if slope.abs() <= -C2 * slope0 {
                return Some(cur);
            }
            if slope * (t_hi - t_lo) >= 0.0 {
                t_hi = t_lo;
                f_hi = f_lo;
            }
            t_lo = t;
            f_lo = cur.f;
            s_lo = slope;
            best = Some(cur);
        }
        if (t_hi - t_lo).abs() < 1e-16 * t_lo.abs().max(1.0) {
            break;
        }
    }
    // A sufficient-decrease point without the curvature condition still makes progress.
    best
}

struct Run {
    x: [f64; 2],
    f: f64,
    grad_norm: f64,
    iterations: usize,
}

fn bfgs(obj: &Objective, x0: [f64; 2]) -> Option<Run> {
    let (f0, g0) = obj.eval(x0)?;
    let mut p = Point { x: x0, f: f0, g: g0 };
    // Inverse Hessian approximation, symmetric 2×2 stored as [h00, h01, h11].
    let mut h = [1.0, 0.0, 1.0];
    let mut fresh = true;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && norm(p.g) > POLISH_TOL {
        iterations += 1;
        let d = [-(h[0] * p.g[0] + h[1] * p.g[1]), -(h[1] * p.g[0] + h[2] * p.g[1])];
        let next = match line_search(obj, &p, d) {
            Some(next) => next,
            None if !fresh => {
                // Curvature information went stale: restart from steepest descent.
                h = [1.0, 0.0, 1.0];
                fresh = true;
                continue;
            }
            None => break,
        };
        let s = [next.x[0] - p.x[0], next.x[1] - p.x[1]];
        let y = [next.g[0] - p.g[0], next.g[1] - p.g[1]];
        let sy = dot(s, y);
        if sy > 1e-14 * norm(s) * norm(y) && sy > 0.0 {
            if fresh {
                let scale = sy / dot(y, y);
                h = [scale, 0.0, scale];
                fresh = false;
            }
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let rho = 1.0 / sy;
            let hy = [h[0] * y[0] + h[1] * y[1], h[1] * y[0] + h[2] * y[1]];
            let yhy = dot(y, hy);
            let k = rho * rho * yhy + rho;
            h = [
                h[0] - rho * 2.0 * hy[0] * s[0] + k * s[0] * s[0],
                h[1] - rho * (hy[0] * s[1] + hy[1] * s[0]) + k * s[0] * s[1],
                h[2] - rho * 2.0 * hy[1] * s[1] + k * s[1] * s[1],
            ];
        }
        let stalled = (p.f - next.f).abs() <= 4.0 * f64::EPSILON * p.f.abs().max(1.0) && norm(next.g) <= SCORE_TOL;
        p = next;
        if stalled {
            break;
        }
    }
    Some(Run {
        x: p.x,
        f: p.f,
        grad_norm: norm(p.g),
        iterations,
    })
}

fn start_point(alpha0: f64, s: &Sample) -> [f64; 2] {
    let mean = s.mean();
    let mut gamma0 = -(1.0 + alpha0) * mean;
    if !(gamma0 > 0.0 && gamma0.is_finite()) {
        gamma0 = s.median();
    }
    [(-alpha0).ln(), gamma0.ln()]
}

/// Maximum-likelihood estimate of (α, γ) for a sample with known looks.
///
/// Starts at α₀ = −3 with γ₀ matching the sample mean, and retries once
/// from α₀ = −1.5 if that run does not converge. When neither converges the
/// better iterate is returned with `converged == false`.
pub fn fit_ml(s: &Sample) -> Result<FitResult> {
    if s.len() < 3 {
        return Err(Error::EstimationFailure(format!(
            "at least 3 observations are needed, got {}",
            s.len()
        )));
    }
    let obj = Objective::new(s);
    let n = s.len() as f64;
    let mut best: Option<Run> = None;
    let mut total_iterations = 0;
    for alpha0 in [PRIMARY_START_ALPHA, RETRY_START_ALPHA] {
        let Some(run) = bfgs(&obj, start_point(alpha0, s)) else {
            continue;
        };
        total_iterations += run.iterations;
        let done = run.grad_norm <= SCORE_TOL;
        let better = match &best {
            None => true,
            Some(b) => (b.grad_norm > SCORE_TOL && done) || (done == (b.grad_norm <= SCORE_TOL) && run.f < b.f),
        };
        if better {
            best = Some(run);
        }
        if done {
            break;
        }
    }
    let run = best.ok_or_else(|| Error::EstimationFailure("log-likelihood is not finite at any starting point".into()))?;
    let params = G0Params::new(-run.x[0].exp(), run.x[1].exp(), s.looks())
        .map_err(|e| Error::EstimationFailure(e.to_string()))?;
    Ok(FitResult {
        params,
        log_likelihood: -run.f * n,
        converged: run.grad_norm <= SCORE_TOL,
        iterations: total_iterations,
        score_norm_at_opt: run.grad_norm,
    })
}

/// The censoring rule for simulations: accept iff 10α ≤ α̂ ≤ α/20.
pub fn censor_accept(fit: &FitResult, true_alpha: f64) -> bool {
    let a = fit.params.alpha();
    10.0 * true_alpha <= a && a <= true_alpha / 20.0
}
