//! Limited-memory BFGS with Armijo backtracking.
//!
//! The search direction comes from the standard two-loop recursion over the
//! last `memory` curvature pairs, with the initial inverse Hessian scaled by
//! `s'y / y'y`. Pairs with non-positive curvature are dropped, which keeps
//! the implicit inverse Hessian positive definite without a Wolfe search.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK_FACTOR: f64 = 0.5;
const MAX_BACKTRACKS: usize = 40;
/// Standard deviation of the log-normal jitter applied to restart points.
const RESTART_JITTER: f64 = 0.5;
/// In log-bandwidth units: one step changes a bandwidth by at most `e^4`.
pub const DEFAULT_MAX_STEP: f64 = 4.0;

/// Starting bandwidths: one value for every feature or an explicit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSigma {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub memory: usize,
    pub max_iterations: usize,
    /// Infinity-norm threshold on the gradient.
    pub grad_tol: f64,
    /// Relative change in loss between accepted iterates.
    pub rel_loss_tol: f64,
    pub init_sigma: InitSigma,
    /// Largest trial step, in infinity norm; `inf` disables the cap.
    pub max_step: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iterations: 500,
            grad_tol: 1e-6,
            rel_loss_tol: 1e-10,
            init_sigma: InitSigma::Scalar(0.5),
            max_step: DEFAULT_MAX_STEP,
            restarts: 0,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 {
            return Err(Error::input("optimizer memory must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::input("max_iterations must be positive"));
        }
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return Err(Error::input("grad_tol must be a positive number"));
        }
        if !(self.rel_loss_tol > 0.0 && self.rel_loss_tol.is_finite()) {
            return Err(Error::input("rel_loss_tol must be a positive number"));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::input("max_step must be positive"));
        }
        let bad_sigma = |s: &f64| !(s.is_finite() && *s > 0.0);
        match &self.init_sigma {
            InitSigma::Scalar(s) if bad_sigma(s) => {
                Err(Error::input("init_sigma must be a positive number"))
            }
            InitSigma::Vector(v) if v.iter().any(bad_sigma) => {
                Err(Error::input("init_sigma entries must be positive numbers"))
            }
            _ => Ok(()),
        }
    }

    /// `log(init_sigma)` expanded to `d` entries.
    pub fn initial_log_sigma(&self, d: usize) -> Result<Vec<f64>> {
        self.validate()?;
        match &self.init_sigma {
            InitSigma::Scalar(s) => Ok(vec![s.ln(); d]),
            InitSigma::Vector(v) if v.len() == d => Ok(v.iter().map(|s| s.ln()).collect()),
            InitSigma::Vector(v) => Err(Error::input(format!(
                "init_sigma has {} entries for {d} features",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    GradientTolerance,
    LossStagnation,
    MaxIterations,
    LineSearchFailure,
}

impl TerminationReason {
    pub fn is_converged(self) -> bool {
        matches!(self, Self::GradientTolerance | Self::LossStagnation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub theta_opt: Vec<f64>,
    pub loss_opt: f64,
    /// Loss at the starting point followed by every accepted iterate.
    pub loss_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub termination_reason: TerminationReason,
    pub grad_inf_norm: f64,
    /// Objective calls across all starts.
    pub evaluations: usize,
    /// Index of the start that produced this result (0 = unperturbed).
    pub start: usize,
}

/// Minimizes `objective` from `init`, with optional jittered restarts.
///
/// The objective returns the value and gradient at a point. Errors or
/// non-finite values during the line search are treated as a failed trial
/// step; at the starting point they are an input error.
pub fn minimize<F>(mut objective: F, init: &[f64], config: &OptimizerConfig) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    config.validate()?;
    if init.is_empty() {
        return Err(Error::input("cannot optimize over an empty vector"));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("initial point is not finite"));
    }

    let mut best = run_lbfgs(&mut objective, init, config)?;
    let mut evaluations = best.evaluations;
    if config.restarts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for start in 1..=config.restarts {
            let jittered: Vec<f64> = init
                .iter()
                .map(|t| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    t + RESTART_JITTER * z
                })
                .collect();
            match run_lbfgs(&mut objective, &jittered, config) {
                Ok(mut res) => {
                    evaluations += res.evaluations;
                    res.start = start;
                    if res.loss_opt < best.loss_opt {
                        best = res;
                    }
                }
                Err(e) => log::debug!("restart {start} discarded: {e}"),
            }
        }
    }
    best.evaluations = evaluations;
    Ok(best)
}

struct CurvaturePair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `-H g` via the two-loop recursion. Without history, the unit-length
/// steepest-descent direction: scaling by `|g|` would make the first trial
/// step vanish on flat stretches of the objective.
fn search_direction(grad: &[f64], history: &VecDeque<CurvaturePair>) -> Vec<f64> {
    let Some(last) = history.back() else {
        let norm = dot(grad, grad).sqrt();
        return grad.iter().map(|g| -g / norm).collect();
    };
    let mut q = grad.to_vec();
    let mut alpha = vec![0.0; history.len()];
    for (k, pair) in history.iter().enumerate().rev() {
        let a = pair.rho * dot(&pair.s, &q);
        alpha[k] = a;
        q.iter_mut().zip(&pair.y).for_each(|(qi, yi)| *qi -= a * yi);
    }
    let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
    q.iter_mut().for_each(|v| *v *= gamma);
    for (k, pair) in history.iter().enumerate() {
        let b = pair.rho * dot(&pair.y, &q);
        let c = alpha[k] - b;
        q.iter_mut().zip(&pair.s).for_each(|(qi, si)| *qi += c * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn run_lbfgs<F>(objective: &mut F, init: &[f64], config: &OptimizerConfig) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let d = init.len();
    let mut evaluations = 1;
    let (mut f, mut g) = objective(init)
        .map_err(|e| Error::input(format!("objective failed at the initial point: {e}")))?;
    if !f.is_finite() || g.len() != d || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("objective is not finite at the initial point"));
    }
    let mut x = init.to_vec();
    let mut trace = vec![f];
    let mut history: VecDeque<CurvaturePair> = VecDeque::with_capacity(config.memory);
    let mut iterations = 0;

    let reason = loop {
        if inf_norm(&g) <= config.grad_tol {
            break TerminationReason::GradientTolerance;
        }
        if iterations >= config.max_iterations {
            break TerminationReason::MaxIterations;
        }

        let mut direction = search_direction(&g, &history);
        let mut slope = dot(&g, &direction);
        if !(slope < 0.0) {
            history.clear();
            direction = search_direction(&g, &history);
            slope = dot(&g, &direction);
        }

        let mut step = line_search(objective, &x, f, &direction, slope, config.max_step, &mut evaluations);
        if step.is_none() && !history.is_empty() {
            // one retry along steepest descent before giving up
            history.clear();
            direction = search_direction(&g, &history);
            slope = dot(&g, &direction);
            step = line_search(objective, &x, f, &direction, slope, config.max_step, &mut evaluations);
        }
        let Some((x_new, f_new, g_new)) = step else {
            break TerminationReason::LineSearchFailure;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 0.0 && sy.is_finite() {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back(CurvaturePair { s, y, rho: 1.0 / sy });
        }

        let f_prev = f;
        x = x_new;
        f = f_new;
        g = g_new;
        trace.push(f);
        iterations += 1;

        let scale = f_prev.abs().max(f.abs());
        if inf_norm(&g) > config.grad_tol && (f_prev - f).abs() <= config.rel_loss_tol * scale {
            break TerminationReason::LossStagnation;
        }
    };

    Ok(OptimResult {
        theta_opt: x,
        loss_opt: f,
        loss_trace: trace,
        iterations,
        converged: reason.is_converged(),
        termination_reason: reason,
        grad_inf_norm: inf_norm(&g),
        evaluations,
        start: 0,
    })
}

/// Armijo backtracking from a unit step, shortened first if it would move
/// further than `max_step`.
fn line_search<F>(
    objective: &mut F,
    x: &[f64],
    f: f64,
    direction: &[f64],
    slope: f64,
    max_step: f64,
    evaluations: &mut usize,
) -> Option<(Vec<f64>, f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut alpha = (max_step / inf_norm(direction)).min(1.0);
    for _ in 0..=MAX_BACKTRACKS {
        let trial: Vec<f64> = x.iter().zip(direction).map(|(a, p)| a + alpha * p).collect();
        *evaluations += 1;
        if let Ok((f_new, g_new)) = objective(&trial) {
            let finite = f_new.is_finite() && g_new.iter().all(|v| v.is_finite());
            if finite && f_new <= f + ARMIJO_C1 * alpha * slope {
                return Some((trial, f_new, g_new));
            }
        }
        alpha *= BACKTRACK_FACTOR;
    }
    None
}
