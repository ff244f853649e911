use std::collections::VecDeque;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::transform::{SlotKind, TransformedParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sufficient-decrease constant of the weak Wolfe conditions.
pub const WOLFE_C1: f64 = 1e-4;
/// Curvature constant of the weak Wolfe conditions.
pub const WOLFE_C2: f64 = 0.9;
const MAX_LINE_SEARCH_EVALS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub max_iters: usize,
    pub memory: usize,
    /// Convergence threshold on the ∞-norm of the transformed gradient.
    pub grad_tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            memory: 10,
            grad_tol: 1e-6,
            restarts: 1,
            seed: 0,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.memory == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "max_iters, memory and restarts must all be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry<T> {
    pub iter: usize,
    /// Objective after the step.
    pub f: T,
    /// ∞-norm of the gradient after the step.
    pub grad_norm: T,
    pub step_len: T,
    /// Objective before the step.
    pub f_prev: T,
    /// Directional derivative along the search direction before the step.
    pub slope_prev: T,
    /// Directional derivative along the search direction after the step.
    pub slope: T,
    /// Step taken along the negative gradient after an L-BFGS line-search failure.
    pub steepest_fallback: bool,
}

impl<T: Scalar> TraceEntry<T> {
    pub fn satisfies_armijo(&self) -> bool {
        self.f <= self.f_prev + T::lit(WOLFE_C1) * self.step_len * self.slope_prev
    }

    pub fn satisfies_curvature(&self) -> bool {
        self.slope >= T::lit(WOLFE_C2) * self.slope_prev
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct OptResult<T> {
    pub x_best: Vec<T>,
    pub f_best: T,
    pub f_initial: T,
    pub trace: Vec<TraceEntry<T>>,
    pub termination: Termination,
    /// Restart that produced `x_best` (0 is the unperturbed start).
    pub restart: usize,
}

/// Objective returning value and gradient; an `Err` or non-finite value marks an
/// infeasible point for the line search.
pub trait Objective<T>: Sync {
    fn value_grad(&self, x: &[T]) -> Result<(T, Vec<T>)>;
}

impl<T, F> Objective<T> for F
where
    F: Fn(&[T]) -> Result<(T, Vec<T>)> + Sync,
{
    fn value_grad(&self, x: &[T]) -> Result<(T, Vec<T>)> {
        self(x)
    }
}

fn eval_finite<T: Scalar, O: Objective<T> + ?Sized>(obj: &O, x: &[T]) -> Option<(T, Vec<T>)> {
    match obj.value_grad(x) {
        Ok((f, g)) if f.is_finite() && g.iter().all(|v| v.is_finite()) => Some((f, g)),
        _ => None,
    }
}

fn dotv<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn inf_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

struct LineSearchOk<T> {
    alpha: T,
    x: Vec<T>,
    f: T,
    g: Vec<T>,
    slope: T,
}

/// Bracketing weak-Wolfe search: shrink on failed sufficient decrease, expand on
/// failed curvature, bisect once bracketed.
fn weak_wolfe<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    x: &[T],
    f0: T,
    slope0: T,
    dir: &[T],
    alpha0: T,
) -> Option<LineSearchOk<T>> {
    let c1 = T::lit(WOLFE_C1);
    let c2 = T::lit(WOLFE_C2);
    let mut lo = T::zero();
    let mut hi = T::infinity();
    let mut alpha = alpha0;
    for _ in 0..MAX_LINE_SEARCH_EVALS {
        let xn: Vec<T> = x.iter().zip(dir).map(|(&a, &d)| a + alpha * d).collect();
        match eval_finite(obj, &xn) {
            Some((f, g)) if f <= f0 + c1 * alpha * slope0 => {
                let slope = dotv(&g, dir);
                if slope >= c2 * slope0 {
                    return Some(LineSearchOk {
                        alpha,
                        x: xn,
                        f,
                        g,
                        slope,
                    });
                }
                lo = alpha;
            }
            _ => hi = alpha,
        }
        alpha = if hi.is_finite() {
            T::lit(0.5) * (lo + hi)
        } else {
            alpha * T::lit(2.0)
        };
    }
    None
}

/// Single L-BFGS run from `x0`.
pub fn lbfgs<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    x0: &[T],
    cfg: &OptConfig,
) -> Result<OptResult<T>> {
    cfg.validate()?;
    let (mut f, mut g) = eval_finite(obj, x0).ok_or(Error::NonFiniteObjective)?;
    let f_initial = f;
    let mut x = x0.to_vec();
    let mut hist: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::with_capacity(cfg.memory);
    let mut trace = Vec::new();
    let tol = T::lit(cfg.grad_tol);
    let mut termination = Termination::MaxIterations;

    let mut iter = 0;
    while iter < cfg.max_iters {
        if inf_norm(&g) < tol {
            termination = Termination::GradientTolerance;
            break;
        }
        // Two-loop recursion.
        let mut dir: Vec<T> = g.iter().map(|&v| -v).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = *rho * dotv(s, &dir);
            for (d, &yi) in dir.iter_mut().zip(y) {
                *d = *d - a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dotv(s, y) / dotv(y, y);
            dir.iter_mut().for_each(|d| *d = *d * gamma);
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
            let b = *rho * dotv(y, &dir);
            for (d, &si) in dir.iter_mut().zip(s) {
                *d = *d + (a - b) * si;
            }
        }
        let mut slope = dotv(&g, &dir);
        let steepest_step = |g: &[T]| -> (Vec<T>, T, T) {
            let d: Vec<T> = g.iter().map(|&v| -v).collect();
            let s = dotv(g, &d);
            let norm = inf_norm(g);
            (d, s, T::one().min(T::one() / norm))
        };
        let mut alpha0 = T::one();
        let mut fallback = hist.is_empty();
        if !(slope < T::zero()) || hist.is_empty() {
            let (d, s, a) = steepest_step(&g);
            dir = d;
            slope = s;
            alpha0 = a;
            hist.clear();
            fallback = true;
        }
        let mut step = weak_wolfe(obj, &x, f, slope, &dir, alpha0);
        let mut used_fallback = fallback && iter > 0;
        if step.is_none() && !fallback {
            let (d, s, a) = steepest_step(&g);
            hist.clear();
            dir = d;
            slope = s;
            step = weak_wolfe(obj, &x, f, slope, &dir, a);
            used_fallback = true;
        }
        let Some(ok) = step else {
            termination = Termination::LineSearchFailed;
            break;
        };
        let s: Vec<T> = ok.x.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = ok.g.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dotv(&s, &y);
        if sy > T::epsilon() * dotv(&y, &y) {
            if hist.len() == cfg.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, T::one() / sy));
        }
        iter += 1;
        trace.push(TraceEntry {
            iter,
            f: ok.f,
            grad_norm: inf_norm(&ok.g),
            step_len: ok.alpha,
            f_prev: f,
            slope_prev: slope,
            slope: ok.slope,
            steepest_fallback: used_fallback,
        });
        x = ok.x;
        f = ok.f;
        g = ok.g;
    }
    if termination == Termination::MaxIterations && inf_norm(&g) < tol {
        termination = Termination::GradientTolerance;
    }
    Ok(OptResult {
        x_best: x,
        f_best: f,
        f_initial,
        trace,
        termination,
        restart: 0,
    })
}

/// Jitter a starting point: log slots by N(0, 0.1²), identity slots by U(−0.5, 0.5).
pub fn perturb<T: Scalar>(x0: &TransformedParams<T>, seed: u64, restart: usize) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let normal = Normal::new(0.0, 0.1).expect("valid normal");
    x0.values
        .iter()
        .zip(&x0.slots)
        .map(|(&v, slot)| {
            let d = match slot {
                SlotKind::Log => normal.sample(&mut rng),
                SlotKind::Identity => rng.random_range(-0.5..0.5),
            };
            v + T::lit(d)
        })
        .collect()
}

/// L-BFGS with restarts. Restart 0 starts at `x0`; restart `r > 0` starts at a seeded
/// perturbation of `x0`. Restarts run in parallel; the lowest objective wins, ties
/// going to the lowest restart index.
pub fn minimize<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    x0: &TransformedParams<T>,
    cfg: &OptConfig,
) -> Result<OptResult<T>> {
    cfg.validate()?;
    let runs: Vec<Result<OptResult<T>>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                x0.values.clone()
            } else {
                perturb(x0, cfg.seed, r)
            };
            lbfgs(obj, &start, cfg).map(|mut res| {
                res.restart = r;
                res
            })
        })
        .collect();
    let mut best: Option<OptResult<T>> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(res) => {
                if best.as_ref().is_none_or(|b| res.f_best < b.f_best) {
                    best = Some(res);
                }
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    match (best, first_err) {
        (Some(b), _) => Ok(b),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::NonFiniteObjective),
    }
}

/// Write the trace as CSV with columns `iter,f,grad_norm,step_len`.
pub fn write_trace_csv<T: Scalar, W: Write>(out: W, trace: &[TraceEntry<T>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "f", "grad_norm", "step_len"])?;
    for e in trace {
        w.write_record([
            e.iter.to_string(),
            e.f.to_string(),
            e.grad_norm.to_string(),
            e.step_len.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
