use std::path::Path;

use serde::{Deserialize, Serialize};

use super::loss::Problem;
use super::quat;
use super::{AlignConfig, GlobalState, LossBreakdown};
use crate::backbone::PairPrediction;
use crate::error::{Error, Result};

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub pairwise: f64,
    pub rot: f64,
    pub trans: f64,
    pub total: f64,
    pub step: f64,
}

impl TraceRow {
    fn new(iter: usize, b: &LossBreakdown, step: f64) -> Self {
        TraceRow {
            iter,
            pairwise: b.pairwise,
            rot: b.rot,
            trans: b.trans,
            total: b.total,
            step,
        }
    }
}

pub fn write_trace(trace: &[TraceRow], path: &Path) -> Result<()> {
    crate::io::write_csv(trace, path)
}

/// Preconditioned gradient descent with Armijo backtracking.
///
/// The pairwise norm is smoothed by `config.smoothing` so the objective is
/// differentiable where residuals vanish. Each iteration scales the
/// gradient by the inverse of a diagonal curvature estimate taken at the
/// current point (reweighted Gauss-Newton diagonal of the pairwise terms
/// plus the symmetry terms), backtracks from `min(lr, 2·previous step)`,
/// renormalizes quaternions, re-centers the log scales and then re-solves
/// every depth in closed form when that does not raise the loss. Planes are
/// re-fitted every `plane_refresh_every` iterations and kept only if the
/// loss does not rise, so the trace never increases.
///
/// Row 0 of the trace is the initial loss.
pub fn optimize(
    initial: &GlobalState,
    preds: &[PairPrediction],
    config: &AlignConfig,
) -> Result<(GlobalState, Vec<TraceRow>)> {
    let mut trace = Vec::new();
    let state = optimize_traced(initial, preds, config, &mut trace)?;
    Ok((state, trace))
}

/// As [`optimize`], but the trace is kept in `trace` even when the run
/// fails.
pub fn optimize_traced(
    initial: &GlobalState,
    preds: &[PairPrediction],
    config: &AlignConfig,
    trace: &mut Vec<TraceRow>,
) -> Result<GlobalState> {
    config.validate()?;
    let w = config.weights();
    let eps = config.smoothing;
    let problem = Problem::new(initial, preds)?;
    let mut state = initial.clone();
    let mut planes = initial.planes.clone();
    let mut x = initial.params();
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut cur = problem.eval_full(&x, &planes, &w, eps, Some(&mut g), Some(&mut h))?;
    trace.push(TraceRow::new(0, &cur, 0.0));
    check(&cur, &g, 0)?;

    let free = free_mask(&problem, initial, config);
    let mut prev_step = config.lr;
    let mut trial = vec![0.0; n];
    for it in 1..=config.max_iters {
        if config.use_sym && config.plane_refresh_every > 0 && it % config.plane_refresh_every == 0 {
            state.set_params(&x);
            let fresh = state.estimate_planes();
            if !fresh.is_empty() && fresh != planes {
                let mut g2 = vec![0.0; n];
                let mut h2 = vec![0.0; n];
                if let Ok(b) = problem.eval_full(&x, &fresh, &w, eps, Some(&mut g2), Some(&mut h2)) {
                    if b.total <= cur.total && finite(&b, &g2) {
                        planes = fresh;
                        cur = b;
                        g = g2;
                        h = h2;
                    }
                }
            }
        }

        let floor = 1e-9 * h.iter().cloned().fold(0.0, f64::max) + f64::MIN_POSITIVE;
        // project onto the gauge on both sides so the step stays a descent direction
        let mut dir = g.clone();
        center_log_scales(&problem, &mut dir);
        for i in 0..n {
            dir[i] = if free[i] { -dir[i] / (h[i] + floor) } else { 0.0 };
        }
        center_log_scales(&problem, &mut dir);
        let slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            log::debug!("stopping at iteration {it}: no descent direction");
            break;
        }

        let mut step = config.lr.min(2.0 * prev_step);
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            for i in 0..n {
                trial[i] = x[i] + step * dir[i];
            }
            retract(&problem, &free, &mut trial);
            if let Ok(b) = problem.eval_full(&trial, &planes, &w, eps, None, None) {
                if b.total.is_finite() && b.total <= cur.total + ARMIJO_C * step * slope {
                    accepted = Some(b);
                    break;
                }
            }
            step *= 0.5;
        }
        let Some(stepped) = accepted else {
            log::debug!("stopping at iteration {it}: line search failed");
            break;
        };
        let mut refit = trial.clone();
        problem.refit_depths(&mut refit);
        if let Ok(b) = problem.eval_full(&refit, &planes, &w, eps, None, None) {
            if b.total <= stepped.total {
                trial.copy_from_slice(&refit);
            }
        }
        let next = problem.eval_full(&trial, &planes, &w, eps, Some(&mut g), Some(&mut h))?;
        check(&next, &g, it)?;
        let change = (cur.total - next.total) / cur.total.abs().max(f64::MIN_POSITIVE);
        x.copy_from_slice(&trial);
        cur = next;
        prev_step = step;
        trace.push(TraceRow::new(it, &cur, step));
        if change < config.tol {
            log::debug!("converged at iteration {it}");
            break;
        }
    }
    state.set_params(&x);
    state.planes = planes;
    Ok(state)
}

fn finite(b: &LossBreakdown, g: &[f64]) -> bool {
    b.total.is_finite() && g.iter().all(|v| v.is_finite())
}

fn check(b: &LossBreakdown, g: &[f64], iteration: usize) -> Result<()> {
    if finite(b, g) {
        Ok(())
    } else {
        Err(Error::NumericalFailure { iteration })
    }
}

fn center_log_scales(problem: &Problem, v: &mut [f64]) {
    if problem.n_edges == 0 {
        return;
    }
    let idx: Vec<usize> = (0..problem.n_edges).map(|e| problem.edge_offset(e) + 7).collect();
    let mean = idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64;
    for i in idx {
        v[i] -= mean;
    }
}

fn retract(problem: &Problem, free: &[bool], x: &mut [f64]) {
    let offsets = (0..problem.n_views)
        .map(|v| 7 * v)
        .chain((0..problem.n_edges).map(|e| problem.edge_offset(e)));
    for o in offsets.filter(|&o| free[o]) {
        let q = quat::normalized(&[x[o], x[o + 1], x[o + 2], x[o + 3]]);
        x[o..o + 4].copy_from_slice(&q);
    }
    center_log_scales(problem, x);
}

/// Parameters the optimizer may move: everything except the real poses
/// when they are held fixed.
fn free_mask(problem: &Problem, state: &GlobalState, config: &AlignConfig) -> Vec<bool> {
    let mut free = vec![true; problem.n_params];
    if config.fix_real {
        for (v, view) in state.views.iter().enumerate() {
            if view.view.is_real() {
                free[7 * v..7 * v + 7].fill(false);
            }
        }
    }
    free
}
