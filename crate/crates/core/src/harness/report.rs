//! Cross-seed aggregates: checkpointed best-so-far metrics, terminal windows
//! and feval-aligned curves.

use serde::{Deserialize, Serialize};

use crate::solver::IterationRecord;

/// Linear-interpolation quantile of unsorted data; NaN for empty input.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Self {
        Spread {
            median: quantile(values, 0.5),
            q25: quantile(values, 0.25),
            q75: quantile(values, 0.75),
        }
    }
}

/// Best-so-far metrics over a prefix of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestSoFar {
    pub f_true: f64,
    pub grad_true_norm: f64,
    pub lambda_true: f64,
    /// Descent step size in effect at the end of the prefix.
    pub alpha: f64,
}

fn best_over<'a>(records: impl Iterator<Item = &'a IterationRecord>) -> Option<BestSoFar> {
    let mut out: Option<BestSoFar> = None;
    for r in records {
        let b = out.get_or_insert(BestSoFar {
            f_true: r.f_true,
            grad_true_norm: r.grad_true_norm,
            lambda_true: r.lambda_true,
            alpha: r.alpha_k,
        });
        b.f_true = b.f_true.min(r.f_true).min(r.f_next_true);
        b.grad_true_norm = b.grad_true_norm.min(r.grad_true_norm);
        b.lambda_true = b.lambda_true.max(r.lambda_true);
        b.alpha = r.alpha_next;
    }
    out
}

/// Best-so-far metrics over iterations `0..=k` (clamped to the run length).
pub fn best_at_iteration(records: &[IterationRecord], k: usize) -> Option<BestSoFar> {
    best_over(records.iter().take(k.saturating_add(1)))
}

/// Piecewise-constant best-so-far metrics over the iterations completed
/// within `budget` function evaluations. Before any iteration completes the
/// starting point's values are used.
pub fn best_at_fevals(records: &[IterationRecord], budget: u64) -> Option<BestSoFar> {
    let first = records.first()?;
    let done = records.iter().take_while(|r| r.fevals <= budget);
    Some(best_over(done).unwrap_or(BestSoFar {
        f_true: first.f_true,
        grad_true_norm: first.grad_true_norm,
        lambda_true: first.lambda_true,
        alpha: first.alpha_k,
    }))
}

/// Powers of two up to and including the first one at or above `max`.
pub fn feval_grid(max: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    while *out.last().unwrap() < max.max(1) {
        let next = out.last().unwrap().saturating_mul(2);
        out.push(next);
    }
    out
}

/// Mean of `f_true` over the trailing `fraction` of the run.
pub fn terminal_window_f(records: &[IterationRecord], fraction: f64) -> f64 {
    if records.is_empty() {
        return f64::NAN;
    }
    let w = ((records.len() as f64 * fraction).ceil() as usize).clamp(1, records.len());
    let tail = &records[records.len() - w..];
    tail.iter().map(|r| r.f_true).sum::<f64>() / w as f64
}

/// Descent step size `alpha_k` at iteration `k`, NaN if the run ended earlier.
pub fn step_size_at(records: &[IterationRecord], k: usize) -> f64 {
    records.get(k).map_or(f64::NAN, |r| r.alpha_k)
}
