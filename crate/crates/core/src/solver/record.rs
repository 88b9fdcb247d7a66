use serde::{Deserialize, Serialize};

use super::params::{Method, SolverParams};

/// Everything observed during one iteration. Fields named `*_true` and the
/// `i_*` indicators are instrumentation computed from exact derivatives; the
/// solver's control flow never reads them.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// Cumulative oracle counts at the end of the iteration.
    pub fevals: u64,
    pub gevals: u64,
    pub hevals: u64,
    /// Iterate at the start of the iteration.
    pub x: Vec<f64>,
    /// Iterate handed to the next iteration.
    pub x_next: Vec<f64>,
    pub f_true: f64,
    /// `f` at the intermediate point after the descent step.
    pub f_hat_true: f64,
    /// `f` at the next iterate.
    pub f_next_true: f64,
    pub grad_true_norm: f64,
    pub lambda_true: f64,
    /// Function estimates; NaN when not drawn.
    pub f_est: f64,
    pub f_plus_est: f64,
    pub g_est_norm: f64,
    pub lambda_est: f64,
    pub fhat_est: f64,
    pub fhat_plus_est: f64,
    pub fhat_minus_est: f64,
    /// `q^T H_k q` for the NC direction used; NaN without one.
    pub nc_curvature: f64,
    pub alpha_k: f64,
    pub beta_k: f64,
    pub alpha_next: f64,
    pub beta_next: f64,
    pub omega_g: bool,
    pub omega_h: bool,
    pub theta_g: bool,
    pub theta_h: bool,
    pub i_f: bool,
    pub i_g: bool,
    pub ihat_f: bool,
    /// Second-order indicator with the squared absolute term.
    pub i_h: bool,
    /// Same event with the unsquared absolute term.
    pub i_h_oracle: bool,
    /// +1 / -1 for an accepted NC step, 0 otherwise.
    pub sign_choice: i8,
}

impl IterationRecord {
    /// Stationarity test against the given neighborhood.
    pub fn is_stationary(&self, epsbar_g: f64, epsbar_h: f64, epsbar_lambda: f64) -> bool {
        self.grad_true_norm <= epsbar_g && self.lambda_true >= -epsbar_lambda.max(epsbar_h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    HitStoppingTime,
    BudgetExhausted,
    Diverged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub method: Method,
    pub records: Vec<IterationRecord>,
    pub stopping_time: Option<usize>,
    pub status: RunStatus,
    pub feval_count: u64,
    pub geval_count: u64,
    pub heval_count: u64,
}

impl RunResult {
    pub fn final_x(&self) -> Option<Vec<f64>> {
        self.records.last().map(|r| r.x_next.clone())
    }
}

/// Where the step-size ledger first disagrees with the recorded flags.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerMismatch {
    pub k: usize,
    pub field: &'static str,
    pub expected: f64,
    pub recorded: f64,
}

/// Rebuilds `alpha_k`, `beta_k` from `(alpha0, beta0, tau)` and the recorded
/// `omega`/`theta` flags and checks every logged value bit-for-bit.
pub fn replay_step_sizes(
    records: &[IterationRecord],
    params: &SolverParams,
    method: Method,
) -> Result<(), LedgerMismatch> {
    let tau = params.tau;
    let update = |s: f64, omega: bool, theta: bool| {
        if !omega {
            s
        } else if theta {
            s / tau
        } else {
            tau * s
        }
    };
    let mut alpha = params.alpha0;
    let mut beta = match method {
        Method::SsNcCg => params.alpha0,
        _ => params.beta0,
    };
    let check = |k, field, expected: f64, recorded: f64| {
        if expected.to_bits() == recorded.to_bits() {
            Ok(())
        } else {
            Err(LedgerMismatch {
                k,
                field,
                expected,
                recorded,
            })
        }
    };
    for r in records {
        check(r.k, "alpha_k", alpha, r.alpha_k)?;
        check(r.k, "beta_k", beta, r.beta_k)?;
        let (a_next, b_next) = match method {
            Method::SsNcCg => {
                let a = if r.omega_g {
                    update(alpha, true, r.theta_g)
                } else {
                    update(alpha, r.omega_h, r.theta_h)
                };
                (a, a)
            }
            _ => (update(alpha, r.omega_g, r.theta_g), update(beta, r.omega_h, r.theta_h)),
        };
        check(r.k, "alpha_next", a_next, r.alpha_next)?;
        check(r.k, "beta_next", b_next, r.beta_next)?;
        alpha = a_next;
        beta = b_next;
    }
    Ok(())
}
