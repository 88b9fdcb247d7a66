//! Step-search methods driven by the simulated oracles.
//!
//! [`run_ss2_nc_g`] alternates a gradient step and a negative-curvature step
//! per iteration, each with its own step size updated by `tau` on failure and
//! `1/tau` on success. [`run_ss_g`] drops the curvature step and
//! [`run_ss_nc_cg`] lets a capped-CG solve pick between a Newton-type step and
//! a curvature step with one shared step size.

mod params;
mod record;

pub use params::{Method, SolverParams};
pub use record::{replay_step_sizes, IterationRecord, LedgerMismatch, RunResult, RunStatus};

use crate::directions::{capped_cg, min_eigenpair, nc_direction, CgKind};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, scale, Matrix};
use crate::oracles::{hessian_accuracy, sample_f, sample_g, sample_h, OracleConfig};
use crate::problems::ProblemSpec;
use crate::rng::OracleStreams;

/// Iterates farther than this from the origin abort the run.
pub const DIVERGENCE_RADIUS: f64 = 1e8;

/// Dispatches to the method's runner.
pub fn run(
    method: Method,
    problem: &ProblemSpec,
    ocfg: &OracleConfig,
    params: &SolverParams,
    x0: &[f64],
    streams: OracleStreams,
) -> Result<RunResult> {
    match method {
        Method::Ss2NcG => run_ss2_nc_g(problem, ocfg, params, x0, streams),
        Method::SsG => run_ss_g(problem, ocfg, params, x0, streams),
        Method::SsNcCg => run_ss_nc_cg(problem, ocfg, params, x0, streams, params.cg_eps_cap),
    }
}

pub fn run_ss2_nc_g(
    problem: &ProblemSpec,
    ocfg: &OracleConfig,
    params: &SolverParams,
    x0: &[f64],
    streams: OracleStreams,
) -> Result<RunResult> {
    Driver::new(Method::Ss2NcG, problem, ocfg, params, x0, streams)?.run(|d, x, truth| d.two_step(x, truth))
}

pub fn run_ss_g(
    problem: &ProblemSpec,
    ocfg: &OracleConfig,
    params: &SolverParams,
    x0: &[f64],
    streams: OracleStreams,
) -> Result<RunResult> {
    Driver::new(Method::SsG, problem, ocfg, params, x0, streams)?.run(|d, x, truth| d.gradient_only(x, truth))
}

pub fn run_ss_nc_cg(
    problem: &ProblemSpec,
    ocfg: &OracleConfig,
    params: &SolverParams,
    x0: &[f64],
    streams: OracleStreams,
    eps_cap: f64,
) -> Result<RunResult> {
    if !(eps_cap > 0.0) {
        return Err(Error::Config(format!("eps_cap must be positive, got {eps_cap}")));
    }
    let mut d = Driver::new(Method::SsNcCg, problem, ocfg, params, x0, streams)?;
    d.params.cg_eps_cap = eps_cap;
    d.run(|d, x, truth| d.capped_cg_step(x, truth))
}

/// Exact quantities at the iterate, computed before any oracle draw.
struct PointTruth {
    f: f64,
    grad_norm: f64,
    lambda: f64,
}

struct DescentOutcome {
    x_hat: Vec<f64>,
    alpha_next: f64,
    omega: bool,
    theta: bool,
    f_est: f64,
    f_plus_est: f64,
    i_f: bool,
}

struct NcOutcome {
    x_next: Vec<f64>,
    step_next: f64,
    theta: bool,
    fhat: f64,
    fhat_plus: f64,
    fhat_minus: f64,
    ihat_f: bool,
    sign: i8,
}

struct Driver<'a> {
    method: Method,
    problem: &'a ProblemSpec,
    ocfg: OracleConfig,
    params: SolverParams,
    x0: Vec<f64>,
    streams: OracleStreams,
    alpha: f64,
    beta: f64,
    fevals: u64,
    gevals: u64,
    hevals: u64,
}

impl<'a> Driver<'a> {
    fn new(
        method: Method,
        problem: &'a ProblemSpec,
        ocfg: &OracleConfig,
        params: &SolverParams,
        x0: &[f64],
        streams: OracleStreams,
    ) -> Result<Self> {
        let ocfg = ocfg.resolved();
        ocfg.validate()?;
        let params = params.resolved(ocfg.eps_f);
        params.validate()?;
        if x0.len() != problem.dim {
            return Err(Error::InvalidDimension(format!(
                "x0 has length {}, problem {} has dimension {}",
                x0.len(),
                problem.name,
                problem.dim
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("x0".into()));
        }
        Ok(Driver {
            method,
            problem,
            alpha: params.alpha0,
            beta: if method == Method::SsNcCg {
                params.alpha0
            } else {
                params.beta0
            },
            ocfg,
            params,
            x0: x0.to_vec(),
            streams,
            fevals: 0,
            gevals: 0,
            hevals: 0,
        })
    }

    fn lambda_true(&self, x: &[f64]) -> f64 {
        min_eigenpair(&self.problem.eval_hess(x))
            .map(|e| e.lambda_min)
            .unwrap_or(f64::NAN)
    }

    fn truth_at(&self, x: &[f64]) -> PointTruth {
        PointTruth {
            f: self.problem.eval_f(x),
            grad_norm: norm(&self.problem.eval_grad(x)),
            lambda: self.lambda_true(x),
        }
    }

    fn draw_f(&mut self, x: &[f64]) -> (f64, f64) {
        self.fevals += 1;
        let (est, t) = sample_f(self.problem, x, &self.ocfg, &mut self.streams.zeroth);
        (est, t.error_magnitude)
    }

    fn run<F>(mut self, mut step: F) -> Result<RunResult>
    where
        F: FnMut(&mut Self, &[f64], &PointTruth) -> Result<IterationRecord>,
    {
        let mut records = Vec::with_capacity(self.params.max_iters.min(1 << 16));
        let mut x = self.x0.clone();
        let mut stopping_time = None;
        let mut status = RunStatus::BudgetExhausted;
        for k in 0..self.params.max_iters {
            let truth = self.truth_at(&x);
            if !truth.f.is_finite() || norm(&x) > DIVERGENCE_RADIUS || x.iter().any(|v| !v.is_finite()) {
                let partial = self.finish(records, stopping_time, RunStatus::Diverged);
                return Err(Error::Divergence {
                    iteration: k,
                    reason: format!("iterate norm {:e}, f = {}", norm(&x), truth.f),
                    partial: Box::new(partial),
                });
            }
            let mut rec = step(&mut self, &x, &truth)?;
            rec.k = k;
            rec.fevals = self.fevals;
            rec.gevals = self.gevals;
            rec.hevals = self.hevals;
            x = rec.x_next.clone();
            let stationary = rec.is_stationary(self.params.epsbar_g, self.params.epsbar_h, self.params.epsbar_lambda);
            records.push(rec);
            if stationary && stopping_time.is_none() {
                stopping_time = Some(k);
                if self.params.halt_at_stopping_time {
                    status = RunStatus::HitStoppingTime;
                    break;
                }
            }
            if self.fevals >= self.params.max_fevals {
                break;
            }
        }
        Ok(self.finish(records, stopping_time, status))
    }

    fn finish(&self, records: Vec<IterationRecord>, stopping_time: Option<usize>, status: RunStatus) -> RunResult {
        RunResult {
            method: self.method,
            records,
            stopping_time,
            status,
            feval_count: self.fevals,
            geval_count: self.gevals,
            heval_count: self.hevals,
        }
    }

    fn blank_record(&self, x: &[f64], truth: &PointTruth) -> IterationRecord {
        IterationRecord {
            k: 0,
            fevals: 0,
            gevals: 0,
            hevals: 0,
            x: x.to_vec(),
            x_next: x.to_vec(),
            f_true: truth.f,
            f_hat_true: truth.f,
            f_next_true: truth.f,
            grad_true_norm: truth.grad_norm,
            lambda_true: truth.lambda,
            f_est: f64::NAN,
            f_plus_est: f64::NAN,
            g_est_norm: f64::NAN,
            lambda_est: f64::NAN,
            fhat_est: f64::NAN,
            fhat_plus_est: f64::NAN,
            fhat_minus_est: f64::NAN,
            nc_curvature: f64::NAN,
            alpha_k: self.alpha,
            beta_k: self.beta,
            alpha_next: self.alpha,
            beta_next: self.beta,
            omega_g: false,
            omega_h: false,
            theta_g: false,
            theta_h: false,
            i_f: true,
            i_g: true,
            ihat_f: true,
            i_h: true,
            i_h_oracle: true,
            sign_choice: 0,
        }
    }

    /// Relaxed Armijo test along `d` with the current `alpha`; `d^T g` enters
    /// the sufficient-decrease term.
    fn armijo_descent(&mut self, x: &[f64], d: &[f64], g: &[f64], step: f64) -> DescentOutcome {
        let trial = axpy(x, step, d);
        let (f_est, e0) = self.draw_f(x);
        let (f_plus_est, e1) = self.draw_f(&trial);
        let p = &self.params;
        let accept = f_plus_est <= f_est + p.c_d * step * dot(d, g) + p.e_f;
        let i_f = e0 + e1 <= p.e_f;
        let (x_hat, next) = if accept {
            (trial, step / p.tau)
        } else {
            (x.to_vec(), p.tau * step)
        };
        DescentOutcome {
            x_hat,
            alpha_next: next,
            omega: true,
            theta: accept,
            f_est,
            f_plus_est,
            i_f,
        }
    }

    /// Gradient half-step: early termination, then the relaxed Armijo test.
    fn descent_step(&mut self, x: &[f64], g: &[f64]) -> DescentOutcome {
        if norm(g) <= self.params.grad_threshold() {
            return DescentOutcome {
                x_hat: x.to_vec(),
                alpha_next: self.alpha,
                omega: false,
                theta: false,
                f_est: f64::NAN,
                f_plus_est: f64::NAN,
                i_f: true,
            };
        }
        let d: Vec<f64> = g.iter().map(|v| -v).collect();
        self.armijo_descent(x, &d, g, self.alpha)
    }

    /// Curvature half-step along `+-q` with step `step`; the sign is chosen by
    /// the smaller trial estimate, ties going to `+q`.
    fn curvature_step(&mut self, x_hat: &[f64], q: &[f64], curvature: f64, step: f64) -> NcOutcome {
        let plus = axpy(x_hat, step, q);
        let minus = axpy(x_hat, -step, q);
        let (fhat, e0) = self.draw_f(x_hat);
        let (fhat_plus, ep) = self.draw_f(&plus);
        let (fhat_minus, em) = self.draw_f(&minus);
        let p = &self.params;
        let best = fhat_plus.min(fhat_minus);
        let accept = best <= fhat + p.c_p * step * step * curvature + p.e_f;
        let ihat_f = e0 + ep.max(em) <= p.e_f;
        let (x_next, next, sign) = if accept {
            if fhat_plus <= fhat_minus {
                (plus, step / p.tau, 1)
            } else {
                (minus, step / p.tau, -1)
            }
        } else {
            (x_hat.to_vec(), p.tau * step, 0)
        };
        NcOutcome {
            x_next,
            step_next: next,
            theta: accept,
            fhat,
            fhat_plus,
            fhat_minus,
            ihat_f,
            sign,
        }
    }

    fn draw_g(&mut self, x: &[f64]) -> (Vec<f64>, bool) {
        self.gevals += 1;
        let (g, t) = sample_g(self.problem, x, &self.ocfg, &mut self.streams.first);
        (g, t.accurate_flag)
    }

    fn draw_h(&mut self, x: &[f64]) -> (Matrix, Matrix) {
        self.hevals += 1;
        let (h, t) = sample_h(self.problem, x, &self.ocfg, &mut self.streams.second);
        (h, t.true_value)
    }

    fn apply_descent(&mut self, rec: &mut IterationRecord, out: &DescentOutcome) {
        rec.omega_g = out.omega;
        rec.theta_g = out.theta;
        rec.f_est = out.f_est;
        rec.f_plus_est = out.f_plus_est;
        rec.i_f = out.i_f;
        rec.alpha_next = out.alpha_next;
        rec.x_next = out.x_hat.clone();
        rec.f_hat_true = self.problem.eval_f(&out.x_hat);
        rec.f_next_true = rec.f_hat_true;
        self.alpha = out.alpha_next;
    }

    fn apply_curvature(&mut self, rec: &mut IterationRecord, out: NcOutcome) {
        rec.omega_h = true;
        rec.theta_h = out.theta;
        rec.fhat_est = out.fhat;
        rec.fhat_plus_est = out.fhat_plus;
        rec.fhat_minus_est = out.fhat_minus;
        rec.ihat_f = out.ihat_f;
        rec.sign_choice = out.sign;
        rec.f_next_true = self.problem.eval_f(&out.x_next);
        rec.x_next = out.x_next;
    }

    fn two_step(&mut self, x: &[f64], truth: &PointTruth) -> Result<IterationRecord> {
        let mut rec = self.blank_record(x, truth);
        let (g, i_g) = self.draw_g(x);
        rec.g_est_norm = norm(&g);
        rec.i_g = i_g;
        let desc = self.descent_step(x, &g);
        self.apply_descent(&mut rec, &desc);
        let x_hat = desc.x_hat;

        let (h_est, h_true) = self.draw_h(&x_hat);
        let eig = min_eigenpair(&h_est)?;
        rec.lambda_est = eig.lambda_min;
        let lambda_hat_true = if desc.theta {
            self.lambda_true(&x_hat)
        } else {
            truth.lambda
        };

        if eig.lambda_min >= -self.params.curvature_threshold() {
            let acc = hessian_accuracy(&h_true, &h_est, eig.lambda_min, lambda_hat_true, None, &self.ocfg);
            rec.i_h = acc.indicator;
            rec.i_h_oracle = acc.oracle_form;
            return Ok(rec);
        }
        let nc = nc_direction(&h_est, &eig, self.params.gamma, self.params.delta)?;
        let acc = hessian_accuracy(
            &h_true,
            &h_est,
            eig.lambda_min,
            lambda_hat_true,
            Some(&nc.q),
            &self.ocfg,
        );
        rec.i_h = acc.indicator;
        rec.i_h_oracle = acc.oracle_form;
        rec.nc_curvature = nc.curvature;
        let out = self.curvature_step(&x_hat, &nc.q, nc.curvature, self.beta);
        rec.beta_next = out.step_next;
        self.beta = out.step_next;
        self.apply_curvature(&mut rec, out);
        Ok(rec)
    }

    fn gradient_only(&mut self, x: &[f64], truth: &PointTruth) -> Result<IterationRecord> {
        let mut rec = self.blank_record(x, truth);
        let (g, i_g) = self.draw_g(x);
        rec.g_est_norm = norm(&g);
        rec.i_g = i_g;
        let desc = self.descent_step(x, &g);
        self.apply_descent(&mut rec, &desc);
        Ok(rec)
    }

    fn capped_cg_step(&mut self, x: &[f64], truth: &PointTruth) -> Result<IterationRecord> {
        let mut rec = self.blank_record(x, truth);
        let (g, i_g) = self.draw_g(x);
        rec.g_est_norm = norm(&g);
        rec.i_g = i_g;
        let (h_est, h_true) = self.draw_h(x);
        let eig = min_eigenpair(&h_est)?;
        rec.lambda_est = eig.lambda_min;

        // Near-zero gradient: CG sees an empty Krylov space, so fall back to
        // the eigenvector as the curvature direction.
        let curvature_dir = if norm(&g) <= self.params.grad_threshold() {
            if eig.lambda_min < -self.params.curvature_threshold() {
                Some(nc_direction(&h_est, &eig, self.params.gamma, self.params.delta)?)
            } else {
                None
            }
        } else {
            let out = capped_cg(&h_est, &g, self.params.cg_eps_cap, self.params.cg_max_iter)?;
            match out.kind {
                CgKind::NewtonLike => {
                    let desc = self.armijo_descent(x, &out.direction, &g, self.alpha);
                    self.apply_descent(&mut rec, &desc);
                    rec.beta_next = desc.alpha_next;
                    self.beta = desc.alpha_next;
                    rec.f_hat_true = truth.f;
                    let acc = hessian_accuracy(&h_true, &h_est, eig.lambda_min, truth.lambda, None, &self.ocfg);
                    rec.i_h = acc.indicator;
                    rec.i_h_oracle = acc.oracle_form;
                    return Ok(rec);
                }
                CgKind::NegativeCurvature => {
                    let p = out.direction;
                    let pp = dot(&p, &p);
                    let mu = h_est.quad_form(&p) / pp;
                    let q = scale(&p, self.params.delta * mu.abs() / pp.sqrt());
                    let curvature = h_est.quad_form(&q);
                    Some(crate::directions::NcDirection {
                        q,
                        gamma: self.params.gamma,
                        delta: self.params.delta,
                        curvature,
                    })
                }
            }
        };

        let Some(nc) = curvature_dir else {
            let acc = hessian_accuracy(&h_true, &h_est, eig.lambda_min, truth.lambda, None, &self.ocfg);
            rec.i_h = acc.indicator;
            rec.i_h_oracle = acc.oracle_form;
            return Ok(rec);
        };
        let acc = hessian_accuracy(&h_true, &h_est, eig.lambda_min, truth.lambda, Some(&nc.q), &self.ocfg);
        rec.i_h = acc.indicator;
        rec.i_h_oracle = acc.oracle_form;
        rec.nc_curvature = nc.curvature;
        let out = self.curvature_step(x, &nc.q, nc.curvature, self.alpha);
        rec.alpha_next = out.step_next;
        rec.beta_next = out.step_next;
        self.alpha = out.step_next;
        self.beta = out.step_next;
        self.apply_curvature(&mut rec, out);
        Ok(rec)
    }
}

#[cfg(test)]
mod tests;
