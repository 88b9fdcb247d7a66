//! Closed-form constants from the analysis, parameter checks, neighborhood
//! floors, stopping times, tail estimates and the per-iteration lemma audit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::{OracleConfig, ZerothModel};
use crate::problems::ProblemSpec;
use crate::solver::{IterationRecord, RunResult, SolverParams};

/// Relative slack for comparing exact function values in the audit; covers
/// rounding in `f` itself, not modelling error.
const AUDIT_ROUNDING: f64 = 64.0 * f64::EPSILON;

/// `1 - 2(1-eta)(1-kappa_g) / (1 + kappa_g + (1-eta)(1-kappa_g))`.
pub fn kappa_g_prime(eta: f64, kappa_g: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("eta must lie in (0,1), got {eta}")));
    }
    if !(0.0..1.0).contains(&kappa_g) {
        return Err(Error::Domain(format!("kappa_g must lie in [0,1), got {kappa_g}")));
    }
    let a = (1.0 - eta) * (1.0 - kappa_g);
    Ok(1.0 - 2.0 * a / (1.0 + kappa_g + a))
}

/// `2(1/(1+kappa_g') - c_d) / L_g`; nonpositive values are infeasible.
pub fn alpha_bar(l_g: f64, c_d: f64, kappa_g_prime: f64) -> Result<f64> {
    if !(l_g > 0.0) {
        return Err(Error::Domain(format!("L_g must be positive, got {l_g}")));
    }
    let v = 2.0 * (1.0 / (1.0 + kappa_g_prime) - c_d) / l_g;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Infeasible(format!(
            "alpha_bar = {v} <= 0: c_d = {c_d} must be below 1/(1+kappa_g') = {}",
            1.0 / (1.0 + kappa_g_prime)
        )))
    }
}

/// `3(gamma - kappa_H - 2 c_p gamma) / (2 delta L_H)`; nonpositive values are infeasible.
pub fn beta_bar(l_h: f64, gamma: f64, kappa_h: f64, c_p: f64, delta: f64) -> Result<f64> {
    if !(l_h > 0.0) {
        return Err(Error::Domain(format!("L_H must be positive, got {l_h}")));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    let v = 3.0 * (gamma - kappa_h - 2.0 * c_p * gamma) / (2.0 * delta * l_h);
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Infeasible(format!(
            "beta_bar = {v} <= 0: need gamma - kappa_H - 2 c_p gamma > 0"
        )))
    }
}

/// Guaranteed decrease of a good descent step, `c_d c_g^2 epsbar_g^2 alpha`.
pub fn h_d(alpha: f64, params: &SolverParams) -> f64 {
    params.c_d * h_d_printed(alpha, params)
}

/// The descent decrease as printed in the lemma proof, without `c_d`.
pub fn h_d_printed(alpha: f64, params: &SolverParams) -> f64 {
    params.c_g * params.c_g * params.epsbar_g * params.epsbar_g * alpha
}

/// `c_p gamma delta^2 c_H^3 max(epsbar_H, epsbar_lambda)^3 beta^2`.
pub fn h_p(beta: f64, params: &SolverParams) -> f64 {
    let m = params.epsbar_h.max(params.epsbar_lambda);
    params.c_p * params.gamma * params.delta.powi(2) * params.c_h.powi(3) * m.powi(3) * beta * beta
}

/// `max(log_tau(alpha_bar/alpha0), log_tau(beta_bar/beta0), 0)`, unrounded.
pub fn c_tau(tau: f64, alpha_bar: f64, alpha0: f64, beta_bar: f64, beta0: f64) -> f64 {
    let lt = tau.ln();
    ((alpha_bar / alpha0).ln() / lt)
        .max((beta_bar / beta0).ln() / lt)
        .max(0.0)
}

/// Inputs of the complexity theorems that have no solver-side counterpart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoremInputs {
    pub p_bar_g: f64,
    pub p_bar_h: f64,
    /// Slack `s` of the subexponential theorem.
    pub s: f64,
}

impl Default for TheoremInputs {
    fn default() -> Self {
        TheoremInputs {
            p_bar_g: 0.95,
            p_bar_h: 0.95,
            s: 0.0,
        }
    }
}

impl TheoremInputs {
    /// `p_bar_g p_bar_H + p_bar_g + p_bar_H - 2`.
    pub fn c_gh(&self) -> f64 {
        self.p_bar_g * self.p_bar_h + self.p_bar_g + self.p_bar_h - 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodFloors {
    pub g: f64,
    pub h: f64,
    pub lambda: f64,
}

// `num / den` with an exact-zero numerator giving 0 and a nonpositive
// denominator giving infinity.
fn ratio_floor(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Minimal neighborhood sizes for the per-iteration lemma to apply.
pub fn lemma_floors(params: &SolverParams, ocfg: &OracleConfig) -> NeighborhoodFloors {
    let o = ocfg.resolved();
    let den_g = (params.eta * params.c_g * (1.0 - o.kappa_g)).min(1.0 - o.kappa_g - params.c_g);
    let curv = params.delta * (params.gamma - o.kappa_h - 2.0 * params.c_p * params.gamma);
    let h = if o.eps_h == 0.0 {
        0.0
    } else if params.c_h > 0.0 && curv > 0.0 {
        o.eps_h / params.c_h * (2.0 / curv).sqrt()
    } else {
        f64::INFINITY
    };
    NeighborhoodFloors {
        g: ratio_floor(2.0 * o.eps_g, den_g),
        h,
        lambda: ratio_floor(o.eps_lambda, 1.0 - o.kappa_lambda - params.c_h),
    }
}

/// `16 eps_f` for bounded noise, `16 eps_f + 32/a + 4s` for subexponential noise.
pub fn eps_c(ocfg: &OracleConfig, inputs: &TheoremInputs) -> f64 {
    match ocfg.zeroth_model {
        ZerothModel::Bounded => 16.0 * ocfg.eps_f,
        ZerothModel::Subexponential => 16.0 * ocfg.eps_f + 32.0 / ocfg.subexp_a + 4.0 * inputs.s,
    }
}

/// Floors required by the complexity theorems: the lemma floors combined
/// with the `eps_c` terms.
pub fn theorem_floors(
    params: &SolverParams,
    ocfg: &OracleConfig,
    alpha_bar: f64,
    beta_bar: f64,
    inputs: &TheoremInputs,
) -> NeighborhoodFloors {
    let base = lemma_floors(params, ocfg);
    let ec = eps_c(ocfg, inputs);
    let cgh = inputs.c_gh();
    let g_term = ratio_floor(ec, cgh * params.c_d * alpha_bar * params.c_g * params.c_g).sqrt();
    let h_term = ratio_floor(ec, cgh * params.c_p * beta_bar * beta_bar * params.c_h.powi(3)).cbrt();
    NeighborhoodFloors {
        g: base.g.max(g_term),
        h: base.h.max(h_term),
        lambda: base.lambda.max(h_term),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub kappa_g_prime: f64,
    pub alpha_bar: f64,
    pub beta_bar: f64,
    /// `h_d(alpha_bar)` including `c_d`.
    pub h_d_at_alpha_bar: f64,
    /// `h_d(alpha_bar)` as printed, without `c_d`.
    pub h_d_printed_at_alpha_bar: f64,
    pub h_p_at_beta_bar: f64,
    /// `min(c_d alpha_bar c_g^2 epsbar_g^2, c_p beta_bar^2 c_H^3 max^3)`.
    pub c_alpha_beta: f64,
    /// `min(h_d(alpha_bar), h_p(beta_bar))`.
    pub c_alpha_beta_h: f64,
    pub c_tau: f64,
    pub neighborhood_floor_g: f64,
    pub neighborhood_floor_h: f64,
    pub neighborhood_floor_lambda: f64,
    pub theorem_floor_g: f64,
    pub theorem_floor_h: f64,
    pub theorem_floor_lambda: f64,
}

impl TheoryConstants {
    pub fn compute(
        problem: &ProblemSpec,
        params: &SolverParams,
        ocfg: &OracleConfig,
        inputs: &TheoremInputs,
    ) -> Result<Self> {
        let o = ocfg.resolved();
        let kgp = kappa_g_prime(params.eta, o.kappa_g)?;
        let ab = alpha_bar(problem.lipschitz_g, params.c_d, kgp)?;
        let bb = beta_bar(problem.lipschitz_h, params.gamma, o.kappa_h, params.c_p, params.delta)?;
        let m = params.epsbar_h.max(params.epsbar_lambda);
        let c_thm = (params.c_d * ab * params.c_g.powi(2) * params.epsbar_g.powi(2))
            .min(params.c_p * bb * bb * params.c_h.powi(3) * m.powi(3));
        let lemma = lemma_floors(params, &o);
        let thm = theorem_floors(params, &o, ab, bb, inputs);
        Ok(TheoryConstants {
            kappa_g_prime: kgp,
            alpha_bar: ab,
            beta_bar: bb,
            h_d_at_alpha_bar: h_d(ab, params),
            h_d_printed_at_alpha_bar: h_d_printed(ab, params),
            h_p_at_beta_bar: h_p(bb, params),
            c_alpha_beta: c_thm,
            c_alpha_beta_h: h_d(ab, params).min(h_p(bb, params)),
            c_tau: c_tau(params.tau, ab, params.alpha0, bb, params.beta0),
            neighborhood_floor_g: lemma.g,
            neighborhood_floor_h: lemma.h,
            neighborhood_floor_lambda: lemma.lambda,
            theorem_floor_g: thm.g,
            theorem_floor_h: thm.h,
            theorem_floor_lambda: thm.lambda,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

/// Checks the parameter ranges, the `e_f` condition and the neighborhood
/// floors of the analysis. Failures are warnings; experiments misspecify
/// some of them on purpose.
pub fn validate_params(params: &SolverParams, ocfg: &OracleConfig) -> ValidationReport {
    let o = ocfg.resolved();
    let p = params;
    let mut r = ValidationReport::default();

    let cd_max = 0.5 + (1.0 - p.eta) * (1.0 - o.kappa_g) / (2.0 * (1.0 + o.kappa_g));
    r.push(
        "c_d",
        p.c_d > 0.0 && p.c_d < cd_max,
        format!("0 < c_d = {} < {cd_max}", p.c_d),
    );
    r.push(
        "c_g",
        p.c_g > 0.0 && p.c_g < 1.0 - o.kappa_g,
        format!("0 < c_g = {} < 1 - kappa_g = {}", p.c_g, 1.0 - o.kappa_g),
    );
    r.push("eta", p.eta > 0.0 && p.eta < 1.0, format!("0 < eta = {} < 1", p.eta));
    let cp_max = (p.gamma - o.kappa_h) / (2.0 * p.gamma);
    r.push(
        "c_p",
        p.c_p > 0.0 && p.c_p < cp_max,
        format!("0 < c_p = {} < {cp_max}", p.c_p),
    );
    r.push(
        "kappa_h",
        o.kappa_h >= 0.0 && o.kappa_h < p.gamma && p.gamma <= 1.0,
        format!("0 <= kappa_H = {} < gamma = {} <= 1", o.kappa_h, p.gamma),
    );
    r.push(
        "c_h",
        p.c_h > 0.0 && p.c_h < 1.0 - o.kappa_lambda,
        format!("0 < c_H = {} < 1 - kappa_lambda = {}", p.c_h, 1.0 - o.kappa_lambda),
    );
    let ef_min = match o.zeroth_model {
        ZerothModel::Bounded => 2.0 * o.eps_f,
        ZerothModel::Subexponential => 2.0 * o.eps_f + 5.0 / o.subexp_a,
    };
    r.push("e_f", p.e_f >= ef_min, format!("e_f = {} >= {ef_min}", p.e_f));
    let fl = lemma_floors(p, &o);
    r.push(
        "epsbar_g",
        p.epsbar_g >= fl.g,
        format!("epsbar_g = {} >= {}", p.epsbar_g, fl.g),
    );
    r.push(
        "epsbar_h",
        p.epsbar_h >= fl.h,
        format!("epsbar_H = {} >= {}", p.epsbar_h, fl.h),
    );
    r.push(
        "epsbar_lambda",
        p.epsbar_lambda >= fl.lambda,
        format!("epsbar_lambda = {} >= {}", p.epsbar_lambda, fl.lambda),
    );
    r
}

/// First index whose iterate is stationary at the given tolerances.
pub fn stopping_time(records: &[IterationRecord], epsbar_g: f64, epsbar_h: f64, epsbar_lambda: f64) -> Option<usize> {
    records
        .iter()
        .position(|r| r.is_stationary(epsbar_g, epsbar_h, epsbar_lambda))
        .map(|i| records[i].k)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: usize,
    /// Fraction of runs with `N > t`; runs that never stopped count as exceeding.
    pub estimate: f64,
    pub std_err: f64,
}

/// Empirical survival curve of the stopping time with binomial standard errors.
pub fn tail_estimate(stopping_times: &[Option<usize>], t_grid: &[usize]) -> Result<Vec<TailPoint>> {
    if stopping_times.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "tail estimate needs at least 2 runs, got {}",
            stopping_times.len()
        )));
    }
    let n = stopping_times.len() as f64;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let exceed = stopping_times.iter().filter(|s| s.is_none_or(|s| s > t)).count() as f64;
            let p = exceed / n;
            TailPoint {
                t,
                estimate: p,
                std_err: (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect())
}

/// `tail_estimate` over run results.
pub fn tail_estimate_runs(results: &[RunResult], t_grid: &[usize]) -> Result<Vec<TailPoint>> {
    let times: Vec<_> = results.iter().map(|r| r.stopping_time).collect();
    tail_estimate(&times, t_grid)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IndicatorFrequencies {
    pub iterations: usize,
    pub i_f: f64,
    pub i_g: f64,
    pub i_h: f64,
    pub i_h_oracle: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub iterations_audited: usize,
    /// Good gradient, non-skipped, `alpha_k <= alpha_bar`, yet unsuccessful.
    pub violations_i: usize,
    /// Good Hessian, curvature detected, `beta_k <= beta_bar`, yet unsuccessful.
    pub violations_ii: usize,
    /// Successful good descent step without `f(x_{k+1}) <= f(x_k) - h_d(alpha_k) + 4 e_f`.
    pub violations_iii: usize,
    /// Successful good curvature step without `f(x_{k+1}) <= f(x_k) - h_p(beta_k) + 4 e_f`.
    pub violations_iv: usize,
    /// Both steps skipped with both estimates accurate.
    pub violations_v: usize,
    /// Property (iii) evaluated with the printed `h_d` (no `c_d`).
    pub violations_iii_printed_h_d: usize,
    /// Half-step bounds: `f(x_hat) <= f(x_k) + 2 e_f` on accepted descent steps.
    pub violations_descent_half: usize,
    /// `f(x_{k+1}) <= f(x_hat) + 2 e_f` on accepted curvature steps.
    pub violations_nc_half: usize,
    /// `f(x_hat) <= f(x_k) - h_d(alpha_k) + 2 e_f` on good successful descent steps.
    pub violations_descent_half_good: usize,
    /// `f(x_{k+1}) <= f(x_hat) - h_p(beta_k) + 2 e_f` on good successful curvature steps.
    pub violations_nc_half_good: usize,
    pub pooled: IndicatorFrequencies,
    pub per_run: Vec<IndicatorFrequencies>,
}

impl AuditReport {
    /// Sum of the five lemma property violation counts.
    pub fn lemma_violations(&self) -> usize {
        self.violations_i + self.violations_ii + self.violations_iii + self.violations_iv + self.violations_v
    }
}

fn le_with_rounding(lhs: f64, rhs: f64, scale: f64) -> bool {
    lhs <= rhs + AUDIT_ROUNDING * scale.max(1.0)
}

fn frequencies(records: &[&IterationRecord]) -> IndicatorFrequencies {
    let n = records.len();
    if n == 0 {
        return IndicatorFrequencies::default();
    }
    let frac = |f: &dyn Fn(&IterationRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / n as f64;
    IndicatorFrequencies {
        iterations: n,
        i_f: frac(&|r| r.i_f),
        i_g: frac(&|r| r.i_g),
        i_h: frac(&|r| r.i_h),
        i_h_oracle: frac(&|r| r.i_h_oracle),
    }
}

/// Counts violations of the per-iteration lemma properties over every
/// iteration before each run's stopping time.
pub fn lemma_audit(
    results: &[RunResult],
    constants: &TheoryConstants,
    ocfg: &OracleConfig,
    params: &SolverParams,
) -> AuditReport {
    let params = params.resolved(ocfg.eps_f);
    let e_f = params.e_f;
    let mut rep = AuditReport::default();
    let mut pooled = Vec::new();
    for run in results {
        let n = stopping_time(&run.records, params.epsbar_g, params.epsbar_h, params.epsbar_lambda);
        let audited: Vec<&IterationRecord> = run.records.iter().filter(|r| n.is_none_or(|n| r.k < n)).collect();
        for r in &audited {
            let scale = r.f_true.abs().max(r.f_hat_true.abs()).max(r.f_next_true.abs());
            let good_g = r.i_g && r.omega_g && r.theta_g;
            let good_h = r.i_h && r.omega_h && r.theta_h;
            if r.i_g && r.omega_g && r.alpha_k <= constants.alpha_bar && !r.theta_g {
                rep.violations_i += 1;
            }
            if r.i_h && r.omega_h && r.beta_k <= constants.beta_bar && !r.theta_h {
                rep.violations_ii += 1;
            }
            if good_g {
                if !le_with_rounding(r.f_next_true, r.f_true - h_d(r.alpha_k, &params) + 4.0 * e_f, scale) {
                    rep.violations_iii += 1;
                }
                if !le_with_rounding(
                    r.f_next_true,
                    r.f_true - h_d_printed(r.alpha_k, &params) + 4.0 * e_f,
                    scale,
                ) {
                    rep.violations_iii_printed_h_d += 1;
                }
                if !le_with_rounding(r.f_hat_true, r.f_true - h_d(r.alpha_k, &params) + 2.0 * e_f, scale) {
                    rep.violations_descent_half_good += 1;
                }
            }
            if good_h {
                if !le_with_rounding(r.f_next_true, r.f_true - h_p(r.beta_k, &params) + 4.0 * e_f, scale) {
                    rep.violations_iv += 1;
                }
                if !le_with_rounding(r.f_next_true, r.f_hat_true - h_p(r.beta_k, &params) + 2.0 * e_f, scale) {
                    rep.violations_nc_half_good += 1;
                }
            }
            if r.i_g && !r.omega_g && r.i_h && !r.omega_h {
                rep.violations_v += 1;
            }
            if r.theta_g && !le_with_rounding(r.f_hat_true, r.f_true + 2.0 * e_f, scale) {
                rep.violations_descent_half += 1;
            }
            if r.theta_h && !le_with_rounding(r.f_next_true, r.f_hat_true + 2.0 * e_f, scale) {
                rep.violations_nc_half += 1;
            }
        }
        rep.iterations_audited += audited.len();
        rep.per_run.push(frequencies(&audited));
        pooled.extend(audited);
    }
    rep.pooled = frequencies(&pooled);
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{rosenbrock_2d, saddle_quartic};

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn kappa_g_prime_examples() {
        close(kappa_g_prime(0.5, 0.0).unwrap(), 1.0 / 3.0);
        close(kappa_g_prime(0.5, 0.5).unwrap(), 5.0 / 7.0);
        assert!(kappa_g_prime(1e-12, 0.0).unwrap() < 1e-11);
        assert!(kappa_g_prime(1.0, 0.0).is_err());
        assert!(kappa_g_prime(0.5, 1.0).is_err());
    }

    #[test]
    fn bar_examples() {
        close(alpha_bar(1.0, 0.2, 1.0 / 3.0).unwrap(), 1.1);
        close(beta_bar(1.0, 1.0, 0.0, 0.2, 1.0).unwrap(), 0.9);
        assert!(matches!(beta_bar(1.0, 0.5, 0.5, 0.2, 1.0), Err(Error::Infeasible(_))));
        assert!(matches!(alpha_bar(1.0, 0.9, 1.0 / 3.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn c_tau_is_clamped_at_zero() {
        assert_eq!(c_tau(0.5, 2.0, 1.0, 3.0, 1.0), 0.0);
        close(c_tau(0.5, 0.25, 1.0, 0.5, 1.0), 2.0);
    }

    #[test]
    fn validate_examples() {
        let p = SolverParams {
            c_g: 0.5,
            c_h: 0.5,
            gamma: 1.0,
            ..SolverParams::default()
        };
        assert!(validate_params(&p, &OracleConfig::exact()).all_passed());

        let o = OracleConfig {
            kappa_g: 0.5,
            ..OracleConfig::exact()
        };
        let bad = SolverParams { c_g: 0.6, ..p.clone() };
        let rep = validate_params(&bad, &o);
        assert!(rep.failures().any(|c| c.name == "c_g"));

        let noisy = OracleConfig {
            eps_f: 1e-3,
            ..OracleConfig::exact()
        };
        let mis = SolverParams { e_f: 2.5e-4, ..p };
        let rep = validate_params(&mis, &noisy);
        assert_eq!(rep.failures().map(|c| c.name.as_str()).collect::<Vec<_>>(), vec!["e_f"]);
    }

    #[test]
    fn subexponential_e_f_condition() {
        let o = OracleConfig {
            zeroth_model: ZerothModel::Subexponential,
            eps_f: 1e-3,
            subexp_a: 10.0,
            ..OracleConfig::exact()
        };
        let p = SolverParams {
            c_g: 0.5,
            c_h: 0.5,
            e_f: 0.4,
            ..SolverParams::default()
        };
        assert!(validate_params(&p, &o).failures().any(|c| c.name == "e_f"));
        let ok = SolverParams { e_f: 0.503, ..p };
        assert!(validate_params(&ok, &o).all_passed());
    }

    #[test]
    fn floors_match_closed_forms() {
        let o = OracleConfig::coupled(1e-3);
        let p = SolverParams {
            c_g: 0.5,
            c_h: 0.5,
            ..SolverParams::default()
        };
        let f = lemma_floors(&p, &o);
        close(f.g, 2.0 * 1e-3_f64.sqrt() / 0.25);
        close(f.h, 0.1 / 0.5 * (2.0_f64 / (0.9 - 0.36)).sqrt());
        close(f.lambda, 0.1 / 0.5);
        let zero = lemma_floors(&SolverParams::default(), &OracleConfig::exact());
        assert_eq!((zero.g, zero.h, zero.lambda), (0.0, 0.0, 0.0));
        let cg0 = lemma_floors(&SolverParams::default(), &o);
        assert!(cg0.g.is_infinite());
    }

    #[test]
    fn theorem_floors_dominate_lemma_floors() {
        let o = OracleConfig::coupled(1e-3);
        let p = SolverParams {
            c_g: 0.5,
            c_h: 0.5,
            ..SolverParams::default()
        };
        let c = TheoryConstants::compute(&rosenbrock_2d(), &p, &o, &TheoremInputs::default()).unwrap();
        assert!(c.theorem_floor_g >= c.neighborhood_floor_g);
        assert!(c.theorem_floor_h >= c.neighborhood_floor_h);
        let cgh = TheoremInputs::default().c_gh();
        let g_term = (16e-3 / (cgh * 0.2 * c.alpha_bar * 0.25)).sqrt();
        close(c.theorem_floor_g, g_term.max(c.neighborhood_floor_g));
        assert!(c.h_d_printed_at_alpha_bar >= c.h_d_at_alpha_bar);
    }

    #[test]
    fn stopping_time_examples() {
        use crate::rng::OracleStreams;
        use crate::solver::{run_ss2_nc_g, run_ss_g};
        let params = SolverParams {
            max_iters: 5,
            halt_at_stopping_time: false,
            ..SolverParams::default()
        };
        let r = run_ss2_nc_g(
            &rosenbrock_2d(),
            &OracleConfig::exact(),
            &params,
            &[1.0, 1.0],
            OracleStreams::new(0, 0),
        )
        .unwrap();
        assert_eq!(stopping_time(&r.records, 1e-9, 0.0, 0.0), Some(0));
        assert_eq!(stopping_time(&r.records, f64::INFINITY, f64::INFINITY, 0.0), Some(0));
        let s = run_ss_g(
            &saddle_quartic(),
            &OracleConfig::exact(),
            &params,
            &[0.0, 0.0],
            OracleStreams::new(0, 0),
        )
        .unwrap();
        assert_eq!(stopping_time(&s.records, 1.0, 0.5, 0.5), None);
    }

    #[test]
    fn tail_examples() {
        assert!(tail_estimate(&[], &[1]).is_err());
        let all = vec![Some(1); 5];
        assert_eq!(tail_estimate(&all, &[3]).unwrap()[0].estimate, 0.0);
        let mut mix = vec![Some(1); 7];
        mix.extend([Some(50), None, Some(20)]);
        let pts = tail_estimate(&mix, &[5, 10, 30, 100]).unwrap();
        close(pts[0].estimate, 0.3);
        close(pts[0].std_err, (0.3_f64 * 0.7 / 10.0).sqrt());
        assert!(pts.windows(2).all(|w| w[1].estimate <= w[0].estimate));
        close(pts[3].estimate, 0.1);
    }
}
