use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which step-search method to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Two-step gradient + negative-curvature step search.
    #[serde(rename = "SS2-NC-G")]
    Ss2NcG,
    /// Gradient-only step search.
    #[serde(rename = "SS-G")]
    SsG,
    /// Capped-CG Newton / negative-curvature step search.
    #[serde(rename = "SS-NC-CG")]
    SsNcCg,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Ss2NcG => "SS2-NC-G",
            Method::SsG => "SS-G",
            Method::SsNcCg => "SS-NC-CG",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "SS2-NC-G" | "ss2-nc-g" | "ss2_nc_g" => Ok(Method::Ss2NcG),
            "SS-G" | "ss-g" | "ss_g" => Ok(Method::SsG),
            "SS-NC-CG" | "ss-nc-cg" | "ss_nc_cg" => Ok(Method::SsNcCg),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub alpha0: f64,
    pub beta0: f64,
    pub tau: f64,
    pub c_d: f64,
    pub c_p: f64,
    pub c_g: f64,
    pub c_h: f64,
    pub e_f: f64,
    /// When set, `e_f` is replaced by `e_f_ratio * oracle.eps_f` at resolve time.
    pub e_f_ratio: Option<f64>,
    pub epsbar_g: f64,
    pub epsbar_h: f64,
    pub epsbar_lambda: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
    pub max_iters: usize,
    /// Defaults to the largest integer TOML can represent.
    pub max_fevals: u64,
    /// Stop after the iteration whose iterate first meets the stationarity test.
    pub halt_at_stopping_time: bool,
    /// Capped-CG curvature threshold (SS-NC-CG only).
    pub cg_eps_cap: f64,
    pub cg_max_iter: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            alpha0: 1.0,
            beta0: 1.0,
            tau: 0.5,
            c_d: 0.2,
            c_p: 0.2,
            c_g: 0.0,
            c_h: 0.5,
            e_f: 0.0,
            e_f_ratio: None,
            epsbar_g: 0.0,
            epsbar_h: 2e-3,
            epsbar_lambda: 0.0,
            gamma: 0.9,
            delta: 1.0,
            eta: 0.5,
            max_iters: 1000,
            max_fevals: i64::MAX as u64,
            halt_at_stopping_time: true,
            cg_eps_cap: 1e-3,
            cg_max_iter: 50,
        }
    }
}

impl SolverParams {
    /// Early-termination threshold for the descent step: `c_g * epsbar_g`.
    pub fn grad_threshold(&self) -> f64 {
        self.c_g * self.epsbar_g
    }

    /// Negative-curvature detection threshold: `c_H * max(epsbar_H, epsbar_lambda)`.
    pub fn curvature_threshold(&self) -> f64 {
        self.c_h * self.epsbar_h.max(self.epsbar_lambda)
    }

    /// Applies `e_f_ratio` against the oracle's `eps_f`.
    pub fn resolved(&self, eps_f: f64) -> Self {
        let mut p = self.clone();
        if let Some(r) = self.e_f_ratio {
            p.e_f = r * eps_f;
            p.e_f_ratio = None;
        }
        p
    }

    /// Hard range checks. The finer parameter inequalities from the analysis
    /// are reported by `theory::validate_params` as warnings instead.
    pub fn validate(&self) -> Result<()> {
        let positive = [("alpha0", self.alpha0), ("beta0", self.beta0), ("delta", self.delta)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("solver.{name} must be positive, got {v}")));
            }
        }
        let open_unit = [
            ("tau", self.tau),
            ("c_d", self.c_d),
            ("c_p", self.c_p),
            ("eta", self.eta),
        ];
        for (name, v) in open_unit {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("solver.{name} must lie in (0, 1), got {v}")));
            }
        }
        let nonneg = [
            ("c_g", self.c_g),
            ("c_h", self.c_h),
            ("e_f", self.e_f),
            ("epsbar_g", self.epsbar_g),
            ("epsbar_h", self.epsbar_h),
            ("epsbar_lambda", self.epsbar_lambda),
        ];
        for (name, v) in nonneg {
            // Infinite neighborhoods are allowed; NaN is not.
            if !(v >= 0.0) {
                return Err(Error::Config(format!("solver.{name} must be >= 0, got {v}")));
            }
        }
        if let Some(r) = self.e_f_ratio {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("solver.e_f_ratio must be >= 0, got {r}")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!(
                "solver.gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.max_iters == 0 || self.max_fevals == 0 {
            return Err(Error::Config("solver budgets must be >= 1".into()));
        }
        if !(self.cg_eps_cap > 0.0) || self.cg_max_iter == 0 {
            return Err(Error::Config(
                "solver.cg_eps_cap must be > 0 and cg_max_iter >= 1".into(),
            ));
        }
        Ok(())
    }
}
