//! Simulated probabilistic zeroth-, first- and second-order oracles.
//!
//! Accurate draws land inside the oracle's accuracy region by construction;
//! with probability `1 - p` a draw is scaled by `failure_scale` so the accuracy
//! inequality fails while magnitudes stay finite.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, Matrix};
use crate::problems::ProblemSpec;
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ZerothModel {
    #[default]
    Bounded,
    Subexponential,
}

/// How the gradient/Hessian noise radii relate to `eps_f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScaling {
    /// Use `eps_g`, `eps_h`, `eps_lambda` as given.
    #[default]
    Explicit,
    /// `eps_g = eps_f^(1/2)`, `eps_h = eps_lambda = eps_f^(1/3)`.
    Coupled,
    /// As `Coupled` for the Hessian, but exact gradients (`eps_g = 0`).
    CoupledExactGradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub zeroth_model: ZerothModel,
    pub eps_f: f64,
    pub subexp_a: f64,
    pub p_g: f64,
    pub eps_g: f64,
    pub kappa_g: f64,
    pub p_h: f64,
    pub eps_h: f64,
    pub kappa_h: f64,
    pub eps_lambda: f64,
    pub kappa_lambda: f64,
    pub failure_scale: f64,
    pub scaling: NoiseScaling,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            zeroth_model: ZerothModel::Bounded,
            eps_f: 0.0,
            subexp_a: 1.0,
            p_g: 1.0,
            eps_g: 0.0,
            kappa_g: 0.0,
            p_h: 1.0,
            eps_h: 0.0,
            kappa_h: 0.0,
            eps_lambda: 0.0,
            kappa_lambda: 0.0,
            failure_scale: 10.0,
            scaling: NoiseScaling::Explicit,
        }
    }
}

impl OracleConfig {
    /// All-zero noise: every oracle returns the exact quantity.
    pub fn exact() -> Self {
        Self::default()
    }

    /// Bounded noise with the coupled radii used in the Rosenbrock experiments.
    pub fn coupled(eps_f: f64) -> Self {
        OracleConfig {
            eps_f,
            scaling: NoiseScaling::Coupled,
            ..Self::default()
        }
        .resolved()
    }

    /// Applies `scaling`, returning a config with explicit radii.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        match self.scaling {
            NoiseScaling::Explicit => {}
            NoiseScaling::Coupled => {
                c.eps_g = self.eps_f.sqrt();
                c.eps_h = self.eps_f.cbrt();
                c.eps_lambda = c.eps_h;
            }
            NoiseScaling::CoupledExactGradient => {
                c.eps_g = 0.0;
                c.eps_h = self.eps_f.cbrt();
                c.eps_lambda = c.eps_h;
            }
        }
        c.scaling = NoiseScaling::Explicit;
        c
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("eps_f", self.eps_f),
            ("eps_g", self.eps_g),
            ("kappa_g", self.kappa_g),
            ("eps_h", self.eps_h),
            ("kappa_h", self.kappa_h),
            ("eps_lambda", self.eps_lambda),
            ("kappa_lambda", self.kappa_lambda),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("oracle.{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, p) in [("p_g", self.p_g), ("p_h", self.p_h)] {
            if !(p > 0.5 && p <= 1.0) {
                return Err(Error::Config(format!("oracle.{name} must lie in (1/2, 1], got {p}")));
            }
        }
        if self.zeroth_model == ZerothModel::Subexponential && !(self.subexp_a > 0.0) {
            return Err(Error::Config(format!(
                "oracle.subexp_a must be > 0 for the subexponential model, got {}",
                self.subexp_a
            )));
        }
        if !(self.failure_scale > 1.0) {
            return Err(Error::Config(format!(
                "oracle.failure_scale must exceed 1, got {}",
                self.failure_scale
            )));
        }
        Ok(())
    }
}

/// Exact quantity recorded next to an oracle draw. Instrumentation only.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleTruth<T> {
    pub true_value: T,
    pub error_magnitude: f64,
    pub accurate_flag: bool,
}

/// Hessian draws defer the accuracy flag until the NC direction is known.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianTruth {
    pub true_value: Matrix,
    /// `||estimate - truth||_2`
    pub error_magnitude: f64,
    /// Whether the accurate branch was drawn.
    pub accurate_branch: bool,
}

// Relative margin that keeps realized errors inside the nominal radius after
// floating-point rounding of `truth + perturbation`.
const ROUNDING_MARGIN: f64 = 16.0 * f64::EPSILON;

fn uniform_direction(rng: &mut RngStream, n: usize) -> Vec<f64> {
    loop {
        let r: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let nr = norm(&r);
        if nr > 0.0 {
            return r.into_iter().map(|v| v / nr).collect();
        }
    }
}

pub fn sample_f(problem: &ProblemSpec, x: &[f64], cfg: &OracleConfig, rng: &mut RngStream) -> (f64, OracleTruth<f64>) {
    let f = problem.eval_f(x);
    let estimate = match cfg.zeroth_model {
        ZerothModel::Bounded => {
            let u: f64 = rng.gen_range(-1.0..1.0);
            if cfg.eps_f == 0.0 {
                f
            } else {
                let amp = (cfg.eps_f - ROUNDING_MARGIN * f.abs()).max(0.0);
                f + amp * u
            }
        }
        ZerothModel::Subexponential => {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let tail: f64 = Exp::new(cfg.subexp_a).expect("validated subexp_a > 0").sample(rng);
            f + sign * (cfg.eps_f + tail)
        }
    };
    let err = (estimate - f).abs();
    (
        estimate,
        OracleTruth {
            true_value: f,
            error_magnitude: err,
            accurate_flag: err <= cfg.eps_f,
        },
    )
}

pub fn sample_g(
    problem: &ProblemSpec,
    x: &[f64],
    cfg: &OracleConfig,
    rng: &mut RngStream,
) -> (Vec<f64>, OracleTruth<Vec<f64>>) {
    let grad = problem.eval_grad(x);
    let n = grad.len();
    let gnorm = norm(&grad);
    let r_max = cfg.eps_g + cfg.kappa_g * gnorm;

    let branch: f64 = rng.gen();
    let u = uniform_direction(rng, n);
    let unif: f64 = rng.gen();
    let accurate_branch = cfg.p_g >= 1.0 || branch < cfg.p_g;

    let radius = if accurate_branch {
        let cap = (r_max - ROUNDING_MARGIN * (gnorm + r_max)).max(0.0);
        (r_max * unif.powf(1.0 / n as f64)).min(cap)
    } else {
        cfg.failure_scale * r_max
    };
    let estimate: Vec<f64> = grad.iter().zip(&u).map(|(g, d)| g + radius * d).collect();
    let err = norm(&crate::linalg::sub(&estimate, &grad));
    (
        estimate,
        OracleTruth {
            true_value: grad,
            error_magnitude: err,
            accurate_flag: err <= r_max,
        },
    )
}

pub fn sample_h(problem: &ProblemSpec, x: &[f64], cfg: &OracleConfig, rng: &mut RngStream) -> (Matrix, HessianTruth) {
    let hess = problem.eval_hess(x);
    let n = hess.dim();

    let branch: f64 = rng.gen();
    let raw: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(rng)).collect();
    let unif: f64 = rng.gen();
    let accurate_branch = cfg.p_h >= 1.0 || branch < cfg.p_h;

    let sym = Matrix::from_row_major(n, raw).expect("n*n entries").symmetrized();
    let snorm = sym.sym_spectral_norm();
    let dir = if snorm > 0.0 {
        sym.scaled(1.0 / snorm)
    } else {
        Matrix::zeros(n)
    };
    let radius = if accurate_branch {
        let cap = (cfg.eps_h - ROUNDING_MARGIN * (n as f64) * (hess.frobenius_norm() + cfg.eps_h)).max(0.0);
        (cfg.eps_h * unif.powf(1.0 / (n * n) as f64)).min(cap)
    } else {
        cfg.failure_scale * cfg.eps_h
    };
    let estimate = if radius == 0.0 {
        hess.clone()
    } else {
        hess.add(&dir.scaled(radius))
    };
    let err = estimate.sub(&hess).sym_spectral_norm();
    (
        estimate,
        HessianTruth {
            true_value: hess,
            error_magnitude: err,
            accurate_branch,
        },
    )
}

/// Realized second-order accuracy, evaluated once the NC direction is known.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HessianAccuracy {
    /// Directional bound with `eps_h^2` (the analysis indicator).
    pub indicator: bool,
    /// Directional bound with `eps_h` (the oracle definition).
    pub oracle_form: bool,
}

/// Evaluates both inequalities of the second-order accuracy event. Without an
/// NC direction the directional part holds vacuously.
pub fn hessian_accuracy(
    truth: &Matrix,
    estimate: &Matrix,
    lambda_est: f64,
    lambda_true: f64,
    q: Option<&[f64]>,
    cfg: &OracleConfig,
) -> HessianAccuracy {
    let eig_ok = (lambda_est - lambda_true).abs() <= cfg.eps_lambda + cfg.kappa_lambda * lambda_true.abs();
    let (dir_sq, dir_lin) = match q {
        None => (true, true),
        Some(q) => {
            let diff = truth.sub(estimate);
            let lhs = norm(&diff.mul_vec(q));
            let rel = cfg.kappa_h * lambda_est.abs() * norm(q);
            (lhs <= cfg.eps_h * cfg.eps_h + rel, lhs <= cfg.eps_h + rel)
        }
    };
    HessianAccuracy {
        indicator: eig_ok && dir_sq,
        oracle_form: eig_ok && dir_lin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directions::min_eigenpair;
    use crate::problems::{rosenbrock_2d, saddle_quartic};

    fn three_sigma(p: f64, n: usize) -> f64 {
        3.0 * (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn zero_noise_is_exact() {
        let p = rosenbrock_2d();
        let x = [0.3, -0.4];
        let mut rng = RngStream::new(1, 0);
        let cfg = OracleConfig::exact();
        assert_eq!(sample_f(&p, &x, &cfg, &mut rng).0, p.eval_f(&x));
        assert_eq!(sample_g(&p, &x, &cfg, &mut rng).0, p.eval_grad(&x));
        assert_eq!(sample_h(&p, &x, &cfg, &mut rng).0, p.eval_hess(&x));
    }

    #[test]
    fn bounded_f_never_exceeds_eps() {
        let p = rosenbrock_2d();
        let cfg = OracleConfig {
            eps_f: 1e-3,
            ..OracleConfig::default()
        };
        let mut rng = RngStream::new(2, 0);
        for i in 0..100_000 {
            let x = [-1.2 + 1e-5 * i as f64, 1.0];
            let (_, t) = sample_f(&p, &x, &cfg, &mut rng);
            assert!(t.error_magnitude <= 1e-3);
            assert!(t.accurate_flag);
        }
    }

    #[test]
    fn subexponential_tail_bound() {
        let p = saddle_quartic();
        let cfg = OracleConfig {
            zeroth_model: ZerothModel::Subexponential,
            eps_f: 0.01,
            subexp_a: 10.0,
            ..OracleConfig::default()
        };
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_f(&p, &[0.0, 0.0], &cfg, &mut rng).1.error_magnitude >= 0.2)
            .count();
        let bound = (-10.0_f64 * (0.2 - 0.01)).exp();
        assert!((hits as f64 / n as f64) <= bound + three_sigma(bound, n));
    }

    #[test]
    fn gradient_ball_and_radius_moment() {
        let p = rosenbrock_2d();
        let cfg = OracleConfig {
            eps_g: 0.05,
            ..OracleConfig::default()
        };
        let mut rng = RngStream::new(4, 0);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let (_, t) = sample_g(&p, &[0.5, 0.5], &cfg, &mut rng);
            assert!(t.error_magnitude <= 0.05);
            assert!(t.accurate_flag);
            sum += t.error_magnitude;
        }
        let mean = sum / n as f64;
        let expect = 0.05 * 2.0 / 3.0;
        assert!((mean - expect).abs() / expect < 0.01, "mean radius {mean}");
    }

    #[test]
    fn gradient_failure_frequency() {
        let p = rosenbrock_2d();
        let cfg = OracleConfig {
            eps_g: 0.05,
            p_g: 0.8,
            failure_scale: 10.0,
            ..OracleConfig::default()
        };
        let mut rng = RngStream::new(5, 0);
        let n = 100_000;
        let ok = (0..n)
            .filter(|_| sample_g(&p, &[0.0, 0.0], &cfg, &mut rng).1.accurate_flag)
            .count();
        let freq = ok as f64 / n as f64;
        assert!((freq - 0.8).abs() <= three_sigma(0.8, n), "freq {freq}");
    }

    #[test]
    fn hessian_perturbation_and_weyl() {
        let p = rosenbrock_2d();
        let cfg = OracleConfig {
            eps_h: 0.1,
            ..OracleConfig::default()
        };
        let mut rng = RngStream::new(6, 0);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let (h, t) = sample_h(&p, &[0.0, 0.0], &cfg, &mut rng);
            assert!(h.is_symmetric());
            assert!(t.error_magnitude <= 0.1);
            let lam = min_eigenpair(&h).unwrap().lambda_min;
            assert!((lam - 2.0).abs() <= 0.1);
            sum += t.error_magnitude;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.08).abs() / 0.08 < 0.01, "mean rho {mean}");
    }

    #[test]
    fn validation() {
        assert!(OracleConfig::default().validate().is_ok());
        let bad = OracleConfig {
            p_g: 0.5,
            ..OracleConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = OracleConfig {
            zeroth_model: ZerothModel::Subexponential,
            subexp_a: 0.0,
            ..OracleConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = OracleConfig {
            eps_h: -1.0,
            ..OracleConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn coupled_scaling() {
        let c = OracleConfig::coupled(1e-3);
        assert!((c.eps_g - 1e-3_f64.sqrt()).abs() < 1e-15);
        assert!((c.eps_h - 0.1).abs() < 1e-12);
        assert_eq!(c.eps_lambda, c.eps_h);
    }

    #[test]
    fn deterministic_streams() {
        let p = rosenbrock_2d();
        let cfg = OracleConfig::coupled(1e-3);
        let mut a = RngStream::new(9, 2);
        let mut b = RngStream::new(9, 2);
        for _ in 0..50 {
            assert_eq!(
                sample_g(&p, &[0.1, 0.2], &cfg, &mut a).0,
                sample_g(&p, &[0.1, 0.2], &cfg, &mut b).0
            );
            assert_eq!(
                sample_h(&p, &[0.1, 0.2], &cfg, &mut a).0,
                sample_h(&p, &[0.1, 0.2], &cfg, &mut b).0
            );
        }
    }
}
