//! Exact test objectives with analytic derivatives and Lipschitz metadata.
//!
//! These are the ground truth underneath the noisy oracles. Lipschitz
//! constants are conservative bounds over the box `[-2, 2]^n`; they only feed
//! theory diagnostics, never solver decisions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Smooth objective with exact value, gradient and Hessian.
pub trait Objective: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Must return an exactly symmetric matrix.
    fn hessian(&self, x: &[f64]) -> Matrix;
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub dim: usize,
    pub lipschitz_g: f64,
    pub lipschitz_h: f64,
    pub lower_bound: f64,
    pub default_start: Vec<f64>,
    objective: Arc<dyn Objective>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lipschitz_g", &self.lipschitz_g)
            .field("lipschitz_h", &self.lipschitz_h)
            .field("lower_bound", &self.lower_bound)
            .field("default_start", &self.default_start)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        lipschitz_g: f64,
        lipschitz_h: f64,
        lower_bound: f64,
        default_start: Vec<f64>,
        objective: Arc<dyn Objective>,
    ) -> Self {
        ProblemSpec {
            name: name.into(),
            dim,
            lipschitz_g,
            lipschitz_h,
            lower_bound,
            default_start,
            objective,
        }
    }

    pub fn eval_f(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    pub fn eval_grad(&self, x: &[f64]) -> Vec<f64> {
        self.objective.gradient(x)
    }

    pub fn eval_hess(&self, x: &[f64]) -> Matrix {
        self.objective.hessian(x)
    }

    /// Looks a problem up by its config name: `rosenbrock2`, `rosenbrockN`
    /// (needs `dim`), `saddle_quartic`, or `quadratic` (identity Hessian).
    pub fn by_name(name: &str, dim: Option<usize>) -> Result<Self> {
        match name {
            "rosenbrock2" | "rosenbrock_2d" => Ok(rosenbrock_2d()),
            "rosenbrockN" | "rosenbrock_nd" => {
                let n = dim.ok_or_else(|| Error::Config("problem rosenbrockN requires problem.dim".into()))?;
                rosenbrock_nd(n)
            }
            "saddle_quartic" => Ok(saddle_quartic()),
            "quadratic" => Ok(quadratic(&vec![1.0; dim.unwrap_or(2)])),
            other => Err(Error::Config(format!("unknown problem '{other}'"))),
        }
    }
}

/// Chained Rosenbrock, shared by the 2-D and n-D constructors so that both
/// evaluate in the same order.
struct ChainedRosenbrock;

impl Objective for ChainedRosenbrock {
    fn value(&self, x: &[f64]) -> f64 {
        let mut f = 0.0;
        for i in 0..x.len() - 1 {
            let a = 1.0 - x[i];
            let b = x[i + 1] - x[i] * x[i];
            f += a * a + 100.0 * b * b;
        }
        f
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() - 1 {
            let b = x[i + 1] - x[i] * x[i];
            g[i] += -2.0 * (1.0 - x[i]) - 400.0 * x[i] * b;
            g[i + 1] += 200.0 * b;
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> Matrix {
        let n = x.len();
        let mut h = Matrix::zeros(n);
        for i in 0..n - 1 {
            h[(i, i)] += 2.0 - 400.0 * x[i + 1] + 1200.0 * x[i] * x[i];
            let off = -400.0 * x[i];
            h[(i, i + 1)] += off;
            h[(i + 1, i)] += off;
            h[(i + 1, i + 1)] += 200.0;
        }
        h
    }
}

// Max of |lambda(Hessian)| over [-2,2]^2 on a 2001x2001 grid is 5717.98
// (attained at x = (+-2, -2)); max over the same box of the spectral norm of
// D^3 f[u], |u| = 1, is 4849.41. Both rounded up.
const ROSENBROCK_2D_LG: f64 = 5718.0;
const ROSENBROCK_2D_LH: f64 = 4850.0;

// n-D: row-sum (Gershgorin) bounds over [-2,2]^n. Hessian rows are at most
// (4800 + 800 + 2 + 200) + 400*2 + 400*2; D^3 f[u] rows at most 2400*2 + 3*400.
const ROSENBROCK_ND_LG: f64 = 7402.0;
const ROSENBROCK_ND_LH: f64 = 6000.0;

/// `f(x) = (1 - x1)^2 + 100 (x2 - x1^2)^2`, started from `(-1.2, 1)`.
pub fn rosenbrock_2d() -> ProblemSpec {
    ProblemSpec::new(
        "rosenbrock2",
        2,
        ROSENBROCK_2D_LG,
        ROSENBROCK_2D_LH,
        0.0,
        vec![-1.2, 1.0],
        Arc::new(ChainedRosenbrock),
    )
}

/// Chained Rosenbrock in `n >= 2` dimensions; minimizer at all-ones.
pub fn rosenbrock_nd(n: usize) -> Result<ProblemSpec> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("rosenbrock_nd needs n >= 2, got {n}")));
    }
    let mut x0 = vec![1.0; n];
    x0[0] = -1.2;
    Ok(ProblemSpec::new(
        "rosenbrockN",
        n,
        ROSENBROCK_ND_LG,
        ROSENBROCK_ND_LH,
        0.0,
        x0,
        Arc::new(ChainedRosenbrock),
    ))
}

struct SaddleQuartic;

impl Objective for SaddleQuartic {
    fn value(&self, x: &[f64]) -> f64 {
        let x1sq = x[0] * x[0];
        0.25 * x1sq * x1sq - 0.5 * x1sq + 0.5 * x[1] * x[1]
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0] * x[0] * x[0] - x[0], x[1]]
    }

    fn hessian(&self, x: &[f64]) -> Matrix {
        Matrix::from_diag(&[3.0 * x[0] * x[0] - 1.0, 1.0])
    }
}

/// `x1^4/4 - x1^2/2 + x2^2/2`: strict saddle at the origin, minima at (+-1, 0).
pub fn saddle_quartic() -> ProblemSpec {
    // On [-2,2]^2: |3 x1^2 - 1| <= 11 and |6 x1| <= 12.
    ProblemSpec::new(
        "saddle_quartic",
        2,
        11.0,
        12.0,
        -0.25,
        vec![0.0, 0.0],
        Arc::new(SaddleQuartic),
    )
}

struct DiagonalQuadratic(Vec<f64>);

impl Objective for DiagonalQuadratic {
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(&self.0).map(|(v, d)| d * v * v).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.0).map(|(v, d)| d * v).collect()
    }

    fn hessian(&self, _x: &[f64]) -> Matrix {
        Matrix::from_diag(&self.0)
    }
}

/// `0.5 * sum d_i x_i^2`. Not bounded below unless every `d_i >= 0`.
pub fn quadratic(diag: &[f64]) -> ProblemSpec {
    let lg = diag.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let lower = if diag.iter().all(|&d| d >= 0.0) {
        0.0
    } else {
        f64::NEG_INFINITY
    };
    let mut x0 = vec![0.0; diag.len()];
    x0[0] = 1.0;
    ProblemSpec::new(
        "quadratic",
        diag.len(),
        lg,
        0.0,
        lower,
        x0,
        Arc::new(DiagonalQuadratic(diag.to_vec())),
    )
}
