//! The continuous two-component Robin problem
//!
//! ```text
//!   -eps^2 y1'' + b11 y1 + b12 y2 = f1
//!   -mu^2  y2'' + b21 y1 + b22 y2 = f2        on (0, 1)
//!
//!   alpha_k y_k(0) - p_k beta_k  y_k'(0) = P_k
//!   gamma_k y_k(1) + p_k delta_k y_k'(1) = Q_k     (p_1 = eps, p_2 = mu)
//! ```
//!
//! plus the built-in benchmark problems and the sampling-based check of the
//! structural assumptions on the coupling matrix.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Scalar coefficient function of `x` on `[0, 1]`.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub fn scalar<F>(f: F) -> ScalarFn
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    Arc::new(f)
}

/// Robin data for one solution component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinBc {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub p: f64,
    pub q: f64,
}

impl RobinBc {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, p: f64, q: f64) -> Result<Self> {
        let bc = Self {
            alpha,
            beta,
            gamma,
            delta,
            p,
            q,
        };
        bc.check()?;
        Ok(bc)
    }

    pub fn check(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma, self.delta, self.p, self.q];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite Robin data {self:?}")));
        }
        if self.alpha < 0.0 || self.beta < 0.0 || self.alpha + self.beta <= 0.0 {
            return Err(Error::Parameter(format!(
                "need alpha, beta >= 0 and alpha + beta > 0 (got {}, {})",
                self.alpha, self.beta
            )));
        }
        if self.gamma <= 0.0 || self.delta < 0.0 {
            return Err(Error::Parameter(format!(
                "need gamma > 0 and delta >= 0 (got {}, {})",
                self.gamma, self.delta
            )));
        }
        Ok(())
    }
}

/// Component index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    First,
    Second,
}

impl Component {
    pub const BOTH: [Component; 2] = [Component::First, Component::Second];

    pub fn index(self) -> usize {
        match self {
            Component::First => 0,
            Component::Second => 1,
        }
    }

    pub fn other(self) -> Component {
        match self {
            Component::First => Component::Second,
            Component::Second => Component::First,
        }
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub eps: f64,
    pub mu: f64,
    /// Coupling matrix entries, row-major: `b[0][1]` is `b12`.
    pub b: [[ScalarFn; 2]; 2],
    pub f: [ScalarFn; 2],
    pub bc: [RobinBc; 2],
    /// Closed-form solution, available for the manufactured problems only.
    pub exact: Option<[ScalarFn; 2]>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("eps", &self.eps)
            .field("mu", &self.mu)
            .field("bc", &self.bc)
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

const B_NAMES: [[&str; 2]; 2] = [["b11", "b12"], ["b21", "b22"]];
const F_NAMES: [&str; 2] = ["f1", "f2"];

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        eps: f64,
        mu: f64,
        b: [[ScalarFn; 2]; 2],
        f: [ScalarFn; 2],
        bc: [RobinBc; 2],
    ) -> Result<Self> {
        check_perturbation(eps, mu)?;
        bc[0].check()?;
        bc[1].check()?;
        Ok(Self {
            name: name.into(),
            eps,
            mu,
            b,
            f,
            bc,
            exact: None,
        })
    }

    /// Diffusion parameter of a component (`eps` for the first, `mu` for the second).
    pub fn diffusion(&self, c: Component) -> f64 {
        match c {
            Component::First => self.eps,
            Component::Second => self.mu,
        }
    }

    pub fn b_at(&self, row: usize, col: usize, x: f64) -> f64 {
        (self.b[row][col])(x)
    }

    pub fn f_at(&self, row: usize, x: f64) -> f64 {
        (self.f[row])(x)
    }

    /// Evaluates `B(x)` and reports the first non-finite entry.
    pub fn coupling_checked(&self, x: f64) -> Result<[[f64; 2]; 2]> {
        let mut out = [[0.0; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.b_at(r, c, x);
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        name: B_NAMES[r][c],
                        x,
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn source_checked(&self, x: f64) -> Result<[f64; 2]> {
        let mut out = [0.0; 2];
        for (r, v) in out.iter_mut().enumerate() {
            *v = self.f_at(r, x);
            if !v.is_finite() {
                return Err(Error::NonFinite { name: F_NAMES[r], x });
            }
        }
        Ok(out)
    }

    /// Residual `L y - f` of the continuous operator for a candidate `y`
    /// given with its second derivative.
    pub fn residual(&self, x: f64, y: [f64; 2], ypp: [f64; 2]) -> [f64; 2] {
        let d = [self.eps, self.mu];
        let mut r = [0.0; 2];
        for k in 0..2 {
            r[k] = -d[k] * d[k] * ypp[k] + self.b_at(k, 0, x) * y[0] + self.b_at(k, 1, x) * y[1]
                - self.f_at(k, x);
        }
        r
    }
}

fn check_perturbation(eps: f64, mu: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= mu && mu <= 1.0) {
        return Err(Error::Parameter(format!(
            "need 0 < eps <= mu <= 1 (got eps = {eps}, mu = {mu})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    /// `b12 <= 0` and `b21 <= 0` at every sample.
    pub offdiag_ok: bool,
    /// Minimum over samples of `min(b11 + b12, b21 + b22)`.
    pub min_row_sum: f64,
    /// `sqrt(min_row_sum)` when positive, otherwise 0.
    pub lambda_max: f64,
    /// Maximum over samples of `|b_ij|`.
    pub lambda_star: f64,
    pub sample_count: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.offdiag_ok && self.min_row_sum > 0.0
    }

    /// `lambda_max` rounded down to three decimals, the default mesh parameter.
    pub fn mesh_lambda(&self) -> f64 {
        (self.lambda_max * 1000.0).floor() / 1000.0
    }
}

/// Samples `B` on a uniform grid of `[0, 1]` with `samples` points.
pub fn validate(spec: &ProblemSpec, samples: usize) -> Result<ValidationReport> {
    if samples < 2 {
        return Err(Error::Parameter(format!(
            "validation needs at least 2 samples (got {samples})"
        )));
    }
    let mut offdiag_ok = true;
    let mut min_row_sum = f64::INFINITY;
    let mut lambda_star = 0.0_f64;
    for k in 0..samples {
        let x = k as f64 / (samples - 1) as f64;
        let b = spec.coupling_checked(x)?;
        if b[0][1] > 0.0 || b[1][0] > 0.0 {
            offdiag_ok = false;
        }
        min_row_sum = min_row_sum.min((b[0][0] + b[0][1]).min(b[1][0] + b[1][1]));
        for v in b.iter().flatten() {
            lambda_star = lambda_star.max(v.abs());
        }
    }
    let lambda_max = if min_row_sum > 0.0 {
        min_row_sum.sqrt()
    } else {
        0.0
    };
    Ok(ValidationReport {
        offdiag_ok,
        min_row_sum,
        lambda_max,
        lambda_star,
        sample_count: samples,
    })
}

pub const BUILTIN_NAMES: [&str; 4] = ["example1", "example2", "constant_mms", "poly_mms"];

/// Built-in problems. `eps` and `mu` are supplied by the caller.
pub fn builtin(name: &str, eps: f64, mu: f64) -> Result<ProblemSpec> {
    match name {
        "example1" => example1(eps, mu),
        "example2" => example2(eps, mu),
        "constant_mms" => constant_mms(eps, mu),
        "poly_mms" => poly_mms(eps, mu),
        other => Err(Error::UnknownProblem {
            name: other.to_string(),
            valid: BUILTIN_NAMES.join(", "),
        }),
    }
}

fn example1_coupling() -> [[ScalarFn; 2]; 2] {
    [
        [scalar(|x| (x + 1.0) * (x + 1.0)), scalar(|x| -(x + 0.5))],
        [scalar(|_| -1.0), scalar(|_| 2.0)],
    ]
}

fn example1(eps: f64, mu: f64) -> Result<ProblemSpec> {
    let bc = RobinBc::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)?;
    ProblemSpec::new(
        "example1",
        eps,
        mu,
        example1_coupling(),
        [scalar(|x| x.powi(5) - 0.08), scalar(|x| (PI * x).sin())],
        [bc, bc],
    )
}

fn example2(eps: f64, mu: f64) -> Result<ProblemSpec> {
    ProblemSpec::new(
        "example2",
        eps,
        mu,
        [
            [
                scalar(|x| 2.0 * (x + 1.0) * (x + 1.0)),
                scalar(|x| -(1.0 + x * x * x)),
            ],
            [
                scalar(|x| -2.0 * (PI * x / 4.0).cos()),
                scalar(|x| 2.2 * (1.0 - x).exp()),
            ],
        ],
        [scalar(|x| 2.0 * x.exp()), scalar(|x| 10.0 * x + 1.0)],
        [
            RobinBc::new(1.0, 1.0, 2.0, 1.0, 0.0, 1.0)?,
            RobinBc::new(1.0, 3.0, 1.0, 1.0, 0.0, 1.0)?,
        ],
    )
}

/// Manufactured problem with exact solution `y = (y1, y2)` where `y_k`,
/// `y_k'` and `y_k''` are given. Uses Example 1's coupling matrix and
/// `alpha = beta = gamma = delta = 1` for both components.
fn manufactured(
    name: &str,
    eps: f64,
    mu: f64,
    y: [fn(f64) -> f64; 2],
    dy: [fn(f64) -> f64; 2],
    d2y: [fn(f64) -> f64; 2],
) -> Result<ProblemSpec> {
    check_perturbation(eps, mu)?;
    let b = example1_coupling();
    let diff = [eps, mu];
    let source = |k: usize| -> ScalarFn {
        let (bk0, bk1) = (b[k][0].clone(), b[k][1].clone());
        let (ya, yb, ypp, d) = (y[0], y[1], d2y[k], diff[k]);
        scalar(move |x| -d * d * ypp(x) + bk0(x) * ya(x) + bk1(x) * yb(x))
    };
    let f = [source(0), source(1)];
    let bc = |k: usize| {
        let (alpha, beta, gamma, delta) = (1.0, 1.0, 1.0, 1.0);
        RobinBc::new(
            alpha,
            beta,
            gamma,
            delta,
            alpha * y[k](0.0) - diff[k] * beta * dy[k](0.0),
            gamma * y[k](1.0) + diff[k] * delta * dy[k](1.0),
        )
    };
    let bc = [bc(0)?, bc(1)?];
    let mut spec = ProblemSpec::new(name, eps, mu, b, f, bc)?;
    spec.exact = Some([scalar(y[0]), scalar(y[1])]);
    Ok(spec)
}

fn constant_mms(eps: f64, mu: f64) -> Result<ProblemSpec> {
    manufactured(
        "constant_mms",
        eps,
        mu,
        [|_| 1.0, |_| 1.0],
        [|_| 0.0, |_| 0.0],
        [|_| 0.0, |_| 0.0],
    )
}

/// Quadratic exact solution `y1 = 1 + x - x^2`, `y2 = 2 - x^2 / 2`.
fn poly_mms(eps: f64, mu: f64) -> Result<ProblemSpec> {
    manufactured(
        "poly_mms",
        eps,
        mu,
        [|x| 1.0 + x - x * x, |x| 2.0 - 0.5 * x * x],
        [|x| 1.0 - 2.0 * x, |x| -x],
        [|_| -2.0, |_| -1.0],
    )
}
