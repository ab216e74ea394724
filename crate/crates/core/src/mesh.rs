//! Layer-adapted meshes on `[0, 1]`.
//!
//! Both layer-adapted kinds split `[0, 1]` into five pieces
//!
//! ```text
//!   [0, te] [te, tm] [tm, 1 - tm] [1 - tm, 1 - te] [1 - te, 1]
//!    N/8      N/8        N/2           N/8            N/8
//! ```
//!
//! with transition points `tm = min(1/4, sigma mu ln N / lambda)` and
//! `te = min(1/8, tm / 2, sigma eps ln N / lambda)`. The Shishkin mesh is
//! uniform on each piece. The Bakhvalov-Shishkin mesh grades the four layer
//! pieces so that `exp(-lambda x / (2 eps))` (resp. `2 mu`) is linear in the
//! node index.
//!
//! Every constructor takes the transition points as input, which is what
//! lets [`refine_pinned`] keep the coarse `te`, `tm` on a finer mesh.

use std::fmt;
use std::io::Write;

use log::warn;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshKind {
    Shishkin,
    BakhvalovShishkin,
    Uniform,
}

impl MeshKind {
    pub fn short_name(self) -> &'static str {
        match self {
            MeshKind::Shishkin => "s",
            MeshKind::BakhvalovShishkin => "bs",
            MeshKind::Uniform => "uniform",
        }
    }
}

impl fmt::Display for MeshKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MeshKind::Shishkin => "S-mesh",
            MeshKind::BakhvalovShishkin => "BS-mesh",
            MeshKind::Uniform => "uniform",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshParams {
    /// Number of intervals.
    pub n: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub eps: f64,
    pub mu: f64,
}

impl MeshParams {
    pub fn new(n: usize, sigma: f64, lambda: f64, eps: f64, mu: f64) -> Result<Self> {
        let p = Self {
            n,
            sigma,
            lambda,
            eps,
            mu,
        };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if self.n == 0 || self.n % 8 != 0 {
            return Err(Error::Parameter(format!(
                "N must be a positive multiple of 8 (got {})",
                self.n
            )));
        }
        if !(self.sigma >= 2.0 && self.sigma.is_finite()) {
            return Err(Error::Parameter(format!(
                "sigma must be finite and >= 2 (got {})",
                self.sigma
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Parameter(format!(
                "lambda must be positive (got {})",
                self.lambda
            )));
        }
        if !(self.eps > 0.0 && self.eps <= self.mu && self.mu <= 1.0) {
            return Err(Error::Parameter(format!(
                "need 0 < eps <= mu <= 1 (got eps = {}, mu = {})",
                self.eps, self.mu
            )));
        }
        Ok(())
    }

    pub fn with_n(self, n: usize) -> Self {
        Self { n, ..self }
    }

    fn ln_n(&self) -> f64 {
        (self.n as f64).ln()
    }

    /// Unclamped eps transition `sigma eps ln N / lambda`.
    pub fn eps_width(&self) -> f64 {
        self.sigma * self.eps * self.ln_n() / self.lambda
    }

    /// Unclamped mu transition `sigma mu ln N / lambda`.
    pub fn mu_width(&self) -> f64 {
        self.sigma * self.mu * self.ln_n() / self.lambda
    }

    /// Describes the active 1/8 or 1/4 clamp, if any. The closed-form
    /// Bakhvalov-Shishkin node formula assumes neither is active.
    pub fn bs_clamp_active(&self) -> Option<String> {
        let (we, wm) = (self.eps_width(), self.mu_width());
        if wm >= 0.25 {
            Some(format!("sigma mu ln N / lambda = {wm:.6} >= 1/4"))
        } else if we >= 0.125 {
            Some(format!("sigma eps ln N / lambda = {we:.6} >= 1/8"))
        } else {
            None
        }
    }
}

/// Transition points of a layer-adapted mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub tau_eps: f64,
    pub tau_mu: f64,
}

/// Returns `(tau_mu, tau_eps)`.
pub fn transition_params(p: &MeshParams) -> (f64, f64) {
    let tau_mu = 0.25_f64.min(p.mu_width());
    let tau_eps = 0.125_f64.min(tau_mu / 2.0).min(p.eps_width());
    (tau_mu, tau_eps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub kind: MeshKind,
    nodes: Vec<f64>,
    steps: Vec<f64>,
    symmetric: bool,
    /// `None` for uniform meshes.
    pub transition: Option<Transition>,
    pub params: Option<MeshParams>,
}

impl Mesh {
    /// With `symmetric`, `nodes[N - i] = 1 - nodes[i]` by construction and the
    /// steps of the right half are copied from the left half, where they are
    /// resolved even when `1 - x` is below the spacing of doubles near 1.
    fn from_nodes(
        kind: MeshKind,
        nodes: Vec<f64>,
        symmetric: bool,
        transition: Option<Transition>,
        params: Option<MeshParams>,
    ) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::MeshConstruction("fewer than two nodes".into()));
        }
        if let Some(i) = nodes.iter().position(|x| !x.is_finite()) {
            return Err(Error::MeshConstruction(format!("node {i} is not finite")));
        }
        let n = nodes.len() - 1;
        let symmetric = symmetric && n % 2 == 0;
        let mut steps: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if symmetric {
            for i in 0..n / 2 {
                steps[n - 1 - i] = steps[i];
            }
        }
        if let Some(i) = steps.iter().position(|&h| !(h > 0.0)) {
            return Err(Error::MeshConstruction(format!(
                "nonpositive step h_{} = {:e}",
                i + 1,
                steps[i]
            )));
        }
        if let Some(i) = (1..nodes.len()).find(|&i| nodes[i] < nodes[i - 1]) {
            return Err(Error::MeshConstruction(format!(
                "nodes decrease at i = {i} ({} < {})",
                nodes[i],
                nodes[i - 1]
            )));
        }
        Ok(Self {
            kind,
            nodes,
            steps,
            symmetric,
            transition,
            params,
        })
    }

    /// Whether `x_{N-i} = 1 - x_i` holds by construction.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Distance of node `i` to the nearer end of the half it lies in:
    /// `x_i` on the left half, `1 - x_i` (taken from the mirrored left node)
    /// on the right half of a symmetric mesh.
    pub fn boundary_distance(&self, i: usize) -> f64 {
        let n = self.n();
        if self.symmetric && i > n / 2 {
            self.nodes[n - i]
        } else {
            self.nodes[i]
        }
    }

    /// Number of intervals.
    pub fn n(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn x(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// `h_i = x_i - x_{i-1}` for `i = 1..=N`, so `h(1)` is the first step.
    pub fn h(&self, i: usize) -> f64 {
        self.steps[i - 1]
    }

    pub fn step_sizes(&self) -> Vec<f64> {
        self.steps.clone()
    }

    pub fn tau_eps(&self) -> Option<f64> {
        self.transition.map(|t| t.tau_eps)
    }

    pub fn tau_mu(&self) -> Option<f64> {
        self.transition.map(|t| t.tau_mu)
    }

    /// CSV with columns `i, x, h`; `h` is empty on the first row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["i", "x", "h"])?;
        for (i, x) in self.nodes.iter().enumerate() {
            let h = if i == 0 {
                String::new()
            } else {
                format!("{:.16e}", self.h(i))
            };
            wtr.write_record([i.to_string(), format!("{x:.16e}"), h])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn uniform(n: usize) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::Parameter(format!(
            "uniform mesh needs N >= 2 (got {n})"
        )));
    }
    let mut nodes: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    for i in 0..=n / 2 {
        nodes[n - i] = 1.0 - nodes[i];
    }
    Mesh::from_nodes(MeshKind::Uniform, nodes, true, None, None)
}

pub fn shishkin(p: &MeshParams) -> Result<Mesh> {
    p.check()?;
    let (tau_mu, tau_eps) = transition_params(p);
    shishkin_with(p, Transition { tau_eps, tau_mu })
}

fn check_transition(t: Transition) -> Result<()> {
    if !(t.tau_eps > 0.0 && t.tau_eps <= t.tau_mu / 2.0 && t.tau_mu <= 0.25) {
        return Err(Error::MeshConstruction(format!(
            "transition points violate 0 < tau_eps <= tau_mu/2, tau_mu <= 1/4: {t:?}"
        )));
    }
    Ok(())
}

/// Fills `nodes[start..=start + m]` with `a + (b - a) j / m`, keeping both
/// ends exact.
fn fill_uniform(nodes: &mut [f64], start: usize, m: usize, a: f64, b: f64) {
    for j in 0..=m {
        nodes[start + j] = a + (b - a) * (j as f64 / m as f64);
    }
    nodes[start] = a;
    nodes[start + m] = b;
}

fn shishkin_with(p: &MeshParams, t: Transition) -> Result<Mesh> {
    check_transition(t)?;
    let n = p.n;
    let n8 = n / 8;
    let mut nodes = vec![0.0; n + 1];
    fill_uniform(&mut nodes, 0, n8, 0.0, t.tau_eps);
    fill_uniform(&mut nodes, n8, n8, t.tau_eps, t.tau_mu);
    fill_uniform(&mut nodes, n / 4, n / 2, t.tau_mu, 1.0 - t.tau_mu);
    // mirror the left layer pieces
    for i in 0..n / 4 {
        nodes[n - i] = 1.0 - nodes[i];
    }
    nodes[n / 2] = 0.5;
    Mesh::from_nodes(MeshKind::Shishkin, nodes, true, Some(t), Some(*p))
}

/// Bakhvalov-Shishkin mesh.
///
/// When the 1/8 or 1/4 clamp of the transition points is active the graded
/// pieces are still built by inverting the layer exponentials between the
/// (clamped) transition points; a warning is logged because the grading then
/// no longer matches the closed-form node list of [`bs_closed_form_node`].
pub fn bakhvalov_shishkin(p: &MeshParams) -> Result<Mesh> {
    p.check()?;
    if let Some(detail) = p.bs_clamp_active() {
        warn!("BS mesh with clamped transition points: {detail}");
    }
    let (tau_mu, tau_eps) = transition_params(p);
    bakhvalov_shishkin_with(p, Transition { tau_eps, tau_mu })
}

/// Like [`bakhvalov_shishkin`] but rejects parameter sets whose transition
/// clamps are active.
pub fn bakhvalov_shishkin_strict(p: &MeshParams) -> Result<Mesh> {
    p.check()?;
    if let Some(detail) = p.bs_clamp_active() {
        return Err(Error::BsClampActive { detail });
    }
    bakhvalov_shishkin(p)
}

fn bakhvalov_shishkin_with(p: &MeshParams, t: Transition) -> Result<Mesh> {
    check_transition(t)?;
    let n = p.n;
    let n8 = n / 8;
    let (eps, mu, lambda) = (p.eps, p.mu, p.lambda);
    let se = 2.0 * eps / lambda;
    let sm = 2.0 * mu / lambda;
    // exp(-x / se) at x = tau_eps, and exp(-x / sm) at both transitions
    let q_eps = (-t.tau_eps / se).exp();
    let a = (-t.tau_eps / sm).exp();
    let b = (-t.tau_mu / sm).exp();

    let mut nodes = vec![0.0; n + 1];
    for i in 0..=n8 {
        let s = i as f64 / n8 as f64;
        nodes[i] = -se * (1.0 - s * (1.0 - q_eps)).ln();
    }
    for j in 1..n8 {
        let s = j as f64 / n8 as f64;
        nodes[n8 + j] = -sm * (a + s * (b - a)).ln();
    }
    nodes[0] = 0.0;
    nodes[n8] = t.tau_eps;
    fill_uniform(&mut nodes, n / 4, n / 2, t.tau_mu, 1.0 - t.tau_mu);
    for i in 0..n / 4 {
        nodes[n - i] = 1.0 - nodes[i];
    }
    nodes[n / 2] = 0.5;
    for (i, x) in nodes.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::MeshConstruction(format!(
                "non-finite logarithm at node {i}"
            )));
        }
    }
    Mesh::from_nodes(MeshKind::BakhvalovShishkin, nodes, true, Some(t), Some(*p))
}

pub fn generate(kind: MeshKind, p: &MeshParams) -> Result<Mesh> {
    match kind {
        MeshKind::Shishkin => shishkin(p),
        MeshKind::BakhvalovShishkin => bakhvalov_shishkin(p),
        MeshKind::Uniform => {
            p.check()?;
            uniform(p.n)
        }
    }
}

/// Same mesh kind with `factor * N` intervals and the coarse transition
/// points held fixed.
pub fn refine_pinned(mesh: &Mesh, factor: usize) -> Result<Mesh> {
    if factor < 2 {
        return Err(Error::Parameter(format!(
            "refinement factor must be >= 2 (got {factor})"
        )));
    }
    let n = mesh.n() * factor;
    match (mesh.kind, mesh.params, mesh.transition) {
        (MeshKind::Uniform, _, _) => uniform(n),
        (kind, Some(p), Some(t)) => {
            let p = p.with_n(n);
            match kind {
                MeshKind::Shishkin => shishkin_with(&p, t),
                _ => bakhvalov_shishkin_with(&p, t),
            }
        }
        _ => Err(Error::MeshConstruction(
            "layer-adapted mesh without construction parameters".into(),
        )),
    }
}

/// One branch of the closed-form Bakhvalov-Shishkin node list, evaluated at
/// any index `i` (branch numbers 1 to 5, left to right). Valid only when the
/// transition clamps are inactive.
pub fn bs_branch_value(p: &MeshParams, branch: u8, i: usize) -> f64 {
    let nf = p.n as f64;
    let r = 8.0 * i as f64 / nf;
    let ln_n = nf.ln();
    let s2 = nf.powf(-p.sigma / 2.0);
    // N^(-sigma eps / (2 mu)) - 1, kept separate because it is tiny when eps << mu
    let sem_m1 = (-p.sigma * p.eps / (2.0 * p.mu) * ln_n).exp_m1();
    let sem = 1.0 + sem_m1;
    let (eps, mu, lambda) = (p.eps, p.mu, p.lambda);
    match branch {
        1 => -2.0 * eps / lambda * (-r * (1.0 - s2)).ln_1p(),
        // r (s2 - sem) + (2 sem - s2) = 1 + (r - 1)(s2 - sem) + (sem - 1)
        2 => -2.0 * mu / lambda * ((r - 1.0) * (s2 - sem) + sem_m1).ln_1p(),
        3 => {
            let tau_mu = p.mu_width();
            tau_mu + (1.0 - 2.0 * tau_mu) / (nf / 2.0) * (i as f64 - nf / 4.0)
        }
        // r (sem - s2) + (7 s2 - 6 sem) = 1 + (r - 7)(sem - s2) + (sem - 1)
        4 => 1.0 + 2.0 * mu / lambda * ((r - 7.0) * (sem - s2) + sem_m1).ln_1p(),
        5 => 1.0 + 2.0 * eps / lambda * (-8.0 / nf * (1.0 - s2) * (nf - i as f64)).ln_1p(),
        _ => panic!("BS branch must be 1..=5 (got {branch})"),
    }
}

/// Closed-form Bakhvalov-Shishkin node `x_i`, selecting the branch by index.
pub fn bs_closed_form_node(p: &MeshParams, i: usize) -> f64 {
    let n = p.n;
    let branch = if i <= n / 8 {
        1
    } else if i < n / 4 {
        2
    } else if i <= 3 * n / 4 {
        3
    } else if i < 7 * n / 8 {
        4
    } else {
        5
    };
    bs_branch_value(p, branch, i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize, lambda: f64, eps: f64, mu: f64) -> MeshParams {
        MeshParams::new(n, 2.0, lambda, eps, mu).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn transition_example_values() {
        let p = params(64, 0.7, 1e-3, 1e-3);
        let (tm, te) = transition_params(&p);
        let w = 2.0 * 1e-3 * 64f64.ln() / 0.7;
        assert!((w - 0.011_882_5).abs() < 1e-6);
        assert_eq!(tm, w);
        assert_eq!(te, w / 2.0);
        assert!((te - 0.005_941_3).abs() < 1e-7);
    }

    #[test]
    fn transition_clamped() {
        let p = params(8, 1.0, 1.0, 1.0);
        assert_eq!(transition_params(&p), (0.25, 0.125));
    }

    #[test]
    fn equal_parameters_halve_tau_mu() {
        for &(n, e) in &[(64, 1e-3), (1024, 1e-8), (8, 0.5), (4096, 1e-2)] {
            let p = params(n, 0.8, e, e);
            let (tm, te) = transition_params(&p);
            assert_eq!(te, 0.125_f64.min(tm / 2.0));
        }
    }

    #[test]
    fn parameter_checks() {
        assert!(MeshParams::new(60, 2.0, 1.0, 1e-3, 1e-3).is_err());
        assert!(MeshParams::new(0, 2.0, 1.0, 1e-3, 1e-3).is_err());
        assert!(MeshParams::new(64, 1.5, 1.0, 1e-3, 1e-3).is_err());
        assert!(MeshParams::new(64, 2.0, 0.0, 1e-3, 1e-3).is_err());
        assert!(MeshParams::new(64, 2.0, 1.0, 1e-2, 1e-3).is_err());
    }

    #[test]
    fn shishkin_clamped_is_uniform() {
        let m = shishkin(&params(8, 1.0, 1.0, 1.0)).unwrap();
        let expect = [0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0];
        for (x, e) in m.nodes().iter().zip(expect) {
            assert!((x - e).abs() < 1e-15);
        }
    }

    #[test]
    fn shishkin_first_step() {
        let p = params(64, 0.7, 1e-3, 1e-2);
        let m = shishkin(&p).unwrap();
        assert!(rel(m.tau_eps().unwrap(), 0.011_882_5) < 1e-5);
        let h1 = 8.0 * 2.0 * 1e-3 * 64f64.ln() / (0.7 * 64.0);
        assert!(rel(m.h(1), h1) < 1e-12);
        assert!(rel(m.h(1), 1.4853e-3) < 1e-4);
        // uniform inside each piece
        let h = m.step_sizes();
        for piece in [0..8, 8..16, 16..48, 48..56, 56..64] {
            let first = h[piece.start];
            for &hi in &h[piece] {
                assert!(rel(hi, first) < 1e-9);
            }
        }
    }

    #[test]
    fn bs_first_step_example() {
        let p = params(64, 0.7, 1e-5, 1e-3);
        let m = bakhvalov_shishkin_strict(&p).unwrap();
        let log_arg: f64 = 1.0 - (8.0 / 64.0) * (1.0 - 1.0 / 64.0);
        let expect = -(2e-5 / 0.7) * log_arg.ln();
        assert!((-log_arg.ln() - 0.131_30).abs() < 1e-5);
        assert!(rel(m.h(1), expect) < 1e-12);
        assert!(rel(m.h(1), 3.7515e-6) < 1e-4);
    }

    #[test]
    fn bs_matches_closed_form() {
        for &(n, eps, mu) in &[
            (64, 1e-5, 1e-3),
            (256, 1e-8, 1e-4),
            (4096, 1e-14, 1e-4),
            (512, 1e-4, 1e-3),
        ] {
            let p = params(n, 0.707, eps, mu);
            let m = bakhvalov_shishkin_strict(&p).unwrap();
            for i in 0..=n {
                let x = m.x(i);
                let c = bs_closed_form_node(&p, i);
                assert!(
                    (x - c).abs() <= 1e-12 * x.max(1e-300).max(1.0 - x) || (x - c).abs() < 1e-15,
                    "n={n} i={i} x={x} closed={c}"
                );
            }
        }
    }

    #[test]
    fn bs_branch_continuity() {
        for &(n, eps, mu) in &[(64, 1e-5, 1e-3), (1024, 1e-9, 1e-4), (4096, 1e-6, 1e-3)] {
            let p = params(n, 0.707, eps, mu);
            let (tm, te) = (p.mu_width(), p.eps_width());
            let pairs = [
                (1, 2, n / 8, te),
                (2, 3, n / 4, tm),
                (3, 4, 3 * n / 4, 1.0 - tm),
                (4, 5, 7 * n / 8, 1.0 - te),
            ];
            for (b1, b2, i, target) in pairs {
                let (u, v) = (bs_branch_value(&p, b1, i), bs_branch_value(&p, b2, i));
                assert!(rel(u, target) < 1e-12, "branch {b1} at {i}: {u} vs {target}");
                assert!(rel(v, target) < 1e-12, "branch {b2} at {i}: {v} vs {target}");
            }
        }
    }

    #[test]
    fn strict_bs_rejects_clamp() {
        let p = params(64, 0.7, 0.1, 0.5);
        assert!(matches!(
            bakhvalov_shishkin_strict(&p),
            Err(Error::BsClampActive { .. })
        ));
        // the tolerant constructor still yields a valid graded mesh
        let m = bakhvalov_shishkin(&p).unwrap();
        assert_eq!(m.x(m.n() / 4), 0.25);
    }

    #[test]
    fn refine_shishkin_pins_transitions() {
        let m = shishkin(&params(64, 0.707, 1e-4, 1e-3)).unwrap();
        let f = refine_pinned(&m, 5).unwrap();
        assert_eq!(f.n(), 320);
        assert_eq!(f.transition, m.transition);
        assert_eq!(f.x(320 / 4), m.tau_mu().unwrap());
        assert_eq!(f.x(320 / 8), m.tau_eps().unwrap());
        assert!(refine_pinned(&m, 1).is_err());
    }

    #[test]
    fn refine_by_two_halves_shishkin_steps() {
        let m = shishkin(&params(128, 0.707, 1e-6, 1e-3)).unwrap();
        let f = refine_pinned(&m, 2).unwrap();
        let (hc, hf) = (m.step_sizes(), f.step_sizes());
        for (i, &h) in hc.iter().enumerate() {
            assert!(rel(hf[2 * i], h / 2.0) < 1e-9);
            assert!(rel(hf[2 * i + 1], h / 2.0) < 1e-9);
            // coarse nodes are fine nodes
            assert!((f.x(2 * i) - m.x(i)).abs() < 1e-15);
        }
    }

    #[test]
    fn refine_bs_contains_coarse_nodes() {
        let m = bakhvalov_shishkin(&params(64, 0.707, 1e-6, 1e-3)).unwrap();
        let f = refine_pinned(&m, 2).unwrap();
        assert_eq!(f.transition, m.transition);
        for i in 0..=64 {
            let (c, x) = (m.x(i), f.x(2 * i));
            assert!((c - x).abs() <= 1e-12 * c.min(1.0 - c).max(1e-300) + 1e-16);
        }
    }

    #[test]
    fn uniform_steps() {
        let m = uniform(4).unwrap();
        assert_eq!(m.step_sizes(), vec![0.25; 4]);
        assert!(uniform(1).is_err());
    }

    #[test]
    fn bs_steps_are_order_one_over_n() {
        for k in 6..=12 {
            let n = 1usize << k;
            for &(eps, mu) in &[(1e-8, 1e-4), (1e-6, 1e-3)] {
                if mu > 1.0 / n as f64 {
                    continue;
                }
                let lambda = 0.707;
                let p = params(n, lambda, eps, mu);
                let m = bakhvalov_shishkin_strict(&p).unwrap();
                let h = m.step_sizes();
                let bound = (2.0 / n as f64).max(4.0 / (lambda * n as f64));
                for (idx, &hi) in h.iter().enumerate() {
                    let i = idx + 1;
                    assert!(hi <= bound, "N={n} i={i} h={hi} bound={bound}");
                }
            }
        }
    }

    #[test]
    fn csv_export() {
        let m = uniform(2).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "i,x,h");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,0.0000000000000000e0,"));
        assert!(lines[2].ends_with(",5.0000000000000000e-1"));
    }

    fn kind_strategy() -> impl Strategy<Value = MeshKind> {
        prop_oneof![Just(MeshKind::Shishkin), Just(MeshKind::BakhvalovShishkin)]
    }

    proptest! {
        #[test]
        fn generated_meshes_are_well_formed(
            kind in kind_strategy(),
            k in 1usize..10,
            je in 0u32..14,
            dj in 0u32..8,
            lambda in 0.3f64..1.5,
        ) {
            let n = 8 * k * 2;
            let mu = 10f64.powi(-(je.saturating_sub(dj) as i32));
            let eps = 10f64.powi(-(je as i32));
            let p = MeshParams::new(n, 2.0, lambda, eps, mu).unwrap();
            let m = generate(kind, &p).unwrap();
            prop_assert_eq!(m.n(), n);
            prop_assert_eq!(m.x(0), 0.0);
            prop_assert_eq!(m.x(n), 1.0);
            prop_assert!(m.step_sizes().iter().all(|&h| h > 0.0));
            let t = m.transition.unwrap();
            prop_assert!(t.tau_eps > 0.0 && t.tau_eps <= t.tau_mu / 2.0 && t.tau_mu <= 0.25);
            let checks = [
                (n / 8, t.tau_eps),
                (n / 4, t.tau_mu),
                (3 * n / 4, 1.0 - t.tau_mu),
                (7 * n / 8, 1.0 - t.tau_eps),
            ];
            for (i, target) in checks {
                prop_assert!((m.x(i) - target).abs() <= 1e-12 * target);
            }
            prop_assert_eq!(m.x(n / 2), 0.5);
            if eps == mu {
                for i in 0..=n {
                    prop_assert!((m.x(i) + m.x(n - i) - 1.0).abs() <= 1e-12);
                }
            }
        }
    }
}
