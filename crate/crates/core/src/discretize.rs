//! Assembly of the discrete system.
//!
//! Interior rows use the central second difference on the nonuniform mesh.
//! The two boundary rows come from the Robin conditions with the one-sided
//! cubic-spline derivatives
//!
//! ```text
//!   S+(x_0) = -h_1/3 M_0 - h_1/6 M_1 + (y_1 - y_0)/h_1
//!   S-(x_N) =  h_N/6 M_{N-1} + h_N/3 M_N + (y_N - y_{N-1})/h_N
//! ```
//!
//! where the spline moments `M_i = y''(x_i)` are eliminated through the
//! differential equation, and each boundary row is scaled by `3 p / h`
//! (`p` the component's diffusion parameter).
//!
//! Unknowns are ordered node by node as `(Y1_i, Y2_i)`, giving a
//! block-tridiagonal matrix with 2x2 blocks. Row 0 of a block is the first
//! equation, row 1 the second; column 0 multiplies `Y1`, column 1 `Y2`.

use std::io::Write;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, MeshKind};
use crate::problem::ProblemSpec;

pub type Block = Matrix2<f64>;
pub type Pair = Vector2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Weights of a one-sided spline derivative.
///
/// `Left` is `S+` at the left end of an interval and acts on
/// `(M_i, M_{i+1}, y_{i+1} - y_i)`; `Right` is `S-` at the right end and acts
/// on `(M_{i-1}, M_i, y_i - y_{i-1})`.
pub fn spline_derivative_coeffs(h: f64, side: Side) -> Result<[f64; 3]> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!(
            "spline step must be positive (got {h})"
        )));
    }
    Ok(match side {
        Side::Left => [-h / 3.0, -h / 6.0, 1.0 / h],
        Side::Right => [h / 6.0, h / 3.0, 1.0 / h],
    })
}

#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub lower: Vec<Block>,
    pub diag: Vec<Block>,
    pub upper: Vec<Block>,
    pub rhs: Vec<Pair>,
    /// Row sums `(L_i + D_i + U_i) 1` evaluated from their closed forms, free
    /// of the cancellation a direct summation of the entries suffers.
    pub row_sums: Option<Vec<Pair>>,
    pub mesh: Mesh,
}

impl DiscreteSystem {
    pub fn n_nodes(&self) -> usize {
        self.diag.len()
    }

    /// `A^-` of equation `k` at node `i`.
    pub fn a_minus(&self, k: usize, i: usize) -> f64 {
        self.lower[i][(k, k)]
    }

    pub fn a_center(&self, k: usize, i: usize) -> f64 {
        self.diag[i][(k, k)]
    }

    pub fn a_plus(&self, k: usize, i: usize) -> f64 {
        self.upper[i][(k, k)]
    }

    pub fn b_minus(&self, k: usize, i: usize) -> f64 {
        self.lower[i][(k, 1 - k)]
    }

    pub fn b_center(&self, k: usize, i: usize) -> f64 {
        self.diag[i][(k, 1 - k)]
    }

    pub fn b_plus(&self, k: usize, i: usize) -> f64 {
        self.upper[i][(k, 1 - k)]
    }

    /// Matrix-vector product.
    pub fn apply(&self, y: &[Pair]) -> Vec<Pair> {
        let n = self.n_nodes();
        assert_eq!(y.len(), n, "vector length does not match the system");
        (0..n)
            .map(|i| {
                let mut r = self.diag[i] * y[i];
                if i > 0 {
                    r += self.lower[i] * y[i - 1];
                }
                if i + 1 < n {
                    r += self.upper[i] * y[i + 1];
                }
                r
            })
            .collect()
    }

    /// Largest absolute row sum of the full matrix.
    pub fn max_abs_row_sum(&self) -> f64 {
        let row = |b: &Block, k: usize| b[(k, 0)].abs() + b[(k, 1)].abs();
        (0..self.n_nodes())
            .flat_map(|i| {
                (0..2).map(move |k| {
                    row(&self.lower[i], k) + row(&self.diag[i], k) + row(&self.upper[i], k)
                })
            })
            .fold(0.0, f64::max)
    }

    /// CSV dump with one row per node.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "i", "A1-", "A1c", "A1+", "B1c", "rhs1", "A2-", "A2c", "A2+", "B2c", "rhs2",
        ])?;
        for i in 0..self.n_nodes() {
            let mut rec = vec![i.to_string()];
            for k in 0..2 {
                for v in [
                    self.a_minus(k, i),
                    self.a_center(k, i),
                    self.a_plus(k, i),
                    self.b_center(k, i),
                    self.rhs[i][k],
                ] {
                    rec.push(format!("{v:.16e}"));
                }
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Coefficients of one boundary row of one equation.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BoundaryRow {
    a_center: f64,
    /// `A+` on the left, `A-` on the right.
    a_neighbor: f64,
    b_center: f64,
    b_neighbor: f64,
    /// Standalone data term `3 p P / h` or `3 p Q / h`.
    f_data: f64,
    /// Sum of the four matrix coefficients.
    row_sum: f64,
    f_center: f64,
    f_neighbor: f64,
}

/// Robin row of equation `k` at the left (`x_0`) or right (`x_N`) end.
fn boundary_row(spec: &ProblemSpec, mesh: &Mesh, k: usize, side: Side) -> Result<BoundaryRow> {
    let n = mesh.n();
    let (i0, i1, h) = match side {
        Side::Left => (0, 1, mesh.h(1)),
        Side::Right => (n, n - 1, mesh.h(n)),
    };
    let d = if k == 0 { spec.eps } else { spec.mu };
    let bc = spec.bc[k];
    let (value_w, deriv_w, data) = match side {
        Side::Left => (bc.alpha, bc.beta, bc.p),
        Side::Right => (bc.gamma, bc.delta, bc.q),
    };
    let b0 = spec.coupling_checked(mesh.x(i0))?[k];
    let b1 = spec.coupling_checked(mesh.x(i1))?[k];
    let own = k;
    let other = 1 - k;
    Ok(BoundaryRow {
        a_center: 3.0 * d / h * (value_w + d * deriv_w / h) + b0[own] * deriv_w,
        a_neighbor: -3.0 * d * d * deriv_w / (h * h) + b1[own] * deriv_w / 2.0,
        b_center: deriv_w * b0[other],
        b_neighbor: deriv_w * b1[other] / 2.0,
        f_data: 3.0 * d * data / h,
        row_sum: 3.0 * d * value_w / h
            + deriv_w * (b0[own] + b0[other] + 0.5 * (b1[own] + b1[other])),
        f_center: deriv_w,
        f_neighbor: deriv_w / 2.0,
    })
}

pub fn assemble(spec: &ProblemSpec, mesh: &Mesh) -> Result<DiscreteSystem> {
    let n = mesh.n();
    if n < 2 {
        return Err(Error::Mismatch(format!(
            "need at least 3 mesh nodes (got {})",
            n + 1
        )));
    }
    if let Some(p) = mesh.params {
        if p.eps != spec.eps || p.mu != spec.mu {
            return Err(Error::Mismatch(format!(
                "mesh built for (eps, mu) = ({}, {}) but problem has ({}, {})",
                p.eps, p.mu, spec.eps, spec.mu
            )));
        }
    }
    let zero = Block::zeros();
    let mut lower = vec![zero; n + 1];
    let mut diag = vec![zero; n + 1];
    let mut upper = vec![zero; n + 1];
    let mut rhs = vec![Pair::zeros(); n + 1];
    let mut row_sums = vec![Pair::zeros(); n + 1];
    let diff = [spec.eps, spec.mu];

    let f0 = spec.source_checked(mesh.x(0))?;
    let f1 = spec.source_checked(mesh.x(1))?;
    for k in 0..2 {
        let r = boundary_row(spec, mesh, k, Side::Left)?;
        diag[0][(k, k)] = r.a_center;
        diag[0][(k, 1 - k)] = r.b_center;
        upper[0][(k, k)] = r.a_neighbor;
        upper[0][(k, 1 - k)] = r.b_neighbor;
        rhs[0][k] = r.f_data + r.f_center * f0[k] + r.f_neighbor * f1[k];
        row_sums[0][k] = r.row_sum;
    }

    for i in 1..n {
        let (hl, hr) = (mesh.h(i), mesh.h(i + 1));
        let hbar = 0.5 * (hl + hr);
        let b = spec.coupling_checked(mesh.x(i))?;
        let f = spec.source_checked(mesh.x(i))?;
        for k in 0..2 {
            let d2 = diff[k] * diff[k];
            lower[i][(k, k)] = -d2 / (hl * hbar);
            upper[i][(k, k)] = -d2 / (hr * hbar);
            diag[i][(k, k)] = 2.0 * d2 / (hl * hr) + b[k][k];
            diag[i][(k, 1 - k)] = b[k][1 - k];
            rhs[i][k] = f[k];
            row_sums[i][k] = b[k][k] + b[k][1 - k];
        }
    }

    let fn1 = spec.source_checked(mesh.x(n - 1))?;
    let fn0 = spec.source_checked(mesh.x(n))?;
    for k in 0..2 {
        let r = boundary_row(spec, mesh, k, Side::Right)?;
        diag[n][(k, k)] = r.a_center;
        diag[n][(k, 1 - k)] = r.b_center;
        lower[n][(k, k)] = r.a_neighbor;
        lower[n][(k, 1 - k)] = r.b_neighbor;
        rhs[n][k] = r.f_neighbor * fn1[k] + r.f_center * fn0[k] + r.f_data;
        row_sums[n][k] = r.row_sum;
    }

    Ok(DiscreteSystem {
        lower,
        diag,
        upper,
        rhs,
        row_sums: Some(row_sums),
        mesh: mesh.clone(),
    })
}

/// Taylor coefficients of the boundary truncation error at `x_0`.
///
/// `t[j]` multiplies `y^(j)(x_0)` and vanishes identically for `j < 4`;
/// `scale[j]` is the sum of magnitudes of the terms making up `t[j]`, so
/// `t[j] / scale[j]` measures cancellation relative to the coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationReport {
    pub t: [f64; 4],
    pub scale: [f64; 4],
    pub t4: f64,
    /// `p^2 beta h_1^2` for the component's diffusion parameter `p`.
    pub t4_reference: f64,
}

impl TruncationReport {
    pub fn max_relative(&self) -> f64 {
        self.t
            .iter()
            .zip(self.scale)
            .map(|(t, s)| if s > 0.0 { t.abs() / s } else { t.abs() })
            .fold(0.0, f64::max)
    }

    /// `T_4 / (p^2 beta h_1^2)`, expected to be `1/8`. `None` when `beta = 0`.
    pub fn t4_ratio(&self) -> Option<f64> {
        (self.t4_reference != 0.0).then(|| self.t4 / self.t4_reference)
    }
}

/// Evaluates the truncation coefficients of equation `k` at `x_0` from the
/// assembled row-0 coefficients.
pub fn truncation_identities_for(
    spec: &ProblemSpec,
    mesh: &Mesh,
    k: usize,
) -> Result<TruncationReport> {
    let sys = assemble(spec, mesh)?;
    let d = [spec.eps, spec.mu][k];
    let bc = spec.bc[k];
    let h = mesh.h(1);
    let ac = sys.a_center(k, 0);
    let ap = sys.a_plus(k, 0);
    let (fc, fp) = (bc.beta, bc.beta / 2.0);
    let c0 = spec.b_at(k, k, mesh.x(0));
    let c1 = spec.b_at(k, k, mesh.x(1));
    let d2 = d * d;
    let alpha_term = 3.0 * d * bc.alpha / h;
    let beta_term = 3.0 * d2 * bc.beta / h;

    let terms: [Vec<f64>; 4] = [
        vec![ac, ap, -alpha_term, -fc * c0, -fp * c1],
        vec![h * ap, beta_term, -fp * c1 * h],
        vec![h * h * ap / 2.0, d2 * (fc + fp), -h * h * fp * c1 / 2.0],
        vec![h.powi(3) * ap / 6.0, d2 * h * fp, -fp * c1 * h.powi(3) / 6.0],
    ];
    let mut t = [0.0; 4];
    let mut scale = [0.0; 4];
    for (j, ts) in terms.iter().enumerate() {
        t[j] = ts.iter().sum();
        scale[j] = ts.iter().map(|v| v.abs()).sum();
    }
    let t4 = h.powi(4) * ap / 24.0 + d2 * h * h * fp / 2.0 - fp * c1 * h.powi(4) / 24.0;
    Ok(TruncationReport {
        t,
        scale,
        t4,
        t4_reference: d2 * bc.beta * h * h,
    })
}

/// Truncation coefficients of the first equation at `x_0`.
pub fn truncation_identities(spec: &ProblemSpec, mesh: &Mesh) -> Result<TruncationReport> {
    truncation_identities_for(spec, mesh, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MMatrixReport {
    pub signs_ok: bool,
    pub dominance_ok: bool,
    /// First failing `(node, check)`, scanning nodes in order.
    pub first_violation: Option<(usize, String)>,
    /// Left side of the mesh-specific sufficient condition (`< 3` required);
    /// `None` for meshes without one.
    pub threshold_value: Option<f64>,
    pub threshold_satisfied: bool,
}

/// Left-hand side of the sufficient M-matrix condition for a mesh kind.
pub fn m_matrix_threshold(
    kind: MeshKind,
    n: usize,
    lambda_star: f64,
    lambda: f64,
    sigma: f64,
) -> Option<f64> {
    let nf = n as f64;
    match kind {
        MeshKind::Shishkin => {
            let ln = nf.ln();
            Some(32.0 * lambda_star / (lambda * lambda) * sigma * sigma * ln * ln / (nf * nf))
        }
        MeshKind::BakhvalovShishkin => {
            let l = (1.0 + 8.0 / nf * (nf.powf(-sigma / 2.0) - 1.0)).ln();
            Some(2.0 * lambda_star / (lambda * lambda) * l * l)
        }
        MeshKind::Uniform => None,
    }
}

/// Checks the sign pattern and strict diagonal dominance of the `A`
/// coefficients, and evaluates the sufficient threshold condition.
///
/// A neighbor coefficient that is identically zero because the matching
/// Robin derivative weight is zero is not checked for sign.
pub fn m_matrix_audit(
    sys: &DiscreteSystem,
    lambda_star: f64,
    lambda: f64,
    sigma: f64,
) -> MMatrixReport {
    let n = sys.n_nodes() - 1;
    let mut signs_ok = true;
    let mut dominance_ok = true;
    let mut first_violation: Option<(usize, String)> = None;
    let flag = |i: usize, what: String, first: &mut Option<(usize, String)>| {
        if first.is_none() {
            *first = Some((i, what));
        }
    };
    for i in 0..=n {
        for k in 0..2 {
            let name = k + 1;
            let ac = sys.a_center(k, i);
            let am = (i > 0).then(|| sys.a_minus(k, i));
            let ap = (i < n).then(|| sys.a_plus(k, i));
            let boundary = i == 0 || i == n;
            if ac <= 0.0 {
                signs_ok = false;
                flag(i, format!("A{name}c"), &mut first_violation);
            }
            if let Some(v) = am {
                if v >= 0.0 && !(boundary && v == 0.0) {
                    signs_ok = false;
                    flag(i, format!("A{name}-"), &mut first_violation);
                }
            }
            if let Some(v) = ap {
                if v >= 0.0 && !(boundary && v == 0.0) {
                    signs_ok = false;
                    flag(i, format!("A{name}+"), &mut first_violation);
                }
            }
            let off = am.map_or(0.0, f64::abs) + ap.map_or(0.0, f64::abs);
            if ac.abs() <= off {
                dominance_ok = false;
                flag(i, format!("A{name} dominance"), &mut first_violation);
            }
        }
    }
    let threshold_value = m_matrix_threshold(sys.mesh.kind, n, lambda_star, lambda, sigma);
    MMatrixReport {
        signs_ok,
        dominance_ok,
        first_violation,
        threshold_value,
        threshold_satisfied: threshold_value.map_or(true, |v| v < 3.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{self, MeshParams};
    use crate::problem::{builtin, scalar, RobinBc};

    fn s_mesh(n: usize, eps: f64, mu: f64) -> Mesh {
        mesh::shishkin(&MeshParams::new(n, 2.0, 0.707, eps, mu).unwrap()).unwrap()
    }

    fn bs_mesh(n: usize, eps: f64, mu: f64) -> Mesh {
        mesh::bakhvalov_shishkin(&MeshParams::new(n, 2.0, 0.707, eps, mu).unwrap()).unwrap()
    }

    fn spline_left(h: f64, m: [f64; 2], y: [f64; 2]) -> f64 {
        let w = spline_derivative_coeffs(h, Side::Left).unwrap();
        w[0] * m[0] + w[1] * m[1] + w[2] * (y[1] - y[0])
    }

    fn spline_right(h: f64, m: [f64; 2], y: [f64; 2]) -> f64 {
        let w = spline_derivative_coeffs(h, Side::Right).unwrap();
        w[0] * m[0] + w[1] * m[1] + w[2] * (y[1] - y[0])
    }

    #[test]
    fn spline_weights() {
        let close = |a: [f64; 3], b: [f64; 3]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
        assert!(close(
            spline_derivative_coeffs(0.3, Side::Left).unwrap(),
            [-0.1, -0.05, 1.0 / 0.3]
        ));
        assert!(close(
            spline_derivative_coeffs(0.3, Side::Right).unwrap(),
            [0.05, 0.1, 1.0 / 0.3]
        ));
        assert!(spline_derivative_coeffs(0.0, Side::Left).is_err());
        assert!(spline_derivative_coeffs(-1.0, Side::Right).is_err());
    }

    #[test]
    fn spline_derivative_exactness() {
        // constants
        assert_eq!(spline_left(0.2, [0.0, 0.0], [3.0, 3.0]), 0.0);
        assert_eq!(spline_right(0.2, [0.0, 0.0], [3.0, 3.0]), 0.0);
        // linears
        let h = 0.25;
        assert!((spline_left(h, [0.0, 0.0], [0.5, 0.75]) - 1.0).abs() < 1e-15);
        assert!((spline_right(h, [0.0, 0.0], [0.5, 0.75]) - 1.0).abs() < 1e-15);
        // y = x^3 on [0, 1]: y'(0) = 0, y'(1) = 3, y'' = 6x
        assert!(spline_left(1.0, [0.0, 6.0], [0.0, 1.0]).abs() < 1e-15);
        assert!((spline_right(1.0, [0.0, 6.0], [0.0, 1.0]) - 3.0).abs() < 1e-15);
        // arbitrary cubic on a shifted interval
        let y = |x: f64| 2.0 - x + 0.5 * x * x - 0.3 * x.powi(3);
        let dy = |x: f64| -1.0 + x - 0.9 * x * x;
        let d2y = |x: f64| 1.0 - 1.8 * x;
        let (a, b) = (0.3, 0.45);
        let h = b - a;
        assert!((spline_left(h, [d2y(a), d2y(b)], [y(a), y(b)]) - dy(a)).abs() < 1e-13);
        assert!((spline_right(h, [d2y(a), d2y(b)], [y(a), y(b)]) - dy(b)).abs() < 1e-13);
    }

    #[test]
    fn block_structure() {
        let spec = builtin("example1", 1e-4, 1e-3).unwrap();
        let m = bs_mesh(64, 1e-4, 1e-3);
        let sys = assemble(&spec, &m).unwrap();
        assert_eq!(sys.n_nodes(), 65);
        assert_eq!(sys.lower[0], Block::zeros());
        assert_eq!(sys.upper[64], Block::zeros());
        for i in 1..64 {
            for k in 0..2 {
                assert_eq!(sys.b_minus(k, i), 0.0);
                assert_eq!(sys.b_plus(k, i), 0.0);
            }
        }
    }

    #[test]
    fn uniform_interior_coefficients() {
        let eps = 0.05;
        let spec = builtin("example1", eps, 0.2).unwrap();
        let m = mesh::uniform(16).unwrap();
        let sys = assemble(&spec, &m).unwrap();
        let h = 1.0 / 16.0;
        for i in 1..16 {
            let x = m.x(i);
            let edge = -eps * eps / (h * h);
            assert!((sys.a_minus(0, i) - edge).abs() < 1e-12 * edge.abs());
            assert!((sys.a_plus(0, i) - edge).abs() < 1e-12 * edge.abs());
            let c = 2.0 * eps * eps / (h * h) + (x + 1.0) * (x + 1.0);
            assert!((sys.a_center(0, i) - c).abs() < 1e-12 * c);
            assert_eq!(sys.b_center(0, i), -(x + 0.5));
            assert_eq!(sys.b_center(1, i), -1.0);
        }
    }

    #[test]
    fn left_boundary_coefficients_example1() {
        let (eps, mu) = (1e-3, 1e-2);
        let spec = builtin("example1", eps, mu).unwrap();
        let m = s_mesh(64, eps, mu);
        let sys = assemble(&spec, &m).unwrap();
        let h = m.h(1);
        let x1 = m.x(1);
        let ac = 3.0 * eps / h * (1.0 + eps / h) + 1.0;
        assert!((sys.a_center(0, 0) - ac).abs() < 1e-12 * ac);
        let ap = -3.0 * eps * eps / (h * h) + (x1 + 1.0) * (x1 + 1.0) / 2.0;
        assert!((sys.a_plus(0, 0) - ap).abs() < 1e-12 * ap.abs());
        assert_eq!(sys.b_center(0, 0), -0.5);
        assert_eq!(sys.b_plus(0, 0), -(x1 + 0.5) / 2.0);
        // second equation couples to y1 through b21 = -1
        assert_eq!(sys.b_center(1, 0), -1.0);
        assert_eq!(sys.b_plus(1, 0), -0.5);
        let rhs = 3.0 * eps / h + (0.0 - 0.08) + 0.5 * (x1.powi(5) - 0.08);
        assert!((sys.rhs[0][0] - rhs).abs() < 1e-12 * rhs.abs());
    }

    #[test]
    fn right_boundary_coefficients_example2() {
        let (eps, mu) = (1e-3, 1e-2);
        let spec = builtin("example2", eps, mu).unwrap();
        let m = s_mesh(64, eps, mu);
        let sys = assemble(&spec, &m).unwrap();
        let h = m.h(64);
        let xm = m.x(63);
        // gamma_1 = 2, delta_1 = 1, Q_1 = 1
        let ac = 3.0 * eps / h * (2.0 + eps / h) + 2.0 * 4.0;
        assert!((sys.a_center(0, 64) - ac).abs() < 1e-12 * ac);
        let am = -3.0 * eps * eps / (h * h) + 2.0 * (xm + 1.0) * (xm + 1.0) / 2.0;
        assert!((sys.a_minus(0, 64) - am).abs() < 1e-12 * am.abs());
        let rhs = 0.5 * 2.0 * xm.exp() + 2.0 * 1f64.exp() + 3.0 * eps / h;
        assert!((sys.rhs[64][0] - rhs).abs() < 1e-12 * rhs);
        assert_eq!(sys.b_center(0, 64), -2.0);
    }

    #[test]
    fn constants_reproduce_rhs() {
        for kind in [MeshKind::Shishkin, MeshKind::BakhvalovShishkin] {
            for &(eps, mu) in &[(1e-3, 1e-3), (1e-8, 1e-4), (1.0, 1.0)] {
                let spec = builtin("constant_mms", eps, mu).unwrap();
                let p = MeshParams::new(64, 2.0, 0.707, eps, mu).unwrap();
                let m = mesh::generate(kind, &p).unwrap();
                let sys = assemble(&spec, &m).unwrap();
                let ones = vec![Pair::new(1.0, 1.0); 65];
                let ay = sys.apply(&ones);
                let scale = sys.max_abs_row_sum();
                for (a, r) in ay.iter().zip(&sys.rhs) {
                    assert!((a - r).amax() <= 1e-12 * scale, "{kind} {a} {r}");
                }
            }
        }
    }

    #[test]
    fn quadratic_reproduced_on_nonuniform_interior() {
        // constant B, quadratic y: central differences are exact on any mesh
        let bc = RobinBc::new(1.0, 1.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let (eps, mu) = (0.01, 0.1);
        let spec = ProblemSpec::new(
            "quad",
            eps,
            mu,
            [
                [scalar(|_| 3.0), scalar(|_| -1.0)],
                [scalar(|_| -0.5), scalar(|_| 2.0)],
            ],
            [scalar(|_| 0.0), scalar(|_| 0.0)],
            [bc, bc],
        )
        .unwrap();
        let m = s_mesh(32, eps, mu);
        let sys = assemble(&spec, &m).unwrap();
        let y1 = |x: f64| 1.0 + 2.0 * x - 3.0 * x * x;
        let y2 = |x: f64| 0.5 - x * x;
        let ys: Vec<Pair> = m.nodes().iter().map(|&x| Pair::new(y1(x), y2(x))).collect();
        let ay = sys.apply(&ys);
        for i in 1..32 {
            let x = m.x(i);
            let l1 = -eps * eps * -6.0 + 3.0 * y1(x) - y2(x);
            let l2 = -mu * mu * -2.0 - 0.5 * y1(x) + 2.0 * y2(x);
            let scale = sys.max_abs_row_sum();
            assert!((ay[i][0] - l1).abs() < 1e-12 * scale);
            assert!((ay[i][1] - l2).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn truncation_cancellation() {
        for m in [s_mesh(64, 1e-3, 1e-3), bs_mesh(256, 1e-6, 1e-4)] {
            let p = m.params.unwrap();
            let spec = builtin("example1", p.eps, p.mu).unwrap();
            for k in 0..2 {
                let r = truncation_identities_for(&spec, &m, k).unwrap();
                assert!(r.max_relative() < 1e-13, "{r:?}");
                assert!((r.t4_ratio().unwrap() - 0.125).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncation_zero_beta() {
        let mut spec = builtin("example1", 1e-3, 1e-3).unwrap();
        spec.bc[0].beta = 0.0;
        let m = s_mesh(64, 1e-3, 1e-3);
        let r = truncation_identities(&spec, &m).unwrap();
        assert_eq!(r.t4, 0.0);
        assert_eq!(r.t4_ratio(), None);
        assert!(r.max_relative() < 1e-13);
    }

    #[test]
    fn dirichlet_like_row() {
        let mut spec = builtin("example1", 1e-3, 1e-3).unwrap();
        spec.bc[0].beta = 0.0;
        let m = s_mesh(64, 1e-3, 1e-3);
        let sys = assemble(&spec, &m).unwrap();
        let h = m.h(1);
        assert_eq!(sys.a_center(0, 0), 3.0 * 1e-3 / h);
        assert_eq!(sys.a_plus(0, 0), 0.0);
        assert_eq!(sys.rhs[0][0], 3.0 * 1e-3 / h);
        let rep = m_matrix_audit(&sys, 4.0, 0.707, 2.0);
        assert!(rep.signs_ok, "{rep:?}");
    }

    #[test]
    fn audit_threshold_example() {
        let spec = builtin("example1", 1e-3, 1e-3).unwrap();
        let m = mesh::shishkin(&MeshParams::new(64, 2.0, 0.7, 1e-3, 1e-3).unwrap()).unwrap();
        let sys = assemble(&spec, &m).unwrap();
        let rep = m_matrix_audit(&sys, 4.0, 0.7, 2.0);
        let v = rep.threshold_value.unwrap();
        let ln = 64f64.ln();
        let expect = 32.0 * 4.0 / 0.49 * 4.0 * ln * ln / 4096.0;
        assert!((v - expect).abs() < 1e-12 * expect);
        assert!((v - 4.41).abs() < 0.01);
        assert!(!rep.threshold_satisfied);
        // the condition is sufficient only; the signs hold here regardless
        assert!(rep.signs_ok && rep.dominance_ok, "{rep:?}");
    }

    #[test]
    fn audit_zero_coupling_threshold() {
        for kind in [MeshKind::Shishkin, MeshKind::BakhvalovShishkin] {
            assert_eq!(m_matrix_threshold(kind, 64, 0.0, 0.7, 2.0), Some(0.0));
        }
        assert_eq!(m_matrix_threshold(MeshKind::Uniform, 64, 1.0, 0.7, 2.0), None);
    }

    #[test]
    fn audit_identity_uniform() {
        let bc = RobinBc::new(1.0, 1.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let spec = ProblemSpec::new(
            "identity",
            1.0,
            1.0,
            [
                [scalar(|_| 1.0), scalar(|_| 0.0)],
                [scalar(|_| 0.0), scalar(|_| 1.0)],
            ],
            [scalar(|_| 1.0), scalar(|_| 1.0)],
            [bc, bc],
        )
        .unwrap();
        for n in [4, 8, 16, 64, 256] {
            let sys = assemble(&spec, &mesh::uniform(n).unwrap()).unwrap();
            let rep = m_matrix_audit(&sys, 1.0, 1.0, 2.0);
            assert!(rep.signs_ok && rep.dominance_ok, "N={n} {rep:?}");
            assert!(rep.threshold_satisfied);
            assert_eq!(rep.first_violation, None);
        }
    }

    #[test]
    fn audit_reports_sign_violation() {
        // coarse uniform mesh, large reaction: A+ at row 0 becomes positive
        let spec = builtin("example1", 1e-3, 1e-3).unwrap();
        let sys = assemble(&spec, &mesh::uniform(8).unwrap()).unwrap();
        let rep = m_matrix_audit(&sys, 4.0, 0.707, 2.0);
        assert!(!rep.signs_ok);
        assert_eq!(rep.first_violation, Some((0, "A1+".to_string())));
    }

    #[test]
    fn mismatched_mesh_rejected() {
        let spec = builtin("example1", 1e-3, 1e-3).unwrap();
        let m = s_mesh(64, 1e-4, 1e-3);
        assert!(matches!(assemble(&spec, &m), Err(Error::Mismatch(_))));
    }

    #[test]
    fn system_csv_columns() {
        let spec = builtin("example1", 0.5, 0.5).unwrap();
        let sys = assemble(&spec, &mesh::uniform(4).unwrap()).unwrap();
        let mut buf = Vec::new();
        sys.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(
            lines.next().unwrap(),
            "i,A1-,A1c,A1+,B1c,rhs1,A2-,A2c,A2+,B2c,rhs2"
        );
        assert_eq!(lines.count(), 5);
    }
}
