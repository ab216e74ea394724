//! Block-tridiagonal solves.

use std::io::Write;

use log::debug;
use nalgebra::{DMatrix, DVector};

use crate::discretize::{Block, DiscreteSystem, Pair};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Pivot blocks with `|det| < PIVOT_TOL * max_entry^2` are treated as singular.
pub const PIVOT_TOL: f64 = 1e-30;

/// Largest `N` for which the dense reference matrix is materialized.
pub const DENSE_MAX_N: usize = 4096;

#[derive(Debug, Clone)]
pub struct SolutionGrid {
    pub mesh: Mesh,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    /// `max |A Y - rhs|` of the solved system.
    pub residual_inf: f64,
}

impl SolutionGrid {
    fn from_pairs(sys: &DiscreteSystem, y: Vec<Pair>) -> Self {
        let residual_inf = sys
            .apply(&y)
            .iter()
            .zip(&sys.rhs)
            .map(|(a, r)| (a - r).amax())
            .fold(0.0, f64::max);
        Self {
            mesh: sys.mesh.clone(),
            y1: y.iter().map(|p| p[0]).collect(),
            y2: y.iter().map(|p| p[1]).collect(),
            residual_inf,
        }
    }

    pub fn len(&self) -> usize {
        self.y1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y1.is_empty()
    }

    pub fn component(&self, k: usize) -> &[f64] {
        if k == 0 {
            &self.y1
        } else {
            &self.y2
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.y1
            .iter()
            .chain(&self.y2)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// CSV with columns `x, y1, y2`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "y1", "y2"])?;
        for ((x, a), b) in self.mesh.nodes().iter().zip(&self.y1).zip(&self.y2) {
            wtr.write_record([
                format!("{x:.16e}"),
                format!("{a:.16e}"),
                format!("{b:.16e}"),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn invert_pivot(m: &Block, row: usize) -> Result<Block> {
    let det = m.determinant();
    let scale = m.amax();
    if !det.is_finite() || det.abs() < PIVOT_TOL * scale * scale || scale == 0.0 {
        return Err(Error::SingularPivot { row, det });
    }
    let inv = Block::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det;
    Ok(inv)
}

/// Whether every off-diagonal entry is `<= 0` and every closed-form row sum
/// is `>= 0`, so the pivots can be formed without subtraction.
fn sign_certified(sys: &DiscreteSystem) -> Option<&[Pair]> {
    let sums = sys.row_sums.as_deref()?;
    let offdiag_ok = (0..sys.n_nodes()).all(|i| {
        let d = &sys.diag[i];
        d[(0, 1)] <= 0.0
            && d[(1, 0)] <= 0.0
            && sys.lower[i].iter().all(|&v| v <= 0.0)
            && sys.upper[i].iter().all(|&v| v <= 0.0)
    });
    let sums_ok = sums.iter().all(|s| s[0] >= 0.0 && s[1] >= 0.0);
    (offdiag_ok && sums_ok).then_some(sums)
}

/// Inverse of an M-matrix pivot given its off-diagonal entries and
/// `a_r = S_rr - |S_rs| >= 0`; the determinant is expanded so that only
/// nonnegative terms are added.
fn invert_m_pivot(off: [f64; 2], a: Pair, row: usize) -> Result<Block> {
    let (s01, s10) = (off[0].abs(), off[1].abs());
    let (d0, d1) = (a[0] + s01, a[1] + s10);
    let det = a[0] * a[1] + a[0] * s10 + a[1] * s01;
    let scale = d0.max(d1);
    if !det.is_finite() || det <= PIVOT_TOL * scale * scale || scale == 0.0 {
        return Err(Error::SingularPivot { row, det });
    }
    Ok(Block::new(d1, s01, s10, d0) / det)
}

/// Block Thomas algorithm: forward elimination with 2x2 block inversion,
/// then back substitution. No pivoting across nodes.
///
/// On sign-certified systems the pivot blocks are rebuilt from their row
/// excesses (the GTH trick), which keeps full relative accuracy when the
/// diffusion rows are many orders of magnitude larger than the reaction
/// terms. Other systems use the plain recurrence.
pub fn solve(sys: &DiscreteSystem) -> Result<SolutionGrid> {
    let n = sys.n_nodes();
    if n < 2 {
        return Err(Error::Mismatch("system has fewer than two nodes".into()));
    }
    let y = match sign_certified(sys) {
        Some(sums) => thomas_excess(sys, sums)?,
        None => thomas_plain(sys)?,
    };
    Ok(SolutionGrid::from_pairs(sys, y))
}

/// The textbook recurrence, used for systems without the M-matrix sign
/// pattern.
pub fn solve_plain(sys: &DiscreteSystem) -> Result<SolutionGrid> {
    if sys.n_nodes() < 2 {
        return Err(Error::Mismatch("system has fewer than two nodes".into()));
    }
    Ok(SolutionGrid::from_pairs(sys, thomas_plain(sys)?))
}

fn back_substitute(c: &[Block], mut y: Vec<Pair>) -> Vec<Pair> {
    for i in (0..y.len() - 1).rev() {
        let next = y[i + 1];
        y[i] -= c[i] * next;
    }
    y
}

fn thomas_plain(sys: &DiscreteSystem) -> Result<Vec<Pair>> {
    let n = sys.n_nodes();
    // c[i] = M_i^-1 U_i, g[i] = M_i^-1 (r_i - L_i g[i-1])
    let mut c = vec![Block::zeros(); n];
    let mut g = vec![Pair::zeros(); n];

    let inv = invert_pivot(&sys.diag[0], 0)?;
    c[0] = inv * sys.upper[0];
    g[0] = inv * sys.rhs[0];
    for i in 1..n {
        let m = sys.diag[i] - sys.lower[i] * c[i - 1];
        let inv = invert_pivot(&m, i)?;
        c[i] = inv * sys.upper[i];
        g[i] = inv * (sys.rhs[i] - sys.lower[i] * g[i - 1]);
    }
    Ok(back_substitute(&c, g))
}

fn thomas_excess(sys: &DiscreteSystem, sums: &[Pair]) -> Result<Vec<Pair>> {
    let n = sys.n_nodes();
    let mut c = vec![Block::zeros(); n];
    let mut g = vec![Pair::zeros(); n];
    // w = M_{i-1}^-1 e_{i-1}, with e the row excess of the reduced block row
    let mut w = Pair::zeros();
    for i in 0..n {
        let (l, u) = (&sys.lower[i], &sys.upper[i]);
        let (mut off, mut excess) = ([sys.diag[i][(0, 1)], sys.diag[i][(1, 0)]], sums[i]);
        let mut r = sys.rhs[i];
        if i > 0 {
            // L c >= 0 entrywise, so these only add magnitude
            let lc = l * c[i - 1];
            off[0] -= lc[(0, 1)];
            off[1] -= lc[(1, 0)];
            excess -= l * w;
            r -= l * g[i - 1];
        }
        let u_abs = Pair::new(-(u[(0, 0)] + u[(0, 1)]), -(u[(1, 0)] + u[(1, 1)]));
        let inv = invert_m_pivot(off, excess + u_abs, i)?;
        c[i] = inv * u;
        g[i] = inv * r;
        w = inv * excess;
    }
    Ok(back_substitute(&c, g))
}

/// Dense partial-pivoting LU solve of the same system; reference for tests.
pub fn solve_dense_reference(sys: &DiscreteSystem) -> Result<SolutionGrid> {
    let nodes = sys.n_nodes();
    if nodes - 1 > DENSE_MAX_N {
        return Err(Error::DenseSolve(format!(
            "N = {} exceeds the dense limit {DENSE_MAX_N}",
            nodes - 1
        )));
    }
    let dim = 2 * nodes;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DVector::<f64>::zeros(dim);
    let mut put = |i: usize, j: usize, blk: &Block| {
        for r in 0..2 {
            for s in 0..2 {
                a[(2 * i + r, 2 * j + s)] = blk[(r, s)];
            }
        }
    };
    for i in 0..nodes {
        put(i, i, &sys.diag[i]);
        if i > 0 {
            put(i, i - 1, &sys.lower[i]);
        }
        if i + 1 < nodes {
            put(i, i + 1, &sys.upper[i]);
        }
    }
    for i in 0..nodes {
        b[2 * i] = sys.rhs[i][0];
        b[2 * i + 1] = sys.rhs[i][1];
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::DenseSolve("matrix is singular".into()))?;
    let y = (0..nodes).map(|i| Pair::new(x[2 * i], x[2 * i + 1])).collect();
    Ok(SolutionGrid::from_pairs(sys, y))
}

/// Block solve, falling back to the dense pivoted solve on a singular pivot.
pub fn solve_or_dense(sys: &DiscreteSystem) -> Result<SolutionGrid> {
    match solve(sys) {
        Err(Error::SingularPivot { row, det }) => {
            debug!("singular block pivot at row {row} (det {det:e}); using dense solve");
            solve_dense_reference(sys)
        }
        other => other,
    }
}
