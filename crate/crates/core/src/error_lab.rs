//! Error estimation without a closed-form solution.
//!
//! * `E^N_{eps,mu} = max |Y^N - Y^{5N}|` over the coarse nodes, where the
//!   fine mesh keeps the coarse transition points.
//! * `D^N_{eps,mu} = max |Y^N - I Y^{2N}|` with `I` piecewise-linear
//!   interpolation of the doubled-mesh solution.
//! * `E^N_eps` and `D^N` are maxima over a parameter grid, and
//!   `p^N = log2(D^N / D^{2N})`, `p* = min_N p^N`.

use std::fmt::Write as _;
use std::io::Write;

use log::warn;
use rayon::prelude::*;

use crate::discretize::assemble;
use crate::error::{Error, Result};
use crate::linsolve::{solve_or_dense, SolutionGrid};
use crate::mesh::{generate, refine_pinned, Mesh, MeshKind, MeshParams};
use crate::problem::ProblemSpec;

/// Refinement factor of the reference solution for `E`.
pub const FINE_FACTOR: usize = 5;

/// Piecewise-linear interpolant of both components at `x`.
pub fn interp_linear(sol: &SolutionGrid, x: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain(x));
    }
    let nodes = sol.mesh.nodes();
    // first node strictly greater than x
    let j = nodes.partition_point(|&t| t <= x);
    if j == 0 {
        return Ok((sol.y1[0], sol.y2[0]));
    }
    let i = j - 1;
    if nodes[i] == x || j == nodes.len() {
        return Ok((sol.y1[i], sol.y2[i]));
    }
    let w = (x - nodes[i]) / (nodes[j] - nodes[i]);
    let lerp = |v: &[f64]| v[i] + w * (v[j] - v[i]);
    Ok((lerp(&sol.y1), lerp(&sol.y2)))
}

/// Interpolates on one half of a symmetric mesh at boundary distance `t`.
/// `right` reads the values at `N - j` for the mirrored node `j`.
fn interp_half(sol: &SolutionGrid, t: f64, right: bool) -> (f64, f64) {
    let n = sol.mesh.n();
    let nodes = &sol.mesh.nodes()[..=n / 2];
    let at = |j: usize| {
        let k = if right { n - j } else { j };
        (sol.y1[k], sol.y2[k])
    };
    let j = nodes.partition_point(|&s| s <= t);
    if j == 0 {
        return at(0);
    }
    let i = j - 1;
    if nodes[i] == t || j == nodes.len() {
        return at(i);
    }
    let w = (t - nodes[i]) / (nodes[j] - nodes[i]);
    let (a, b) = (at(i), at(j));
    (a.0 + w * (b.0 - a.0), a.1 + w * (b.1 - a.1))
}

/// `max_i max_k |coarse_k(x_i) - I fine_k(x_i)|` over the coarse nodes.
///
/// On symmetric meshes the right half is located through `1 - x`, so nodes
/// that collapse onto each other near `x = 1` in floating point still
/// match their counterparts.
pub fn max_difference_at_nodes(coarse: &SolutionGrid, fine: &SolutionGrid) -> Result<f64> {
    let symmetric = coarse.mesh.is_symmetric() && fine.mesh.is_symmetric();
    let n = coarse.mesh.n();
    let mut out = 0.0_f64;
    for i in 0..=n {
        let (a, b) = if symmetric {
            interp_half(fine, coarse.mesh.boundary_distance(i), i > n / 2)
        } else {
            interp_linear(fine, coarse.mesh.x(i))?
        };
        out = out.max((coarse.y1[i] - a).abs()).max((coarse.y2[i] - b).abs());
    }
    Ok(out)
}

/// One `E` or `D` entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorCell {
    pub eps: f64,
    pub mu: f64,
    pub n: usize,
    pub value: f64,
}

pub fn solve_on(spec: &ProblemSpec, mesh: &Mesh) -> Result<SolutionGrid> {
    solve_or_dense(&assemble(spec, mesh)?)
}

fn cell(spec: &ProblemSpec, params: &MeshParams, value: f64) -> Result<ErrorCell> {
    if !value.is_finite() {
        return Err(Error::Parameter(format!(
            "non-finite error value at eps = {}, mu = {}, N = {}",
            spec.eps, spec.mu, params.n
        )));
    }
    Ok(ErrorCell {
        eps: spec.eps,
        mu: spec.mu,
        n: params.n,
        value,
    })
}

fn coarse_and_refined(
    spec: &ProblemSpec,
    params: &MeshParams,
    kind: MeshKind,
    factor: usize,
) -> Result<(SolutionGrid, SolutionGrid)> {
    let coarse_mesh = generate(kind, params)?;
    let fine_mesh = refine_pinned(&coarse_mesh, factor)?;
    Ok((solve_on(spec, &coarse_mesh)?, solve_on(spec, &fine_mesh)?))
}

/// `E^N_{eps,mu}` against the pinned `5N` solution.
pub fn error_vs_fine(spec: &ProblemSpec, params: &MeshParams, kind: MeshKind) -> Result<ErrorCell> {
    let (coarse, fine) = coarse_and_refined(spec, params, kind, FINE_FACTOR)?;
    cell(spec, params, max_difference_at_nodes(&coarse, &fine)?)
}

/// `D^N_{eps,mu}` against the interpolated pinned `2N` solution.
pub fn two_mesh_difference(
    spec: &ProblemSpec,
    params: &MeshParams,
    kind: MeshKind,
) -> Result<ErrorCell> {
    let (coarse, fine) = coarse_and_refined(spec, params, kind, 2)?;
    cell(spec, params, max_difference_at_nodes(&coarse, &fine)?)
}

/// Both quantities for one `(eps, mu, N)`, sharing the coarse solve.
fn both_cells(
    spec: &ProblemSpec,
    params: &MeshParams,
    kind: MeshKind,
    want: Quantities,
) -> Result<(Option<f64>, Option<f64>)> {
    let coarse_mesh = generate(kind, params)?;
    let coarse = solve_on(spec, &coarse_mesh)?;
    let against = |factor: usize| -> Result<f64> {
        let fine = solve_on(spec, &refine_pinned(&coarse_mesh, factor)?)?;
        let v = max_difference_at_nodes(&coarse, &fine)?;
        cell(spec, params, v).map(|c| c.value)
    };
    let e = want.e.then(|| against(FINE_FACTOR)).transpose()?;
    let d = want.d.then(|| against(2)).transpose()?;
    Ok((e, d))
}

/// Which `mu` values accompany each `eps` in a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum MuRule {
    /// `mu` in `{10^-3, 10^-4, ...}` down to `eps`; `mu = eps` when
    /// `eps > 10^-3`.
    Ladder,
    /// `mu = eps`.
    Equal,
    /// A fixed list, filtered to `mu >= eps`.
    Fixed(Vec<f64>),
}

/// `10^-j` from its decimal literal, so equal exponents compare equal.
pub fn pow10_neg(j: u32) -> f64 {
    format!("1e-{j}").parse().expect("valid float literal")
}

impl MuRule {
    pub fn mus(&self, eps: f64) -> Vec<f64> {
        match self {
            MuRule::Ladder => {
                let v: Vec<f64> = (3..=20)
                    .map(pow10_neg)
                    .take_while(|&mu| mu >= eps)
                    .collect();
                if v.is_empty() {
                    vec![eps]
                } else {
                    v
                }
            }
            MuRule::Equal => vec![eps],
            MuRule::Fixed(list) => list.iter().copied().filter(|&mu| mu >= eps).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quantities {
    pub e: bool,
    pub d: bool,
}

impl Quantities {
    pub const BOTH: Quantities = Quantities { e: true, d: true };
    pub const E_ONLY: Quantities = Quantities { e: true, d: false };
    pub const D_ONLY: Quantities = Quantities { e: false, d: true };
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub eps_list: Vec<f64>,
    pub mu_rule: MuRule,
    pub kind: MeshKind,
    pub sigma: f64,
    pub lambda: f64,
    pub quantities: Quantities,
}

/// `10^-3 .. 10^-14`.
pub fn default_eps_list() -> Vec<f64> {
    (3..=14).map(pow10_neg).collect()
}

/// `2^6 .. 2^12`.
pub fn default_n_list() -> Vec<usize> {
    (6..=12).map(|k| 1usize << k).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingCell {
    pub eps: f64,
    pub mu: f64,
    pub n: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub problem: String,
    pub mesh_kind: MeshKind,
    pub sigma: f64,
    pub lambda: f64,
    pub n_list: Vec<usize>,
    pub eps_list: Vec<f64>,
    /// `e_table[row][col]` is `E^N_eps` for `eps_list[row]`, `n_list[col]`.
    pub e_table: Vec<Vec<Option<f64>>>,
    /// Column maxima `E^N`.
    pub e_uniform: Vec<Option<f64>>,
    /// `D^N` per column.
    pub d_values: Vec<Option<f64>>,
    /// `p^N` for every column but the last.
    pub p_values: Vec<Option<f64>>,
    pub p_star: Option<f64>,
    pub missing: Vec<MissingCell>,
}

fn max_present(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    values.into_iter().flatten().reduce(f64::max)
}

/// Observed order between consecutive columns, `log(D_a / D_b) / log(N_b / N_a)`;
/// equal to `log2(D^N / D^{2N})` for doubling.
pub fn rate(d_coarse: f64, d_fine: f64, n_coarse: usize, n_fine: usize) -> f64 {
    (d_coarse / d_fine).ln() / (n_fine as f64 / n_coarse as f64).ln()
}

/// Fills the `E` and `D` tables over the `(eps, mu, N)` grid.
///
/// Cells run in parallel; failing cells are logged, recorded in `missing`
/// and left out of every maximum.
pub fn uniform_sweep<F>(problem: &str, family: F, cfg: &SweepConfig) -> Result<ConvergenceReport>
where
    F: Fn(f64, f64) -> Result<ProblemSpec> + Sync,
{
    if cfg.n_list.is_empty() || cfg.eps_list.is_empty() {
        return Err(Error::Parameter("sweep needs nonempty N and eps lists".into()));
    }
    let tasks: Vec<(usize, usize, f64, f64)> = cfg
        .eps_list
        .iter()
        .enumerate()
        .flat_map(|(r, &eps)| {
            cfg.mu_rule
                .mus(eps)
                .into_iter()
                .flat_map(move |mu| (0..cfg.n_list.len()).map(move |c| (r, c, eps, mu)))
        })
        .collect();

    let results: Vec<Result<(Option<f64>, Option<f64>)>> = tasks
        .par_iter()
        .map(|&(_, c, eps, mu)| {
            let spec = family(eps, mu)?;
            let params = MeshParams::new(cfg.n_list[c], cfg.sigma, cfg.lambda, eps, mu)?;
            both_cells(&spec, &params, cfg.kind, cfg.quantities)
        })
        .collect();

    let rows = cfg.eps_list.len();
    let cols = cfg.n_list.len();
    let mut e_table = vec![vec![None; cols]; rows];
    let mut d_values: Vec<Option<f64>> = vec![None; cols];
    let mut missing = Vec::new();
    for (&(r, c, eps, mu), res) in tasks.iter().zip(results) {
        match res {
            Ok((e, d)) => {
                if let Some(e) = e {
                    e_table[r][c] = max_present([e_table[r][c], Some(e)]);
                }
                if let Some(d) = d {
                    d_values[c] = max_present([d_values[c], Some(d)]);
                }
            }
            Err(err) => {
                let n = cfg.n_list[c];
                warn!("cell eps={eps:e} mu={mu:e} N={n} failed: {err}");
                missing.push(MissingCell {
                    eps,
                    mu,
                    n,
                    reason: err.to_string(),
                });
            }
        }
    }
    let e_uniform = (0..cols)
        .map(|c| max_present(e_table.iter().map(|row| row[c])))
        .collect();
    let p_values: Vec<Option<f64>> = (0..cols.saturating_sub(1))
        .map(|c| match (d_values[c], d_values[c + 1]) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 => {
                Some(rate(a, b, cfg.n_list[c], cfg.n_list[c + 1]))
            }
            _ => None,
        })
        .collect();
    let p_star = p_values.iter().copied().flatten().reduce(f64::min);

    Ok(ConvergenceReport {
        problem: problem.to_string(),
        mesh_kind: cfg.kind,
        sigma: cfg.sigma,
        lambda: cfg.lambda,
        n_list: cfg.n_list.clone(),
        eps_list: cfg.eps_list.clone(),
        e_table,
        e_uniform,
        d_values,
        p_values,
        p_star,
        missing,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6e}")).unwrap_or_default()
}

/// `1.086e-02` style used in the markdown tables.
pub fn sci3(v: f64) -> String {
    let s = format!("{v:.3e}");
    match s.split_once('e') {
        Some((m, e)) => {
            let (sign, digits) = match e.strip_prefix('-') {
                Some(d) => ("-", d),
                None => ("+", e),
            };
            format!("{m}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

fn n_label(n: usize) -> String {
    if n.is_power_of_two() {
        format!("2^{}", n.trailing_zeros())
    } else {
        n.to_string()
    }
}

impl ConvergenceReport {
    /// Header `eps, N=64, ...`, one row per eps, last row `E^N`.
    pub fn write_e_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["eps".to_string()];
        header.extend(self.n_list.iter().map(|n| format!("N={n}")));
        wtr.write_record(&header)?;
        for (eps, row) in self.eps_list.iter().zip(&self.e_table) {
            let mut rec = vec![format!("{eps:e}")];
            rec.extend(row.iter().map(|&v| fmt_opt(v)));
            wtr.write_record(&rec)?;
        }
        let mut last = vec!["E^N".to_string()];
        last.extend(self.e_uniform.iter().map(|&v| fmt_opt(v)));
        wtr.write_record(&last)?;
        wtr.flush()?;
        Ok(())
    }

    /// Columns `N, D, p`; `p` is empty on the last row.
    pub fn write_rates_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["N", "D", "p"])?;
        for (c, n) in self.n_list.iter().enumerate() {
            wtr.write_record([
                n.to_string(),
                fmt_opt(self.d_values[c]),
                fmt_opt(self.p_values.get(c).copied().flatten()),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    fn md_header(&self, first: &str) -> String {
        let mut s = format!("| {first} |");
        for n in &self.n_list {
            let _ = write!(s, " {} |", n_label(*n));
        }
        s.push('\n');
        s.push_str("|---|");
        for _ in &self.n_list {
            s.push_str("---|");
        }
        s.push('\n');
        s
    }

    pub fn e_markdown(&self) -> String {
        let mut s = format!(
            "Errors E_eps^N, {} ({}, sigma = {}, lambda = {})\n\n",
            self.problem, self.mesh_kind, self.sigma, self.lambda
        );
        s.push_str(&self.md_header("eps / N"));
        let cell = |v: Option<f64>| v.map(sci3).unwrap_or_else(|| "-".into());
        for (eps, row) in self.eps_list.iter().zip(&self.e_table) {
            let _ = write!(s, "| {eps:e} |");
            for &v in row {
                let _ = write!(s, " {} |", cell(v));
            }
            s.push('\n');
        }
        s.push_str("| E^N |");
        for &v in &self.e_uniform {
            let _ = write!(s, " {} |", cell(v));
        }
        s.push('\n');
        s
    }

    pub fn rates_markdown(&self) -> String {
        let mut s = format!(
            "Rates of convergence, {} ({}, sigma = {}, lambda = {})\n\n",
            self.problem, self.mesh_kind, self.sigma, self.lambda
        );
        s.push_str(&self.md_header("N"));
        s.push_str("| D^N |");
        for &v in &self.d_values {
            let _ = write!(s, " {} |", v.map(sci3).unwrap_or_else(|| "-".into()));
        }
        s.push_str("\n| p^N |");
        for c in 0..self.n_list.len() {
            let p = self.p_values.get(c).copied().flatten();
            let _ = write!(s, " {} |", p.map(|p| format!("{p:.3}")).unwrap_or_default());
        }
        s.push('\n');
        if let Some(p) = self.p_star {
            let _ = writeln!(s, "\np* = {p:.3}");
        }
        s
    }
}

/// Layer envelopes `exp(-x lambda / p) + exp(-(1 - x) lambda / p)` for
/// `p = eps` and `p = mu` at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerPoint {
    pub x: f64,
    pub b_eps: f64,
    pub b_mu: f64,
}

pub fn layer_function(x: f64, lambda: f64, p: f64) -> f64 {
    (-x * lambda / p).exp() + (-(1.0 - x) * lambda / p).exp()
}

pub fn layer_diagnostics(sol: &SolutionGrid, spec: &ProblemSpec, lambda: f64) -> Vec<LayerPoint> {
    sol.mesh
        .nodes()
        .iter()
        .map(|&x| LayerPoint {
            x,
            b_eps: layer_function(x, lambda, spec.eps),
            b_mu: layer_function(x, lambda, spec.mu),
        })
        .collect()
}
