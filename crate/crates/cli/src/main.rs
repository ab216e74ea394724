use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use robinlayer::error_lab::{default_eps_list, default_n_list, sci3, solve_on};
use robinlayer::mesh::bakhvalov_shishkin_strict;
use robinlayer::{
    assemble, builtin, generate, uniform_sweep, validate, ConvergenceReport, Mesh, MeshKind,
    MeshParams, MuRule, ProblemSpec, Quantities, SweepConfig,
};

const VALIDATE_SAMPLES: usize = 100_001;

#[derive(Parser, Debug)]
#[command(name = "robinlayer", version, about = "Layer-adapted finite differences for coupled reaction-diffusion systems with Robin conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance and report its error against the exact solution, if known.
    Solve(SolveArgs),
    /// Maximum errors against a pinned 5x refinement, one row per eps.
    TableE(SweepArgs),
    /// Two-mesh differences and the observed orders.
    TableRates(SweepArgs),
    /// Check the coupling-matrix assumptions and derive lambda.
    Validate(ProblemArgs),
    /// Write the mesh nodes and step sizes.
    MeshDump(SolveArgs),
    /// Write the assembled block-tridiagonal system.
    SystemDump(SolveArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MeshArg {
    S,
    Bs,
    Uniform,
}

impl From<MeshArg> for MeshKind {
    fn from(m: MeshArg) -> Self {
        match m {
            MeshArg::S => MeshKind::Shishkin,
            MeshArg::Bs => MeshKind::BakhvalovShishkin,
            MeshArg::Uniform => MeshKind::Uniform,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Md,
}

#[derive(Args, Debug)]
struct ProblemArgs {
    /// Built-in problem: example1, example2, constant_mms, poly_mms.
    #[arg(long, default_value = "example1")]
    problem: String,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long)]
    mu: Option<f64>,
}

#[derive(Args, Debug)]
struct MeshArgs {
    #[arg(long, value_enum, default_value = "s")]
    mesh: MeshArg,
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    /// Mesh lambda; derived from the coupling matrix when omitted.
    #[arg(long)]
    lambda: Option<f64>,
    /// Refuse Bakhvalov-Shishkin meshes whose transition clamp is active,
    /// and exit nonzero if any sweep cell fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file; relative paths resolve against the output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, env = "ROBINLAYER_OUTPUT_DIR", default_value = ".")]
    output_dir: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    mesh: MeshArgs,
    #[arg(long = "N", default_value_t = 64)]
    n: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value = "example1")]
    problem: String,
    #[command(flatten)]
    mesh: MeshArgs,
    /// One value, a comma list, or a doubling range such as 64..4096.
    #[arg(long = "N")]
    n: Option<String>,
    /// A comma list or a decade range such as 1e-3..1e-14.
    #[arg(long)]
    eps_list: Option<String>,
    /// Fixed mu values (comma list); default is the decade ladder mu = 1e-3 ... eps.
    #[arg(long)]
    mu: Option<String>,
    /// Worker threads for sweep cells; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Solve(a) => cmd_solve(&a),
        Command::TableE(a) => cmd_sweep(&a, Quantities::E_ONLY),
        Command::TableRates(a) => cmd_sweep(&a, Quantities::D_ONLY),
        Command::Validate(a) => cmd_validate(&a),
        Command::MeshDump(a) => cmd_mesh_dump(&a),
        Command::SystemDump(a) => cmd_system_dump(&a),
    }
}

fn problem_spec(p: &ProblemArgs) -> Result<ProblemSpec> {
    let mu = p.mu.unwrap_or(p.eps);
    Ok(builtin(&p.problem, p.eps, mu)?)
}

fn auto_lambda(problem: &str, given: Option<f64>) -> Result<f64> {
    if let Some(l) = given {
        return Ok(l);
    }
    let rep = validate(&builtin(problem, 1e-3, 1e-3)?, VALIDATE_SAMPLES)?;
    if !rep.is_valid() {
        bail!("problem `{problem}` fails the coupling-matrix checks; pass --lambda explicitly");
    }
    Ok(rep.mesh_lambda())
}

fn build_mesh(a: &SolveArgs, spec: &ProblemSpec) -> Result<Mesh> {
    let lambda = auto_lambda(&a.problem.problem, a.mesh.lambda)?;
    let params = MeshParams::new(a.n, a.mesh.sigma, lambda, spec.eps, spec.mu)?;
    let kind = MeshKind::from(a.mesh.mesh);
    let mesh = if a.mesh.strict && kind == MeshKind::BakhvalovShishkin {
        bakhvalov_shishkin_strict(&params)?
    } else {
        generate(kind, &params)?
    };
    Ok(mesh)
}

fn resolve_output(out: &OutputArgs, default_name: &str) -> PathBuf {
    let p = out
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_name));
    if p.is_absolute() {
        p
    } else {
        out.output_dir.join(p)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    let f = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn cmd_solve(a: &SolveArgs) -> Result<bool> {
    let spec = problem_spec(&a.problem)?;
    let mesh = build_mesh(a, &spec)?;
    let sol = solve_on(&spec, &mesh)?;
    let mut line = format!(
        "problem={} mesh={} N={} eps={:e} mu={:e} residual={:.3e}",
        spec.name,
        mesh.kind.short_name(),
        mesh.n(),
        spec.eps,
        spec.mu,
        sol.residual_inf
    );
    if let Some(exact) = &spec.exact {
        let err = mesh
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                (sol.y1[i] - exact[0](x))
                    .abs()
                    .max((sol.y2[i] - exact[1](x)).abs())
            })
            .fold(0.0, f64::max);
        line.push_str(&format!(" max_error={err:.3e}"));
    }
    if a.out.output.is_some() {
        let path = resolve_output(&a.out, "");
        let mut w = create(&path)?;
        sol.write_csv(&mut w)?;
        w.flush()?;
        line.push_str(&format!(" output={}", path.display()));
    }
    println!("{line}");
    Ok(true)
}

fn cmd_validate(a: &ProblemArgs) -> Result<bool> {
    let spec = problem_spec(a)?;
    let rep = validate(&spec, VALIDATE_SAMPLES)?;
    println!(
        "problem={} offdiag_ok={} min_row_sum={:.6} lambda_max={:.6} lambda_star={:.6} mesh_lambda={:.3} valid={}",
        spec.name,
        rep.offdiag_ok,
        rep.min_row_sum,
        rep.lambda_max,
        rep.lambda_star,
        rep.mesh_lambda(),
        rep.is_valid()
    );
    Ok(rep.is_valid())
}

fn cmd_mesh_dump(a: &SolveArgs) -> Result<bool> {
    let spec = problem_spec(&a.problem)?;
    let mesh = build_mesh(a, &spec)?;
    let name = format!("mesh_{}_N{}.csv", mesh.kind.short_name(), mesh.n());
    let path = resolve_output(&a.out, &name);
    let mut w = create(&path)?;
    mesh.write_csv(&mut w)?;
    w.flush()?;
    let fmt_t = |t: Option<f64>| t.map_or("-".to_string(), |v| format!("{v:.6e}"));
    println!(
        "mesh={} N={} tau_eps={} tau_mu={} output={}",
        mesh.kind.short_name(),
        mesh.n(),
        fmt_t(mesh.tau_eps()),
        fmt_t(mesh.tau_mu()),
        path.display()
    );
    Ok(true)
}

fn cmd_system_dump(a: &SolveArgs) -> Result<bool> {
    let spec = problem_spec(&a.problem)?;
    let mesh = build_mesh(a, &spec)?;
    let sys = assemble(&spec, &mesh)?;
    let name = format!("system_{}_{}_N{}.csv", spec.name, mesh.kind.short_name(), mesh.n());
    let path = resolve_output(&a.out, &name);
    let mut w = create(&path)?;
    sys.write_csv(&mut w)?;
    w.flush()?;
    println!(
        "problem={} mesh={} N={} max_row_sum={:.3e} output={}",
        spec.name,
        mesh.kind.short_name(),
        mesh.n(),
        sys.max_abs_row_sum(),
        path.display()
    );
    Ok(true)
}

fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    let list = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
        if a == 0 || a > b {
            bail!("bad N range `{s}`");
        }
        std::iter::successors(Some(a), |&n| Some(n * 2))
            .take_while(|&n| n <= b)
            .collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if let Some(n) = list.iter().find(|&&n| n < 8 || n % 8 != 0) {
        bail!("N must be a positive multiple of 8 (got {n})");
    }
    Ok(list)
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        bail!("values must be positive: `{s}`");
    }
    Ok(v)
}

fn parse_eps_list(s: &str) -> Result<Vec<f64>> {
    let Some((a, b)) = s.split_once("..") else {
        return parse_f64_list(s);
    };
    let exp = |t: &str| -> Result<u32> {
        let v: f64 = t.trim().parse()?;
        let j = -v.log10().round();
        if !(v > 0.0 && v <= 1.0) || (10f64.powf(-j) - v).abs() > 1e-9 * v {
            bail!("decade range endpoints must be powers of ten <= 1 (got `{t}`)");
        }
        Ok(j as u32)
    };
    let (ja, jb) = (exp(a)?, exp(b)?);
    if ja > jb {
        bail!("decade range must run from large to small: `{s}`");
    }
    Ok((ja..=jb).map(robinlayer::error_lab::pow10_neg).collect())
}

fn clamp_failures(cfg: &SweepConfig) -> Result<Vec<String>> {
    let mut out = Vec::new();
    if cfg.kind != MeshKind::BakhvalovShishkin {
        return Ok(out);
    }
    for &eps in &cfg.eps_list {
        for mu in cfg.mu_rule.mus(eps) {
            for &n in &cfg.n_list {
                let p = MeshParams::new(n, cfg.sigma, cfg.lambda, eps, mu)?;
                if let Some(d) = p.bs_clamp_active() {
                    out.push(format!("eps={eps:e} mu={mu:e} N={n}: {d}"));
                }
            }
        }
    }
    Ok(out)
}

fn cmd_sweep(a: &SweepArgs, q: Quantities) -> Result<bool> {
    if let Some(t) = a.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring worker pool")?;
    }
    builtin(&a.problem, 1e-3, 1e-3)?;
    let cfg = SweepConfig {
        n_list: a.n.as_deref().map_or_else(|| Ok(default_n_list()), parse_n_list)?,
        eps_list: a
            .eps_list
            .as_deref()
            .map_or_else(|| Ok(default_eps_list()), parse_eps_list)?,
        mu_rule: match &a.mu {
            Some(s) => MuRule::Fixed(parse_f64_list(s)?),
            None => MuRule::Ladder,
        },
        kind: a.mesh.mesh.into(),
        sigma: a.mesh.sigma,
        lambda: auto_lambda(&a.problem, a.mesh.lambda)?,
        quantities: q,
    };
    if q.d && cfg.n_list.len() < 2 {
        bail!("rates need at least two N values");
    }
    let problem = a.problem.clone();
    let report = uniform_sweep(&problem, |e, m| builtin(&problem, e, m), &cfg)?;

    let ext = match a.out.format {
        Format::Csv => "csv",
        Format::Md => "md",
    };
    let which = if q.e { "E" } else { "rates" };
    let name = format!(
        "{}_{}_{}.{}",
        report.problem,
        report.mesh_kind.short_name(),
        which,
        ext
    );
    let path = resolve_output(&a.out, &name);
    let mut w = create(&path)?;
    write_report(&report, q, a.out.format, &mut w)?;
    w.flush()?;

    let mut failures: Vec<String> = report
        .missing
        .iter()
        .map(|m| format!("eps={:e} mu={:e} N={}: {}", m.eps, m.mu, m.n, m.reason))
        .collect();
    if a.mesh.strict {
        failures.extend(clamp_failures(&cfg)?);
    }
    for f in &failures {
        eprintln!("cell failed: {f}");
    }

    let mut line = format!(
        "problem={} mesh={} sigma={} lambda={} N={}..{} eps_rows={}",
        report.problem,
        report.mesh_kind.short_name(),
        report.sigma,
        report.lambda,
        report.n_list[0],
        report.n_list[report.n_list.len() - 1],
        report.eps_list.len()
    );
    if q.e {
        if let Some(Some(e)) = report.e_uniform.last() {
            line.push_str(&format!(" E_last={}", sci3(*e)));
        }
    }
    if q.d {
        let p_last = report.p_values.iter().rev().flatten().next();
        if let Some(p) = p_last {
            line.push_str(&format!(" p_last={p:.3}"));
        }
        match report.p_star {
            Some(p) => line.push_str(&format!(" p*={p:.3}")),
            None => line.push_str(" p*=-"),
        }
    }
    line.push_str(&format!(" missing={} output={}", failures.len(), path.display()));
    println!("{line}");
    Ok(!(a.mesh.strict && !failures.is_empty()))
}

fn write_report<W: Write>(r: &ConvergenceReport, q: Quantities, f: Format, w: &mut W) -> Result<()> {
    match (f, q.e) {
        (Format::Csv, true) => r.write_e_csv(w)?,
        (Format::Csv, false) => r.write_rates_csv(w)?,
        (Format::Md, true) => w.write_all(r.e_markdown().as_bytes())?,
        (Format::Md, false) => w.write_all(r.rates_markdown().as_bytes())?,
    }
    Ok(())
}
