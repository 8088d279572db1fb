//! Command-line front end. [`run`] executes one command and returns the
//! rendered report and exit status; the `trizero` binary only does I/O.

use crate::error::{Error, Result};
use crate::format::{self, num, Report, Residual};
use crate::homological::{h_dimension, lb_matrix, numerical_rank, w_basis};
use crate::linear::{char_derivatives, identity_residual, pairing, psi_basis, OscillatorParams};
use crate::poly::format_poly;
use crate::realize::{realize_with, LAMBDA_TOLERANCE};
use crate::reduction::{reduce_with, FGSeries, NFSeries, ReductionOptions, CM_TOLERANCE};
use crate::verify::{compare_flows, project_center_with, simulate_dde, spectral_oracle, FlowOptions, History};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RESIDUAL: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 6;

#[derive(Debug, Clone, Parser)]
#[command(
    name = "trizero",
    version,
    about = "Normal forms of a delayed oscillator at its triple-zero point"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Write the report (or CSV) here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Override a residual bound, e.g. `--tol roundtrip=1e-6`.
    #[arg(long = "tol", value_name = "NAME=BOUND", global = true)]
    pub tolerances: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ParamsArg {
    /// Params file with `a` and `beta`.
    #[arg(long, short)]
    pub params: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FgArgs {
    /// File with `F = ...` and `G = ...` lines.
    #[arg(long, conflicts_with_all = ["f", "g"])]
    pub fg: Option<PathBuf>,
    /// Polynomial file for F.
    #[arg(long)]
    pub f: Option<PathBuf>,
    /// Polynomial file for G.
    #[arg(long)]
    pub g: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Locus parameters and characteristic-function checks.
    Locus(ParamsArg),
    /// Linear data: axis scan and the normalized adjoint basis.
    Verify(ParamsArg),
    /// Labeled basis of W_j.
    Wbasis {
        #[arg(long, short)]
        degree: usize,
    },
    /// Normal form of given nonlinearities.
    Reduce {
        #[command(flatten)]
        params: ParamsArg,
        #[command(flatten)]
        fg: FgArgs,
        #[arg(long, short = 'l')]
        order: usize,
    },
    /// Nonlinearities that produce a target normal form.
    Realize {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long, short)]
        target: PathBuf,
        #[arg(long, short = 'l')]
        order: usize,
        /// Also write F and G to this file.
        #[arg(long)]
        fg_out: Option<PathBuf>,
    },
    /// Realize, reduce again and compare.
    Roundtrip {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long, short)]
        target: PathBuf,
        #[arg(long, short = 'l')]
        order: usize,
    },
    /// Integrate the delay equation; CSV output.
    Simulate {
        #[command(flatten)]
        params: ParamsArg,
        #[command(flatten)]
        fg: FgArgs,
        /// Center coordinates of the initial function `Phi(theta) u0`.
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            conflicts_with = "constant"
        )]
        u0: Option<Vec<f64>>,
        /// Constant initial function `(x, y)`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        constant: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        /// Steps per delay interval.
        #[arg(long, short, default_value_t = 64)]
        n: usize,
        /// Add the center projection u1, u2, u3.
        #[arg(long)]
        project: bool,
    },
    /// Chebyshev collocation spectrum near zero; with a target, also the
    /// flow comparison of the realized equation.
    Oracle {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long, short, default_value_t = 24)]
        n: usize,
        #[arg(long, short)]
        target: Option<PathBuf>,
        /// Amplitudes for the flow comparison (ratio of consecutive errors).
        #[arg(long, value_delimiter = ',', default_values_t = [0.02, 0.01])]
        eps: Vec<f64>,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    /// Report or CSV text (empty when the command failed before producing one).
    pub output: String,
    /// Message for stderr.
    pub message: Option<String>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Validation(_) | Error::Io(_) => EXIT_PARSE,
        Error::Split { .. }
        | Error::CmResidual { .. }
        | Error::LambdaResidual { .. }
        | Error::Postcondition(_)
        | Error::LemmaPrecondition(_) => EXIT_RESIDUAL,
        _ => EXIT_INTERNAL,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn load_params(arg: &ParamsArg, report: &mut Report) -> Result<OscillatorParams> {
    let (a, beta) = with_path(&arg.params, format::parse_params_raw(&read(&arg.params)?))?;
    report.input("params", arg.params.display().to_string());
    report.input("a", num(a));
    report.input("beta", num(beta));
    crate::linear::locus(a, beta)
}

fn load_fg(args: &FgArgs, report: &mut Report) -> Result<FGSeries> {
    if let Some(path) = &args.fg {
        report.input("fg", path.display().to_string());
        return with_path(path, format::parse_fg(&read(path)?));
    }
    let mut half = |p: &Option<PathBuf>, key: &str| -> Result<FGSeries> {
        match p {
            Some(path) => {
                report.input(key, path.display().to_string());
                with_path(path, format::parse_poly_file(&read(path)?))
            }
            None => Ok(FGSeries::zero(2)),
        }
    };
    let f = half(&args.f, "f")?;
    let g = half(&args.g, "g")?;
    Ok(format::combine_fg(&f, &g))
}

fn check_order(order: usize) -> Result<()> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::Validation(format!(
            "order {order} outside {MIN_ORDER}..={MAX_ORDER}"
        )));
    }
    Ok(())
}

fn load_target(path: &Path, order: usize, report: &mut Report) -> Result<NFSeries> {
    report.input("target", path.display().to_string());
    let nf = with_path(path, format::parse_nf(&read(path)?, Some(order)))?;
    for line in format::nf_lines(&nf).lines().filter(|l| !l.starts_with('#')) {
        let (k, v) = line.split_once(" = ").expect("nf line");
        report.input(k, v);
    }
    Ok(nf)
}

fn derive_params(report: &mut Report, p: &OscillatorParams) {
    report.derived("tau0", p.tau0);
    report.derived("b", p.b);
    report.derived("alpha", p.alpha);
    report.derived("kappa1", p.kappa1);
    report.derived("kappa2", p.kappa2);
}

fn parse_overrides(list: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in list {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("tolerance override '{item}' must be NAME=BOUND")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Validation(format!("bad bound in '{item}'")))?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Validation(format!("tolerance '{item}' must be positive")));
        }
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn nf_result(report: &mut Report, nf: &NFSeries) {
    for line in format::nf_lines(nf).lines() {
        report.line(line);
    }
}

fn locus_cmd(arg: &ParamsArg, report: &mut Report) -> Result<()> {
    let p = load_params(arg, report)?;
    derive_params(report, &p);
    let t = crate::linear::taylor_at_zero(&p);
    report.derived("p3", t[3]);
    report.line(format!("tau0 = {}", num(p.tau0)));
    report.line(format!("b = {}", num(p.b)));
    report.line(format!("alpha = {}", num(p.alpha)));
    report.line(format!("kappa1 = {}", num(p.kappa1)));
    report.line(format!("kappa2 = {}", num(p.kappa2)));
    report.check(Residual::at_most("p0", t[0].abs(), 1e-12));
    report.check(Residual::at_most("p1", t[1].abs(), 1e-12));
    report.check(Residual::at_most("p2", t[2].abs(), 1e-12));
    let cubic = p.tau0 * p.tau0 * (p.a * p.tau0 - 3.0 * p.beta);
    report.check(Residual::at_most("p3_closed_form", (t[3] - cubic).abs(), 1e-10));
    report.check(Residual::at_most(
        "kappa2_identity",
        (p.kappa2 * t[3] - 6.0).abs(),
        1e-9,
    ));
    Ok(())
}

fn verify_cmd(arg: &ParamsArg, report: &mut Report) -> Result<()> {
    let p = load_params(arg, report)?;
    derive_params(report, &p);
    let ch = char_derivatives(&p)?;
    report.derived("axis_scan_start", ch.scan_start);
    report.derived("axis_scan_bound", ch.scan_bound);
    report.derived("axis_margin_omega", ch.margin_omega);
    let basis = psi_basis(&p)?;
    for (r, row) in basis.psi0.iter().enumerate() {
        report.line(format!("psi0[{r}] = {} {}", num(row[0]), num(row[1])));
    }
    let m = pairing(&basis.psi, &basis.phi, &p);
    report.check(Residual::at_least("axis_margin", ch.axis_margin, 1e-6));
    report.check(Residual::at_most("pairing_identity", identity_residual(&m), 1e-10));
    report.check(Residual::at_most(
        "psi0_kappa1",
        (basis.psi0[1][1] - p.kappa1).abs(),
        1e-10,
    ));
    report.check(Residual::at_most(
        "psi0_kappa2",
        (basis.psi0[2][1] - p.kappa2).abs(),
        1e-10,
    ));
    Ok(())
}

fn wbasis_cmd(j: usize, report: &mut Report) -> Result<()> {
    if !(2..=12).contains(&j) {
        return Err(Error::Validation(format!("degree {j} outside 2..=12")));
    }
    report.input("degree", j.to_string());
    let basis = w_basis(j);
    let rank = numerical_rank(&lb_matrix(j));
    report.derived_text("dimension", basis.len().to_string());
    report.derived_text("range_rank", rank.to_string());
    report.derived_text("space_dimension", h_dimension(j).to_string());
    for l in &basis.labels {
        let mono = crate::poly::HomoPoly::monomial(3, l.exponents(), 1.0);
        report.line(format!("{l} = (0, 0, {})", format_poly(&mono, "u")));
    }
    let deficit = (rank + basis.len()) as f64 - h_dimension(j) as f64;
    report.check(Residual::at_most("complement_dimension", deficit.abs(), 0.0));
    Ok(())
}

fn reduce_cmd(params: &ParamsArg, fg: &FgArgs, order: usize, report: &mut Report) -> Result<()> {
    check_order(order)?;
    let p = load_params(params, report)?;
    let fg = load_fg(fg, report)?;
    report.input("order", order.to_string());
    derive_params(report, &p);
    let basis = psi_basis(&p)?;
    let (nf, trace) = reduce_with(&fg, &p, &basis, order, &ReductionOptions::default())?;
    for o in &trace.orders {
        report.derived_text(&format!("theta_degree_{}", o.degree), o.u2.theta_degree().to_string());
    }
    nf_result(report, &nf);
    report.check(Residual::at_most(
        "center_manifold",
        trace.max_cm_residual(),
        CM_TOLERANCE,
    ));
    report.check(Residual::at_most(
        "split",
        trace.max_split_residual(),
        crate::homological::SPLIT_TOLERANCE,
    ));
    Ok(())
}

fn realize_common(
    params: &ParamsArg,
    target: &Path,
    order: usize,
    report: &mut Report,
    fg_out: Option<&Path>,
) -> Result<()> {
    check_order(order)?;
    let p = load_params(params, report)?;
    let target = load_target(target, order, report)?;
    report.input("order", order.to_string());
    derive_params(report, &p);
    let basis = psi_basis(&p)?;
    let opts = ReductionOptions::default();
    let real = realize_with(&target, &p, &basis, &opts)?;
    for o in &real.orders {
        report.derived(&format!("correction_{}", o.degree), o.correction);
    }
    report.line(format!("F = {}", format::format_series_half(&real.fg, true)));
    report.line(format!("G = {}", format::format_series_half(&real.fg, false)));
    let (nf, trace) = reduce_with(&real.fg, &p, &basis, order, &opts)?;
    if fg_out.is_none() {
        report.line("[reduced]");
        nf_result(report, &nf);
    }
    for o in &real.orders {
        let scale = target.coeffs(o.degree).iter().fold(1.0f64, |m, c| m.max(c.abs()));
        report.check(Residual::at_most(
            format!("order_{}", o.degree),
            o.residual,
            LAMBDA_TOLERANCE * scale,
        ));
    }
    report.check(Residual::at_most(
        "center_manifold",
        trace.max_cm_residual(),
        CM_TOLERANCE,
    ));
    report.check(Residual::at_most("roundtrip", nf.max_abs_diff(&target), 1e-8));
    if let Some(path) = fg_out {
        std::fs::write(path, format::write_fg(&real.fg)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate_cmd(
    params: &ParamsArg,
    fg: &FgArgs,
    u0: Option<&[f64]>,
    constant: Option<&[f64]>,
    t_end: f64,
    n: usize,
    project: bool,
) -> Result<String> {
    let mut scratch = Report::new("simulate");
    let p = load_params(params, &mut scratch)?;
    let fg = load_fg(fg, &mut scratch)?;
    if u0.is_some_and(|u| u.len() != 3) || constant.is_some_and(|c| c.len() != 2) {
        return Err(Error::Validation("--u0 takes 3 values and --constant takes 2".into()));
    }
    if project && n % 2 == 1 {
        return Err(Error::Validation(format!(
            "projection needs an even step count, got {n}"
        )));
    }
    let traj = match constant {
        Some(c) => {
            let (x, y) = (c[0], c[1]);
            let h = move |_: f64| [x, y];
            simulate_dde(&p, &fg, &History::Function(&h), t_end, n)?
        }
        None => {
            let u = u0.map(|u| [u[0], u[1], u[2]]).unwrap_or([0.0; 3]);
            let h = move |th: f64| [u[0] + th * u[1] + 0.5 * th * th * u[2], u[1] + th * u[2]];
            simulate_dde(&p, &fg, &History::Function(&h), t_end, n)?
        }
    };
    let proj = if project {
        Some(project_center_with(&traj, &p, &psi_basis(&p)?)?)
    } else {
        None
    };
    Ok(format::write_trajectory(&traj, proj.as_deref()))
}

fn oracle_cmd(params: &ParamsArg, n: usize, target: Option<&Path>, eps: &[f64], report: &mut Report) -> Result<()> {
    let p = load_params(params, report)?;
    report.input("n", n.to_string());
    derive_params(report, &p);
    let o = spectral_oracle(&p, n)?;
    report.derived("gap", o.gap);
    report.derived("index_two_ratio", o.index_two_ratio);
    report.line("# k re im modulus (collocation, nearest first)");
    for (k, z) in o.eigenvalues.iter().take(12).enumerate() {
        report.line(format!("eig[{k}] = {} {} {}", num(z.re), num(z.im), num(z.norm())));
    }
    for (k, z) in o.center_eigs.iter().enumerate() {
        report.line(format!("center[{k}] = {} {} {}", num(z.re), num(z.im), num(z.norm())));
    }
    report.check(Residual::at_most("center_modulus", o.max_center_modulus(), 1e-5));
    report.check(Residual::at_least("gap", o.gap, 0.1));
    report.check(Residual::at_most("nilpotency", o.nilpotency_residual, 1e-6));

    if let Some(path) = target {
        let nf = with_path(path, format::parse_nf(&read(path)?, None))?;
        report.input("target", path.display().to_string());
        if eps.len() < 2 || eps.iter().any(|e| !(*e > 0.0 && *e <= 0.05)) {
            return Err(Error::Validation("need at least two amplitudes in (0, 0.05]".into()));
        }
        let real = crate::realize::realize(&nf, &p)?;
        let opts = FlowOptions::default();
        let mut errors = Vec::new();
        for &e in eps {
            let c = compare_flows(&p, &real.fg, &nf, e, &opts)?;
            report.line(format!("flow_error[{}] = {}", num(e), num(c.error)));
            errors.push(c.error);
        }
        let expected = 2f64.powf(nf.max_degree() as f64 + 0.5);
        for (k, w) in errors.windows(2).enumerate() {
            let ratio = w[0] / w[1];
            let step = eps[k] / eps[k + 1];
            // rescale the threshold to the actual amplitude ratio
            let bound = 0.99 * step.powf(expected.log2());
            report.check(Residual::at_least(format!("flow_ratio_{k}"), ratio, bound));
        }
    }
    Ok(())
}

fn execute(cfg: &RunConfig) -> Result<(String, Report)> {
    let name = match &cfg.command {
        Command::Locus(_) => "locus",
        Command::Verify(_) => "verify",
        Command::Wbasis { .. } => "wbasis",
        Command::Reduce { .. } => "reduce",
        Command::Realize { .. } => "realize",
        Command::Roundtrip { .. } => "roundtrip",
        Command::Simulate { .. } => "simulate",
        Command::Oracle { .. } => "oracle",
    };
    let mut report = Report::new(name);
    match &cfg.command {
        Command::Locus(p) => locus_cmd(p, &mut report)?,
        Command::Verify(p) => verify_cmd(p, &mut report)?,
        Command::Wbasis { degree } => wbasis_cmd(*degree, &mut report)?,
        Command::Reduce { params, fg, order } => reduce_cmd(params, fg, *order, &mut report)?,
        Command::Realize {
            params,
            target,
            order,
            fg_out,
        } => realize_common(params, target, *order, &mut report, Some(fg_out.as_deref()).flatten())?,
        Command::Roundtrip { params, target, order } => realize_common(params, target, *order, &mut report, None)?,
        Command::Simulate {
            params,
            fg,
            u0,
            constant,
            t_end,
            n,
            project,
        } => {
            let csv = simulate_cmd(params, fg, u0.as_deref(), constant.as_deref(), *t_end, *n, *project)?;
            return Ok((csv, report));
        }
        Command::Oracle { params, n, target, eps } => oracle_cmd(params, *n, target.as_deref(), eps, &mut report)?,
    }
    let overrides = parse_overrides(&cfg.tolerances)?;
    for r in report.residuals.iter_mut() {
        if let Some(b) = overrides.get(&r.name) {
            r.bound = *b;
        }
    }
    Ok((report.render(), report))
}

pub fn run(cfg: &RunConfig) -> Outcome {
    if let Err(e) = parse_overrides(&cfg.tolerances) {
        return Outcome {
            code: EXIT_PARSE,
            output: String::new(),
            message: Some(e.to_string()),
        };
    }
    match execute(cfg) {
        Ok((output, report)) => {
            let failures = report.failures();
            if failures.is_empty() {
                Outcome {
                    code: EXIT_OK,
                    output,
                    message: None,
                }
            } else {
                let names: Vec<String> = failures
                    .iter()
                    .map(|r| format!("{} = {} (bound {})", r.name, num(r.value), num(r.bound)))
                    .collect();
                Outcome {
                    code: EXIT_RESIDUAL,
                    output,
                    message: Some(format!("residual check failed: {}", names.join(", "))),
                }
            }
        }
        Err(e) => Outcome {
            code: exit_code(&e),
            output: String::new(),
            message: Some(e.to_string()),
        },
    }
}

/// Parses arguments, runs, writes output; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = run(&cfg);
    if !outcome.output.is_empty() {
        match &cfg.output {
            Some(path) => {
                if let Err(e) = std::fs::write(path, &outcome.output) {
                    eprintln!("error: {}: {e}", path.display());
                    return EXIT_PARSE;
                }
            }
            None => print!("{}", outcome.output),
        }
    }
    if let Some(m) = &outcome.message {
        eprintln!("error: {m}");
    }
    outcome.code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(std::iter::once("trizero").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn wbasis_report() {
        let out = run(&cfg(&["wbasis", "--degree", "3"]));
        assert_eq!(out.code, EXIT_OK, "{:?}", out.message);
        assert!(out.output.contains("B[3,1] = (0, 0, 1.0*u1*u3^2)"));
        assert!(out.output.contains("dimension = 6"));
    }

    #[test]
    fn order_range() {
        assert!(check_order(2).is_ok() && check_order(6).is_ok());
        assert!(check_order(1).is_err() && check_order(7).is_err());
    }

    #[test]
    fn missing_file_is_input_error() {
        let out = run(&cfg(&["locus", "--params", "/nonexistent/params.txt"]));
        assert_eq!(out.code, EXIT_PARSE);
    }

    #[test]
    fn bad_override() {
        let out = run(&cfg(&["wbasis", "-d", "2", "--tol", "split"]));
        assert_eq!(out.code, EXIT_PARSE);
        let out = run(&cfg(&["wbasis", "-d", "2", "--tol", "complement_dimension=-1"]));
        assert_eq!(out.code, EXIT_PARSE);
    }
}
