//! `visclimit`: command-line front end for the viscous-limit solvers.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure,
//! 3 parameter-region or precondition error.

mod config;

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use visclimit::eulerlim::{euler_profile, Sign};
use visclimit::field::{auto_levels, field_sample, streamlines, Bbox};
use visclimit::figures::{fig1_dataset, streamlines_svg};
use visclimit::layers::{layer_error, matched_csv, LayerSpec};
use visclimit::polyparams::{c3_star, classify, parse_decimal};
use visclimit::profile::{fmt17, SolutionProfile};
use visclimit::riccati::{closed_form_star, default_grid, Solver, SolverConfig};
use visclimit::vanish::{
    excluded_window, full_window, log_grid, nonconv_search, nonconv_search_lower, rate_sweep_with,
    Metric, Reference, SweepBranch, SweepOptions, Window, DEFAULT_EPS,
};
use visclimit::{Coeffs, Error};

use config::Settings;

#[derive(Parser, Debug)]
#[command(
    name = "visclimit",
    version,
    about = "Vanishing-viscosity limits of self-similar axisymmetric flows"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Regime of c and its convergence exponents
    Classify(Opts),
    /// Solve the reduced equation for one branch
    Solve(Opts),
    /// Inviscid limit profile ±sqrt(2 P_c)
    Limit(Opts),
    /// Matched transition-layer profile around x_k
    Layer(Opts),
    /// Convergence-rate sweep over a viscosity grid
    Rates(Opts),
    /// Search for non-convergent upper (or lower) solutions
    Nonconv(Opts),
    /// Velocity and pressure at a point, or streamlines as SVG
    Field(Opts),
    /// Write the worked-example dataset
    Fig1(Opts),
}

/// Flags shared by all subcommands. Values are kept as text so that the
/// config file and the command line go through the same parser.
#[derive(Args, Debug, Default, Clone)]
struct Opts {
    /// Parameters c1,c2,c3 (decimal literals)
    #[arg(long = "c", allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    /// upper | lower | star | interior | anchored
    #[arg(long)]
    branch: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    xk: Option<String>,
    /// Anchor abscissa (anchored branch)
    #[arg(long, allow_hyphen_values = true)]
    xa: Option<String>,
    /// Anchor value (anchored branch)
    #[arg(long, allow_hyphen_values = true)]
    ua: Option<String>,
    /// Layer constant
    #[arg(long = "K")]
    k: Option<String>,
    /// START:STOP:COUNT, log-spaced
    #[arg(long = "nu-grid")]
    nu_grid: Option<String>,
    /// A,B (repeat for a union of intervals)
    #[arg(long, allow_hyphen_values = true)]
    window: Vec<String>,
    /// supU | supH
    #[arg(long)]
    metric: Option<String>,
    /// plus | minus | glued (limit profiles)
    #[arg(long)]
    sign: Option<String>,
    /// Reference for `rates`: plus | minus | glued | layer
    #[arg(long)]
    reference: Option<String>,
    /// Window size for `nonconv`
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json | svg
    #[arg(long)]
    format: Option<String>,
    /// Flat key=value file mirroring the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) => 1,
            ref e if e.is_precondition() => 3,
            _ => 2,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        msg: msg.into(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::Classify(o) => cmd_classify(&Settings::load(o)?),
        Cmd::Solve(o) => cmd_solve(&Settings::load(o)?),
        Cmd::Limit(o) => cmd_limit(&Settings::load(o)?),
        Cmd::Layer(o) => cmd_layer(&Settings::load(o)?),
        Cmd::Rates(o) => cmd_rates(&Settings::load(o)?),
        Cmd::Nonconv(o) => cmd_nonconv(&Settings::load(o)?),
        Cmd::Field(o) => cmd_field(&Settings::load(o)?),
        Cmd::Fig1(o) => cmd_fig1(&Settings::load(o)?),
    }
}

impl Settings {
    fn coeffs(&self) -> CliResult<Coeffs> {
        let s = self
            .get("c")
            .ok_or_else(|| usage("--c c1,c2,c3 is required"))?;
        Ok(s.parse::<Coeffs>()?)
    }

    fn number(&self, key: &str) -> CliResult<Option<f64>> {
        self.get(key)
            .map(|s| parse_decimal(s).map_err(Failure::from))
            .transpose()
    }

    fn required(&self, key: &str) -> CliResult<f64> {
        self.number(key)?
            .ok_or_else(|| usage(format!("--{key} is required")))
    }

    fn nu_grid(&self, default: &str) -> CliResult<Vec<f64>> {
        let spec = self.get("nu-grid").unwrap_or(default);
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(usage(format!(
                "--nu-grid expects START:STOP:COUNT, got {spec:?}"
            )));
        }
        let count: usize = parts[2]
            .parse()
            .map_err(|_| usage(format!("bad count in --nu-grid: {:?}", parts[2])))?;
        Ok(log_grid(
            parse_decimal(parts[0])?,
            parse_decimal(parts[1])?,
            count,
        )?)
    }

    fn windows(&self) -> CliResult<Option<Window>> {
        if self.windows.is_empty() {
            return Ok(None);
        }
        self.windows
            .iter()
            .map(|w| {
                let (a, b) = w
                    .split_once(',')
                    .ok_or_else(|| usage(format!("--window expects A,B, got {w:?}")))?;
                Ok((parse_decimal(a)?, parse_decimal(b)?))
            })
            .collect::<CliResult<Window>>()
            .map(Some)
    }

    fn format(&self, default: &str) -> CliResult<String> {
        let f = self.get("format").unwrap_or(default).to_string();
        match f.as_str() {
            "csv" | "json" | "svg" => Ok(f),
            _ => Err(usage(format!(
                "--format must be csv, json or svg, got {f:?}"
            ))),
        }
    }

    fn solver(&self) -> CliResult<Solver> {
        Ok(Solver::new(SolverConfig {
            layer_k: self.number("K")?,
            ..SolverConfig::default()
        }))
    }
}

/// Write to `--out` if given, else stdout.
fn emit(s: &Settings, body: &str) -> CliResult<()> {
    match s.out() {
        Some(path) => fs::write(path, body).map_err(|e| Error::from(e).into()),
        None => write_stdout(body),
    }
}

/// Print to stdout; a closed pipe (`| head`) is not an error.
fn write_stdout(body: &str) -> CliResult<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(body.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::from(e).into()),
        _ => Ok(()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v).map_err(Error::from)? + "\n")
}

fn cmd_classify(s: &Settings) -> CliResult<()> {
    let regime = classify(&s.coeffs()?)?;
    emit(s, &to_json(&regime)?)
}

fn solve_profile(s: &Settings) -> CliResult<SolutionProfile> {
    let c = s.coeffs()?;
    let nu = s.required("nu")?;
    let solver = s.solver()?;
    let grid = default_grid();
    let branch = s.get("branch").unwrap_or("upper");
    let p = match branch {
        "upper" => solver.solve_upper(nu, &c, &grid)?,
        "lower" => solver.solve_lower(nu, &c, &grid)?,
        "star" => closed_form_star(nu, c.c1, c.c2, &grid)?,
        "interior" => solver.solve_interior(nu, &c, s.required("xk")?, &grid)?,
        "anchored" => solver.solve_anchored(nu, &c, s.required("xa")?, s.required("ua")?, &grid)?,
        other => {
            return Err(usage(format!(
                "--branch must be upper, lower, star, interior or anchored, got {other:?}"
            )))
        }
    };
    Ok(p)
}

fn cmd_solve(s: &Settings) -> CliResult<()> {
    let p = solve_profile(s)?;
    match s.format("csv")?.as_str() {
        "csv" => emit(s, &p.to_csv()),
        "json" => emit(s, &(p.to_json()? + "\n")),
        _ => {
            let series = [(
                "U",
                "black",
                p.grid
                    .iter()
                    .copied()
                    .zip(p.values.iter().copied())
                    .collect(),
            )];
            let m = p.max_abs().max(1e-12) * 1.1;
            emit(
                s,
                &visclimit::figures::svg_plot("U(x)", &series, (-1.0, 1.0), (-m, m)),
            )
        }
    }
}

fn limit_sign(s: &Settings) -> CliResult<Sign> {
    match s.get("sign").unwrap_or("plus") {
        "plus" => Ok(Sign::Plus),
        "minus" => Ok(Sign::Minus),
        "glued" => Ok(Sign::GluedAt(s.required("xk")?)),
        other => Err(usage(format!(
            "--sign must be plus, minus or glued, got {other:?}"
        ))),
    }
}

fn cmd_limit(s: &Settings) -> CliResult<()> {
    let c = s.coeffs()?;
    let e = euler_profile(&c, limit_sign(s)?, &default_grid())?;
    match s.format("csv")?.as_str() {
        "json" => emit(s, &to_json(&e)?),
        _ => emit(s, &e.to_csv()),
    }
}

fn cmd_layer(s: &Settings) -> CliResult<()> {
    let c = s.coeffs()?;
    let nu = s.required("nu")?;
    let x_k = s.required("xk")?;
    let spec = LayerSpec::new(nu, c, x_k, s.number("K")?)?;
    match s.format("csv")?.as_str() {
        "json" => {
            let p = s.solver()?.solve_interior(nu, &c, x_k, &default_grid())?;
            let err = layer_error(&p, &spec)?;
            let v = serde_json::json!({ "spec": spec, "layer_error": err });
            emit(s, &to_json(&v)?)
        }
        _ => emit(s, &matched_csv(&spec, &default_grid())?),
    }
}

fn sweep_branch(s: &Settings) -> CliResult<SweepBranch> {
    match s.get("branch").unwrap_or("upper") {
        "upper" => Ok(SweepBranch::Upper),
        "lower" => Ok(SweepBranch::Lower),
        "interior" => Ok(SweepBranch::Interior {
            x_k: s.required("xk")?,
        }),
        other => Err(usage(format!(
            "rates supports --branch upper, lower or interior, got {other:?}"
        ))),
    }
}

fn cmd_rates(s: &Settings) -> CliResult<()> {
    let c = s.coeffs()?;
    let branch = sweep_branch(s)?;
    let nus = s.nu_grid("1e-1:3.1622776601683794e-4:8")?;
    let metric = match s.get("metric").unwrap_or("supU") {
        "supU" => Metric::SupU,
        "supH" => Metric::SupHalfUSqMinusP,
        other => {
            return Err(usage(format!(
                "--metric must be supU or supH, got {other:?}"
            )))
        }
    };
    let reference = match (s.get("reference"), branch) {
        (Some("plus"), _) | (None, SweepBranch::Upper) => Reference::EulerPlus,
        (Some("minus"), _) | (None, SweepBranch::Lower) => Reference::EulerMinus,
        (Some("glued"), SweepBranch::Interior { x_k }) | (None, SweepBranch::Interior { x_k }) => {
            Reference::Glued(x_k)
        }
        (Some("layer"), SweepBranch::Interior { .. }) => Reference::Layer(s.number("K")?),
        (Some(other), _) => {
            return Err(usage(format!(
                "--reference {other:?} is not valid for this branch (plus, minus, glued, layer)"
            )))
        }
    };
    let window = match (s.windows()?, branch) {
        (Some(w), _) => w,
        (None, SweepBranch::Interior { x_k }) if matches!(reference, Reference::Glued(_)) => {
            excluded_window(x_k, DEFAULT_EPS)
        }
        (None, _) => full_window(),
    };
    let opts = SweepOptions {
        solver: s.solver()?,
        ..SweepOptions::default()
    };
    let report = rate_sweep_with(&opts, &c, branch, reference, metric, &window, &nus)?;

    eprintln!("{:>14} {:>14} {:>10}", "nu", "err", "slope");
    let locals = report.fit.local_slopes();
    for (i, &(nu, err)) in report.fit.points.iter().enumerate() {
        let slope = if i == 0 {
            "-".to_string()
        } else {
            format!("{:.4}", locals[i - 1])
        };
        eprintln!("{nu:>14.6e} {err:>14.6e} {slope:>10}");
    }
    eprintln!(
        "fit: slope {:.4}  intercept {:.4}  r2 {:.6}  predicted {}  verdict {}",
        report.fit.slope,
        report.fit.intercept,
        report.fit.r2,
        report.predicted_alpha.as_fraction(),
        report.verdict
    );
    emit(s, &to_json(&report)?)
}

fn cmd_nonconv(s: &Settings) -> CliResult<()> {
    let c = s.coeffs()?;
    let eps = s.number("eps")?.unwrap_or(DEFAULT_EPS);
    let nus = s.nu_grid("1e-1:1e-2:2")?;
    let star = c3_star(c.c1, c.c2)?;
    if (c.c3 - star).abs() > 1e-9 * (1.0 + c.norm()) {
        eprintln!("note: c3 = {} replaced by c3* = {}", c.c3, star);
    }
    let ws = match s.get("branch").unwrap_or("upper") {
        "upper" => nonconv_search(c.c1, c.c2, eps, &nus)?,
        "lower" => nonconv_search_lower(c.c1, c.c2, eps, &nus)?,
        other => {
            return Err(usage(format!(
                "nonconv supports upper or lower, got {other:?}"
            )))
        }
    };
    emit(s, &to_json(&ws)?)
}

fn cmd_field(s: &Settings) -> CliResult<()> {
    let p = solve_profile(s)?;
    match s.format("json")?.as_str() {
        "svg" => {
            let bbox = Bbox::new(0.02, 1.0, -1.0, 1.0)?;
            let mut levels = auto_levels(&p, &bbox, 14);
            levels.push(0.0);
            let set = streamlines(&p, &levels, &bbox)?;
            emit(s, &streamlines_svg("streamlines", &set, &bbox))
        }
        "csv" => {
            let r = s.number("r")?.unwrap_or(1.0);
            let mut out = String::from("theta,r,u_r,u_theta,p\n");
            for i in 1..200 {
                let theta = std::f64::consts::PI * i as f64 / 200.0;
                let f = field_sample(&p, theta, r)?;
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt17(f.theta),
                    fmt17(f.r),
                    fmt17(f.u_r),
                    fmt17(f.u_theta),
                    fmt17(f.p)
                ));
            }
            emit(s, &out)
        }
        _ => {
            let theta = s.number("theta")?.unwrap_or(FRAC_PI_2);
            let r = s.number("r")?.unwrap_or(1.0);
            emit(s, &to_json(&field_sample(&p, theta, r)?)?)
        }
    }
}

fn cmd_fig1(s: &Settings) -> CliResult<()> {
    let dir = s
        .out()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("fig1"));
    let manifest = fig1_dataset(&dir)?;
    write_stdout(&to_json(&manifest)?)
}
