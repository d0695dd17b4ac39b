//! Command-line harness: argument and config parsing, subcommand dispatch and exit codes.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::grid::{Grid, Space, Symbol};
use crate::io::{fmt_num, metadata_line, parse_config, read_field, sweep_csv};
use crate::lp_frames::FrameFamily;
use crate::norms::{
    bmo_seminorm, hardy_norm, hormander_functional, product_sobolev_norm, square_function_norm, standard_sobolev_norm,
    NormReport,
};
use crate::plot::{emit_plot, Scale};
use crate::region::{check_sufficiency, hull_membership, parse_exponent, IndexTuple, Scalar};
use crate::selftest::{self, Baselines, Group, CE1_EPS, CE1_RADII, CE2_SIZES, DEFAULT_SEED};
use crate::sharpness::{ce1_sweep, ce2_sweep, Ce1Params, Ce2Params};

/// Success.
pub const EXIT_OK: i32 = 0;
/// A check or assertion failed.
pub const EXIT_FAIL: i32 = 1;
/// Bad flags, config or input files.
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MULTILIN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "multilin", version, about = "Numerical laboratory for multilinear Fourier multipliers")]
struct Cli {
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write output files into this directory instead of printing to stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify an index tuple.
    CheckRegion(RegionArgs),
    /// Sweep the truncated-kernel construction over N and eps.
    Ce1Sweep(Ce1Args),
    /// Sweep the diagonal-kernel construction over the box size L.
    Ce2Sweep(Ce2Args),
    /// Evaluate a norm of a serialized field or symbol.
    Norms(NormArgs),
    /// Run the invariant suite.
    Selftest,
    /// Render a sweep CSV column as an SVG line plot.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct RegionArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: String,
    /// Comma-separated exponents; `inf` allowed.
    #[arg(long)]
    p: String,
    /// Comma-separated orders.
    #[arg(long)]
    s: String,
    /// Also decide hull membership with this cap.
    #[arg(long)]
    cap: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepCommon {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Record wall-clock milliseconds instead of 0.
    #[arg(long)]
    timing: bool,
    /// Skip the trend assertions.
    #[arg(long)]
    no_check: bool,
    #[arg(long)]
    r: Option<String>,
    /// Comma-separated orders.
    #[arg(long)]
    s: Option<String>,
    /// Comma-separated exponents; `inf` allowed.
    #[arg(long)]
    p: Option<String>,
}

#[derive(Debug, Args)]
struct Ce1Args {
    #[command(flatten)]
    common: SweepCommon,
    /// Comma-separated truncation radii.
    #[arg(long)]
    n_list: Option<String>,
    /// Comma-separated dilation parameters.
    #[arg(long)]
    eps_list: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// Points of the operator lattice.
    #[arg(long)]
    points: Option<String>,
    /// Points of the functional lattice.
    #[arg(long)]
    symbol_points: Option<String>,
}

#[derive(Debug, Args)]
struct Ce2Args {
    #[command(flatten)]
    common: SweepCommon,
    /// Comma-separated box sizes.
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    /// Comma-separated tail exponents.
    #[arg(long)]
    tau_tail: Option<String>,
    /// Box length per unit of L.
    #[arg(long)]
    box_unit: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormKind {
    Lp,
    Sobolev,
    ProductSobolev,
    Hardy,
    Square,
    Bmo,
    Hormander,
}

#[derive(Debug, Args)]
struct NormArgs {
    /// Field file in the MLF1 format.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    norm: NormKind,
    /// Integrability exponent.
    #[arg(long, default_value = "2")]
    p: String,
    /// Comma-separated orders.
    #[arg(long, default_value = "0")]
    s: String,
    /// Number of factors when the file holds a symbol or a product-space field.
    #[arg(long, default_value_t = 1)]
    m: usize,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    svg: PathBuf,
    #[arg(long, default_value = "N_or_L")]
    x: String,
    #[arg(long, default_value = "ratio")]
    y: String,
    #[arg(long)]
    log_x: bool,
    #[arg(long)]
    log_y: bool,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    if v.trim() == "inf" {
        return Ok(f64::INFINITY);
    }
    Ok(Scalar::parse(v).map_err(|_| usage(format!("{key}: cannot parse {v:?}")))?.to_f64())
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|x| parse_f64(key, x.trim())).collect()
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim().parse().map_err(|_| usage(format!("{key}: expected a non-negative integer, got {v:?}")))
}

/// Config values from an optional file, overridden by flags, restricted to `allowed` keys.
struct Settings(BTreeMap<String, String>);

impl Settings {
    fn load(path: Option<&Path>, flags: &[(&str, &Option<String>)], allowed: &[&str]) -> Result<Self> {
        let mut map = match path {
            Some(p) => parse_config(&std::fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        if let Some(bad) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Format(format!("unknown config key {bad:?}; allowed: {}", allowed.join(", "))));
        }
        for (k, v) in flags {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        Ok(Self(map))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.0.get(key).map_or(Ok(default), |v| parse_f64(key, v))
    }

    fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        self.0.get(key).map_or(Ok(default.to_vec()), |v| parse_list(key, v))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        self.0.get(key).map_or(Ok(default), |v| parse_usize(key, v))
    }
}

const SWEEP_KEYS: [&str; 3] = ["r", "s", "p"];

fn common_flags(c: &SweepCommon) -> Vec<(&'static str, &Option<String>)> {
    vec![("r", &c.r), ("s", &c.s), ("p", &c.p)]
}

struct Outcome {
    files: Vec<(String, String)>,
    groups: Vec<Group>,
}

fn ce1(args: &Ce1Args, seed: u64) -> Result<Outcome> {
    let mut flags = common_flags(&args.common);
    flags.extend([
        ("n_list", &args.n_list),
        ("eps_list", &args.eps_list),
        ("delta", &args.delta),
        ("points", &args.points),
        ("symbol_points", &args.symbol_points),
    ]);
    let mut allowed = SWEEP_KEYS.to_vec();
    allowed.extend(["n_list", "eps_list", "delta", "m", "points", "box_scale", "symbol_points", "symbol_box", "quad_step"]);
    let cfg = Settings::load(args.common.config.as_deref(), &flags, &allowed)?;
    let d = Ce1Params::default();
    let s = cfg.list_or("s", &d.s)?;
    let mut params = Ce1Params {
        m: cfg.usize_or("m", s.len())?,
        r: cfg.f64_or("r", d.r)?,
        delta: cfg.f64_or("delta", d.delta)?,
        s,
        p: cfg.list_or("p", &d.p)?,
        ..d
    };
    params.grid.points = cfg.usize_or("points", params.grid.points)?;
    params.grid.box_scale = cfg.f64_or("box_scale", params.grid.box_scale)?;
    params.grid.symbol_points = cfg.usize_or("symbol_points", params.grid.symbol_points)?;
    params.grid.symbol_box = cfg.f64_or("symbol_box", params.grid.symbol_box)?;
    params.grid.quad_step = cfg.f64_or("quad_step", params.grid.quad_step)?;
    let radii = cfg.list_or("n_list", &CE1_RADII.map(|v| v as f64))?;
    if radii.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
        return Err(usage("n_list entries must be positive integers"));
    }
    let radii: Vec<usize> = radii.iter().map(|&v| v as usize).collect();
    let eps = cfg.list_or("eps_list", &CE1_EPS)?;
    params.validate()?;
    let records = ce1_sweep(&params, &radii, &eps, args.common.timing)?;
    let groups = if args.common.no_check || radii.len() < 2 {
        Vec::new()
    } else {
        vec![selftest::ce1_trend_checks(&records, &Baselines::frozen())?]
    };
    Ok(Outcome { files: vec![("ce1_sweep.csv".into(), sweep_csv(&records, seed, &params.grid.tag()))], groups })
}

fn ce2(args: &Ce2Args, seed: u64) -> Result<Outcome> {
    let mut flags = common_flags(&args.common);
    flags.extend([
        ("sizes", &args.sizes),
        ("m", &args.m),
        ("tau", &args.tau),
        ("tau_tail", &args.tau_tail),
        ("box_unit", &args.box_unit),
    ]);
    let mut allowed = SWEEP_KEYS.to_vec();
    allowed.extend(["sizes", "m", "l", "tau", "tau_tail", "box_unit", "oversample", "decimation"]);
    let cfg = Settings::load(args.common.config.as_deref(), &flags, &allowed)?;
    let d = Ce2Params::default();
    let s = cfg.list_or("s", &d.s)?;
    let mut params = Ce2Params {
        m: cfg.usize_or("m", s.len())?,
        l: cfg.usize_or("l", d.l)?,
        r: cfg.f64_or("r", d.r)?,
        p: cfg.list_or("p", &d.p)?,
        tau: cfg.f64_or("tau", d.tau)?,
        tau_tail: cfg.list_or("tau_tail", &d.tau_tail)?,
        s,
        ..d
    };
    params.grid.box_unit = cfg.f64_or("box_unit", params.grid.box_unit)?;
    params.grid.oversample = cfg.usize_or("oversample", params.grid.oversample)?;
    params.grid.decimation = cfg.usize_or("decimation", params.grid.decimation)?;
    let sizes = cfg.list_or("sizes", &CE2_SIZES)?;
    params.validate()?;
    let records = ce2_sweep(&params, &sizes, args.common.timing)?;
    let groups = if args.common.no_check || sizes.len() < 2 {
        Vec::new()
    } else {
        vec![selftest::ce2_trend_checks(&records, &Baselines::frozen())?]
    };
    Ok(Outcome { files: vec![("ce2_sweep.csv".into(), sweep_csv(&records, seed, &params.grid.tag()))], groups })
}

fn region(args: &RegionArgs) -> Result<Outcome> {
    let p: Vec<&str> = args.p.split(',').map(str::trim).collect();
    let s: Vec<&str> = args.s.split(',').map(str::trim).collect();
    if p.len() != args.m || s.len() != args.m {
        return Err(usage(format!("--p and --s need {} entries each", args.m)));
    }
    let r = Scalar::parse(&args.r).map_err(|e| usage(e.to_string()))?;
    let p_recip = p.iter().map(|v| parse_exponent(v)).collect::<Result<Vec<_>>>().map_err(|e| usage(e.to_string()))?;
    let s = s.iter().map(|v| Scalar::parse(v)).collect::<Result<Vec<_>>>().map_err(|e| usage(e.to_string()))?;
    let idx = IndexTuple::new(args.n, r, p_recip, s)?;
    let verdict = check_sufficiency(&idx);
    let mut line = verdict.to_json();
    if let Some(cap) = args.cap {
        let inside = hull_membership(&idx, cap)?;
        line.pop();
        line.push_str(&format!(",\"hull_member\":{inside}}}"));
    }
    line.push('\n');
    Ok(Outcome { files: vec![("region.jsonl".into(), line)], groups: Vec::new() })
}

fn norms(args: &NormArgs, seed: u64) -> Result<Outcome> {
    let field = read_field(&args.input)?;
    let p = parse_f64("p", &args.p)?;
    let s = parse_list("s", &args.s)?;
    let g = *field.grid();
    let phys = || -> Result<_> {
        match field.space() {
            Space::Physical => Ok(field.clone()),
            Space::Spectral => crate::grid::inverse_ft(&field),
        }
    };
    let plain = |id: &str, v: f64| format!("{id},{},,,,{},{}", fmt_num(v), g.points(), g.box_length());
    let row = match args.norm {
        NormKind::Lp => plain("lp", crate::grid::lp_norm(&phys()?, p)?),
        NormKind::Sobolev => plain("sobolev", standard_sobolev_norm(&phys()?, p, s[0])?),
        NormKind::ProductSobolev => plain("product_sobolev", product_sobolev_norm(&phys()?, args.m, p, &s)?),
        NormKind::Hardy => hardy_norm(&phys()?, p)?.csv_row("hardy"),
        NormKind::Square => plain("square", square_function_norm(&phys()?, p)?),
        NormKind::Bmo => plain("bmo", bmo_seminorm(&phys()?)?),
        NormKind::Hormander => {
            let d = g.dims();
            if args.m == 0 || d % args.m != 0 {
                return Err(usage(format!("a {d}-axis file cannot hold a symbol with {} factors", args.m)));
            }
            let factor = Grid::new(d / args.m, g.points(), g.box_length())?;
            let sigma = Symbol::from_values(factor, args.m, &vec![0.0; d], field.values().to_vec())?;
            let rep: NormReport = hormander_functional(&sigma, &FrameFamily::psi_m(args.m), p, &s)?;
            rep.csv_row("hormander")
        }
    };
    let text = format!(
        "norm_id,value,j_min,j_max,argmax_j,P,L\n{row}\n{}\n",
        metadata_line(seed, &format!("dims={};P={};L={}", g.dims(), g.points(), g.box_length()))
    );
    Ok(Outcome { files: vec![("norms.csv".into(), text)], groups: Vec::new() })
}

fn selftest_run(seed: u64) -> Result<Outcome> {
    let groups = selftest::run_all(seed)?;
    Ok(Outcome { files: vec![("selftest.csv".into(), selftest::report_csv(&groups, seed))], groups })
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::Format(_) | Error::Io(_) | Error::InvalidGrid(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::CheckRegion(a) => region(a),
        Command::Ce1Sweep(a) => ce1(a, cli.seed),
        Command::Ce2Sweep(a) => ce2(a, cli.seed),
        Command::Norms(a) => norms(a, cli.seed),
        Command::Selftest => selftest_run(cli.seed),
        Command::Plot(a) => {
            emit_plot(&a.csv, &a.x, &a.y, &a.svg, Scale { log_x: a.log_x, log_y: a.log_y })?;
            Ok(Outcome { files: Vec::new(), groups: Vec::new() })
        }
    }
}

fn emit(cli: &Cli, out: &Outcome, stdout: &mut dyn Write) -> Result<()> {
    for (name, text) in &out.files {
        match &cli.out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join(name), text)?;
            }
            None => stdout.write_all(text.as_bytes())?,
        }
    }
    Ok(())
}

fn thread_count() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let threads = match thread_count() {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let result = match threads {
        Some(n) => selftest::with_threads(n, || dispatch(&cli)).and_then(|r| r),
        None => dispatch(&cli),
    };
    let out = match result {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
    };
    if let Err(e) = emit(&cli, &out, stdout) {
        let _ = writeln!(stderr, "error: {e}");
        return exit_code(&e);
    }
    let mut code = EXIT_OK;
    for g in &out.groups {
        for c in g.failures() {
            let _ = writeln!(
                stderr,
                "check failed: {}/{} = {} outside [{}, {}]",
                g.id,
                c.id,
                fmt_num(c.value),
                fmt_num(c.lower),
                fmt_num(c.upper)
            );
            code = EXIT_FAIL;
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("multilin").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn region_verdict_json() {
        let (code, out, _) = run_capture(&["check-region", "--m", "2", "--n", "1", "--r", "2", "--p", "1,1", "--s", "0.6,0.6"]);
        assert_eq!(code, 0);
        assert!(out.contains("\"bounded\":false") && out.contains("\"failing_J\":[1,2]"), "{out}");
        let (code, out, _) =
            run_capture(&["check-region", "--m", "2", "--n", "1", "--r", "2", "--p", "1,1", "--s", "1/2,5", "--cap", "10"]);
        assert_eq!(code, 0);
        assert!(out.contains("\"hull_member\":true") && out.contains("\"witness\":\"ce1\""), "{out}");
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_capture(&["frobnicate"]).0, 2);
        assert_eq!(run_capture(&["check-region", "--m", "2"]).0, 2);
        assert_eq!(run_capture(&["check-region", "--m", "3", "--n", "1", "--r", "2", "--p", "1,1", "--s", "1,1"]).0, 2);
        assert_eq!(run_capture(&["norms", "--input", "/nonexistent.mlf", "--norm", "lp"]).0, 2);
        assert_eq!(run_capture(&["ce2-sweep", "--sizes", "8,x"]).0, 2);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("check-region") && out.contains("selftest"));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let dir = std::env::temp_dir().join(format!("multilin-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("bad.cfg");
        std::fs::write(&cfg, "sizes = 8, 16\nwobble = 3\n").unwrap();
        let (code, _, err) = run_capture(&["ce2-sweep", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(err.contains("wobble"), "{err}");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn small_ce2_sweep_writes_csv() {
        let (code, out, err) = run_capture(&["ce2-sweep", "--sizes", "8,16", "--no-check"]);
        assert_eq!(code, 0, "{err}");
        let lines: Vec<&str> = out.lines().collect();
        assert!(lines[0].starts_with("run_id,construction,N_or_L"));
        assert_eq!(lines.iter().filter(|l| l.starts_with("ce2-")).count(), 2);
        assert!(lines.last().unwrap().starts_with("#version="));
        assert!(out.contains(",0\n"), "wall_ms defaults to 0");
    }
}
