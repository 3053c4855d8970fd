//! Command-line front end.
//!
//! [`run`] takes the argument list and two writers and returns the process
//! exit code, so the whole interface can be driven from tests:
//!
//! * 0: success
//! * 1: usage, IO or dimension error
//! * 2: a numerical check failed (roundtrip identity)

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::decompose::decompose_fp32;
use crate::dispatch::env_settings;
use crate::error::{Error, Result};
use crate::gemm::{flop_count, gemm, gemm_fp64, GemmRequest, Mode};
use crate::lab::{
    cond_sweep, derive_seed, exponent_sweep, normal_matrix, relative_error_stats, rms_error, rng_from,
    snr_db, CondSweepConfig, ExponentGridSpec, ExponentRange,
};
use crate::matrix::{MatrixF32, Transpose};
use crate::matrix_io::{load_f32, save_f32};
use crate::verify::{roundtrip_exhaustive, roundtrip_sample, RoundtripSummary};

#[derive(Parser, Debug)]
#[command(name = "bf16x9", version, about = "FP32 GEMM emulated with bf16 triplets")]
pub struct Cli {
    /// Base seed for every random fill.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Kernel: native_fp32, bf16x9, bf16x6, fp64_oracle or auto.
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Pretty,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Split FP32 values into bf16 triplets.
    Decompose(DecomposeArgs),
    /// Check recompose(decompose(x)) == x over FP32 bit patterns.
    Roundtrip(RoundtripArgs),
    /// One GEMM against the FP64 oracle.
    Gemm(GemmArgs),
    /// Accuracy against a target average condition number.
    SweepCond(SweepCondArgs),
    /// SNR over a grid of input exponents.
    SweepExponent(SweepExponentArgs),
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    /// Decimal literals, inf/nan, or 0x-prefixed bit patterns.
    #[arg(required = true, allow_hyphen_values = true, value_parser = parse_f32)]
    pub values: Vec<f32>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Coverage {
    Exhaustive,
    Sample,
}

#[derive(Args, Debug)]
pub struct RoundtripArgs {
    #[arg(long, value_enum, default_value_t = Coverage::Sample)]
    pub coverage: Coverage,
    /// Patterns drawn in sample mode.
    #[arg(long, default_value_t = 1_000_000)]
    pub count: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Fill {
    Normal,
    Identity,
}

#[derive(Args, Debug)]
pub struct GemmArgs {
    /// Defaults to 160, or to the shape of --a.
    #[arg(long)]
    pub m: Option<usize>,
    /// Defaults to 160, or to the shape of --b.
    #[arg(long)]
    pub n: Option<usize>,
    /// Defaults to 160, or to the shape of --a.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value = "1", allow_hyphen_values = true, value_parser = parse_f32)]
    pub alpha: f32,
    #[arg(long, default_value = "0", allow_hyphen_values = true, value_parser = parse_f32)]
    pub beta: f32,
    #[arg(long)]
    pub trans_a: bool,
    #[arg(long)]
    pub trans_b: bool,
    #[arg(long, value_enum, default_value_t = Fill::Normal)]
    pub fill: Fill,
    /// Matrix file for A, as stored (before any transpose).
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
    #[arg(long)]
    pub c: Option<PathBuf>,
    /// Save the result matrix here.
    #[arg(long)]
    pub write_c: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepCondArgs {
    #[arg(long, value_delimiter = ',', default_value = "1e1,1e2,1e3,1e4,1e5,1e6")]
    pub deltas: Vec<f64>,
    #[arg(long, default_value_t = 160)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Defaults to native_fp32 plus --mode (bf16x9 when unset).
    #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
    pub modes: Vec<Mode>,
    /// Log-uniform row scaling range for A, as LO,HI.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub diag_scaling: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct SweepExponentArgs {
    #[arg(long, default_value = "-140:124:8", allow_hyphen_values = true, value_parser = parse_range)]
    pub exp_a: ExponentRange,
    #[arg(long, default_value = "-140:124:8", allow_hyphen_values = true, value_parser = parse_range)]
    pub exp_b: ExponentRange,
    #[arg(long, default_value_t = 512)]
    pub m: usize,
    #[arg(long, default_value_t = 1024)]
    pub k: usize,
    #[arg(long, default_value_t = 2048)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
    pub modes: Vec<Mode>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Decimal literal, `inf`/`nan`, or a `0x` bit pattern.
pub fn parse_f32(s: &str) -> Result<f32, String> {
    let t = s.trim();
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        return u32::from_str_radix(hex, 16)
            .map(f32::from_bits)
            .map_err(|_| format!("bad bit pattern `{s}`"));
    }
    t.parse::<f32>().map_err(|_| format!("not an FP32 literal: `{s}`"))
}

fn parse_range(s: &str) -> Result<ExponentRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("expected START:END[:STEP], got `{s}`");
    let (start, end, step) = match parts.as_slice() {
        [a, b] => (a, b, "8"),
        [a, b, c] => (a, b, *c),
        _ => return Err(bad()),
    };
    let start = start.trim().parse().map_err(|_| bad())?;
    let end = end.trim().parse().map_err(|_| bad())?;
    let step = step.trim().parse().map_err(|_| bad())?;
    Ok(ExponentRange::new(start, end, step))
}

/// Shortest round-trip scientific notation; `inf`, `-inf`, `NaN` for specials.
fn num(x: f64) -> String {
    format!("{x:e}")
}

fn num32(x: f32) -> String {
    format!("{x:e}")
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> String {
        let mut s = String::new();
        match format {
            Format::Csv => {
                s.push_str(&self.header.join(","));
                s.push('\n');
                for r in &self.rows {
                    s.push_str(&r.join(","));
                    s.push('\n');
                }
            }
            Format::Pretty => {
                let mut w: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
                for r in &self.rows {
                    for (w, c) in w.iter_mut().zip(r) {
                        *w = (*w).max(c.len());
                    }
                }
                let line = |cells: Vec<&str>| {
                    let padded: Vec<String> = cells.iter().zip(&w).map(|(c, w)| format!("{c:>w$}")).collect();
                    padded.join("  ").trim_end().to_string() + "\n"
                };
                s.push_str(&line(self.header.clone()));
                for r in &self.rows {
                    s.push_str(&line(r.iter().map(String::as_str).collect()));
                }
            }
        }
        s
    }
}

struct Outcome {
    text: String,
    code: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, code: 0 }
    }
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    match execute(&cli, err) {
        Ok(outcome) => match emit(&cli, &outcome.text, out) {
            Ok(()) => outcome.code,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn emit(cli: &Cli, text: &str, out: &mut dyn Write) -> Result<()> {
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(cli: &Cli, err: &mut dyn Write) -> Result<Outcome> {
    match &cli.command {
        Command::Decompose(a) => Ok(Outcome::ok(cmd_decompose(&a.values, cli.format))),
        Command::Roundtrip(a) => cmd_roundtrip(a, cli, err),
        Command::Gemm(a) => cmd_gemm(a, cli).map(Outcome::ok),
        Command::SweepCond(a) => cmd_sweep_cond(a, cli).map(Outcome::ok),
        Command::SweepExponent(a) => cmd_sweep_exponent(a, cli).map(Outcome::ok),
    }
}

fn cmd_decompose(values: &[f32], format: Format) -> String {
    let mut t = Table::new(&[
        "input",
        "bits",
        "hi",
        "mid",
        "lo",
        "hi_value",
        "mid_value",
        "lo_value",
        "recomposed",
        "recomposed_bits",
        "lossless",
    ]);
    let mut pretty = String::new();
    for &x in values {
        let tr = decompose_fp32(x);
        let back = tr.recompose();
        let lossless = if x.is_nan() { back.is_nan() } else { back.to_bits() == x.to_bits() };
        let [hi, mid, lo] = tr.components();
        let _ = writeln!(
            pretty,
            "{} (0x{:08X}): hi=0x{:04X} mid=0x{:04X} lo=0x{:04X} ({}, {}, {}) recomposed={} (0x{:08X}) lossless={}",
            num32(x),
            x.to_bits(),
            hi.to_bits(),
            mid.to_bits(),
            lo.to_bits(),
            num32(hi.to_f32()),
            num32(mid.to_f32()),
            num32(lo.to_f32()),
            num32(back),
            back.to_bits(),
            lossless
        );
        t.push(vec![
            num32(x),
            format!("0x{:08X}", x.to_bits()),
            format!("0x{:04X}", hi.to_bits()),
            format!("0x{:04X}", mid.to_bits()),
            format!("0x{:04X}", lo.to_bits()),
            num32(hi.to_f32()),
            num32(mid.to_f32()),
            num32(lo.to_f32()),
            num32(back),
            format!("0x{:08X}", back.to_bits()),
            lossless.to_string(),
        ]);
    }
    match format {
        Format::Csv => t.render(Format::Csv),
        Format::Pretty => pretty,
    }
}

fn cmd_roundtrip(args: &RoundtripArgs, cli: &Cli, err: &mut dyn Write) -> Result<Outcome> {
    let (label, s): (&str, RoundtripSummary) = match args.coverage {
        Coverage::Exhaustive => ("exhaustive", roundtrip_exhaustive()),
        Coverage::Sample => ("sample", roundtrip_sample(args.count, cli.seed)),
    };
    let mut t = Table::new(&[
        "coverage",
        "checked",
        "zero",
        "subnormal",
        "normal",
        "inf",
        "nan",
        "failures",
        "first_failure",
    ]);
    t.push(vec![
        label.to_string(),
        s.checked.to_string(),
        s.zero.to_string(),
        s.subnormal.to_string(),
        s.normal.to_string(),
        s.inf.to_string(),
        s.nan.to_string(),
        s.failures.to_string(),
        s.first_failure.map(|b| format!("0x{b:08X}")).unwrap_or_default(),
    ]);
    let code = if s.failures == 0 {
        0
    } else {
        let _ = writeln!(
            err,
            "roundtrip: {} failures, first at 0x{:08X}",
            s.failures,
            s.first_failure.unwrap_or(0)
        );
        2
    };
    Ok(Outcome { text: t.render(cli.format), code })
}

fn transpose_flag(on: bool) -> Transpose {
    if on {
        Transpose::Transpose
    } else {
        Transpose::None
    }
}

fn cmd_gemm(args: &GemmArgs, cli: &Cli) -> Result<String> {
    let env = env_settings()?;
    let policy = env.policy();
    let mode = cli.mode.unwrap_or_else(|| env.default_mode());
    let (ta, tb) = (transpose_flag(args.trans_a), transpose_flag(args.trans_b));

    let file_a = args.a.as_ref().map(load_f32).transpose()?;
    let file_b = args.b.as_ref().map(load_f32).transpose()?;
    let file_c = args.c.as_ref().map(load_f32).transpose()?;
    let op_shape = |m: &MatrixF32, t: Transpose| match t {
        Transpose::None => m.shape(),
        Transpose::Transpose => (m.cols(), m.rows()),
    };
    let shape_a = file_a.as_ref().map(|a| op_shape(a, ta));
    let shape_b = file_b.as_ref().map(|b| op_shape(b, tb));
    let m = args.m.or(shape_a.map(|s| s.0)).or(file_c.as_ref().map(|c| c.rows())).unwrap_or(160);
    let k = args.k.or(shape_a.map(|s| s.1)).or(shape_b.map(|s| s.0)).unwrap_or(160);
    let n = args.n.or(shape_b.map(|s| s.1)).or(file_c.as_ref().map(|c| c.cols())).unwrap_or(160);
    if m == 0 || n == 0 || k == 0 {
        return Err(Error::DimensionMismatch("m, n, k must be positive".into()));
    }

    let req = GemmRequest::new(m, n, k)
        .with_mode(mode)
        .with_alpha_beta(args.alpha, args.beta)
        .with_transpose(ta, tb);
    let ((ar, ac), (br, bc)) = req.operand_shapes();
    let mut rng = rng_from(derive_seed(cli.seed, &[0x6e6d]));
    let mut fill = |rows: usize, cols: usize| match args.fill {
        Fill::Normal => normal_matrix(rows, cols, &mut rng),
        Fill::Identity => MatrixF32::from_fn(rows, cols, |i, j| if i == j { 1.0 } else { 0.0 }),
    };
    let a = file_a.unwrap_or_else(|| fill(ar, ac));
    let b = file_b.unwrap_or_else(|| fill(br, bc));
    let c = match file_c {
        Some(c) => c,
        None if args.beta != 0.0 => fill(m, n),
        None => MatrixF32::zeros(m, n),
    };

    let result = gemm(&req, &a, &b, &c, &policy)?;
    let reference = gemm_fp64(
        &req.with_mode(Mode::Fp64Oracle),
        &a.to_f64(),
        &b.to_f64(),
        &c.to_f64(),
    )?;
    let stats = relative_error_stats(&result.c, &reference)?;
    let rms = rms_error(&result.c, &reference).ok();
    let ratio = flop_count(&req.with_mode(result.mode))?.ratio;
    if let Some(path) = &args.write_c {
        save_f32(path, &result.c)?;
    }

    let mut t = Table::new(&[
        "mode",
        "resolved_mode",
        "m",
        "n",
        "k",
        "avg_rel_err",
        "max_rel_err",
        "rms",
        "snr_db",
        "flop_ratio",
        "seed",
    ]);
    t.push(vec![
        mode.to_string(),
        result.mode.to_string(),
        m.to_string(),
        n.to_string(),
        k.to_string(),
        num(stats.avg),
        num(stats.max),
        rms.map(num).unwrap_or_default(),
        rms.map(|r| num(snr_db(r))).unwrap_or_default(),
        num(ratio),
        cli.seed.to_string(),
    ]);
    Ok(t.render(cli.format))
}

/// Explicit list, else native plus the global mode (bf16x9 by default).
fn sweep_modes(explicit: &[Mode], global: Option<Mode>) -> Vec<Mode> {
    if !explicit.is_empty() {
        return explicit.to_vec();
    }
    let other = global.unwrap_or(Mode::Bf16x9);
    if other == Mode::Native {
        vec![Mode::Native]
    } else {
        vec![Mode::Native, other]
    }
}

fn cmd_sweep_cond(args: &SweepCondArgs, cli: &Cli) -> Result<String> {
    if args.deltas.is_empty() {
        return Err(Error::InvalidArgument("--deltas is empty".into()));
    }
    let cfg = CondSweepConfig {
        deltas: args.deltas.clone(),
        n: args.n,
        trials: args.trials,
        modes: sweep_modes(&args.modes, cli.mode),
        seed: cli.seed,
        diag_scaling: match args.diag_scaling.as_slice() {
            [lo, hi] => Some((*lo, *hi)),
            _ => None,
        },
    };
    let rows = cond_sweep(&cfg)?;
    let mut t = Table::new(&[
        "delta",
        "mode",
        "avg_rel_err",
        "max_rel_err",
        "fraction_emulated_better",
        "realized_kappa",
        "trials",
        "seed",
    ]);
    for r in rows {
        t.push(vec![
            num(r.delta),
            r.mode.to_string(),
            num(r.report.avg_rel_err),
            num(r.report.max_rel_err),
            num(r.report.fraction_emulated_better),
            num(r.report.realized_avg_kappa),
            r.trials.to_string(),
            cli.seed.to_string(),
        ]);
    }
    Ok(t.render(cli.format))
}

fn cmd_sweep_exponent(args: &SweepExponentArgs, cli: &Cli) -> Result<String> {
    let spec = ExponentGridSpec {
        exp_a: args.exp_a,
        exp_b: args.exp_b,
        m: args.m,
        n: args.n,
        k: args.k,
        seed: cli.seed,
    };
    let modes = sweep_modes(&args.modes, cli.mode);
    let cells = exponent_sweep(&spec, &modes)?;
    let mut t = Table::new(&["exp_a", "exp_b", "mode", "snr_db", "degenerate"]);
    for cell in cells {
        for &mode in &modes {
            t.push(vec![
                cell.exp_a.to_string(),
                cell.exp_b.to_string(),
                mode.to_string(),
                cell.snr(mode).map(num).unwrap_or_default(),
                u8::from(cell.degenerate).to_string(),
            ]);
        }
    }
    Ok(t.render(cli.format))
}
