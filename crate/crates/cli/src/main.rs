use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sngem::bench::experiments::{self, CsvTable};
use sngem::chirp::{estimate_chirp, ChirpReport, ChirpWindow, LosScenario};
use sngem::filters::FilterResponse;
use sngem::numfmt::f4;
use sngem::pencil::{estimate_multitone, AmpMethod, EstimatorOptions, OrderStrategy};
use sngem::record;
use sngem::signal::{ChirpSpec, DualChannelRecord, MultiToneSpec, SamplingGrid, SignalKind};
use sngem::{Error, ErrorClass};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "sngem", version, about = "Sub-Nyquist tone and chirp parameter estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a dual-channel signal file.
    Gen(GenArgs),
    /// Estimate tone frequencies, amplitudes and phases from a signal file.
    Estimate(EstimateArgs),
    /// Estimate chirp parameters from one or two signal files.
    EstimateChirp(ChirpArgs),
    /// Run a reproduction experiment and write its CSV files.
    Bench(BenchArgs),
    /// Print the GNSS Doppler scenario results.
    GnssDemo(GnssArgs),
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: SignalKind,
    /// Spec as inline JSON, or `@path` to read it from a file.
    #[arg(long)]
    spec: String,
    /// Sampling rate in Hz.
    #[arg(long)]
    fs: f64,
    /// Time of the first sample in seconds.
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    /// Number of samples.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "diff")]
    filter: String,
    /// SNR in dB, or `none`.
    #[arg(long, default_value = "none", value_parser = parse_snr)]
    snr: Snr,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct EstimateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `fixed:<m>`, `relthresh:<eps>` or `gap`.
    #[arg(long, default_value = "relthresh:1e-8")]
    order: String,
    #[arg(long)]
    pencil_n: Option<usize>,
    #[arg(long, value_enum, default_value_t = AmpArg::Eq17)]
    amp: AmpArg,
    /// Include singular values in the output.
    #[arg(long)]
    verbose: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AmpArg {
    Eq17,
    Lsq,
}

#[derive(clap::Args)]
struct ChirpArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Optional second observation window.
    #[arg(long = "in2")]
    input2: Option<PathBuf>,
    /// Carrier frequency in Hz; enables velocity and acceleration output.
    #[arg(long)]
    carrier: Option<f64>,
    /// Line-of-sight angle in degrees, reported with the kinematics.
    #[arg(long, default_value_t = 0.0)]
    angle: f64,
    #[arg(long)]
    pencil_n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Table2,
    Fig5,
    Table3,
    Robustness,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    experiment: Experiment,
    /// Monte Carlo trials per point (fig5 defaults to 50, robustness to 100).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise level for fig5, in dB or `none`.
    #[arg(long, default_value = "none", value_parser = parse_snr)]
    snr: Snr,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(clap::Args)]
struct GnssArgs {
    /// Also write table3.csv here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug)]
struct Snr(Option<f64>);

fn parse_snr(s: &str) -> Result<Snr, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(Snr(None));
    }
    match s.parse::<f64>() {
        Ok(v) if !v.is_nan() => Ok(Snr(Some(v))),
        _ => Err(format!("expected a dB value or `none`, got `{s}`")),
    }
}

fn parse_kind(s: &str) -> Result<SignalKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(e.into())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::EstimateChirp(a) => cmd_estimate_chirp(a),
        Command::Bench(a) => cmd_bench(a),
        Command::GnssDemo(a) => cmd_gnss_demo(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            let body = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            println!("{body}");
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Data => EXIT_DATA,
                ErrorClass::Numerical => EXIT_NUMERICAL,
            })
        }
    }
}

/// Caps the global worker pool at `SNGEM_THREADS` when set.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SNGEM_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("SNGEM_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn read_spec_text(arg: &str) -> CliResult<String> {
    match arg.strip_prefix('@') {
        Some(path) => Ok(fs::read_to_string(path)?),
        None => Ok(arg.to_string()),
    }
}

fn cmd_gen(a: GenArgs) -> CliResult<()> {
    let text = read_spec_text(&a.spec)?;
    let grid = SamplingGrid::from_rate(a.fs, a.t0, a.n)?;
    let record = match a.kind {
        SignalKind::Multitone => {
            let spec: MultiToneSpec = serde_json::from_str(&text)?;
            let filter: FilterResponse = a.filter.parse()?;
            DualChannelRecord::multitone(&spec, &filter, grid, a.snr.0, a.seed)?
        }
        SignalKind::Chirp => {
            if a.filter != "diff" {
                return Err(Failure::Usage(
                    "chirp records always pair the signal with its derivative; use --filter diff".into(),
                ));
            }
            let spec: ChirpSpec = serde_json::from_str(&text)?;
            spec.validate()?;
            DualChannelRecord::chirp(&spec, grid, a.snr.0, a.seed)?
        }
    };
    record::write(&record, &a.out)?;
    Ok(())
}

/// Writes a line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn say(line: impl std::fmt::Display) -> CliResult<()> {
    match writeln!(std::io::stdout().lock(), "{line}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => say(text)?,
    }
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> CliResult<()> {
    let order: OrderStrategy = a.order.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let record = record::read(&a.input)?;
    if record.kind != SignalKind::Multitone {
        return Err(Failure::Usage("input holds a chirp; use estimate-chirp".into()));
    }
    let filter: FilterResponse = record.filter.parse()?;
    let options = EstimatorOptions {
        pencil_n: a.pencil_n,
        order,
        amplitude: match a.amp {
            AmpArg::Eq17 => AmpMethod::Eq17,
            AmpArg::Lsq => AmpMethod::Lsq,
        },
    };
    let estimate = estimate_multitone(&record, &filter, &options)?;
    for w in &estimate.diagnostics.warnings {
        eprintln!("warning: {w}");
    }
    emit(&estimate.report(a.verbose), a.out.as_deref())
}

fn cmd_estimate_chirp(a: ChirpArgs) -> CliResult<()> {
    let mut windows = Vec::new();
    for path in std::iter::once(&a.input).chain(a.input2.as_ref()) {
        let r = record::read(path)?;
        if r.kind != SignalKind::Chirp {
            return Err(Failure::Usage(format!("{} does not hold a chirp", path.display())));
        }
        windows.push(ChirpWindow::from_record(&r, a.pencil_n)?);
    }
    let (estimate, _) = estimate_chirp(&windows)?;
    let scenario = a.carrier.map(|c| LosScenario::new(c, a.angle)).transpose()?;
    emit(&ChirpReport::new(estimate, scenario.as_ref())?, a.out.as_deref())
}

fn write_all(tables: &[&CsvTable], dir: &Path) -> CliResult<()> {
    for t in tables {
        let path = t.write_to(dir)?;
        say(format!("wrote {}", path.display()))?;
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CliResult<()> {
    if a.trials == Some(0) {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    match a.experiment {
        Experiment::Table2 => {
            let t = experiments::table2()?;
            for (i, (s, n)) in t.sub_nyquist.components.iter().zip(&t.nyquist.components).enumerate() {
                say(format!(
                    "{:>8} Hz  sub-Nyquist df={} da={} dphi={}  Nyquist df={} ipfft df={}",
                    s.f_true,
                    f4(s.df),
                    f4(s.da),
                    f4(s.dphi),
                    f4(n.df),
                    f4(t.ipfft[i].df)
                ))?;
            }
            write_all(&[&t.table], &a.out_dir)
        }
        Experiment::Fig5 => {
            let f = experiments::fig5(a.trials.unwrap_or(50), a.seed, a.snr.0)?;
            for (len, agg) in &f.points {
                let l = agg.log10_rmse();
                say(format!("L={len:>4}  log10 RMSE f={} a={} phi={}  failed={}", f4(l[0]), f4(l[1]), f4(l[2]), agg.failed))?;
            }
            write_all(&[&f.table], &a.out_dir)
        }
        Experiment::Table3 => {
            let t = experiments::table3()?;
            print_table3(&t.rows)?;
            write_all(&[&t.table], &a.out_dir)
        }
        Experiment::Robustness => {
            let r = experiments::robustness(a.trials.unwrap_or(100), a.seed)?;
            for (snr, agg) in &r.snr {
                say(format!(
                    "{snr:>4} dB  median RMSE f={} a={} phi={}  failed={}",
                    f4(agg.median_rmse[0]),
                    f4(agg.median_rmse[1]),
                    f4(agg.median_rmse[2]),
                    agg.failed
                ))?;
            }
            write_all(&[&r.truncated_table, &r.snr_table], &a.out_dir)
        }
    }
}

fn print_table3(rows: &[experiments::Table3Row]) -> CliResult<()> {
    say("angle   ref v      est v      err v      ref a      est a      err a")?;
    for r in rows {
        say(format!(
            "{:>5}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}",
            r.angle_deg,
            f4(r.ref_v),
            f4(r.est_v),
            f4(r.err_v),
            f4(r.ref_a),
            f4(r.est_a),
            f4(r.err_a)
        ))?;
    }
    Ok(())
}

fn cmd_gnss_demo(a: GnssArgs) -> CliResult<()> {
    let t = experiments::table3()?;
    print_table3(&t.rows)?;
    if let Some(dir) = a.out_dir {
        write_all(&[&t.table], &dir)?;
    }
    Ok(())
}
