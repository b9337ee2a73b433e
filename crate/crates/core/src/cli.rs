//! Command-line front end: `seq`, `run` and `sweep`.
//!
//! Exit codes: 0 success, 1 runtime failure (including sweeps with failed
//! trials), 2 usage or configuration error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::harness::{emit_csv, emit_figure_files, run_sweep_with, ExperimentSpec, SyncMode, TrialContext};
use crate::preamble::{
    autocorrelation, generate_zadoff_chu, golay_complementary_sum, papr_of, CorrelationMode, PreambleFamily,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "GCIBC_OUT";

#[derive(Debug, Parser)]
#[command(name = "gcibc", version, about = "Burst-mode BPSK link simulator for preamble comparison")]
pub struct Cli {
    /// Directory for every file the command writes.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "gcibc-out")]
    pub out: PathBuf,
    /// Master seed; overrides `master_seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a preamble and report its correlation and PAPR.
    Seq(SeqArgs),
    /// Run a single burst and dump the synchroniser internals.
    Run(RunArgs),
    /// Run a Monte-Carlo sweep and write result CSVs.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Cyclic,
    Aperiodic,
}

impl From<ModeArg> for CorrelationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Cyclic => CorrelationMode::Cyclic,
            ModeArg::Aperiodic => CorrelationMode::Aperiodic,
        }
    }
}

#[derive(Debug, Args)]
pub struct SeqArgs {
    #[arg(long)]
    pub family: PreambleFamily,
    #[arg(long)]
    pub len: usize,
    /// CAZAC k or Zadoff-Chu u.
    #[arg(long, default_value_t = 1)]
    pub root: i64,
    /// Autocorrelation flavour (default: cyclic for chirps, aperiodic for Golay).
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Zadoff-Chu only: use the largest prime length and zero pad, as the
    /// experiments do.
    #[arg(long)]
    pub padded: bool,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Experiment file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `key=value` override of a config key; repeatable, applied in order.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Preamble family (default: first family of the config).
    #[arg(long, alias = "family")]
    pub preamble: Option<PreambleFamily>,
    /// Preamble length (default: first length of the config).
    #[arg(long)]
    pub len: Option<usize>,
    /// Eb/N0 in dB; `inf` disables noise (default: first point of the config).
    #[arg(long)]
    pub ebn0: Option<f64>,
    /// Which trial of the seed stream to run.
    #[arg(long, default_value_t = 0)]
    pub trial: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::InvalidParameter(_) | Error::NotCoprime { .. } | Error::NotPowerOfTwo(_) => 2,
                Error::Io { .. } if matches!(cli.command, Command::Run(_) | Command::Sweep(_)) && is_config_read(&e, &cli) => 2,
                _ => 1,
            }
        }
    }
}

fn is_config_read(e: &Error, cli: &Cli) -> bool {
    let config = match &cli.command {
        Command::Run(a) => a.config.config.as_ref(),
        Command::Sweep(a) => a.config.config.as_ref(),
        Command::Seq(_) => None,
    };
    matches!((e, config), (Error::Io { path, .. }, Some(c)) if path == c)
}

/// Runs a parsed command; returns the exit code on success.
pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Seq(args) => cmd_seq(args, &cli.out),
        Command::Run(args) => cmd_run(args, cli.seed, &cli.out),
        Command::Sweep(args) => cmd_sweep(args, cli.seed, &cli.out),
    }
}

fn load_spec(args: &ConfigArgs, seed: Option<u64>) -> Result<ExperimentSpec> {
    let base = match &args.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    let mut spec = base.with_overrides(&args.overrides)?;
    if let Some(seed) = seed {
        spec.master_seed = seed;
    }
    Ok(spec)
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let wrap = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn cmd_seq(args: &SeqArgs, out: &Path) -> Result<i32> {
    let seq = match args.family {
        PreambleFamily::ZadoffChu if !args.padded => generate_zadoff_chu(args.len, args.root)?,
        family => family.generate(args.len, args.root)?,
    };
    let mode = args.mode.map(CorrelationMode::from).unwrap_or(match args.family {
        PreambleFamily::Golay => CorrelationMode::Aperiodic,
        _ => CorrelationMode::Cyclic,
    });
    let profile = autocorrelation(&seq, mode)?;
    create_out(out)?;
    let stem = format!("{}_L{}", args.family, args.len);

    let seq_path = out.join(format!("seq_{stem}.csv"));
    csv_rows(
        &seq_path,
        &["index", "re", "im"],
        seq.elements()
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), v.re.to_string(), v.im.to_string()]),
    )?;
    let corr_path = out.join(format!("autocorr_{stem}.csv"));
    csv_rows(
        &corr_path,
        &["shift", "re", "im", "abs"],
        profile.shifts.iter().zip(&profile.values).map(|(m, v)| {
            vec![m.to_string(), v.re.to_string(), v.im.to_string(), v.norm().to_string()]
        }),
    )?;

    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "family            {}", args.family);
    let _ = writeln!(stdout, "length            {}", seq.len());
    if seq.is_padded() {
        let _ = writeln!(stdout, "active length     {} (zero padded)", seq.active_len());
    }
    let _ = writeln!(stdout, "mode              {mode:?}");
    let _ = writeln!(stdout, "PAPR              {}", papr_of(seq.active())?);
    let _ = writeln!(stdout, "peak |R[0]|       {}", profile.value_at(0).map_or(0.0, |v| v.norm()));
    let _ = writeln!(stdout, "max off-peak |R|  {:e}", profile.max_off_peak());
    if args.family == PreambleFamily::Golay {
        let (a, b) = crate::preamble::generate_golay_pair(args.len)?;
        let sum = golay_complementary_sum(&a, &b)?;
        let zero = a.len() - 1;
        let max_side = sum
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != zero)
            .map(|(_, v)| v.abs())
            .max()
            .unwrap_or(0);
        let _ = writeln!(stdout, "complementary sum {max_side} (max over m != 0)");
    }
    let _ = writeln!(stdout, "wrote {} and {}", seq_path.display(), corr_path.display());
    Ok(0)
}

pub fn cmd_run(args: &RunArgs, seed: Option<u64>, out: &Path) -> Result<i32> {
    let mut spec = load_spec(&args.config, seed)?;
    if let Some(f) = args.preamble {
        spec.families = vec![f];
    }
    if let Some(l) = args.len {
        spec.preamble_lengths = vec![l];
    }
    if let Some(e) = args.ebn0 {
        spec.ebn0_points = vec![e];
    }
    spec.validate()?;
    let family = spec.families[0];
    let len = spec.preamble_lengths[0];
    let ebn0 = spec.ebn0_points[0];
    let ctx = TrialContext::new(&spec, family, len)?;
    let trial_seed = crate::harness::trial_seed(spec.master_seed, family, len, 0, args.trial);
    let (outcome, est) = ctx.run_trial(&spec, ebn0, trial_seed)?;

    create_out(out)?;
    write_file(&out.join("run_spec.toml"), &spec.to_toml_string())?;
    let imp = &outcome.impairments;
    let mut summary = vec![
        ("family", family.to_string()),
        ("preamble_len", len.to_string()),
        ("ebn0_db", ebn0.to_string()),
        ("seed", trial_seed.to_string()),
        ("cfo_hz", imp.cfo_hz.to_string()),
        ("phase_rad", imp.phase_rad.to_string()),
        ("delay_samples", imp.delay_samples.to_string()),
        ("fractional_delay", imp.fractional_delay.to_string()),
        ("pb", outcome.pb.to_string()),
        ("ber", (outcome.bit_errors as f64 / outcome.bits.max(1) as f64).to_string()),
        ("bit_errors", outcome.bit_errors.to_string()),
        ("bits", outcome.bits.to_string()),
    ];
    if let Some(est) = &est {
        summary.extend([
            ("f_hat_hz", est.f_hat_hz.to_string()),
            ("f_coarse_hz", est.f_coarse_hz.to_string()),
            ("fine_refined", est.fine_refined.to_string()),
            ("theta_hat", est.theta_hat.to_string()),
            ("mu_hat", est.mu_hat.to_string()),
            ("epsilon_hat", est.epsilon_hat.to_string()),
            ("corr_peak", est.corr_peak.to_string()),
            ("wiener_singular", est.wiener_singular.to_string()),
        ]);
        csv_rows(
            &out.join("lambda_grid.csv"),
            &["f_hz", "energy"],
            est.cfo_grid
                .iter()
                .zip(&est.cfo_energies)
                .map(|(f, h)| vec![f.to_string(), h.to_string()]),
        )?;
        csv_rows(
            &out.join("correlation.csv"),
            &["lag", "abs"],
            est.correlation_trace
                .iter()
                .enumerate()
                .map(|(n, v)| vec![n.to_string(), v.to_string()]),
        )?;
        csv_rows(
            &out.join("wiener_taps.csv"),
            &["tap", "re", "im"],
            est.wiener_w
                .iter()
                .enumerate()
                .map(|(k, w)| vec![k.to_string(), w.re.to_string(), w.im.to_string()]),
        )?;
        csv_rows(
            &out.join("constellation.csv"),
            &["symbol", "re", "im"],
            est.recovered_symbols
                .iter()
                .enumerate()
                .map(|(n, c)| vec![n.to_string(), c.re.to_string(), c.im.to_string()]),
        )?;
    }
    csv_rows(
        &out.join("run_summary.csv"),
        &["key", "value"],
        summary.iter().map(|(k, v)| vec![k.to_string(), v.clone()]),
    )?;
    let mut stdout = std::io::stdout().lock();
    for (k, v) in &summary {
        let _ = writeln!(stdout, "{k:<18}{v}");
    }
    Ok(0)
}

pub fn cmd_sweep(args: &SweepArgs, seed: Option<u64>, out: &Path) -> Result<i32> {
    if args.config.config.is_none() {
        return Err(Error::invalid("sweep needs --config <FILE>"));
    }
    let spec = load_spec(&args.config, seed)?;
    spec.validate()?;
    create_out(out)?;
    write_file(&out.join("sweep_spec.toml"), &spec.to_toml_string())?;
    if spec.sync == SyncMode::Genie && spec.random_fractional_delay {
        return Err(Error::invalid("genie sync needs random_fractional_delay = false"));
    }
    let total = spec.point_count();
    let mut done = 0;
    let rows = run_sweep_with(&spec, |row| {
        done += 1;
        log::info!(
            "[{done}/{total}] {} L={} Eb/N0={} Pb={:.4}",
            row.family,
            row.preamble_len,
            row.ebn0_db,
            row.pb
        );
    })?;
    let results = out.join("results.csv");
    emit_csv(&rows, &results)?;
    let figures = emit_figure_files(&rows, out)?;

    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(
        stdout,
        "{:<6} {:>5} {:>7} {:>9} {:>9} {:>10} {:>9} {:>7} {:>6}",
        "family", "L", "Eb/N0", "Pb", "±95%", "BER", "cfo_rmse", "timing", "failed"
    );
    for r in &rows {
        let _ = writeln!(
            stdout,
            "{:<6} {:>5} {:>7} {:>9.4} {:>9.4} {:>10.3e} {:>9.3} {:>7.3} {:>6}",
            r.family.to_string(),
            r.preamble_len,
            r.ebn0_db,
            r.pb,
            r.pb_ci95,
            r.ber,
            r.cfo_rmse_hz,
            r.timing_hit_rate,
            r.failed_trials
        );
    }
    let _ = writeln!(stdout, "wrote {}", results.display());
    for f in figures {
        let _ = writeln!(stdout, "wrote {}", f.display());
    }
    let failed: usize = rows.iter().map(|r| r.failed_trials).sum();
    if failed > 0 {
        eprintln!("{failed} trial(s) failed; see log");
        return Ok(1);
    }
    Ok(0)
}
