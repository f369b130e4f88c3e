//! Command-line front end: `simulate`, `precode` and `bench`.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::Rng;

use crate::error::{Error, Result};
use crate::mimo::{gen_rayleigh_channel, map_bits, QamConstellation};
use crate::precoder::{BcdStep, PrecoderKind};
use crate::rng::RngStream;
use crate::sim::{run_sweep_with, write_results, Progress, SimConfig};

/// Exit status for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for failures while running.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "onebit-sim", version, about = "One-bit massive MIMO precoding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo BER sweep and write the results as CSV.
    Simulate(SimulateArgs),
    /// Precode a single seeded instance and report solver diagnostics.
    Precode(PrecodeArgs),
    /// Time each precoder on a fixed configuration.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Override any configuration key, e.g. `--set N=32`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Base seed of all random streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads ('auto' or a count); defaults to $ONEBIT_PARALLELISM
    /// or the number of cores.
    #[arg(long)]
    parallelism: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Configuration file (flat `key = value` lines, `#` comments).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Comma-separated SNR grid in dB, replacing `snr_db_grid`.
    #[arg(long, value_name = "LIST")]
    snr: Option<String>,
    /// Number of channel realizations per SNR point.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated subset of zf, onebit-zf, bcd-fista.
    #[arg(long, value_name = "LIST")]
    precoders: Option<String>,
    /// Output CSV path.
    #[arg(long, value_name = "PATH", default_value = "ber.csv")]
    out: PathBuf,
    /// Write 0 for mean_runtime_ms so the CSV depends only on the config.
    #[arg(long)]
    no_timing: bool,
    /// Suppress progress output on stderr.
    #[arg(long, short)]
    quiet: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct PrecodeArgs {
    /// Optional configuration file; defaults apply otherwise.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Trial index selecting the random stream of the instance.
    #[arg(long, default_value_t = 0)]
    trial: u32,
    /// One of zf, onebit-zf, bcd-fista.
    #[arg(long, default_value = "bcd-fista")]
    precoder: String,
    /// Write the per-iteration objective trace as CSV.
    #[arg(long, value_name = "PATH")]
    trace_out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Optional configuration file; defaults apply otherwise.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Instances timed per precoder.
    #[arg(long, default_value_t = 5)]
    reps: u32,
    /// Comma-separated subset of zf, onebit-zf, bcd-fista.
    #[arg(long, value_name = "LIST")]
    precoders: Option<String>,
    #[command(flatten)]
    common: Common,
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, out, err),
        Command::Precode(a) => precode(a, out),
        Command::Bench(a) => bench(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Config(_) | Error::InvalidArgument(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            }
        }
    }
}

fn load(config: Option<&PathBuf>, common: &Common) -> Result<SimConfig> {
    let mut cfg = match config {
        Some(p) => SimConfig::from_path(p)?,
        None => SimConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    if let Some(p) = &common.parallelism {
        cfg.parallelism = p.parse()?;
    }
    Ok(cfg)
}

fn simulate(a: SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut cfg = load(Some(&a.config), &a.common)?;
    if let Some(s) = &a.snr {
        cfg.set("snr_db_grid", s)?;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(p) = &a.precoders {
        cfg.set("precoder_list", p)?;
    }
    if a.no_timing {
        cfg.record_timing = false;
    }
    cfg.validate()?;

    let precoders: Vec<_> = cfg.precoders.iter().map(|k| k.build(&cfg.bcd)).collect();
    let total = cfg.trials * cfg.snr_db_grid.len();
    let quiet = a.quiet;
    let step = (total / 100).max(1);
    let started = Instant::now();
    let report = move |p: Progress| {
        if !quiet && (p.completed.is_multiple_of(step) || p.completed == p.total) {
            eprint!("\r{}/{} cells, {:.1}s", p.completed, p.total, started.elapsed().as_secs_f64());
        }
    };
    let records = run_sweep_with(&cfg, &precoders, &report)?;
    if !quiet {
        let _ = writeln!(err);
    }
    write_results(&records, &a.out)?;
    for r in &records {
        writeln!(
            out,
            "{:>10} {:>6.1} dB  ber {:.3e}  [{:.2e}, {:.2e}]  {:.2} ms",
            r.precoder, r.snr_db, r.ber, r.ci95_low, r.ci95_high, r.mean_runtime_ms
        )?;
    }
    writeln!(out, "wrote {}", a.out.display())?;
    Ok(())
}

fn precode(a: PrecodeArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load(a.config.as_ref(), &a.common)?;
    cfg.validate()?;
    let kind: PrecoderKind = a.precoder.parse()?;
    let c = QamConstellation::new(cfg.qam_order)?;
    let mut rng = RngStream::for_cell(cfg.base_seed, a.trial, 0);
    let h = gen_rayleigh_channel(cfg.users, cfg.antennas, &mut rng)?;
    let bits: Vec<bool> = (0..cfg.bits_per_block()).map(|_| rng.random()).collect();
    let s = map_bits(&bits, cfg.users, &c)?;

    let started = Instant::now();
    let r = kind.build(&cfg.bcd).precode(&h, &s, &c, cfg.power)?;
    let ms = started.elapsed().as_secs_f64() * 1e3;

    writeln!(out, "precoder          {kind}")?;
    writeln!(out, "N K T qam         {} {} {} {}", cfg.antennas, cfg.users, cfg.block_len, c.size())?;
    writeln!(out, "seed trial        {} {}", cfg.base_seed, a.trial)?;
    writeln!(out, "d                 {}", r.gain)?;
    match r.binarity_gap {
        Some(g) => writeln!(out, "binarity gap      {g:e}")?,
        None => writeln!(out, "binarity gap      n/a")?,
    }
    writeln!(
        out,
        "minimax objective {} (row {}, time {})",
        r.final_objective.value, r.final_objective.row, r.final_objective.time
    )?;
    writeln!(out, "bcd iterations    {}", r.bcd_iterations)?;
    writeln!(out, "fista iterations  {}", r.fista_iterations_total)?;
    writeln!(out, "runtime           {ms:.2} ms")?;

    if let Some(path) = &a.trace_out {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["iteration", "phase", "lambda", "step", "smoothed", "exact", "penalty_gap", "fista_iterations"])?;
        for e in r.solver.iter().flat_map(|s| &s.trace) {
            let step = match e.step {
                BcdStep::PhaseStart => "phase-start",
                BcdStep::Inner => "inner",
                BcdStep::Auxiliary => "auxiliary",
            };
            w.write_record([
                e.iteration.to_string(),
                e.phase.to_string(),
                e.lambda.to_string(),
                step.to_string(),
                e.smoothed.to_string(),
                e.exact.to_string(),
                e.penalty_gap.to_string(),
                e.fista_iterations.to_string(),
            ])?;
        }
        w.flush()?;
        writeln!(out, "trace             {}", path.display())?;
    }
    Ok(())
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load(a.config.as_ref(), &a.common)?;
    if let Some(p) = &a.precoders {
        cfg.set("precoder_list", p)?;
    }
    cfg.validate()?;
    if a.reps == 0 {
        return Err(Error::Config("--reps must be at least 1".into()));
    }
    let c = QamConstellation::new(cfg.qam_order)?;
    writeln!(
        out,
        "N={} K={} T={} {}-QAM, {} reps, single-threaded",
        cfg.antennas,
        cfg.users,
        cfg.block_len,
        c.size(),
        a.reps
    )?;
    for kind in &cfg.precoders {
        let p = kind.build(&cfg.bcd);
        let mut times = Vec::with_capacity(a.reps as usize);
        for rep in 0..a.reps {
            let mut rng = RngStream::for_cell(cfg.base_seed, rep, 0);
            let h = gen_rayleigh_channel(cfg.users, cfg.antennas, &mut rng)?;
            let bits: Vec<bool> = (0..cfg.bits_per_block()).map(|_| rng.random()).collect();
            let s = map_bits(&bits, cfg.users, &c)?;
            let started = Instant::now();
            p.precode(&h, &s, &c, cfg.power)?;
            times.push(started.elapsed().as_secs_f64() * 1e3);
        }
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        let min = times.iter().copied().fold(f64::INFINITY, f64::min);
        let max = times.iter().copied().fold(0.0, f64::max);
        writeln!(out, "{:>10}  mean {mean:9.3} ms  min {min:9.3} ms  max {max:9.3} ms", kind.as_str())?;
    }
    Ok(())
}
