use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use constrained_matching::analytic::{mc_pn, mc_pnk_partial_all, partial_bound};
use constrained_matching::enumeration::enumerate_stable;
use constrained_matching::experiments::{
    emit, parse_stats, render, threshold, Format, Mode, PSpec, SweepConfig,
};
use constrained_matching::instance::{generate_dense, read_instance};
use constrained_matching::matching::{propose, propose_lazy};
use constrained_matching::spacings::lemma2_check;
use constrained_matching::{Error, LazyInstance, Result, Side, StreamSpec};

/// Random stable matching experiments with admissibility constraints.
#[derive(Parser)]
#[command(name = "cmatch", version)]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the proposal algorithm on one random instance.
    Simulate(SimulateArgs),
    /// List every stable matching of a small instance.
    Enumerate(EnumerateArgs),
    /// Monte Carlo estimates of the stability integrals.
    Estimate(EstimateArgs),
    /// Empirical check of the maximal-spacing and square-sum limits.
    Spacings(SpacingsArgs),
    /// Run a parameter grid and write one row per (n, p) cell.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Prob {
    /// Admissibility probability.
    #[arg(long, conflicts_with = "c")]
    p: Option<f64>,
    /// Multiplier of (ln n)^2 / n, capped at 1.
    #[arg(long)]
    c: Option<f64>,
}

impl Prob {
    fn resolve(&self, n: usize) -> Result<f64> {
        match (self.p, self.c) {
            (Some(p), _) => Ok(p),
            (None, Some(c)) if n >= 2 && c >= 0.0 => Ok((c * threshold(n)).min(1.0)),
            (None, Some(_)) => Err(Error::Config("--c needs n >= 2 and c >= 0".into())),
            (None, None) => Err(Error::Config("one of --p or --c is required".into())),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    prob: Prob,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "dense")]
    mode: Mode,
    #[arg(long, default_value = "men")]
    proposer: Side,
    /// Include the matched pairs in the output.
    #[arg(long)]
    pairs: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long, required_unless_present = "input")]
    n: Option<usize>,
    #[command(flatten)]
    prob: Prob,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Read the instance from a file instead of generating one.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Quantity {
    /// Probability that the diagonal matching is stable, and E[S_n].
    Pn,
    /// The same split by total wife rank; with --ell, the partial version.
    Pnk,
    /// Bounds on the probability of exactly --ell matched pairs.
    Bound,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, value_enum, default_value = "pn")]
    what: Quantity,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    ell: Option<usize>,
    #[command(flatten)]
    prob: Prob,
    /// Monte Carlo samples.
    #[arg(long, alias = "samples", default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpacingsArgs {
    #[arg(long, alias = "n", default_value_t = 100_000)]
    ell: usize,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Flat key = value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', conflicts_with = "c")]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    c: Vec<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<Mode>,
    /// Comma separated subset of the statistics.
    #[arg(long)]
    stats: Option<String>,
    /// Record summed trial time per row.
    #[arg(long)]
    timing: bool,
    #[arg(long, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json(value: serde_json::Value, out: Option<&Path>) -> Result<()> {
    write_text(&format!("{value:#}\n"), out)
}

fn to_json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let p = args.prob.resolve(args.n)?;
    let spec = StreamSpec::new(args.seed, 0);
    let start = Instant::now();
    let (outcome, stored) = match args.mode {
        Mode::Dense => (
            propose(&generate_dense(args.n, p, spec)?, args.proposer),
            None,
        ),
        Mode::Lazy => {
            let mut inst = LazyInstance::new(args.n, p, spec)?;
            let outcome = propose_lazy(&mut inst, args.proposer)?;
            (outcome, Some(inst.stored_entries()))
        }
    };
    let mut report = json!({
        "n": args.n,
        "p": p,
        "mode": args.mode,
        "proposer": outcome.proposer,
        "size": outcome.size,
        "unmatched": args.n - outcome.size,
        "proposals": outcome.proposals,
        "Q": outcome.q,
        "R": outcome.r,
        "stored_entries": stored,
        "elapsed_s": start.elapsed().as_secs_f64(),
    });
    if args.pairs {
        report["pairs"] = to_json(&outcome.matching.pairs());
    }
    write_json(report, args.out.as_deref())
}

fn enumerate(args: EnumerateArgs) -> Result<()> {
    let inst = match (&args.input, args.n) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            read_instance(&text)?
        }
        (None, Some(n)) => generate_dense(n, args.prob.resolve(n)?, StreamSpec::new(args.seed, 0))?,
        (None, None) => unreachable!("clap requires --n or --input"),
    };
    let set = enumerate_stable(&inst)?;
    let mut report = to_json(&set);
    report["count"] = json!(set.len());
    report["matchings"] = to_json(&set.matchings().map(|m| m.pairs()).collect::<Vec<_>>());
    write_json(report, args.out.as_deref())
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let p = args.prob.resolve(args.n)?;
    let spec = StreamSpec::new(args.seed, 0);
    let report = match args.what {
        Quantity::Pn => to_json(&mc_pn(args.n, p, args.trials, spec)?),
        Quantity::Pnk => {
            let ell = args.ell.unwrap_or(args.n);
            let terms = mc_pnk_partial_all(args.n, ell, p, args.trials, spec)?;
            let first = if ell == 0 { 0 } else { ell };
            let rows: Vec<_> = terms
                .iter()
                .enumerate()
                .map(|(i, e)| json!({ "k": first + i, "mean": e.mean, "se": e.se }))
                .collect();
            json!({ "n": args.n, "ell": ell, "p": p, "samples": args.trials, "terms": rows })
        }
        Quantity::Bound => {
            let ell = args
                .ell
                .ok_or_else(|| Error::Config("--what bound needs --ell".into()))?;
            to_json(&partial_bound(args.n, ell, p, args.trials, spec)?)
        }
    };
    write_json(report, args.out.as_deref())
}

fn spacings(args: SpacingsArgs) -> Result<()> {
    let report = lemma2_check(
        args.ell,
        args.trials,
        args.rho,
        args.delta,
        StreamSpec::new(args.seed, 0),
    )?;
    write_json(to_json(&report), args.out.as_deref())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            SweepConfig::parse(&text)?
        }
        None => SweepConfig::new(Vec::new(), PSpec::Absolute(Vec::new()), 0, 0),
    };
    if !args.n.is_empty() {
        config.n_values = args.n;
    }
    if !args.p.is_empty() {
        config.p_spec = PSpec::Absolute(args.p);
    } else if !args.c.is_empty() {
        config.p_spec = PSpec::Multiplier(args.c);
    }
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if let Some(s) = args.seed {
        config.master_seed = s;
    }
    if let Some(m) = args.mode {
        config.mode = m;
    }
    if let Some(s) = &args.stats {
        config.statistics = parse_stats(s)?;
    }
    config.timing |= args.timing;
    config.validate()?;
    let rows = constrained_matching::experiments::run_sweep(&config)?;
    match &args.out {
        Some(path) => emit(&rows, args.format, path),
        None => write_text(&render(&rows, args.format), None),
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Enumerate(a) => enumerate(a),
        Command::Estimate(a) => estimate(a),
        Command::Spacings(a) => spacings(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
