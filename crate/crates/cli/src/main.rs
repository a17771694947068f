//! `spinthermal`: thermal entanglement of two spins, alone or inside a
//! disordered XXZ chain, written out as CSV tables plus a JSON manifest.
//!
//! Exit codes: 0 success, 1 compute error, 2 usage error.

mod commands;
mod output;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::{sha256_hex, write_run, Manifest, TOOL};
use params::{max_sites_from_env, parse_grid, parse_pair, Kind, Params};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Compute(e)
    }
}

#[derive(Parser)]
#[command(
    name = "spinthermal",
    version,
    about = "Thermal entanglement in disordered spin chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form concurrence and EoF of two spins over a (Δh, β) grid.
    TwoSpin(Flags),
    /// Threshold inverse temperature per detuning.
    Threshold(Flags),
    /// Reduced-pair entanglement and energy of single disorder realizations.
    Chain(Flags),
    /// Effective two-spin fit of chain-induced states.
    Fit(Flags),
    /// Disorder-averaged entanglement statistics.
    Ensemble(Flags),
    /// Entanglement against pair separation, with the vanishing separation.
    Distance(Flags),
    /// Recompute the outputs of a manifest and compare checksums.
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
struct Flags {
    /// Exchange coupling.
    #[arg(long = "J", allow_negative_numbers = true)]
    j: Option<f64>,
    /// Anisotropy.
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Chain length.
    #[arg(long = "L")]
    sites: Option<usize>,
    /// Disorder strength; repeatable.
    #[arg(long = "lambda")]
    lambda: Vec<f64>,
    /// Inverse temperature `x` or inclusive range `a:b:step`; repeatable.
    #[arg(long = "beta", value_parser = parse_grid, action = clap::ArgAction::Append)]
    beta: Vec<Vec<f64>>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Master seed; random when omitted, always recorded.
    #[arg(long)]
    seed: Option<u64>,
    /// Centered-pair separation; repeatable.
    #[arg(long = "separation")]
    separation: Vec<usize>,
    /// Explicit pair `i,j` (1-based).
    #[arg(long, value_parser = parse_pair)]
    pair: Option<[usize; 2]>,
    /// Field sum h1 + h2 for two-spin commands.
    #[arg(long, allow_negative_numbers = true)]
    hsum: Option<f64>,
    /// Detuning (h1 - h2)/J, `x` or `a:b:step`; repeatable.
    #[arg(long = "dh", value_parser = parse_grid, action = clap::ArgAction::Append, allow_negative_numbers = true)]
    dh: Vec<Vec<f64>>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "spinthermal-out")]
    out: PathBuf,
    /// JSON file with parameter overrides.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    manifest: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    /// Also write the recomputed files here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve(kind: Kind, f: &Flags) -> Result<Params, Failure> {
    let mut p = match &f.config {
        Some(path) => Params::from_file(kind, path)?,
        None => Params::defaults(kind),
    };
    if let Some(v) = f.j {
        p.j = v;
    }
    if let Some(v) = f.gamma {
        p.gamma = v;
    }
    if let Some(v) = f.sites {
        p.sites = v;
    }
    if !f.lambda.is_empty() {
        p.lambdas = f.lambda.clone();
    }
    if !f.beta.is_empty() {
        p.betas = f.beta.concat();
    }
    if let Some(v) = f.realizations {
        p.realizations = v;
    }
    if f.seed.is_some() {
        p.seed = f.seed;
    }
    if !f.separation.is_empty() {
        p.separations = f.separation.clone();
    }
    if f.pair.is_some() {
        p.pair = f.pair;
    }
    if let Some(v) = f.hsum {
        p.hsum = v;
    }
    if !f.dh.is_empty() {
        p.delta_h = f.dh.concat();
    }
    if p.seed.is_none() {
        p.seed = Some(rand::random());
    }
    Ok(p)
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    job: impl FnOnce() -> T + Send,
) -> Result<T, Failure> {
    match threads {
        None => Ok(job()),
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Compute(e.into()))?;
            Ok(pool.install(job))
        }
    }
}

fn run(kind: Kind, flags: &Flags) -> Result<(), Failure> {
    let params = resolve(kind, flags)?;
    let max_sites = max_sites_from_env()?;
    let outcome = with_threads(flags.threads, || {
        commands::execute(kind, &params, max_sites)
    })??;
    let manifest = write_run(&flags.out, kind, &params, flags.threads, &outcome.files)?;
    for name in manifest.outputs.keys() {
        eprintln!("wrote {}", flags.out.join(name).display());
    }
    eprintln!("seed {}", manifest.seed);
    if !outcome.failures.is_empty() {
        return Err(Failure::Compute(anyhow::anyhow!(
            "{} realization(s) failed; see failures.csv",
            outcome.failures.len()
        )));
    }
    Ok(())
}

fn replay(args: &ReplayArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.manifest)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.manifest.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("invalid manifest: {e}")))?;
    if manifest.tool != TOOL {
        return Err(Failure::Usage(format!(
            "manifest was written by {:?}",
            manifest.tool
        )));
    }
    let kind = manifest.command;
    let max_sites = max_sites_from_env()?;
    let outcome = with_threads(args.threads, || {
        commands::execute(kind, &manifest.config, max_sites)
    })??;
    if let Some(dir) = &args.out {
        write_run(dir, kind, &manifest.config, args.threads, &outcome.files)?;
    }

    let mut mismatches = 0;
    for (name, bytes) in &outcome.files {
        let got = sha256_hex(bytes);
        let verdict = match manifest.outputs.get(name) {
            Some(want) if *want == got => "ok",
            Some(_) => "MISMATCH",
            None => "UNEXPECTED",
        };
        if verdict != "ok" {
            mismatches += 1;
        }
        println!("{verdict} {name} {got}");
    }
    for name in manifest.outputs.keys() {
        if !outcome.files.iter().any(|(n, _)| n == name) {
            mismatches += 1;
            println!("MISSING {name}");
        }
    }
    if mismatches > 0 {
        return Err(Failure::Compute(anyhow::anyhow!(
            "{mismatches} output(s) differ from {}",
            args.manifest.display()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::TwoSpin(f) => run(Kind::TwoSpin, f),
        Command::Threshold(f) => run(Kind::Threshold, f),
        Command::Chain(f) => run(Kind::Chain, f),
        Command::Fit(f) => run(Kind::Fit, f),
        Command::Ensemble(f) => run(Kind::Ensemble, f),
        Command::Distance(f) => run(Kind::Distance, f),
        Command::Replay(a) => replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
