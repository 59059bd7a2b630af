use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use anonroute::bench::{run_bench, write_csv, BenchConfig};
use anonroute::sim::{run_setup, SimConfig};

#[derive(Parser)]
#[command(name = "anonroute", version, about = "Anonymous routing demo and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run setup and a few epochs, checking every output against the permutation.
    Demo(DemoArgs),
    /// Time encryption and routing over an (n, b) grid and write CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DemoArgs {
    /// Number of senders.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Message width in bits.
    #[arg(long, default_value_t = 8)]
    b: u32,
    /// Number of epochs.
    #[arg(long, default_value_t = 3)]
    q: u64,
    #[arg(long, env = "ANONROUTE_SEED", default_value_t = 0)]
    seed: u64,
    /// Use the data-parallel router.
    #[arg(long)]
    parallel: bool,
    /// Write a line-per-message transcript here.
    #[arg(long, value_name = "PATH")]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated sender counts.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    n: Vec<usize>,
    /// Comma-separated message widths.
    #[arg(long, value_delimiter = ',', default_value = "6,7,8,9,10")]
    b: Vec<u32>,
    /// Measured epochs per grid point.
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, env = "ANONROUTE_SEED", default_value_t = 0)]
    seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long)]
    parallel: bool,
}

fn check_grid(ns: &[usize], bs: &[u32]) -> Result<()> {
    if let Some(n) = ns.iter().find(|&&n| n < 2) {
        bail!("--n must be at least 2, got {n}");
    }
    if let Some(b) = bs.iter().find(|&&b| b < 1) {
        bail!("--b must be at least 1, got {b}");
    }
    Ok(())
}

fn fmt_vec(xs: &[u64]) -> String {
    let parts: Vec<_> = xs.iter().map(u64::to_string).collect();
    format!("[{}]", parts.join(", "))
}

fn demo(args: DemoArgs) -> Result<bool> {
    check_grid(&[args.n], &[args.b])?;
    let mut cfg = SimConfig::new(args.n, args.b, args.q, args.seed);
    cfg.parallel = args.parallel;
    cfg.validate()?;
    let mut sim = run_setup(&cfg)?;
    println!(
        "setup: n={} b={} permutation attempts={}",
        args.n,
        args.b,
        sim.permutation_attempts()
    );
    let mut rng = ChaCha20Rng::seed_from_u64(args.seed ^ 0xde40);
    let mut ok = true;
    for _ in 0..args.q {
        let t = sim.next_epoch();
        let inputs: Vec<u64> = (0..args.n).map(|_| rng.gen_range(0..1u64 << args.b)).collect();
        let outputs = sim.run_epoch(&inputs, t)?;
        let matches = outputs == sim.expected_output(&inputs);
        ok &= matches;
        println!(
            "epoch {}: in={} out={} {}",
            t.0,
            fmt_vec(&inputs),
            fmt_vec(&outputs),
            if matches { "ok" } else { "MISMATCH" }
        );
    }
    if let Some(path) = &args.transcript {
        std::fs::write(path, sim.transcript().dump()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ok)
}

fn bench(args: BenchArgs) -> Result<()> {
    check_grid(&args.n, &args.b)?;
    let cfg = BenchConfig {
        ns: args.n,
        bits: args.b,
        reps: args.reps,
        seed: args.seed,
        parallel: args.parallel,
    };
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(io::stdout()),
    };
    let rows = run_bench(&cfg)?;
    let mut sink = BufWriter::new(sink);
    write_csv(&mut sink, &rows, cfg.parallel)?;
    sink.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Demo(args) => demo(args),
        Command::Bench(args) => bench(args).map(|()| true),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: routed output did not match the permuted input");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
