use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sparsim::bench::{self, BenchConfig, CsvSink};
use sparsim::{Capacity, Engine, EngineError, EngineKind, Family, StateError};

#[derive(Parser)]
#[command(name = "sparsim", version, about = "Sparse quantum circuit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a circuit file and print one outcome string per shot.
    Run {
        file: PathBuf,
        #[arg(long, default_value = "bitwise")]
        engine: EngineKind,
        /// Shot i uses seed + i; 0 seeds every shot from the OS.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// 0 runs once and only dumps the state.
        #[arg(long, default_value_t = 1)]
        shots: usize,
        /// Print the final state of the last shot.
        #[arg(long)]
        dump_state: bool,
    },
    /// Time a builtin circuit family over a range of sizes; CSV on stdout.
    Bench {
        scenario: Family,
        /// Sizes, e.g. `2..20` or `8,16,32,64` (ranges are inclusive).
        #[arg(long = "n", value_parser = parse_sizes)]
        sizes: Sizes,
        #[arg(long, value_delimiter = ',', default_value = "bitwise")]
        engines: Vec<EngineKind>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Classify each series of a benchmark CSV as linear- or exponential-like.
    Fit { csv: PathBuf },
}

#[derive(Clone)]
struct Sizes(Vec<usize>);

fn parse_sizes(s: &str) -> Result<Sizes, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?);
                if a > b {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("no sizes given".into());
    }
    Ok(Sizes(out))
}

enum Failure {
    Input(String),
    Capacity(String),
    Internal(String),
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::State(StateError::Capacity { .. }) => Failure::Capacity(e.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

fn io_failure(e: io::Error) -> Failure {
    Failure::Internal(e.to_string())
}

fn run_file(file: &PathBuf, engine: EngineKind, seed: u64, shots: usize, dump: bool) -> Result<(), Failure> {
    let text = fs::read_to_string(file).map_err(|e| Failure::Input(format!("{}: {e}", file.display())))?;
    let circuit = sparsim::parse(&text).map_err(|e| Failure::Input(format!("{}: {e}", file.display())))?;
    let cap = Capacity::from_env();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut last = None;
    for shot in 0..shots.max(1) {
        let shot_seed = if seed == 0 { 0 } else { seed.wrapping_add(shot as u64) };
        let result = sparsim::run(&circuit, engine, shot_seed, &cap)?;
        if shots > 0 {
            if let Some(bits) = &result.shot {
                writeln!(out, "{bits}").map_err(io_failure)?;
            }
        }
        last = Some(result.engine);
    }
    if dump || shots == 0 {
        if let Some(engine) = last {
            out.write_all(engine.dump().as_bytes()).map_err(io_failure)?;
        }
    }
    Ok(())
}

fn run_bench(cfg: BenchConfig) -> Result<(), Failure> {
    let mut sink = CsvSink::new(io::stdout()).map_err(|e| Failure::Internal(e.to_string()))?;
    let mut failure = None;
    bench::run_bench_with(&cfg, |record| {
        if failure.is_none() {
            failure = sink.write(&record).err();
        }
    });
    match failure {
        Some(e) => Err(Failure::Internal(e.to_string())),
        None => Ok(()),
    }
}

fn run_fit(csv: &PathBuf) -> Result<(), Failure> {
    let file = fs::File::open(csv).map_err(|e| Failure::Input(format!("{}: {e}", csv.display())))?;
    let records = bench::read_csv(file).map_err(|e| Failure::Input(format!("{}: {e}", csv.display())))?;
    println!("scenario,engine,points,shape,linear_slope,log2_slope,linear_residual,log2_residual");
    for fit in bench::fit_scaling(&records) {
        match fit {
            Ok(f) => println!(
                "{},{},{},{},{:.6e},{:.6},{:.6},{:.6}",
                f.scenario, f.engine, f.points, f.shape, f.linear.slope, f.exponential.slope, f.linear.residual,
                f.exponential.residual
            ),
            Err(e) => eprintln!("skipped: {e}"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { file, engine, seed, shots, dump_state } => run_file(&file, engine, seed, shots, dump_state),
        Command::Bench { scenario, sizes, engines, repeats, seed } => {
            let mut cfg = BenchConfig::new(scenario, sizes.0);
            cfg.engines = engines;
            cfg.repeats = repeats;
            cfg.seed = seed;
            run_bench(cfg)
        }
        Command::Fit { csv } => run_fit(&csv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Capacity(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
