use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use spectrum_market::config::parse_scenario;
use spectrum_market::equilibrium::equilibrium_at;
use spectrum_market::format::round_json;
use spectrum_market::oracle::{self, BackwardInduction, Budgets, ClosedFormSolver, Corrupted};
use spectrum_market::simulator::{self, AxisGrid};
use spectrum_market::{Error, Scenario};

const MIN_GRID_DENSITY: usize = 1_000;
const MIN_MC_SAMPLES: usize = 10_000;

#[derive(Parser)]
#[command(
    name = "spectrum",
    version,
    about = "Spectrum market equilibrium solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equilibrium for one realization and print it as JSON.
    Solve(SolveArgs),
    /// Sweep one or two parameters and write a CSV table.
    Sweep(SweepArgs),
    /// Play a sequence of slots and write the per-slot trace as CSV.
    Simulate(SimulateArgs),
    /// Verify the solver against brute-force enumeration.
    Check(CheckArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Realized fraction of sensed bandwidth; defaults to the law's mean.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// `axis=lo:hi:step` with axis one of cs, cl, alpha. At most twice.
    #[arg(long, required = true)]
    vary: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    slots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    grid_density: usize,
    #[arg(long, default_value_t = 100_000)]
    mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random cost variations checked besides the configured scenario.
    #[arg(long, default_value_t = 20)]
    random: usize,
    #[arg(long, hide = true)]
    corrupt_fixture: bool,
}

/// Failure carrying its exit status.
struct Failure {
    code: u8,
    body: Value,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.kind() {
            "io" => 3,
            "numeric" => 1,
            _ => 2,
        };
        Failure {
            code,
            body: json!({"kind": e.kind(), "message": e.to_string()}),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        body: json!({"kind": "usage", "message": message.into()}),
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(parse_scenario(&text)?)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn print_json(mut value: Value) {
    round_json(&mut value);
    println!("{value}");
}

fn solve(args: SolveArgs) -> Result<u8, Failure> {
    if let Some(a) = args.alpha {
        if !(0.0..=1.0).contains(&a) {
            return Err(usage(format!("--alpha must lie in [0, 1], got {a}")));
        }
    }
    let scenario = load(&args.config)?;
    let alpha = args.alpha.unwrap_or_else(|| scenario.alpha().mean());
    let outcome = equilibrium_at(&scenario, alpha)?;
    print_json(serde_json::to_value(outcome).expect("outcomes serialize"));
    Ok(0)
}

fn sweep(args: SweepArgs) -> Result<u8, Failure> {
    let axes = args
        .vary
        .iter()
        .map(|v| AxisGrid::parse(v))
        .collect::<Result<Vec<_>, _>>()?;
    if axes.len() > 2 {
        return Err(usage("at most two --vary axes"));
    }
    let scenario = load(&args.config)?;
    let rows = simulator::sweep(&scenario, &axes)?;
    let mut out = create(&args.out)?;
    simulator::write_sweep_csv(&rows, &mut out)?;
    out.flush().map_err(Error::from)?;
    print_json(json!({"rows": rows.len(), "out": args.out.display().to_string()}));
    Ok(0)
}

fn simulate(args: SimulateArgs) -> Result<u8, Failure> {
    if args.slots == 0 {
        return Err(usage("--slots must be at least 1"));
    }
    let scenario = load(&args.config)?;
    let trace = simulator::run(&scenario, args.slots, args.seed)?;
    let mut out = create(&args.out)?;
    trace.write_csv(&mut out)?;
    out.flush().map_err(Error::from)?;
    print_json(json!({
        "slots": args.slots,
        "seed": args.seed,
        "b_s": trace.sensing.b_s_star,
        "mean_profit": trace.mean_profit,
        "mean_profit_baseline": trace.mean_profit_baseline,
        "profit_standard_error": trace.profit_standard_error(),
        "price_change_fraction": trace.price_change_fraction(),
    }));
    Ok(0)
}

fn check(args: CheckArgs) -> Result<u8, Failure> {
    if args.grid_density < MIN_GRID_DENSITY {
        return Err(usage(format!(
            "--grid-density must be at least {MIN_GRID_DENSITY}"
        )));
    }
    if args.mc_samples < MIN_MC_SAMPLES {
        return Err(usage(format!(
            "--mc-samples must be at least {MIN_MC_SAMPLES}"
        )));
    }
    let scenario = load(&args.config)?;
    let mut batch = vec![scenario.clone()];
    batch.extend(oracle::random_scenarios(&scenario, args.random, args.seed)?);
    let budgets = Budgets {
        grid_density: args.grid_density,
        mc_samples: args.mc_samples,
        seed: args.seed,
        ..Budgets::default()
    };
    let corrupted = Corrupted {
        inner: BackwardInduction,
        factor: 1.1,
    };
    let solver: &dyn ClosedFormSolver = if args.corrupt_fixture {
        &corrupted
    } else {
        &BackwardInduction
    };
    let reports = oracle::end_to_end_check(solver, &batch, &budgets);
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    for r in &reports {
        writeln!(lock, "{}", r.to_json_line()).map_err(Error::from)?;
    }
    Ok(if reports.iter().all(|r| r.passed) {
        0
    } else {
        1
    })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("SPECTRUM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| {
        usage(format!(
            "SPECTRUM_THREADS must be a non-negative integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Simulate(a) => simulate(a),
        Command::Check(a) => check(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", f.body);
            ExitCode::from(f.code)
        }
    }
}
