use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use toml::Table;
use wigmatch::io::save_instance;
use wigmatch::model::generate;
use wigmatch::pipeline::{
    constants, run_trials, sweep, write_sweep_csv, RunConfig, SweepGrid,
};
use wigmatch::selftest::run_selftest;
use wigmatch::Error;

/// Seeded matching of correlated Gaussian Wigner matrices under adversarial
/// principal-minor corruption.
#[derive(Parser)]
#[command(name = "wigmatch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline and emit a JSON manifest.
    Run(RunArgs),
    /// Run a grid of configurations and emit a CSV table.
    Sweep(SweepArgs),
    /// Execute the built-in property checks.
    Selftest,
    /// Print reference constants.
    Constants(ConstantsArgs),
}

/// Flags mirroring the config-file keys one to one.
#[derive(Args, Serialize, Default)]
struct ConfigFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    strategy: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    magnitude: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k0: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    min_rounds: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    bandwidth: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    divisor: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_resamples: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold_mult: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pi_mode: Option<String>,
    /// oracle-seed or tiny-enumeration.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    /// practical or paper-constants.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    instance_seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    corruption_seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    good_seed_pairs: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    bad_seed_pairs: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dump: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: ConfigFlags,
}

/// Grid axes; each defaults to the single value of the base config.
#[derive(Args, Serialize, Default)]
struct GridFlags {
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_n: Option<Vec<i64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_rho: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_epsilon: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_strategy: Option<Vec<String>>,
    /// JSON summary path.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: ConfigFlags,
    #[command(flatten)]
    grid: GridFlags,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long, default_value_t = 0.8)]
    rho: f64,
    #[arg(long, default_value_t = wigmatch::denoiser::DEFAULT_BANDWIDTH)]
    bandwidth: f64,
}

/// Failure with a process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn config_failure(msg: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: format!("configuration error: {msg}"),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    config_failure(format!("{}: {e}", path.display()))
}

fn load_table(path: Option<&Path>) -> Result<Table, Failure> {
    match path {
        None => Ok(Table::new()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_failure(p, e))?;
            text.parse::<Table>().map_err(|e| config_failure(format!("{}: {e}", p.display())))
        }
    }
}

fn overlay(table: &mut Table, flags: &impl Serialize) -> Result<(), Failure> {
    let over = Table::try_from(flags).map_err(config_failure)?;
    table.extend(over);
    Ok(())
}

fn into_config(table: Table) -> Result<RunConfig, Failure> {
    let cfg: RunConfig = table.try_into().map_err(config_failure)?;
    cfg.validate()?;
    Ok(cfg)
}

fn write_output(path: Option<&str>, body: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| io_failure(Path::new(p), e)),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut table = load_table(args.config.as_deref())?;
    overlay(&mut table, &args.flags)?;
    let cfg = into_config(table)?;
    if let Some(path) = &cfg.dump {
        let seeds = cfg.stream_seeds();
        let inst = generate(cfg.n, cfg.rho, cfg.pi_mode()?, seeds.instance)?;
        save_instance(Path::new(path), &inst)?;
    }
    let records = run_trials(&cfg);
    let body = if records.len() == 1 {
        serde_json::to_string_pretty(&records[0])
    } else {
        serde_json::to_string_pretty(&records)
    }
    .map_err(Error::from)?;
    write_output(cfg.output.as_deref(), &body)?;
    match records.iter().find(|r| !r.is_ok()) {
        Some(r) => Err(Failure {
            code: r.exit_code as u8,
            message: format!(
                "run failed at stage {}: {}",
                r.failure_stage.as_deref().unwrap_or("?"),
                r.error.as_deref().unwrap_or("")
            ),
        }),
        None => Ok(()),
    }
}

const GRID_KEYS: [&str; 5] = ["grid_n", "grid_rho", "grid_epsilon", "grid_strategy", "summary"];

fn axis<T: serde::de::DeserializeOwned>(t: &Table, key: &str, base: T) -> Result<Vec<T>, Failure> {
    match t.get(key) {
        Some(v) => v.clone().try_into().map_err(|e| config_failure(format!("{key}: {e}"))),
        None => Ok(vec![base]),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut table = load_table(args.config.as_deref())?;
    overlay(&mut table, &args.flags)?;
    overlay(&mut table, &args.grid)?;
    let mut grid_table = Table::new();
    for k in GRID_KEYS {
        if let Some(v) = table.remove(k) {
            grid_table.insert(k.into(), v);
        }
    }
    let base = into_config(table)?;
    let grid = SweepGrid {
        n: axis(&grid_table, "grid_n", base.n)?,
        rho: axis(&grid_table, "grid_rho", base.rho)?,
        epsilon: axis(&grid_table, "grid_epsilon", base.epsilon)?,
        strategy: axis(&grid_table, "grid_strategy", base.strategy.clone())?,
    };
    for cell in grid.cells(&base) {
        cell.validate()?;
    }
    let result = sweep(&base, &grid);
    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &result.rows)?;
    let csv = String::from_utf8(csv).map_err(config_failure)?;
    match base.output.as_deref() {
        Some(p) => fs::write(p, &csv).map_err(|e| io_failure(Path::new(p), e))?,
        None => print!("{csv}"),
    }
    let summary = serde_json::to_string_pretty(&result.summary).map_err(Error::from)?;
    match grid_table.get("summary").and_then(|v| v.as_str().map(str::to_owned)) {
        Some(p) => fs::write(&p, summary).map_err(|e| io_failure(Path::new(&p), e))?,
        None => eprintln!("{summary}"),
    }
    Ok(())
}

fn cmd_selftest() -> Result<(), Failure> {
    let results = run_selftest();
    let mut out = std::io::stdout().lock();
    for r in &results {
        let _ = writeln!(
            out,
            "{} {:<22} {:>8.3}s  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.seconds,
            r.detail
        );
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure {
            code: 3,
            message: format!("{failed} of {} checks failed", results.len()),
        })
    }
}

fn cmd_constants(args: ConstantsArgs) -> Result<(), Failure> {
    let c = constants(args.rho, args.bandwidth)?;
    println!("{}", serde_json::to_string_pretty(&c).map_err(Error::from)?);
    Ok(())
}

fn configure_workers() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("WIGMATCH_WORKERS") {
        let n: usize = v
            .parse()
            .map_err(|_| config_failure(format!("WIGMATCH_WORKERS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(config_failure("WIGMATCH_WORKERS must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(config_failure)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = configure_workers().and_then(|()| match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Selftest => cmd_selftest(),
        Command::Constants(a) => cmd_constants(a),
    });
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("wigmatch: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
