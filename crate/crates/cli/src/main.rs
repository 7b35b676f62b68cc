use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use e1lab_core::cli_io::record::Table;
use e1lab_core::cli_io::runner::{error_dump, exit_code, run, Command, RunOutput};
use e1lab_core::cli_io::scenario::Scenario;
use e1lab_core::cli_io::suite::CheckLevel;
use e1lab_core::Error;

/// Discrete L¹ geometry of potentials on the circle.
#[derive(Parser)]
#[command(name = "e1lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// The extremal potential V_θ.
    Venv(Common),
    /// Largest θ-subharmonic potential below an obstacle.
    Envelope(Common),
    /// Monge–Ampère energy of the scenario potentials.
    Energy(Common),
    /// d₁ distance, I₁ and the comparison bound.
    Dist(Common),
    /// Weak geodesic segment with its verification report.
    Geodesic(Common),
    /// Geodesic ray from a pole test curve, with the duality report.
    Ray(Common),
    /// Completeness construction along a Cauchy sequence.
    Cauchy(Common),
    /// The property suite; exits 0 iff every criterion passes.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON; every field has a default.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory for results.json and CSV tables.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the grid size (ignored by `check`, whose sizes follow the level).
    #[arg(long)]
    n: Option<usize>,
    /// Overrides the suite level.
    #[arg(long, value_enum)]
    check_level: Option<Level>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Fast,
    Full,
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::Venv(c) => (Command::Venv, c),
            Sub::Envelope(c) => (Command::Envelope, c),
            Sub::Energy(c) => (Command::Energy, c),
            Sub::Dist(c) => (Command::Dist, c),
            Sub::Geodesic(c) => (Command::Geodesic, c),
            Sub::Ray(c) => (Command::Ray, c),
            Sub::Cauchy(c) => (Command::Cauchy, c),
            Sub::Check(c) => (Command::Check, c),
        }
    }
}

fn load(args: &Common) -> Result<Scenario, Error> {
    let mut scenario = match &args.scenario {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
            Scenario::from_json(&text)?
        }
        None => Scenario::default(),
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(n) = args.n {
        scenario.n = n;
    }
    if let Some(level) = args.check_level {
        scenario.check.level = match level {
            Level::Fast => CheckLevel::Fast,
            Level::Full => CheckLevel::Full,
        };
    }
    Ok(scenario)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("E1LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Scenario(format!("E1LAB_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Parameter(e.to_string()))
}

fn write_table(dir: &Path, table: &Table) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", table.name)))?;
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|x| format!("{x:.16e}")))?;
    }
    w.flush()
}

fn emit(dir: &Path, out: &RunOutput) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.json"), out.record.to_json_pretty() + "\n")?;
    for table in &out.tables {
        write_table(dir, table)?;
    }
    Ok(())
}

fn report(command: Command, out: &RunOutput) {
    for c in &out.criteria {
        println!("{}", c.line());
    }
    let claims = out
        .criteria
        .is_empty()
        .then(|| out.record.failed_claims())
        .into_iter()
        .flatten();
    for claim in claims {
        println!(
            "FAIL {}: {:e} vs bound {:e} (tolerance {:e})",
            claim.name, claim.value, claim.bound, claim.tolerance
        );
    }
    let verdict = if out.record.pass() { "pass" } else { "fail" };
    println!("{} {verdict} digest={}", command.name(), out.record.digest);
}

fn fail(command: Command, dir: &Path, e: &Error) -> ExitCode {
    let code = exit_code(e);
    eprintln!("e1lab {}: {e}", command.name());
    if code == 3 {
        let dumped = fs::create_dir_all(dir).and_then(|_| fs::write(dir.join("residual.json"), error_dump(command, e)));
        if let Err(io) = dumped {
            eprintln!("could not write residual dump: {io}");
        }
    }
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let (command, args) = Cli::parse().command.split();
    if let Err(e) = configure_threads() {
        return fail(command, &args.out, &e);
    }
    let result = load(&args).and_then(|s| run(command, &s));
    match result {
        Ok(out) => {
            if let Err(io) = emit(&args.out, &out) {
                eprintln!("e1lab {}: cannot write {}: {io}", command.name(), args.out.display());
                return ExitCode::from(1);
            }
            report(command, &out);
            ExitCode::from(if out.record.pass() { 0 } else { 1 })
        }
        Err(e) => fail(command, &args.out, &e),
    }
}
