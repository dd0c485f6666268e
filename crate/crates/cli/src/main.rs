use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use qsc_core::harness::{
    run_experiment, verify_family, write_atomic, Assertions, AttackConfig, ExperimentConfig,
    OutputFormat, SweepGrid, Tolerances,
};
use qsc_core::zoo::{BaseTable, ZooFamily, DEFAULT_DIM_CAP, FAMILY_NAMES};
use qsc_core::Error;

const EXIT_ASSERTION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DIM_CAP: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(
    name = "qsc",
    version,
    about = "Delayed-measurement EPR attacks on quantum two-party protocols"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; defaults to the config's output path, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Protocol families.
    Zoo {
        #[command(subcommand)]
        command: ZooCommand,
    },
    /// Run the invariant suite for one family.
    Verify {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Noise sweep over the noisy family on an oblivious-id base.
    Sweep {
        #[arg(long)]
        family: String,
        /// e.g. `leak=0,0.1,0.2;meas=0,0.05`
        #[arg(long)]
        grid: String,
        /// Size of the oblivious-id base table.
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum ZooCommand {
    /// Print the family names.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::DimensionCap { .. } => EXIT_DIM_CAP,
        Error::Numerical(_) | Error::Io(_) => EXIT_RUNTIME,
        _ => EXIT_USAGE,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("qsc: {e}");
    ExitCode::from(exit_for(&e))
}

fn family_summary(name: &str) -> &'static str {
    match name {
        "ideal" => "one-sided protocol for an arbitrary function table",
        "ot" => "one-out-of-two oblivious transfer of k-bit messages",
        "oblivious-id" => "one-way oblivious identification, f(i,j) = [i = j]",
        "two-sided-xor" => "two-sided protocol with outputs f(i,j) XOR r",
        "noisy" => "one-sided protocol with leak and blur noise",
        _ => "",
    }
}

fn emit(cfg: &ExperimentConfig, out: Option<PathBuf>, format: Option<OutputFormat>) -> ExitCode {
    let start = Instant::now();
    let report = match run_experiment(cfg) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let target = out.or_else(|| cfg.output.as_ref().map(|o| o.path.clone()));
    let format = format
        .or_else(|| cfg.output.as_ref().map(|o| o.format))
        .unwrap_or_default();
    let text = match report.render(format) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    match &target {
        Some(path) => {
            if let Err(e) = write_atomic(path, &text) {
                return fail(e);
            }
        }
        None => print!("{text}"),
    }
    eprintln!("qsc: finished in {:.3} s", start.elapsed().as_secs_f64());
    for a in report.assertions.iter().filter(|a| !a.passed) {
        eprintln!(
            "qsc: assertion {} failed: expected {}, got {}",
            a.name, a.expected, a.actual
        );
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ASSERTION)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            format,
        } => {
            let mut cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            emit(&cfg, out, format.map(Into::into))
        }
        Command::Zoo {
            command: ZooCommand::List,
        } => {
            for name in FAMILY_NAMES {
                println!("{name:<14} {}", family_summary(name));
            }
            ExitCode::SUCCESS
        }
        Command::Verify { family, n, m, seed } => {
            let start = Instant::now();
            let checks = match verify_family(&family, n, m, seed) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let mut ok = true;
            for c in &checks {
                ok &= c.passed;
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag} {:<28} {}", c.name, c.detail);
            }
            eprintln!("qsc: finished in {:.3} s", start.elapsed().as_secs_f64());
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_ASSERTION)
            }
        }
        Command::Sweep {
            family,
            grid,
            n,
            seed,
            out,
            format,
        } => {
            if family != "noisy" {
                return fail(Error::Config(format!(
                    "sweep needs --family noisy, got `{family}`"
                )));
            }
            let grid = match SweepGrid::parse(&grid) {
                Ok(g) => g,
                Err(e) => return fail(e),
            };
            let cfg = ExperimentConfig {
                protocol: ZooFamily::Noisy {
                    base: BaseTable::ObliviousId { n },
                    theta_leak: 0.0,
                    theta_meas: 0.0,
                },
                attack: AttackConfig::default(),
                sweep: Some(grid),
                seed,
                tolerances: Tolerances::default(),
                dim_cap: DEFAULT_DIM_CAP,
                output: None,
                assertions: Assertions::default(),
            };
            if let Err(e) = cfg.validate() {
                return fail(e);
            }
            emit(&cfg, out, Some(format.into()))
        }
    }
}
