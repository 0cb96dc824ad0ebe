//! `steerkit run | preset | validate`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use steerkit::error::{CliError, CliResult};
use steerkit::output;
use steerkit::presets;
use steerkit::runner::{run, RunOptions, RunRecord};
use steerkit::scenario::Scenario;

#[derive(Parser)]
#[command(name = "steerkit", version, about = "Collective EPR steering in pulsed optomechanics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Print a built-in scenario, or run it with `--run`.
    Preset {
        /// One of fig3a, fig3b, fig4, inset, chan11, lehnert13, oracle, adiabatic, cross.
        name: String,
        #[arg(long)]
        run: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a scenario and fail when its discrepancy exceeds the tolerance.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Destination file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "STEERKIT_THREADS")]
    threads: Option<usize>,
    /// Also write an SVG preview next to the output file.
    #[arg(long)]
    svg: bool,
}

impl OutputArgs {
    fn options(&self) -> RunOptions {
        RunOptions { threads: self.threads, seed: self.seed }
    }
}

fn load(path: &Path) -> CliResult<Scenario> {
    let text = fs::read_to_string(path).map_err(CliError::io(format!("reading {}", path.display())))?;
    Scenario::from_json(&text)
}

fn emit(record: &RunRecord, args: &OutputArgs) -> CliResult<()> {
    let body = match args.format {
        Format::Csv => output::csv_string(record)?,
        Format::Json => output::json_string(record) + "\n",
    };
    let target = args.output.clone().or_else(|| record.scenario.output.clone().map(PathBuf::from));
    match &target {
        Some(path) => fs::write(path, body).map_err(CliError::io(format!("writing {}", path.display())))?,
        None => std::io::stdout().write_all(body.as_bytes()).map_err(CliError::io("writing standard output"))?,
    }
    if args.svg {
        let Some(path) = target else {
            return Err(CliError::Config("--svg needs an output file".into()));
        };
        if let Some(svg) = output::svg(record) {
            let path = path.with_extension("svg");
            fs::write(&path, svg).map_err(CliError::io(format!("writing {}", path.display())))?;
        }
    }
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn execute(scenario: &Scenario, args: &OutputArgs, strict: bool) -> CliResult<()> {
    let record = run(scenario, &args.options())?;
    emit(&record, args)?;
    match &record.validation {
        Some(v) if !v.passed => {
            Err(CliError::ValidationFailed { max_relative: v.max_relative, tolerance: v.tolerance })
        }
        None if strict => Err(CliError::Config(
            "validate needs a validation mode or engine \"both\" in curve/cross-correlation scenarios".into(),
        )),
        _ => Ok(()),
    }
}

fn main_inner(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, out } => execute(&load(&config)?, &out, false),
        Command::Validate { config, out } => execute(&load(&config)?, &out, true),
        Command::Preset { name, run, out } => {
            let scenario = presets::by_name(&name)?;
            if run {
                execute(&scenario, &out, false)
            } else {
                let text = scenario.to_json() + "\n";
                match &out.output {
                    Some(p) => fs::write(p, text).map_err(CliError::io(format!("writing {}", p.display()))),
                    None => {
                        std::io::stdout().write_all(text.as_bytes()).map_err(CliError::io("writing standard output"))
                    }
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::to_string(&e.record()).expect("error record serializes");
            eprintln!("{record}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
