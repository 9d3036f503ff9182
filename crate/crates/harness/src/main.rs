use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use loyalty_harness::table::Provenance;
use loyalty_harness::{check, run, write_outputs, Expectations, ExperimentSpec, HarnessError};

#[derive(Parser)]
#[command(name = "loyalty", version, about = "Run loyalty-program experiments from JSON specs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a spec and write its CSV table.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output CSV; overrides the spec's `output`. Stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Omit the `#` provenance footer.
        #[arg(long)]
        no_footer: bool,
    },
    /// Solve a spec and compare its named scalars with an expectations file.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expect: PathBuf,
        /// Multiplies every value tolerance.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
        /// Also write the table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a spec without solving it.
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    spec: PathBuf,
    /// Worker threads; defaults to all cores. Output does not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8, HarnessError> {
    match cmd {
        Command::Validate { spec } => {
            let (s, _) = ExperimentSpec::from_path(&spec)?;
            println!(
                "{}: valid {} spec, {} points",
                spec.display(),
                s.scenario,
                s.points().len()
            );
            Ok(0)
        }
        Command::Run { common, out, no_footer } => {
            let (spec, bytes) = ExperimentSpec::from_path(&common.spec)?;
            let mut result = run(&spec, common.jobs)?;
            if !no_footer {
                result.table.provenance = Some(Provenance::for_spec(&bytes));
            }
            match out.or(spec.output.clone()) {
                Some(path) => write_outputs(&result, &path)?,
                None => {
                    let stdout = std::io::stdout();
                    result.table.write_csv(stdout.lock())?;
                }
            }
            Ok(0)
        }
        Command::Check {
            common,
            expect,
            tolerance_scale,
            out,
        } => {
            if !(tolerance_scale > 0.0 && tolerance_scale.is_finite()) {
                return Err(HarnessError::Validation(vec![loyalty_harness::spec::FieldError {
                    path: "--tolerance-scale".into(),
                    message: format!("must be positive, got {tolerance_scale}"),
                }]));
            }
            let (spec, bytes) = ExperimentSpec::from_path(&common.spec)?;
            let text = std::fs::read_to_string(&expect).map_err(|e| HarnessError::Io {
                path: expect.clone(),
                source: e,
            })?;
            let expectations = Expectations::from_json(&text)?;
            let mut result = run(&spec, common.jobs)?;
            if let Some(path) = out {
                result.table.provenance = Some(Provenance::for_spec(&bytes));
                write_outputs(&result, &path)?;
            }
            let report = check(&result, &expectations, tolerance_scale);
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{report}").map_err(|e| HarnessError::Internal(e.to_string()))?;
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}
