use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sweepcl_cli::{oracle, run, table, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "sweepcl", version, about = "Fast sweeping with fitted shocks for steady conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write its output directory.
    Run {
        /// Registry name or config file.
        problem: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        form: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a gnuplot script.
        #[arg(long)]
        plots: bool,
        /// Override a problem parameter, `key=value`.
        #[arg(long = "set", value_parser = parse_override)]
        overrides: Vec<(String, f64)>,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
    },
    /// Convergence and timing table over several grid sizes.
    Table {
        problem: String,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        form: Option<String>,
        /// Comma-separated grid sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
    },
    /// Reference solution for a problem (cached for Euler problems).
    Oracle {
        problem: String,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn default_out(problem: &str, n: usize) -> PathBuf {
    let stem = PathBuf::from(problem);
    let stem = stem.file_stem().map_or_else(|| problem.to_string(), |s| s.to_string_lossy().into_owned());
    PathBuf::from("sweepcl-out").join(format!("{stem}-n{n}"))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            problem,
            n,
            scheme,
            form,
            out,
            plots,
            overrides,
            repetitions,
        } => {
            let config = RunConfig {
                output_dir: Some(out.unwrap_or_else(|| default_out(&problem, n))),
                problem,
                n,
                scheme,
                form,
                emit_plots: plots,
                seed_overrides: overrides.into_iter().collect::<BTreeMap<_, _>>(),
                repetitions,
            };
            let report = run(&config)?;
            println!("{}", report.to_json());
        }
        Command::Table {
            problem,
            scheme,
            form,
            n,
            out,
            repetitions,
        } => {
            let mut config = RunConfig::new(&problem, n[0]);
            config.scheme = scheme;
            config.form = form;
            config.output_dir = out;
            config.repetitions = repetitions;
            let (_, t) = table(&config, &n)?;
            print!("{}", t.render());
        }
        Command::Oracle { problem, n, out } => {
            let report = oracle(&problem, n, out.as_deref())?;
            println!("{}", report.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            if matches!(e, CliError::Solver(_)) {
                println!("{}", e.diagnostic());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
