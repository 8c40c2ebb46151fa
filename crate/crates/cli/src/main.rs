use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flint_core::diagnostics::{Diagnostic, Format};
use flint_core::lowering::printer::print_program;
use flint_core::pipeline::{analyze, compile};
use flint_core::script::run_script;
use flint_core::stdlib::StdlibMode;
use flint_core::vm::gas::GasTable;
use flint_core::vm::Chain;

const EXIT_USER: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Human,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Format {
        match f {
            OutputFormat::Human => Format::Human,
            OutputFormat::Json => Format::Json,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "flintc", version, about = "Flint compiler and simulated chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Diagnostic and report format.
    #[arg(long, value_enum, default_value = "human", global = true)]
    format: OutputFormat,
    /// Compile without the Asset library; the global functions stay available.
    #[arg(long, global = true)]
    no_stdlib: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyse the input files and print diagnostics.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Compile the input files and write the textual IR.
    Build {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Output path; standard output when absent.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Compile the input files and execute a JSON-lines transaction script.
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        script: PathBuf,
        /// JSON object mapping instruction names to gas costs.
        #[arg(long)]
        gas_table: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    User,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn read_sources(files: &[PathBuf]) -> Result<Vec<(String, String)>, Failure> {
    files.iter().map(|p| Ok((p.display().to_string(), read(p)?))).collect()
}

fn print_diagnostics(diags: &[Diagnostic], format: Format, to_stderr: bool) {
    for d in diags {
        let text = match format {
            Format::Human => d.render_located(),
            Format::Json => d.render(Format::Json),
        };
        if to_stderr {
            eprintln!("{text}");
        } else {
            println!("{text}");
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let format: Format = cli.format.into();
    let mode = if cli.no_stdlib { StdlibMode::GlobalsOnly } else { StdlibMode::Full };
    match cli.command {
        Command::Check { files } => {
            let sources = read_sources(&files)?;
            let refs: Vec<(&str, &str)> = sources.iter().map(|(n, s)| (n.as_str(), s.as_str())).collect();
            let a = analyze(&refs, mode);
            print_diagnostics(&a.diagnostics, format, false);
            if a.has_errors() {
                return Err(Failure::User);
            }
        }
        Command::Build { files, output } => {
            let sources = read_sources(&files)?;
            let refs: Vec<(&str, &str)> = sources.iter().map(|(n, s)| (n.as_str(), s.as_str())).collect();
            let (program, a) = compile(&refs, mode).map_err(|a| {
                print_diagnostics(&a.diagnostics, format, true);
                Failure::User
            })?;
            print_diagnostics(&a.diagnostics, format, true);
            let text = print_program(&program);
            match output {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?,
                None => print!("{text}"),
            }
        }
        Command::Run { files, script, gas_table } => {
            let sources = read_sources(&files)?;
            let script = read(&script)?;
            let table = match gas_table {
                Some(p) => GasTable::from_json(&read(&p)?)
                    .map_err(|e| Failure::Usage(format!("invalid gas table {}: {e}", p.display())))?,
                None => GasTable::default(),
            };
            let refs: Vec<(&str, &str)> = sources.iter().map(|(n, s)| (n.as_str(), s.as_str())).collect();
            let (program, a) = compile(&refs, mode).map_err(|a| {
                print_diagnostics(&a.diagnostics, format, true);
                Failure::User
            })?;
            print_diagnostics(&a.diagnostics, format, true);
            let report = run_script(&program, Chain::new(table), &script).map_err(|e| Failure::Usage(e.to_string()))?;
            match format {
                Format::Human => print!("{}", report.render()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&report.to_json()).expect("report serializes")),
            }
            if !report.passed() {
                return Err(Failure::User);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::User)) => ExitCode::from(EXIT_USER),
        Ok(Err(Failure::Usage(m))) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(_) => {
            eprintln!("internal compiler error");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
