//! `qurt` — batch front end for the quantum runtime.
//!
//! `run` executes an example program or a quantum code file for N shots,
//! where every shot is an independent whole-program execution with its
//! own seed, and prints an outcome histogram. `compile` lowers quantum
//! code to assembly, optionally routed onto a coupling graph.

use clap::{Parser, Subcommand, ValueEnum};
use qurt::{compiler, ir, programs, sim};
use qurt::{CouplingGraph, Error, QuantumCode, SimConfig};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qurt", about = "Run and compile quantum programs on the local simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Level {
    Code,
    Asm,
}

#[derive(Subcommand)]
enum Command {
    /// Run an example (bell, teleport, grover3, coinloop) or a .qc file
    Run {
        /// Example name or path to a quantum code file
        target: String,
        /// Seed of the first shot; shot i uses seed + i
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of independent executions
        #[arg(long, default_value_t = 1)]
        shots: u64,
        /// IR level to execute
        #[arg(long, value_enum, default_value_t = Level::Code)]
        level: Level,
        /// Coupling graph file; implies the routed assembly pipeline
        #[arg(long)]
        coupling: Option<PathBuf>,
        /// Print the executed IR before the report
        #[arg(long)]
        dump_ir: bool,
    },
    /// Compile a quantum code file to assembly
    Compile {
        /// Input .qc file
        input: PathBuf,
        /// Coupling graph file to route onto
        #[arg(long)]
        coupling: Option<PathBuf>,
        /// Output file; stdout when absent
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { target, seed, shots, level, coupling, dump_ir } => {
            cmd_run(&target, seed, shots, level, coupling.as_deref(), dump_ir)
        }
        Command::Compile { input, coupling, output } => {
            cmd_compile(&input, coupling.as_deref(), output.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}

fn read_file(path: &std::path::Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_coupling(path: &std::path::Path) -> Result<CouplingGraph, Error> {
    CouplingGraph::parse(&read_file(path)?)
}

/// Input program: a named example goes through recording and codegen,
/// anything else is treated as a quantum code file.
fn load_code(target: &str) -> Result<QuantumCode, Error> {
    if let Some((p, m)) = programs::by_name(target, 0) {
        let (code, _) = qurt::codegen::build_code(&p, &[&m])?;
        return Ok(code);
    }
    if !std::path::Path::new(target).exists() {
        return Err(Error::UnknownExample(target.to_string()));
    }
    let code = ir::parse(&read_file(std::path::Path::new(target))?)?;
    code.validate()?;
    Ok(code)
}

fn sim_config() -> Result<SimConfig, Error> {
    let mut config = SimConfig::default();
    if let Ok(v) = std::env::var("QCRT_MAX_QUBITS") {
        config.max_qubits = v
            .parse()
            .map_err(|_| Error::Io(format!("QCRT_MAX_QUBITS is not a number: {v}")))?;
    }
    Ok(config)
}

fn cmd_run(
    target: &str,
    seed: u64,
    shots: u64,
    level: Level,
    coupling: Option<&std::path::Path>,
    dump_ir: bool,
) -> Result<(), Error> {
    let code = load_code(target)?;
    let code = match (level, coupling) {
        (_, Some(path)) => {
            let graph = load_coupling(path)?;
            compiler::emit_assembly_mapped(&code, Some(&graph))?.0
        }
        (Level::Asm, None) => compiler::emit_assembly(&code)?,
        (Level::Code, None) => code,
    };
    if dump_ir {
        print!("{}", ir::serialize(&code));
    }
    let config = sim_config()?;
    // Histogram over the OUT record of each shot; the merge is
    // commutative, so aggregation order never shows in the report.
    let mut histogram: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    for i in 0..shots {
        let outcome = sim::run_with(&code, seed + i, &config)?;
        *histogram.entry(outcome.outs).or_insert(0) += 1;
    }
    for (outs, count) in &histogram {
        let value = outs
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        println!("{value} {count} {:.4}", *count as f64 / shots as f64);
    }
    println!("total {shots}");
    Ok(())
}

fn cmd_compile(
    input: &std::path::Path,
    coupling: Option<&std::path::Path>,
    output: Option<&std::path::Path>,
) -> Result<(), Error> {
    let code = ir::parse(&read_file(input)?)?;
    code.validate()?;
    let asm = match coupling {
        Some(path) => compiler::emit_assembly_mapped(&code, Some(&load_coupling(path)?))?.0,
        None => compiler::emit_assembly(&code)?,
    };
    let text = ir::serialize(&asm);
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}
