use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qbn_core::bayesnet::{from_json, BayesianNetwork};
use qbn_core::circuit::qasm::{from_qasm, to_qasm};
use qbn_core::circuit::QuantumCircuit;
use qbn_core::cqbn::compile;
use qbn_core::device::{builtin_catalog, catalog_device, load_device, DeviceModel};
use qbn_core::harness::{marginals_from_counts, run_experiment, ExperimentConfig};
use qbn_core::sim::{run_noisy, CountsMetadata};
use qbn_core::transpiler::{transpile, OptimizationLevel};

#[derive(Parser)]
#[command(
    name = "qbn",
    version,
    about = "Compile Bayesian networks to circuits, transpile, simulate and score them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network document.
    Validate { network: PathBuf },
    /// Exact P(node = 0) by enumeration.
    Infer { network: PathBuf },
    /// Compile a network to a circuit.
    Compile {
        network: PathBuf,
        /// Write the circuit as OpenQASM to this file.
        #[arg(long)]
        qasm: Option<PathBuf>,
    },
    /// Transpile a QASM circuit or a network for a device.
    Transpile {
        /// `.qasm` circuit or network JSON.
        input: PathBuf,
        #[arg(long)]
        device: String,
        #[arg(long)]
        level: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write QASM here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile, transpile and sample a network once.
    Run {
        network: PathBuf,
        #[arg(long)]
        device: String,
        #[arg(long)]
        level: u8,
        #[arg(long, default_value_t = 8192)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ignore the device's error rates.
        #[arg(long)]
        noiseless: bool,
        /// Write the counts document here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated runs over devices and levels, scored against exact marginals.
    Evaluate {
        network: PathBuf,
        /// Device names or calibration files; defaults to the whole catalog.
        #[arg(long, value_delimiter = ',')]
        devices: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = [0u8, 1, 2, 3])]
        levels: Vec<u8>,
        #[arg(long, default_value_t = 10)]
        runs: u32,
        #[arg(long, default_value_t = 8192)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        noiseless: bool,
        /// Report CSV; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-run marginals CSV for box plots.
        #[arg(long)]
        boxplot: Option<PathBuf>,
    },
    /// Inspect the built-in device catalog.
    Devices {
        #[command(subcommand)]
        action: DevicesAction,
    },
}

#[derive(Subcommand)]
enum DevicesAction {
    List,
    Show { device: String },
}

/// Exit 1 for bad input documents or arguments, 2 for everything else.
enum Failure {
    Invalid(String),
    Runtime(String),
}

fn invalid(e: impl Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn runtime(e: impl Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn load_network(path: &Path) -> Result<BayesianNetwork, Failure> {
    from_json(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// A catalog name, or a path to a calibration document.
fn resolve_device(spec: &str) -> Result<DeviceModel, Failure> {
    let path = Path::new(spec);
    if path.is_file() {
        load_device(&read(path)?).map_err(|e| invalid(format!("{spec}: {e}")))
    } else {
        catalog_device(spec).map_err(invalid)
    }
}

fn level(l: u8) -> Result<OptimizationLevel, Failure> {
    OptimizationLevel::from_u8(l).map_err(invalid)
}

fn network_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "network".into(), |s| s.to_string_lossy().into_owned())
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Validate { network } => {
            let bn = load_network(&network)?;
            println!("{}: valid, {} nodes", network.display(), bn.len());
        }
        Command::Infer { network } => {
            let bn = load_network(&network)?;
            let m = bn.exact_marginals().map_err(runtime)?;
            println!("{:<16} {:>8} {:>8}", "node", "P(=0)", "P(=1)");
            for node in bn.nodes() {
                let p = m[node.id.0];
                println!("{:<16} {:>8.4} {:>8.4}", node.name, p, 1.0 - p);
            }
        }
        Command::Compile { network, qasm } => {
            let bn = load_network(&network)?;
            let (c, plan) = compile(&bn).map_err(invalid)?;
            println!("width {}, {} gates", c.width(), c.ops().len());
            for (name, n) in c.gate_counts() {
                println!("  {name:<5} {n}");
            }
            for node in bn.nodes() {
                println!("q[{}] {}", plan.node_qubit(node.id), node.name);
            }
            for q in plan.ancilla_qubits() {
                println!("q[{q}] ancilla");
            }
            if let Some(path) = qasm {
                write(&path, &to_qasm(&c).map_err(runtime)?)?;
            }
        }
        Command::Transpile {
            input,
            device,
            level: l,
            seed,
            out,
        } => {
            let d = resolve_device(&device)?;
            let c: QuantumCircuit = if input.extension().is_some_and(|e| e == "qasm") {
                from_qasm(&read(&input)?)
                    .map_err(|e| invalid(format!("{}: {e}", input.display())))?
            } else {
                compile(&load_network(&input)?).map_err(invalid)?.0
            };
            let r = transpile(&c, &d, level(l)?, seed).map_err(invalid)?;
            let text = to_qasm(&r.circuit).map_err(runtime)?;
            eprintln!(
                "{} level {}: {} -> {} gates, {} swaps, estimated success {:.4}, layout {:?} -> {:?}",
                d.name(),
                l,
                c.ops().len(),
                r.circuit.ops().len(),
                r.metrics.swaps_inserted,
                r.metrics.estimated_success,
                r.initial_layout,
                r.final_layout
            );
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Run {
            network,
            device,
            level: l,
            shots,
            seed,
            noiseless,
            out,
        } => {
            let bn = load_network(&network)?;
            let mut d = resolve_device(&device)?;
            if noiseless {
                d = d.noiseless();
            }
            let lvl = level(l)?;
            let (c, plan) = compile(&bn).map_err(invalid)?;
            let r = transpile(&c, &d, lvl, seed).map_err(invalid)?;
            let counts = run_noisy(&r.circuit, &d, shots, seed).map_err(runtime)?;
            let m = marginals_from_counts(&counts, &plan.relocated(&r.final_layout))
                .map_err(runtime)?;
            let exact = bn.exact_marginals().map_err(runtime)?;
            println!("{:<16} {:>8} {:>8}", "node", "P(=0)", "exact");
            for node in bn.nodes() {
                println!(
                    "{:<16} {:>8.4} {:>8.4}",
                    node.name, m[node.id.0], exact[node.id.0]
                );
            }
            if let Some(path) = out {
                let meta = CountsMetadata {
                    device: d.name().to_string(),
                    level: Some(l),
                    seed,
                    shots,
                    calibration_hash: d.calibration_hash(),
                };
                write(&path, &counts.to_document(&meta))?;
            }
        }
        Command::Evaluate {
            network,
            devices,
            levels,
            runs,
            shots,
            seed,
            noiseless,
            out,
            boxplot,
        } => {
            let bn = load_network(&network)?;
            let mut ds = if devices.is_empty() {
                builtin_catalog()
            } else {
                devices
                    .iter()
                    .map(|s| resolve_device(s))
                    .collect::<Result<_, _>>()?
            };
            if noiseless {
                ds = ds.iter().map(DeviceModel::noiseless).collect();
            }
            let mut cfg = ExperimentConfig::new(&network_name(&network), bn, ds);
            cfg.levels = levels.into_iter().map(level).collect::<Result<_, _>>()?;
            cfg.runs = runs;
            cfg.shots = shots;
            cfg.base_seed = seed;
            cfg.validate().map_err(invalid)?;
            let report = run_experiment(&cfg).map_err(runtime)?;
            match out {
                Some(path) => {
                    write(&path, &report.to_csv())?;
                    print!("{}", report.render_table());
                }
                None => print!("{}", report.to_csv()),
            }
            if let Some(path) = boxplot {
                write(&path, &report.boxplot_csv())?;
            }
        }
        Command::Devices {
            action: DevicesAction::List,
        } => {
            println!("{:<12} {:>6} {:>6}  calibration", "name", "qubits", "edges");
            for d in builtin_catalog() {
                println!(
                    "{:<12} {:>6} {:>6}  {}",
                    d.name(),
                    d.n_qubits(),
                    d.coupling().len(),
                    d.calibrated_at()
                );
            }
        }
        Command::Devices {
            action: DevicesAction::Show { device },
        } => {
            println!("{}", resolve_device(&device)?.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
