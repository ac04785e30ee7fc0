//! Repeated noisy runs, marginal extraction, RMSPE and report files.
//!
//! For every (device, level) cell the network is compiled once, transpiled
//! once, and executed `runs` times. Run `r` of a cell draws from seed
//! [`derive_seed`]`(base, device, level, r)`, so a report depends only on the
//! configuration and is independent of how cells are scheduled.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bayesnet::{BayesianNetwork, BnError, NodeId};
use crate::cqbn::{compile, CompilationPlan, CompileError};
use crate::device::DeviceModel;
use crate::sim::{check_device_legal, NoiseSpec, NoisyProgram, ShotCounts, SimError};
use crate::transpiler::{transpile, OptimizationLevel, TranspileError, TranspileMetrics};

pub const DEFAULT_RUNS: u32 = 10;
pub const DEFAULT_SHOTS: u64 = 8192;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("shots must be at least 1")]
    NoShots,
    #[error("no devices or no levels requested")]
    EmptyGrid,
    #[error("rmspe needs equal, non-empty inputs (got {truth} true values and {means} means)")]
    Length { truth: usize, means: usize },
    #[error("true value of node {0} is exactly 0; relative error is undefined")]
    ZeroTruth(usize),
    #[error("counts do not cover node {node} (qubit {qubit})")]
    MissingNode { node: NodeId, qubit: usize },
    #[error("bitstring '{key}' has {found} bits, expected {expected}")]
    BitWidth {
        key: String,
        found: usize,
        expected: usize,
    },
    #[error("counts are empty")]
    EmptyCounts,
    #[error("{device} level {level}{}: {source}", .run.map(|r| format!(" run {r}")).unwrap_or_default())]
    Cell {
        device: String,
        level: u8,
        run: Option<u32>,
        #[source]
        source: Box<StageError>,
    },
    #[error(transparent)]
    Stage(#[from] StageError),
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Network(#[from] BnError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Transpile(#[from] TranspileError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub network_name: String,
    pub network: BayesianNetwork,
    pub devices: Vec<DeviceModel>,
    pub levels: Vec<OptimizationLevel>,
    pub runs: u32,
    pub shots: u64,
    pub base_seed: u64,
}

impl ExperimentConfig {
    /// Ten runs of 8192 shots at every level, base seed 0.
    pub fn new(network_name: &str, network: BayesianNetwork, devices: Vec<DeviceModel>) -> Self {
        Self {
            network_name: network_name.to_string(),
            network,
            devices,
            levels: OptimizationLevel::ALL.to_vec(),
            runs: DEFAULT_RUNS,
            shots: DEFAULT_SHOTS,
            base_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.runs == 0 {
            return Err(HarnessError::NoRuns);
        }
        if self.shots == 0 {
            return Err(HarnessError::NoShots);
        }
        if self.devices.is_empty() || self.levels.is_empty() {
            return Err(HarnessError::EmptyGrid);
        }
        Ok(())
    }
}

/// Seed of run `run` in cell (`device`, `level`): the first 8 bytes
/// (little-endian) of SHA-256 over `base_seed` (8 bytes LE), the device name
/// (UTF-8), a zero byte, the level (1 byte) and `run` (4 bytes LE).
pub fn derive_seed(base_seed: u64, device: &str, level: OptimizationLevel, run: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update(device.as_bytes());
    h.update([0u8, level.as_u8()]);
    h.update(run.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Probability that each node reads 0, indexed by node id.
pub fn marginals_from_counts(
    counts: &ShotCounts,
    plan: &CompilationPlan,
) -> Result<Vec<f64>, HarnessError> {
    if counts.shots == 0 {
        return Err(HarnessError::EmptyCounts);
    }
    let width = counts.qubits.len();
    let positions: Vec<usize> = plan
        .node_qubits()
        .iter()
        .enumerate()
        .map(|(node, &q)| {
            counts
                .qubits
                .iter()
                .position(|&m| m == q)
                .ok_or(HarnessError::MissingNode {
                    node: NodeId(node),
                    qubit: q,
                })
        })
        .collect::<Result<_, _>>()?;
    let mut zeros = vec![0u64; positions.len()];
    for (key, &n) in &counts.counts {
        if key.len() != width {
            return Err(HarnessError::BitWidth {
                key: key.clone(),
                found: key.len(),
                expected: width,
            });
        }
        let bits = key.as_bytes();
        for (z, &k) in zeros.iter_mut().zip(&positions) {
            if bits[k] == b'0' {
                *z += n;
            }
        }
    }
    Ok(zeros
        .iter()
        .map(|&z| z as f64 / counts.shots as f64)
        .collect())
}

/// Root mean square percentage error, in percent.
pub fn rmspe(truth: &[f64], means: &[f64]) -> Result<f64, HarnessError> {
    if truth.is_empty() || truth.len() != means.len() {
        return Err(HarnessError::Length {
            truth: truth.len(),
            means: means.len(),
        });
    }
    if let Some(i) = truth.iter().position(|&t| t == 0.0) {
        return Err(HarnessError::ZeroTruth(i));
    }
    let n = truth.len() as f64;
    let sq: f64 = truth
        .iter()
        .zip(means)
        .map(|(t, m)| ((t - m) / t).powi(2))
        .sum();
    Ok(100.0 * (sq / n).sqrt())
}

/// Mean and sample standard deviation (n − 1). A single value has std 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeStats {
    pub node: NodeId,
    pub name: String,
    pub exact: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub device: String,
    pub level: OptimizationLevel,
    pub nodes: Vec<NodeStats>,
    pub rmspe_percent: f64,
    pub n: usize,
    /// False when only one run was made and `std` is 0 by convention.
    pub std_defined: bool,
    /// `run_marginals[r][node]`.
    pub run_marginals: Vec<Vec<f64>>,
    pub seeds: Vec<u64>,
    pub metrics: TranspileMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub network: String,
    pub base_seed: u64,
    pub runs: u32,
    pub shots: u64,
    /// Device name and calibration hash, in grid order.
    pub calibrations: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub provenance: Provenance,
    pub cells: Vec<CellReport>,
}

impl EvaluationReport {
    pub fn cell(&self, device: &str, level: OptimizationLevel) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.device == device && c.level == level)
    }

    /// One `node` row per device × level × node and one `summary` row per
    /// device × level.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("device,level,kind,node,exact,mean,std,rmspe_percent,n,flag\n");
        for c in &self.cells {
            let flag = if c.std_defined { "" } else { "single-run" };
            for ns in &c.nodes {
                let _ = writeln!(
                    s,
                    "{},{},node,{},{:.6},{:.6},{:.6},,,{flag}",
                    c.device, c.level, ns.name, ns.exact, ns.mean, ns.std
                );
            }
            let _ = writeln!(
                s,
                "{},{},summary,,,,,{:.4},{},{flag}",
                c.device, c.level, c.rmspe_percent, c.n
            );
        }
        s
    }

    /// Per-run marginals, one row per device × level × run × node.
    pub fn boxplot_csv(&self) -> String {
        let mut s = String::from("device,level,run,seed,node,p0\n");
        for c in &self.cells {
            for (r, (row, seed)) in c.run_marginals.iter().zip(&c.seeds).enumerate() {
                for (ns, p) in c.nodes.iter().zip(row) {
                    let _ = writeln!(s, "{},{},{r},{seed},{},{p:.6}", c.device, c.level, ns.name);
                }
            }
        }
        s
    }

    /// Human-readable mean (std) table with an RMSPE column.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let Some(first) = self.cells.first() else {
            return s;
        };
        let _ = write!(s, "{:<12} {:>5}", "device", "level");
        for ns in &first.nodes {
            let _ = write!(s, " {:>15}", ns.name);
        }
        let _ = writeln!(s, " {:>9}", "rmspe %");
        let _ = write!(s, "{:<12} {:>5}", "exact", "");
        for ns in &first.nodes {
            let _ = write!(s, " {:>15.3}", ns.exact);
        }
        let _ = writeln!(s);
        for c in &self.cells {
            let _ = write!(s, "{:<12} {:>5}", c.device, c.level.as_u8());
            for ns in &c.nodes {
                let _ = write!(s, " {:>15}", format!("{:.3} ({:.3})", ns.mean, ns.std));
            }
            let _ = writeln!(s, " {:>9.1}", c.rmspe_percent);
        }
        s
    }
}

/// Runs one device × level cell.
pub fn run_cell(
    cfg: &ExperimentConfig,
    circuit: &crate::circuit::QuantumCircuit,
    plan: &CompilationPlan,
    truth: &[f64],
    device: &DeviceModel,
    level: OptimizationLevel,
) -> Result<CellReport, HarnessError> {
    let cell_err = |run: Option<u32>| {
        let device = device.name().to_string();
        move |e: StageError| HarnessError::Cell {
            device,
            level: level.as_u8(),
            run,
            source: Box::new(e),
        }
    };
    let result = transpile(circuit, device, level, cfg.base_seed)
        .map_err(StageError::from)
        .map_err(cell_err(None))?;
    check_device_legal(&result.circuit, device)
        .map_err(StageError::from)
        .map_err(cell_err(None))?;
    let program = NoisyProgram::new(&result.circuit, &NoiseSpec::from_device(device))
        .map_err(StageError::from)
        .map_err(cell_err(None))?;
    let placed = plan.relocated(&result.final_layout);

    let mut run_marginals = Vec::with_capacity(cfg.runs as usize);
    let mut seeds = Vec::with_capacity(cfg.runs as usize);
    for r in 0..cfg.runs {
        let seed = derive_seed(cfg.base_seed, device.name(), level, r);
        let counts = program.run(seed, 0..cfg.shots);
        run_marginals.push(marginals_from_counts(&counts, &placed)?);
        seeds.push(seed);
    }
    let nodes: Vec<NodeStats> = cfg
        .network
        .nodes()
        .iter()
        .map(|node| {
            let column: Vec<f64> = run_marginals.iter().map(|m| m[node.id.0]).collect();
            let (mean, std) = mean_std(&column);
            NodeStats {
                node: node.id,
                name: node.name.clone(),
                exact: truth[node.id.0],
                mean,
                std,
            }
        })
        .collect();
    let means: Vec<f64> = nodes.iter().map(|n| n.mean).collect();
    Ok(CellReport {
        device: device.name().to_string(),
        level,
        rmspe_percent: rmspe(truth, &means)?,
        n: nodes.len(),
        nodes,
        std_defined: cfg.runs > 1,
        run_marginals,
        seeds,
        metrics: result.metrics,
    })
}

/// Evaluates every device × level cell of `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EvaluationReport, HarnessError> {
    cfg.validate()?;
    let truth = cfg.network.exact_marginals().map_err(StageError::from)?;
    let (circuit, plan) = compile(&cfg.network).map_err(StageError::from)?;
    let grid: Vec<(&DeviceModel, OptimizationLevel)> = cfg
        .devices
        .iter()
        .flat_map(|d| cfg.levels.iter().map(move |&l| (d, l)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(d, l)| run_cell(cfg, &circuit, &plan, &truth, d, l))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvaluationReport {
        provenance: Provenance {
            network: cfg.network_name.clone(),
            base_seed: cfg.base_seed,
            runs: cfg.runs,
            shots: cfg.shots,
            calibrations: cfg
                .devices
                .iter()
                .map(|d| (d.name().to_string(), d.calibration_hash()))
                .collect(),
        },
        cells,
    })
}
