//! Statevector simulation, shot sampling and calibrated Pauli noise.

mod counts;
mod noise;
mod statevector;

use thiserror::Error;

pub use counts::{sample, CountsDocument, CountsMetadata, ShotCounts};
pub use noise::{check_device_legal, run_noisy, total_variation, NoiseSpec, NoisyProgram};
pub use statevector::{evolve, Statevector, MAX_WIDTH};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("register of {width} qubits exceeds simulator cap {cap}")]
    TooWide { width: usize, cap: usize },
    #[error("shot count must be at least 1")]
    NoShots,
    #[error("measured qubit {0} is outside the register")]
    QubitOutOfRange(usize),
    #[error("cannot merge counts over different measured qubits")]
    CountsMismatch,
    #[error("circuit is not device-legal{}: {reason}", .index.map(|i| format!(" at gate {i}")).unwrap_or_default())]
    Illegal {
        index: Option<usize>,
        reason: String,
    },
}
