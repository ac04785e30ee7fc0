use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SimError, Statevector};

/// Histogram of measured bitstrings.
///
/// `qubits` lists the measured qubits in bitstring order, leftmost first
/// (descending qubit index), so character `k` of every key is the value of
/// `qubits[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    pub qubits: Vec<usize>,
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
}

impl ShotCounts {
    pub fn new(qubits: Vec<usize>) -> Self {
        Self {
            qubits,
            counts: BTreeMap::new(),
            shots: 0,
        }
    }

    /// Builds counts from per-outcome tallies; bit `k` of an outcome index is
    /// the value of the k-th measured qubit in ascending order.
    pub(crate) fn from_tallies(ascending: &[usize], tallies: &[u64]) -> Self {
        let m = ascending.len();
        let qubits: Vec<usize> = ascending.iter().rev().copied().collect();
        let mut counts = BTreeMap::new();
        let mut shots = 0;
        for (outcome, &n) in tallies.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let key: String = (0..m)
                .rev()
                .map(|k| if (outcome >> k) & 1 == 1 { '1' } else { '0' })
                .collect();
            counts.insert(key, n);
            shots += n;
        }
        Self {
            qubits,
            counts,
            shots,
        }
    }

    pub fn add(&mut self, bitstring: &str, n: u64) {
        *self.counts.entry(bitstring.to_string()).or_default() += n;
        self.shots += n;
    }

    pub fn get(&self, bitstring: &str) -> u64 {
        self.counts.get(bitstring).copied().unwrap_or(0)
    }

    /// Sums two histograms over the same measured qubits.
    pub fn merge(&mut self, other: &ShotCounts) -> Result<(), SimError> {
        if self.qubits != other.qubits {
            return Err(SimError::CountsMismatch);
        }
        for (k, &n) in &other.counts {
            *self.counts.entry(k.clone()).or_default() += n;
        }
        self.shots += other.shots;
        Ok(())
    }

    /// Empirical distribution keyed by bitstring.
    pub fn frequencies(&self) -> BTreeMap<String, f64> {
        self.counts
            .iter()
            .map(|(k, &n)| (k.clone(), n as f64 / self.shots as f64))
            .collect()
    }

    pub fn to_document(&self, meta: &CountsMetadata) -> String {
        let doc = CountsDocument {
            metadata: meta.clone(),
            counts: self.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("counts serialise")
    }
}

/// Provenance attached to exported counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsMetadata {
    pub device: String,
    pub level: Option<u8>,
    pub seed: u64,
    pub shots: u64,
    pub calibration_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CountsDocument {
    pub metadata: CountsMetadata,
    #[serde(flatten)]
    pub counts: ShotCounts,
}

/// Generator for shot `shot` under `seed`: ChaCha8 keyed by `seed`, with the
/// shot index as the stream number. Every shot owns an independent stream, so
/// any partition of a shot range reproduces the same draws.
pub(crate) fn shot_rng(base: &ChaCha8Rng, shot: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(shot);
    rng
}

pub(crate) fn base_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Cumulative distribution, last entry forced to exactly 1.
pub(crate) fn cumulative(probs: &[f64]) -> Vec<f64> {
    let total: f64 = probs.iter().sum();
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = probs
        .iter()
        .map(|p| {
            acc += p / total;
            acc
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

pub(crate) fn draw(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Draws `shots` independent measurements of `measured` from `sv`.
///
/// The first draw of every shot stream picks the outcome.
pub fn sample(
    sv: &Statevector,
    measured: &[usize],
    shots: u64,
    seed: u64,
) -> Result<ShotCounts, SimError> {
    if shots == 0 {
        return Err(SimError::NoShots);
    }
    let mut ascending = measured.to_vec();
    ascending.sort_unstable();
    ascending.dedup();
    if let Some(&q) = ascending.iter().find(|&&q| q >= sv.width()) {
        return Err(SimError::QubitOutOfRange(q));
    }
    let cdf = cumulative(&sv.outcome_probabilities(&ascending));
    let base = base_rng(seed);
    let mut tallies = vec![0u64; cdf.len()];
    for shot in 0..shots {
        let mut rng = shot_rng(&base, shot);
        tallies[draw(&cdf, rng.random::<f64>())] += 1;
    }
    Ok(ShotCounts::from_tallies(&ascending, &tallies))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitBuilder, GateKind};
    use crate::sim::evolve;

    #[test]
    fn deterministic_state_gives_single_key() {
        let mut b = CircuitBuilder::new(2);
        b.push(GateKind::X, &[0]).unwrap();
        let sv = evolve(&b.build().unwrap()).unwrap();
        let c = sample(&sv, &[0, 1], 8192, 7).unwrap();
        assert_eq!(c.qubits, vec![1, 0]);
        assert_eq!(c.get("01"), 8192);
        assert_eq!(c.shots, 8192);
        assert_eq!(c.counts.len(), 1);
    }

    #[test]
    fn uniform_qubit_within_four_sigma() {
        let mut b = CircuitBuilder::new(1);
        b.push(GateKind::H, &[0]).unwrap();
        let sv = evolve(&b.build().unwrap()).unwrap();
        let c = sample(&sv, &[0], 8192, 11).unwrap();
        let f = c.get("0") as f64 / 8192.0;
        assert!((f - 0.5).abs() <= 4.0 * 0.00553, "{f}");
    }

    #[test]
    fn same_seed_same_counts() {
        let mut b = CircuitBuilder::new(2);
        b.push(GateKind::H, &[0])
            .unwrap()
            .push(GateKind::Ry(0.4), &[1])
            .unwrap();
        let sv = evolve(&b.build().unwrap()).unwrap();
        assert_eq!(
            sample(&sv, &[0, 1], 1000, 3).unwrap(),
            sample(&sv, &[1, 0], 1000, 3).unwrap()
        );
        assert_ne!(
            sample(&sv, &[0, 1], 1000, 3).unwrap(),
            sample(&sv, &[0, 1], 1000, 4).unwrap()
        );
    }

    #[test]
    fn zero_shots_rejected() {
        let sv = Statevector::zero(1).unwrap();
        assert!(matches!(sample(&sv, &[0], 0, 1), Err(SimError::NoShots)));
    }

    #[test]
    fn export_document_flattens_counts() {
        let mut c = ShotCounts::new(vec![1, 0]);
        c.add("01", 3);
        let meta = CountsMetadata {
            device: "athens".into(),
            level: Some(2),
            seed: 9,
            shots: 3,
            calibration_hash: "abc".into(),
        };
        let doc: serde_json::Value = serde_json::from_str(&c.to_document(&meta)).unwrap();
        assert_eq!(doc["counts"]["01"], 3);
        assert_eq!(doc["metadata"]["device"], "athens");
        assert_eq!(doc["shots"], 3);
    }
}
