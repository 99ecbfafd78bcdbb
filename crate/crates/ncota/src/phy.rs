//! Physical layer: OFDM resource grid, energy-codebook signaling, and the
//! non-coherent consensus estimator.
//!
//! A frame is `O` OFDM symbols of `SC` subcarriers, giving `Q = O·SC`
//! complex resource units. The `Q` units are divided into `M` disjoint sets,
//! one per codeword of the simplex codec: a transmitter with weights `p`
//! puts energy `∝ p_m` on set `m` (circularly shifted by a network-wide
//! random offset each frame), and a receiver recovers an unbiased estimate
//! of the neighborhood's weights from per-set received energies alone. No
//! channel state information is used anywhere on this path.

use crate::channel::ChannelRealization;
use crate::codec::{Codebook, EnergyProfile};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhyError {
    #[error("frame plan needs at least one symbol and one subcarrier")]
    EmptyPlan,
    #[error("bandwidth must be finite and positive, got {0}")]
    BadBandwidth(f64),
    #[error("cannot split {q} resource units into {m} nonempty sets")]
    PartitionTooFine { q: usize, m: usize },
    #[error("sample energy must be finite and positive, got {0}")]
    BadEnergy(f64),
    #[error("noise spectral density must be finite and nonnegative, got {0}")]
    BadNoise(f64),
    #[error("transmit probability must lie strictly between 0 and 1, got {0}")]
    BadTxProbability(f64),
}

/// OFDM frame geometry. Resource unit `q` (0-based, `q < O·SC`) sits on
/// symbol `q / SC` and subcarrier `q % SC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FramePlan {
    symbols: usize,
    subcarriers: usize,
    cyclic_prefix: usize,
}

impl FramePlan {
    pub fn new(symbols: usize, subcarriers: usize, cyclic_prefix: usize) -> Result<Self, PhyError> {
        if symbols == 0 || subcarriers == 0 {
            return Err(PhyError::EmptyPlan);
        }
        Ok(FramePlan { symbols, subcarriers, cyclic_prefix })
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn cyclic_prefix(&self) -> usize {
        self.cyclic_prefix
    }

    /// Total resource units `Q = O·SC`.
    pub fn resource_units(&self) -> usize {
        self.symbols * self.subcarriers
    }

    /// Subcarrier carrying resource unit `q`; the channel is flat in time
    /// within a frame, so this is the only index that matters for fading.
    pub fn subcarrier_of(&self, q: usize) -> usize {
        q % self.subcarriers
    }

    /// Frame airtime `O·(SC + CP)/W` in seconds for total bandwidth `W` Hz.
    pub fn duration_s(&self, bandwidth_hz: f64) -> Result<f64, PhyError> {
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(PhyError::BadBandwidth(bandwidth_hz));
        }
        Ok(self.symbols as f64 * (self.subcarriers + self.cyclic_prefix) as f64 / bandwidth_hz)
    }
}

/// Disjoint cover of the `Q` resource units by `M` sets, one per codeword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourcePartition {
    q: usize,
    sets: Vec<Vec<usize>>,
}

impl ResourcePartition {
    /// Strided assignment: resource unit `q` joins set `q mod M`, so every
    /// set is spread across the whole grid and sizes differ by at most one.
    pub fn strided(q: usize, m: usize) -> Result<Self, PhyError> {
        if m == 0 || q < m {
            return Err(PhyError::PartitionTooFine { q, m });
        }
        let mut sets = vec![Vec::with_capacity(q / m + 1); m];
        for unit in 0..q {
            sets[unit % m].push(unit);
        }
        Ok(ResourcePartition { q, sets })
    }

    pub fn resource_units(&self) -> usize {
        self.q
    }

    pub fn num_sets(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, m: usize) -> &[usize] {
        &self.sets[m]
    }

    /// Set index used by codeword `m` under the network-wide shift.
    pub fn shifted(&self, m: usize, shift: usize) -> usize {
        (m + shift) % self.sets.len()
    }

    /// `(1/M) Σ_m (1/|R_m|) Σ_{q∈R_m} v_q`: the set-then-uniform average
    /// that received energies actually estimate. Equals the plain mean over
    /// `q` when all sets have the same size.
    pub fn weighted_mean(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.q);
        let m = self.sets.len() as f64;
        self.sets
            .iter()
            .map(|set| set.iter().map(|&q| values[q]).sum::<f64>() / set.len() as f64)
            .sum::<f64>()
            / m
    }

    /// `(1/M) Σ_m 1/|R_m|`, the repetition factor entering the closed-form
    /// energy dispersion of independent fading (`≈ M/Q`).
    pub fn inverse_size_mean(&self) -> f64 {
        let m = self.sets.len() as f64;
        self.sets.iter().map(|set| 1.0 / set.len() as f64).sum::<f64>() / m
    }
}

/// Radio constants shared by every frame of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Transmit energy per resource unit, `E = P_tx/W`.
    pub sample_energy: f64,
    /// Noise power per complex sample, `N₀`.
    pub noise_psd: f64,
    /// Probability that a node transmits in a given frame.
    pub tx_probability: f64,
}

impl RadioParams {
    pub fn new(sample_energy: f64, noise_psd: f64, tx_probability: f64) -> Result<Self, PhyError> {
        if !(sample_energy.is_finite() && sample_energy > 0.0) {
            return Err(PhyError::BadEnergy(sample_energy));
        }
        if !(noise_psd.is_finite() && noise_psd >= 0.0) {
            return Err(PhyError::BadNoise(noise_psd));
        }
        if !(tx_probability > 0.0 && tx_probability < 1.0) {
            return Err(PhyError::BadTxProbability(tx_probability));
        }
        Ok(RadioParams { sample_energy, noise_psd, tx_probability })
    }
}

/// Unit-set waveform for codeword `m` before shifting: `√(Q/|R_m|)` on the
/// units of `R_m`, zero elsewhere. These vectors all have norm `√Q` and are
/// mutually orthogonal.
pub fn preamble(partition: &ResourcePartition, m: usize) -> Vec<f64> {
    let mut u = vec![0.0; partition.resource_units()];
    let set = partition.set(m);
    let amp = (partition.resource_units() as f64 / set.len() as f64).sqrt();
    for &q in set {
        u[q] = amp;
    }
    u
}

/// Baseband frame for weights `p`: energy `E·Q·p_m` spread over set
/// `R_(m+shift)`, all samples rotated by the transmitter's random phase.
/// Average per-unit energy is exactly `E·Σ_m p_m`.
pub fn transmit_signal(
    profile: &EnergyProfile,
    partition: &ResourcePartition,
    shift: usize,
    phase: f64,
    sample_energy: f64,
) -> Vec<Complex64> {
    assert_eq!(profile.len(), partition.num_sets(), "profile does not match partition");
    let q = partition.resource_units();
    let rot = Complex64::from_polar(1.0, phase);
    let mut x = vec![Complex64::new(0.0, 0.0); q];
    for (m, &weight) in profile.iter().enumerate() {
        let set = partition.set(partition.shifted(m, shift));
        let amp = (sample_energy * q as f64 / set.len() as f64 * weight).sqrt();
        for &unit in set {
            x[unit] = amp * rot;
        }
    }
    x
}

/// Superimposes the transmitters' frames through the channel at one receiver
/// and adds complex Gaussian noise of per-sample power `noise_psd`.
pub fn receive<R: Rng>(
    transmitters: &[(usize, &[Complex64])],
    realization: &ChannelRealization,
    receiver: usize,
    noise_psd: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    let q = realization.resource_units();
    let mut y = Vec::with_capacity(q);
    let sd = (noise_psd / 2.0).sqrt();
    for _ in 0..q {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        y.push(Complex64::new(re * sd, im * sd));
    }
    for &(node, x) in transmitters {
        assert_ne!(node, receiver, "a node does not receive its own frame");
        assert_eq!(x.len(), q);
        let h = realization.gains(receiver, node);
        for ((yq, &hq), &xq) in y.iter_mut().zip(h).zip(x) {
            *yq += hq * xq;
        }
    }
    y
}

/// Per-codeword energy statistics at a receiver:
/// `r_m = Σ_{q∈R_(m+shift)} (|y_q|² − N₀) / (p_tx(1−p_tx)·E·Q)`.
///
/// Conditioned on the node listening, `E[r_m] = Σ_j Λ_ij p_jm / (1−p_tx)`;
/// the caller zeroes `r` in transmit frames, which restores the unbiased
/// unconditional mean `Σ_j Λ_ij p_jm`.
pub fn energy_estimates(
    received: &[Complex64],
    partition: &ResourcePartition,
    shift: usize,
    radio: &RadioParams,
) -> Vec<f64> {
    let q = partition.resource_units();
    assert_eq!(received.len(), q);
    let scale = radio.tx_probability * (1.0 - radio.tx_probability) * radio.sample_energy * q as f64;
    (0..partition.num_sets())
        .map(|m| {
            let set = partition.set(partition.shifted(m, shift));
            set.iter().map(|&unit| received[unit].norm_sqr() - radio.noise_psd).sum::<f64>() / scale
        })
        .collect()
}

/// Consensus direction from energy statistics:
/// `d = Σ_m r_m (z_m − w)`, evaluated as `Σ_m r_m z_m − (Σ_m r_m)·w`.
pub fn consensus_direction(energies: &[f64], codebook: &Codebook, w: &[f64]) -> Vec<f64> {
    assert_eq!(energies.len(), codebook.len(), "energy vector does not match codebook");
    assert_eq!(w.len(), codebook.dim());
    let d = codebook.dim();
    let spoke = codebook.spoke();
    let total: f64 = energies.iter().sum();
    (0..d).map(|i| spoke * (energies[i] - energies[i + d]) - total * w[i]).collect()
}

/// Network-wide codeword shift for one frame, shared by all nodes.
pub fn draw_shift<R: Rng>(rng: &mut R, num_sets: usize) -> usize {
    rng.gen_range(0..num_sets)
}

/// A transmitter's random carrier phase for one frame.
pub fn draw_phase<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(0.0..std::f64::consts::TAU)
}

/// Transmit/listen coin flip for one frame.
pub fn draw_transmit<R: Rng>(rng: &mut R, tx_probability: f64) -> bool {
    rng.gen_bool(tx_probability)
}
