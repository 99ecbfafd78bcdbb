//! Digital comparison schemes over the same channel and problems.
//!
//! Instead of superposing energy patterns, each node broadcasts a quantized
//! copy of its state over an orthogonal OFDMA block; a receiver decodes it
//! iff the block's instantaneous capacity exceeds the payload size, then
//! averages the successfully decoded neighbors. The quantizers are both
//! unbiased, so the digital consensus direction is an unbiased estimate of
//! the uniform-weight disagreement — the errors come from outages, payload
//! rounding, and the airtime a full round costs. A no-communication
//! optimizer completes the comparison set.

use crate::channel::{draw_realization, ChannelError, ChannelSpec};
use crate::codec::{Codebook, CodecError};
use crate::domain::{axpy, ModelVector, ParamDomain};
use crate::optimizer::{BatchPolicy, StepsizeSchedule};
use crate::phy::{FramePlan, PhyError};
use crate::problems::Objective;
use crate::rng::{node_stream, Purpose};
use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error("bits per entry must lie in 1..=52, got {0}")]
    BadBits(u32),
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("{name} must be finite and positive, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("block size {block} must divide the {total} subcarriers")]
    UnevenBlocks { block: usize, total: usize },
    #[error("{left} = {a}, but {right} = {b}; they must match")]
    Mismatch { left: &'static str, a: usize, right: &'static str, b: usize },
}

/// A quantized broadcast: the exact payload size on the air and what a
/// successful receiver reconstructs.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPayload {
    pub bits: u64,
    pub reconstruction: Vec<f64>,
}

/// Dithered uniform scalar quantization of `w/‖w‖_∞` on a `2^bits`-level
/// grid over `[−1, 1]`, plus a 64-bit magnitude header:
/// `bits(d) = 64 + bits·d`. Subtractive dither (uniform over one cell,
/// subtracted after rounding) makes every entry exactly unbiased, with
/// per-entry error at most one cell, `‖w‖_∞·2/(2^bits−1)`.
pub fn scalar_quantize<R: Rng + ?Sized>(
    w: &[f64],
    bits: u32,
    rng: &mut R,
) -> Result<QuantizedPayload, BaselineError> {
    if bits == 0 || bits > 52 {
        return Err(BaselineError::BadBits(bits));
    }
    let payload = 64 + u64::from(bits) * w.len() as u64;
    let magnitude = w.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if magnitude == 0.0 {
        return Ok(QuantizedPayload { bits: payload, reconstruction: vec![0.0; w.len()] });
    }
    let levels = (1u64 << bits) as f64;
    let cell = 2.0 / (levels - 1.0);
    let reconstruction = w
        .iter()
        .map(|&x| {
            let scaled = x / magnitude;
            let dither = (rng.gen::<f64>() - 0.5) * cell;
            let index = ((scaled + dither + 1.0) / cell).round().clamp(0.0, levels - 1.0);
            magnitude * ((index * cell - 1.0) - dither)
        })
        .collect();
    Ok(QuantizedPayload { bits: payload, reconstruction })
}

/// Aggregate vector quantization: draws `repetitions` i.i.d. codeword
/// indices from the simplex weights that encode `w` with zero mass on the
/// all-zero codeword, and reconstructs their average. Unbiased because the
/// weighted codeword average is exactly `w`; the payload is
/// `repetitions·⌈log₂(2d)⌉` bits (one index over the 2d nonzero codewords
/// per repetition).
pub fn codeword_quantize<R: Rng + ?Sized>(
    w: &[f64],
    repetitions: usize,
    codebook: &Codebook,
    rng: &mut R,
) -> Result<QuantizedPayload, BaselineError> {
    if repetitions == 0 {
        return Err(BaselineError::NoRepetitions);
    }
    let profile = codebook.encode_full(w)?;
    let sampler = WeightedIndex::new(profile.as_slice().iter().copied())
        .expect("energy profile is a probability vector");
    let dim = codebook.dim();
    let mut reconstruction = vec![0.0; dim];
    for _ in 0..repetitions {
        let m = sampler.sample(rng);
        axpy(&mut reconstruction, 1.0 / repetitions as f64, &codebook.codeword(m));
    }
    Ok(QuantizedPayload {
        bits: repetitions as u64 * ceil_log2(2 * dim as u64),
        reconstruction,
    })
}

/// `⌈log₂ n⌉` for `n ≥ 1` in integer arithmetic.
fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

/// Capacity-threshold reception: a `bits`-sized payload sent over the block
/// whose per-pair gains are `gains` (out of `total_subcarriers` in the
/// symbol) is decoded iff
/// `bits < Σ_s log₂(1 + (E/N₀)·(SC/|S|)·|h_s|²)`.
/// Empty payloads always succeed; an infinite-SNR link (`N₀ = 0`) fails
/// only when every gain is zero.
pub fn transmission_succeeds(
    bits: u64,
    gains: &[Complex64],
    total_subcarriers: usize,
    sample_energy: f64,
    noise_psd: f64,
) -> bool {
    if bits == 0 {
        return true;
    }
    if gains.is_empty() {
        return false;
    }
    let boost = total_subcarriers as f64 / gains.len() as f64;
    let mut capacity = 0.0;
    for h in gains {
        let power = h.norm_sqr();
        if noise_psd == 0.0 {
            if power > 0.0 {
                return true;
            }
            continue;
        }
        capacity += (1.0 + sample_energy / noise_psd * boost * power).log2();
        if capacity > bits as f64 {
            return true;
        }
    }
    (bits as f64) < capacity
}

/// Which quantizer a digital round uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantizer {
    Scalar { bits: u32 },
    Codeword { repetitions: usize },
}

impl Quantizer {
    pub fn payload_bits(&self, dim: usize) -> u64 {
        match *self {
            Quantizer::Scalar { bits } => 64 + u64::from(bits) * dim as u64,
            Quantizer::Codeword { repetitions } => {
                repetitions as u64 * ceil_log2(2 * dim as u64)
            }
        }
    }
}

/// Per-round observables of the digital scheme.
pub struct QdgdDiagnostics {
    /// `successes[i][j]`: receiver `i` decoded sender `j` (diagonal false).
    pub successes: Vec<Vec<bool>>,
    /// Consensus directions actually applied.
    pub consensus: Vec<Vec<f64>>,
}

/// Decentralized gradient descent over quantized digital broadcasts. Every
/// node transmits each round on its own OFDMA block (round-robin,
/// interference-free); receivers average the neighbors they decoded:
/// `d̃_i = (1/N_rx,i) Σ_j χ_ij(ŵ_j − w_i)` (zero when nothing was decoded),
/// then `w_i ← Π[w_i + γ_k d̃_i − η_k g_i]`. A full round takes
/// `N·(SC_n/SC)` OFDM symbols of airtime.
pub struct QdgdAlgorithm<'p> {
    problem: &'p dyn Objective,
    domain: ParamDomain,
    quantizer: Quantizer,
    codebook: Codebook,
    channel: ChannelSpec,
    symbol: FramePlan,
    sc_per_node: usize,
    sample_energy: f64,
    noise_psd: f64,
    schedule: StepsizeSchedule,
    batch: BatchPolicy,
    master: u64,
    frame_s: f64,
}

impl<'p> QdgdAlgorithm<'p> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        problem: &'p dyn Objective,
        domain: ParamDomain,
        symbol: FramePlan,
        sc_per_node: usize,
        channel: ChannelSpec,
        sample_energy: f64,
        noise_psd: f64,
        quantizer: Quantizer,
        schedule: StepsizeSchedule,
        batch: BatchPolicy,
        master: u64,
    ) -> Result<Self, BaselineError> {
        let schedule = schedule.validated().map_err(|_| BaselineError::BadParameter {
            name: "stepsize",
            value: f64::NAN,
        })?;
        if problem.dim() != domain.dim() {
            return Err(BaselineError::Mismatch {
                left: "problem dimension",
                a: problem.dim(),
                right: "domain dimension",
                b: domain.dim(),
            });
        }
        if channel.n_nodes() != problem.n_nodes() {
            return Err(BaselineError::Mismatch {
                left: "channel nodes",
                a: channel.n_nodes(),
                right: "problem nodes",
                b: problem.n_nodes(),
            });
        }
        if symbol.symbols() != 1 {
            return Err(BaselineError::Mismatch {
                left: "symbol grid depth",
                a: symbol.symbols(),
                right: "expected",
                b: 1,
            });
        }
        let sc = symbol.subcarriers();
        if sc_per_node == 0 || sc_per_node > sc || sc % sc_per_node != 0 {
            return Err(BaselineError::UnevenBlocks { block: sc_per_node, total: sc });
        }
        if !(sample_energy.is_finite() && sample_energy > 0.0) {
            return Err(BaselineError::BadParameter { name: "sample_energy", value: sample_energy });
        }
        if !(noise_psd.is_finite() && noise_psd >= 0.0) {
            return Err(BaselineError::BadParameter { name: "noise_psd", value: noise_psd });
        }
        if let Quantizer::Scalar { bits } = quantizer {
            if bits == 0 || bits > 52 {
                return Err(BaselineError::BadBits(bits));
            }
        }
        if let Quantizer::Codeword { repetitions } = quantizer {
            if repetitions == 0 {
                return Err(BaselineError::NoRepetitions);
            }
        }
        let codebook = Codebook::new(domain.dim(), domain.radius())?;
        let t_ofdm = symbol.duration_s(channel.bandwidth_hz)?;
        let frame_s =
            problem.n_nodes() as f64 * (sc_per_node as f64 / sc as f64) * t_ofdm;
        Ok(QdgdAlgorithm {
            problem,
            domain,
            quantizer,
            codebook,
            channel,
            symbol,
            sc_per_node,
            sample_energy,
            noise_psd,
            schedule,
            batch,
            master,
            frame_s,
        })
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.frame_s
    }

    pub fn initial_states(&self) -> Vec<ModelVector> {
        (0..self.problem.n_nodes()).map(|_| self.domain.origin()).collect()
    }

    /// The subcarrier block node `j` transmits on.
    fn block(&self, j: usize) -> std::ops::Range<usize> {
        let per_symbol = self.symbol.subcarriers() / self.sc_per_node;
        let slot = j % per_symbol;
        slot * self.sc_per_node..(slot + 1) * self.sc_per_node
    }

    pub fn step(
        &self,
        trial: u64,
        k: u64,
        states: &[ModelVector],
    ) -> Result<(Vec<ModelVector>, QdgdDiagnostics), BaselineError> {
        let n = self.problem.n_nodes();
        assert_eq!(states.len(), n, "one state per node");
        let dim = self.domain.dim();

        let payloads: Vec<QuantizedPayload> = states
            .iter()
            .enumerate()
            .map(|(j, w)| {
                let mut rng = node_stream(self.master, trial, k, j, Purpose::Dither);
                match self.quantizer {
                    Quantizer::Scalar { bits } => scalar_quantize(w, bits, &mut rng),
                    Quantizer::Codeword { repetitions } => {
                        codeword_quantize(w, repetitions, &self.codebook, &mut rng)
                    }
                }
            })
            .collect::<Result<_, _>>()?;

        let fading_index = self.channel.schedule.fading_index(k, self.frame_s);
        let realization =
            draw_realization(&self.channel, &self.symbol, fading_index, self.master, trial)?;

        let mut successes = vec![vec![false; n]; n];
        let mut consensus = vec![vec![0.0; dim]; n];
        for i in 0..n {
            let mut received = 0usize;
            let mut sum = vec![0.0; dim];
            for (j, payload) in payloads.iter().enumerate() {
                if j == i {
                    continue;
                }
                let gains = &realization.gains(i, j)[self.block(j)];
                let ok = transmission_succeeds(
                    payload.bits,
                    gains,
                    self.symbol.subcarriers(),
                    self.sample_energy,
                    self.noise_psd,
                );
                successes[i][j] = ok;
                if ok {
                    received += 1;
                    for t in 0..dim {
                        sum[t] += payload.reconstruction[t] - states[i][t];
                    }
                }
            }
            if received > 0 {
                for t in 0..dim {
                    consensus[i][t] = sum[t] / received as f64;
                }
            }
        }

        let gamma = self.schedule.consensus_rate(k);
        let eta = self.schedule.learning_rate(k);
        let next = states
            .iter()
            .enumerate()
            .map(|(i, state)| {
                let mut v = state.as_slice().to_vec();
                axpy(&mut v, gamma, &consensus[i]);
                let g = match self.batch {
                    BatchPolicy::Full => self.problem.node_grad(i, state),
                    BatchPolicy::Size(b) => {
                        let mut rng = node_stream(self.master, trial, k, i, Purpose::Minibatch);
                        self.problem.minibatch_grad(i, state, b, &mut rng)
                    }
                };
                axpy(&mut v, -eta, &g);
                self.domain.project(v)
            })
            .collect();

        Ok((next, QdgdDiagnostics { successes, consensus }))
    }
}

/// No-communication reference: every node runs projected (mini)batch
/// gradient descent on its own data, `w_i ← Π[w_i − η_k g_i]`.
pub fn local_only_step(
    problem: &dyn Objective,
    domain: &ParamDomain,
    schedule: &StepsizeSchedule,
    batch: BatchPolicy,
    master: u64,
    trial: u64,
    k: u64,
    states: &[ModelVector],
) -> Vec<ModelVector> {
    let eta = schedule.learning_rate(k);
    states
        .iter()
        .enumerate()
        .map(|(i, state)| {
            let g = match batch {
                BatchPolicy::Full => problem.node_grad(i, state),
                BatchPolicy::Size(b) => {
                    let mut rng = node_stream(master, trial, k, i, Purpose::Minibatch);
                    problem.minibatch_grad(i, state, b, &mut rng)
                }
            };
            let mut v = state.as_slice().to_vec();
            axpy(&mut v, -eta, &g);
            domain.project(v)
        })
        .collect()
}
