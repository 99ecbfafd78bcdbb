//! The decentralized optimization loop over the air.
//!
//! Each frame `k`, every node flips a transmit coin. Transmitters encode
//! their state into simplex weights and radiate the corresponding energy
//! pattern; listeners turn received per-set energies into an unbiased
//! estimate `d̃_i` of the gain-weighted disagreement
//! `Σ_j Λ_ij (w_j − w_i)`, then every node takes the projected step
//! `w_i ← Π[w_i + γ_k d̃_i − η_k g_i]` with a (mini)batch gradient `g_i`.
//! The consensus stepsize `γ_k` shrinks slower than the learning stepsize
//! `η_k`, which is what trades radio noise against optimization progress.

use crate::channel::{draw_realization, ChannelError, ChannelSpec, GainLaplacian};
use crate::codec::{Codebook, CodecError};
use crate::domain::{axpy, DomainError, ModelVector, ParamDomain};
use crate::phy::{
    consensus_direction, draw_phase, draw_shift, draw_transmit, energy_estimates, receive,
    transmit_signal, FramePlan, PhyError, RadioParams, ResourcePartition,
};
use crate::problems::Objective;
use crate::rng::{node_stream, Purpose};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("stepsize {name} must be finite and positive, got {value}")]
    BadStepsize { name: &'static str, value: f64 },
    #[error("decay rate must be finite and nonnegative, got {0}")]
    BadDecay(f64),
    #[error("{name} must be finite and nonnegative, got {value}")]
    BadDesignInput { name: &'static str, value: f64 },
    #[error("partition sizes need resource units >= codewords, got Q={q}, M={m}")]
    GridTooSmall { q: usize, m: usize },
    #[error("{left} = {a}, but {right} = {b}; they must match")]
    Mismatch { left: &'static str, a: usize, right: &'static str, b: usize },
    #[error("transmit-probability design found {0} sign changes; expected exactly one")]
    NotSingleRoot(usize),
    #[error("forced transmit pattern has {got} entries for {want} nodes")]
    BadForcedPattern { got: usize, want: usize },
}

/// Learning stepsize `η_k` and consensus stepsize `γ_k` as functions of the
/// frame index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepsizeSchedule {
    Constant { eta: f64, gamma: f64 },
    /// `η_k = η₀(1+δk)⁻¹`, `γ_k = γ₀(1+δk)^(−3/4)`: the decaying pair whose
    /// ratio shrinks like `(1+δk)^(−1/4)`.
    Decreasing { eta0: f64, gamma0: f64, delta: f64 },
}

impl StepsizeSchedule {
    pub fn validated(self) -> Result<Self, OptimizerError> {
        let (eta, gamma) = match self {
            StepsizeSchedule::Constant { eta, gamma } => (eta, gamma),
            StepsizeSchedule::Decreasing { eta0, gamma0, delta } => {
                if !(delta.is_finite() && delta >= 0.0) {
                    return Err(OptimizerError::BadDecay(delta));
                }
                (eta0, gamma0)
            }
        };
        if !(eta.is_finite() && eta > 0.0) {
            return Err(OptimizerError::BadStepsize { name: "eta", value: eta });
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(OptimizerError::BadStepsize { name: "gamma", value: gamma });
        }
        Ok(self)
    }

    pub fn learning_rate(&self, k: u64) -> f64 {
        match *self {
            StepsizeSchedule::Constant { eta, .. } => eta,
            StepsizeSchedule::Decreasing { eta0, delta, .. } => eta0 / (1.0 + delta * k as f64),
        }
    }

    pub fn consensus_rate(&self, k: u64) -> f64 {
        match *self {
            StepsizeSchedule::Constant { gamma, .. } => gamma,
            StepsizeSchedule::Decreasing { gamma0, delta, .. } => {
                gamma0 * (1.0 + delta * k as f64).powf(-0.75)
            }
        }
    }
}

/// Design objective for the transmit probability: with dispersion factors
/// `(θ, ϖ)`, grid ratio `M/Q` and noise-to-signal ratio `N₀/(Λ*E)`, the
/// consensus-noise standard deviation is proportional to
/// `g(p) = [√(M/Q)·√(2(1+2θ²))·Λ* + √((1+ϖ²)/p)·Λ* + √(M/Q)·N₀/(E·p)] / √(1−p)`
/// whose stationarity condition is `h(p) = 0` with
/// `h(p) = A·p^(3/2) + B·(2p−1) + C·(3p−2)/√p`,
/// `A = √(M/Q)·√(2(1+2θ²))`, `B = √(1+ϖ²)`, `C = √(M/Q)·N₀/(Λ*E)`.
fn design_objective(p: f64, a: f64, b: f64, c: f64) -> f64 {
    a * p.powf(1.5) + b * (2.0 * p - 1.0) + c * (3.0 * p - 2.0) / p.sqrt()
}

/// Solves for the variance-minimizing transmit probability: the unique root
/// of `h(p)` in `(0, 1)`.
///
/// A 1000-point grid certifies that `h` changes sign exactly once before
/// bisection refines the bracket to machine precision. In the
/// noise-dominated limit (`noise_ratio → ∞`) the root tends to `2/3`; in
/// the repetition-dominated limit (`q/m → ∞`, no noise) it tends to `1/2`.
pub fn solve_tx_probability(
    theta: f64,
    varpi: f64,
    m: usize,
    q: usize,
    noise_ratio: f64,
) -> Result<f64, OptimizerError> {
    for (name, value) in [("theta", theta), ("varpi", varpi), ("noise_ratio", noise_ratio)] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(OptimizerError::BadDesignInput { name, value });
        }
    }
    if m == 0 || q < m {
        return Err(OptimizerError::GridTooSmall { q, m });
    }
    let ratio = (m as f64 / q as f64).sqrt();
    let a = ratio * (2.0 * (1.0 + 2.0 * theta * theta)).sqrt();
    let b = (1.0 + varpi * varpi).sqrt();
    let c = ratio * noise_ratio;

    let grid = 1000;
    let mut bracket = None;
    let mut sign_changes = 0;
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..grid {
        let p = i as f64 / grid as f64;
        let v = design_objective(p, a, b, c);
        if let Some((pp, pv)) = prev {
            if pv == 0.0 || pv.signum() != v.signum() {
                sign_changes += 1;
                if bracket.is_none() {
                    bracket = Some((pp, p));
                }
            }
        }
        prev = Some((p, v));
    }
    if sign_changes != 1 {
        return Err(OptimizerError::NotSingleRoot(sign_changes));
    }
    let (mut lo, mut hi) = bracket.unwrap();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if design_objective(mid, a, b, c) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Residual of the design objective at `p`, for verification.
pub fn tx_design_residual(p: f64, theta: f64, varpi: f64, m: usize, q: usize, noise_ratio: f64) -> f64 {
    let ratio = (m as f64 / q as f64).sqrt();
    let a = ratio * (2.0 * (1.0 + 2.0 * theta * theta)).sqrt();
    let b = (1.0 + varpi * varpi).sqrt();
    let c = ratio * noise_ratio;
    design_objective(p, a, b, c)
}

/// How the encoder's spreading parameter is chosen per frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpreadingPolicy {
    /// All mass on the nonzero codewords (maximal frame energy).
    Max,
    /// Fixed `φ`, clipped per vector into its admissible range.
    Fixed(f64),
}

/// Gradient evaluation per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchPolicy {
    Full,
    Size(usize),
}

/// Transmit-decision source; `Forced` pins the coin flips (debug/ablation).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxPattern {
    Random,
    Forced(Vec<bool>),
}

/// Toggles that change the algorithm only in diagnostic runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Network-wide codeword shift and per-transmitter random phases. On in
    /// every real run; turning it off exposes the static-channel bias.
    pub randomization: bool,
    pub tx_pattern: TxPattern,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { randomization: true, tx_pattern: TxPattern::Random }
    }
}

/// Everything the per-frame step needs, validated once.
pub struct NcotaAlgorithm<'p> {
    problem: &'p dyn Objective,
    domain: ParamDomain,
    codebook: Codebook,
    plan: FramePlan,
    partition: ResourcePartition,
    channel: ChannelSpec,
    radio: RadioParams,
    schedule: StepsizeSchedule,
    spreading: SpreadingPolicy,
    batch: BatchPolicy,
    options: RunOptions,
    master: u64,
    frame_s: f64,
}

/// Per-frame observables surfaced for measurement and tests.
pub struct FrameDiagnostics {
    /// Consensus estimates `d̃_i`; zero rows for transmitters.
    pub consensus: Vec<Vec<f64>>,
    /// Gradients `g_i` used in the update.
    pub gradients: Vec<Vec<f64>>,
    /// Energy statistics `r_i` per codeword; zero rows for transmitters.
    pub energies: Vec<Vec<f64>>,
    /// Who transmitted this frame.
    pub transmitted: Vec<bool>,
}

impl<'p> NcotaAlgorithm<'p> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        problem: &'p dyn Objective,
        domain: ParamDomain,
        plan: FramePlan,
        channel: ChannelSpec,
        radio: RadioParams,
        schedule: StepsizeSchedule,
        spreading: SpreadingPolicy,
        batch: BatchPolicy,
        options: RunOptions,
        master: u64,
    ) -> Result<Self, OptimizerError> {
        let schedule = schedule.validated()?;
        if problem.dim() != domain.dim() {
            return Err(OptimizerError::Mismatch {
                left: "problem dimension",
                a: problem.dim(),
                right: "domain dimension",
                b: domain.dim(),
            });
        }
        if channel.n_nodes() != problem.n_nodes() {
            return Err(OptimizerError::Mismatch {
                left: "channel nodes",
                a: channel.n_nodes(),
                right: "problem nodes",
                b: problem.n_nodes(),
            });
        }
        if let TxPattern::Forced(pattern) = &options.tx_pattern {
            if pattern.len() != problem.n_nodes() {
                return Err(OptimizerError::BadForcedPattern {
                    got: pattern.len(),
                    want: problem.n_nodes(),
                });
            }
        }
        let codebook = Codebook::new(domain.dim(), domain.radius())?;
        let q = plan.resource_units();
        let m = codebook.len();
        if q < m {
            return Err(OptimizerError::GridTooSmall { q, m });
        }
        let partition = ResourcePartition::strided(q, m)?;
        let frame_s = plan.duration_s(channel.bandwidth_hz)?;
        Ok(NcotaAlgorithm {
            problem,
            domain,
            codebook,
            plan,
            partition,
            channel,
            radio,
            schedule,
            spreading,
            batch,
            options,
            master,
            frame_s,
        })
    }

    pub fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn partition(&self) -> &ResourcePartition {
        &self.partition
    }

    pub fn schedule(&self) -> &StepsizeSchedule {
        &self.schedule
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.frame_s
    }

    /// All nodes start at the center of the domain.
    pub fn initial_states(&self) -> Vec<ModelVector> {
        (0..self.problem.n_nodes()).map(|_| self.domain.origin()).collect()
    }

    fn encode_state(&self, w: &[f64]) -> Result<crate::codec::EnergyProfile, CodecError> {
        match self.spreading {
            SpreadingPolicy::Max => self.codebook.encode_full(w),
            SpreadingPolicy::Fixed(phi) => self.codebook.encode(w, phi),
        }
    }

    /// One full frame: transmit coin flips, radio exchange, gradient
    /// evaluation and the projected update. Pure in `(trial, k, states)`:
    /// identical inputs reproduce identical outputs bit for bit.
    pub fn step(
        &self,
        trial: u64,
        k: u64,
        states: &[ModelVector],
    ) -> Result<(Vec<ModelVector>, FrameDiagnostics), OptimizerError> {
        let n = self.problem.n_nodes();
        assert_eq!(states.len(), n, "one state per node");
        let dim = self.domain.dim();
        let m = self.codebook.len();

        let transmitted: Vec<bool> = match &self.options.tx_pattern {
            TxPattern::Forced(pattern) => pattern.clone(),
            TxPattern::Random => (0..n)
                .map(|i| {
                    let mut rng = node_stream(self.master, trial, k, i, Purpose::TxDecision);
                    draw_transmit(&mut rng, self.radio.tx_probability)
                })
                .collect(),
        };

        let shift = if self.options.randomization {
            let mut rng = node_stream(self.master, trial, k, 0, Purpose::Shift);
            draw_shift(&mut rng, m)
        } else {
            0
        };

        let mut signals: Vec<(usize, Vec<num_complex::Complex64>)> = Vec::new();
        for (i, state) in states.iter().enumerate() {
            if !transmitted[i] {
                continue;
            }
            let profile = self.encode_state(state)?;
            let phase = if self.options.randomization {
                let mut rng = node_stream(self.master, trial, k, i, Purpose::Phase);
                draw_phase(&mut rng)
            } else {
                0.0
            };
            signals.push((i, transmit_signal(&profile, &self.partition, shift, phase, self.radio.sample_energy)));
        }
        let signal_refs: Vec<(usize, &[num_complex::Complex64])> =
            signals.iter().map(|(i, x)| (*i, x.as_slice())).collect();

        let fading_index = self.channel.schedule.fading_index(k, self.frame_s);
        let realization = draw_realization(&self.channel, &self.plan, fading_index, self.master, trial)?;

        let mut consensus = vec![vec![0.0; dim]; n];
        let mut energies = vec![vec![0.0; m]; n];
        for (i, state) in states.iter().enumerate() {
            if transmitted[i] {
                continue;
            }
            let mut noise_rng = node_stream(self.master, trial, k, i, Purpose::Noise);
            let y = receive(&signal_refs, &realization, i, self.radio.noise_psd, &mut noise_rng);
            let r = energy_estimates(&y, &self.partition, shift, &self.radio);
            consensus[i] = consensus_direction(&r, &self.codebook, state);
            energies[i] = r;
        }

        let gradients: Vec<Vec<f64>> = states
            .iter()
            .enumerate()
            .map(|(i, state)| match self.batch {
                BatchPolicy::Full => self.problem.node_grad(i, state),
                BatchPolicy::Size(b) => {
                    let mut rng = node_stream(self.master, trial, k, i, Purpose::Minibatch);
                    self.problem.minibatch_grad(i, state, b, &mut rng)
                }
            })
            .collect();

        let gamma = self.schedule.consensus_rate(k);
        let eta = self.schedule.learning_rate(k);
        let next: Vec<ModelVector> = states
            .iter()
            .enumerate()
            .map(|(i, state)| {
                let mut v = state.as_slice().to_vec();
                axpy(&mut v, gamma, &consensus[i]);
                axpy(&mut v, -eta, &gradients[i]);
                self.domain.project(v)
            })
            .collect();

        Ok((next, FrameDiagnostics { consensus, gradients, energies, transmitted }))
    }
}

/// Noise-free reference dynamics: replaces the radio estimate with the exact
/// gain-weighted disagreement and uses full gradients, i.e.
/// `w_i ← Π[w_i − γ_k (LW)_i − η_k ∇f_i(w_i)]`.
pub fn mean_field_step(
    laplacian: &GainLaplacian,
    problem: &dyn Objective,
    domain: &ParamDomain,
    schedule: &StepsizeSchedule,
    k: u64,
    states: &[ModelVector],
) -> Vec<ModelVector> {
    let mixed = laplacian.apply(states);
    let gamma = schedule.consensus_rate(k);
    let eta = schedule.learning_rate(k);
    states
        .iter()
        .enumerate()
        .map(|(i, state)| {
            let mut v = state.as_slice().to_vec();
            axpy(&mut v, -gamma, &mixed[i]);
            axpy(&mut v, -eta, &problem.node_grad(i, state));
            domain.project(v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{FadingSchedule, GainModel, SymmetricGains};
    use crate::problems::LinearRegression;
    use crate::rng::stream;
    use crate::rng::StreamKey;

    #[test]
    fn decreasing_schedule_follows_the_power_laws() {
        let s = StepsizeSchedule::Decreasing { eta0: 0.5, gamma0: 0.2, delta: 0.01 };
        assert_eq!(s.learning_rate(0), 0.5);
        assert_eq!(s.consensus_rate(0), 0.2);
        let k = 300;
        let f = 1.0 + 0.01 * k as f64;
        assert!((s.learning_rate(k) - 0.5 / f).abs() < 1e-15);
        assert!((s.consensus_rate(k) - 0.2 * f.powf(-0.75)).abs() < 1e-15);
        // The ratio η/γ decreases, so γ/η never decreases (compatible
        // schedules).
        let mut prev = f64::NEG_INFINITY;
        for k in 0..50 {
            let ratio = s.consensus_rate(k) / s.learning_rate(k);
            assert!(ratio >= prev);
            prev = ratio;
        }
    }

    #[test]
    fn tx_probability_limits_match_theory() {
        // Noise-dominated: root → 2/3.
        let p = solve_tx_probability(1.0, 1.0, 10, 20, 1e9).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-3, "noise limit gave {p}");
        // Repetition-dominated, noiseless: root → 1/2.
        let p = solve_tx_probability(1.0, 0.0, 2, 2_000_000, 0.0).unwrap();
        assert!((p - 0.5).abs() < 1e-3, "repetition limit gave {p}");
    }

    #[test]
    fn tx_probability_root_has_tiny_residual() {
        let p = solve_tx_probability(1.0, 0.938, 901, 1024, 0.35).unwrap();
        assert!(p > 0.0 && p < 1.0);
        let res = tx_design_residual(p, 1.0, 0.938, 901, 1024, 0.35);
        assert!(res.abs() < 1e-12, "residual {res:e}");
    }

    fn tiny_algorithm(problem: &LinearRegression) -> NcotaAlgorithm<'_> {
        let domain = ParamDomain::new(problem.dim(), 10.0).unwrap();
        let plan = FramePlan::new(1, 7, 0).unwrap();
        let mut grng = stream(5, StreamKey { trial: 0, iteration: 0, node: 0, purpose: Purpose::Gains });
        let gains = SymmetricGains::random_uniform(problem.n_nodes(), 0.2, 1.0, &mut grng).unwrap();
        let channel =
            ChannelSpec::new(GainModel::Explicit(gains), FadingSchedule::PerIteration, 1e6).unwrap();
        let radio = RadioParams::new(1.0, 1e-3, 0.5).unwrap();
        let schedule = StepsizeSchedule::Decreasing { eta0: 0.05, gamma0: 0.3, delta: 0.01 };
        NcotaAlgorithm::new(
            problem,
            domain,
            plan,
            channel,
            radio,
            schedule,
            SpreadingPolicy::Max,
            BatchPolicy::Full,
            RunOptions::default(),
            5,
        )
        .unwrap()
    }

    #[test]
    fn step_is_deterministic_and_keeps_states_in_domain() {
        let problem = LinearRegression::synthetic(4, 3, 4, 1.0, 5.0, 1.0, 0.1, 3).unwrap();
        let alg = tiny_algorithm(&problem);
        let states = alg.initial_states();
        let (a, diag_a) = alg.step(0, 0, &states).unwrap();
        let (b, diag_b) = alg.step(0, 0, &states).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.as_slice(), y.as_slice());
        }
        assert_eq!(diag_a.transmitted, diag_b.transmitted);
        // Transmitters hold zero consensus estimates.
        for (i, tx) in diag_a.transmitted.iter().enumerate() {
            if *tx {
                assert!(diag_a.consensus[i].iter().all(|&v| v == 0.0));
                assert!(diag_a.energies[i].iter().all(|&v| v == 0.0));
            }
        }
        // A different trial draws different randomness.
        let (c, _) = alg.step(1, 0, &states).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x.as_slice() != y.as_slice()));
    }

    #[test]
    fn consensus_estimate_is_unbiased_on_a_two_node_link() {
        // Node 0 fixed at w0, node 1 at w1; over many frames the average of
        // d̃_0 (zeros included when node 0 transmits) must approach
        // Λ·(w1 − w0) within Monte-Carlo error.
        let problem = LinearRegression::synthetic(2, 2, 3, 1.0, 2.0, 1.0, 0.1, 9).unwrap();
        let domain = ParamDomain::new(2, 1.0).unwrap();
        let plan = FramePlan::new(1, 5, 0).unwrap();
        let lam = 0.8;
        let gains = SymmetricGains::new(2, vec![0.0, lam, lam, 0.0]).unwrap();
        let channel =
            ChannelSpec::new(GainModel::Explicit(gains), FadingSchedule::PerIteration, 1e6).unwrap();
        let radio = RadioParams::new(1.0, 0.05, 0.4).unwrap();
        let schedule = StepsizeSchedule::Constant { eta: 0.1, gamma: 0.1 };
        let alg = NcotaAlgorithm::new(
            &problem,
            domain,
            plan,
            channel,
            radio,
            schedule,
            SpreadingPolicy::Max,
            BatchPolicy::Full,
            RunOptions::default(),
            17,
        )
        .unwrap();
        let w0 = alg.domain().project(vec![0.3, -0.2]);
        let w1 = alg.domain().project(vec![-0.4, 0.5]);
        let states = vec![w0, w1];
        let frames = 30_000;
        let mut mean = vec![0.0; 2];
        let mut sq = vec![0.0; 2];
        for k in 0..frames {
            let (_, diag) = alg.step(0, k, &states).unwrap();
            for i in 0..2 {
                mean[i] += diag.consensus[0][i];
                sq[i] += diag.consensus[0][i] * diag.consensus[0][i];
            }
        }
        let nf = frames as f64;
        for i in 0..2 {
            mean[i] /= nf;
            let var = (sq[i] / nf - mean[i] * mean[i]).max(0.0);
            let se = (var / nf).sqrt();
            let target = lam * (states[1][i] - states[0][i]);
            assert!(
                (mean[i] - target).abs() <= 5.0 * se.max(1e-9),
                "coord {i}: mean {} target {target} se {se}",
                mean[i]
            );
        }
    }

    #[test]
    fn mean_field_step_matches_hand_computation() {
        let problem = LinearRegression::synthetic(3, 2, 3, 1.0, 3.0, 1.0, 0.0, 21).unwrap();
        let domain = ParamDomain::new(2, 100.0).unwrap();
        let gains = SymmetricGains::new(3, vec![0.0, 0.5, 0.2, 0.5, 0.0, 0.4, 0.2, 0.4, 0.0]).unwrap();
        let lap = GainLaplacian::new(gains);
        let schedule = StepsizeSchedule::Constant { eta: 0.05, gamma: 0.1 };
        let states = vec![
            domain.project(vec![1.0, 0.0]),
            domain.project(vec![0.0, 1.0]),
            domain.project(vec![-1.0, 0.5]),
        ];
        let next = mean_field_step(&lap, &problem, &domain, &schedule, 0, &states);
        for i in 0..3 {
            let mut want = states[i].as_slice().to_vec();
            for j in 0..3 {
                let lam = if i == j { 0.0 } else { lap.gains().get(i, j) };
                for t in 0..2 {
                    want[t] += 0.1 * lam * (states[j][t] - states[i][t]);
                }
            }
            axpy(&mut want, -0.05, &problem.node_grad(i, states[i].as_slice()));
            for t in 0..2 {
                assert!((next[i][t] - want[t]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constructor_rejects_mismatched_pieces() {
        let problem = LinearRegression::synthetic(3, 2, 3, 1.0, 3.0, 1.0, 0.0, 2).unwrap();
        let domain = ParamDomain::new(5, 1.0).unwrap();
        let plan = FramePlan::new(1, 7, 0).unwrap();
        let mut grng = stream(1, StreamKey { trial: 0, iteration: 0, node: 0, purpose: Purpose::Gains });
        let gains = SymmetricGains::random_uniform(3, 0.1, 1.0, &mut grng).unwrap();
        let channel =
            ChannelSpec::new(GainModel::Explicit(gains), FadingSchedule::PerIteration, 1e6).unwrap();
        let radio = RadioParams::new(1.0, 0.0, 0.5).unwrap();
        let schedule = StepsizeSchedule::Constant { eta: 0.1, gamma: 0.1 };
        let bad = NcotaAlgorithm::new(
            &problem,
            domain,
            plan,
            channel,
            radio,
            schedule,
            SpreadingPolicy::Max,
            BatchPolicy::Full,
            RunOptions::default(),
            1,
        );
        assert!(bad.is_err());
    }
}
