//! Closed-form performance bounds and the stepsize conditions under which
//! they hold.
//!
//! The per-node root-mean-square error `√((1/N)Σ_i E‖w_ik − w*‖²)` splits
//! into three pieces, each with its own closed-form bound: the deviation of
//! the noisy trajectory from its noiseless counterpart (driven by the
//! consensus and gradient noise variances), the contraction of the noiseless
//! trajectory toward the minimizer of a consensus-penalized surrogate, and
//! the offset between that surrogate minimizer and the true optimum. The
//! evaluators here compute those bounds for arbitrary schedules (by running
//! products) and in closed form for the `(1+δk)^(−1)` / `(1+δk)^(−3/4)`
//! decaying pair.

use crate::channel::GainLaplacian;
use crate::codec::Codebook;
use crate::domain::ModelVector;
use crate::optimizer::{FrameDiagnostics, StepsizeSchedule};
use crate::problems::Objective;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("{name} = {value} is outside its valid range")]
    BadConstant { name: &'static str, value: f64 },
    #[error("bound requested at k = {k} before the settling iteration {settle}")]
    BeforeSettling { k: u64, settle: u64 },
    #[error("stepsize condition {which} fails at iteration {at}")]
    ConditionViolated { which: &'static str, at: u64 },
    #[error("stepsize conditions never satisfied below the search cap {cap}")]
    NeverSatisfied { cap: u64 },
    #[error("decay rate {delta} exceeds the admissible 4μη₀/5 = {limit}")]
    DecayTooFast { delta: f64, limit: f64 },
    #[error("codebook has {got} codewords but the constants say {want}")]
    CodebookMismatch { got: usize, want: usize },
}

/// Everything the bound evaluators need to know about a configured run.
/// Assemble it once from the problem (`strong_convexity`, `smoothness`,
/// `gradient_divergence`, `interior_distance`, `diameter`), the channel
/// (`connectivity`, `spectral_radius`, `max_total_gain`, the two dispersion
/// factors) and the radio (`codewords` through `tx_probability`); then fill
/// the two variance fields from [`consensus_variance_bound`] and the
/// minibatch variance bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstants {
    /// Strong convexity modulus `μ` of every local objective.
    pub strong_convexity: f64,
    /// Smoothness modulus `L` (gradient Lipschitz constant).
    pub smoothness: f64,
    /// Second-smallest Laplacian eigenvalue `ρ₂` (algebraic connectivity).
    pub connectivity: f64,
    /// Largest Laplacian eigenvalue `ρ_N`.
    pub spectral_radius: f64,
    /// Largest total received gain `Λ* = max_i Σ_j Λ_ij`.
    pub max_total_gain: f64,
    /// Per-unit gain dispersion `θ`: worst-case normalized standard
    /// deviation of a single unit's energy around its mean.
    pub gain_dispersion: f64,
    /// Per-set gain dispersion `ϖ`: worst-case normalized standard
    /// deviation of a set-averaged energy around its mean.
    pub set_dispersion: f64,
    /// Variance bound `Σ⁽¹⁾` on the consensus estimate (zero = noiseless).
    pub consensus_variance: f64,
    /// Variance bound `Σ⁽²⁾` on the stochastic gradient (zero = full batch).
    pub gradient_variance: f64,
    /// Gradient divergence `∇* = max_i ‖∇f_i(w*)‖`.
    pub gradient_divergence: f64,
    /// Distance `ζ` from the optimum to the domain boundary, `r − ‖w*‖`.
    pub interior_distance: f64,
    /// Domain diameter `dm = 2r`.
    pub diameter: f64,
    pub n_nodes: usize,
    pub codewords: usize,
    pub resource_units: usize,
    /// Per-unit transmit energy `E`.
    pub sample_energy: f64,
    /// Noise power per unit `N₀`.
    pub noise_psd: f64,
    pub tx_probability: f64,
}

impl BoundConstants {
    fn validate(&self) -> Result<(), TheoryError> {
        let positive: [(&'static str, f64); 4] = [
            ("strong_convexity", self.strong_convexity),
            ("smoothness", self.smoothness),
            ("connectivity", self.connectivity),
            ("sample_energy", self.sample_energy),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(TheoryError::BadConstant { name, value });
            }
        }
        let nonnegative: [(&'static str, f64); 8] = [
            ("spectral_radius", self.spectral_radius),
            ("max_total_gain", self.max_total_gain),
            ("gain_dispersion", self.gain_dispersion),
            ("set_dispersion", self.set_dispersion),
            ("consensus_variance", self.consensus_variance),
            ("gradient_variance", self.gradient_variance),
            ("gradient_divergence", self.gradient_divergence),
            ("noise_psd", self.noise_psd),
        ];
        for (name, value) in nonnegative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(TheoryError::BadConstant { name, value });
            }
        }
        if !(self.interior_distance.is_finite() && self.interior_distance >= 0.0) {
            return Err(TheoryError::BadConstant {
                name: "interior_distance",
                value: self.interior_distance,
            });
        }
        if !(self.diameter.is_finite() && self.diameter >= 0.0) {
            return Err(TheoryError::BadConstant { name: "diameter", value: self.diameter });
        }
        if self.smoothness < self.strong_convexity {
            return Err(TheoryError::BadConstant { name: "smoothness", value: self.smoothness });
        }
        if !(self.tx_probability > 0.0 && self.tx_probability < 1.0) {
            return Err(TheoryError::BadConstant {
                name: "tx_probability",
                value: self.tx_probability,
            });
        }
        if self.n_nodes == 0 || self.codewords == 0 || self.resource_units < self.codewords {
            return Err(TheoryError::BadConstant {
                name: "resource_units",
                value: self.resource_units as f64,
            });
        }
        Ok(())
    }
}

/// Largest squared distance between codewords: the two antipodal spokes of
/// one coordinate sit `2√d·r` apart, which beats any cross-coordinate pair
/// (`√2·√d·r`) and any spoke-to-origin pair (`√d·r`).
pub fn max_codeword_gap_sq(codebook: &Codebook) -> f64 {
    let s = codebook.spoke();
    4.0 * s * s
}

/// Worst-case variance of the consensus estimate, averaged over nodes:
/// `(1/N)Σ_i var(d̃_i) ≤ maxgap² · (1/(1−p)) ·
///   [√(M/Q)·√(2(1+2θ²))·Λ* + √((1+ϖ²)/p)·Λ* + √(M/Q)·N₀/(E·p)]²`.
/// The three bracket terms are, in order: energy dispersion across the units
/// of a set, the loss from silent frames and set-level gain estimation, and
/// receiver thermal noise.
pub fn consensus_variance_bound(
    constants: &BoundConstants,
    codebook: &Codebook,
) -> Result<f64, TheoryError> {
    constants.validate()?;
    if codebook.len() != constants.codewords {
        return Err(TheoryError::CodebookMismatch {
            got: codebook.len(),
            want: constants.codewords,
        });
    }
    let p = constants.tx_probability;
    let ratio = (constants.codewords as f64 / constants.resource_units as f64).sqrt();
    let theta = constants.gain_dispersion;
    let varpi = constants.set_dispersion;
    let dispersion = ratio * (2.0 * (1.0 + 2.0 * theta * theta)).sqrt() * constants.max_total_gain;
    let silence = ((1.0 + varpi * varpi) / p).sqrt() * constants.max_total_gain;
    let noise = ratio * constants.noise_psd / (constants.sample_energy * p);
    let bracket = dispersion + silence + noise;
    Ok(max_codeword_gap_sq(codebook) / (1.0 - p) * bracket * bracket)
}

/// Stepsize conditions at iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionFlags {
    /// `η_k(μ+L) + γ_kρ_N ≤ 2`: the combined update stays a contraction.
    pub stability: bool,
    /// `η_k/γ_k ≤ ζμρ₂/(√N·∇*·L)`: the consensus penalty dominates the
    /// gradient divergence, keeping the surrogate minimizer interior.
    pub coupling: bool,
    /// `γ_k/η_k ≤ γ_{k+1}/η_{k+1}`: the penalty weight never weakens.
    pub ratio_monotone: bool,
}

impl ConditionFlags {
    pub fn all(&self) -> bool {
        self.stability && self.coupling && self.ratio_monotone
    }
}

fn coupling_threshold(c: &BoundConstants) -> f64 {
    let denominator = (c.n_nodes as f64).sqrt() * c.gradient_divergence * c.smoothness;
    if denominator == 0.0 {
        f64::INFINITY
    } else {
        c.interior_distance * c.strong_convexity * c.connectivity / denominator
    }
}

pub fn check_conditions(
    constants: &BoundConstants,
    schedule: &StepsizeSchedule,
    k: u64,
) -> ConditionFlags {
    let eta = schedule.learning_rate(k);
    let gamma = schedule.consensus_rate(k);
    let stability = eta * (constants.strong_convexity + constants.smoothness)
        + gamma * constants.spectral_radius
        <= 2.0;
    let coupling = eta / gamma <= coupling_threshold(constants);
    let ratio_monotone =
        gamma / eta <= schedule.consensus_rate(k + 1) / schedule.learning_rate(k + 1);
    ConditionFlags { stability, coupling, ratio_monotone }
}

/// Smallest iteration from which the stability and coupling conditions hold
/// (and keep holding: for constant or decaying schedules both left-hand
/// sides are nonincreasing in `k`). Doubles then bisects; errors if nothing
/// works below the cap of 1e9 iterations.
pub fn settling_iteration(
    constants: &BoundConstants,
    schedule: &StepsizeSchedule,
) -> Result<u64, TheoryError> {
    const CAP: u64 = 1_000_000_000;
    let holds = |k: u64| {
        let f = check_conditions(constants, schedule, k);
        f.stability && f.coupling
    };
    if holds(0) {
        return Ok(0);
    }
    if matches!(schedule, StepsizeSchedule::Constant { .. }) {
        return Err(TheoryError::NeverSatisfied { cap: 0 });
    }
    let mut hi = 1u64;
    while !holds(hi) {
        if hi >= CAP {
            return Err(TheoryError::NeverSatisfied { cap: CAP });
        }
        hi = (hi * 2).min(CAP);
    }
    let mut lo = hi / 2; // holds(lo) is false
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The three error bounds at an iteration, in the order the total error
/// decomposes: noise-driven deviation, transient contraction (plus the cost
/// of tracking a moving surrogate minimizer), and the surrogate's offset
/// from the true optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBounds {
    pub noise: f64,
    pub transient: f64,
    pub penalty_offset: f64,
}

impl ErrorBounds {
    /// Bound on the per-node RMS error `√((1/N)Σ_i E‖w_ik − w*‖²)`.
    pub fn total(&self) -> f64 {
        self.noise + self.transient + self.penalty_offset
    }
}

/// Evaluates the three bounds exactly for an arbitrary schedule, walking the
/// contraction products `P_tk = Π_{j=t+1}^{k−1}(1 − μη_j)` backward from
/// `t = k−1`:
/// `noise² = Σ_t P_tk²(γ_t²Σ⁽¹⁾ + η_t²Σ⁽²⁾)`,
/// `transient = dm·P_(s−1)k + (∇*L/μρ₂)·Σ_t P_tk(1 + (L²/μρ₂)(η_t/γ_t))(η_t/γ_t − η_{t+1}/γ_{t+1})`,
/// `penalty_offset = (∇*L/μρ₂)·(η_k/γ_k)`,
/// with sums over `t ∈ [settle, k)`. Empty products are 1 and empty sums 0,
/// so at `k = settle` the bounds are `(0, dm, ·)`. The stepsize conditions
/// are verified on the whole range first.
pub fn error_decomposition(
    constants: &BoundConstants,
    schedule: &StepsizeSchedule,
    settle: u64,
    k: u64,
) -> Result<ErrorBounds, TheoryError> {
    constants.validate()?;
    if k < settle {
        return Err(TheoryError::BeforeSettling { k, settle });
    }
    for t in settle..k {
        let flags = check_conditions(constants, schedule, t);
        if !flags.stability {
            return Err(TheoryError::ConditionViolated { which: "stability", at: t });
        }
        if !flags.coupling {
            return Err(TheoryError::ConditionViolated { which: "coupling", at: t });
        }
        if !flags.ratio_monotone {
            return Err(TheoryError::ConditionViolated { which: "ratio_monotone", at: t });
        }
    }
    let mu = constants.strong_convexity;
    let l = constants.smoothness;
    let rho2 = constants.connectivity;
    let tracking_gain = constants.gradient_divergence * l / (mu * rho2);

    let mut noise_sq = 0.0;
    let mut tracking = 0.0;
    let mut product = 1.0; // P_tk for the t about to be visited
    let mut t = k;
    while t > settle {
        t -= 1;
        let eta = schedule.learning_rate(t);
        let gamma = schedule.consensus_rate(t);
        noise_sq += product
            * product
            * (gamma * gamma * constants.consensus_variance
                + eta * eta * constants.gradient_variance);
        let ratio = eta / gamma;
        let ratio_next = schedule.learning_rate(t + 1) / schedule.consensus_rate(t + 1);
        tracking += product * (1.0 + l * l / (mu * rho2) * ratio) * (ratio - ratio_next);
        product *= 1.0 - mu * eta;
    }
    // After the walk, `product` is the full contraction from `settle` to `k`.
    let transient = constants.diameter * product + tracking_gain * tracking;
    let penalty_offset =
        tracking_gain * schedule.learning_rate(k) / schedule.consensus_rate(k);
    Ok(ErrorBounds { noise: noise_sq.sqrt(), transient, penalty_offset })
}

/// Closed-form bounds for the decaying pair `η_k = η₀(1+δk)⁻¹`,
/// `γ_k = γ₀(1+δk)^(−3/4)`, valid when `δ ≤ 4μη₀/5`:
/// `noise = (√5·e/(2√μ))·[(γ₀/√η₀)√Σ⁽¹⁾ + √(η₀Σ⁽²⁾)·u]·u`,
/// `transient = dm·(1 + δ(k−s)/(1+δs))^(−5/4)
///   + (∇*L/μρ₂)(e/4)(η₀/γ₀)(1 + (L²/μρ₂)(η₀/γ₀)u)·u`,
/// `penalty_offset = (∇*L/μρ₂)(η₀/γ₀)·u`, with `u = (1+δk)^(−1/4)`.
pub fn decay_error_bounds(
    constants: &BoundConstants,
    eta0: f64,
    gamma0: f64,
    delta: f64,
    settle: u64,
    k: u64,
) -> Result<ErrorBounds, TheoryError> {
    constants.validate()?;
    for (name, value) in [("eta0", eta0), ("gamma0", gamma0), ("delta", delta)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(TheoryError::BadConstant { name, value });
        }
    }
    let mu = constants.strong_convexity;
    let limit = 0.8 * mu * eta0;
    if delta > limit * (1.0 + 1e-12) {
        return Err(TheoryError::DecayTooFast { delta, limit });
    }
    if k < settle {
        return Err(TheoryError::BeforeSettling { k, settle });
    }
    let l = constants.smoothness;
    let rho2 = constants.connectivity;
    let tracking_gain = constants.gradient_divergence * l / (mu * rho2);
    let u = (1.0 + delta * k as f64).powf(-0.25);
    let e = std::f64::consts::E;

    let noise = (5.0f64.sqrt() * e / (2.0 * mu.sqrt()))
        * ((gamma0 / eta0.sqrt()) * constants.consensus_variance.sqrt()
            + (eta0 * constants.gradient_variance).sqrt() * u)
        * u;
    let contraction = (1.0 + delta * (k - settle) as f64 / (1.0 + delta * settle as f64))
        .powf(-1.25);
    let ratio0 = eta0 / gamma0;
    let transient = constants.diameter * contraction
        + tracking_gain * (e / 4.0) * ratio0 * (1.0 + l * l / (mu * rho2) * ratio0 * u) * u;
    let penalty_offset = tracking_gain * ratio0 * u;
    Ok(ErrorBounds { noise, transient, penalty_offset })
}

/// The consensus-penalized surrogate `Σ_i f_i(w_i) + (γ/2η)·Σ_{i<j}Λ_ij‖w_i−w_j‖²`,
/// evaluated blockwise (the `Nd × Nd` penalty matrix is never formed). Its
/// minimizer is what the noiseless dynamics contract to; the quadratic term
/// vanishes exactly at consensus.
pub fn penalized_objective(
    problem: &dyn Objective,
    laplacian: &GainLaplacian,
    eta: f64,
    gamma: f64,
    states: &[ModelVector],
) -> f64 {
    assert_eq!(states.len(), problem.n_nodes(), "one state per node");
    let stacked: f64 =
        states.iter().enumerate().map(|(i, w)| problem.node_loss(i, w.as_slice())).sum();
    stacked + gamma / (2.0 * eta) * laplacian.quadratic_form(states)
}

/// One frame's noise realizations, per node: the consensus estimate minus
/// its conditional mean, and the stochastic gradient minus the exact one.
pub struct NoiseSample {
    pub consensus: Vec<Vec<f64>>,
    pub gradient: Vec<Vec<f64>>,
}

/// Extracts noise samples from a frame's diagnostics, given the ground-truth
/// gains. The consensus estimate's conditional mean given the states is the
/// exact gain-weighted disagreement (silent frames contribute zeros, which
/// is what keeps the estimate unbiased), so
/// `ε⁽¹⁾_i = d̃_i − Σ_j Λ_ij(w_j − w_i)` and `ε⁽²⁾_i = g_i − ∇f_i(w_i)`.
pub fn measure_noise(
    diagnostics: &FrameDiagnostics,
    laplacian: &GainLaplacian,
    problem: &dyn Objective,
    states: &[ModelVector],
) -> NoiseSample {
    let mixed = laplacian.apply(states);
    let consensus = diagnostics
        .consensus
        .iter()
        .zip(&mixed)
        .map(|(est, flow)| est.iter().zip(flow).map(|(a, b)| a + b).collect())
        .collect();
    let gradient = diagnostics
        .gradients
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let exact = problem.node_grad(i, states[i].as_slice());
            g.iter().zip(&exact).map(|(a, b)| a - b).collect()
        })
        .collect();
    NoiseSample { consensus, gradient }
}

/// Mean squared norms `( (1/TN)ΣΣ‖ε⁽¹⁾_i‖², (1/TN)ΣΣ‖ε⁽²⁾_i‖² )` over a
/// batch of frames — the empirical counterparts of the two variance bounds.
pub fn average_noise_power(samples: &[NoiseSample]) -> (f64, f64) {
    let mut consensus = 0.0;
    let mut gradient = 0.0;
    let mut count = 0usize;
    for sample in samples {
        for e in &sample.consensus {
            consensus += e.iter().map(|x| x * x).sum::<f64>();
        }
        for e in &sample.gradient {
            gradient += e.iter().map(|x| x * x).sum::<f64>();
        }
        count += sample.consensus.len();
    }
    if count == 0 {
        return (0.0, 0.0);
    }
    (consensus / count as f64, gradient / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SymmetricGains;
    use crate::domain::ParamDomain;
    use crate::problems::LinearRegression;

    fn base_constants() -> BoundConstants {
        BoundConstants {
            strong_convexity: 1.0,
            smoothness: 10.0,
            connectivity: 0.5,
            spectral_radius: 2.0,
            max_total_gain: 0.7,
            gain_dispersion: 1.0,
            set_dispersion: 0.5,
            consensus_variance: 1.0,
            gradient_variance: 0.0,
            gradient_divergence: 0.3,
            interior_distance: 0.4,
            diameter: 2.0,
            n_nodes: 10,
            codewords: 11,
            resource_units: 16,
            sample_energy: 1.0,
            noise_psd: 1e-3,
            tx_probability: 0.5,
        }
    }

    #[test]
    fn codeword_gap_matches_exhaustive_scan() {
        let cb = Codebook::new(3, 0.8).unwrap();
        let mut best = 0.0f64;
        for a in 0..cb.len() {
            for b in 0..cb.len() {
                let za = cb.codeword(a);
                let zb = cb.codeword(b);
                let d2: f64 = za.iter().zip(&zb).map(|(x, y)| (x - y) * (x - y)).sum();
                best = best.max(d2);
            }
        }
        assert!((max_codeword_gap_sq(&cb) - best).abs() < 1e-12);
        assert!((best - 4.0 * 3.0 * 0.8 * 0.8).abs() < 1e-12);
    }

    #[test]
    fn variance_bound_closed_form_special_case() {
        // No noise, no dispersion, p = 1/2, M = Q: the bracket collapses to
        // (√2 + √2)Λ*, so the bound is maxgap²·2·8Λ*² = 16·maxgap²·Λ*².
        let cb = Codebook::new(2, 1.0).unwrap();
        let mut c = base_constants();
        c.gain_dispersion = 0.0;
        c.set_dispersion = 0.0;
        c.noise_psd = 0.0;
        c.tx_probability = 0.5;
        c.codewords = cb.len();
        c.resource_units = cb.len();
        let got = consensus_variance_bound(&c, &cb).unwrap();
        let want = 16.0 * max_codeword_gap_sq(&cb) * c.max_total_gain * c.max_total_gain;
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn variance_bound_grows_with_noise() {
        let cb = Codebook::new(4, 1.0).unwrap();
        let mut c = base_constants();
        c.codewords = cb.len();
        c.resource_units = 16;
        let lo = consensus_variance_bound(&c, &cb).unwrap();
        c.noise_psd = 1.0;
        let hi = consensus_variance_bound(&c, &cb).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn stability_boundary_holds_with_equality() {
        let mut c = base_constants();
        c.spectral_radius = 2.0;
        let eta = 2.0 / (c.strong_convexity + c.smoothness);
        // A vanishing consensus stepsize leaves exactly the boundary case.
        let s = StepsizeSchedule::Constant { eta, gamma: 1e-300 };
        assert!(check_conditions(&c, &s, 0).stability);
        let s = StepsizeSchedule::Constant { eta: eta * 1.01, gamma: 1e-300 };
        assert!(!check_conditions(&c, &s, 0).stability);
    }

    #[test]
    fn coupling_is_a_strict_threshold() {
        let c = base_constants();
        let threshold = c.interior_distance * c.strong_convexity * c.connectivity
            / ((c.n_nodes as f64).sqrt() * c.gradient_divergence * c.smoothness);
        let gamma = 0.1;
        let pass = StepsizeSchedule::Constant { eta: gamma * threshold, gamma };
        let fail = StepsizeSchedule::Constant { eta: gamma * threshold * 1.01, gamma };
        assert!(check_conditions(&c, &pass, 0).coupling);
        assert!(!check_conditions(&c, &fail, 0).coupling);
    }

    #[test]
    fn decaying_ratio_is_always_monotone() {
        let c = base_constants();
        let s = StepsizeSchedule::Decreasing { eta0: 1.0, gamma0: 1.0, delta: 0.3 };
        for k in 0..200 {
            assert!(check_conditions(&c, &s, k).ratio_monotone);
        }
    }

    #[test]
    fn settling_iteration_matches_linear_scan() {
        let mut c = base_constants();
        c.gradient_divergence = 0.0063; // coupling threshold ≈ 1, hit near k ≈ 150
        let s = StepsizeSchedule::Decreasing { eta0: 0.3, gamma0: 0.15, delta: 0.1 };
        let fast = settling_iteration(&c, &s).unwrap();
        let mut scan = 0;
        loop {
            let f = check_conditions(&c, &s, scan);
            if f.stability && f.coupling {
                break;
            }
            scan += 1;
            assert!(scan < 1_000_000);
        }
        assert_eq!(fast, scan);
        assert!(fast > 0, "instance should not settle immediately");

        // A larger gradient divergence tightens coupling, never loosening it.
        c.gradient_divergence = 0.063;
        assert!(settling_iteration(&c, &s).unwrap() > fast);
    }

    #[test]
    fn settling_is_zero_when_conditions_hold_immediately() {
        let c = base_constants();
        let s = StepsizeSchedule::Decreasing { eta0: 1e-4, gamma0: 0.1, delta: 0.01 };
        assert_eq!(settling_iteration(&c, &s).unwrap(), 0);
    }

    #[test]
    fn decomposition_at_the_settling_iteration_is_the_diameter() {
        let c = base_constants();
        let s = StepsizeSchedule::Decreasing { eta0: 1e-3, gamma0: 0.1, delta: 1e-4 };
        let b = error_decomposition(&c, &s, 0, 0).unwrap();
        assert_eq!(b.noise, 0.0);
        assert!((b.transient - c.diameter).abs() < 1e-15);
        let ratio = s.learning_rate(0) / s.consensus_rate(0);
        let want = c.gradient_divergence * c.smoothness
            / (c.strong_convexity * c.connectivity)
            * ratio;
        assert!((b.penalty_offset - want).abs() < 1e-15 * want.abs().max(1.0));
    }

    #[test]
    fn constant_stepsizes_reproduce_the_geometric_forms() {
        let mut c = base_constants();
        c.gradient_variance = 0.0;
        let eta = 1e-3;
        let gamma = 0.05;
        let s = StepsizeSchedule::Constant { eta, gamma };
        let k = 400;
        let b = error_decomposition(&c, &s, 0, k).unwrap();
        let mu = c.strong_convexity;
        let rho = 1.0 - mu * eta;
        // Contraction term: dm·(1−μη)^k, exactly.
        let contraction = c.diameter * rho.powi(k as i32);
        // No tracking term for a constant ratio.
        assert!((b.transient - contraction).abs() <= 1e-12 * contraction);
        // Noise term: geometric sum in closed form, exactly.
        let geo = (1.0 - rho.powi(2 * k as i32)) / (1.0 - rho * rho);
        let noise = gamma * (c.consensus_variance * geo).sqrt();
        assert!((b.noise - noise).abs() <= 1e-12 * noise);
        // And below its simple relaxation γ√(Σ⁽¹⁾/(ημ)).
        assert!(b.noise <= gamma * (c.consensus_variance / (eta * mu)).sqrt() * (1.0 + 1e-12));
        // Offset term: (∇*L/μρ₂)·(η/γ).
        let offset = c.gradient_divergence * c.smoothness / (mu * c.connectivity) * eta / gamma;
        assert!((b.penalty_offset - offset).abs() <= 1e-12 * offset);
    }

    #[test]
    fn decomposition_rejects_violated_conditions() {
        let c = base_constants();
        // Stability fails: η(μ+L) alone exceeds 2.
        let s = StepsizeSchedule::Constant { eta: 0.5, gamma: 1e-6 };
        let err = error_decomposition(&c, &s, 0, 10).unwrap_err();
        assert!(matches!(err, TheoryError::ConditionViolated { which: "stability", .. }));
    }

    #[test]
    fn decay_bounds_track_the_quarter_power() {
        let c = base_constants();
        let eta0 = 0.5;
        let gamma0 = 0.1;
        let delta = 0.1; // ≤ 0.8·μ·η₀ = 0.4
        // penalty_offset(k) / penalty_offset(k') = ((1+δk')/(1+δk))^{1/4}:
        // with 1+δk = 2 and 1+δk' = 32 the ratio is exactly 16^{1/4} = 2.
        let a = decay_error_bounds(&c, eta0, gamma0, delta, 0, 10).unwrap();
        let b = decay_error_bounds(&c, eta0, gamma0, delta, 0, 310).unwrap();
        assert!((a.penalty_offset / b.penalty_offset - 2.0).abs() < 1e-12);
        // Noise and offset terms never increase in k.
        let mut prev = f64::INFINITY;
        for k in [0u64, 1, 5, 20, 100, 1000] {
            let e = decay_error_bounds(&c, eta0, gamma0, delta, 0, k).unwrap();
            assert!(e.noise <= prev * (1.0 + 1e-15));
            prev = e.noise;
        }
    }

    #[test]
    fn decay_bounds_vanish_without_noise() {
        let mut c = base_constants();
        c.consensus_variance = 0.0;
        c.gradient_variance = 0.0;
        let b = decay_error_bounds(&c, 0.5, 0.1, 0.1, 0, 50).unwrap();
        assert_eq!(b.noise, 0.0);
    }

    #[test]
    fn decay_rate_cap_is_enforced() {
        let c = base_constants();
        let limit = 0.8 * c.strong_convexity * 0.5;
        assert!(decay_error_bounds(&c, 0.5, 0.1, limit, 0, 10).is_ok());
        assert!(decay_error_bounds(&c, 0.5, 0.1, limit * 1.01, 0, 10).is_err());
    }

    #[test]
    fn penalized_objective_matches_pairwise_oracle() {
        let problem = LinearRegression::synthetic(3, 2, 4, 1.0, 3.0, 1.0, 0.1, 11).unwrap();
        let domain = ParamDomain::new(2, 10.0).unwrap();
        let gains =
            SymmetricGains::new(3, vec![0.0, 0.5, 0.2, 0.5, 0.0, 0.4, 0.2, 0.4, 0.0]).unwrap();
        let lap = GainLaplacian::new(gains);
        let states = vec![
            domain.project(vec![1.0, 0.0]),
            domain.project(vec![0.0, 1.0]),
            domain.project(vec![-1.0, 0.5]),
        ];
        let eta = 0.01;
        let gamma = 0.2;
        let got = penalized_objective(&problem, &lap, eta, gamma, &states);
        let mut want: f64 =
            (0..3).map(|i| problem.node_loss(i, states[i].as_slice())).sum();
        for i in 0..3 {
            for j in (i + 1)..3 {
                let d2: f64 = states[i]
                    .iter()
                    .zip(states[j].iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                want += gamma / (2.0 * eta) * lap.gains().get(i, j) * d2;
            }
        }
        assert!((got - want).abs() < 1e-12 * want.abs().max(1.0));

        // At consensus the penalty vanishes.
        let same = vec![
            domain.project(vec![0.3, 0.4]),
            domain.project(vec![0.3, 0.4]),
            domain.project(vec![0.3, 0.4]),
        ];
        let at_consensus = penalized_objective(&problem, &lap, eta, gamma, &same);
        let plain: f64 = (0..3).map(|i| problem.node_loss(i, &[0.3, 0.4])).sum();
        assert!((at_consensus - plain).abs() < 1e-12 * plain.abs().max(1.0));
    }

    #[test]
    fn noise_from_exact_estimates_is_zero() {
        let problem = LinearRegression::synthetic(3, 2, 4, 1.0, 3.0, 1.0, 0.1, 13).unwrap();
        let domain = ParamDomain::new(2, 10.0).unwrap();
        let gains =
            SymmetricGains::new(3, vec![0.0, 0.5, 0.2, 0.5, 0.0, 0.4, 0.2, 0.4, 0.0]).unwrap();
        let lap = GainLaplacian::new(gains);
        let states = vec![
            domain.project(vec![1.0, 0.0]),
            domain.project(vec![0.0, 1.0]),
            domain.project(vec![-1.0, 0.5]),
        ];
        let mixed = lap.apply(&states);
        let diag = FrameDiagnostics {
            consensus: mixed.iter().map(|v| v.iter().map(|x| -x).collect()).collect(),
            gradients: (0..3).map(|i| problem.node_grad(i, states[i].as_slice())).collect(),
            energies: vec![vec![]; 3],
            transmitted: vec![false; 3],
        };
        let sample = measure_noise(&diag, &lap, &problem, &states);
        let (c_power, g_power) = average_noise_power(&[sample]);
        assert!(c_power < 1e-24);
        assert_eq!(g_power, 0.0);
    }
}
