//! Experiment configuration: a sectioned TOML file whose physical values
//! carry units. Parsing keeps the raw text representation (so files
//! round-trip); [`Config::blueprint`] converts everything to SI base
//! quantities and validates cross-field consistency, leaving the handful of
//! per-trial derived quantities (gain spectrum, designed transmit
//! probability, stepsize defaults) to the runner.

use super::units::{
    parse_distance_m, parse_duration_s, parse_frequency_hz, parse_noise_density,
    parse_power_watts,
};
use super::HarnessError;
use crate::channel::FadingSchedule;
use crate::optimizer::SpreadingPolicy;
use crate::phy::FramePlan;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentSection,
    pub network: NetworkSection,
    pub radio: RadioSection,
    pub problem: ProblemSection,
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub compute: ComputeSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Analog over-the-air consensus descent.
    Ncota,
    /// Digital rounds with the dithered scalar quantizer.
    DigitalScalar,
    /// Digital rounds with the sampled-codeword quantizer.
    DigitalCodeword,
    /// No communication at all.
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub algorithm: Algorithm,
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub iterations: u64,
    #[serde(default = "default_stride")]
    pub stride: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_trials() -> u64 {
    20
}
fn default_stride() -> u64 {
    50
}
fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainKind {
    /// Geometric model: nodes and reflectors dropped in a disc, free-space
    /// path gains, per-pair frequency-selective responses.
    Reflector,
    /// Independent Rayleigh links with average gains drawn uniformly from
    /// `[gain_low, gain_high]`.
    Rayleigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FadingKind {
    /// Fresh channel realization each frame.
    PerFrame,
    /// Realization frozen for a coherence interval.
    Block,
    /// One realization for the whole run.
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub nodes: usize,
    pub model: GainKind,
    #[serde(default = "default_area_radius")]
    pub area_radius: String,
    #[serde(default = "default_reflectors")]
    pub reflectors: usize,
    #[serde(default = "default_carrier")]
    pub carrier: String,
    #[serde(default = "default_gain_low")]
    pub gain_low: f64,
    #[serde(default = "default_gain_high")]
    pub gain_high: f64,
    #[serde(default = "default_fading")]
    pub fading: FadingKind,
    /// Coherence interval; required when `fading = "block"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coherence: Option<String>,
    /// Monte-Carlo draws for estimating average gains and dispersion of the
    /// reflector model under redrawn fading.
    #[serde(default = "default_gain_budget")]
    pub gain_budget: usize,
}

fn default_area_radius() -> String {
    "2 km".to_string()
}
fn default_reflectors() -> usize {
    3
}
fn default_carrier() -> String {
    "3 GHz".to_string()
}
fn default_gain_low() -> f64 {
    0.1
}
fn default_gain_high() -> f64 {
    1.0
}
fn default_fading() -> FadingKind {
    FadingKind::PerFrame
}
fn default_gain_budget() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub bandwidth: String,
    pub subcarriers: usize,
    #[serde(default)]
    pub cyclic_prefix: usize,
    pub symbols: usize,
    pub power: String,
    pub noise_density: String,
    /// Omit to let the variance-minimizing design solver pick it per trial.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_probability: Option<f64>,
    /// Encoder spreading: "zero" (all mass follows the state), "max"
    /// (maximal frame energy), or a number in [0, 1].
    #[serde(default = "default_spreading")]
    pub spreading: String,
    /// Digital algorithms: OFDMA block width per node.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcarriers_per_node: Option<usize>,
    /// Digital-scalar: bits per entry.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantizer_bits: Option<u32>,
    /// Digital-codeword: i.i.d. codeword draws per broadcast.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
}

fn default_spreading() -> String {
    "zero".to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Regression,
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeploymentKind {
    Iid,
    Spatial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    // Regression knobs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_per_node: Option<usize>,
    #[serde(default = "default_noise_sd")]
    pub noise: f64,
    #[serde(default = "default_signal_norm")]
    pub signal_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<f64>,
    // Classification knobs.
    #[serde(default = "default_classes")]
    pub classes: usize,
    /// Feature file path; omit to generate synthetic clustered features.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<String>,
    #[serde(default = "default_per_class")]
    pub synthetic_per_class: usize,
    #[serde(default = "default_spread")]
    pub synthetic_spread: f64,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    #[serde(default = "default_deployment")]
    pub deployment: DeploymentKind,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    /// Domain radius; omit for the self-sizing rule `‖∇F(0)‖/μ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

fn default_noise_sd() -> f64 {
    0.1
}
fn default_signal_norm() -> f64 {
    1.0
}
fn default_classes() -> usize {
    10
}
fn default_per_class() -> usize {
    100
}
fn default_spread() -> f64 {
    0.3
}
fn default_feature_dim() -> usize {
    50
}
fn default_deployment() -> DeploymentKind {
    DeploymentKind::Iid
}
fn default_ridge() -> f64 {
    0.001
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Decreasing,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub kind: ScheduleKind,
    /// Decreasing: initial learning stepsize; omit for `2/(μ+L)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta0: Option<f64>,
    /// Decreasing: initial consensus stepsize; omit for `0.05/ρ₂` (per
    /// trial, from the estimated gain spectrum).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    /// Decreasing: decay rate; omit for `4μη₀/5`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Constant stepsizes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatchSetting {
    /// A fixed minibatch size.
    Count(usize),
    /// "auto" (sized by what fits in one frame's airtime) or "full".
    Mode(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputeSection {
    #[serde(default = "default_batch")]
    pub batch: BatchSetting,
    /// Time to evaluate one per-sample gradient.
    #[serde(default = "default_grad_time")]
    pub grad_time: String,
}

fn default_batch() -> BatchSetting {
    BatchSetting::Mode("auto".to_string())
}
fn default_grad_time() -> String {
    "30 us".to_string()
}

impl Default for ComputeSection {
    fn default() -> Self {
        ComputeSection { batch: default_batch(), grad_time: default_grad_time() }
    }
}

/// Gradient sizing resolved from [`BatchSetting`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchRule {
    /// `min{⌊T/T_grad⌋, |D_i|}` per node, from the frame duration.
    Auto,
    Full,
    Fixed(usize),
}

/// Config converted to SI quantities and validated; what the runner
/// consumes. Fields that depend on per-trial randomness (gain spectrum,
/// designed transmit probability, stepsize defaults) stay symbolic here.
#[derive(Debug, Clone, PartialEq)]
pub struct Blueprint {
    pub algorithm: Algorithm,
    pub trials: u64,
    pub iterations: u64,
    pub stride: u64,
    pub seed: u64,

    pub nodes: usize,
    pub gain_kind: GainKind,
    pub area_radius_m: f64,
    pub reflectors: usize,
    pub carrier_hz: f64,
    pub gain_low: f64,
    pub gain_high: f64,
    pub fading: FadingSchedule,
    pub gain_budget: usize,

    pub bandwidth_hz: f64,
    pub plan: FramePlan,
    pub power_w: f64,
    pub sample_energy: f64,
    pub noise_psd: f64,
    pub tx_probability: Option<f64>,
    pub spreading: SpreadingPolicy,
    pub subcarriers_per_node: usize,
    pub quantizer_bits: u32,
    pub repetitions: usize,

    pub problem: ProblemSection,
    pub schedule: ScheduleSection,
    pub batch: BatchRule,
    pub grad_time_s: f64,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Overrides one scalar field addressed by its dotted TOML path
    /// (`section.key`), for parameter sweeps.
    pub fn set_param(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        fn num(value: &str) -> Result<f64, HarnessError> {
            value
                .parse()
                .map_err(|_| HarnessError::Config(format!("'{value}' is not a number")))
        }
        fn int(value: &str) -> Result<u64, HarnessError> {
            value
                .parse()
                .map_err(|_| HarnessError::Config(format!("'{value}' is not an integer")))
        }
        match key {
            "experiment.iterations" => self.experiment.iterations = int(value)?,
            "experiment.trials" => self.experiment.trials = int(value)?,
            "experiment.stride" => self.experiment.stride = int(value)?,
            "experiment.seed" => self.experiment.seed = int(value)?,
            "network.nodes" => self.network.nodes = int(value)? as usize,
            "network.gain_budget" => self.network.gain_budget = int(value)? as usize,
            "radio.symbols" => self.radio.symbols = int(value)? as usize,
            "radio.subcarriers" => self.radio.subcarriers = int(value)? as usize,
            "radio.cyclic_prefix" => self.radio.cyclic_prefix = int(value)? as usize,
            "radio.tx_probability" => self.radio.tx_probability = Some(num(value)?),
            "radio.spreading" => self.radio.spreading = value.to_string(),
            "radio.power" => self.radio.power = value.to_string(),
            "radio.noise_density" => self.radio.noise_density = value.to_string(),
            "radio.subcarriers_per_node" => {
                self.radio.subcarriers_per_node = Some(int(value)? as usize)
            }
            "radio.quantizer_bits" => self.radio.quantizer_bits = Some(int(value)? as u32),
            "radio.repetitions" => self.radio.repetitions = Some(int(value)? as usize),
            "schedule.eta0" => self.schedule.eta0 = Some(num(value)?),
            "schedule.gamma0" => self.schedule.gamma0 = Some(num(value)?),
            "schedule.delta" => self.schedule.delta = Some(num(value)?),
            "schedule.eta" => self.schedule.eta = Some(num(value)?),
            "schedule.gamma" => self.schedule.gamma = Some(num(value)?),
            "compute.batch" => {
                self.compute.batch = match value {
                    "auto" | "full" => BatchSetting::Mode(value.to_string()),
                    _ => BatchSetting::Count(int(value)? as usize),
                }
            }
            _ => {
                return Err(HarnessError::Config(format!(
                    "unknown sweep parameter '{key}'; supported: experiment.{{iterations,trials,stride,seed}}, \
                     network.{{nodes,gain_budget}}, radio.{{symbols,subcarriers,cyclic_prefix,tx_probability,\
                     spreading,power,noise_density,subcarriers_per_node,quantizer_bits,repetitions}}, \
                     schedule.{{eta0,gamma0,delta,eta,gamma}}, compute.batch"
                )))
            }
        }
        Ok(())
    }

    /// Validates and converts to SI quantities, returning the converted
    /// blueprint and a human-readable log of every unit conversion made.
    pub fn blueprint(&self) -> Result<(Blueprint, String), HarnessError> {
        let bad = |msg: String| HarnessError::Config(msg);
        let mut log = String::new();

        let e = &self.experiment;
        if e.iterations == 0 {
            return Err(bad("experiment.iterations must be positive".into()));
        }
        if e.trials == 0 {
            return Err(bad("experiment.trials must be positive".into()));
        }
        if e.stride == 0 {
            return Err(bad("experiment.stride must be positive".into()));
        }

        let n = &self.network;
        if n.nodes < 2 {
            return Err(bad("network.nodes must be at least 2".into()));
        }
        let area_radius_m = parse_distance_m(&n.area_radius)
            .map_err(|e| bad(format!("network.area_radius: {e}")))?;
        let carrier_hz = parse_frequency_hz(&n.carrier)
            .map_err(|e| bad(format!("network.carrier: {e}")))?;
        if n.gain_kind_needs_bounds() && !(n.gain_low > 0.0 && n.gain_high >= n.gain_low) {
            return Err(bad(format!(
                "network.gain_low/gain_high must satisfy 0 < low <= high, got {} and {}",
                n.gain_low, n.gain_high
            )));
        }
        let fading = match n.fading {
            FadingKind::PerFrame => FadingSchedule::PerIteration,
            FadingKind::Static => FadingSchedule::Static,
            FadingKind::Block => {
                let text = n.coherence.as_deref().ok_or_else(|| {
                    bad("network.coherence is required when fading = \"block\"".into())
                })?;
                let coherence_s = parse_duration_s(text)
                    .map_err(|e| bad(format!("network.coherence: {e}")))?;
                writeln!(log, "coherence {text} -> {coherence_s:.6e} s").unwrap();
                FadingSchedule::Block { coherence_s }
            }
        };
        if n.gain_budget == 0 {
            return Err(bad("network.gain_budget must be positive".into()));
        }
        writeln!(log, "area radius {} -> {area_radius_m:.6e} m", n.area_radius).unwrap();
        writeln!(log, "carrier {} -> {carrier_hz:.6e} Hz", n.carrier).unwrap();

        let r = &self.radio;
        let bandwidth_hz = parse_frequency_hz(&r.bandwidth)
            .map_err(|e| bad(format!("radio.bandwidth: {e}")))?;
        let power_w =
            parse_power_watts(&r.power).map_err(|e| bad(format!("radio.power: {e}")))?;
        let noise_psd = parse_noise_density(&r.noise_density)
            .map_err(|e| bad(format!("radio.noise_density: {e}")))?;
        let sample_energy = power_w / bandwidth_hz;
        writeln!(log, "bandwidth {} -> {bandwidth_hz:.6e} Hz", r.bandwidth).unwrap();
        writeln!(
            log,
            "power {} -> {power_w:.6e} W -> per-sample energy E = P/W = {sample_energy:.6e} J",
            r.power
        )
        .unwrap();
        writeln!(log, "noise density {} -> {noise_psd:.6e} W/Hz", r.noise_density).unwrap();
        let plan = FramePlan::new(r.symbols, r.subcarriers, r.cyclic_prefix)
            .map_err(|e| bad(format!("radio grid: {e}")))?;
        if let Some(p) = r.tx_probability {
            if !(p > 0.0 && p < 1.0) {
                return Err(bad(format!("radio.tx_probability must be in (0,1), got {p}")));
            }
        }
        let spreading = match r.spreading.as_str() {
            "zero" => SpreadingPolicy::Fixed(0.0),
            "max" => SpreadingPolicy::Max,
            other => {
                let phi: f64 = other.parse().map_err(|_| {
                    bad(format!(
                        "radio.spreading must be \"zero\", \"max\" or a number, got '{other}'"
                    ))
                })?;
                if !(0.0..=1.0).contains(&phi) {
                    return Err(bad(format!("radio.spreading {phi} outside [0, 1]")));
                }
                SpreadingPolicy::Fixed(phi)
            }
        };
        let subcarriers_per_node = r.subcarriers_per_node.unwrap_or(r.subcarriers);
        let quantizer_bits = r.quantizer_bits.unwrap_or(4);
        let repetitions = r.repetitions.unwrap_or(10);

        let p = &self.problem;
        match p.kind {
            ProblemKind::Regression => {
                let dim = p.dim.ok_or_else(|| bad("problem.dim required for regression".into()))?;
                if dim == 0 {
                    return Err(bad("problem.dim must be positive".into()));
                }
                let rows = p
                    .samples_per_node
                    .ok_or_else(|| bad("problem.samples_per_node required for regression".into()))?;
                if rows < dim {
                    return Err(bad(format!(
                        "problem.samples_per_node ({rows}) must be at least problem.dim ({dim})"
                    )));
                }
            }
            ProblemKind::Classification => {
                if p.classes < 2 {
                    return Err(bad("problem.classes must be at least 2".into()));
                }
                if self.network.nodes % p.classes != 0 {
                    return Err(bad(format!(
                        "network.nodes ({}) must be a multiple of problem.classes ({})",
                        self.network.nodes, p.classes
                    )));
                }
            }
        }
        if let Some(radius) = p.radius {
            if !(radius.is_finite() && radius > 0.0) {
                return Err(bad(format!("problem.radius must be positive, got {radius}")));
            }
        }

        let s = &self.schedule;
        match s.kind {
            ScheduleKind::Constant => {
                if s.eta.is_none() || s.gamma.is_none() {
                    return Err(bad(
                        "constant schedule requires schedule.eta and schedule.gamma".into(),
                    ));
                }
            }
            ScheduleKind::Decreasing => {}
        }
        for (name, v) in [
            ("eta0", s.eta0),
            ("gamma0", s.gamma0),
            ("delta", s.delta),
            ("eta", s.eta),
            ("gamma", s.gamma),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(bad(format!("schedule.{name} must be positive, got {v}")));
                }
            }
        }

        let c = &self.compute;
        let grad_time_s = parse_duration_s(&c.grad_time)
            .map_err(|e| bad(format!("compute.grad_time: {e}")))?;
        writeln!(log, "gradient time {} -> {grad_time_s:.6e} s", c.grad_time).unwrap();
        let batch = match &c.batch {
            BatchSetting::Count(0) => {
                return Err(bad("compute.batch must be positive".into()));
            }
            BatchSetting::Count(b) => BatchRule::Fixed(*b),
            BatchSetting::Mode(m) if m == "auto" => BatchRule::Auto,
            BatchSetting::Mode(m) if m == "full" => BatchRule::Full,
            BatchSetting::Mode(m) => {
                return Err(bad(format!(
                    "compute.batch must be \"auto\", \"full\" or a count, got '{m}'"
                )));
            }
        };

        Ok((
            Blueprint {
                algorithm: e.algorithm,
                trials: e.trials,
                iterations: e.iterations,
                stride: e.stride,
                seed: e.seed,
                nodes: n.nodes,
                gain_kind: n.model,
                area_radius_m,
                reflectors: n.reflectors,
                carrier_hz,
                gain_low: n.gain_low,
                gain_high: n.gain_high,
                fading,
                gain_budget: n.gain_budget,
                bandwidth_hz,
                plan,
                power_w,
                sample_energy,
                noise_psd,
                tx_probability: r.tx_probability,
                spreading,
                subcarriers_per_node,
                quantizer_bits,
                repetitions,
                problem: p.clone(),
                schedule: s.clone(),
                batch,
                grad_time_s,
            },
            log,
        ))
    }
}

impl NetworkSection {
    fn gain_kind_needs_bounds(&self) -> bool {
        self.model == GainKind::Rayleigh
    }
}
