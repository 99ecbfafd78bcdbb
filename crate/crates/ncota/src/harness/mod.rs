//! Experiment orchestration: configuration, the per-trial simulation loop,
//! multi-trial averaging, analytic-bound reports, and self-check suites.
//!
//! A run is deterministic in `(config, seed)`: every random draw inside a
//! trial comes from counter-keyed streams, and trials are embarrassingly
//! parallel, so the emitted rows are bit-identical across reruns and thread
//! counts.

pub mod config;
pub mod metrics;
pub mod units;
pub mod verify;

use crate::baselines::{local_only_step, BaselineError, QdgdAlgorithm, Quantizer};
use crate::channel::{
    average_gains, dispersion, ChannelError, ChannelSpec, Deployment, FadingSchedule,
    GainLaplacian, GainModel, SymmetricGains,
};
use crate::codec::{Codebook, CodecError};
use crate::domain::{norm, DomainError, ModelVector, ParamDomain};
use crate::optimizer::{
    solve_tx_probability, BatchPolicy, NcotaAlgorithm, OptimizerError, RunOptions,
    StepsizeSchedule,
};
use crate::phy::{FramePlan, PhyError, RadioParams, ResourcePartition};
use crate::problems::{
    compute_radius, deploy_labels, gradient_divergence, minibatch_size, minibatch_variance_bound,
    sample_gradient_bound, Classification, CrossEntropyModel, DataDeployment, LabeledDataset,
    LinearRegression, Objective, ProblemError,
};
use crate::rng::{node_stream, Purpose};
use crate::theory::{
    consensus_variance_bound, decay_error_bounds, error_decomposition, settling_iteration,
    BoundConstants, TheoryError,
};
use config::{Algorithm, BatchRule, Blueprint, Config, DeploymentKind, GainKind, ProblemKind, ScheduleKind};
use metrics::{
    aggregate, average_state, compute_wstar, normalized_error, suboptimality_gap, MetricRow,
};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;
use units::UnitError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unit conversion failed: {0}")]
    Units(#[from] UnitError),
    #[error("channel setup failed: {0}")]
    Channel(#[from] ChannelError),
    #[error("radio setup failed: {0}")]
    Phy(#[from] PhyError),
    #[error("codebook setup failed: {0}")]
    Codec(#[from] CodecError),
    #[error("domain setup failed: {0}")]
    Domain(#[from] DomainError),
    #[error("problem setup failed: {0}")]
    Problem(#[from] ProblemError),
    #[error("optimizer failed: {0}")]
    Optimizer(#[from] OptimizerError),
    #[error("baseline failed: {0}")]
    Baseline(#[from] BaselineError),
    #[error("bound computation failed: {0}")]
    Theory(#[from] TheoryError),
    #[error(
        "reference solver stalled: gradient norm {residual:e} above tolerance {tolerance:e} \
         after {iterations} iterations (check the declared curvature constants)"
    )]
    NoConvergence { residual: f64, tolerance: f64, iterations: u64 },
    #[error("normalized error undefined: the reference optimum is the zero vector")]
    DegenerateOptimum,
    #[error("i/o failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Run-level switches that live outside the config file.
#[derive(Debug, Clone, Default)]
pub struct RunControls {
    /// Reuse trial 0's geometry and gain draw for every trial instead of
    /// redrawing per trial.
    pub pin_deployment: bool,
    /// Fixed node/reflector positions for every trial (implies pinning).
    pub deployment: Option<Deployment>,
}

/// Everything a finished run produces.
#[derive(Debug)]
pub struct RunArtifacts {
    /// One row per (trial, sampled iteration), ordered by trial then k.
    pub rows: Vec<MetricRow>,
    /// Across-trial means, one row per sampled iteration.
    pub aggregate: Vec<MetricRow>,
    /// Unit conversions and per-trial parameter resolutions.
    pub log: String,
    /// Trial 0's geometry, when the gain model has one.
    pub deployment: Option<Deployment>,
}

/// The problem data shared by all trials. Regression fixes the full instance
/// (so the reference optimum is computed once); classification fixes the
/// dataset and redraws the node assignment per trial.
enum SharedProblem {
    Regression(LinearRegression),
    Classification { model: CrossEntropyModel, train: LabeledDataset, test: LabeledDataset },
}

struct Shared {
    problem: SharedProblem,
    optimum: Option<(Vec<f64>, f64)>,
}

enum ProblemHandle<'s> {
    Shared(&'s dyn Objective),
    Owned(Box<dyn Objective>),
}

impl ProblemHandle<'_> {
    fn as_dyn(&self) -> &dyn Objective {
        match self {
            ProblemHandle::Shared(p) => *p,
            ProblemHandle::Owned(p) => p.as_ref(),
        }
    }
}

/// Per-trial state after all "auto" knobs are resolved to numbers.
struct TrialPieces<'s> {
    problem: ProblemHandle<'s>,
    w_star: Vec<f64>,
    f_star: f64,
    domain: ParamDomain,
    spec: ChannelSpec,
    laplacian: Option<GainLaplacian>,
    schedule: StepsizeSchedule,
    tx_probability: Option<f64>,
    batch: BatchPolicy,
    frame_s: f64,
    deployment: Option<Deployment>,
    log: String,
}

fn build_shared(bp: &Blueprint, log: &mut String) -> Result<Shared, HarnessError> {
    match bp.problem.kind {
        ProblemKind::Regression => {
            let p = &bp.problem;
            let mu = p.mu.unwrap_or(1.0);
            let lips = p.smoothness.unwrap_or(10.0);
            let problem = LinearRegression::synthetic(
                bp.nodes,
                p.dim.expect("validated"),
                p.samples_per_node.expect("validated"),
                mu,
                lips,
                p.signal_norm,
                p.noise,
                bp.seed,
            )?;
            let w = compute_wstar(&problem)?;
            let f = problem.global_loss(&w);
            writeln!(log, "regression instance: mu = {mu}, L = {lips}, |w*| = {:.6e}", norm(&w))
                .unwrap();
            Ok(Shared { problem: SharedProblem::Regression(problem), optimum: Some((w, f)) })
        }
        ProblemKind::Classification => {
            let p = &bp.problem;
            let full = match &p.features {
                Some(path) => LabeledDataset::load(Path::new(path), p.classes)?,
                None => {
                    let mut rng = node_stream(bp.seed, 0, 0, 0, Purpose::Data);
                    LabeledDataset::synthetic_clusters(
                        p.classes,
                        p.feature_dim,
                        p.synthetic_per_class,
                        p.synthetic_spread,
                        &mut rng,
                    )?
                }
            };
            let (train, test) = split_dataset(&full)?;
            writeln!(
                log,
                "classification dataset: {} train / {} test samples, {} classes x {} features",
                train.len(),
                test.len(),
                train.classes(),
                train.feature_dim()
            )
            .unwrap();
            let model = CrossEntropyModel {
                classes: train.classes(),
                feature_dim: train.feature_dim(),
                ridge: p.ridge,
            };
            Ok(Shared {
                problem: SharedProblem::Classification { model, train, test },
                optimum: None,
            })
        }
    }
}

/// Deterministic 80/20 split: every fifth sample is held out. Datasets too
/// small to split evaluate on the training samples.
fn split_dataset(full: &LabeledDataset) -> Result<(LabeledDataset, LabeledDataset), HarnessError> {
    let mut train_f = Vec::new();
    let mut train_l = Vec::new();
    let mut test_f = Vec::new();
    let mut test_l = Vec::new();
    for i in 0..full.len() {
        let (f, l) = if i % 5 == 4 { (&mut test_f, &mut test_l) } else { (&mut train_f, &mut train_l) };
        f.push(full.feature(i).to_vec());
        l.push(full.label(i));
    }
    if test_f.is_empty() {
        return Ok((full.clone(), full.clone()));
    }
    let train = LabeledDataset::new(full.classes(), train_f, train_l)?;
    let test = LabeledDataset::new(full.classes(), test_f, test_l)?;
    Ok((train, test))
}

fn validate_policy(bp: &Blueprint, controls: &RunControls) -> Result<(), HarnessError> {
    if let Some(dep) = &controls.deployment {
        if bp.gain_kind != GainKind::Reflector {
            return Err(HarnessError::Config(
                "a position table only applies to the reflector gain model".into(),
            ));
        }
        if dep.n_nodes() != bp.nodes {
            return Err(HarnessError::Config(format!(
                "position table has {} nodes, config expects {}",
                dep.n_nodes(),
                bp.nodes
            )));
        }
    }
    if bp.problem.kind == ProblemKind::Classification
        && bp.problem.deployment == DeploymentKind::Spatial
        && bp.gain_kind != GainKind::Reflector
    {
        return Err(HarnessError::Config(
            "spatial label deployment needs node positions; use the reflector gain model".into(),
        ));
    }
    Ok(())
}

fn build_trial<'s>(
    bp: &Blueprint,
    shared: &'s Shared,
    controls: &RunControls,
    trial: u64,
) -> Result<TrialPieces<'s>, HarnessError> {
    let mut log = String::new();
    let pinned = controls.pin_deployment || controls.deployment.is_some();
    let geometry_trial = if pinned { 0 } else { trial };

    let (gain_model, deployment) = match bp.gain_kind {
        GainKind::Rayleigh => {
            let mut rng = node_stream(bp.seed, geometry_trial, 0, 0, Purpose::Gains);
            let gains =
                SymmetricGains::random_uniform(bp.nodes, bp.gain_low, bp.gain_high, &mut rng)?;
            (GainModel::Explicit(gains), None)
        }
        GainKind::Reflector => {
            let dep = match &controls.deployment {
                Some(d) => d.clone(),
                None => {
                    let mut rng = node_stream(bp.seed, geometry_trial, 0, 0, Purpose::Deployment);
                    Deployment::draw(bp.nodes, bp.reflectors, bp.area_radius_m, &mut rng)?
                }
            };
            (
                GainModel::Reflector { deployment: dep.clone(), carrier_hz: bp.carrier_hz },
                Some(dep),
            )
        }
    };
    let spec = ChannelSpec::new(gain_model, bp.fading, bp.bandwidth_hz)?;

    let problem = match &shared.problem {
        SharedProblem::Regression(reg) => ProblemHandle::Shared(reg as &dyn Objective),
        SharedProblem::Classification { model, train, .. } => {
            let mode = match bp.problem.deployment {
                DeploymentKind::Iid => DataDeployment::Iid,
                DeploymentKind::Spatial => DataDeployment::Spatial,
            };
            let mut rng = node_stream(bp.seed, geometry_trial, 0, 1, Purpose::LabelAssign);
            let assignment = deploy_labels(train, bp.nodes, mode, deployment.as_ref(), &mut rng)?;
            ProblemHandle::Owned(Box::new(Classification::new(*model, train.clone(), assignment)?))
        }
    };
    let obj = problem.as_dyn();
    let mu = obj.strong_convexity();
    let lips = obj.smoothness();

    let (w_star, f_star) = match (&shared.optimum, &problem) {
        (Some((w, f)), ProblemHandle::Shared(_)) => (w.clone(), *f),
        _ => {
            let w = compute_wstar(obj)?;
            let f = obj.global_loss(&w);
            (w, f)
        }
    };

    let radius = match bp.problem.radius {
        Some(r) => r,
        None => compute_radius(obj),
    };
    let domain = ParamDomain::new(obj.dim(), radius)?;
    if norm(&w_star) > radius {
        writeln!(
            log,
            "trial {trial}: WARNING: optimum norm {:.3e} exceeds domain radius {radius:.3e}",
            norm(&w_star)
        )
        .unwrap();
    }

    // The air interface runs on the configured grid; digital rounds use one
    // OFDM symbol per node slot.
    let codewords = 2 * obj.dim() + 1;
    let digital_plan = FramePlan::new(1, bp.plan.subcarriers(), bp.plan.cyclic_prefix())?;
    let (stats_plan, stats_partition) = match bp.algorithm {
        Algorithm::Ncota => {
            (bp.plan, ResourcePartition::strided(bp.plan.resource_units(), codewords)?)
        }
        _ => {
            let q = digital_plan.resource_units();
            (digital_plan, ResourcePartition::strided(q, q)?)
        }
    };
    let laplacian = if bp.algorithm == Algorithm::Local {
        None
    } else {
        // Static fading freezes one realization per trial, so the mixing
        // gains must follow the run trial even when geometry is pinned;
        // redrawn fading averages out, so the estimate follows the geometry.
        let stats_trial = match bp.fading {
            FadingSchedule::Static => trial,
            _ => geometry_trial,
        };
        let gains = average_gains(
            &spec,
            &stats_plan,
            &stats_partition,
            bp.gain_budget,
            bp.seed,
            stats_trial,
        )?;
        Some(GainLaplacian::new(gains))
    };

    let schedule = match bp.schedule.kind {
        ScheduleKind::Decreasing => {
            let eta0 = bp.schedule.eta0.unwrap_or(2.0 / (mu + lips));
            let gamma0 = match (bp.schedule.gamma0, &laplacian) {
                (Some(g), _) => g,
                (None, Some(lap)) => 0.05 / lap.algebraic_connectivity(),
                (None, None) => eta0,
            };
            let delta = bp.schedule.delta.unwrap_or(0.8 * mu * eta0);
            StepsizeSchedule::Decreasing { eta0, gamma0, delta }
        }
        ScheduleKind::Constant => StepsizeSchedule::Constant {
            eta: bp.schedule.eta.expect("validated"),
            gamma: bp.schedule.gamma.expect("validated"),
        },
    };

    let tx_probability = match bp.algorithm {
        Algorithm::Ncota => Some(match bp.tx_probability {
            Some(p) => p,
            None => {
                let lap = laplacian.as_ref().expect("present for the air algorithm");
                let noise_ratio = bp.noise_psd / (lap.max_total_gain() * bp.sample_energy);
                let varpi = stats_partition.inverse_size_mean().sqrt();
                solve_tx_probability(1.0, varpi, codewords, bp.plan.resource_units(), noise_ratio)?
            }
        }),
        _ => None,
    };

    let airtime_s = match bp.algorithm {
        Algorithm::Ncota => bp.plan.duration_s(bp.bandwidth_hz)?,
        Algorithm::DigitalScalar | Algorithm::DigitalCodeword => {
            bp.nodes as f64
                * (bp.subcarriers_per_node as f64 / digital_plan.subcarriers() as f64)
                * digital_plan.duration_s(bp.bandwidth_hz)?
        }
        Algorithm::Local => 0.0,
    };
    let max_samples = (0..bp.nodes).map(|i| obj.samples_at(i)).max().unwrap_or(1);
    let batch = match bp.batch {
        BatchRule::Full => BatchPolicy::Full,
        BatchRule::Fixed(b) => BatchPolicy::Size(b),
        BatchRule::Auto => match bp.algorithm {
            // No airtime budget to size against: use everything.
            Algorithm::Local => BatchPolicy::Full,
            _ => BatchPolicy::Size(minibatch_size(airtime_s, bp.grad_time_s, max_samples)),
        },
    };
    let frame_s = match bp.algorithm {
        Algorithm::Local => {
            let per_step = match batch {
                BatchPolicy::Full => max_samples,
                BatchPolicy::Size(b) => b.min(max_samples),
            };
            per_step as f64 * bp.grad_time_s
        }
        _ => airtime_s,
    };

    write!(log, "trial {trial}: frame = {frame_s:.6e} s").unwrap();
    if let Some(lap) = &laplacian {
        write!(
            log,
            ", rho2 = {:.6e}, Lambda* = {:.6e}",
            lap.algebraic_connectivity(),
            lap.max_total_gain()
        )
        .unwrap();
    }
    if let Some(p) = tx_probability {
        let tag = if bp.tx_probability.is_none() { " (designed)" } else { "" };
        write!(log, ", p_tx = {p:.6}{tag}").unwrap();
    }
    if let StepsizeSchedule::Decreasing { eta0, gamma0, delta } = schedule {
        write!(log, ", eta0 = {eta0:.6e}, gamma0 = {gamma0:.6e}, delta = {delta:.6e}").unwrap();
    }
    if let BatchPolicy::Size(b) = batch {
        write!(log, ", batch = {b}").unwrap();
    }
    log.push('\n');

    Ok(TrialPieces {
        problem,
        w_star,
        f_star,
        domain,
        spec,
        laplacian,
        schedule,
        tx_probability,
        batch,
        frame_s,
        deployment,
        log,
    })
}

enum Runner<'p> {
    Air(NcotaAlgorithm<'p>),
    Digital(QdgdAlgorithm<'p>),
    Local {
        problem: &'p dyn Objective,
        domain: ParamDomain,
        schedule: StepsizeSchedule,
        batch: BatchPolicy,
        master: u64,
    },
}

impl Runner<'_> {
    fn initial_states(&self) -> Vec<ModelVector> {
        match self {
            Runner::Air(a) => a.initial_states(),
            Runner::Digital(d) => d.initial_states(),
            Runner::Local { problem, domain, .. } => {
                (0..problem.n_nodes()).map(|_| domain.origin()).collect()
            }
        }
    }

    fn step(
        &self,
        trial: u64,
        k: u64,
        states: &[ModelVector],
    ) -> Result<Vec<ModelVector>, HarnessError> {
        match self {
            Runner::Air(a) => Ok(a.step(trial, k, states)?.0),
            Runner::Digital(d) => Ok(d.step(trial, k, states)?.0),
            Runner::Local { problem, domain, schedule, batch, master } => Ok(local_only_step(
                *problem, domain, schedule, *batch, *master, trial, k, states,
            )),
        }
    }
}

struct TrialOutput {
    rows: Vec<MetricRow>,
    log: String,
    deployment: Option<Deployment>,
}

fn run_trial(
    bp: &Blueprint,
    shared: &Shared,
    controls: &RunControls,
    trial: u64,
) -> Result<TrialOutput, HarnessError> {
    let pieces = build_trial(bp, shared, controls, trial)?;
    let obj = pieces.problem.as_dyn();
    let runner = match bp.algorithm {
        Algorithm::Ncota => Runner::Air(NcotaAlgorithm::new(
            obj,
            pieces.domain,
            bp.plan,
            pieces.spec.clone(),
            RadioParams::new(
                bp.sample_energy,
                bp.noise_psd,
                pieces.tx_probability.expect("resolved for the air algorithm"),
            )?,
            pieces.schedule,
            bp.spreading,
            pieces.batch,
            RunOptions::default(),
            bp.seed,
        )?),
        Algorithm::DigitalScalar | Algorithm::DigitalCodeword => {
            let quantizer = match bp.algorithm {
                Algorithm::DigitalScalar => Quantizer::Scalar { bits: bp.quantizer_bits },
                _ => Quantizer::Codeword { repetitions: bp.repetitions },
            };
            Runner::Digital(QdgdAlgorithm::new(
                obj,
                pieces.domain,
                FramePlan::new(1, bp.plan.subcarriers(), bp.plan.cyclic_prefix())?,
                bp.subcarriers_per_node,
                pieces.spec.clone(),
                bp.sample_energy,
                bp.noise_psd,
                quantizer,
                pieces.schedule,
                pieces.batch,
                bp.seed,
            )?)
        }
        Algorithm::Local => Runner::Local {
            problem: obj,
            domain: pieces.domain,
            schedule: pieces.schedule,
            batch: pieces.batch,
            master: bp.seed,
        },
    };

    let test = match &shared.problem {
        SharedProblem::Classification { model, test, .. } => Some((model, test)),
        SharedProblem::Regression(_) => None,
    };
    let mut states = runner.initial_states();
    let mut rows = Vec::new();
    for k in 0..=bp.iterations {
        if k % bp.stride == 0 || k == bp.iterations {
            let test_error =
                test.map(|(model, data)| model.test_error(&average_state(&states), data));
            rows.push(MetricRow {
                trial,
                iteration: k,
                time_s: k as f64 * pieces.frame_s,
                normalized_error: normalized_error(&states, &pieces.w_star)?,
                suboptimality_gap: suboptimality_gap(obj, &states, pieces.f_star),
                test_error,
            });
        }
        if k < bp.iterations {
            states = runner.step(trial, k, &states)?;
        }
    }
    Ok(TrialOutput { rows, log: pieces.log, deployment: pieces.deployment })
}

/// Runs every configured trial in parallel and collects rows in trial order.
pub fn run_experiment(config: &Config, controls: &RunControls) -> Result<RunArtifacts, HarnessError> {
    let (bp, mut log) = config.blueprint()?;
    validate_policy(&bp, controls)?;
    let shared = build_shared(&bp, &mut log)?;
    let outputs: Vec<Result<TrialOutput, HarnessError>> = (0..bp.trials)
        .into_par_iter()
        .map(|trial| run_trial(&bp, &shared, controls, trial))
        .collect();
    let mut rows = Vec::new();
    let mut deployment = None;
    for (trial, output) in outputs.into_iter().enumerate() {
        let output = output?;
        log.push_str(&output.log);
        if trial == 0 {
            deployment = output.deployment;
        }
        rows.extend(output.rows);
    }
    let aggregate = aggregate(&rows);
    Ok(RunArtifacts { rows, aggregate, log, deployment })
}

/// One grid point of a parameter sweep.
pub struct SweepOutcome {
    pub value: String,
    pub artifacts: RunArtifacts,
}

/// Reruns the experiment once per value of a single dotted config key.
pub fn run_sweep(
    config: &Config,
    param: &str,
    values: &[String],
    controls: &RunControls,
) -> Result<Vec<SweepOutcome>, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::Config("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|value| {
            let mut point = config.clone();
            point.set_param(param, value)?;
            run_experiment(&point, controls)
                .map(|artifacts| SweepOutcome { value: value.clone(), artifacts })
        })
        .collect()
}

/// Analytic variance constants and convergence-bound curves for a config.
pub struct TheoryReport {
    pub log: String,
    pub csv: String,
}

pub const THEORY_HEADER: &str = "k,time_s,sigma1,sigma2,noise,transient,penalty_offset,total";

/// Evaluates the analytic error bounds on trial 0 of the configured
/// experiment: consensus and gradient variance constants, plus the bound
/// decomposition at every sampled iteration past the settling point.
pub fn theory_report(config: &Config, controls: &RunControls) -> Result<TheoryReport, HarnessError> {
    let (bp, mut log) = config.blueprint()?;
    if bp.algorithm != Algorithm::Ncota {
        return Err(HarnessError::Config(
            "bound curves apply to the over-the-air algorithm; set experiment.algorithm = \"ncota\"".into(),
        ));
    }
    validate_policy(&bp, controls)?;
    let shared = build_shared(&bp, &mut log)?;
    let pieces = build_trial(&bp, &shared, controls, 0)?;
    log.push_str(&pieces.log);
    let obj = pieces.problem.as_dyn();
    let laplacian = pieces.laplacian.as_ref().expect("present for the air algorithm");

    let codebook = Codebook::new(obj.dim(), pieces.domain.radius())?;
    let partition = ResourcePartition::strided(bp.plan.resource_units(), codebook.len())?;
    let (theta, varpi) =
        dispersion(&pieces.spec, &bp.plan, &partition, laplacian.gains(), bp.gain_budget, bp.seed, 0)?;

    let max_samples = (0..bp.nodes).map(|i| obj.samples_at(i)).max().unwrap_or(1);
    let diameter = 2.0 * pieces.domain.radius();
    let gradient_variance = match pieces.batch {
        BatchPolicy::Full => 0.0,
        BatchPolicy::Size(b) if b >= max_samples => 0.0,
        BatchPolicy::Size(b) => minibatch_variance_bound(
            max_samples,
            b,
            sample_gradient_bound(obj, &pieces.w_star),
            obj.smoothness(),
            diameter,
        )?,
    };

    let mut constants = BoundConstants {
        strong_convexity: obj.strong_convexity(),
        smoothness: obj.smoothness(),
        connectivity: laplacian.algebraic_connectivity(),
        spectral_radius: laplacian.spectral_radius(),
        max_total_gain: laplacian.max_total_gain(),
        gain_dispersion: theta,
        set_dispersion: varpi,
        consensus_variance: 0.0,
        gradient_variance,
        gradient_divergence: gradient_divergence(obj, &pieces.w_star),
        interior_distance: pieces.domain.radius() - norm(&pieces.w_star),
        diameter,
        n_nodes: bp.nodes,
        codewords: codebook.len(),
        resource_units: bp.plan.resource_units(),
        sample_energy: bp.sample_energy,
        noise_psd: bp.noise_psd,
        tx_probability: pieces.tx_probability.expect("resolved for the air algorithm"),
    };
    constants.consensus_variance = consensus_variance_bound(&constants, &codebook)?;
    let settle = settling_iteration(&constants, &pieces.schedule)?;
    writeln!(
        log,
        "constants: sigma1 = {:.6e}, sigma2 = {:.6e}, theta = {theta:.6e}, varpi = {varpi:.6e}, \
         zeta = {:.6e}, grad_divergence = {:.6e}, settle = {settle}",
        constants.consensus_variance,
        constants.gradient_variance,
        constants.interior_distance,
        constants.gradient_divergence,
    )
    .unwrap();

    let mut csv = String::from(THEORY_HEADER);
    csv.push('\n');
    let mut emitted = 0usize;
    for k in (0..=bp.iterations).filter(|k| k % bp.stride == 0 || *k == bp.iterations) {
        if k < settle {
            continue;
        }
        let bounds = match pieces.schedule {
            StepsizeSchedule::Decreasing { eta0, gamma0, delta } => {
                decay_error_bounds(&constants, eta0, gamma0, delta, settle, k)?
            }
            StepsizeSchedule::Constant { .. } => {
                error_decomposition(&constants, &pieces.schedule, settle, k)?
            }
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            k,
            k as f64 * pieces.frame_s,
            constants.consensus_variance,
            constants.gradient_variance,
            bounds.noise,
            bounds.transient,
            bounds.penalty_offset,
            bounds.total()
        ));
        emitted += 1;
    }
    if emitted == 0 {
        writeln!(
            log,
            "no sampled iteration reaches the settling point {settle}; raise experiment.iterations"
        )
        .unwrap();
    }
    Ok(TheoryReport { log, csv })
}

/// Writes the per-trial rows to `out` and the aggregate next to it
/// (`foo.csv` -> `foo-aggregate.csv`), returning the aggregate path.
pub fn write_artifacts(artifacts: &RunArtifacts, out: &Path) -> Result<PathBuf, HarnessError> {
    std::fs::write(out, metrics::to_csv(&artifacts.rows))?;
    let agg_path = aggregate_path(out);
    std::fs::write(&agg_path, metrics::aggregate_csv(&artifacts.rows))?;
    Ok(agg_path)
}

pub fn aggregate_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("metrics");
    let name = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-aggregate.{ext}"),
        None => format!("{stem}-aggregate"),
    };
    out.with_file_name(name)
}
