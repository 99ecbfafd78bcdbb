//! Wireless channel: node geometry, path loss, fading realizations, average
//! gains and their Laplacian, and energy-dispersion factors.
//!
//! Average link gains `Λ_ij` play a double role. Physically they are the
//! mean received energy per unit transmit energy on link `(i, j)`; in the
//! algorithm they are the mixing weights of the consensus graph, with
//! Laplacian `ℓ_ij = −Λ_ij`, `ℓ_ii = Σ_{j≠i} Λ_ij`. Nothing here is ever
//! revealed to the radio receive path, which stays channel-blind.

use crate::phy::{FramePlan, ResourcePartition};
use crate::rng::{pair_stream, Purpose};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;
use thiserror::Error;

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("deployment needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("deployment radius must be finite and positive, got {0}")]
    BadRadius(f64),
    #[error("distance must be positive, got {0}")]
    BadDistance(f64),
    #[error("carrier frequency must be finite and positive, got {0}")]
    BadCarrier(f64),
    #[error("bandwidth must be finite and positive, got {0}")]
    BadBandwidth(f64),
    #[error("gain matrix must be square, got {0} entries")]
    NotSquare(usize),
    #[error("gain matrix entry ({i},{j}) = {value} is invalid: {reason}")]
    BadGain { i: usize, j: usize, value: f64, reason: &'static str },
    #[error("coherence time must be finite and positive, got {0}")]
    BadCoherence(f64),
    #[error("estimation budget must be at least 1")]
    EmptyBudget,
    #[error("deployment table line {line}: {reason}")]
    BadTable { line: usize, reason: String },
}

/// Free-space power gain `(c / (4π f_c d))²` of a path of length
/// `distance_m` at carrier `carrier_hz`.
pub fn friis_gain(distance_m: f64, carrier_hz: f64) -> Result<f64, ChannelError> {
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(ChannelError::BadDistance(distance_m));
    }
    if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
        return Err(ChannelError::BadCarrier(carrier_hz));
    }
    let amp = SPEED_OF_LIGHT_M_S / (4.0 * std::f64::consts::PI * carrier_hz * distance_m);
    Ok(amp * amp)
}

/// Node and reflector positions on a disc.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    area_radius_m: f64,
    nodes: Vec<[f64; 2]>,
    reflectors: Vec<[f64; 2]>,
}

impl Deployment {
    /// Draws `n_nodes` node positions and `n_reflectors` reflector positions
    /// independently and uniformly over the disc of radius `area_radius_m`.
    pub fn draw<R: Rng>(
        n_nodes: usize,
        n_reflectors: usize,
        area_radius_m: f64,
        rng: &mut R,
    ) -> Result<Self, ChannelError> {
        if n_nodes < 2 {
            return Err(ChannelError::TooFewNodes(n_nodes));
        }
        if !(area_radius_m.is_finite() && area_radius_m > 0.0) {
            return Err(ChannelError::BadRadius(area_radius_m));
        }
        let point = |rng: &mut R| {
            let radius = area_radius_m * rng.gen::<f64>().sqrt();
            let angle = TAU * rng.gen::<f64>();
            [radius * angle.cos(), radius * angle.sin()]
        };
        let nodes = (0..n_nodes).map(|_| point(rng)).collect();
        let reflectors = (0..n_reflectors).map(|_| point(rng)).collect();
        Ok(Deployment { area_radius_m, nodes, reflectors })
    }

    pub fn from_positions(
        area_radius_m: f64,
        nodes: Vec<[f64; 2]>,
        reflectors: Vec<[f64; 2]>,
    ) -> Result<Self, ChannelError> {
        if nodes.len() < 2 {
            return Err(ChannelError::TooFewNodes(nodes.len()));
        }
        if !(area_radius_m.is_finite() && area_radius_m > 0.0) {
            return Err(ChannelError::BadRadius(area_radius_m));
        }
        Ok(Deployment { area_radius_m, nodes, reflectors })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn reflectors(&self) -> &[[f64; 2]] {
        &self.reflectors
    }

    pub fn area_radius_m(&self) -> f64 {
        self.area_radius_m
    }

    pub fn node_distance(&self, i: usize, j: usize) -> f64 {
        dist(self.nodes[i], self.nodes[j])
    }

    /// Serializes to a plain-text table: a radius line, then one
    /// `node <index> <x> <y>` row per node and one
    /// `reflector <index> <x> <y>` row per reflector.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("radius {}\n", self.area_radius_m));
        for (i, p) in self.nodes.iter().enumerate() {
            out.push_str(&format!("node {} {} {}\n", i, p[0], p[1]));
        }
        for (i, p) in self.reflectors.iter().enumerate() {
            out.push_str(&format!("reflector {} {} {}\n", i, p[0], p[1]));
        }
        out
    }

    /// Parses the [`Deployment::to_table`] format. Blank lines and `#`
    /// comments are allowed; indices must appear in order.
    pub fn from_table(text: &str) -> Result<Self, ChannelError> {
        let mut radius = None;
        let mut nodes: Vec<[f64; 2]> = Vec::new();
        let mut reflectors: Vec<[f64; 2]> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let bad = |reason: String| ChannelError::BadTable { line, reason };
            let fnum = |s: &str| -> Result<f64, ChannelError> {
                s.parse::<f64>().map_err(|_| ChannelError::BadTable {
                    line,
                    reason: format!("expected a number, got {s:?}"),
                })
            };
            match fields.as_slice() {
                ["radius", v] => radius = Some(fnum(v)?),
                [kind @ ("node" | "reflector"), i, x, y] => {
                    let list = if *kind == "node" { &mut nodes } else { &mut reflectors };
                    let want = list.len();
                    if i.parse::<usize>().ok() != Some(want) {
                        return Err(bad(format!("expected {kind} index {want}, got {i:?}")));
                    }
                    list.push([fnum(x)?, fnum(y)?]);
                }
                _ => return Err(bad(format!("unrecognized row {trimmed:?}"))),
            }
        }
        let radius = radius.ok_or(ChannelError::BadTable {
            line: 0,
            reason: "missing radius line".into(),
        })?;
        Deployment::from_positions(radius, nodes, reflectors)
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Symmetric nonnegative link-gain matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricGains {
    n: usize,
    lam: Vec<f64>,
}

impl SymmetricGains {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self, ChannelError> {
        if entries.len() != n * n {
            return Err(ChannelError::NotSquare(entries.len()));
        }
        if n < 2 {
            return Err(ChannelError::TooFewNodes(n));
        }
        for i in 0..n {
            for j in 0..n {
                let v = entries[i * n + j];
                let bad = |reason| ChannelError::BadGain { i, j, value: v, reason };
                if !v.is_finite() || v < 0.0 {
                    return Err(bad("must be finite and nonnegative"));
                }
                if i == j && v != 0.0 {
                    return Err(bad("diagonal must be zero"));
                }
                if entries[j * n + i] != v {
                    return Err(bad("matrix must be exactly symmetric"));
                }
            }
        }
        Ok(SymmetricGains { n, lam: entries })
    }

    /// Builds from `f(i, j)` evaluated once per unordered pair `i < j`.
    pub fn from_pair_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, ChannelError> {
        let mut lam = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                lam[i * n + j] = v;
                lam[j * n + i] = v;
            }
        }
        SymmetricGains::new(n, lam)
    }

    /// Independent uniform gains on `[lo, hi]`, a standard synthetic graph.
    pub fn random_uniform<R: Rng>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Result<Self, ChannelError> {
        SymmetricGains::from_pair_fn(n, |_, _| rng.gen_range(lo..hi))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lam[i * self.n + j]
    }

    /// Total gain seen by node `i`: `Σ_{j≠i} Λ_ij`.
    pub fn row_sum(&self, i: usize) -> f64 {
        (0..self.n).map(|j| self.get(i, j)).sum()
    }
}

/// Where average gains come from.
#[derive(Debug, Clone)]
pub enum GainModel {
    /// Gains given directly; fading is then synthetic Rayleigh with these
    /// per-link variances, independent across resource units.
    Explicit(SymmetricGains),
    /// Gains emerge from geometry: a line-of-sight path plus one reflected
    /// path per reflector, each with free-space loss over its total length.
    Reflector { deployment: Deployment, carrier_hz: f64 },
}

impl GainModel {
    pub fn n_nodes(&self) -> usize {
        match self {
            GainModel::Explicit(g) => g.len(),
            GainModel::Reflector { deployment, .. } => deployment.n_nodes(),
        }
    }
}

/// How often fading coefficients are redrawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingSchedule {
    /// Fresh coefficients every frame.
    PerIteration,
    /// Coefficients held for `coherence_s` seconds of airtime.
    Block { coherence_s: f64 },
    /// Coefficients drawn once and frozen for the whole run.
    Static,
}

impl FadingSchedule {
    /// Index of the independent fading draw governing frame `k`; equal
    /// indices mean bit-identical coefficients.
    pub fn fading_index(&self, k: u64, frame_duration_s: f64) -> u64 {
        match self {
            FadingSchedule::PerIteration => k,
            FadingSchedule::Block { coherence_s } => {
                (k as f64 * frame_duration_s / coherence_s).floor() as u64
            }
            FadingSchedule::Static => 0,
        }
    }
}

/// Complete channel description for a run.
#[derive(Debug, Clone)]
pub struct ChannelSpec {
    pub gains: GainModel,
    pub schedule: FadingSchedule,
    /// Total bandwidth `W` in Hz; sets both frame airtime and the
    /// frequency spacing of the reflector model's response.
    pub bandwidth_hz: f64,
}

impl ChannelSpec {
    pub fn new(gains: GainModel, schedule: FadingSchedule, bandwidth_hz: f64) -> Result<Self, ChannelError> {
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(ChannelError::BadBandwidth(bandwidth_hz));
        }
        if let FadingSchedule::Block { coherence_s } = schedule {
            if !(coherence_s.is_finite() && coherence_s > 0.0) {
                return Err(ChannelError::BadCoherence(coherence_s));
            }
        }
        Ok(ChannelSpec { gains, schedule, bandwidth_hz })
    }

    pub fn n_nodes(&self) -> usize {
        self.gains.n_nodes()
    }
}

/// One frame's complex gains for every node pair. Realizations are
/// reciprocal by construction: `gains(i, j)` and `gains(j, i)` are the same
/// slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    n: usize,
    q: usize,
    h: Vec<Complex64>,
}

impl ChannelRealization {
    /// Builds a deterministic realization from `f(i, j, q)` with `i < j`.
    pub fn from_fn(n: usize, q: usize, mut f: impl FnMut(usize, usize, usize) -> Complex64) -> Self {
        let pairs = n * (n - 1) / 2;
        let mut h = Vec::with_capacity(pairs * q);
        for i in 0..n {
            for j in (i + 1)..n {
                for unit in 0..q {
                    h.push(f(i, j, unit));
                }
            }
        }
        ChannelRealization { n, q, h }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn resource_units(&self) -> usize {
        self.q
    }

    fn slab(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        // Row-major upper triangle: pairs (a, a+1..n) come after all pairs
        // with smaller first index.
        a * self.n - a * (a + 1) / 2 + (b - a - 1)
    }

    pub fn gains(&self, i: usize, j: usize) -> &[Complex64] {
        assert_ne!(i, j, "no self-channel");
        let s = self.slab(i, j);
        &self.h[s * self.q..(s + 1) * self.q]
    }
}

/// Line-of-sight plus per-reflector path geometry for one node pair.
fn pair_paths(deployment: &Deployment, carrier_hz: f64, i: usize, j: usize) -> Result<Vec<(f64, f64)>, ChannelError> {
    let mut paths = Vec::with_capacity(1 + deployment.reflectors().len());
    let los = deployment.node_distance(i, j);
    paths.push((friis_gain(los, carrier_hz)?, los / SPEED_OF_LIGHT_M_S));
    for r in deployment.reflectors() {
        let len = dist(deployment.nodes()[i], *r) + dist(*r, deployment.nodes()[j]);
        paths.push((friis_gain(len, carrier_hz)?, len / SPEED_OF_LIGHT_M_S));
    }
    Ok(paths)
}

/// Draws the path coefficients for one pair and frame: a unit-magnitude
/// uniform-phase line-of-sight coefficient, then one standard complex
/// Gaussian per reflected path. The draw order here is a compatibility
/// contract with the gain estimators below.
fn draw_path_coeffs<R: Rng>(rng: &mut R, n_paths: usize) -> Vec<Complex64> {
    let mut coeffs = Vec::with_capacity(n_paths);
    coeffs.push(Complex64::from_polar(1.0, rng.gen_range(0.0..TAU)));
    for _ in 1..n_paths {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        coeffs.push(Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2);
    }
    coeffs
}

/// Per-subcarrier phasor of one path: `e^(−j 2π τ W s / SC)` for
/// `s = 0..SC`, built by recurrence.
fn path_phasors(tau: f64, bandwidth_hz: f64, subcarriers: usize) -> Vec<Complex64> {
    let step = Complex64::from_polar(1.0, -TAU * tau * bandwidth_hz / subcarriers as f64);
    let mut ph = Complex64::new(1.0, 0.0);
    (0..subcarriers)
        .map(|_| {
            let cur = ph;
            ph *= step;
            cur
        })
        .collect()
}

/// Draws the fading realization for the given fading index (see
/// [`FadingSchedule::fading_index`]). Identical indices reproduce identical
/// coefficients, which is how block and static schedules are realized.
pub fn draw_realization(
    spec: &ChannelSpec,
    plan: &FramePlan,
    fading_index: u64,
    master: u64,
    trial: u64,
) -> Result<ChannelRealization, ChannelError> {
    let n = spec.n_nodes();
    let q = plan.resource_units();
    let sc = plan.subcarriers();
    let pairs = n * (n - 1) / 2;
    let mut h = Vec::with_capacity(pairs * q);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut rng = pair_stream(master, trial, fading_index, i, j, n, Purpose::Fading);
            match &spec.gains {
                GainModel::Explicit(g) => {
                    let sd = (g.get(i, j) / 2.0).sqrt();
                    for _ in 0..q {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        h.push(Complex64::new(re * sd, im * sd));
                    }
                }
                GainModel::Reflector { deployment, carrier_hz } => {
                    let paths = pair_paths(deployment, *carrier_hz, i, j)?;
                    let coeffs = draw_path_coeffs(&mut rng, paths.len());
                    let mut resp = vec![Complex64::new(0.0, 0.0); sc];
                    for ((alpha, tau), c) in paths.iter().zip(&coeffs) {
                        let amp = alpha.sqrt() * c;
                        for (r, ph) in resp.iter_mut().zip(path_phasors(*tau, spec.bandwidth_hz, sc)) {
                            *r += amp * ph;
                        }
                    }
                    // The channel is flat in time within a frame: every OFDM
                    // symbol sees the same subcarrier response.
                    for unit in 0..q {
                        h.push(resp[unit % sc]);
                    }
                }
            }
        }
    }
    Ok(ChannelRealization { n, q, h })
}

/// Per-resource-unit weight `(1/M)·(1/|R_m(q)|)` used by the set-then-uniform
/// energy average, folded down to one weight per subcarrier.
fn subcarrier_weights(partition: &ResourcePartition, plan: &FramePlan) -> Vec<f64> {
    let m = partition.num_sets() as f64;
    let mut w = vec![0.0; plan.subcarriers()];
    for set_index in 0..partition.num_sets() {
        let set = partition.set(set_index);
        let per_unit = 1.0 / (m * set.len() as f64);
        for &q in set {
            w[plan.subcarrier_of(q)] += per_unit;
        }
    }
    w
}

/// Estimates the average-gain matrix `Λ` of a channel spec.
///
/// Explicit gain models under redrawn fading return their configured gains
/// exactly. Static schedules return the deterministic set-then-uniform
/// energy average of the single frozen realization. Reflector models under
/// redrawn fading average `budget` independent draws, reusing the exact
/// coefficient streams of [`draw_realization`] at fading indices
/// `0..budget`, so the estimate equals averaging actual realizations.
pub fn average_gains(
    spec: &ChannelSpec,
    plan: &FramePlan,
    partition: &ResourcePartition,
    budget: usize,
    master: u64,
    trial: u64,
) -> Result<SymmetricGains, ChannelError> {
    let n = spec.n_nodes();
    match (&spec.gains, spec.schedule) {
        (GainModel::Explicit(g), FadingSchedule::PerIteration | FadingSchedule::Block { .. }) => Ok(g.clone()),
        (_, FadingSchedule::Static) => {
            let frozen = draw_realization(spec, plan, 0, master, trial)?;
            SymmetricGains::from_pair_fn(n, |i, j| {
                let g: Vec<f64> = frozen.gains(i, j).iter().map(|h| h.norm_sqr()).collect();
                partition.weighted_mean(&g)
            })
        }
        (GainModel::Reflector { deployment, carrier_hz }, _) => {
            if budget == 0 {
                return Err(ChannelError::EmptyBudget);
            }
            let ws = subcarrier_weights(partition, plan);
            let sc = plan.subcarriers();
            SymmetricGains::from_pair_fn(n, |i, j| {
                let paths = match pair_paths(deployment, *carrier_hz, i, j) {
                    Ok(p) => p,
                    Err(_) => unreachable!("geometry validated at deployment"),
                };
                let np = paths.len();
                let phasors: Vec<Vec<Complex64>> =
                    paths.iter().map(|&(_, tau)| path_phasors(tau, spec.bandwidth_hz, sc)).collect();
                // Gram matrix of the path phasors under the subcarrier
                // weights: collapses each draw's energy average to a
                // quadratic form in the path coefficients.
                let mut gram = vec![Complex64::new(0.0, 0.0); np * np];
                for s in 0..sc {
                    for a in 0..np {
                        for b in 0..np {
                            gram[a * np + b] += ws[s] * phasors[a][s] * phasors[b][s].conj();
                        }
                    }
                }
                let mut acc = 0.0;
                for t in 0..budget {
                    let mut rng = pair_stream(master, trial, t as u64, i, j, n, Purpose::Fading);
                    let coeffs = draw_path_coeffs(&mut rng, np);
                    let mut draw = Complex64::new(0.0, 0.0);
                    for a in 0..np {
                        for b in 0..np {
                            let amp = (paths[a].0 * paths[b].0).sqrt();
                            draw += amp * coeffs[a] * coeffs[b].conj() * gram[a * np + b];
                        }
                    }
                    acc += draw.re;
                }
                acc / budget as f64
            })
        }
    }
}

/// Energy-dispersion factors `(θ, ϖ)` of a channel spec.
///
/// `θ` measures per-unit energy spread around the link average:
/// `θ = max_ij (1/Λ_ij)·sqrt((1/Q) Σ_q E[(|h_q|² − Λ_ij)²])`. `ϖ` measures
/// the spread of per-set energy averages:
/// `ϖ = max_ij (1/Λ_ij)·sqrt((1/M) Σ_m E[(λ̂_m − Λ_ij)²])` with
/// `λ̂_m = (1/|R_m|) Σ_{q∈R_m} |h_q|²`.
///
/// For explicit Rayleigh gains under redrawn fading both have closed forms:
/// `θ = 1` and `ϖ = sqrt((1/M) Σ_m 1/|R_m|) ≈ sqrt(M/Q)`. Static schedules
/// evaluate the frozen realization directly; reflector models under redrawn
/// fading are Monte-Carlo estimates over `budget` draws, plugging in the
/// estimated `Λ`.
pub fn dispersion(
    spec: &ChannelSpec,
    plan: &FramePlan,
    partition: &ResourcePartition,
    gains: &SymmetricGains,
    budget: usize,
    master: u64,
    trial: u64,
) -> Result<(f64, f64), ChannelError> {
    let n = spec.n_nodes();
    let m = partition.num_sets();
    let q = partition.resource_units();
    match (&spec.gains, spec.schedule) {
        (GainModel::Explicit(_), FadingSchedule::PerIteration | FadingSchedule::Block { .. }) => {
            Ok((1.0, partition.inverse_size_mean().sqrt()))
        }
        (_, FadingSchedule::Static) => {
            let frozen = draw_realization(spec, plan, 0, master, trial)?;
            let mut theta: f64 = 0.0;
            let mut varpi: f64 = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let lam = gains.get(i, j);
                    let g: Vec<f64> = frozen.gains(i, j).iter().map(|h| h.norm_sqr()).collect();
                    let unit_var = g.iter().map(|&e| (e - lam).powi(2)).sum::<f64>() / q as f64;
                    let set_var = (0..m)
                        .map(|set_index| {
                            let set = partition.set(set_index);
                            let mean = set.iter().map(|&u| g[u]).sum::<f64>() / set.len() as f64;
                            (mean - lam).powi(2)
                        })
                        .sum::<f64>()
                        / m as f64;
                    theta = theta.max(unit_var.sqrt() / lam);
                    varpi = varpi.max(set_var.sqrt() / lam);
                }
            }
            Ok((theta, varpi))
        }
        (GainModel::Reflector { deployment, carrier_hz }, _) => {
            if budget == 0 {
                return Err(ChannelError::EmptyBudget);
            }
            let sc = plan.subcarriers();
            let mut theta: f64 = 0.0;
            let mut varpi: f64 = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let lam = gains.get(i, j);
                    let paths = pair_paths(deployment, *carrier_hz, i, j)?;
                    let np = paths.len();
                    let phasors: Vec<Vec<Complex64>> =
                        paths.iter().map(|&(_, tau)| path_phasors(tau, spec.bandwidth_hz, sc)).collect();
                    let amps: Vec<f64> = paths.iter().map(|p| p.0.sqrt()).collect();
                    let mut unit_acc = 0.0;
                    let mut set_acc = 0.0;
                    let mut g = vec![0.0; sc];
                    for t in 0..budget {
                        let mut rng = pair_stream(master, trial, t as u64, i, j, n, Purpose::Fading);
                        let coeffs = draw_path_coeffs(&mut rng, np);
                        for (s, gs) in g.iter_mut().enumerate() {
                            let mut hs = Complex64::new(0.0, 0.0);
                            for a in 0..np {
                                hs += amps[a] * coeffs[a] * phasors[a][s];
                            }
                            *gs = hs.norm_sqr();
                        }
                        // Every subcarrier appears in the same number of
                        // resource units, so the per-unit mean is a
                        // per-subcarrier mean.
                        unit_acc += g.iter().map(|&e| (e - lam).powi(2)).sum::<f64>() / sc as f64;
                        set_acc += (0..m)
                            .map(|set_index| {
                                let set = partition.set(set_index);
                                let mean = set.iter().map(|&u| g[plan.subcarrier_of(u)]).sum::<f64>()
                                    / set.len() as f64;
                                (mean - lam).powi(2)
                            })
                            .sum::<f64>()
                            / m as f64;
                    }
                    theta = theta.max((unit_acc / budget as f64).sqrt() / lam);
                    varpi = varpi.max((set_acc / budget as f64).sqrt() / lam);
                }
            }
            Ok((theta, varpi))
        }
    }
}

/// Laplacian of the average-gain graph with its spectrum precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct GainLaplacian {
    gains: SymmetricGains,
    eigenvalues: Vec<f64>,
}

impl GainLaplacian {
    pub fn new(gains: SymmetricGains) -> Self {
        let n = gains.len();
        let lap = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                gains.row_sum(i)
            } else {
                -gains.get(i, j)
            }
        });
        let mut eigenvalues: Vec<f64> = lap.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        GainLaplacian { gains, eigenvalues }
    }

    pub fn n_nodes(&self) -> usize {
        self.gains.len()
    }

    pub fn gains(&self) -> &SymmetricGains {
        &self.gains
    }

    /// Laplacian entry: `−Λ_ij` off the diagonal, `Σ_{j≠i} Λ_ij` on it.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.gains.row_sum(i)
        } else {
            -self.gains.get(i, j)
        }
    }

    /// Eigenvalues in ascending order; the first is 0 up to roundoff.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Second-smallest eigenvalue `ρ₂`; positive iff the graph is connected.
    pub fn algebraic_connectivity(&self) -> f64 {
        self.eigenvalues[1]
    }

    /// Largest eigenvalue `ρ_N`.
    pub fn spectral_radius(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// `Λ* = max_i Σ_{j≠i} Λ_ij`, the largest total gain at any node.
    pub fn max_total_gain(&self) -> f64 {
        (0..self.gains.len()).map(|i| self.gains.row_sum(i)).fold(0.0, f64::max)
    }

    /// Blockwise product `(L ⊗ I_d)·W`: row `i` is
    /// `ℓ_ii·w_i − Σ_{j≠i} Λ_ij·w_j`. Never materializes the Nd×Nd matrix.
    pub fn apply<S: AsRef<[f64]>>(&self, states: &[S]) -> Vec<Vec<f64>> {
        let n = self.gains.len();
        assert_eq!(states.len(), n);
        let d = states[0].as_ref().len();
        (0..n)
            .map(|i| {
                let mut row = vec![0.0; d];
                for (j, s) in states.iter().enumerate() {
                    let w = s.as_ref();
                    assert_eq!(w.len(), d);
                    let c = self.entry(i, j);
                    for (r, &x) in row.iter_mut().zip(w) {
                        *r += c * x;
                    }
                }
                row
            })
            .collect()
    }

    /// Quadratic form `Wᵀ(L ⊗ I_d)W = Σ_{i<j} Λ_ij ‖w_i − w_j‖²`, the
    /// disagreement energy of the stacked state.
    pub fn quadratic_form<S: AsRef<[f64]>>(&self, states: &[S]) -> f64 {
        let n = self.gains.len();
        assert_eq!(states.len(), n);
        let mut total = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (states[i].as_ref(), states[j].as_ref());
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                total += self.gains.get(i, j) * d2;
            }
        }
        total
    }
}
