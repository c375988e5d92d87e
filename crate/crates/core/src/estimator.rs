//! Monte-Carlo estimation of the cluster-size distribution of a tagged particle.
//!
//! Each replica draws a Poisson configuration in the box `[0, L]^d`, inserts one
//! extra particle at the box centre (for a Poisson field this realises the
//! conditioning on a particle at that point), evolves the system on `[0, tau]`
//! and records the size `k` of the tagged particle's cluster.
//!
//! Replicas whose cluster has a member closer than `margin` to a box face are
//! discarded and counted: with `margin >= 2r + 2 v0 tau` such a cluster might have
//! touched particles that the finite box left out.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{cluster_containing, initial_subclusters_of};
use crate::dynamics::{
    free_flight, sample_velocity, simulate_with_kernel, ConfigError, DynamicsError, DynamicsKind, JumpKernel,
    ParticleState, SimConfig, Trajectory,
};
use crate::geometry::Vector;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Id of the inserted particle.
pub const TAGGED_ID: usize = 0;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("no usable replicas: all {0} were discarded")]
    NoUsableReplicas(u64),
    #[error("need at least {needed} cluster sizes with enough counts to fit, found {found}")]
    InsufficientSupport { needed: usize, found: usize },
    #[error("worker pool: {0}")]
    Pool(String),
}

fn is_false(b: &bool) -> bool {
    !b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    #[serde(flatten)]
    pub sim: SimConfig,
    pub replicas: u64,
    /// Distance from the box faces inside which clusters are discarded.
    /// Defaults to `2r + 2 v0 tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    /// Tally clusters with a pair already in contact at `t = 0` separately.
    #[serde(default, skip_serializing_if = "is_false")]
    pub require_no_initial_contact: bool,
    /// Distance at which two particles count as touching at `t = 0`.
    /// Defaults to `2r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact_threshold: Option<f64>,
}

impl EstimatorConfig {
    pub fn new(sim: SimConfig, replicas: u64) -> Self {
        EstimatorConfig { sim, replicas, margin: None, require_no_initial_contact: false, contact_threshold: None }
    }

    pub fn min_margin(&self) -> f64 {
        2.0 * self.sim.r + 2.0 * self.sim.v0 * self.sim.tau
    }

    pub fn margin(&self) -> f64 {
        self.margin.unwrap_or_else(|| self.min_margin())
    }

    pub fn contact_threshold(&self) -> f64 {
        self.contact_threshold.unwrap_or(2.0 * self.sim.r)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim.validate()?;
        if self.replicas == 0 {
            return Err(ConfigError::new("replicas", "must be at least 1"));
        }
        let m = self.margin();
        // the tiny slack keeps the default value valid under rounding
        if !(m.is_finite() && m >= self.min_margin() * (1.0 - 1e-12)) {
            return Err(ConfigError::new("margin", format!("must be at least 2r + 2 v0 tau = {}", self.min_margin())));
        }
        if 2.0 * m >= self.sim.box_side {
            return Err(ConfigError::new("L", format!("box side must exceed twice the margin ({m})")));
        }
        let c = self.contact_threshold();
        if !(c > 0.0 && c.is_finite()) {
            return Err(ConfigError::new("contact_threshold", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Poisson configuration in `[0, L]^d` plus the tagged particle at the centre
/// (id 0, listed first). Velocities are uniform on the ball of radius `v0`,
/// types uniform on `1..=types`.
pub fn sample_initial_configuration<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Vec<ParticleState> {
    let d = config.d;
    let l = config.box_side;
    let mean = config.density() * l.powi(d as i32);
    let n = Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0);
    let draw = |id: usize, x: Vector, rng: &mut R| ParticleState {
        id,
        x,
        v: sample_velocity(d, config.v0, rng),
        a: rng.random_range(1..=config.types),
    };
    let centre = Vector::from_slice(&vec![0.5 * l; d]).expect("valid dimension");
    let mut states = Vec::with_capacity(n + 1);
    states.push(draw(TAGGED_ID, centre, rng));
    for id in 1..=n {
        let mut x = Vector::zeros(d);
        for c in x.as_mut_slice() {
            *c = rng.random_range(0.0..l);
        }
        states.push(draw(id, x, rng));
    }
    states
}

/// Generator for replica `index`: one ChaCha stream per replica.
pub fn replica_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplicaOutcome {
    Recorded {
        k: usize,
    },
    Boundary {
        k: usize,
    },
    /// Some pair of the cluster touched at `t = 0`; `leaves` is the number of
    /// initial subclusters.
    InitialContact {
        k: usize,
        leaves: usize,
    },
}

fn evolve<R: Rng + ?Sized>(
    config: &SimConfig,
    initial: &[ParticleState],
    rng: &mut R,
) -> Result<Vec<Trajectory>, DynamicsError> {
    match config.kernel() {
        Some(k) if config.dynamics == DynamicsKind::Jump && k.rate_max() > 0.0 => {
            let (trajs, _) = simulate_with_kernel(initial, config.tau, config.r, config.v0, Some(&k), rng)?;
            Ok(trajs)
        }
        _ => Ok(free_flight(initial, config.tau)),
    }
}

pub fn run_replica(config: &EstimatorConfig, index: u64) -> Result<ReplicaOutcome, EstimatorError> {
    let sim = &config.sim;
    let mut rng = replica_rng(sim.seed, index);
    let initial = sample_initial_configuration(sim, &mut rng);
    let trajs = evolve(sim, &initial, &mut rng)?;
    let members = cluster_containing(&trajs, sim.r, sim.tau, TAGGED_ID);
    let k = members.len();
    let (lo, hi) = (config.margin(), sim.box_side - config.margin());
    // ids are positions in `initial`
    let near_face = members.iter().any(|&id| initial[id].x.as_slice().iter().any(|&c| c < lo || c > hi));
    if near_face {
        return Ok(ReplicaOutcome::Boundary { k });
    }
    if config.require_no_initial_contact {
        let positions: Vec<Vector> = members.iter().map(|&id| initial[id].x).collect();
        let leaves = initial_subclusters_of(&members, &positions, config.contact_threshold()).partition.sizes().len();
        if leaves < k {
            return Ok(ReplicaOutcome::InitialContact { k, leaves });
        }
    }
    Ok(ReplicaOutcome::Recorded { k })
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if p == 1.0 { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PkRow {
    pub k: usize,
    pub count: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Tallies of replica outcomes. `P_k` is estimated as `count_k / replicas`,
/// so the recorded estimates plus the discard fraction sum to one.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PkTable {
    pub replicas: u64,
    pub counts: BTreeMap<usize, u64>,
    pub boundary_discards: u64,
    /// Initial-contact clusters by size.
    pub initial_contact: BTreeMap<usize, u64>,
    /// Initial-contact clusters by number of initial subclusters.
    pub initial_contact_leaves: BTreeMap<usize, u64>,
}

impl PkTable {
    pub fn from_counts(counts: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let counts: BTreeMap<usize, u64> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        PkTable { replicas: counts.values().sum(), counts, ..Default::default() }
    }

    pub fn record(&mut self, outcome: ReplicaOutcome) {
        self.replicas += 1;
        match outcome {
            ReplicaOutcome::Recorded { k } => *self.counts.entry(k).or_default() += 1,
            ReplicaOutcome::Boundary { .. } => self.boundary_discards += 1,
            ReplicaOutcome::InitialContact { k, leaves } => {
                *self.initial_contact.entry(k).or_default() += 1;
                *self.initial_contact_leaves.entry(leaves).or_default() += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &PkTable) {
        self.replicas += other.replicas;
        self.boundary_discards += other.boundary_discards;
        for (map, theirs) in [
            (&mut self.counts, &other.counts),
            (&mut self.initial_contact, &other.initial_contact),
            (&mut self.initial_contact_leaves, &other.initial_contact_leaves),
        ] {
            for (&k, &c) in theirs {
                *map.entry(k).or_default() += c;
            }
        }
    }

    pub fn count(&self, k: usize) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    pub fn recorded(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn discarded(&self) -> u64 {
        self.replicas - self.recorded()
    }

    pub fn discard_fraction(&self) -> f64 {
        self.discarded() as f64 / self.replicas.max(1) as f64
    }

    pub fn p_hat(&self, k: usize) -> f64 {
        self.count(k) as f64 / self.replicas.max(1) as f64
    }

    pub fn interval(&self, k: usize) -> (f64, f64) {
        wilson_interval(self.count(k), self.replicas, Z95)
    }

    /// Standard error of `p_hat(k)`.
    pub fn std_error(&self, k: usize) -> f64 {
        let p = self.p_hat(k);
        (p * (1.0 - p) / self.replicas.max(1) as f64).sqrt()
    }

    pub fn max_k(&self) -> usize {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    /// One row per `k = 1..=max_k`, zero counts included.
    pub fn rows(&self) -> Vec<PkRow> {
        (1..=self.max_k())
            .map(|k| {
                let (ci_lo, ci_hi) = self.interval(k);
                PkRow { k, count: self.count(k), p_hat: self.p_hat(k), ci_lo, ci_hi }
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,count,p_hat,ci_lo,ci_hi\n");
        for r in self.rows() {
            let _ = writeln!(s, "{},{},{},{},{}", r.k, r.count, r.p_hat, r.ci_lo, r.ci_hi);
        }
        s
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, EstimatorError> {
    match workers {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| EstimatorError::Pool(e.to_string())),
    }
}

/// Runs all replicas (in parallel) and tallies them in replica order.
pub fn estimate_pk(config: &EstimatorConfig, workers: Option<usize>) -> Result<PkTable, EstimatorError> {
    config.validate()?;
    let outcomes: Vec<Result<ReplicaOutcome, EstimatorError>> =
        with_pool(workers, || (0..config.replicas).into_par_iter().map(|i| run_replica(config, i)).collect())?;
    let mut table = PkTable::default();
    for o in outcomes {
        table.record(o?);
    }
    if table.recorded() == 0 {
        return Err(EstimatorError::NoUsableReplicas(table.replicas));
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Smallest count a cluster size needs to enter the fit.
    pub min_count: u64,
    pub bootstrap: usize,
    pub seed: u64,
    /// Two-sided coverage of the bootstrap interval.
    pub level: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { min_count: 10, bootstrap: 1000, seed: 0x5eed, level: 0.95 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricFit {
    /// `exp(slope)` of the least-squares line through `(k, ln P_k)`.
    pub ratio: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub k_min: usize,
    pub k_max: usize,
}

fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn slope_over(counts: &BTreeMap<usize, u64>, k_min: usize, k_max: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = (k_min..=k_max)
        .filter_map(|k| counts.get(&k).filter(|&&c| c > 0).map(|&c| (k as f64, (c as f64).ln())))
        .collect();
    ls_slope(&pts)
}

/// Geometric decay rate of `P_k` over `k = 2..=k_max`, where `k_max` is the
/// last size of an unbroken run of counts `>= min_count`. The interval is a
/// percentile bootstrap over multinomial resamples of the whole table.
pub fn fit_geometric_ratio(table: &PkTable) -> Result<GeometricFit, EstimatorError> {
    fit_geometric_ratio_with(table, FitOptions::default())
}

pub fn fit_geometric_ratio_with(table: &PkTable, opts: FitOptions) -> Result<GeometricFit, EstimatorError> {
    const K_MIN: usize = 2;
    const NEEDED: usize = 3;
    let mut k_max = K_MIN;
    while table.count(k_max) >= opts.min_count.max(1) {
        k_max += 1;
    }
    let found = k_max - K_MIN;
    if found < NEEDED {
        return Err(EstimatorError::InsufficientSupport { needed: NEEDED, found });
    }
    let k_max = k_max - 1;
    let slope = slope_over(&table.counts, K_MIN, k_max).expect("three distinct points");

    // multinomial resampling via sequential binomials, categories in k order
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let cats: Vec<(usize, u64)> = table.counts.iter().map(|(&k, &c)| (k, c)).collect();
    let total = table.replicas;
    let mut ratios: Vec<f64> = Vec::with_capacity(opts.bootstrap);
    for _ in 0..opts.bootstrap {
        let mut left = total;
        let mut mass_left = total;
        let mut sample = BTreeMap::new();
        for &(k, c) in &cats {
            if left == 0 || mass_left == 0 {
                break;
            }
            let p = (c as f64 / mass_left as f64).min(1.0);
            let draw = Binomial::new(left, p).map(|b| b.sample(&mut rng)).unwrap_or(0);
            sample.insert(k, draw);
            left -= draw;
            mass_left -= c;
        }
        if let Some(s) = slope_over(&sample, K_MIN, k_max) {
            ratios.push(s.exp());
        }
    }
    ratios.sort_by(f64::total_cmp);
    let q = |p: f64| -> f64 {
        if ratios.is_empty() {
            return f64::NAN;
        }
        let idx = ((ratios.len() - 1) as f64 * p).round() as usize;
        ratios[idx]
    };
    let tail = (1.0 - opts.level) / 2.0;
    Ok(GeometricFit { ratio: slope.exp(), ci_lo: q(tail), ci_hi: q(1.0 - tail), k_min: K_MIN, k_max })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaScanRow {
    pub alpha: f64,
    pub box_side: f64,
    pub table: PkTable,
    pub fit: Option<GeometricFit>,
}

/// One estimate and fit per `(alpha, L)` on the grid; the rest of the geometry
/// is taken from `base`.
pub fn alpha_scan(
    base: &EstimatorConfig,
    alphas: &[f64],
    box_sides: &[f64],
    workers: Option<usize>,
) -> Result<Vec<AlphaScanRow>, EstimatorError> {
    let mut rows = Vec::new();
    for &box_side in box_sides {
        for &alpha in alphas {
            let mut cfg = base.clone();
            cfg.sim.alpha = alpha;
            cfg.sim.box_side = box_side;
            let table = estimate_pk(&cfg, workers)?;
            let fit = fit_geometric_ratio(&table).ok();
            rows.push(AlphaScanRow { alpha, box_side, table, fit });
        }
    }
    Ok(rows)
}

/// `alpha,L,ratio,ratio_lo,ratio_hi,P1..P{k_cols}` with empty fit cells when
/// the fit had too little support.
pub fn alpha_scan_csv(rows: &[AlphaScanRow], k_cols: usize) -> String {
    let mut s = String::from("alpha,L,ratio,ratio_lo,ratio_hi");
    for k in 1..=k_cols {
        let _ = write!(s, ",P{k}");
    }
    s.push('\n');
    for row in rows {
        let _ = write!(s, "{},{}", row.alpha, row.box_side);
        match row.fit {
            Some(f) => {
                let _ = write!(s, ",{},{},{}", f.ratio, f.ci_lo, f.ci_hi);
            }
            None => s.push_str(",,,"),
        }
        for k in 1..=k_cols {
            let _ = write!(s, ",{}", row.table.p_hat(k));
        }
        s.push('\n');
    }
    s
}
