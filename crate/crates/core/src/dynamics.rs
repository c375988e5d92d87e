//! Particle dynamics on `[0, tau]`.
//!
//! Particles fly freely between interactions. Two interaction rules exist:
//! ghost dynamics (particles pass through each other, trajectories are single
//! straight segments) and a stochastic jump process where each pair in contact
//! carries a Poisson clock and, when it rings, both particles redraw their
//! types and velocities. Positions never jump.
//!
//! The simulation is event driven: contact boundaries come from the closed-form
//! roots in [`crate::geometry`], and jump ticks are drawn by thinning a
//! dominating clock of rate `rate_max` per active pair.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{contact_window, GeometryError, MotionSegment, RelativeMotion, Vector, MAX_DIM, TIE_EPS};
use crate::grid::SpatialGrid;

/// Relative slack allowed on the speed bound before it counts as a breach.
const SPEED_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("kernel produced speed {speed} above the bound v0 = {v0}")]
    SpeedBound { speed: f64, v0: f64 },
    #[error("non-finite state for particle {0}")]
    NonFinite(usize),
    #[error("pair rate {rate} exceeds declared maximum {max}")]
    RateAboveMax { rate: f64, max: f64 },
    #[error("invalid simulation setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicsKind {
    Ghost,
    Jump,
}

fn default_types() -> u32 {
    1
}

fn default_rate() -> f64 {
    1.0
}

/// Geometry, horizon and density of one simulation.
///
/// The density is tied to the horizon by `rho = alpha / (tau * v0 * r^(d-1))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub box_side: f64,
    pub tau: f64,
    pub r: f64,
    pub v0: f64,
    pub alpha: f64,
    pub dynamics: DynamicsKind,
    /// Constant pair rate of the built-in jump kernel.
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default = "default_types")]
    pub types: u32,
    pub seed: u64,
}

impl SimConfig {
    pub fn density(&self) -> f64 {
        self.alpha / (self.tau * self.v0 * self.r.powi(self.d as i32 - 1))
    }

    pub fn contact_distance(&self) -> f64 {
        2.0 * self.r
    }

    /// Checks every constraint; the error names the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.d == 0 || self.d > MAX_DIM {
            return Err(ConfigError::new("d", format!("must be in 1..={MAX_DIM}")));
        }
        let positive = [("L", self.box_side), ("tau", self.tau), ("r", self.r), ("v0", self.v0)];
        for (key, val) in positive {
            if !(val > 0.0 && val.is_finite()) {
                return Err(ConfigError::new(key, "must be positive and finite"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ConfigError::new(
                "alpha",
                "must be positive: the density is rho = alpha / (tau * v0 * r^(d-1))",
            ));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(ConfigError::new("rate", "must be non-negative and finite"));
        }
        if self.types == 0 {
            return Err(ConfigError::new("types", "must be at least 1"));
        }
        Ok(())
    }

    /// Kernel for this configuration, `None` for ghost dynamics.
    pub fn kernel(&self) -> Option<ConstantRateKernel> {
        match self.dynamics {
            DynamicsKind::Ghost => None,
            DynamicsKind::Jump => Some(ConstantRateKernel { rate: self.rate, v0: self.v0, types: self.types }),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("config key `{key}`: {message}")]
pub struct ConfigError {
    pub key: &'static str,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: &'static str, message: impl Into<String>) -> Self {
        ConfigError { key, message: message.into() }
    }
}

/// Position, velocity and type of one particle at some instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub id: usize,
    pub x: Vector,
    pub v: Vector,
    pub a: u32,
}

/// Uniform velocity in the closed ball of radius `v0`.
pub fn sample_velocity<R: Rng + ?Sized>(d: usize, v0: f64, rng: &mut R) -> Vector {
    let mut v = Vector::zeros(d);
    loop {
        for c in v.as_mut_slice() {
            *c = rng.random_range(-1.0..=1.0);
        }
        if v.norm_sq() <= 1.0 {
            return v * v0;
        }
    }
}

/// One piece of a trajectory: from `t` on, position `x + v (s - t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub x: Vector,
    pub v: Vector,
    pub a: u32,
}

/// Piecewise-linear path of one particle on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: usize,
    pub records: Vec<TrajectoryRecord>,
    pub horizon: f64,
}

impl Trajectory {
    pub fn free_flight(state: &ParticleState, horizon: f64) -> Self {
        Trajectory {
            id: state.id,
            records: vec![TrajectoryRecord { t: 0.0, x: state.x, v: state.v, a: state.a }],
            horizon,
        }
    }

    pub fn initial_position(&self) -> Vector {
        self.records[0].x
    }

    fn record_at(&self, t: f64) -> &TrajectoryRecord {
        let k = self.records.partition_point(|r| r.t <= t).saturating_sub(1);
        &self.records[k]
    }

    pub fn position_at(&self, t: f64) -> Vector {
        let rec = self.record_at(t);
        rec.x.add_scaled(&rec.v, t - rec.t)
    }

    /// Motion segments covering `[0, horizon]`; zero-length pieces are skipped.
    pub fn segments(&self) -> impl Iterator<Item = MotionSegment> + '_ {
        self.records.iter().enumerate().filter_map(move |(k, rec)| {
            let t1 = self.records.get(k + 1).map_or(self.horizon, |n| n.t).min(self.horizon);
            (rec.t < t1).then_some(MotionSegment { t0: rec.t, t1, x0: rec.x, v: rec.v })
        })
    }

    pub fn max_speed(&self) -> f64 {
        self.records.iter().map(|r| r.v.norm()).fold(0.0, f64::max)
    }

    /// Checks the structural invariants: records start at 0, times increase,
    /// positions are continuous and speeds respect `v0`.
    pub fn check(&self, v0: f64) -> Result<(), String> {
        let first = self.records.first().ok_or("empty trajectory")?;
        if first.t != 0.0 {
            return Err(format!("particle {} starts at t = {}", self.id, first.t));
        }
        for w in self.records.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(format!("particle {}: times not increasing at {}", self.id, w[1].t));
            }
            let end = w[0].x.add_scaled(&w[0].v, w[1].t - w[0].t);
            if end.distance(&w[1].x) > 1e-9 {
                return Err(format!("particle {}: position jumps at t = {}", self.id, w[1].t));
            }
        }
        if let Some(rec) = self.records.iter().find(|r| r.v.norm() > v0 * (1.0 + SPEED_SLACK)) {
            return Err(format!("particle {}: speed {} above v0", self.id, rec.v.norm()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    ContactStart,
    ContactEnd,
    Jump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub pair: (usize, usize),
    /// New types of the pair, jumps only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<(u32, u32)>,
    /// New velocities of the pair, jumps only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<(Vector, Vector)>,
}

pub type EventLog = Vec<Event>;

/// Rate and outcome law of a pair interaction.
pub trait JumpKernel {
    /// Upper bound on [`JumpKernel::rate`] over all pair states.
    fn rate_max(&self) -> f64;

    fn rate(&self, yi: &ParticleState, yj: &ParticleState) -> f64;

    /// New `(type, velocity)` for both members of the pair.
    fn sample(&self, yi: &ParticleState, yj: &ParticleState, rng: &mut dyn RngCore) -> ((u32, Vector), (u32, Vector));
}

/// Constant rate; types swap with probability 1/2 and both velocities are
/// redrawn uniformly from the ball of radius `v0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantRateKernel {
    pub rate: f64,
    pub v0: f64,
    pub types: u32,
}

impl JumpKernel for ConstantRateKernel {
    fn rate_max(&self) -> f64 {
        self.rate
    }

    fn rate(&self, _: &ParticleState, _: &ParticleState) -> f64 {
        self.rate
    }

    fn sample(&self, yi: &ParticleState, yj: &ParticleState, rng: &mut dyn RngCore) -> ((u32, Vector), (u32, Vector)) {
        let (ai, aj) = if rng.random_bool(0.5) { (yj.a, yi.a) } else { (yi.a, yj.a) };
        let d = yi.v.dim();
        let vi = sample_velocity(d, self.v0, rng);
        let vj = sample_velocity(d, self.v0, rng);
        ((ai, vi), (aj, vj))
    }
}

/// A pair currently in contact, with the dominating rate of its clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivePair {
    pub pair: (usize, usize),
    pub rate_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpCandidate {
    pub t: f64,
    pub pair: (usize, usize),
    /// Position of the pair in the active list.
    pub index: usize,
}

/// Earliest accepted jump tick strictly before `horizon`.
///
/// Every active pair runs an exponential clock of rate `rate_max`; the first
/// ring is accepted with probability `rate(pair, t) / rate_max`. On rejection
/// all clocks restart from the rejected tick. `rate` receives the index of
/// the pair in `active` and the tick time.
pub fn next_jump_candidate<R, F>(
    now: f64,
    horizon: f64,
    active: &[ActivePair],
    mut rate: F,
    rng: &mut R,
) -> Result<Option<JumpCandidate>, DynamicsError>
where
    R: Rng + ?Sized,
    F: FnMut(usize, f64) -> f64,
{
    let mut t = now;
    loop {
        let mut best: Option<(f64, usize)> = None;
        for (index, p) in active.iter().enumerate().filter(|(_, p)| p.rate_max > 0.0) {
            let e: f64 = Exp1.sample(rng);
            let tick = t + e / p.rate_max;
            if best.is_none_or(|(b, _)| tick < b) {
                best = Some((tick, index));
            }
        }
        let Some((tick, index)) = best else { return Ok(None) };
        if tick >= horizon {
            return Ok(None);
        }
        let p = &active[index];
        let lam = rate(index, tick);
        if !(lam >= 0.0) || lam > p.rate_max * (1.0 + SPEED_SLACK) {
            return Err(DynamicsError::RateAboveMax { rate: lam, max: p.rate_max });
        }
        if rng.random::<f64>() * p.rate_max < lam {
            return Ok(Some(JumpCandidate { t: tick, pair: p.pair, index }));
        }
        t = tick;
    }
}

/// Maximal closed intervals on which the two particles are within `2r`.
pub fn contact_intervals(ti: &Trajectory, tj: &Trajectory, r: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for_each_segment_pair(ti, tj, |a, b| {
        if let Ok(Some((lo, hi))) = contact_window(a, b, 2.0 * r) {
            match out.last_mut() {
                Some(last) if lo <= last.1 + TIE_EPS => last.1 = last.1.max(hi),
                _ => out.push((lo, hi)),
            }
        }
        true
    });
    out
}

/// Start of the first contact interval, if any.
pub fn first_contact(ti: &Trajectory, tj: &Trajectory, r: f64) -> Option<f64> {
    let mut found = None;
    for_each_segment_pair(ti, tj, |a, b| {
        found = crate::geometry::first_contact_time(a, b, 2.0 * r).ok().flatten();
        found.is_none()
    });
    found
}

/// Visits overlapping segment pairs in time order until `f` returns false.
fn for_each_segment_pair(ti: &Trajectory, tj: &Trajectory, mut f: impl FnMut(&MotionSegment, &MotionSegment) -> bool) {
    let si: Vec<MotionSegment> = ti.segments().collect();
    let sj: Vec<MotionSegment> = tj.segments().collect();
    let (mut p, mut q) = (0, 0);
    while p < si.len() && q < sj.len() {
        let (a, b) = (&si[p], &sj[q]);
        if a.t0.max(b.t0) < a.t1.min(b.t1) && !f(a, b) {
            return;
        }
        if a.t1 <= b.t1 {
            p += 1;
        } else {
            q += 1;
        }
    }
}

/// Evolves `initial` on `[0, config.tau]` with the dynamics named in `config`.
pub fn simulate_replica<R: Rng + ?Sized>(
    config: &SimConfig,
    initial: &[ParticleState],
    rng: &mut R,
) -> Result<(Vec<Trajectory>, EventLog), DynamicsError> {
    config.validate().map_err(|e| DynamicsError::Setup(e.to_string()))?;
    let kernel = config.kernel();
    simulate_with_kernel(initial, config.tau, config.r, config.v0, kernel.as_ref().map(|k| k as &dyn JumpKernel), rng)
}

/// Straight-line trajectories, no events.
pub fn free_flight(initial: &[ParticleState], tau: f64) -> Vec<Trajectory> {
    initial.iter().map(|s| Trajectory::free_flight(s, tau)).collect()
}

/// Event-driven evolution with an arbitrary kernel (`None` is ghost dynamics).
///
/// The event log holds contact starts and ends for every pair as well as the
/// jumps. Pairs already in contact at `t = 0` get a contact-start event at 0.
pub fn simulate_with_kernel<R: Rng + ?Sized>(
    initial: &[ParticleState],
    tau: f64,
    r: f64,
    v0: f64,
    kernel: Option<&dyn JumpKernel>,
    rng: &mut R,
) -> Result<(Vec<Trajectory>, EventLog), DynamicsError> {
    for s in initial {
        if !(s.x.is_finite() && s.v.is_finite()) {
            return Err(DynamicsError::NonFinite(s.id));
        }
        if s.v.norm() > v0 * (1.0 + SPEED_SLACK) {
            return Err(DynamicsError::SpeedBound { speed: s.v.norm(), v0 });
        }
    }
    let mut engine = Engine::new(initial, tau, r, v0);
    engine.run(kernel, rng)?;
    Ok((engine.trajectories, engine.log))
}

#[derive(Debug, Clone, Copy)]
struct PairSlot {
    a: usize,
    b: usize,
    in_contact: bool,
    version: u32,
}

/// Heap entry; ordered by time, then by pair so equal times resolve
/// lexicographically.
#[derive(Debug, Clone, Copy)]
struct Boundary {
    t: f64,
    pair: (usize, usize),
    slot: usize,
    version: u32,
}

impl PartialEq for Boundary {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Boundary {}
impl PartialOrd for Boundary {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Boundary {
    fn cmp(&self, other: &Self) -> Ordering {
        self.t.total_cmp(&other.t).then(self.pair.cmp(&other.pair)).then(self.version.cmp(&other.version))
    }
}

struct Engine {
    tau: f64,
    contact: f64,
    v0: f64,
    /// Current state, with `x` taken at `t_ref[k]`.
    states: Vec<ParticleState>,
    t_ref: Vec<f64>,
    slots: Vec<PairSlot>,
    slots_of: Vec<Vec<usize>>,
    heap: BinaryHeap<Reverse<Boundary>>,
    active: BTreeSet<usize>,
    trajectories: Vec<Trajectory>,
    log: EventLog,
}

impl Engine {
    fn new(initial: &[ParticleState], tau: f64, r: f64, v0: f64) -> Self {
        let contact = 2.0 * r;
        let positions: Vec<Vector> = initial.iter().map(|s| s.x).collect();
        // No pair further apart than this at t = 0 can ever touch.
        let reach = contact + 2.0 * v0 * tau;
        let mut slots = Vec::new();
        let mut slots_of = vec![Vec::new(); initial.len()];
        if !initial.is_empty() {
            let grid = SpatialGrid::new(&positions, reach);
            let mut pairs: Vec<(usize, usize)> = grid
                .candidate_pairs()
                .into_iter()
                .filter(|&(a, b)| positions[a].distance(&positions[b]) <= reach)
                .collect();
            pairs.sort_by_key(|&(a, b)| id_pair(initial[a].id, initial[b].id));
            for (a, b) in pairs {
                slots_of[a].push(slots.len());
                slots_of[b].push(slots.len());
                slots.push(PairSlot { a, b, in_contact: false, version: 0 });
            }
        }
        Engine {
            tau,
            contact,
            v0,
            states: initial.to_vec(),
            t_ref: vec![0.0; initial.len()],
            slots,
            slots_of,
            heap: BinaryHeap::new(),
            active: BTreeSet::new(),
            trajectories: free_flight(initial, tau),
            log: Vec::new(),
        }
    }

    fn pair_ids(&self, slot: usize) -> (usize, usize) {
        let s = &self.slots[slot];
        id_pair(self.states[s.a].id, self.states[s.b].id)
    }

    fn state_at(&self, k: usize, t: f64) -> ParticleState {
        let s = self.states[k];
        ParticleState { x: s.x.add_scaled(&s.v, t - self.t_ref[k]), ..s }
    }

    fn relative(&self, slot: usize, now: f64) -> RelativeMotion {
        let s = &self.slots[slot];
        let (ya, yb) = (self.state_at(s.a, now), self.state_at(s.b, now));
        RelativeMotion { start: now, end: self.tau, dx: ya.x - yb.x, dv: ya.v - yb.v }
    }

    /// Next boundary time of `slot` given its current flag and linear motion.
    fn next_boundary(&self, slot: usize, now: f64) -> f64 {
        let rel = self.relative(slot, now);
        let roots = rel.contact_roots(self.contact);
        if self.slots[slot].in_contact {
            match roots {
                Some((_, hi)) => now + hi.max(0.0),
                None => now,
            }
        } else {
            match roots {
                Some((lo, hi)) if hi > TIE_EPS => now + lo.max(0.0),
                _ => f64::INFINITY,
            }
        }
    }

    fn schedule(&mut self, slot: usize, t: f64) {
        self.slots[slot].version += 1;
        if t <= self.tau {
            let b = Boundary { t, pair: self.pair_ids(slot), slot, version: self.slots[slot].version };
            self.heap.push(Reverse(b));
        }
    }

    fn peek_boundary(&mut self) -> Option<Boundary> {
        while let Some(Reverse(b)) = self.heap.peek().copied() {
            if b.version == self.slots[b.slot].version {
                return Some(b);
            }
            self.heap.pop();
        }
        None
    }

    fn run(&mut self, kernel: Option<&dyn JumpKernel>, rng: &mut (impl Rng + ?Sized)) -> Result<(), DynamicsError> {
        for slot in 0..self.slots.len() {
            let rel = self.relative(slot, 0.0);
            if rel.dx.norm_sq() <= self.contact * self.contact {
                self.slots[slot].in_contact = true;
                self.active.insert(slot);
                let pair = self.pair_ids(slot);
                self.log.push(contact_event(0.0, EventKind::ContactStart, pair));
            }
            let t = self.next_boundary(slot, 0.0);
            self.schedule(slot, t);
        }

        let rate_max = kernel.map_or(0.0, |k| k.rate_max());
        let mut now = 0.0;
        loop {
            let boundary = self.peek_boundary();
            let horizon = boundary.map_or(self.tau, |b| b.t.min(self.tau));
            if let Some(k) = kernel.filter(|_| rate_max > 0.0 && !self.active.is_empty()) {
                let slots: Vec<usize> = self.active.iter().copied().collect();
                let active: Vec<ActivePair> =
                    slots.iter().map(|&s| ActivePair { pair: self.pair_ids(s), rate_max }).collect();
                let rate = |index: usize, t: f64| {
                    let s = &self.slots[slots[index]];
                    k.rate(&self.state_at(s.a, t), &self.state_at(s.b, t))
                };
                if let Some(jump) = next_jump_candidate(now, horizon, &active, rate, rng)? {
                    now = jump.t;
                    self.apply_jump(slots[jump.index], now, k, rng)?;
                    continue;
                }
            }
            let Some(b) = boundary else { break };
            if b.t > self.tau {
                break;
            }
            self.heap.pop();
            now = b.t;
            self.toggle_contact(b.slot, now);
        }
        Ok(())
    }

    fn toggle_contact(&mut self, slot: usize, now: f64) {
        let entering = !self.slots[slot].in_contact;
        self.slots[slot].in_contact = entering;
        let pair = self.pair_ids(slot);
        let next = if entering {
            self.active.insert(slot);
            self.log.push(contact_event(now, EventKind::ContactStart, pair));
            self.next_boundary(slot, now)
        } else {
            self.active.remove(&slot);
            self.log.push(contact_event(now, EventKind::ContactEnd, pair));
            // receding under linear motion; only a velocity change can bring it back
            f64::INFINITY
        };
        self.schedule(slot, next);
    }

    fn apply_jump(
        &mut self,
        slot: usize,
        now: f64,
        kernel: &dyn JumpKernel,
        rng: &mut (impl Rng + ?Sized),
    ) -> Result<(), DynamicsError> {
        let PairSlot { a, b, .. } = self.slots[slot];
        let (ya, yb) = (self.state_at(a, now), self.state_at(b, now));
        let mut rng_dyn = RngAdapter(rng);
        let ((na, va), (nb, vb)) = kernel.sample(&ya, &yb, &mut rng_dyn);
        for (k, y, new_a, new_v) in [(a, ya, na, va), (b, yb, nb, vb)] {
            if !new_v.is_finite() || !y.x.is_finite() {
                return Err(DynamicsError::NonFinite(y.id));
            }
            if new_v.norm() > self.v0 * (1.0 + SPEED_SLACK) {
                return Err(DynamicsError::SpeedBound { speed: new_v.norm(), v0: self.v0 });
            }
            self.states[k] = ParticleState { x: y.x, v: new_v, a: new_a, ..y };
            self.t_ref[k] = now;
            let rec = TrajectoryRecord { t: now, x: y.x, v: new_v, a: new_a };
            let records = &mut self.trajectories[k].records;
            match records.last_mut() {
                Some(last) if last.t == now => *last = rec,
                _ => records.push(rec),
            }
        }
        let (pair, types, vels) =
            if ya.id < yb.id { ((ya.id, yb.id), (na, nb), (va, vb)) } else { ((yb.id, ya.id), (nb, na), (vb, va)) };
        self.log.push(Event { t: now, kind: EventKind::Jump, pair, a: Some(types), v: Some(vels) });

        let mut touched: Vec<usize> = self.slots_of[a].iter().chain(&self.slots_of[b]).copied().collect();
        touched.sort_unstable();
        touched.dedup();
        for s in touched {
            let t = self.next_boundary(s, now);
            self.schedule(s, t);
        }
        Ok(())
    }
}

fn id_pair(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

fn contact_event(t: f64, kind: EventKind, pair: (usize, usize)) -> Event {
    Event { t, kind, pair, a: None, v: None }
}

/// Lets a generic `Rng` be passed where the kernel expects `dyn RngCore`.
struct RngAdapter<'a, R: ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
