//! Independent reference implementations used by the integration tests.
//!
//! None of these call into the library's solvers: contact times come from
//! sampling the separation, components from a plain BFS, merge trees from
//! recomputing every cross contact after each merge, and linear extensions
//! from listing permutations.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use dynclust::combinatorics::TreeShape;
use dynclust::dynamics::{ParticleState, Trajectory};
use dynclust::geometry::{MotionSegment, Vector};
use rand::Rng;

pub fn vec_of(xs: &[f64]) -> Vector {
    Vector::from_slice(xs).unwrap()
}

pub fn random_vector<R: Rng>(rng: &mut R, d: usize, half_width: f64) -> Vector {
    let xs: Vec<f64> = (0..d).map(|_| rng.random_range(-half_width..half_width)).collect();
    vec_of(&xs)
}

pub fn state(id: usize, x: &[f64], v: &[f64]) -> ParticleState {
    ParticleState { id, x: vec_of(x), v: vec_of(v), a: 1 }
}

fn sep_sq(a: &MotionSegment, b: &MotionSegment, t: f64) -> f64 {
    let pa = a.position_at(t);
    let pb = b.position_at(t);
    pa.as_slice().iter().zip(pb.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// First time in the common window at which the separation is at most
/// `threshold`, by golden-section search for the closest approach, a fixed
/// grid of steps up to it, and bisection inside the first bracketing step.
pub fn contact_time_oracle(a: &MotionSegment, b: &MotionSegment, threshold: f64, steps: usize) -> Option<f64> {
    stepped_contact(a, b, threshold, |_| steps)
}

/// As [`contact_time_oracle`] with a fixed step length `h`.
pub fn contact_time_oracle_step(a: &MotionSegment, b: &MotionSegment, threshold: f64, h: f64) -> Option<f64> {
    stepped_contact(a, b, threshold, |span| (span / h).ceil().max(1.0) as usize)
}

fn stepped_contact(
    a: &MotionSegment,
    b: &MotionSegment,
    threshold: f64,
    steps_for: impl Fn(f64) -> usize,
) -> Option<f64> {
    let (start, end) = (a.t0.max(b.t0), a.t1.min(b.t1));
    if start > end {
        return None;
    }
    let th2 = threshold * threshold;
    let f = |t: f64| sep_sq(a, b, t) - th2;
    if f(start) <= 0.0 {
        return Some(start);
    }
    // closest approach; the squared separation is convex in t
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (start, end);
    for _ in 0..200 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t_min = 0.5 * (lo + hi);
    if f(t_min) > 0.0 {
        return None;
    }
    let steps = steps_for(t_min - start);
    let h = (t_min - start) / steps as f64;
    let mut prev = start;
    for k in 1..=steps {
        let t = if k == steps { t_min } else { start + h * k as f64 };
        if f(t) <= 0.0 {
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        prev = t;
    }
    Some(t_min)
}

/// Minimum separation by dense sampling and golden-section refinement.
pub fn min_distance_oracle(a: &MotionSegment, b: &MotionSegment) -> f64 {
    let (start, end) = (a.t0.max(b.t0), a.t1.min(b.t1));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (start, end);
    for _ in 0..200 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if sep_sq(a, b, m1) <= sep_sq(a, b, m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    sep_sq(a, b, 0.5 * (lo + hi)).sqrt()
}

/// First contact of two piecewise-linear trajectories using the oracle on
/// every pair of overlapping pieces.
pub fn trajectory_contact_oracle(ti: &Trajectory, tj: &Trajectory, r: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for a in ti.segments() {
        for b in tj.segments() {
            if a.t0.max(b.t0) > a.t1.min(b.t1) {
                continue;
            }
            if let Some(t) = contact_time_oracle(&a, &b, 2.0 * r, 64) {
                best = Some(best.map_or(t, |x: f64| x.min(t)));
            }
        }
    }
    best
}

/// Components by breadth-first search over an adjacency list built from
/// every pair. Returned as sorted member lists ordered by smallest member.
pub fn bfs_components(ids: &[usize], edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj: BTreeMap<usize, Vec<usize>> = ids.iter().map(|&i| (i, Vec::new())).collect();
    for &(i, j) in edges {
        adj.get_mut(&i).unwrap().push(j);
        adj.get_mut(&j).unwrap().push(i);
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &s in adj.keys() {
        if !seen.insert(s) {
            continue;
        }
        let mut comp = vec![s];
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &w in &adj[&u] {
                if seen.insert(w) {
                    comp.push(w);
                    q.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out.sort();
    out
}

/// `(t, members of one side, members of the other)` per merge.
pub type MergeStep = (f64, Vec<usize>, Vec<usize>);

/// Merge sequence by brute force: after
/// each merge, recompute the earliest contact between every two maximal
/// subclusters from the trajectories and merge the earliest pair.
pub fn resimulate_merges(trajs: &[Trajectory], r: f64, tau: f64) -> Option<Vec<MergeStep>> {
    let by_id: BTreeMap<usize, &Trajectory> = trajs.iter().map(|t| (t.id, t)).collect();
    let mut groups: Vec<Vec<usize>> = trajs.iter().map(|t| vec![t.id]).collect();
    groups.sort();
    let mut out = Vec::new();
    while groups.len() > 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                for &i in &groups[a] {
                    for &j in &groups[b] {
                        let Some(t) = trajectory_contact_oracle(by_id[&i], by_id[&j], r) else { continue };
                        if t > tau {
                            continue;
                        }
                        let pair = (i.min(j), i.max(j));
                        let better = match best {
                            None => true,
                            Some((bt, bp, _, _)) => t < bt - 1e-9 || ((t - bt).abs() <= 1e-9 && pair < bp),
                        };
                        if better {
                            best = Some((t, pair, a, b));
                        }
                    }
                }
            }
        }
        let (t, _, a, b) = best?;
        let right = groups.remove(b);
        let left = groups.remove(a);
        let mut merged = left.clone();
        merged.extend(&right);
        merged.sort_unstable();
        out.push((t, left, right));
        groups.push(merged);
        groups.sort();
    }
    Some(out)
}

/// Internal vertices of `shape` as `(children indices)` in post-order.
fn internal_children(shape: &TreeShape) -> Vec<Vec<usize>> {
    fn walk(s: &TreeShape, out: &mut Vec<Vec<usize>>) -> Option<usize> {
        let (l, r) = s.children()?;
        let a = walk(l, out);
        let b = walk(r, out);
        out.push([a, b].into_iter().flatten().collect());
        Some(out.len() - 1)
    }
    let mut out = Vec::new();
    walk(shape, &mut out);
    out
}

/// Orderings of the internal vertices in which every vertex comes after its
/// internal children, counted over all permutations.
pub fn count_linear_extensions_brute(shape: &TreeShape) -> u64 {
    let kids = internal_children(shape);
    let n = kids.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut count = 0;
    loop {
        let mut pos = vec![0; n];
        for (p, &v) in perm.iter().enumerate() {
            pos[v] = p;
        }
        if kids.iter().enumerate().all(|(v, cs)| cs.iter().all(|&c| pos[c] < pos[v])) {
            count += 1;
        }
        if !next_permutation(&mut perm) {
            return count;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// All unordered binary shapes with `n` leaves, generated by splitting `n`
/// into every `k + (n - k)` and deduplicating through canonical strings.
pub fn all_shapes_brute(n: usize) -> Vec<String> {
    fn build(n: usize) -> BTreeSet<String> {
        if n == 1 {
            return BTreeSet::from(["*".to_string()]);
        }
        let mut out = BTreeSet::new();
        for k in 1..n {
            for a in build(k) {
                for b in build(n - k) {
                    let (x, y) = if a <= b { (&a, &b) } else { (&b, &a) };
                    out.insert(format!("({x},{y})"));
                }
            }
        }
        out
    }
    build(n).into_iter().collect()
}

/// Exact binomial coefficient in u128.
pub fn choose(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}
