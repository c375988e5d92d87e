//! Interaction graph and dynamical clusters.
//!
//! Vertices are particles; an edge joins two particles that come within `2r`
//! of each other at some time in `[0, tau]`. Each edge carries the first
//! contact time `s_ij`, which the merge-tree construction consumes.

use std::collections::{BTreeMap, HashMap, VecDeque};

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::dynamics::{first_contact, ParticleState, Trajectory};
use crate::geometry::Vector;
use crate::grid::SpatialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    /// First contact time.
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionGraph {
    /// Particle ids, ascending.
    pub vertices: Vec<usize>,
    /// Edges with `i < j`, sorted by `(i, j)`.
    pub edges: Vec<Edge>,
}

/// Largest distance two initial positions can have if the particles touch
/// within `tau`.
fn reach(trajectories: &[Trajectory], r: f64, tau: f64) -> f64 {
    let vmax = trajectories.iter().map(Trajectory::max_speed).fold(0.0, f64::max);
    2.0 * r + 2.0 * vmax * tau
}

fn edge_for(ti: &Trajectory, tj: &Trajectory, r: f64, tau: f64) -> Option<Edge> {
    let s = first_contact(ti, tj, r).filter(|&s| s <= tau)?;
    let (i, j) = (ti.id.min(tj.id), ti.id.max(tj.id));
    Some(Edge { i, j, s })
}

fn finish_graph(trajectories: &[Trajectory], mut edges: Vec<Edge>) -> InteractionGraph {
    let mut vertices: Vec<usize> = trajectories.iter().map(|t| t.id).collect();
    vertices.sort_unstable();
    edges.sort_by_key(|e| (e.i, e.j));
    InteractionGraph { vertices, edges }
}

/// Interaction graph on `[0, tau]`, with pairs pruned by a uniform grid of cell
/// size `2r + 2 v_max tau` over the initial positions.
pub fn build_interaction_graph(trajectories: &[Trajectory], r: f64, tau: f64) -> InteractionGraph {
    if trajectories.is_empty() {
        return finish_graph(trajectories, Vec::new());
    }
    let cell = reach(trajectories, r, tau);
    let starts: Vec<Vector> = trajectories.iter().map(Trajectory::initial_position).collect();
    let grid = SpatialGrid::new(&starts, cell);
    let edges = grid
        .candidate_pairs()
        .into_iter()
        .filter(|&(a, b)| starts[a].distance(&starts[b]) <= cell)
        .filter_map(|(a, b)| edge_for(&trajectories[a], &trajectories[b], r, tau))
        .collect();
    finish_graph(trajectories, edges)
}

/// Same graph, checking every pair.
pub fn build_interaction_graph_all_pairs(trajectories: &[Trajectory], r: f64, tau: f64) -> InteractionGraph {
    let mut edges = Vec::new();
    for (a, ta) in trajectories.iter().enumerate() {
        for tb in &trajectories[a + 1..] {
            edges.extend(edge_for(ta, tb, r, tau));
        }
    }
    finish_graph(trajectories, edges)
}

/// Assignment of particles to clusters. A cluster is named by its smallest
/// member id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterPartition {
    /// Particle id to cluster id.
    pub components: BTreeMap<usize, usize>,
}

impl ClusterPartition {
    pub fn cluster_of(&self, id: usize) -> Option<usize> {
        self.components.get(&id).copied()
    }

    pub fn sizes(&self) -> BTreeMap<usize, usize> {
        let mut sizes = BTreeMap::new();
        for &c in self.components.values() {
            *sizes.entry(c).or_insert(0) += 1;
        }
        sizes
    }

    /// Member lists ordered by cluster id, members ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut by_cluster: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&id, &c) in &self.components {
            by_cluster.entry(c).or_default().push(id);
        }
        by_cluster.into_values().collect()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

fn partition_from_pairs(ids: &[usize], pairs: impl IntoIterator<Item = (usize, usize)>) -> ClusterPartition {
    let index: HashMap<usize, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let mut uf = UnionFind::new(ids.len());
    for (i, j) in pairs {
        uf.union(index[&i], index[&j]);
    }
    let mut min_id = vec![usize::MAX; ids.len()];
    for (k, &id) in ids.iter().enumerate() {
        let root = uf.find_mut(k);
        min_id[root] = min_id[root].min(id);
    }
    let components = ids.iter().enumerate().map(|(k, &id)| (id, min_id[uf.find_mut(k)])).collect();
    ClusterPartition { components }
}

/// Dynamical clusters: connected components of the interaction graph.
pub fn connected_components(graph: &InteractionGraph) -> ClusterPartition {
    partition_from_pairs(&graph.vertices, graph.edges.iter().map(|e| (e.i, e.j)))
}

/// Members of the cluster containing particle `id`, found by breadth-first
/// search from that particle without building the whole graph.
pub fn cluster_containing(trajectories: &[Trajectory], r: f64, tau: f64, id: usize) -> Vec<usize> {
    let Some(start) = trajectories.iter().position(|t| t.id == id) else {
        return Vec::new();
    };
    let cell = reach(trajectories, r, tau);
    let starts: Vec<Vector> = trajectories.iter().map(Trajectory::initial_position).collect();
    let grid = SpatialGrid::new(&starts, cell);
    let mut seen = vec![false; trajectories.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut members = vec![id];
    while let Some(a) = queue.pop_front() {
        grid.for_each_near(a, |b| {
            if !seen[b]
                && starts[a].distance(&starts[b]) <= cell
                && edge_for(&trajectories[a], &trajectories[b], r, tau).is_some()
            {
                seen[b] = true;
                members.push(trajectories[b].id);
                queue.push_back(b);
            }
        });
    }
    members.sort_unstable();
    members
}

/// Components of the `t = 0` proximity graph (pairs within `threshold`,
/// normally `2r`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InitialSubclusters {
    pub partition: ClusterPartition,
}

impl InitialSubclusters {
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        self.partition.clusters()
    }

    pub fn all_singletons(&self) -> bool {
        self.partition.sizes().values().all(|&s| s == 1)
    }
}

pub fn initial_subclusters(states: &[ParticleState], threshold: f64) -> InitialSubclusters {
    let positions: Vec<Vector> = states.iter().map(|s| s.x).collect();
    let ids: Vec<usize> = states.iter().map(|s| s.id).collect();
    initial_subclusters_of(&ids, &positions, threshold)
}

pub(crate) fn initial_subclusters_of(ids: &[usize], positions: &[Vector], threshold: f64) -> InitialSubclusters {
    let mut sorted: Vec<usize> = ids.to_vec();
    sorted.sort_unstable();
    if positions.is_empty() {
        return InitialSubclusters { partition: partition_from_pairs(&sorted, []) };
    }
    let grid = SpatialGrid::new(positions, threshold);
    let pairs = grid
        .candidate_pairs()
        .into_iter()
        .filter(|&(a, b)| positions[a].distance(&positions[b]) <= threshold)
        .map(|(a, b)| (ids[a], ids[b]));
    InitialSubclusters { partition: partition_from_pairs(&sorted, pairs) }
}
