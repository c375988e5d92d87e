//! Tree of subclusters.
//!
//! Starting from one-particle subclusters (or from the initial subclusters
//! when some particles already touch at `t = 0`), the maximal subclusters are
//! merged one pair at a time, always at the earliest moment two particles from
//! different maximal subclusters begin to interact. With `M` leaves the
//! process takes `M - 1` steps and records `(t_w, i_w, j_w)` for every merge.
//!
//! Because every cross pair first touches at its own fixed time `s_ij`, the
//! induction picks edges in increasing `s_ij` order and skips edges inside a
//! subcluster; the merge times are the `s_ij` of the edges that join two
//! distinct subclusters.

use std::collections::HashMap;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use petgraph::unionfind::UnionFind;

use crate::clustering::{build_interaction_graph, initial_subclusters_of, Edge};
use crate::combinatorics::TreeShape;
use crate::dynamics::Trajectory;
use crate::geometry::{Vector, TIE_EPS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("particle set is not a single cluster: no merge possible after step {step} ({remaining} maximal subclusters left)")]
    NotACluster { step: usize, remaining: usize },
    #[error("particles {0} and {1} already interact at t = 0; use the initial-subcluster tree")]
    InitialContact(usize, usize),
    #[error("empty particle set")]
    Empty,
    #[error("particle {0} is not a leaf of this tree")]
    NotALeaf(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum NodeRef {
    Leaf(usize),
    Internal(usize),
}

/// One merge: at time `t` particle `i` (in the left child) first touches
/// particle `j` (in the right child).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub t: f64,
    pub i: usize,
    pub j: usize,
    pub left: NodeRef,
    pub right: NodeRef,
}

/// Full binary merge tree. Leaves are sorted by smallest member id; merges
/// are listed in the order they happen, so the last one is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTree {
    pub leaves: Vec<Vec<usize>>,
    pub merges: Vec<Merge>,
}

impl ClusterTree {
    pub fn root(&self) -> NodeRef {
        match self.merges.len() {
            0 => NodeRef::Leaf(0),
            m => NodeRef::Internal(m - 1),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.t).collect()
    }

    /// Particle ids below `node`, ascending.
    pub fn members(&self, node: NodeRef) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_members(node, &mut out);
        out.sort_unstable();
        out
    }

    fn collect_members(&self, node: NodeRef, out: &mut Vec<usize>) {
        match node {
            NodeRef::Leaf(k) => out.extend(&self.leaves[k]),
            NodeRef::Internal(w) => {
                self.collect_members(self.merges[w].left, out);
                self.collect_members(self.merges[w].right, out);
            }
        }
    }

    pub fn leaf_of(&self, particle: usize) -> Option<usize> {
        self.leaves.iter().position(|l| l.contains(&particle))
    }

    pub fn shape(&self) -> TreeShape {
        self.shape_of(self.root())
    }

    fn shape_of(&self, node: NodeRef) -> TreeShape {
        match node {
            NodeRef::Leaf(_) => TreeShape::Leaf,
            NodeRef::Internal(w) => {
                let m = &self.merges[w];
                TreeShape::join(self.shape_of(m.left), self.shape_of(m.right))
            }
        }
    }

    /// Nested JSON: leaves as `{"leaf": [ids]}`, merges as
    /// `{"t", "i", "j", "left", "right"}`.
    pub fn to_json(&self) -> Value {
        self.node_json(self.root())
    }

    fn node_json(&self, node: NodeRef) -> Value {
        match node {
            NodeRef::Leaf(k) => json!({ "leaf": self.leaves[k] }),
            NodeRef::Internal(w) => {
                let m = &self.merges[w];
                json!({
                    "t": m.t,
                    "i": m.i,
                    "j": m.j,
                    "left": self.node_json(m.left),
                    "right": self.node_json(m.right),
                })
            }
        }
    }

    /// Compact text form, e.g. `((1,2):0.5,3):0.8`; a multi-particle leaf is
    /// written `{1,2}`.
    pub fn newick(&self) -> String {
        let mut s = String::new();
        self.write_newick(self.root(), &mut s);
        s
    }

    fn write_newick(&self, node: NodeRef, s: &mut String) {
        match node {
            NodeRef::Leaf(k) => {
                let ids: Vec<String> = self.leaves[k].iter().map(ToString::to_string).collect();
                if ids.len() == 1 {
                    s.push_str(&ids[0]);
                } else {
                    s.push('{');
                    s.push_str(&ids.join(","));
                    s.push('}');
                }
            }
            NodeRef::Internal(w) => {
                let m = &self.merges[w];
                s.push('(');
                self.write_newick(m.left, s);
                s.push(',');
                self.write_newick(m.right, s);
                s.push_str(&format!("):{}", m.t));
            }
        }
    }
}

/// Merge tree of a cluster whose particles are pairwise further than `2r`
/// apart at `t = 0`.
pub fn build_cluster_tree(trajectories: &[Trajectory], r: f64, tau: f64) -> Result<ClusterTree, TreeError> {
    if trajectories.is_empty() {
        return Err(TreeError::Empty);
    }
    for (a, ta) in trajectories.iter().enumerate() {
        for tb in &trajectories[a + 1..] {
            if ta.initial_position().distance(&tb.initial_position()) <= 2.0 * r {
                return Err(TreeError::InitialContact(ta.id.min(tb.id), ta.id.max(tb.id)));
            }
        }
    }
    let leaves = trajectories.iter().map(|t| vec![t.id]).collect();
    let graph = build_interaction_graph(trajectories, r, tau);
    merge_leaves(leaves, &graph.edges)
}

/// Merge tree whose leaves are the initial subclusters: components of the
/// `t = 0` graph with pairs within `2r`.
pub fn build_cluster_tree_with_initial(
    trajectories: &[Trajectory],
    r: f64,
    tau: f64,
) -> Result<ClusterTree, TreeError> {
    if trajectories.is_empty() {
        return Err(TreeError::Empty);
    }
    let ids: Vec<usize> = trajectories.iter().map(|t| t.id).collect();
    let starts: Vec<Vector> = trajectories.iter().map(Trajectory::initial_position).collect();
    let leaves = initial_subclusters_of(&ids, &starts, 2.0 * r).blocks();
    let graph = build_interaction_graph(trajectories, r, tau);
    merge_leaves(leaves, &graph.edges)
}

/// Runs the merge induction over `leaves` using the first-contact edges.
pub fn merge_leaves(mut leaves: Vec<Vec<usize>>, edges: &[Edge]) -> Result<ClusterTree, TreeError> {
    for l in &mut leaves {
        l.sort_unstable();
    }
    leaves.sort_unstable_by_key(|l| l[0]);
    let leaf_of: HashMap<usize, usize> =
        leaves.iter().enumerate().flat_map(|(k, l)| l.iter().map(move |&id| (id, k))).collect();

    let mut sorted: Vec<&Edge> =
        edges.iter().filter(|e| leaf_of.contains_key(&e.i) && leaf_of.contains_key(&e.j)).collect();
    sorted.sort_by(|a, b| a.s.total_cmp(&b.s).then((a.i, a.j).cmp(&(b.i, b.j))));

    let m = leaves.len();
    let mut uf = UnionFind::new(m);
    // per union-find root: current maximal subcluster node and its smallest id
    let mut node: Vec<NodeRef> = (0..m).map(NodeRef::Leaf).collect();
    let mut min_id: Vec<usize> = leaves.iter().map(|l| l[0]).collect();
    let mut used = vec![false; sorted.len()];
    let mut merges = Vec::with_capacity(m.saturating_sub(1));
    let mut cursor = 0;

    while merges.len() + 1 < m {
        let crossing = |uf: &UnionFind<usize>, e: &Edge| !uf.equiv(leaf_of[&e.i], leaf_of[&e.j]);
        while cursor < sorted.len() && (used[cursor] || !crossing(&uf, sorted[cursor])) {
            cursor += 1;
        }
        if cursor == sorted.len() {
            return Err(TreeError::NotACluster { step: merges.len(), remaining: m - merges.len() });
        }
        // near-simultaneous contacts resolve to the smallest pair
        let t_first = sorted[cursor].s;
        let mut pick = cursor;
        for k in cursor + 1..sorted.len() {
            if sorted[k].s > t_first + TIE_EPS {
                break;
            }
            if !used[k] && crossing(&uf, sorted[k]) && (sorted[k].i, sorted[k].j) < (sorted[pick].i, sorted[pick].j) {
                pick = k;
            }
        }
        used[pick] = true;
        let e = sorted[pick];
        let (ra, rb) = (uf.find_mut(leaf_of[&e.i]), uf.find_mut(leaf_of[&e.j]));
        let (left_root, right_root, i, j) =
            if min_id[ra] < min_id[rb] { (ra, rb, e.i, e.j) } else { (rb, ra, e.j, e.i) };
        merges.push(Merge { t: e.s, i, j, left: node[left_root], right: node[right_root] });
        let new_min = min_id[ra].min(min_id[rb]);
        uf.union(ra, rb);
        let root = uf.find_mut(ra);
        node[root] = NodeRef::Internal(merges.len() - 1);
        min_id[root] = new_min;
    }
    Ok(ClusterTree { leaves, merges })
}

/// Tree shape with the merge order and interacting pairs, times removed.
///
/// Internal vertices are numbered in pre-order from the root (left child
/// first); `order` lists them by merge time.
#[derive(Debug, Clone, PartialEq)]
pub struct CombStructure {
    pub shape: TreeShape,
    /// Children of each internal vertex; `None` marks a leaf child.
    pub children: Vec<(Option<usize>, Option<usize>)>,
    pub order: Vec<usize>,
    /// Interacting pair `(i_w, j_w)` per internal vertex.
    pub designated: Vec<(usize, usize)>,
    /// Leaf (index into the tree's leaves) holding the conditioned particle.
    pub specified_leaf: usize,
}

impl CombStructure {
    /// True when every vertex is merged after the internal vertices below it.
    pub fn is_linear_extension(&self) -> bool {
        let n = self.children.len();
        if self.order.len() != n {
            return false;
        }
        let mut rank = vec![usize::MAX; n];
        for (pos, &w) in self.order.iter().enumerate() {
            if w >= n || rank[w] != usize::MAX {
                return false;
            }
            rank[w] = pos;
        }
        self.children.iter().enumerate().all(|(w, &(a, b))| [a, b].into_iter().flatten().all(|c| rank[c] < rank[w]))
    }

    /// `i(w)`: the member of the left subcluster taking part in the merge.
    pub fn i_of(&self, w: usize) -> usize {
        self.designated[w].0
    }
}

pub fn extract_comb_structure(tree: &ClusterTree, specified: usize) -> Result<CombStructure, TreeError> {
    let specified_leaf = tree.leaf_of(specified).ok_or(TreeError::NotALeaf(specified))?;
    let mut preorder = Vec::with_capacity(tree.merges.len());
    let mut stack = vec![tree.root()];
    while let Some(n) = stack.pop() {
        if let NodeRef::Internal(w) = n {
            preorder.push(w);
            stack.push(tree.merges[w].right);
            stack.push(tree.merges[w].left);
        }
    }
    let mut index = vec![0; tree.merges.len()];
    for (k, &w) in preorder.iter().enumerate() {
        index[w] = k;
    }
    let as_index = |n: NodeRef| match n {
        NodeRef::Internal(w) => Some(index[w]),
        NodeRef::Leaf(_) => None,
    };
    let children = preorder.iter().map(|&w| (as_index(tree.merges[w].left), as_index(tree.merges[w].right))).collect();
    let designated = preorder.iter().map(|&w| (tree.merges[w].i, tree.merges[w].j)).collect();
    let order = (0..tree.merges.len()).map(|w| index[w]).collect();
    Ok(CombStructure { shape: tree.shape(), children, order, designated, specified_leaf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ParticleState;

    fn traj(id: usize, x: &[f64], v: &[f64], tau: f64) -> Trajectory {
        let s = ParticleState { id, x: Vector::from_slice(x).unwrap(), v: Vector::from_slice(v).unwrap(), a: 1 };
        Trajectory::free_flight(&s, tau)
    }

    #[test]
    fn two_particles_one_merge() {
        let ts = [traj(1, &[0.0, 0.0], &[1.0, 0.0], 10.0), traj(2, &[10.0, 0.0], &[-1.0, 0.0], 10.0)];
        let tree = build_cluster_tree(&ts, 1.0, 10.0).unwrap();
        assert_eq!(tree.merges.len(), 1);
        assert!((tree.merges[0].t - 4.0).abs() < 1e-12);
        assert_eq!((tree.merges[0].i, tree.merges[0].j), (1, 2));
        assert_eq!(tree.newick(), format!("(1,2):{}", tree.merges[0].t));
    }

    #[test]
    fn three_particle_left_comb() {
        // 1 and 2 close in first, 3 later reaches 1; 2 and 3 touch last
        let r = 0.5;
        let ts = [
            traj(1, &[0.0, 0.0], &[0.0, 0.0], 10.0),
            traj(2, &[3.0, 0.0], &[-1.0, 0.0], 10.0),
            traj(3, &[0.0, 6.0], &[0.0, -1.0], 10.0),
        ];
        let tree = build_cluster_tree(&ts, r, 10.0).unwrap();
        let pairs: Vec<(usize, usize)> = tree.merges.iter().map(|m| (m.i, m.j)).collect();
        assert_eq!(pairs, vec![(1, 2), (1, 3)]);
        assert!((tree.merges[0].t - 2.0).abs() < 1e-12);
        assert!((tree.merges[1].t - 5.0).abs() < 1e-12);
        assert_eq!(tree.shape(), TreeShape::left_comb(3));
        let comb = extract_comb_structure(&tree, 3).unwrap();
        assert!(comb.is_linear_extension());
        assert_eq!(comb.designated[0], (1, 3));
        assert_eq!(comb.i_of(0), 1);
        assert!(matches!(extract_comb_structure(&tree, 7), Err(TreeError::NotALeaf(7))));
    }

    #[test]
    fn split_set_is_not_a_cluster() {
        let ts = [traj(0, &[0.0], &[0.0], 1.0), traj(1, &[50.0], &[0.0], 1.0)];
        assert_eq!(build_cluster_tree(&ts, 0.5, 1.0), Err(TreeError::NotACluster { step: 0, remaining: 2 }));
    }

    #[test]
    fn initial_contact_is_rejected_then_handled() {
        let ts = [traj(0, &[0.0], &[0.0], 10.0), traj(1, &[0.5], &[0.0], 10.0), traj(2, &[6.0], &[-1.0], 10.0)];
        assert_eq!(build_cluster_tree(&ts, 0.5, 10.0), Err(TreeError::InitialContact(0, 1)));
        let tree = build_cluster_tree_with_initial(&ts, 0.5, 10.0).unwrap();
        assert_eq!(tree.leaves, vec![vec![0, 1], vec![2]]);
        assert_eq!(tree.merges.len(), 1);
        assert!((tree.merges[0].t - 4.5).abs() < 1e-12);
        assert_eq!((tree.merges[0].i, tree.merges[0].j), (1, 2));
        assert_eq!(tree.newick(), "({0,1},2):4.5");
    }

    #[test]
    fn fully_connected_start_is_a_single_leaf() {
        let ts = [traj(0, &[0.0], &[0.0], 1.0), traj(1, &[0.5], &[0.0], 1.0)];
        let tree = build_cluster_tree_with_initial(&ts, 0.5, 1.0).unwrap();
        assert_eq!(tree.leaves.len(), 1);
        assert!(tree.merges.is_empty());
        assert_eq!(tree.root(), NodeRef::Leaf(0));
    }

    #[test]
    fn ties_pick_smallest_pair() {
        let edges = [Edge { i: 2, j: 3, s: 1.0 }, Edge { i: 0, j: 1, s: 1.0 + 0.5e-12 }, Edge { i: 1, j: 2, s: 2.0 }];
        let tree = merge_leaves(vec![vec![0], vec![1], vec![2], vec![3]], &edges).unwrap();
        let pairs: Vec<(usize, usize)> = tree.merges.iter().map(|m| (m.i, m.j)).collect();
        assert_eq!(pairs, vec![(0, 1), (2, 3), (1, 2)]);
    }
}
