//! Uniform cell grid for pair pruning.
//!
//! Points are hashed into cubic cells of side `cell`. Any two points within
//! distance `cell` of each other land in the same or adjacent cells, so
//! scanning the `3^d` neighbourhood finds every such pair.

use std::collections::HashMap;

use crate::geometry::{Vector, MAX_DIM};

type CellKey = [i64; MAX_DIM];

pub struct SpatialGrid {
    dim: usize,
    cells: HashMap<CellKey, Vec<usize>>,
    keys: Vec<CellKey>,
}

impl SpatialGrid {
    pub fn new(points: &[Vector], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        let dim = points.first().map_or(1, Vector::dim);
        let mut cells: HashMap<CellKey, Vec<usize>> = HashMap::new();
        let keys: Vec<CellKey> = points
            .iter()
            .enumerate()
            .map(|(idx, p)| {
                let key = key_of(p, cell);
                cells.entry(key).or_default().push(idx);
                key
            })
            .collect();
        SpatialGrid { dim, cells, keys }
    }

    /// Indices in the cells around point `idx` (including `idx` itself).
    pub fn for_each_near(&self, idx: usize, mut f: impl FnMut(usize)) {
        let base = self.keys[idx];
        let n_offsets = 3usize.pow(self.dim as u32);
        for code in 0..n_offsets {
            let mut key = base;
            let mut c = code;
            for k in key.iter_mut().take(self.dim) {
                *k += (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(members) = self.cells.get(&key) {
                members.iter().copied().for_each(&mut f);
            }
        }
    }

    /// All pairs `(a, b)`, `a < b`, sharing or neighbouring a cell, sorted.
    pub fn candidate_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.keys.len() {
            self.for_each_near(a, |b| {
                if a < b {
                    out.push((a, b));
                }
            });
        }
        out.sort_unstable();
        out
    }
}

fn key_of(p: &Vector, cell: f64) -> CellKey {
    let mut key = [0i64; MAX_DIM];
    for (k, c) in key.iter_mut().zip(p.as_slice()) {
        *k = (c / cell).floor() as i64;
    }
    key
}
