//! Exact counting on full binary merge trees.
//!
//! For a tree `T` with `N` leaves and `N - 1` internal vertices:
//!
//! * `B(T)` counts the total orders of the internal vertices in which every
//!   vertex comes after the vertices below it (linear extensions);
//! * `D(T)` is the product over internal vertices of `|s1| * |s2|`, the number
//!   of ways to pick the interacting pair from the two merging subclusters;
//! * `Q(T) = B(T) D(T)`.
//!
//! All counts are big integers and all ratios exact rationals.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

/// Largest leaf count for exhaustive shape enumeration.
pub const MAX_ENUMERATION_LEAVES: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CombinatoricsError {
    #[error("exhaustive enumeration is limited to N <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("{0}")]
    Domain(String),
}

/// Unordered full binary tree shape. Children are stored in canonical order
/// (smaller first under the derived ordering), so equal shapes compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TreeShape {
    Leaf,
    Node { leaves: usize, children: Box<(TreeShape, TreeShape)> },
}

impl TreeShape {
    pub fn leaf() -> Self {
        TreeShape::Leaf
    }

    pub fn join(a: TreeShape, b: TreeShape) -> Self {
        let leaves = a.leaves() + b.leaves();
        let children = if a <= b { (a, b) } else { (b, a) };
        TreeShape::Node { leaves, children: Box::new(children) }
    }

    /// `{1,2}, {1,2,3}, ...`: each merge adds a single particle.
    pub fn left_comb(n: usize) -> Self {
        assert!(n >= 1);
        (1..n).fold(TreeShape::Leaf, |acc, _| TreeShape::join(acc, TreeShape::Leaf))
    }

    /// Perfectly balanced tree with `2^levels` leaves.
    pub fn complete_binary(levels: u32) -> Self {
        (0..levels).fold(TreeShape::Leaf, |acc, _| TreeShape::join(acc.clone(), acc))
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeShape::Leaf => 1,
            TreeShape::Node { leaves, .. } => *leaves,
        }
    }

    pub fn internal_count(&self) -> usize {
        self.leaves() - 1
    }

    pub fn children(&self) -> Option<(&TreeShape, &TreeShape)> {
        match self {
            TreeShape::Leaf => None,
            TreeShape::Node { children, .. } => Some((&children.0, &children.1)),
        }
    }

    /// Visits internal vertices in post-order.
    pub fn for_each_internal(&self, f: &mut impl FnMut(&TreeShape, &TreeShape, &TreeShape)) {
        if let Some((a, b)) = self.children() {
            a.for_each_internal(f);
            b.for_each_internal(f);
            f(self, a, b);
        }
    }
}

impl fmt::Display for TreeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.children() {
            None => write!(f, "*"),
            Some((a, b)) => write!(f, "({a},{b})"),
        }
    }
}

pub fn factorial(n: usize) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * k)
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    // exact at every step: the running value is C(n - k + i, i)
    (1..=k).fold(BigUint::one(), |acc, i| acc * (n - k + i) / i)
}

/// Joint orders of two chains of lengths `k` and `l` built from equal numbers of
/// alternating consecutive blocks: `2 * sum_i C(k-1, i-1) C(l-1, i-1)` over
/// `i = 1..=min(k, l)`.
pub fn r_orderings(k: usize, l: usize) -> BigUint {
    assert!(k >= 1 && l >= 1, "chain lengths must be positive");
    let m = k.min(l);
    let sum = (1..=m).fold(BigUint::zero(), |acc, i| acc + binomial(k - 1, i - 1) * binomial(l - 1, i - 1));
    sum * 2u32
}

/// All order-preserving interleavings of two chains, `C(k + l, k)`.
pub fn interleavings(k: usize, l: usize) -> BigUint {
    binomial(k + l, k)
}

/// `B(T)` by the hook-length formula for forests:
/// `(N-1)! / prod_w (internal vertices in the subtree of w)`.
pub fn linear_extensions(shape: &TreeShape) -> BigUint {
    let mut hooks = BigUint::one();
    shape.for_each_internal(&mut |node, _, _| hooks *= node.internal_count());
    factorial(shape.internal_count()) / hooks
}

/// `D(T) = prod_w |left(w)| * |right(w)|`.
pub fn pair_factor(shape: &TreeShape) -> BigUint {
    let mut d = BigUint::one();
    shape.for_each_internal(&mut |_, a, b| d *= a.leaves() * b.leaves());
    d
}

pub fn q_value(shape: &TreeShape) -> BigUint {
    linear_extensions(shape) * pair_factor(shape)
}

/// `N * Q(T1) * Q(T2) * R(k, N - k)` for the root split into subtrees
/// `T1`, `T2` with `k` and `N - k` leaves.
pub fn q_recurrence_bound(shape: &TreeShape) -> Result<BigUint, CombinatoricsError> {
    let (a, b) = shape.children().ok_or_else(|| CombinatoricsError::Domain("recurrence needs N >= 2".into()))?;
    Ok(q_value(a) * q_value(b) * shape.leaves() * r_orderings(a.leaves(), b.leaves()))
}

/// The same recurrence unrolled down to the leaves, with `Q(leaf) = 1`.
pub fn q_recurrence_bound_unrolled(shape: &TreeShape) -> BigUint {
    match shape.children() {
        None => BigUint::one(),
        Some((a, b)) => {
            q_recurrence_bound_unrolled(a)
                * q_recurrence_bound_unrolled(b)
                * shape.leaves()
                * r_orderings(a.leaves(), b.leaves())
        }
    }
}

/// `r(k, n - k) = R(k, n - k) / C(n, k)`.
pub fn normalized_ratio(k: usize, n: usize) -> Result<BigRational, CombinatoricsError> {
    if k < 1 || k >= n {
        return Err(CombinatoricsError::Domain(format!("need 1 <= k <= n - 1, got k = {k}, n = {n}")));
    }
    Ok(BigRational::new(r_orderings(k, n - k).into(), binomial(n, k).into()))
}

/// `H(a) = -a ln a - (1 - a) ln(1 - a)`, with `H(0) = H(1) = 0`.
pub fn entropy(alpha: f64) -> Result<f64, CombinatoricsError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(CombinatoricsError::Domain(format!("entropy needs 0 <= alpha <= 1, got {alpha}")));
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.ln() };
    Ok(term(alpha) + term(1.0 - alpha))
}

/// Natural log of a big integer, accurate to double precision.
pub fn ln_big(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "ln of zero");
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_f64().unwrap_or(f64::MAX);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn ln_rational(x: &BigRational) -> f64 {
    let num = x.numer().to_biguint().expect("positive ratio");
    let den = x.denom().to_biguint().expect("positive ratio");
    ln_big(&num) - ln_big(&den)
}

/// Every unordered full binary shape with `n` leaves, sorted.
pub fn enumerate_shapes(n: usize) -> Result<Vec<TreeShape>, CombinatoricsError> {
    if n > MAX_ENUMERATION_LEAVES {
        return Err(CombinatoricsError::TooLarge { n, max: MAX_ENUMERATION_LEAVES });
    }
    if n == 0 {
        return Err(CombinatoricsError::Domain("a tree needs at least one leaf".into()));
    }
    let mut table: Vec<Vec<TreeShape>> = vec![Vec::new(), vec![TreeShape::Leaf]];
    for m in 2..=n {
        let mut shapes = Vec::new();
        for k in 1..=m / 2 {
            for (ia, a) in table[k].iter().enumerate() {
                for (ib, b) in table[m - k].iter().enumerate() {
                    if k == m - k && ib < ia {
                        continue;
                    }
                    shapes.push(TreeShape::join(a.clone(), b.clone()));
                }
            }
        }
        shapes.sort();
        table.push(shapes);
    }
    Ok(table.swap_remove(n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub n: usize,
    pub shapes: usize,
    /// `max_T (Q(T) / N!)^(1/N)`.
    pub max_root: f64,
    pub argmax: TreeShape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompleteBinaryRow {
    pub n: usize,
    pub q: BigUint,
    pub log2_q: f64,
    /// `c` with `Q = 2^(N log2 N + c N)`.
    pub envelope_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaScan {
    pub rows: Vec<ScanRow>,
    pub complete_binary: Vec<CompleteBinaryRow>,
}

/// Exact maxima of `(Q / N!)^(1/N)` over all shapes for `N = 1..=n_max`, plus
/// `Q` of the complete binary trees with 2, 4 and 8 leaves.
pub fn lemma_bound_scan(n_max: usize) -> Result<LemmaScan, CombinatoricsError> {
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let shapes = enumerate_shapes(n)?;
        let nf = factorial(n);
        let (ratio, argmax) = shapes
            .iter()
            .map(|s| (BigRational::new(q_value(s).into(), nf.clone().into()), s))
            .max_by(|a, b| a.0.cmp(&b.0))
            .expect("at least one shape");
        rows.push(ScanRow {
            n,
            shapes: shapes.len(),
            max_root: (ln_rational(&ratio) / n as f64).exp(),
            argmax: argmax.clone(),
        });
    }
    let complete_binary = (1..=3)
        .map(|levels| {
            let shape = TreeShape::complete_binary(levels);
            let n = shape.leaves();
            let q = q_value(&shape);
            let log2_q = ln_big(&q) / std::f64::consts::LN_2;
            let nlog = n as f64 * (n as f64).log2();
            CompleteBinaryRow { n, log2_q, envelope_c: (log2_q - nlog) / n as f64, q }
        })
        .collect();
    Ok(LemmaScan { rows, complete_binary })
}

/// Shape counts per leaf number, `1..=n`.
pub fn shape_counts(n: usize) -> Result<BTreeMap<usize, usize>, CombinatoricsError> {
    (1..=n).map(|m| enumerate_shapes(m).map(|s| (m, s.len()))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn balanced4() -> TreeShape {
        TreeShape::complete_binary(2)
    }

    #[test]
    fn r_orderings_small() {
        assert_eq!(r_orderings(1, 1), big(2));
        assert_eq!(r_orderings(2, 2), big(4));
        assert_eq!(r_orderings(1, 2), big(2));
        assert_eq!(r_orderings(2, 1), big(2));
        assert_eq!(interleavings(1, 2), big(3));
    }

    #[test]
    fn comb_and_balanced_counts() {
        for n in 2..=12 {
            let comb = TreeShape::left_comb(n);
            assert_eq!(linear_extensions(&comb), big(1));
            assert_eq!(pair_factor(&comb), factorial(n - 1));
        }
        let b4 = balanced4();
        assert_eq!(linear_extensions(&b4), big(2));
        assert_eq!(pair_factor(&b4), big(4));
        assert_eq!(q_value(&b4), big(8));
        assert_eq!(q_value(&TreeShape::left_comb(4)), big(6));
        assert_eq!(q_value(&TreeShape::left_comb(2)), big(1));
    }

    #[test]
    fn recurrence_examples() {
        assert_eq!(q_recurrence_bound(&balanced4()).unwrap(), big(16));
        assert_eq!(q_recurrence_bound(&TreeShape::left_comb(2)).unwrap(), big(4));
        assert_eq!(q_recurrence_bound(&TreeShape::left_comb(3)).unwrap(), big(6));
        assert!(q_recurrence_bound(&TreeShape::Leaf).is_err());
    }

    #[test]
    fn normalized_ratio_examples() {
        let one = normalized_ratio(1, 2).unwrap();
        assert_eq!(one, BigRational::one());
        let two_thirds = normalized_ratio(2, 4).unwrap();
        assert_eq!(two_thirds, BigRational::new(2.into(), 3.into()));
        assert!(normalized_ratio(0, 4).is_err());
        assert!(normalized_ratio(4, 4).is_err());
    }

    #[test]
    fn entropy_values() {
        assert!((entropy(0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
        for a in [0.1, 0.27, 0.4] {
            assert!((entropy(a).unwrap() - entropy(1.0 - a).unwrap()).abs() < 1e-15);
        }
        assert_eq!(entropy(0.0).unwrap(), 0.0);
        assert_eq!(entropy(1.0).unwrap(), 0.0);
        assert!(entropy(1.5).is_err());
        assert!(entropy(-0.1).is_err());
    }

    #[test]
    fn binomial_log_approaches_entropy() {
        let n = 1000;
        let lhs = ln_big(&binomial(n, 300)) / n as f64;
        let h = entropy(0.3).unwrap();
        assert!((lhs - h).abs() < 2.0 * (n as f64).ln() / n as f64);
    }

    #[test]
    fn shape_enumeration_counts() {
        let counts: Vec<usize> = shape_counts(12).unwrap().into_values().collect();
        assert_eq!(counts, vec![1, 1, 1, 2, 3, 6, 11, 23, 46, 98, 207, 451]);
        assert!(enumerate_shapes(13).is_err());
        assert_eq!(enumerate_shapes(2).unwrap(), vec![TreeShape::left_comb(2)]);
    }

    #[test]
    fn scan_small_values() {
        let scan = lemma_bound_scan(4).unwrap();
        assert!((scan.rows[1].max_root - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((scan.rows[3].max_root - (1.0f64 / 3.0).powf(0.25)).abs() < 1e-12);
        assert_eq!(scan.rows[3].argmax, balanced4());
        assert_eq!(scan.complete_binary[0].q, big(1));
        assert_eq!(scan.complete_binary[1].q, big(8));
    }

    #[test]
    fn ln_big_matches_f64() {
        let x = factorial(30);
        let direct: f64 = (2..=30).map(|k| (k as f64).ln()).sum();
        assert!((ln_big(&x) - direct).abs() < 1e-12);
    }

    #[test]
    fn display_shapes() {
        assert_eq!(balanced4().to_string(), "((*,*),(*,*))");
        assert_eq!(TreeShape::left_comb(3).to_string(), "(*,(*,*))");
    }
}
