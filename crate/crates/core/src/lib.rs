//! Dynamical clusters of particle systems.
//!
//! Particles move on a finite horizon `[0, tau]`; two particles interact when
//! their centres come within `2r`. The crate builds the resulting interaction
//! graph and its clusters, reconstructs the binary tree recording the order in
//! which subclusters merge, counts the combinatorial structures attached to
//! such trees exactly, and estimates cluster-size distributions by Monte Carlo.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cluster_tree;
pub mod clustering;
pub mod combinatorics;
pub mod dynamics;
pub mod estimator;
pub mod geometry;
mod grid;
pub mod io;

pub use geometry::{MotionSegment, Vector};
