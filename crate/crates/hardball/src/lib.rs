//! Configuration spaces of hard spheres in a box.
//!
//! `n` disjoint open balls of radius `r` live in a rectangular box; the space
//! of admissible center placements is the sublevel-complement
//! `Conf(n, r) = { x : tau(x) >= r }` of the tautological function `tau`,
//! the minimum of half pairwise distances and wall distances. `tau` is
//! min-type rather than smooth, so critical points are detected by a convex
//! alternative: either some direction increases every active constraint at
//! once, or non-negative weights balance the active gradients.
//!
//! The crate provides:
//!
//! - [`geometry`]: boxes, configurations, distances, membership tests;
//! - [`taut`]: `tau`, active sets, and constraint gradients;
//! - [`linprog`]: the small dense LP solver behind the certificates;
//! - [`stress`]: regular/balanced classification with stress graphs;
//! - [`flow`]: discrete ascent of `tau` and retraction to a level;
//! - [`witness`]: chain configurations and the sphere/polytope intersection
//!   witness at the first critical threshold `L / 2n`;
//! - [`topo`]: exact Betti-number bookkeeping across the threshold;
//! - [`roadmap`]: sampling-based connectivity experiments;
//! - [`render`]: SVG pictures of planar configurations and stress graphs.

pub mod flow;
pub mod geometry;
pub mod linprog;
pub mod render;
pub mod roadmap;
pub mod stress;
pub mod taut;
pub mod topo;
pub mod witness;
