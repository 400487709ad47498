//! Probabilistic-roadmap connectivity probes of `Conf(n, r)`.
//!
//! Whether the space of admissible placements stays connected as `r` grows
//! is the gating question for ergodicity of sphere dynamics. This module
//! answers it experimentally at desk scale: sample admissible
//! configurations uniformly, connect near neighbors whose straight segment
//! stays admissible, and count components of the resulting graph. The
//! planner only ever errs by missing connections, so component counts are
//! upper bounds that tighten with more samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{in_conf, BoxDomain, Configuration, Radius};

/// Rejection-sampling attempts per node before giving up.
pub const RETRY_CAP: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoadmapError {
    #[error("only {got} of {want} samples admissible; need at least 2")]
    InsufficientData { got: usize, want: usize },
}

/// Tuning knobs for roadmap construction.
#[derive(Debug, Clone)]
pub struct RoadmapOpts {
    /// Neighbors tried per node.
    pub k: usize,
    /// Finest segment length probed by the local planner.
    pub resolution: f64,
}

impl RoadmapOpts {
    /// Defaults: 10 nearest neighbors, probe resolution
    /// `1e-3 * shortest_side`.
    pub fn for_domain(domain: &BoxDomain) -> Self {
        RoadmapOpts {
            k: 10,
            resolution: 1e-3 * domain.shortest_side(),
        }
    }
}

/// A sampled graph over admissible configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct Roadmap {
    pub nodes: Vec<Configuration>,
    /// Accepted connections, each `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
    /// Component label per node: the smallest node index in its component.
    pub components: Vec<usize>,
}

impl Roadmap {
    pub fn component_count(&self) -> usize {
        let mut labels: Vec<usize> = self.components.clone();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }
}

/// Disjoint-set forest with path halving.
struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller index as root so labels are canonical
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Draw one admissible configuration, or `None` if the rejection cap is
/// exhausted (packing too tight for naive sampling).
///
/// Points are uniform in the shrunken box `[r, L_m - r]` per axis, which
/// settles the wall constraints; only the pairwise gaps are retried.
pub fn sample_configuration(
    domain: &BoxDomain,
    n: usize,
    r: Radius,
    rng: &mut impl Rng,
) -> Option<Configuration> {
    let d = domain.dim();
    let rv = r.value();
    for m in 0..d {
        if domain.lengths()[m] < 2.0 * rv {
            return None;
        }
    }
    for _ in 0..RETRY_CAP {
        let coords: Vec<f64> = (0..n * d)
            .map(|i| {
                let len = domain.lengths()[i % d];
                if len == 2.0 * rv {
                    rv
                } else {
                    rng.gen_range(rv..len - rv)
                }
            })
            .collect();
        let config = Configuration::from_flat(coords, n, d).expect("finite uniform draws");
        if in_conf(domain, &config, r) {
            return Some(config);
        }
    }
    None
}

fn config_dist(a: &Configuration, b: &Configuration) -> f64 {
    a.as_flat()
        .iter()
        .zip(b.as_flat())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn lerp(a: &Configuration, b: &Configuration, t: f64) -> Configuration {
    let coords: Vec<f64> = a
        .as_flat()
        .iter()
        .zip(b.as_flat())
        .map(|(x, y)| x + t * (y - x))
        .collect();
    Configuration::from_flat(coords, a.n(), a.dim()).expect("finite interpolation")
}

/// Straight-segment local planner: true iff recursive bisection down to
/// `resolution` finds no inadmissible midpoint. Conservative in the sense
/// that a reported failure may be a resolution artifact, but a reported
/// success has been probed densely.
pub fn local_plan(
    domain: &BoxDomain,
    c1: &Configuration,
    c2: &Configuration,
    r: Radius,
    resolution: f64,
) -> bool {
    fn probe(
        domain: &BoxDomain,
        c1: &Configuration,
        c2: &Configuration,
        r: Radius,
        lo: f64,
        hi: f64,
        span: f64,
        resolution: f64,
    ) -> bool {
        if span * (hi - lo) <= resolution {
            return true;
        }
        let mid = 0.5 * (lo + hi);
        in_conf(domain, &lerp(c1, c2, mid), r)
            && probe(domain, c1, c2, r, lo, mid, span, resolution)
            && probe(domain, c1, c2, r, mid, hi, span, resolution)
    }
    probe(domain, c1, c2, r, 0.0, 1.0, config_dist(c1, c2), resolution)
}

/// Connect the given admissible nodes with a k-nearest-neighbor roadmap.
/// Candidate edges are validated in parallel; the union-find merge runs in
/// index order, so the result is independent of thread scheduling.
pub fn roadmap_on_nodes(
    domain: &BoxDomain,
    nodes: Vec<Configuration>,
    r: Radius,
    opts: &RoadmapOpts,
) -> Roadmap {
    let count = nodes.len();
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for i in 0..count {
        let mut dists: Vec<(f64, usize)> = (0..count)
            .filter(|&j| j != i)
            .map(|j| (config_dist(&nodes[i], &nodes[j]), j))
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &(_, j) in dists.iter().take(opts.k) {
            candidates.push((i.min(j), i.max(j)));
        }
    }
    candidates.sort_unstable();
    candidates.dedup();

    let accepted: Vec<(usize, usize)> = candidates
        .into_par_iter()
        .filter(|&(i, j)| local_plan(domain, &nodes[i], &nodes[j], r, opts.resolution))
        .collect();

    let mut dsu = Dsu::new(count);
    for &(i, j) in &accepted {
        dsu.union(i, j);
    }
    let components: Vec<usize> = (0..count).map(|i| dsu.find(i)).collect();
    Roadmap {
        nodes,
        edges: accepted,
        components,
    }
}

/// Sample `num_samples` nodes and report the component count of their
/// roadmap. Nodes draw from per-index streams of the seeded generator, so
/// the result is a deterministic function of the inputs.
pub fn connectivity_experiment(
    domain: &BoxDomain,
    n: usize,
    r: Radius,
    num_samples: usize,
    seed: u64,
    opts: &RoadmapOpts,
) -> Result<(usize, Roadmap), RoadmapError> {
    let nodes: Vec<Configuration> = (0..num_samples)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            sample_configuration(domain, n, r, &mut rng)
        })
        .collect();
    if nodes.len() < 2 {
        return Err(RoadmapError::InsufficientData {
            got: nodes.len(),
            want: num_samples,
        });
    }
    let map = roadmap_on_nodes(domain, nodes, r, opts);
    Ok((map.component_count(), map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> BoxDomain {
        BoxDomain::new(vec![1.0, 1.0]).unwrap()
    }

    fn rect() -> BoxDomain {
        BoxDomain::new(vec![1.0, 2.0]).unwrap()
    }

    fn radius(r: f64) -> Radius {
        Radius::new(r).unwrap()
    }

    #[test]
    fn single_ball_sample_in_shrunken_box() {
        let domain = unit_square();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let c = sample_configuration(&domain, 1, radius(0.4), &mut rng).unwrap();
            for &x in c.point(0) {
                assert!((0.4..=0.6).contains(&x));
            }
            assert!(in_conf(&domain, &c, radius(0.4)));
        }
    }

    #[test]
    fn oversized_balls_sample_none() {
        let domain = unit_square();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_configuration(&domain, 2, radius(0.6), &mut rng).is_none());
    }

    #[test]
    fn seeded_sample_is_reproducible() {
        let domain = rect();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let c = sample_configuration(&domain, 2, radius(0.1), &mut rng).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let again = sample_configuration(&domain, 2, radius(0.1), &mut rng).unwrap();
        assert_eq!(c, again);
        assert!(in_conf(&domain, &c, radius(0.1)));
    }

    #[test]
    fn local_plan_trivial_and_convex_cases() {
        let domain = unit_square();
        let r = radius(0.2);
        let c1 = Configuration::from_rows(vec![vec![0.3, 0.3]]).unwrap();
        let c2 = Configuration::from_rows(vec![vec![0.7, 0.6]]).unwrap();
        let res = 1e-3;
        assert!(local_plan(&domain, &c1, &c1, r, res));
        // single-ball feasible set is convex, so any segment works
        assert!(local_plan(&domain, &c1, &c2, r, res));
    }

    #[test]
    fn local_plan_blocks_label_swap() {
        let domain = rect();
        let r = radius(0.26);
        let up = Configuration::from_rows(vec![vec![0.5, 0.5], vec![0.5, 1.5]]).unwrap();
        let down = Configuration::from_rows(vec![vec![0.5, 1.5], vec![0.5, 0.5]]).unwrap();
        assert!(in_conf(&domain, &up, r) && in_conf(&domain, &down, r));
        // the straight swap passes through coincident points
        assert!(!local_plan(&domain, &up, &down, r, 1e-3));
    }

    #[test]
    fn single_ball_roadmap_is_connected() {
        let domain = unit_square();
        let opts = RoadmapOpts::for_domain(&domain);
        let (components, map) =
            connectivity_experiment(&domain, 1, radius(0.3), 80, 5, &opts).unwrap();
        assert_eq!(components, 1);
        assert_eq!(map.nodes.len(), 80);
    }

    #[test]
    fn experiments_are_deterministic() {
        let domain = rect();
        let opts = RoadmapOpts::for_domain(&domain);
        let (a, map_a) =
            connectivity_experiment(&domain, 2, radius(0.2), 60, 9, &opts).unwrap();
        let (b, map_b) =
            connectivity_experiment(&domain, 2, radius(0.2), 60, 9, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(map_a, map_b);
    }

    #[test]
    fn insufficient_data_reported() {
        let domain = unit_square();
        let opts = RoadmapOpts::for_domain(&domain);
        assert!(matches!(
            connectivity_experiment(&domain, 2, radius(0.6), 10, 0, &opts),
            Err(RoadmapError::InsufficientData { got: 0, want: 10 })
        ));
    }

    /// Above the swap threshold the two vertical orderings are separate
    /// components; below it the space reconnects. The component counts here
    /// double as the empirical side of the Betti-number tables.
    #[test]
    fn two_ball_components_across_threshold() {
        let domain = rect();
        let opts = RoadmapOpts::for_domain(&domain);
        let (above, _) =
            connectivity_experiment(&domain, 2, radius(0.26), 500, 7, &opts).unwrap();
        assert_eq!(above, 2);
        let (below, _) =
            connectivity_experiment(&domain, 2, radius(0.10), 500, 7, &opts).unwrap();
        assert_eq!(below, 1);
    }

    /// Filtration property: raising `r` on a fixed node set never merges
    /// components.
    #[test]
    fn component_count_monotone_in_radius() {
        let domain = rect();
        let opts = RoadmapOpts::for_domain(&domain);
        let mut nodes = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        while nodes.len() < 120 {
            nodes.push(sample_configuration(&domain, 2, radius(0.24), &mut rng).unwrap());
        }
        let mut last = 1usize;
        for r in [0.05, 0.12, 0.2, 0.24] {
            let r = radius(r);
            let kept: Vec<Configuration> = nodes
                .iter()
                .filter(|c| in_conf(&domain, c, r))
                .cloned()
                .collect();
            assert_eq!(kept.len(), nodes.len(), "nodes admissible at 0.24 stay so");
            let map = roadmap_on_nodes(&domain, kept, r, &opts);
            let count = map.component_count();
            assert!(count >= last, "components {count} dropped below {last}");
            last = count;
        }
    }

    /// Accepted edges survive re-validation at twice the probe resolution.
    #[test]
    fn edges_stable_under_finer_probing() {
        let domain = rect();
        let opts = RoadmapOpts::for_domain(&domain);
        let r = radius(0.22);
        let (_, map) = connectivity_experiment(&domain, 2, r, 120, 3, &opts).unwrap();
        assert!(!map.edges.is_empty());
        for &(i, j) in map.edges.iter().step_by(20) {
            assert!(local_plan(
                &domain,
                &map.nodes[i],
                &map.nodes[j],
                r,
                opts.resolution / 2.0
            ));
        }
    }
}
