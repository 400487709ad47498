//! Explicit geometry at the first critical threshold `r* = L/2n`: straight
//! critical chains, the sphere family `S_eps` of touching chains just above
//! the threshold, the polytope `Sigma` of aligned stacks, their transversal
//! intersection, and the two-stage homotopy contracting a chain family.
//!
//! Conventions. `L` is the shortest box side and the chain axis spans it; we
//! call the chain axis "up" (axis coordinate = height). Radii come in pairs
//! `r' = L/2n + eps` (just too large to fit a straight chain) and
//! `r = L/2n - eps` (with room to spare). A member of `S_eps` is a chain of
//! `n` spheres of radius `r'`: the first sits at height `r'` over the center
//! of the bottom face, consecutive centers sit at distance exactly `2r'`,
//! and the last touches the top face. `Sigma` consists of configurations
//! whose points `x_2..x_n` form a stack aligned with the axis plane of
//! `x_1`; its defining conditions are linear.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::geometry::{dist, BoxDomain, Configuration, Face, GeometryError, Radius};
use crate::taut::tau_signed;

/// Relative tolerance for the chain-family fit conditions:
/// `fit_tol = 1e-10 * shortest_side`.
pub const FIT_TOL_REL: f64 = 1e-10;
/// Relative singular-value cutoff for numerical ranks.
const RANK_TOL: f64 = 1e-9;
/// Attempts before sampling gives up.
const MAX_SAMPLE_ATTEMPTS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("axis {axis} has length {length}, but the chain must span a minimal side ({min})")]
    AxisNotMinimal { axis: usize, length: f64, min: f64 },
    #[error("permutation {0:?} is not a bijection on 0..{1}")]
    BadPermutation(Vec<usize>, usize),
    #[error("chain families need n >= 2 (got n = {0})")]
    TooFewSpheres(usize),
    #[error("epsilon {eps} outside (0, {max}) for n = {n}")]
    EpsilonOutOfRange { eps: f64, max: f64, n: usize },
    #[error("no admissible sample after {0} attempts")]
    SamplingExhausted(usize),
    #[error("defining equalities have rank {rank}, expected {expected}: degenerate sample")]
    DegenerateSample { rank: usize, expected: usize },
    #[error("no multistart root satisfied the polytope constraints")]
    NoValidRoot,
    #[error("multistart roots disagree by {spread:.3e}: intersection not unique")]
    NonUnique { spread: f64 },
    #[error("intersection Jacobian has rank {rank} < {expected}: not transversal")]
    NotTransversal { rank: usize, expected: usize },
    #[error("direction {index} points within {angle:.3e} rad of straight down; rotation ambiguous")]
    GeodesicAmbiguity { index: usize, angle: f64 },
    #[error("homotopy left the configuration space at step {step} (tau = {tau:.9}, need {need:.9})")]
    PathLeftConf { step: usize, tau: f64, need: f64 },
}

/// Axis indices ordered by side length (ties by index), so that "f1" is the
/// spanned shortest side and "f2" the next one.
pub fn sorted_axes(domain: &BoxDomain) -> Vec<usize> {
    let mut axes: Vec<usize> = (0..domain.dim()).collect();
    axes.sort_by(|&a, &b| {
        domain.lengths()[a]
            .partial_cmp(&domain.lengths()[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    axes
}

/// A labeled straight chain spanning a shortest side.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    /// The spanned axis; must be of minimal length.
    pub axis: usize,
    /// `permutation[k]` is the label occupying slot `k` along the axis.
    pub permutation: Vec<usize>,
    /// The critical radius `L / 2n`.
    pub r_star: f64,
}

impl ChainSpec {
    pub fn new(
        domain: &BoxDomain,
        axis: usize,
        permutation: Vec<usize>,
    ) -> Result<Self, WitnessError> {
        let min = domain.shortest_side();
        let length = domain.lengths()[axis];
        if length > min {
            return Err(WitnessError::AxisNotMinimal { axis, length, min });
        }
        let n = permutation.len();
        let mut seen = vec![false; n];
        for &p in &permutation {
            if p >= n || seen[p] {
                return Err(WitnessError::BadPermutation(permutation, n));
            }
            seen[p] = true;
        }
        Ok(ChainSpec {
            axis,
            permutation,
            r_star: min / (2.0 * n as f64),
        })
    }

    /// Identity labeling along the first shortest axis.
    pub fn canonical(domain: &BoxDomain, n: usize) -> Self {
        ChainSpec::new(domain, domain.shortest_axis(), (0..n).collect())
            .expect("shortest axis is minimal and identity is a bijection")
    }
}

/// The extremal straight chain: slot `k` (k = 1..n) sits at axis coordinate
/// `(2k-1) L / 2n`, all other coordinates at face centers. Returns the
/// configuration and the critical radius `r* = L/2n` it realizes.
pub fn chain_configuration(
    domain: &BoxDomain,
    n: usize,
    spec: &ChainSpec,
) -> Result<(Configuration, f64), WitnessError> {
    if n == 0 || spec.permutation.len() != n {
        return Err(WitnessError::BadPermutation(spec.permutation.clone(), n));
    }
    let d = domain.dim();
    let length = domain.lengths()[spec.axis];
    let min = domain.shortest_side();
    if length > min {
        return Err(WitnessError::AxisNotMinimal {
            axis: spec.axis,
            length,
            min,
        });
    }
    let mut rows = vec![vec![0.0; d]; n];
    for (slot, &label) in spec.permutation.iter().enumerate() {
        for m in 0..d {
            rows[label][m] = if m == spec.axis {
                (2 * slot + 1) as f64 * length / (2.0 * n as f64)
            } else {
                domain.lengths()[m] / 2.0
            };
        }
    }
    Ok((Configuration::from_rows(rows)?, length / (2.0 * n as f64)))
}

/// One random member of the chain family at radius `r' = L/2n + epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSample {
    /// Unit link directions `u_i = (x_{i+1} - x_i) / 2r'`.
    pub directions: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub r_prime: f64,
    /// The spanned (shortest) axis.
    pub axis: usize,
    pub config: Configuration,
}

fn epsilon_bound(domain: &BoxDomain, n: usize) -> f64 {
    domain.shortest_side() / (2.0 * n as f64 * (n - 1) as f64)
}

fn check_epsilon(domain: &BoxDomain, n: usize, epsilon: f64) -> Result<(), WitnessError> {
    if n < 2 {
        return Err(WitnessError::TooFewSpheres(n));
    }
    let max = epsilon_bound(domain, n);
    if !(epsilon > 0.0 && epsilon < max) {
        return Err(WitnessError::EpsilonOutOfRange {
            eps: epsilon,
            max,
            n,
        });
    }
    Ok(())
}

/// Uniform unit vector by rejection from the cube.
fn random_unit(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Build the chain configuration from `x_1` and link directions.
fn assemble_chain(
    domain: &BoxDomain,
    axis: usize,
    r_prime: f64,
    directions: &[Vec<f64>],
) -> Configuration {
    let d = domain.dim();
    let mut rows = Vec::with_capacity(directions.len() + 1);
    let mut x: Vec<f64> = (0..d)
        .map(|m| {
            if m == axis {
                r_prime
            } else {
                domain.lengths()[m] / 2.0
            }
        })
        .collect();
    rows.push(x.clone());
    for u in directions {
        for m in 0..d {
            x[m] += 2.0 * r_prime * u[m];
        }
        rows.push(x.clone());
    }
    Configuration::from_rows(rows).expect("chain coordinates are finite")
}

/// Draw a random member of `S_eps`: random unit links, rotated by a common
/// spherical angle toward (or away from) the chain axis until the chain
/// exactly reaches the opposite face, then rejected unless the whole
/// configuration is admissible at `r'`.
///
/// The reach equation is solved by safeguarded Newton on the rotation
/// parameter; the fit conditions hold to `1e-10 * L` on output. Sampling is
/// deterministic in `seed`.
#[allow(non_snake_case)]
pub fn sample_S_epsilon(
    domain: &BoxDomain,
    n: usize,
    epsilon: f64,
    seed: u64,
) -> Result<SphereSample, WitnessError> {
    check_epsilon(domain, n, epsilon)?;
    let d = domain.dim();
    let axis = domain.shortest_axis();
    let length = domain.lengths()[axis];
    let r_prime = length / (2.0 * n as f64) + epsilon;
    // total axis travel of the n-1 links, in units of 2r'
    let reach = (length - 2.0 * r_prime) / (2.0 * r_prime);
    let fit_tol = FIT_TOL_REL * domain.shortest_side();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    'attempt: for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let raw: Vec<Vec<f64>> = (0..n - 1).map(|_| random_unit(&mut rng, d)).collect();
        // angles from the +axis direction; degenerate draws are retried
        let mut thetas = Vec::with_capacity(n - 1);
        for u in &raw {
            let cos = u[axis].clamp(-1.0, 1.0);
            if cos > 1.0 - 1e-12 || cos < -1.0 + 1e-12 {
                continue 'attempt;
            }
            thetas.push(cos.acos());
        }
        // common rotation: angle_i(t) = (1-t) * theta_i, t = 1 fully upright
        let sum_cos = |t: f64| -> f64 {
            thetas.iter().map(|&th| ((1.0 - t) * th).cos()).sum::<f64>() - reach
        };
        let theta_max = thetas.iter().cloned().fold(0.0f64, f64::max);
        let mut lo = 1.0 - (std::f64::consts::PI - 1e-9) / theta_max;
        let mut hi = 1.0;
        if sum_cos(lo) > 0.0 || sum_cos(hi) < 0.0 {
            continue 'attempt;
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..100 {
            let f = sum_cos(t);
            if f.abs() < 1e-15 * n as f64 {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let fp: f64 = thetas
                .iter()
                .map(|&th| th * ((1.0 - t) * th).sin())
                .sum();
            let newton = t - f / fp;
            t = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        // rotate each link toward the axis pole by its share of the angle
        let mut directions = Vec::with_capacity(n - 1);
        for (u, &th) in raw.iter().zip(&thetas) {
            let target = ((1.0 - t) * th).cos();
            directions.push(set_axis_component(u, axis, target));
        }
        let config = assemble_chain(domain, axis, r_prime, &directions);
        if !sample_fits(domain, axis, r_prime, &config, fit_tol) {
            continue 'attempt;
        }
        if !crate::geometry::in_conf(domain, &config, Radius::new(r_prime)?) {
            continue 'attempt;
        }
        return Ok(SphereSample {
            directions,
            epsilon,
            r_prime,
            axis,
            config,
        });
    }
    Err(WitnessError::SamplingExhausted(MAX_SAMPLE_ATTEMPTS))
}

/// Rescale the off-axis part of a unit vector so its axis component becomes
/// `a`, keeping the off-axis direction and unit length.
fn set_axis_component(u: &[f64], axis: usize, a: f64) -> Vec<f64> {
    let mut perp: Vec<f64> = u.to_vec();
    perp[axis] = 0.0;
    let pnorm = perp.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = (1.0 - a * a).max(0.0).sqrt() / pnorm;
    let mut out: Vec<f64> = perp.into_iter().map(|x| x * scale).collect();
    out[axis] = a;
    out
}

/// The three chain-family conditions, each to within `tol`.
fn sample_fits(
    domain: &BoxDomain,
    axis: usize,
    r_prime: f64,
    config: &Configuration,
    tol: f64,
) -> bool {
    let n = config.n();
    let bottom = domain.face_center(Face::lo(axis));
    let mut start = bottom.clone();
    start[axis] += r_prime;
    if dist(config.point(0), &start) > tol {
        return false;
    }
    for i in 0..n - 1 {
        if (config.distance(i, i + 1) - 2.0 * r_prime).abs() > tol {
            return false;
        }
    }
    (config.point(n - 1)[axis] - (domain.lengths()[axis] - r_prime)).abs() <= tol
}

/// Dimension of the family at a sample: `nd` minus the rank of the Jacobian
/// of the defining equalities (`d` pin equations, `n-1` gap equations, one
/// end-face equation). Transversal samples give `nd - n - d`; anything less
/// than full row rank is reported as degenerate.
pub fn tangent_rank(sample: &SphereSample) -> Result<usize, WitnessError> {
    let config = &sample.config;
    let (n, d) = (config.n(), config.dim());
    let rows = d + n;
    let mut jac = DMatrix::zeros(rows, n * d);
    for k in 0..d {
        jac[(k, k)] = 1.0;
    }
    for i in 0..n - 1 {
        let (xi, xj) = (config.point(i), config.point(i + 1));
        for m in 0..d {
            let delta = xj[m] - xi[m];
            jac[(d + i, i * d + m)] = -delta;
            jac[(d + i, (i + 1) * d + m)] = delta;
        }
    }
    jac[(d + n - 1, (n - 1) * d + sample.axis)] = 1.0;
    let rank = numerical_rank(&jac);
    if rank < rows {
        return Err(WitnessError::DegenerateSample {
            rank,
            expected: rows,
        });
    }
    Ok(n * d - rank)
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * max)
        .count()
}

/// Options for the polytope membership test.
#[derive(Debug, Clone)]
pub struct SigmaOpts {
    /// Slack allowed on each equality/inequality.
    pub tol: f64,
    /// The gap inequalities as printed start at the second link, leaving the
    /// `x_1`-`x_2` gap unconstrained; setting this starts them at the first.
    pub gap_from_first: bool,
}

impl SigmaOpts {
    pub fn for_domain(domain: &BoxDomain) -> Self {
        SigmaOpts {
            tol: 1e-9 * domain.shortest_side(),
            gap_from_first: false,
        }
    }
}

/// Membership of a configuration in the aligned-stack polytope at radius
/// `r`: heights ordered with gaps `2r` and clearance `r` at both ends,
/// `x_2..x_n` in a common axis plane through (or above) `x_1`.
pub fn sigma_membership(
    domain: &BoxDomain,
    config: &Configuration,
    r: f64,
    opts: &SigmaOpts,
) -> bool {
    let axes = sorted_axes(domain);
    let (f1, n, tol) = (axes[0], config.n(), opts.tol);
    let length = domain.lengths()[f1];

    // shared coordinates: f3.. across everyone, f2 across x_2..x_n
    for &m in &axes[2..] {
        for i in 1..n {
            if (config.point(i)[m] - config.point(0)[m]).abs() > tol {
                return false;
            }
        }
    }
    if axes.len() > 1 {
        let f2 = axes[1];
        for i in 2..n {
            if (config.point(i)[f2] - config.point(1)[f2]).abs() > tol {
                return false;
            }
        }
        if n > 1 && config.point(0)[f2] > config.point(1)[f2] + tol {
            return false;
        }
    }

    // height ordering with end clearances
    if config.point(0)[f1] < r - tol {
        return false;
    }
    if config.point(n - 1)[f1] > length - r + tol {
        return false;
    }
    let first_gap = if opts.gap_from_first { 0 } else { 1 };
    for i in first_gap..n.saturating_sub(1) {
        if config.point(i + 1)[f1] - config.point(i)[f1] < 2.0 * r - tol {
            return false;
        }
    }
    true
}

/// The single transversal intersection point of the chain sphere at
/// `r' = L/2n + eps` with the aligned-stack polytope at `r = L/2n - eps`.
///
/// The combined equality system (chain conditions plus stack alignments) is
/// square; it is solved by damped Newton from 16 perturbed straight chains
/// in parallel. All converged roots satisfying the polytope inequalities
/// must agree to 1e-8, and the combined Jacobian must have full rank `nd`
/// (that is transversality: the two tangent spaces together span
/// everything). Returns the witness configuration and that rank.
pub fn intersection_witness(
    domain: &BoxDomain,
    n: usize,
    epsilon: f64,
) -> Result<(Configuration, usize), WitnessError> {
    check_epsilon(domain, n, epsilon)?;
    let d = domain.dim();
    let nd = n * d;
    let axes = sorted_axes(domain);
    let axis = axes[0];
    let length = domain.lengths()[axis];
    let r_prime = length / (2.0 * n as f64) + epsilon;
    let r = length / (2.0 * n as f64) - epsilon;

    let straight = {
        let mut dirs = vec![vec![0.0; d]; n - 1];
        for u in dirs.iter_mut() {
            u[axis] = 1.0;
        }
        assemble_chain(domain, axis, r_prime, &dirs)
    };

    let residual = |x: &DVector<f64>| -> DVector<f64> {
        let mut f = DVector::zeros(nd);
        let mut row = 0;
        // pin x_1 over the bottom face center
        for m in 0..d {
            let want = if m == axis {
                r_prime
            } else {
                domain.lengths()[m] / 2.0
            };
            f[row] = x[m] - want;
            row += 1;
        }
        // gaps |x_{i+1} - x_i| = 2r' (squared form)
        for i in 0..n - 1 {
            let mut s = 0.0;
            for m in 0..d {
                let delta = x[(i + 1) * d + m] - x[i * d + m];
                s += delta * delta;
            }
            f[row] = s - 4.0 * r_prime * r_prime;
            row += 1;
        }
        // top face
        f[row] = x[(n - 1) * d + axis] - (length - r_prime);
        row += 1;
        // stack alignments: common f2 among x_2..x_n, common f3.. with x_1
        if axes.len() > 1 {
            let f2 = axes[1];
            for i in 2..n {
                f[row] = x[i * d + f2] - x[d + f2];
                row += 1;
            }
        }
        for &m in &axes[2..] {
            for i in 1..n {
                f[row] = x[i * d + m] - x[m];
                row += 1;
            }
        }
        debug_assert_eq!(row, nd);
        f
    };
    let jacobian = |x: &DVector<f64>| -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(nd, nd);
        let mut row = 0;
        for m in 0..d {
            jac[(row, m)] = 1.0;
            row += 1;
        }
        for i in 0..n - 1 {
            for m in 0..d {
                let delta = x[(i + 1) * d + m] - x[i * d + m];
                jac[(row, i * d + m)] = -2.0 * delta;
                jac[(row, (i + 1) * d + m)] = 2.0 * delta;
            }
            row += 1;
        }
        jac[(row, (n - 1) * d + axis)] = 1.0;
        row += 1;
        if axes.len() > 1 {
            let f2 = axes[1];
            for i in 2..n {
                jac[(row, i * d + f2)] = 1.0;
                jac[(row, d + f2)] = -1.0;
                row += 1;
            }
        }
        for &m in &axes[2..] {
            for i in 1..n {
                jac[(row, i * d + m)] = 1.0;
                jac[(row, m)] = -1.0;
                row += 1;
            }
        }
        jac
    };

    let tol = 1e-12 * length.max(1.0);
    let roots: Vec<Option<DVector<f64>>> = (0..16u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x = DVector::from_column_slice(straight.as_flat());
            for v in x.iter_mut() {
                *v += 0.2 * r_prime * rng.gen_range(-1.0..1.0);
            }
            // damped Newton
            let mut fx = residual(&x);
            for _ in 0..80 {
                if fx.amax() <= tol {
                    return Some(x);
                }
                let step = jacobian(&x).lu().solve(&fx)?;
                let mut lambda = 1.0;
                loop {
                    let cand = &x - lambda * &step;
                    let fc = residual(&cand);
                    if fc.norm() <= (1.0 - 0.5 * lambda) * fx.norm() {
                        x = cand;
                        fx = fc;
                        break;
                    }
                    lambda *= 0.5;
                    if lambda < 1e-8 {
                        return None;
                    }
                }
            }
            (fx.amax() <= tol).then_some(x)
        })
        .collect();

    let opts = SigmaOpts::for_domain(domain);
    let valid: Vec<Configuration> = roots
        .into_iter()
        .flatten()
        .filter_map(|x| {
            let config = Configuration::from_flat(x.as_slice().to_vec(), n, d).ok()?;
            let inside = (0..n).all(|i| domain.contains(config.point(i)));
            (inside && sigma_membership(domain, &config, r, &opts)).then_some(config)
        })
        .collect();
    let Some(first) = valid.first() else {
        return Err(WitnessError::NoValidRoot);
    };
    let spread = valid
        .iter()
        .flat_map(|c| {
            c.as_flat()
                .iter()
                .zip(first.as_flat())
                .map(|(a, b)| (a - b).abs())
        })
        .fold(0.0f64, f64::max);
    if spread > 1e-8 {
        return Err(WitnessError::NonUnique { spread });
    }

    let rank = numerical_rank(&jacobian(&DVector::from_column_slice(first.as_flat())));
    if rank < nd {
        return Err(WitnessError::NotTransversal { rank, expected: nd });
    }
    Ok((first.clone(), rank))
}

/// Options for the chain retraction homotopy.
#[derive(Debug, Clone)]
pub struct RetractOpts {
    /// Discretization steps per stage.
    pub steps_per_stage: usize,
    /// Links within this angle of straight down abort the rotation stage.
    pub angle_tol: f64,
}

impl Default for RetractOpts {
    fn default() -> Self {
        RetractOpts {
            steps_per_stage: 64,
            angle_tol: 1e-8,
        }
    }
}

/// Contract a chain-family member to the straight `r`-chain in two stages:
/// first shrink every link from `2r'` to `2r` (keeping `x_1` fixed), then
/// rotate each link direction upright along its great circle to the axis.
///
/// Every intermediate configuration is checked to stay admissible at `r`
/// (within the fit tolerance); the path starts at the sample and ends at
/// the straight chain of gap `2r` over `x_1`.
pub fn retract_chain(
    domain: &BoxDomain,
    sample: &SphereSample,
    r: f64,
    r_prime: f64,
    opts: &RetractOpts,
) -> Result<Vec<Configuration>, WitnessError> {
    let axis = sample.axis;
    let d = sample.config.dim();
    let steps = opts.steps_per_stage.max(1);

    // stage 2 must not start from an (anti)polar link
    for (index, u) in sample.directions.iter().enumerate() {
        let angle = std::f64::consts::PI - u[axis].clamp(-1.0, 1.0).acos();
        if angle < opts.angle_tol {
            return Err(WitnessError::GeodesicAmbiguity { index, angle });
        }
    }

    let x1 = sample.config.point(0).to_vec();
    let rebuild = |scale: f64, dirs: &[Vec<f64>]| -> Configuration {
        let mut rows = vec![x1.clone()];
        let mut x = x1.clone();
        for u in dirs {
            for m in 0..d {
                x[m] += 2.0 * scale * u[m];
            }
            rows.push(x.clone());
        }
        Configuration::from_rows(rows).expect("finite chain")
    };

    let fit_tol = FIT_TOL_REL * domain.shortest_side();
    let mut path = vec![sample.config.clone()];
    // stage 1: link length 2r' -> 2r
    for k in 1..=steps {
        let t = k as f64 / steps as f64;
        let radius = (1.0 - t) * r_prime + t * r;
        path.push(rebuild(radius, &sample.directions));
    }
    // stage 2: rotate links upright
    for k in 1..=steps {
        let s = k as f64 / steps as f64;
        let dirs: Vec<Vec<f64>> = sample
            .directions
            .iter()
            .map(|u| slerp_to_axis(u, axis, s))
            .collect();
        path.push(rebuild(r, &dirs));
    }

    for (step, config) in path.iter().enumerate() {
        let tau = tau_signed(domain, config);
        if tau < r - fit_tol {
            return Err(WitnessError::PathLeftConf {
                step,
                tau,
                need: r - fit_tol,
            });
        }
    }
    Ok(path)
}

/// Rotate a unit vector a fraction `s` of the way to `+axis` along the
/// great circle joining them.
fn slerp_to_axis(u: &[f64], axis: usize, s: f64) -> Vec<f64> {
    let cos = u[axis].clamp(-1.0, 1.0);
    let theta = cos.acos();
    if theta < 1e-12 {
        let mut e = vec![0.0; u.len()];
        e[axis] = 1.0;
        return e;
    }
    let sin = theta.sin();
    let a = ((1.0 - s) * theta).sin() / sin;
    let b = (s * theta).sin() / sin;
    let mut out: Vec<f64> = u.iter().map(|&x| a * x).collect();
    out[axis] += b;
    out
}

/// Serialize a homotopy path in the trajectory JSON-lines format: one line
/// per step with the step index as time, the current `tau`, and the
/// flattened points.
pub fn path_to_jsonl(domain: &BoxDomain, path: &[Configuration]) -> String {
    let mut out = String::new();
    for (k, config) in path.iter().enumerate() {
        out.push_str(
            &json!({
                "t": k as f64,
                "tau": tau_signed(domain, config),
                "points": config.as_flat(),
            })
            .to_string(),
        );
        out.push('\n');
    }
    out
}
