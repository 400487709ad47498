//! Regular/critical classification via the Farkas alternative, and the
//! mechanical stress graphs attached to critical configurations.
//!
//! At a configuration x with active constraints `p` and gradients `g_p`,
//! exactly one of two things happens:
//!
//! - some direction `v` increases every active constraint at once (the
//!   ascent cone is nonempty): `x` is regular, and `tau` can be pushed up;
//! - positive weights `w_p` balance the gradients, `sum_p w_p g_p = 0`:
//!   `x` is critical, and the weights are mechanical stresses on the
//!   contact graph.
//!
//! Both sides are decided by small linear programs over the same active set,
//! so the dichotomy is checked, not assumed: if neither certificate clears
//! its tolerance the classification fails loudly as ambiguous.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{dist, BoxDomain, Configuration, Face};
use crate::linprog::{LpError, Outcome, Problem, Rel, Sense};
use crate::taut::{
    active_set, constraint_gradient, tau_signed, ActiveConstraint, ConstraintKind, TautError,
    EPS_ACT_LOOSE_REL, EPS_ACT_STRICT_REL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StressError {
    #[error(transparent)]
    Taut(#[from] TautError),
    #[error("certificate LP failed: {0}")]
    Lp(#[from] LpError),
    #[error("certificate LP was {0}, which cannot happen for a well-posed instance")]
    UnexpectedOutcome(&'static str),
    #[error(
        "classification ambiguous: ascent margin {ascent_margin:.3e}, \
         balance residual {balance_residual:?}"
    )]
    Ambiguous {
        ascent_margin: f64,
        balance_residual: Option<f64>,
    },
    #[error("graph is not balanced (worst residual {residual:.3e}); balance is required here")]
    NotBalanced { residual: f64 },
}

/// Tolerances shared by the certificate routines.
#[derive(Debug, Clone, Copy)]
pub struct CertParams {
    /// Band for active-set membership.
    pub eps_act: f64,
    /// Minimum LP margin for an ascent certificate.
    pub margin_tol: f64,
    /// Maximum gradient-sum residual for a balance certificate.
    pub balance_tol: f64,
    /// Minimum admissible stress weight.
    pub weight_floor: f64,
    /// Tolerance for convex-hull membership checks.
    pub hull_tol: f64,
}

impl CertParams {
    /// Certificate-grade tolerances, scaled to the box.
    pub fn strict(domain: &BoxDomain) -> Self {
        let side = domain.shortest_side();
        CertParams {
            eps_act: EPS_ACT_STRICT_REL * side,
            margin_tol: 1e-8,
            balance_tol: 1e-9 * side,
            weight_floor: 1e-10,
            hull_tol: 1e-9 * side,
        }
    }

    /// Same tolerances but the loose active band used while flowing.
    pub fn loose(domain: &BoxDomain) -> Self {
        CertParams {
            eps_act: EPS_ACT_LOOSE_REL * domain.shortest_side(),
            ..Self::strict(domain)
        }
    }
}

/// Witness of regularity: a direction along which every active constraint
/// grows at rate at least `margin`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AscentCertificate {
    /// Flat `n * d` direction with max-norm at most 1.
    pub direction: Vec<f64>,
    pub margin: f64,
}

/// Witness of criticality: positive weights summing to 1 whose weighted
/// gradient sum vanishes (up to `residual`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceCertificate {
    pub weights: Vec<WeightedConstraint>,
    /// Euclidean norm of the weighted gradient sum.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedConstraint {
    #[serde(flatten)]
    pub constraint: ActiveConstraint,
    pub weight: f64,
}

impl BalanceCertificate {
    /// Number of constraints carrying weight (all of them, by construction).
    pub fn support_size(&self) -> usize {
        self.weights.len()
    }
}

fn gradients(
    config: &Configuration,
    constraints: &[ActiveConstraint],
) -> Result<Vec<Vec<f64>>, TautError> {
    constraints
        .iter()
        .map(|c| constraint_gradient(c, config))
        .collect()
}

/// Raw ascent LP: maximize `delta` subject to `<g_p, v> >= delta` and
/// `|v_k| <= 1`. Always feasible (v = 0, delta = 0) and bounded.
///
/// The optimal face is usually fat — coordinates no active constraint sees
/// can take any value in [-1, 1] — so a second solve picks the minimum-l1
/// direction achieving (essentially) the optimal margin. That keeps flow
/// trajectories from drifting sideways in unconstrained coordinates.
fn ascent_lp(grads: &[Vec<f64>], nd: usize) -> Result<(Vec<f64>, f64), StressError> {
    let mut objective = vec![0.0; nd + 1];
    objective[nd] = 1.0;
    let mut p = Problem::new(Sense::Maximize, objective);
    for k in 0..=nd {
        p.free_var(k);
    }
    for g in grads {
        let mut row: Vec<f64> = g.clone();
        row.push(-1.0);
        p.row(row, Rel::Ge, 0.0);
    }
    for k in 0..nd {
        let mut row = vec![0.0; nd + 1];
        row[k] = 1.0;
        p.row(row.clone(), Rel::Le, 1.0);
        p.row(row, Rel::Ge, -1.0);
    }
    let (coarse, margin) = match p.solve()? {
        Outcome::Optimal(s) => {
            let margin = s.objective;
            let mut v = s.x;
            v.truncate(nd);
            (v, margin)
        }
        Outcome::Infeasible => return Err(StressError::UnexpectedOutcome("infeasible")),
        Outcome::Unbounded => return Err(StressError::UnexpectedOutcome("unbounded")),
    };

    // Second stage: min sum |v_k| subject to the margin just found (backed
    // off by a hair so the optimum stays strictly feasible in floats).
    // l1 trick: v_k = a_k - b_k with a, b >= 0 and unit cost on both parts.
    let delta = margin - 1e-12 * (1.0 + margin.abs());
    let mut p = Problem::new(Sense::Minimize, vec![1.0; 2 * nd]);
    for g in grads {
        let mut row = g.clone();
        row.extend(g.iter().map(|x| -x));
        p.row(row, Rel::Ge, delta);
    }
    for k in 0..nd {
        let mut row = vec![0.0; 2 * nd];
        row[k] = 1.0;
        row[nd + k] = -1.0;
        p.row(row.clone(), Rel::Le, 1.0);
        p.row(row, Rel::Ge, -1.0);
    }
    match p.solve() {
        Ok(Outcome::Optimal(s)) => {
            let v: Vec<f64> = (0..nd).map(|k| s.x[k] - s.x[nd + k]).collect();
            // report the direction's true margin, not the LP bound
            let margin = grads
                .iter()
                .map(|g| g.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>())
                .fold(margin, f64::min);
            Ok((v, margin))
        }
        // fall back to the coarse direction if the refinement misbehaves
        _ => Ok((coarse, margin)),
    }
}

/// Raw balance LP: maximize the minimum weight subject to
/// `sum_p w_p g_p = 0`, `sum_p w_p = 1`, `w >= 0`. The max-min objective
/// picks the most interior weight vector, so the output is deterministic
/// and as far from the floor as the constraint geometry allows.
fn balance_lp(grads: &[Vec<f64>], nd: usize) -> Result<Option<Vec<f64>>, StressError> {
    let np = grads.len();
    let mut objective = vec![0.0; np + 1];
    objective[np] = 1.0;
    let mut p = Problem::new(Sense::Maximize, objective);
    for k in 0..nd {
        let mut row: Vec<f64> = grads.iter().map(|g| g[k]).collect();
        row.push(0.0);
        p.row(row, Rel::Eq, 0.0);
    }
    let mut row = vec![1.0; np];
    row.push(0.0);
    p.row(row, Rel::Eq, 1.0);
    for i in 0..np {
        let mut row = vec![0.0; np + 1];
        row[i] = 1.0;
        row[np] = -1.0;
        p.row(row, Rel::Ge, 0.0);
    }
    match p.solve()? {
        Outcome::Optimal(s) => {
            let mut w = s.x;
            w.truncate(np);
            Ok(Some(w))
        }
        Outcome::Infeasible => Ok(None),
        Outcome::Unbounded => Err(StressError::UnexpectedOutcome("unbounded")),
    }
}

fn weighted_gradient_residual(grads: &[Vec<f64>], w: &[f64], nd: usize) -> f64 {
    let mut sum = vec![0.0; nd];
    for (g, &wi) in grads.iter().zip(w) {
        for (s, gi) in sum.iter_mut().zip(g) {
            *s += wi * gi;
        }
    }
    sum.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Search for a common ascent direction of all active constraints.
///
/// Returns a certificate iff the optimal LP margin exceeds
/// `params.margin_tol`; `None` means the ascent cone is (numerically) empty.
pub fn ascent_direction(
    domain: &BoxDomain,
    config: &Configuration,
    params: &CertParams,
) -> Result<Option<AscentCertificate>, StressError> {
    let active = active_set(domain, config, params.eps_act)?;
    let grads = gradients(config, &active.constraints)?;
    let (direction, margin) = ascent_lp(&grads, config.n() * config.dim())?;
    Ok((margin > params.margin_tol).then_some(AscentCertificate { direction, margin }))
}

/// Search for balancing stress weights over the active constraints.
///
/// Returns a certificate iff weights exist with every weight at least
/// `params.weight_floor` and gradient-sum residual at most
/// `params.balance_tol`.
pub fn balance_weights(
    domain: &BoxDomain,
    config: &Configuration,
    params: &CertParams,
) -> Result<Option<BalanceCertificate>, StressError> {
    let active = active_set(domain, config, params.eps_act)?;
    let grads = gradients(config, &active.constraints)?;
    let nd = config.n() * config.dim();
    let Some(w) = balance_lp(&grads, nd)? else {
        return Ok(None);
    };
    let residual = weighted_gradient_residual(&grads, &w, nd);
    let ok = residual <= params.balance_tol
        && w.iter().all(|&wi| wi >= params.weight_floor);
    Ok(ok.then(|| BalanceCertificate {
        weights: active
            .constraints
            .into_iter()
            .zip(&w)
            .map(|(constraint, &weight)| WeightedConstraint { constraint, weight })
            .collect(),
        residual,
    }))
}

// ---------------------------------------------------------------------------
// Stress graphs.

/// Endpoint of a stress edge: a sphere center or a wall foot point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "lowercase")]
pub enum VertexId {
    Internal(usize),
    Boundary(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InternalVertex {
    /// Point index, 0-based internally.
    pub index: usize,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryVertex {
    pub foot: Vec<f64>,
    pub face: Face,
    /// Index of the internal vertex this foot supports.
    pub touches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StressEdge {
    pub a: VertexId,
    pub b: VertexId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub vertices: Vec<VertexId>,
    /// A trivial component is a single sphere with no contacts.
    pub trivial: bool,
}

/// The weighted contact graph of a balanced configuration: sphere centers,
/// wall foot points, and one edge per stressed constraint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StressGraph {
    pub internal: Vec<InternalVertex>,
    pub boundary: Vec<BoundaryVertex>,
    pub edges: Vec<StressEdge>,
    pub components: Vec<Component>,
    /// The radius (= tau) the graph was built at.
    pub radius: f64,
}

impl StressGraph {
    /// No edges at all: every sphere is contact-free.
    pub fn trivial(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Assemble the stress graph of a balanced configuration from its
/// certificate: pair constraints become center-center edges, wall
/// constraints become center-foot edges, all carrying their LP weight.
pub fn build_stress_graph(
    domain: &BoxDomain,
    config: &Configuration,
    certificate: &BalanceCertificate,
) -> StressGraph {
    let internal: Vec<InternalVertex> = (0..config.n())
        .map(|index| InternalVertex {
            index,
            coords: config.point(index).to_vec(),
        })
        .collect();
    let mut boundary = Vec::new();
    let mut edges = Vec::new();
    for wc in &certificate.weights {
        match &wc.constraint.kind {
            ConstraintKind::Pair { i, j } => edges.push(StressEdge {
                a: VertexId::Internal(*i),
                b: VertexId::Internal(*j),
                weight: wc.weight,
            }),
            ConstraintKind::Wall { i, face, foot, .. } => {
                let b = VertexId::Boundary(boundary.len());
                boundary.push(BoundaryVertex {
                    foot: foot.clone(),
                    face: *face,
                    touches: *i,
                });
                edges.push(StressEdge {
                    a: VertexId::Internal(*i),
                    b,
                    weight: wc.weight,
                });
            }
        }
    }

    // Connected components via union-find over internal + boundary vertices.
    let n = internal.len();
    let total = n + boundary.len();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let flat = |v: &VertexId| match v {
        VertexId::Internal(i) => *i,
        VertexId::Boundary(k) => n + k,
    };
    for e in &edges {
        let (ra, rb) = (find(&mut parent, flat(&e.a)), find(&mut parent, flat(&e.b)));
        parent[ra] = rb;
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut members: Vec<Vec<VertexId>> = Vec::new();
    for x in 0..total {
        let r = find(&mut parent, x);
        let slot = roots.iter().position(|&q| q == r).unwrap_or_else(|| {
            roots.push(r);
            members.push(Vec::new());
            roots.len() - 1
        });
        members[slot].push(if x < n {
            VertexId::Internal(x)
        } else {
            VertexId::Boundary(x - n)
        });
    }
    let components = members
        .into_iter()
        .map(|vertices| Component {
            trivial: vertices.len() == 1,
            vertices,
        })
        .collect();

    StressGraph {
        internal,
        boundary,
        edges,
        components,
        radius: tau_signed(domain, config),
    }
}

/// Balance diagnostics for a stress graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    /// Net stress-force norm at each internal vertex.
    pub internal_residuals: Vec<f64>,
    /// Norm of the summed boundary stresses of each component.
    pub component_boundary_residuals: Vec<f64>,
    pub balanced: bool,
    /// Vacuously balanced: the graph has no edges.
    pub trivial: bool,
}

/// Check the two balance laws on a stress graph: stresses cancel at every
/// sphere center, and the wall stresses of each component sum to zero.
///
/// A pair edge pushes its endpoints apart with force `weight / 2` along the
/// center line; a wall edge pushes the center inward with force `weight`
/// (these are exactly the constraint gradients). The boundary stress of a
/// wall edge is the outward reaction on the wall.
pub fn check_balance(graph: &StressGraph, params: &CertParams) -> BalanceReport {
    let d = graph
        .internal
        .first()
        .map_or(0, |v| v.coords.len());
    let mut forces = vec![vec![0.0; d]; graph.internal.len()];
    let mut boundary_stress = vec![vec![0.0; d]; graph.boundary.len()];
    for e in &graph.edges {
        match (e.a, e.b) {
            (VertexId::Internal(i), VertexId::Internal(j)) => {
                let (xi, xj) = (&graph.internal[i].coords, &graph.internal[j].coords);
                let len = dist(xi, xj);
                for k in 0..d {
                    let u = (xj[k] - xi[k]) / len;
                    forces[i][k] -= 0.5 * e.weight * u;
                    forces[j][k] += 0.5 * e.weight * u;
                }
            }
            (VertexId::Internal(i), VertexId::Boundary(bk))
            | (VertexId::Boundary(bk), VertexId::Internal(i)) => {
                let normal = graph.boundary[bk].face.inward_normal(d);
                for k in 0..d {
                    forces[i][k] += e.weight * normal[k];
                    boundary_stress[bk][k] -= e.weight * normal[k];
                }
            }
            _ => unreachable!("edges join an internal vertex to something"),
        }
    }
    let internal_residuals: Vec<f64> = forces
        .iter()
        .map(|f| f.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let component_boundary_residuals: Vec<f64> = graph
        .components
        .iter()
        .map(|c| {
            let mut sum = vec![0.0; d];
            for v in &c.vertices {
                if let VertexId::Boundary(bk) = v {
                    for k in 0..d {
                        sum[k] += boundary_stress[*bk][k];
                    }
                }
            }
            sum.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .collect();
    let balanced = internal_residuals
        .iter()
        .chain(&component_boundary_residuals)
        .all(|&r| r <= params.balance_tol);
    BalanceReport {
        internal_residuals,
        component_boundary_residuals,
        balanced,
        trivial: graph.trivial(),
    }
}

/// Convex-hull membership: is `q` in the hull of `points`, up to `tol`?
fn in_convex_hull(q: &[f64], points: &[Vec<f64>], tol: f64) -> Result<bool, StressError> {
    if points.is_empty() {
        return Ok(false);
    }
    let d = q.len();
    let m = points.len();
    let mut p = Problem::new(Sense::Minimize, vec![0.0; m]);
    for k in 0..d {
        p.row(points.iter().map(|pt| pt[k]).collect(), Rel::Eq, q[k]);
    }
    p.row(vec![1.0; m], Rel::Eq, 1.0);
    match p.solve()? {
        Outcome::Infeasible => Ok(false),
        Outcome::Unbounded => Err(StressError::UnexpectedOutcome("unbounded")),
        Outcome::Optimal(s) => {
            let mut residual = 0.0f64;
            for k in 0..d {
                let combo: f64 = points.iter().zip(&s.x).map(|(pt, l)| pt[k] * l).sum();
                residual += (combo - q[k]).powi(2);
            }
            Ok(residual.sqrt() <= tol)
        }
    }
}

/// Hull structure of a balanced graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullReport {
    /// Per internal vertex: center inside the hull of its kissing points
    /// (vacuously true for isolated vertices).
    pub internal_in_kissing_hull: Vec<bool>,
    /// Per component: all its centers inside the hull of its wall feet
    /// (vacuously true for trivial components).
    pub component_in_boundary_hull: Vec<bool>,
    pub all_pass: bool,
}

/// Verify the hull laws of balanced graphs: each touching sphere center
/// lies in the convex hull of its kissing points, and each nontrivial
/// component lies in the convex hull of its wall kissing points.
///
/// Errors if the graph fails [`check_balance`]; the hull laws only hold for
/// balanced stresses.
pub fn hull_checks(graph: &StressGraph, params: &CertParams) -> Result<HullReport, StressError> {
    let report = check_balance(graph, params);
    if !report.balanced {
        let residual = report
            .internal_residuals
            .iter()
            .chain(&report.component_boundary_residuals)
            .fold(0.0f64, |a, &b| a.max(b));
        return Err(StressError::NotBalanced { residual });
    }

    // Kissing points per internal vertex: pair midpoints and wall feet.
    let n = graph.internal.len();
    let mut kissing: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n];
    for e in &graph.edges {
        match (e.a, e.b) {
            (VertexId::Internal(i), VertexId::Internal(j)) => {
                let (xi, xj) = (&graph.internal[i].coords, &graph.internal[j].coords);
                let mid: Vec<f64> = xi.iter().zip(xj).map(|(a, b)| 0.5 * (a + b)).collect();
                kissing[i].push(mid.clone());
                kissing[j].push(mid);
            }
            (VertexId::Internal(i), VertexId::Boundary(bk))
            | (VertexId::Boundary(bk), VertexId::Internal(i)) => {
                kissing[i].push(graph.boundary[bk].foot.clone());
            }
            _ => unreachable!(),
        }
    }
    let mut internal_in_kissing_hull = Vec::with_capacity(n);
    for (v, pts) in graph.internal.iter().zip(&kissing) {
        internal_in_kissing_hull.push(if pts.is_empty() {
            true
        } else {
            in_convex_hull(&v.coords, pts, params.hull_tol)?
        });
    }

    let mut component_in_boundary_hull = Vec::with_capacity(graph.components.len());
    for c in &graph.components {
        if c.trivial {
            component_in_boundary_hull.push(true);
            continue;
        }
        let feet: Vec<Vec<f64>> = c
            .vertices
            .iter()
            .filter_map(|v| match v {
                VertexId::Boundary(bk) => Some(graph.boundary[*bk].foot.clone()),
                VertexId::Internal(_) => None,
            })
            .collect();
        let mut ok = true;
        for v in &c.vertices {
            if let VertexId::Internal(i) = v {
                ok &= in_convex_hull(&graph.internal[*i].coords, &feet, params.hull_tol)?;
            }
        }
        component_in_boundary_hull.push(ok);
    }

    let all_pass = internal_in_kissing_hull.iter().all(|&b| b)
        && component_in_boundary_hull.iter().all(|&b| b);
    Ok(HullReport {
        internal_in_kissing_hull,
        component_in_boundary_hull,
        all_pass,
    })
}

/// Outcome of the Farkas dichotomy at a configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Regular(AscentCertificate),
    Balanced {
        certificate: BalanceCertificate,
        graph: StressGraph,
        /// At least one sphere is in contact (the graph has edges).
        nontrivial: bool,
    },
}

impl Classification {
    pub fn is_regular(&self) -> bool {
        matches!(self, Classification::Regular(_))
    }
}

/// Decide regular versus balanced by running both certificate LPs.
///
/// Exactly one side must clear its tolerance; if both or neither do, the
/// configuration sits inside the ambiguity band and an error is returned
/// carrying both margins.
pub fn classify(
    domain: &BoxDomain,
    config: &Configuration,
    params: &CertParams,
) -> Result<Classification, StressError> {
    let active = active_set(domain, config, params.eps_act)?;
    let grads = gradients(config, &active.constraints)?;
    let nd = config.n() * config.dim();

    let (direction, margin) = ascent_lp(&grads, nd)?;
    let ascends = margin > params.margin_tol;

    let balance = balance_lp(&grads, nd)?;
    let balance = balance.and_then(|w| {
        let residual = weighted_gradient_residual(&grads, &w, nd);
        (residual <= params.balance_tol && w.iter().all(|&wi| wi >= params.weight_floor))
            .then_some((w, residual))
    });

    match (ascends, balance) {
        (true, None) => Ok(Classification::Regular(AscentCertificate {
            direction,
            margin,
        })),
        (false, Some((w, residual))) => {
            let certificate = BalanceCertificate {
                weights: active
                    .constraints
                    .into_iter()
                    .zip(&w)
                    .map(|(constraint, &weight)| WeightedConstraint { constraint, weight })
                    .collect(),
                residual,
            };
            let graph = build_stress_graph(domain, config, &certificate);
            let nontrivial = !graph.trivial();
            Ok(Classification::Balanced {
                certificate,
                graph,
                nontrivial,
            })
        }
        (_, balance) => Err(StressError::Ambiguous {
            ascent_margin: margin,
            balance_residual: balance.map(|(_, r)| r),
        }),
    }
}
