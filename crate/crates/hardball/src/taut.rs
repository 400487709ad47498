//! The tautological function `tau`: the min over half pair distances and
//! wall distances, its active set, and the gradients of the active
//! constraints.
//!
//! For a box the compact family of constraints specializes to a finite one:
//! `C(n,2)` pair constraints plus `2dn` face constraints. A point equidistant
//! from several faces contributes one wall constraint per face.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dist, BoxDomain, Configuration, Face, GeometryError};

/// Relative band for certificate-grade active sets: `1e-9 * shortest_side`.
pub const EPS_ACT_STRICT_REL: f64 = 1e-9;
/// Looser relative band used by the flow to avoid constraint chattering.
pub const EPS_ACT_LOOSE_REL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TautError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("active-set band must be strictly positive (got {0})")]
    InvalidBand(f64),
    #[error("pair ({i}, {j}) has coincident points; gradient undefined")]
    DegenerateGradient { i: usize, j: usize },
}

/// One constraint of the min family, with its value at a configuration.
///
/// Indices are 0-based here; JSON I/O is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    /// Half the distance between points `i < j`.
    Pair { i: usize, j: usize },
    /// Distance from point `i` to a box face; `foot` is the nearest point on
    /// that face. `on_face` flags a point lying exactly on the face, where
    /// the gradient is the one-sided inward normal.
    Wall {
        i: usize,
        face: Face,
        foot: Vec<f64>,
        on_face: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveConstraint {
    pub kind: ConstraintKind,
    pub value: f64,
}

impl ActiveConstraint {
    pub fn is_pair(&self) -> bool {
        matches!(self.kind, ConstraintKind::Pair { .. })
    }
}

/// The constraints attaining the minimum at a configuration, within a band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    pub tau: f64,
    pub constraints: Vec<ActiveConstraint>,
}

/// The tautological function: `min(half min pair distance, min wall distance)`.
///
/// Errors if any point lies outside the closed box.
pub fn tau(domain: &BoxDomain, config: &Configuration) -> Result<f64, TautError> {
    for i in 0..config.n() {
        if !domain.contains(config.point(i)) {
            return Err(GeometryError::PointOutsideDomain {
                point: config.point(i).to_vec(),
            }
            .into());
        }
    }
    Ok(tau_signed(domain, config))
}

/// Total variant of [`tau`]: face distances are signed, so configurations
/// with points outside the box get a negative value instead of an error.
pub fn tau_signed(domain: &BoxDomain, config: &Configuration) -> f64 {
    let mut t = crate::geometry::min_gap(config);
    for i in 0..config.n() {
        let p = config.point(i);
        for face in domain.faces() {
            t = t.min(domain.face_distance(face, p));
        }
    }
    t
}

/// All pair and wall constraints with value within `eps_act` of `tau`.
pub fn active_set(
    domain: &BoxDomain,
    config: &Configuration,
    eps_act: f64,
) -> Result<ActiveSet, TautError> {
    if !(eps_act > 0.0) {
        return Err(TautError::InvalidBand(eps_act));
    }
    let t = tau(domain, config)?;
    let cutoff = t + eps_act;
    let mut constraints = Vec::new();
    for i in 0..config.n() {
        for j in (i + 1)..config.n() {
            let value = 0.5 * config.distance(i, j);
            if value <= cutoff {
                constraints.push(ActiveConstraint {
                    kind: ConstraintKind::Pair { i, j },
                    value,
                });
            }
        }
    }
    for i in 0..config.n() {
        let p = config.point(i);
        for face in domain.faces() {
            let value = domain.face_distance(face, p);
            if value <= cutoff {
                constraints.push(ActiveConstraint {
                    kind: ConstraintKind::Wall {
                        i,
                        face,
                        foot: domain.foot_point(face, p),
                        on_face: value == 0.0,
                    },
                    value,
                });
            }
        }
    }
    Ok(ActiveSet { tau: t, constraints })
}

/// Gradient of one constraint as a flat `n*d` vector.
///
/// Pair `(i, j)`: blocks `-u/2` at `i` and `u/2` at `j` with `u` the unit
/// vector from `x_i` to `x_j` (norm `1/sqrt(2)`). Wall: the face's unit
/// inward normal at slot `i` (norm 1), also when the point sits on the face.
pub fn constraint_gradient(
    constraint: &ActiveConstraint,
    config: &Configuration,
) -> Result<Vec<f64>, TautError> {
    let d = config.dim();
    let mut grad = vec![0.0; config.n() * d];
    match &constraint.kind {
        ConstraintKind::Pair { i, j } => {
            let (pi, pj) = (config.point(*i), config.point(*j));
            let len = dist(pi, pj);
            if len == 0.0 {
                return Err(TautError::DegenerateGradient { i: *i, j: *j });
            }
            for k in 0..d {
                let u = (pj[k] - pi[k]) / len;
                grad[i * d + k] = -0.5 * u;
                grad[j * d + k] = 0.5 * u;
            }
        }
        ConstraintKind::Wall { i, face, .. } => {
            let normal = face.inward_normal(d);
            grad[i * d..(i + 1) * d].copy_from_slice(&normal);
        }
    }
    Ok(grad)
}

// ---------------------------------------------------------------------------
// JSON forms (1-based indices, faces as "0-"/"0+").

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ConstraintJson {
    Pair {
        i: usize,
        j: usize,
        value: f64,
    },
    Wall {
        i: usize,
        face: String,
        foot: Vec<f64>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        on_face: bool,
        value: f64,
    },
}

impl Serialize for ActiveConstraint {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match &self.kind {
            ConstraintKind::Pair { i, j } => ConstraintJson::Pair {
                i: i + 1,
                j: j + 1,
                value: self.value,
            },
            ConstraintKind::Wall {
                i,
                face,
                foot,
                on_face,
            } => ConstraintJson::Wall {
                i: i + 1,
                face: face.to_string(),
                foot: foot.clone(),
                on_face: *on_face,
                value: self.value,
            },
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ActiveConstraint {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        Ok(match ConstraintJson::deserialize(deserializer)? {
            ConstraintJson::Pair { i, j, value } => {
                if i == 0 || j == 0 {
                    return Err(D::Error::custom("pair indices are 1-based"));
                }
                ActiveConstraint {
                    kind: ConstraintKind::Pair { i: i - 1, j: j - 1 },
                    value,
                }
            }
            ConstraintJson::Wall {
                i,
                face,
                foot,
                on_face,
                value,
            } => {
                if i == 0 {
                    return Err(D::Error::custom("wall index is 1-based"));
                }
                ActiveConstraint {
                    kind: ConstraintKind::Wall {
                        i: i - 1,
                        face: face.parse().map_err(D::Error::custom)?,
                        foot,
                        on_face,
                    },
                    value,
                }
            }
        })
    }
}
