//! Axis-aligned box domains, labeled point configurations, and membership
//! in the space of non-overlapping equal spheres.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative scale for the membership tolerance: `abs_tol = 1e-9 * shortest_side`.
pub const REL_ABS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("box must have at least one side, all strictly positive (got {0:?})")]
    InvalidDomain(Vec<f64>),
    #[error("configuration must contain at least one point")]
    EmptyConfiguration,
    #[error("point {index} has {got} coordinates, expected {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("point {point:?} lies outside the closed box")]
    PointOutsideDomain { point: Vec<f64> },
    #[error("radius must be nonnegative and finite (got {0})")]
    InvalidRadius(f64),
    #[error("coordinate is not finite")]
    NonFiniteCoordinate,
}

/// Which side of an axis a box face sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    /// The face at coordinate 0.
    Lo,
    /// The face at coordinate `L_m`.
    Hi,
}

/// Identifies one of the `2d` faces of a box: an axis and a side.
///
/// Rendered as e.g. `"0-"` (axis 0, low face) or `"1+"` (axis 1, high face).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face {
    pub axis: usize,
    pub side: Side,
}

impl Face {
    pub fn lo(axis: usize) -> Self {
        Face {
            axis,
            side: Side::Lo,
        }
    }

    pub fn hi(axis: usize) -> Self {
        Face {
            axis,
            side: Side::Hi,
        }
    }

    /// Unit inward normal of this face, as a `d`-vector.
    pub fn inward_normal(&self, d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[self.axis] = match self.side {
            Side::Lo => 1.0,
            Side::Hi => -1.0,
        };
        v
    }
}

impl std::fmt::Display for Face {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sign = match self.side {
            Side::Lo => '-',
            Side::Hi => '+',
        };
        write!(f, "{}{}", self.axis, sign)
    }
}

impl std::str::FromStr for Face {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (axis_str, sign) = s.split_at(s.len().saturating_sub(1));
        let axis: usize = axis_str
            .parse()
            .map_err(|_| format!("bad face id {s:?}"))?;
        let side = match sign {
            "-" => Side::Lo,
            "+" => Side::Hi,
            _ => return Err(format!("bad face id {s:?}, expected trailing '-' or '+'")),
        };
        Ok(Face { axis, side })
    }
}

impl Serialize for Face {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Face {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An axis-aligned box `{0 <= x_m <= L_m}` with user-given side order.
///
/// The sides are kept in the order supplied so that face ids stay stable in
/// I/O; the sorted convention of the theory is available through
/// [`BoxDomain::shortest_side`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lengths: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lengths: Vec<f64>) -> Result<Self, GeometryError> {
        if lengths.is_empty() || lengths.iter().any(|&l| !l.is_finite() || l <= 0.0) {
            return Err(GeometryError::InvalidDomain(lengths));
        }
        Ok(BoxDomain { lengths })
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// The shortest side length `L`.
    pub fn shortest_side(&self) -> f64 {
        self.lengths.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Index of the first axis whose side attains the minimum length.
    pub fn shortest_axis(&self) -> usize {
        let l = self.shortest_side();
        self.lengths.iter().position(|&x| x == l).unwrap()
    }

    /// Membership tolerance used throughout: `1e-9 * shortest_side`.
    pub fn abs_tol(&self) -> f64 {
        REL_ABS_TOL * self.shortest_side()
    }

    /// True iff the point lies in the closed box (boundary included).
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(&self.lengths)
                .all(|(&x, &l)| x >= 0.0 && x <= l)
    }

    /// Center of the given face, a `d`-vector.
    pub fn face_center(&self, face: Face) -> Vec<f64> {
        let mut c: Vec<f64> = self.lengths.iter().map(|&l| 0.5 * l).collect();
        c[face.axis] = match face.side {
            Side::Lo => 0.0,
            Side::Hi => self.lengths[face.axis],
        };
        c
    }

    /// Signed distance from `point` to the given face (negative outside).
    pub fn face_distance(&self, face: Face, point: &[f64]) -> f64 {
        match face.side {
            Side::Lo => point[face.axis],
            Side::Hi => self.lengths[face.axis] - point[face.axis],
        }
    }

    /// All `2d` faces in axis order, low before high.
    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        (0..self.dim()).flat_map(|m| [Face::lo(m), Face::hi(m)])
    }

    /// Nearest point to `point` on the given face.
    pub fn foot_point(&self, face: Face, point: &[f64]) -> Vec<f64> {
        let mut foot = point.to_vec();
        foot[face.axis] = match face.side {
            Side::Lo => 0.0,
            Side::Hi => self.lengths[face.axis],
        };
        foot
    }
}

/// An ordered tuple of `n` labeled points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    coords: Vec<f64>,
    n: usize,
    d: usize,
}

impl Configuration {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        if rows.is_empty() {
            return Err(GeometryError::EmptyConfiguration);
        }
        let d = rows[0].len();
        let mut coords = Vec::with_capacity(rows.len() * d);
        for (index, row) in rows.iter().enumerate() {
            if row.len() != d || d == 0 {
                return Err(GeometryError::DimensionMismatch {
                    index,
                    got: row.len(),
                    expected: d,
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(GeometryError::NonFiniteCoordinate);
            }
            coords.extend_from_slice(row);
        }
        Ok(Configuration {
            coords,
            n: rows.len(),
            d,
        })
    }

    pub fn from_flat(coords: Vec<f64>, n: usize, d: usize) -> Result<Self, GeometryError> {
        if n == 0 || d == 0 || coords.len() != n * d {
            return Err(GeometryError::EmptyConfiguration);
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        Ok(Configuration { coords, n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Coordinates of point `i` (0-based).
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    /// Flat row-major view of all coordinates, length `n * d`.
    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.point(i).to_vec()).collect()
    }

    /// Euclidean distance between points `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(self.point(i), self.point(j))
    }

    /// New configuration with point labels permuted: point `i` of the result
    /// is point `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Configuration {
        assert_eq!(perm.len(), self.n);
        let mut coords = Vec::with_capacity(self.coords.len());
        for &p in perm {
            coords.extend_from_slice(self.point(p));
        }
        Configuration {
            coords,
            n: self.n,
            d: self.d,
        }
    }
}

/// Euclidean distance between two points.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sphere radius, a nonnegative length.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Radius(f64);

impl Radius {
    pub fn new(value: f64) -> Result<Self, GeometryError> {
        if !value.is_finite() || value < 0.0 {
            return Err(GeometryError::InvalidRadius(value));
        }
        Ok(Radius(value))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Distances from a point to all `2d` box faces, paired with face ids.
///
/// The two entries per axis sum to the side length.
pub fn wall_distances(domain: &BoxDomain, point: &[f64]) -> Result<Vec<(Face, f64)>, GeometryError> {
    if !domain.contains(point) {
        return Err(GeometryError::PointOutsideDomain {
            point: point.to_vec(),
        });
    }
    Ok(domain
        .faces()
        .map(|f| (f, domain.face_distance(f, point)))
        .collect())
}

/// Half the minimum pairwise distance; `+inf` when fewer than two points.
pub fn min_gap(config: &Configuration) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..config.n() {
        for j in (i + 1)..config.n() {
            best = best.min(config.distance(i, j));
        }
    }
    0.5 * best
}

/// Membership in the configuration space of `n` balls of radius `r`:
/// true iff the tautological function is at least `r - abs_tol`.
///
/// Points outside the closed box are simply not members; no error.
pub fn in_conf(domain: &BoxDomain, config: &Configuration, r: Radius) -> bool {
    crate::taut::tau_signed(domain, config) >= r.value() - domain.abs_tol()
}
