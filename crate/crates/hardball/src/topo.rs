//! Exact Betti-number bookkeeping across the first critical threshold.
//!
//! Below `r* = L/2n` the space of `n` hard spheres in a box deformation
//! retracts to the configuration space of `n` labeled points, whose
//! Poincare polynomial is the product `prod_{i=1}^{n-1} (1 + i t^{d-1})`.
//! Crossing the threshold attaches `k n!` cells of dimension
//! `N = (n-1)(d-1)`, one per straight chain (axis choice times labeling),
//! which kills everything in degrees `N` and up and adjusts degree `N - 1`
//! by a closed-form count. Everything here is integer or rational
//! arithmetic; no floating point.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use thiserror::Error;

use crate::geometry::BoxDomain;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopoError {
    #[error("need n >= 1 and d >= 2 (got n = {n}, d = {d})")]
    BadDimensions { n: usize, d: usize },
    #[error("threshold tables need n >= 2 (got n = {n})")]
    TooFewSpheres { n: usize },
    #[error("side multiplicity k = {k} outside 1..={d}")]
    BadMultiplicity { k: usize, d: usize },
}

/// Betti numbers of a space, stored as the coefficient vector of
/// `P(t) = sum_i beta_i t^i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoincarePolynomial {
    coefficients: Vec<BigUint>,
}

impl PoincarePolynomial {
    /// Coefficients indexed by degree; the last one is nonzero unless the
    /// polynomial is the zero-space convention `[0]`.
    pub fn coefficients(&self) -> &[BigUint] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// `beta_i`, zero beyond the stored degree.
    pub fn coefficient(&self, i: usize) -> BigUint {
        self.coefficients.get(i).cloned().unwrap_or_default()
    }

    /// Alternating sum of the coefficients.
    pub fn euler_characteristic(&self) -> BigInt {
        let mut chi = BigInt::zero();
        for (i, c) in self.coefficients.iter().enumerate() {
            let term = BigInt::from(c.clone());
            if i % 2 == 0 {
                chi += term;
            } else {
                chi -= term;
            }
        }
        chi
    }
}

impl fmt::Display for PoincarePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coefficients.iter().enumerate() {
            if c.is_zero() && !(i == 0 && self.coefficients.len() == 1) {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                _ => {
                    if !c.is_one() {
                        write!(f, "{c}")?;
                    }
                    write!(f, "t")?;
                    if i > 1 {
                        write!(f, "^{i}")?;
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

pub fn factorial(m: usize) -> BigUint {
    (1..=m).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// The exact harmonic number `H_m = sum_{i=1}^m 1/i` (zero for `m = 0`).
pub fn harmonic(m: usize) -> BigRational {
    (1..=m)
        .map(|i| BigRational::new(BigInt::one(), BigInt::from(i)))
        .fold(BigRational::zero(), |acc, x| acc + x)
}

/// Poincare polynomial of the configuration space of `n` labeled points in
/// `R^d`: the product `prod_{i=1}^{n-1} (1 + i t^{d-1})`.
///
/// The top coefficient is `(n-1)!` and the next nonzero one below it is
/// `(n-1)! H_{n-1}`, which the expansion is checked against.
pub fn poincare_conf(n: usize, d: usize) -> Result<PoincarePolynomial, TopoError> {
    if n < 1 || d < 2 {
        return Err(TopoError::BadDimensions { n, d });
    }
    let step = d - 1;
    let mut coeffs = vec![BigUint::zero(); (n - 1) * step + 1];
    coeffs[0] = BigUint::one();
    for i in 1..n {
        // multiply in place by (1 + i t^step), highest degree first
        for j in (step..=i * step).rev() {
            let add = &coeffs[j - step] * BigUint::from(i);
            coeffs[j] += add;
        }
    }

    if n >= 2 {
        let sub_top = BigRational::from(BigInt::from(factorial(n - 1))) * harmonic(n - 1);
        assert!(sub_top.is_integer(), "(n-1)! H_(n-1) must be integral");
        assert_eq!(
            BigInt::from(coeffs[(n - 2) * step].clone()),
            sub_top.to_integer(),
            "sub-top coefficient must equal (n-1)! H_(n-1)"
        );
        assert_eq!(coeffs[(n - 1) * step], factorial(n - 1));
    }
    Ok(PoincarePolynomial {
        coefficients: coeffs,
    })
}

/// Number of box sides achieving the minimal length.
pub fn k_multiplicity(domain: &BoxDomain) -> usize {
    let min = domain.shortest_side();
    domain.lengths().iter().filter(|&&l| l == min).count()
}

/// Betti tables on both sides of the threshold, plus the cell counts
/// explaining their difference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BettiTables {
    /// Betti numbers just below `r*` (those of the point configuration
    /// space), indexed by degree up to `N = (n-1)(d-1)`.
    pub below: PoincarePolynomial,
    /// Betti numbers just above `r*`: unchanged through degree `N-2`,
    /// a closed-form value at `N-1`, zero from `N` on.
    pub above: PoincarePolynomial,
    /// Cells of dimension `N` attached when crossing down: `k * n!`.
    pub cells_attached: BigUint,
    /// How many of those cells raise `beta_N` below the threshold
    /// (the rest lower `beta_{N-1}` above): `(n-1)!`.
    pub cells_to_betti_n: BigUint,
}

/// Betti numbers on both sides of `r* = L/2n` for a box whose minimal side
/// has multiplicity `k`.
///
/// The degree `N-1` entry above the threshold is
/// `(H_{n-1} + kn - 1)(n-1)!` in the plane and `(kn - 1)(n-1)!` for
/// `d >= 3`; both are exactly integral. The tables presume the straight
/// chains are the only balanced configurations at `r*`, the situation for
/// a rectangular box.
pub fn betti_across_threshold(n: usize, d: usize, k: usize) -> Result<BettiTables, TopoError> {
    if n < 2 {
        return Err(TopoError::TooFewSpheres { n });
    }
    if d < 2 {
        return Err(TopoError::BadDimensions { n, d });
    }
    if k < 1 || k > d {
        return Err(TopoError::BadMultiplicity { k, d });
    }
    let below = poincare_conf(n, d)?;
    let n_top = (n - 1) * (d - 1);

    let fact = BigRational::from(BigInt::from(factorial(n - 1)));
    let kn_minus_1 = BigRational::from(BigInt::from(k * n - 1));
    let new_subtop = if d == 2 {
        (harmonic(n - 1) + kn_minus_1) * fact
    } else {
        kn_minus_1 * fact
    };
    assert!(
        new_subtop.is_integer() && !new_subtop.is_negative(),
        "degree N-1 count must be a nonnegative integer"
    );

    let mut above = below.coefficients.clone();
    for (degree, c) in above.iter_mut().enumerate() {
        if degree + 1 == n_top {
            *c = new_subtop.to_integer().to_biguint().unwrap();
        } else if degree >= n_top {
            *c = BigUint::zero();
        }
    }
    Ok(BettiTables {
        below,
        above: PoincarePolynomial {
            coefficients: above,
        },
        cells_attached: BigUint::from(k) * factorial(n),
        cells_to_betti_n: factorial(n - 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nums(p: &PoincarePolynomial) -> Vec<u64> {
        p.coefficients()
            .iter()
            .map(|c| u64::try_from(c).unwrap())
            .collect()
    }

    #[test]
    fn poincare_examples() {
        assert_eq!(nums(&poincare_conf(3, 2).unwrap()), vec![1, 3, 2]);
        assert_eq!(nums(&poincare_conf(1, 2).unwrap()), vec![1]);
        assert_eq!(nums(&poincare_conf(1, 5).unwrap()), vec![1]);
        assert_eq!(nums(&poincare_conf(3, 3).unwrap()), vec![1, 0, 3, 0, 2]);
    }

    #[test]
    fn poincare_rejects_bad_dimensions() {
        assert!(poincare_conf(0, 2).is_err());
        assert!(poincare_conf(3, 1).is_err());
    }

    /// Unsigned Stirling numbers of the first kind give an independent route
    /// to the same coefficients: the factor count of `t` in
    /// `x(x+1)...(x+m-1)` equals `e_j(1..m-1)` per degree.
    fn stirling_row(m: usize) -> Vec<u64> {
        // coefficients of prod_{i=0}^{m-1} (x + i) in ascending powers of x
        let mut row = vec![1u64];
        for i in 0..m {
            let mut next = vec![0u64; row.len() + 1];
            for (p, &c) in row.iter().enumerate() {
                next[p + 1] += c;
                next[p] += c * i as u64;
            }
            row = next;
        }
        row
    }

    #[test]
    fn poincare_matches_stirling_expansion() {
        for n in 1..=8usize {
            // x(x+1)...(x+n-1) = sum_j c(n, j) x^j, so the coefficient of
            // x^{n-j} is e_j(1..n-1), which lands at degree j(d-1)
            let row = stirling_row(n);
            for d in 2..=4usize {
                let mut want = vec![0u64; (n - 1) * (d - 1) + 1];
                for j in 0..n {
                    want[j * (d - 1)] = row[n - j];
                }
                assert_eq!(nums(&poincare_conf(n, d).unwrap()), want, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic(2), BigRational::new(3.into(), 2.into()));
        assert_eq!(harmonic(0), BigRational::zero());
        assert_eq!(harmonic(4), BigRational::new(25.into(), 12.into()));
    }

    #[test]
    fn multiplicity_counts_minimal_sides() {
        let k = |sides: &[f64]| k_multiplicity(&BoxDomain::new(sides.to_vec()).unwrap());
        assert_eq!(k(&[1.0, 2.0]), 1);
        assert_eq!(k(&[1.0, 1.0, 2.0]), 2);
        assert_eq!(k(&[1.0, 1.0, 1.0]), 3);
    }

    #[test]
    fn betti_tables_examples() {
        let t = betti_across_threshold(2, 2, 1).unwrap();
        assert_eq!(nums(&t.below), vec![1, 1]);
        assert_eq!(nums(&t.above), vec![2, 0]);
        assert_eq!(t.cells_attached, BigUint::from(2u32));
        assert_eq!(t.cells_to_betti_n, BigUint::one());

        let t = betti_across_threshold(2, 3, 1).unwrap();
        assert_eq!(nums(&t.above), vec![1, 1, 0]);

        let t = betti_across_threshold(3, 2, 1).unwrap();
        assert_eq!(nums(&t.above), vec![1, 7, 0]);
        assert_eq!(t.cells_attached, BigUint::from(6u32));
        assert_eq!(t.cells_to_betti_n, BigUint::from(2u32));
    }

    #[test]
    fn betti_parameter_errors() {
        assert!(matches!(
            betti_across_threshold(1, 2, 1),
            Err(TopoError::TooFewSpheres { n: 1 })
        ));
        assert!(matches!(
            betti_across_threshold(2, 1, 1),
            Err(TopoError::BadDimensions { .. })
        ));
        for k in [0, 3] {
            assert!(matches!(
                betti_across_threshold(2, 2, k),
                Err(TopoError::BadMultiplicity { .. })
            ));
        }
    }

    /// Attaching `k n!` cells of dimension `N` changes the Euler
    /// characteristic by exactly `(-1)^N k n!`.
    #[test]
    fn euler_characteristic_bookkeeping() {
        for n in 2..=6usize {
            for d in 2..=4usize {
                for k in 1..=d {
                    let t = betti_across_threshold(n, d, k).unwrap();
                    let diff =
                        t.below.euler_characteristic() - t.above.euler_characteristic();
                    let n_top = (n - 1) * (d - 1);
                    let mut want = BigInt::from(t.cells_attached.clone());
                    if n_top % 2 == 1 {
                        want = -want;
                    }
                    assert_eq!(diff, want, "n={n} d={d} k={k}");
                }
            }
        }
    }

    #[test]
    fn tables_agree_below_the_top_two_degrees() {
        for n in 2..=6usize {
            for d in 2..=3usize {
                let t = betti_across_threshold(n, d, 1).unwrap();
                let n_top = (n - 1) * (d - 1);
                for deg in 0..n_top.saturating_sub(1) {
                    assert_eq!(t.below.coefficient(deg), t.above.coefficient(deg));
                }
                for deg in n_top..=t.above.degree() {
                    assert!(t.above.coefficient(deg).is_zero());
                }
            }
        }
    }

    #[test]
    fn polynomial_display() {
        assert_eq!(poincare_conf(3, 2).unwrap().to_string(), "1 + 3t + 2t^2");
        assert_eq!(poincare_conf(3, 3).unwrap().to_string(), "1 + 3t^2 + 2t^4");
        assert_eq!(poincare_conf(1, 2).unwrap().to_string(), "1");
        assert_eq!(poincare_conf(2, 2).unwrap().to_string(), "1 + t");
    }
}
