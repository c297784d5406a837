//! Lattice-point counting and Ehrhart polynomials of integral polytopes.
//!
//! Counting scans the bounding box of `kP` one coordinate at a time. Each
//! coordinate's range is narrowed by propagating the facet inequalities over
//! the remaining box, and the last (widest) coordinate is never scanned: its
//! feasible values form an interval whose length is read off directly.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hull::{self, HalfSpace, Mode};
use crate::linalg::{factorial, fmt_rational, Rational};
use crate::polytope::LatticePolytope;

/// Upper limit on the number of one-dimensional fibers scanned by a single
/// count.
pub const MAX_FIBERS: u128 = 50_000_000;

/// `L_P(t) = c_n t^n + ... + c_1 t + c_0` with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EhrhartPolynomial {
    /// `(c_n, c_{n-1}, ..., c_0)`
    coefficients: Vec<Rational>,
}

impl EhrhartPolynomial {
    /// Coefficients from the leading one down to the constant term.
    pub fn from_coefficients(coefficients: Vec<Rational>) -> Self {
        assert!(!coefficients.is_empty());
        EhrhartPolynomial { coefficients }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    /// Coefficient of `t^i`.
    pub fn coefficient(&self, i: usize) -> &Rational {
        &self.coefficients[self.degree() - i]
    }

    pub fn leading(&self) -> &Rational {
        &self.coefficients[0]
    }

    pub fn evaluate(&self, t: &BigInt) -> Rational {
        let t = Rational::from_integer(t.clone());
        self.coefficients
            .iter()
            .fold(Rational::zero(), |acc, c| acc * &t + c)
    }

    pub fn evaluate_i64(&self, t: i64) -> Rational {
        self.evaluate(&BigInt::from(t))
    }

    /// The polynomial `t -> L(k t)`.
    pub fn dilate(&self, k: u64) -> Self {
        let n = self.degree();
        let k = Rational::from_integer(BigInt::from(k));
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| c * num_traits::pow(k.clone(), n - i))
            .collect();
        EhrhartPolynomial { coefficients }
    }
}

/// Renders as `1/6 t^4 + t^3 + 7/3 t^2 + 5/2 t + 1`.
impl fmt::Display for EhrhartPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.degree();
        let mut first = true;
        for (i, c) in self.coefficients.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let power = n - i;
            let magnitude = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c.is_negative() { "-" } else { "+" })?;
            }
            first = false;
            let unit = magnitude.is_one();
            match (power, unit) {
                (0, _) => write!(f, "{}", fmt_rational(&magnitude))?,
                (_, true) => {}
                (_, false) => write!(f, "{} ", fmt_rational(&magnitude))?,
            }
            match power {
                0 => {}
                1 => write!(f, "t")?,
                _ => write!(f, "t^{power}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Number of points of `Z^n` in `kP` (closed) or in its interior.
pub fn count_points(p: &LatticePolytope, k: u64, mode: Mode) -> Result<BigInt> {
    if k == 0 {
        return Ok(match mode {
            Mode::Closed => BigInt::one(),
            Mode::Interior => BigInt::zero(),
        });
    }
    let k_big = BigInt::from(k);
    let facets = p.facets()?;
    let (lo, hi) = p.bounding_box();
    let ranges: Vec<BigInt> = hi.iter().zip(&lo).map(|(h, l)| (h - l) * &k_big).collect();
    let lo: Vec<BigInt> = lo.iter().map(|x| x * &k_big).collect();

    // Translate kP so its bounding box starts at the origin: a·(y + lo) <= k·β.
    let shift = BigInt::from(u8::from(mode == Mode::Interior));
    let rhs: Vec<BigInt> = facets
        .iter()
        .map(|h| &h.offset * &k_big - crate::linalg::dot(&h.normal, &lo) - &shift)
        .collect();

    // Scan narrow coordinates, solve the widest one.
    let mut order: Vec<usize> = (0..p.dim()).collect();
    order.sort_by(|&a, &b| ranges[a].cmp(&ranges[b]).then(a.cmp(&b)));

    let fibers: BigInt = order[..order.len() - 1]
        .iter()
        .map(|&i| &ranges[i] + 1)
        .product();
    if fibers > BigInt::from(MAX_FIBERS) {
        return Err(Error::Capacity(format!(
            "counting {k}P would scan {fibers} fibers (limit {MAX_FIBERS})"
        )));
    }

    if fits_i128(facets, &rhs, &ranges) {
        let normals: Vec<Vec<i128>> = facets
            .iter()
            .map(|h| h.normal.iter().map(|x| x.to_i128().unwrap()).collect())
            .collect();
        let rhs: Vec<i128> = rhs.iter().map(|x| x.to_i128().unwrap()).collect();
        let ranges: Vec<i128> = ranges.iter().map(|x| x.to_i128().unwrap()).collect();
        Ok(BigInt::from(
            FiberScan::new(&normals, &rhs, &ranges, &order).count(),
        ))
    } else {
        let normals: Vec<Vec<BigInt>> = facets.iter().map(|h| h.normal.clone()).collect();
        Ok(FiberScan::new(&normals, &rhs, &ranges, &order).count())
    }
}

/// Whether every intermediate sum of the scan is far inside `i128`.
fn fits_i128(facets: &[HalfSpace], rhs: &[BigInt], ranges: &[BigInt]) -> bool {
    let limit = BigInt::one() << 120;
    let volume_bound: BigInt = ranges.iter().map(|r| r + 1).product();
    volume_bound < limit
        && facets.iter().zip(rhs).all(|(h, b)| {
            let reach: BigInt = h.normal.iter().zip(ranges).map(|(a, r)| a.abs() * r).sum();
            reach + b.abs() < limit
        })
}

/// Counts `y` in the box `0 <= y_i <= ranges_i` with `normals_f · y <= rhs_f`.
struct FiberScan<'a, T> {
    normals: &'a [Vec<T>],
    rhs: &'a [T],
    ranges: &'a [T],
    order: &'a [usize],
    /// `rest_min[l][f]`: least value of facet `f`'s left-hand side over the
    /// coordinates after level `l`.
    rest_min: Vec<Vec<T>>,
}

impl<'a, T> FiberScan<'a, T>
where
    T: Integer + Signed + Clone,
{
    fn new(normals: &'a [Vec<T>], rhs: &'a [T], ranges: &'a [T], order: &'a [usize]) -> Self {
        let levels = order.len();
        let mut rest_min = vec![vec![T::zero(); normals.len()]; levels];
        for l in (0..levels.saturating_sub(1)).rev() {
            let c = order[l + 1];
            for (f, a) in normals.iter().enumerate() {
                let contribution = if a[c].is_negative() {
                    a[c].clone() * ranges[c].clone()
                } else {
                    T::zero()
                };
                rest_min[l][f] = rest_min[l + 1][f].clone() + contribution;
            }
        }
        FiberScan {
            normals,
            rhs,
            ranges,
            order,
            rest_min,
        }
    }

    fn count(&self) -> T {
        let mut partial = vec![T::zero(); self.normals.len()];
        self.level(0, &mut partial)
    }

    fn level(&self, l: usize, partial: &mut [T]) -> T {
        let c = self.order[l];
        let mut lo = T::zero();
        let mut hi = self.ranges[c].clone();
        for (f, a) in self.normals.iter().enumerate() {
            let slack = self.rhs[f].clone() - partial[f].clone() - self.rest_min[l][f].clone();
            let a = &a[c];
            if a.is_positive() {
                hi = hi.min(slack.div_floor(a));
            } else if a.is_negative() {
                // a·y <= slack  <=>  y >= ceil(slack / a)
                let bound = -((-slack).div_floor(a));
                lo = lo.max(bound);
            } else if slack.is_negative() {
                return T::zero();
            }
            if lo > hi {
                return T::zero();
            }
        }
        if l + 1 == self.order.len() {
            return hi - lo + T::one();
        }
        let mut total = T::zero();
        let steps: Vec<T> = self.normals.iter().map(|a| a[c].clone()).collect();
        for (f, step) in steps.iter().enumerate() {
            partial[f] = partial[f].clone() + step.clone() * lo.clone();
        }
        let mut y = lo;
        loop {
            total = total + self.level(l + 1, partial);
            if y == hi {
                break;
            }
            y = y + T::one();
            for (f, step) in steps.iter().enumerate() {
                partial[f] = partial[f].clone() + step.clone();
            }
        }
        for (f, step) in steps.iter().enumerate() {
            partial[f] = partial[f].clone() - step.clone() * y.clone();
        }
        total
    }
}

/// Unique polynomial of degree `< points.len()` through `(x_i, y_i)`.
fn interpolate(points: &[(i64, BigInt)]) -> Vec<Rational> {
    let m = points.len();
    // Ascending coefficients.
    let mut result = vec![Rational::zero(); m];
    for (i, (xi, yi)) in points.iter().enumerate() {
        let mut basis = vec![Rational::one()];
        let mut denom = BigInt::one();
        for (j, (xj, _)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            // basis *= (t - xj)
            let mut next = vec![Rational::zero(); basis.len() + 1];
            for (d, c) in basis.iter().enumerate() {
                next[d + 1] += c;
                next[d] -= c * Rational::from_integer(BigInt::from(*xj));
            }
            basis = next;
            denom *= BigInt::from(xi - xj);
        }
        let scale = Rational::new(yi.clone(), denom);
        for (d, c) in basis.iter().enumerate() {
            result[d] += c * &scale;
        }
    }
    result.reverse();
    result
}

/// Ehrhart polynomial by interpolating lattice counts of `kP`, `k = 1..=n+1`.
///
/// The result is checked against `L(0) = 1`, against the triangulated volume
/// for the leading coefficient and against a fresh count at `k = n + 2`;
/// any mismatch is reported as [`Error::Internal`].
pub fn ehrhart_polynomial(p: &LatticePolytope) -> Result<EhrhartPolynomial> {
    let n = p.dim();
    let counts: Vec<(i64, BigInt)> = (1..=n as u64 + 2)
        .into_par_iter()
        .map(|k| Ok((k as i64, count_points(p, k, Mode::Closed)?)))
        .collect::<Result<_>>()?;
    let poly = EhrhartPolynomial::from_coefficients(interpolate(&counts[..=n]));

    if !poly.evaluate_i64(0).is_one() {
        return Err(Error::Internal(format!(
            "interpolated L(0) = {}, expected 1",
            poly.evaluate_i64(0)
        )));
    }
    let (k_check, expected) = &counts[n + 1];
    if poly.evaluate_i64(*k_check) != Rational::from_integer(expected.clone()) {
        return Err(Error::Internal(format!(
            "interpolated L({k_check}) disagrees with direct count {expected}"
        )));
    }
    let cells = hull::triangulate(p)?.normalized_volume();
    if poly.leading() * Rational::from_integer(factorial(n))
        != Rational::from_integer(cells.clone())
    {
        return Err(Error::Internal(format!(
            "leading coefficient {} disagrees with triangulated normalized volume {cells}",
            poly.leading()
        )));
    }
    Ok(poly)
}

/// Checks `L(-k) = (-1)^n · #(interior of kP)` for `k = 1..=k_max`.
pub fn reciprocity_check(p: &LatticePolytope, k_max: u64) -> Result<bool> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let poly = ehrhart_polynomial(p)?;
    let sign = if p.dim().is_multiple_of(2) {
        BigInt::one()
    } else {
        -BigInt::one()
    };
    for k in 1..=k_max {
        let interior = count_points(p, k, Mode::Interior)?;
        if poly.evaluate(&-BigInt::from(k)) != Rational::from_integer(&sign * interior) {
            return Ok(false);
        }
    }
    Ok(true)
}
