//! Integral polytopes, simplices and affine-unimodular maps.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::hull::{self, HalfSpace};
use crate::linalg::{dot, IntegerMatrix};

/// A point of `Z^n`.
pub type Point = Vec<BigInt>;

pub fn point(coords: &[i64]) -> Point {
    coords.iter().map(|&x| BigInt::from(x)).collect()
}

/// Full-dimensional integral polytope stored by its vertices.
///
/// The vertex list is irredundant and kept in insertion order. Two polytopes
/// compare equal when their vertex *sets* agree.
pub struct LatticePolytope {
    dim: usize,
    vertices: Vec<Point>,
    facets: OnceLock<Vec<HalfSpace>>,
}

impl Clone for LatticePolytope {
    fn clone(&self) -> Self {
        LatticePolytope {
            dim: self.dim,
            vertices: self.vertices.clone(),
            facets: self.facets.clone(),
        }
    }
}

impl LatticePolytope {
    /// Validates a vertex list: collapses duplicates, drops points that are
    /// not vertices of the hull and rejects anything lower-dimensional.
    pub fn new(dim: usize, points: Vec<Point>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::Dimension(format!(
                "point of length {} in a {dim}-dimensional polytope",
                bad.len()
            )));
        }
        let mut unique: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if !unique.contains(&p) {
                unique.push(p);
            }
        }
        if unique.len() < dim + 1 || affine_rank(&unique) < dim {
            return Err(Error::Degenerate(format!(
                "{} distinct points do not span a {dim}-dimensional polytope",
                unique.len()
            )));
        }
        if unique.len() == dim + 1 {
            return Ok(Self::from_vertices_unchecked(dim, unique));
        }

        let facets = hull::facets_of_points(dim, &unique)?;
        let vertices: Vec<Point> = unique
            .into_iter()
            .filter(|p| {
                let active: Vec<Vec<BigInt>> = facets
                    .iter()
                    .filter(|h| dot(&h.normal, p) == h.offset)
                    .map(|h| h.normal.clone())
                    .collect();
                !active.is_empty()
                    && IntegerMatrix::from_rows(active).is_ok_and(|m| m.rank() == dim)
            })
            .collect();
        let polytope = Self::from_vertices_unchecked(dim, vertices);
        let _ = polytope.facets.set(facets);
        Ok(polytope)
    }

    pub fn from_i64(dim: usize, points: &[&[i64]]) -> Result<Self> {
        Self::new(dim, points.iter().map(|p| point(p)).collect())
    }

    /// Caller guarantees the points are distinct, irredundant and spanning.
    pub(crate) fn from_vertices_unchecked(dim: usize, vertices: Vec<Point>) -> Self {
        LatticePolytope {
            dim,
            vertices,
            facets: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_simplex(&self) -> bool {
        self.vertices.len() == self.dim + 1
    }

    pub fn sorted_vertices(&self) -> Vec<Point> {
        let mut v = self.vertices.clone();
        v.sort();
        v
    }

    /// Irredundant H-representation, computed once and cached.
    pub fn facets(&self) -> Result<&[HalfSpace]> {
        if let Some(f) = self.facets.get() {
            return Ok(f);
        }
        let computed = hull::facets_of_points(self.dim, &self.vertices)?;
        Ok(self.facets.get_or_init(|| computed))
    }

    pub fn to_simplex(&self) -> Result<LatticeSimplex> {
        LatticeSimplex::try_from(self.clone())
    }

    /// Every vertex multiplied by `k`.
    pub fn dilate(&self, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument(
                "dilation factor must be positive".into(),
            ));
        }
        let k = BigInt::from(k);
        let vertices = self
            .vertices
            .iter()
            .map(|v| v.iter().map(|x| x * &k).collect())
            .collect();
        Ok(Self::from_vertices_unchecked(self.dim, vertices))
    }

    pub fn translate(&self, shift: &[BigInt]) -> Self {
        assert_eq!(shift.len(), self.dim);
        let vertices = self
            .vertices
            .iter()
            .map(|v| v.iter().zip(shift).map(|(a, b)| a + b).collect())
            .collect();
        Self::from_vertices_unchecked(self.dim, vertices)
    }

    /// Coordinate-wise minimum and maximum over the vertices.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = self.vertices[0].clone();
        let mut hi = self.vertices[0].clone();
        for v in &self.vertices[1..] {
            for i in 0..self.dim {
                if v[i] < lo[i] {
                    lo[i] = v[i].clone();
                }
                if v[i] > hi[i] {
                    hi[i] = v[i].clone();
                }
            }
        }
        (lo, hi)
    }
}

impl PartialEq for LatticePolytope {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.sorted_vertices() == other.sorted_vertices()
    }
}

impl Eq for LatticePolytope {}

impl Hash for LatticePolytope {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.dim.hash(state);
        self.sorted_vertices().hash(state);
    }
}

impl fmt::Debug for LatticePolytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conv{{")?;
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", fmt_point(v))?;
        }
        write!(f, "}}")
    }
}

pub fn fmt_point(p: &[BigInt]) -> String {
    let parts: Vec<String> = p.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(","))
}

/// Dimension of the affine hull of `points`.
pub fn affine_rank(points: &[Point]) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let base = &points[0];
    let rows: Vec<Vec<BigInt>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    IntegerMatrix::from_rows(rows).map_or(0, |m| m.rank())
}

/// A full-dimensional `n`-simplex in `R^n`: exactly `n + 1` vertices with a
/// nonsingular definition matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LatticeSimplex(LatticePolytope);

impl LatticeSimplex {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let dim = vertices
            .len()
            .checked_sub(1)
            .filter(|&d| d >= 1)
            .ok_or_else(|| Error::Degenerate("a simplex needs at least two vertices".into()))?;
        let polytope = LatticePolytope::new(dim, vertices)?;
        LatticeSimplex::try_from(polytope)
    }

    pub fn from_i64(points: &[&[i64]]) -> Result<Self> {
        Self::new(points.iter().map(|p| point(p)).collect())
    }

    pub(crate) fn from_vertices_unchecked(vertices: Vec<Point>) -> Self {
        let dim = vertices.len() - 1;
        LatticeSimplex(LatticePolytope::from_vertices_unchecked(dim, vertices))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.0.vertices
    }

    pub fn as_polytope(&self) -> &LatticePolytope {
        &self.0
    }

    pub fn into_polytope(self) -> LatticePolytope {
        self.0
    }

    /// Columns are the vertices in stored order with a trailing row of ones.
    pub fn definition_matrix(&self) -> DefinitionMatrix {
        let n = self.dim();
        let m = IntegerMatrix::from_fn(n + 1, n + 1, |r, c| {
            if r == n {
                BigInt::one()
            } else {
                self.vertices()[c][r].clone()
            }
        });
        DefinitionMatrix(m)
    }

    /// `|det D_S|`, i.e. `n!` times the Euclidean volume.
    pub fn normalized_volume(&self) -> BigInt {
        self.definition_matrix().det().abs()
    }

    pub fn is_unimodular(&self) -> bool {
        self.normalized_volume().is_one()
    }

    /// Same simplex with vertices reordered so that vertex `i` is the old
    /// vertex `perm[i]`.
    pub fn reorder(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.vertices().len());
        Self::from_vertices_unchecked(perm.iter().map(|&i| self.vertices()[i].clone()).collect())
    }

    pub fn dilate(&self, k: u64) -> Result<Self> {
        Ok(LatticeSimplex(self.0.dilate(k)?))
    }

    /// Zero-pads every vertex to length `n` and appends `e_{d+1}, ..., e_n`.
    pub fn pyramid_lift(&self, n: usize) -> Result<LatticeSimplex> {
        let d = self.dim();
        if n <= d {
            return Err(Error::InvalidArgument(format!(
                "target dimension {n} must exceed the simplex dimension {d}"
            )));
        }
        let mut vertices: Vec<Point> = self
            .vertices()
            .iter()
            .map(|v| {
                let mut p = v.clone();
                p.resize(n, BigInt::zero());
                p
            })
            .collect();
        for i in d..n {
            let mut e = vec![BigInt::zero(); n];
            e[i] = BigInt::one();
            vertices.push(e);
        }
        Ok(Self::from_vertices_unchecked(vertices))
    }
}

impl TryFrom<LatticePolytope> for LatticeSimplex {
    type Error = Error;

    fn try_from(p: LatticePolytope) -> Result<Self> {
        if !p.is_simplex() {
            return Err(Error::InvalidArgument(format!(
                "polytope has {} vertices; a {}-simplex has {}",
                p.num_vertices(),
                p.dim,
                p.dim + 1
            )));
        }
        let s = LatticeSimplex(p);
        if s.definition_matrix().det().is_zero() {
            return Err(Error::Degenerate("singular definition matrix".into()));
        }
        Ok(s)
    }
}

impl fmt::Debug for LatticeSimplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `(n+1) x (n+1)` matrix whose columns are the vertices of a simplex with a
/// final row of ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefinitionMatrix(IntegerMatrix);

impl DefinitionMatrix {
    pub fn matrix(&self) -> &IntegerMatrix {
        &self.0
    }

    pub fn det(&self) -> BigInt {
        self.0.det().expect("definition matrix is square")
    }
}

/// `v -> A v + b` with `A` an integer matrix of determinant `±1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineUnimodularMap {
    linear: IntegerMatrix,
    translation: Vec<BigInt>,
}

impl AffineUnimodularMap {
    pub fn new(linear: IntegerMatrix, translation: Vec<BigInt>) -> Result<Self> {
        if !linear.is_square() || linear.rows() != translation.len() {
            return Err(Error::Dimension(format!(
                "linear part {}x{} with translation of length {}",
                linear.rows(),
                linear.cols(),
                translation.len()
            )));
        }
        let det = linear.det()?;
        if !det.abs().is_one() {
            return Err(Error::InvalidArgument(format!(
                "linear part has determinant {det}, expected ±1"
            )));
        }
        Ok(AffineUnimodularMap {
            linear,
            translation,
        })
    }

    pub fn identity(n: usize) -> Self {
        AffineUnimodularMap {
            linear: IntegerMatrix::identity(n),
            translation: vec![BigInt::zero(); n],
        }
    }

    pub fn translation_by(shift: Vec<BigInt>) -> Self {
        AffineUnimodularMap {
            linear: IntegerMatrix::identity(shift.len()),
            translation: shift,
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn linear(&self) -> &IntegerMatrix {
        &self.linear
    }

    pub fn translation(&self) -> &[BigInt] {
        &self.translation
    }

    pub fn apply_point(&self, v: &[BigInt]) -> Point {
        (0..self.dim())
            .map(|r| dot(self.linear.row(r), v) + &self.translation[r])
            .collect()
    }

    /// Image polytope, vertex order preserved.
    pub fn apply(&self, p: &LatticePolytope) -> Result<LatticePolytope> {
        if p.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "map on R^{} applied to a polytope in R^{}",
                self.dim(),
                p.dim()
            )));
        }
        let vertices = p.vertices().iter().map(|v| self.apply_point(v)).collect();
        Ok(LatticePolytope::from_vertices_unchecked(p.dim(), vertices))
    }

    pub fn apply_simplex(&self, s: &LatticeSimplex) -> Result<LatticeSimplex> {
        Ok(LatticeSimplex(self.apply(s.as_polytope())?))
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &AffineUnimodularMap) -> Self {
        let linear = crate::linalg::matmul(&self.linear, &inner.linear).expect("same dimension");
        let translation = self.apply_point(&inner.translation);
        AffineUnimodularMap {
            linear,
            translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let linear = self
            .linear
            .invert()
            .ok()
            .and_then(|m| m.to_integer())
            .expect("inverse of a unimodular matrix is integral");
        let inv = AffineUnimodularMap {
            linear,
            translation: vec![BigInt::zero(); self.dim()],
        };
        let back = inv.apply_point(&self.translation);
        AffineUnimodularMap {
            translation: back.into_iter().map(|x| -x).collect(),
            ..inv
        }
    }

    /// Extends a map on `R^d` to `R^n` so that it commutes with
    /// [`LatticeSimplex::pyramid_lift`].
    ///
    /// The linear part is `[[M, -b ... -b], [0, I]]` and the translation is
    /// `(b, 0, ..., 0)`, so each apex `e_j` is fixed.
    pub fn lift(&self, n: usize) -> Result<Self> {
        let d = self.dim();
        match n.cmp(&d) {
            Ordering::Less => {
                return Err(Error::InvalidArgument(format!(
                    "cannot lift a map on R^{d} to R^{n}"
                )))
            }
            Ordering::Equal => return Ok(self.clone()),
            Ordering::Greater => {}
        }
        let linear = IntegerMatrix::from_fn(n, n, |r, c| match (r < d, c < d) {
            (true, true) => self.linear.get(r, c).clone(),
            (true, false) => -&self.translation[r],
            (false, true) => BigInt::zero(),
            (false, false) => BigInt::from(u8::from(r == c)),
        });
        let mut translation = self.translation.clone();
        translation.resize(n, BigInt::zero());
        AffineUnimodularMap::new(linear, translation)
    }
}
