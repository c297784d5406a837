//! Seeded random generators for lattice objects.

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::linalg::IntegerMatrix;
use crate::polytope::{AffineUnimodularMap, LatticePolytope, LatticeSimplex, Point};

/// Product of `steps` random elementary operations (row additions with
/// multipliers in `-2..=2`, swaps and sign flips).
pub fn unimodular_matrix<R: Rng + ?Sized>(n: usize, steps: usize, rng: &mut R) -> IntegerMatrix {
    let mut m = IntegerMatrix::identity(n);
    if n == 0 {
        return m;
    }
    for _ in 0..steps {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        match rng.gen_range(0..4) {
            0 | 1 if i != j => {
                let k: i64 = *[-2, -1, 1, 2].choose(rng).unwrap();
                for c in 0..n {
                    let v = m.get(i, c) + m.get(j, c) * k;
                    m.set(i, c, v);
                }
            }
            2 if i != j => {
                for c in 0..n {
                    let a = m.get(i, c).clone();
                    let b = m.get(j, c).clone();
                    m.set(i, c, b);
                    m.set(j, c, a);
                }
            }
            _ => {
                for c in 0..n {
                    let v = -m.get(i, c);
                    m.set(i, c, v);
                }
            }
        }
    }
    m
}

pub fn affine_map<R: Rng + ?Sized>(n: usize, rng: &mut R) -> AffineUnimodularMap {
    let linear = unimodular_matrix(n, 3 * n + 2, rng);
    let translation = (0..n)
        .map(|_| BigInt::from(rng.gen_range(-5i64..=5)))
        .collect();
    AffineUnimodularMap::new(linear, translation).expect("product of elementary matrices")
}

pub fn lattice_point<R: Rng + ?Sized>(n: usize, lo: i64, hi: i64, rng: &mut R) -> Point {
    (0..n)
        .map(|_| BigInt::from(rng.gen_range(lo..=hi)))
        .collect()
}

/// Rejection-samples a full-dimensional simplex with coordinates in `lo..=hi`.
pub fn simplex<R: Rng + ?Sized>(n: usize, lo: i64, hi: i64, rng: &mut R) -> LatticeSimplex {
    loop {
        let vertices = (0..=n).map(|_| lattice_point(n, lo, hi, rng)).collect();
        if let Ok(s) = LatticeSimplex::new(vertices) {
            return s;
        }
    }
}

/// Rejection-samples a full-dimensional polytope spanned by `points` random
/// points.
pub fn polytope<R: Rng + ?Sized>(
    n: usize,
    points: usize,
    lo: i64,
    hi: i64,
    rng: &mut R,
) -> LatticePolytope {
    loop {
        let pts = (0..points.max(n + 1))
            .map(|_| lattice_point(n, lo, hi, rng))
            .collect();
        if let Ok(p) = LatticePolytope::new(n, pts) {
            return p;
        }
    }
}

/// Random permutation of `0..len`.
pub fn permutation<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..len).collect();
    p.shuffle(rng);
    p
}

/// `U(S)` with its vertices shuffled.
pub fn shuffled_image<R: Rng + ?Sized>(
    s: &LatticeSimplex,
    u: &AffineUnimodularMap,
    rng: &mut R,
) -> LatticeSimplex {
    let image = u.apply_simplex(s).expect("matching dimension");
    image.reorder(&permutation(image.vertices().len(), rng))
}
