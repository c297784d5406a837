//! Unimodular equivalence of lattice simplices by permutation search over
//! definition matrices.
//!
//! For simplices `S`, `T` with definition matrices `D_S`, `D_T` and a
//! permutation matrix `Π`, the matrix `N = (D_T Π) D_S^{-1}` maps the lifted
//! vertex `(s_i, 1)` to `(t_{π(i)}, 1)`. `S` and `T` are unimodularly
//! equivalent iff some `N` is integral with `det N = ±1`, in which case
//! `N = [[B, c], [0, 1]]` and `v -> B v + c` carries `S` onto `T`.

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::document::{bigint_to_json, json_to_bigint};
use crate::error::{Error, Result};
use crate::linalg::{dot, factorial, matmul, IntegerMatrix};
use crate::polytope::{AffineUnimodularMap, LatticeSimplex, Point};

/// Largest simplex dimension searched; `9!` permutations is the ceiling.
pub const MAX_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Integrality of `N` and `det N = ±1`.
    Full,
    /// Integrality only; requires equal normalized volumes, which is checked.
    EqualVolume,
}

/// `B s_i + c = t_{f(i)}` for every vertex `s_i` of the source.
///
/// The fields are kept raw so that untrusted witnesses (e.g. parsed from a
/// report) can be represented and rejected by [`verify_witness`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceWitness {
    pub linear: IntegerMatrix,
    pub translation: Point,
    /// `f`, zero-based: source vertex `i` goes to target vertex `f[i]`.
    pub vertex_bijection: Vec<usize>,
    /// `[[B, c], [0, 1]]`
    pub certificate_matrix: IntegerMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Equivalent(EquivalenceWitness),
    NotEquivalent { permutations_tried: u64 },
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent(_))
    }

    pub fn witness(&self) -> Option<&EquivalenceWitness> {
        match self {
            Verdict::Equivalent(w) => Some(w),
            Verdict::NotEquivalent { .. } => None,
        }
    }
}

fn block_matrix(linear: &IntegerMatrix, translation: &[BigInt]) -> IntegerMatrix {
    let n = translation.len();
    IntegerMatrix::from_fn(n + 1, n + 1, |r, c| match (r < n, c < n) {
        (true, true) => linear.get(r, c).clone(),
        (true, false) => translation[r].clone(),
        (false, true) => BigInt::zero(),
        (false, false) => BigInt::one(),
    })
}

impl EquivalenceWitness {
    pub fn from_map(map: &AffineUnimodularMap, vertex_bijection: Vec<usize>) -> Self {
        EquivalenceWitness {
            linear: map.linear().clone(),
            translation: map.translation().to_vec(),
            certificate_matrix: block_matrix(map.linear(), map.translation()),
            vertex_bijection,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_map(&AffineUnimodularMap::identity(n), (0..=n).collect())
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn map(&self) -> Result<AffineUnimodularMap> {
        AffineUnimodularMap::new(self.linear.clone(), self.translation.clone())
    }

    /// Witness for `T -> S`.
    pub fn inverse(&self) -> Result<Self> {
        let map = self.map()?.inverse();
        let mut f = vec![0; self.vertex_bijection.len()];
        for (i, &j) in self.vertex_bijection.iter().enumerate() {
            f[j] = i;
        }
        Ok(Self::from_map(&map, f))
    }

    /// Given `self: S -> T` and `next: T -> R`, the witness `S -> R`.
    pub fn then(&self, next: &EquivalenceWitness) -> Result<Self> {
        let map = next.map()?.compose(&self.map()?);
        let f = self
            .vertex_bijection
            .iter()
            .map(|&j| next.vertex_bijection[j])
            .collect();
        Ok(Self::from_map(&map, f))
    }

    pub fn to_json(&self) -> Value {
        let matrix = |m: &IntegerMatrix| -> Value {
            m.to_rows()
                .iter()
                .map(|row| row.iter().map(bigint_to_json).collect::<Vec<_>>())
                .collect()
        };
        json!({
            "linear": matrix(&self.linear),
            "translation": self.translation.iter().map(bigint_to_json).collect::<Vec<_>>(),
            "vertex_bijection": self.vertex_bijection,
            "certificate_matrix": matrix(&self.certificate_matrix),
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let bad = |what: &str| Error::Parse {
            line: 1,
            message: format!("witness field `{what}` is malformed"),
        };
        let vector = |v: &Value, what: &str| -> Result<Vec<BigInt>> {
            v.as_array()
                .ok_or_else(|| bad(what))?
                .iter()
                .map(|x| json_to_bigint(x).ok_or_else(|| bad(what)))
                .collect()
        };
        let matrix = |what: &str| -> Result<IntegerMatrix> {
            let rows = value
                .get(what)
                .and_then(Value::as_array)
                .ok_or_else(|| bad(what))?
                .iter()
                .map(|row| vector(row, what))
                .collect::<Result<Vec<_>>>()?;
            IntegerMatrix::from_rows(rows).map_err(|_| bad(what))
        };
        let translation = vector(
            value.get("translation").unwrap_or(&Value::Null),
            "translation",
        )?;
        let vertex_bijection = value
            .get("vertex_bijection")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("vertex_bijection"))?
            .iter()
            .map(|x| {
                x.as_u64()
                    .map(|i| i as usize)
                    .ok_or_else(|| bad("vertex_bijection"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EquivalenceWitness {
            linear: matrix("linear")?,
            translation,
            vertex_bijection,
            certificate_matrix: matrix("certificate_matrix")?,
        })
    }
}

fn check_dims(s: &LatticeSimplex, t: &LatticeSimplex) -> Result<usize> {
    if s.dim() != t.dim() {
        return Err(Error::Dimension(format!(
            "simplices of dimension {} and {}",
            s.dim(),
            t.dim()
        )));
    }
    if s.dim() > MAX_DIM {
        return Err(Error::Capacity(format!(
            "dimension {} exceeds the permutation search limit {MAX_DIM}",
            s.dim()
        )));
    }
    Ok(s.dim())
}

/// Searches permutations of `T`'s vertices in lexicographic order and
/// returns the first success.
pub fn check_equivalence(s: &LatticeSimplex, t: &LatticeSimplex, mode: Mode) -> Result<Verdict> {
    let n = check_dims(s, t)?;
    let d_s = s.definition_matrix();
    let d_t = t.definition_matrix();
    let det_s = d_s.det();
    if det_s.is_zero() {
        return Err(Error::Singular { det: det_s });
    }
    if mode == Mode::EqualVolume && det_s.abs() != d_t.det().abs() {
        return Err(Error::Precondition(format!(
            "equal-volume mode needs equal normalized volumes, got {} and {}",
            det_s.abs(),
            d_t.det().abs()
        )));
    }
    // D_S^{-1} = adj(D_S) / det D_S, so N is integral iff every entry of
    // (D_T Π) adj(D_S) is divisible by det D_S.
    let adj = d_s
        .matrix()
        .invert()?
        .map(|x| x * &det_s)
        .to_integer()
        .ok_or_else(|| Error::Internal("adjugate is not integral".into()))?;
    let adj_cols: Vec<Vec<BigInt>> = (0..=n).map(|c| adj.column(c)).collect();
    let target = d_t.matrix().transpose();

    let mut tried = 0u64;
    'perm: for perm in (0..=n).permutations(n + 1) {
        tried += 1;
        let mut n_rows = vec![vec![BigInt::zero(); n + 1]; n + 1];
        for (r, n_row) in n_rows.iter_mut().enumerate() {
            // row r of D_T Π
            let row: Vec<BigInt> = perm.iter().map(|&j| target.get(j, r).clone()).collect();
            for (c, col) in adj_cols.iter().enumerate() {
                let (q, rem) = dot(&row, col).div_rem(&det_s);
                if !rem.is_zero() {
                    continue 'perm;
                }
                n_row[c] = q;
            }
        }
        let cert = IntegerMatrix::from_rows(n_rows)?;
        if mode == Mode::Full && !cert.det()?.abs().is_one() {
            continue;
        }
        return witness_from_certificate(cert, perm).map(Verdict::Equivalent);
    }
    debug_assert_eq!(BigInt::from(tried), factorial(n + 1));
    Ok(Verdict::NotEquivalent {
        permutations_tried: tried,
    })
}

fn witness_from_certificate(cert: IntegerMatrix, perm: Vec<usize>) -> Result<EquivalenceWitness> {
    let n = cert.rows() - 1;
    let bottom_ok = (0..n).all(|c| cert.get(n, c).is_zero()) && cert.get(n, n).is_one();
    if !bottom_ok {
        return Err(Error::Internal(format!(
            "certificate bottom row is {:?}, expected (0, ..., 0, 1)",
            cert.row(n)
        )));
    }
    let linear = IntegerMatrix::from_fn(n, n, |r, c| cert.get(r, c).clone());
    let translation = (0..n).map(|r| cert.get(r, n).clone()).collect();
    Ok(EquivalenceWitness {
        linear,
        translation,
        vertex_bijection: perm,
        certificate_matrix: cert,
    })
}

/// Checks a witness from scratch against the two simplices.
pub fn verify_witness(s: &LatticeSimplex, t: &LatticeSimplex, w: &EquivalenceWitness) -> bool {
    let n = s.dim();
    if t.dim() != n || w.dim() != n || w.linear.rows() != n || w.linear.cols() != n {
        return false;
    }
    if !w.vertex_bijection.iter().copied().sorted().eq(0..=n) {
        return false;
    }
    if w.certificate_matrix != block_matrix(&w.linear, &w.translation) {
        return false;
    }
    let Ok(map) = w.map() else {
        return false;
    };
    s.vertices()
        .iter()
        .zip(&w.vertex_bijection)
        .all(|(v, &j)| map.apply_point(v) == t.vertices()[j])
}

/// `D_T Π` for the witness's bijection: column `i` is `(t_{f(i)}, 1)`.
pub fn permuted_target(t: &LatticeSimplex, w: &EquivalenceWitness) -> IntegerMatrix {
    t.reorder(&w.vertex_bijection)
        .definition_matrix()
        .matrix()
        .clone()
}

/// Checks that `A D_S = D_T Π`.
pub fn certificate_identity_holds(
    s: &LatticeSimplex,
    t: &LatticeSimplex,
    w: &EquivalenceWitness,
) -> bool {
    matmul(&w.certificate_matrix, s.definition_matrix().matrix())
        .map(|m| m == permuted_target(t, w))
        .unwrap_or(false)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceClass {
    /// Index of the first member, the class representative.
    pub representative: usize,
    /// Other members, each with a witness from the representative.
    pub members: Vec<(usize, EquivalenceWitness)>,
}

impl EquivalenceClass {
    pub fn indices(&self) -> Vec<usize> {
        std::iter::once(self.representative)
            .chain(self.members.iter().map(|(i, _)| *i))
            .collect()
    }

    pub fn len(&self) -> usize {
        1 + self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Partitions `simplices` into equivalence classes, in order of first
/// appearance. Each simplex is compared only against existing
/// representatives of equal normalized volume.
pub fn equivalence_classes(simplices: &[LatticeSimplex]) -> Result<Vec<EquivalenceClass>> {
    let mut classes: Vec<(BigInt, EquivalenceClass)> = Vec::new();
    'next: for (i, s) in simplices.iter().enumerate() {
        let vol = s.normalized_volume();
        for (rep_vol, class) in classes.iter_mut() {
            if *rep_vol != vol {
                continue;
            }
            let rep = &simplices[class.representative];
            if let Verdict::Equivalent(w) = check_equivalence(rep, s, Mode::Full)? {
                class.members.push((i, w));
                continue 'next;
            }
        }
        classes.push((
            vol,
            EquivalenceClass {
                representative: i,
                members: Vec::new(),
            },
        ));
    }
    Ok(classes.into_iter().map(|(_, c)| c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::point;
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s21() -> LatticeSimplex {
        LatticeSimplex::from_i64(&[&[0, 0], &[9, 0], &[3, 2]]).unwrap()
    }

    fn s22() -> LatticeSimplex {
        LatticeSimplex::from_i64(&[&[0, 0], &[6, 0], &[0, 3]]).unwrap()
    }

    #[test]
    fn reflexive_with_identity() {
        let s = s21();
        let v = check_equivalence(&s, &s, Mode::Full).unwrap();
        assert_eq!(v, Verdict::Equivalent(EquivalenceWitness::identity(2)));
        assert!(verify_witness(&s, &s, v.witness().unwrap()));
    }

    #[test]
    fn small_triangles_are_not_equivalent() {
        assert_eq!(
            check_equivalence(&s21(), &s22(), Mode::Full).unwrap(),
            Verdict::NotEquivalent {
                permutations_tried: 6
            }
        );
        assert_eq!(
            check_equivalence(&s21(), &s22(), Mode::EqualVolume).unwrap(),
            Verdict::NotEquivalent {
                permutations_tried: 6
            }
        );
    }

    #[test]
    fn errors() {
        let tet =
            LatticeSimplex::from_i64(&[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]).unwrap();
        assert!(matches!(
            check_equivalence(&s21(), &tet, Mode::Full),
            Err(Error::Dimension(_))
        ));
        let unit = LatticeSimplex::from_i64(&[&[0, 0], &[1, 0], &[0, 1]]).unwrap();
        assert!(matches!(
            check_equivalence(&s21(), &unit, Mode::EqualVolume),
            Err(Error::Precondition(_))
        ));
        assert_eq!(
            check_equivalence(&s21(), &unit, Mode::Full).unwrap(),
            Verdict::NotEquivalent {
                permutations_tried: 6
            }
        );
    }

    #[test]
    fn rejects_bad_witnesses() {
        let s = s21();
        let mut w = EquivalenceWitness::identity(2);
        w.linear = IntegerMatrix::from_i64_rows(&[&[2, 0], &[0, 1]]).unwrap();
        w.certificate_matrix = block_matrix(&w.linear, &w.translation);
        let doubled = LatticeSimplex::from_i64(&[&[0, 0], &[18, 0], &[6, 2]]).unwrap();
        assert!(!verify_witness(&s, &doubled, &w));

        let mut w = EquivalenceWitness::identity(2);
        w.vertex_bijection = vec![0, 0, 1];
        assert!(!verify_witness(&s, &s, &w));

        let mut w = EquivalenceWitness::identity(2);
        w.certificate_matrix.set(0, 2, BigInt::from(1));
        assert!(!verify_witness(&s, &s, &w));
    }

    #[test]
    fn witness_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample::simplex(3, -4, 4, &mut rng);
        let t = sample::shuffled_image(&s, &sample::affine_map(3, &mut rng), &mut rng);
        let w = check_equivalence(&s, &t, Mode::Full)
            .unwrap()
            .witness()
            .unwrap()
            .clone();
        let back =
            EquivalenceWitness::from_json(&serde_json::from_str(&w.to_json().to_string()).unwrap())
                .unwrap();
        assert_eq!(back, w);
        assert!(verify_witness(&s, &t, &back));
    }

    #[test]
    fn classes() {
        let unit = LatticeSimplex::from_i64(&[&[0, 0], &[1, 0], &[0, 1]]).unwrap();
        let moved = LatticeSimplex::from_i64(&[&[5, 5], &[4, 5], &[5, 4]]).unwrap();
        let classes = equivalence_classes(&[s21(), unit.clone(), s22(), moved]).unwrap();
        let idx: Vec<Vec<usize>> = classes.iter().map(|c| c.indices()).collect();
        assert_eq!(idx, vec![vec![0], vec![1, 3], vec![2]]);
        let (_, w) = &classes[1].members[0];
        assert!(verify_witness(
            &unit,
            &LatticeSimplex::from_i64(&[&[5, 5], &[4, 5], &[5, 4]]).unwrap(),
            w
        ));
        assert_eq!(equivalence_classes(&[s21()]).unwrap().len(), 1);
    }

    #[test]
    fn random_images_are_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=4 {
            for _ in 0..15 {
                let s = sample::simplex(n, -4, 4, &mut rng);
                let u = sample::affine_map(n, &mut rng);
                let t = sample::shuffled_image(&s, &u, &mut rng);
                for mode in [Mode::Full, Mode::EqualVolume] {
                    let v = check_equivalence(&s, &t, mode).unwrap();
                    let w = v.witness().expect("image is equivalent");
                    assert!(verify_witness(&s, &t, w));
                    assert!(certificate_identity_holds(&s, &t, w));
                }
            }
        }
    }

    #[test]
    fn symmetry_and_transitivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 2..=4 {
            for _ in 0..10 {
                let s = sample::simplex(n, -3, 3, &mut rng);
                let t = sample::shuffled_image(&s, &sample::affine_map(n, &mut rng), &mut rng);
                let r = sample::shuffled_image(&t, &sample::affine_map(n, &mut rng), &mut rng);
                let st = check_equivalence(&s, &t, Mode::Full)
                    .unwrap()
                    .witness()
                    .unwrap()
                    .clone();
                let ts = check_equivalence(&t, &s, Mode::Full).unwrap();
                assert!(ts.is_equivalent());
                assert!(verify_witness(&t, &s, &st.inverse().unwrap()));
                let tr = check_equivalence(&t, &r, Mode::Full)
                    .unwrap()
                    .witness()
                    .unwrap()
                    .clone();
                assert!(verify_witness(&s, &r, &st.then(&tr).unwrap()));
            }
        }
    }

    #[test]
    fn modes_agree_on_equal_volumes() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut compared = 0;
        while compared < 60 {
            let s = sample::simplex(2, -3, 3, &mut rng);
            let t = sample::simplex(2, -3, 3, &mut rng);
            if s.normalized_volume() != t.normalized_volume() {
                continue;
            }
            compared += 1;
            let full = check_equivalence(&s, &t, Mode::Full).unwrap();
            let eq = check_equivalence(&s, &t, Mode::EqualVolume).unwrap();
            assert_eq!(full.is_equivalent(), eq.is_equivalent(), "{s:?} {t:?}");
            if !full.is_equivalent() {
                assert_eq!(
                    full,
                    Verdict::NotEquivalent {
                        permutations_tried: 6
                    }
                );
            }
        }
    }

    #[test]
    fn pure_translation_witness() {
        let s = LatticeSimplex::new(vec![
            point(&[4, 3, 2, 1]),
            point(&[0, 0, 0, 0]),
            point(&[1, 0, 0, 0]),
            point(&[0, 1, 0, 0]),
            point(&[0, 0, 1, 0]),
        ])
        .unwrap();
        let shift = AffineUnimodularMap::translation_by(point(&[1, 1, 1, 1]));
        let t = shift.apply_simplex(&s).unwrap();
        assert_eq!(t.vertices()[0], point(&[5, 4, 3, 2]));
        let w = check_equivalence(&s, &t, Mode::Full)
            .unwrap()
            .witness()
            .unwrap()
            .clone();
        assert!(verify_witness(&s, &t, &w));
        assert!(verify_witness(
            &s,
            &t,
            &EquivalenceWitness::from_map(&shift, (0..5).collect())
        ));
    }
}
