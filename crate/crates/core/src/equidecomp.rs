//! Equidecomposability by matching triangulation cells under unimodular
//! equivalence.
//!
//! A failed match is one-sided: it only says that the two triangulations
//! built here cannot be paired, not that no decomposition exists.

use std::collections::BTreeSet;

use itertools::Itertools;
use num_bigint::BigInt;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::document::PolytopeDocument;
use crate::ehrhart::ehrhart_polynomial;
use crate::equivalence::{check_equivalence, verify_witness, EquivalenceWitness, Mode, Verdict};
use crate::error::{Error, Result};
use crate::hull::{contains, fine_triangulation, triangulate, Mode as Containment, Triangulation};
use crate::linalg::{matmul, IntegerMatrix};
use crate::polytope::{affine_rank, AffineUnimodularMap, LatticePolytope, LatticeSimplex, Point};

/// Largest bounding box scanned when refining through lattice points.
pub const MAX_BOX_POINTS: u64 = 10_000_000;
/// Largest triangulation matched.
pub const MAX_CELLS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Triangulator {
    /// Pulling triangulation on the vertices only.
    Pulling,
    /// Pulling triangulation refined through every lattice point.
    #[default]
    Fine,
}

impl Triangulator {
    pub fn triangulate(self, p: &LatticePolytope) -> Result<Triangulation> {
        let t = match self {
            Triangulator::Pulling => triangulate(p)?,
            Triangulator::Fine => fine_triangulation(p, MAX_BOX_POINTS, MAX_CELLS)?,
        };
        if t.len() > MAX_CELLS {
            return Err(Error::Capacity(format!(
                "triangulation has {} cells, limit {MAX_CELLS}",
                t.len()
            )));
        }
        Ok(t)
    }

    pub fn name(self) -> &'static str {
        match self {
            Triangulator::Pulling => "pulling",
            Triangulator::Fine => "fine",
        }
    }
}

/// Cells of both triangulations and a perfect matching between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingWitness {
    pub p_cells: Vec<LatticeSimplex>,
    pub q_cells: Vec<LatticeSimplex>,
    /// `(i, j, w)`: `w` carries `p_cells[i]` onto `q_cells[j]`.
    pub pairs: Vec<(usize, usize, EquivalenceWitness)>,
}

impl MatchingWitness {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn to_json(&self) -> Value {
        let cells = |cs: &[LatticeSimplex]| -> Vec<Value> {
            cs.iter()
                .map(|c| {
                    PolytopeDocument::from_polytope(c.as_polytope(), None).to_json()["vertices"]
                        .clone()
                })
                .collect()
        };
        json!({
            "p_cells": cells(&self.p_cells),
            "q_cells": cells(&self.q_cells),
            "pairs": self.pairs.iter().map(|(i, j, w)| json!({
                "p": i,
                "q": j,
                "witness": w.to_json(),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &Value, dim: usize) -> Result<Self> {
        let bad = |what: &str| Error::Parse {
            line: 1,
            message: format!("matching field `{what}` is malformed"),
        };
        let cells = |what: &str| -> Result<Vec<LatticeSimplex>> {
            value
                .get(what)
                .and_then(Value::as_array)
                .ok_or_else(|| bad(what))?
                .iter()
                .map(|vs| {
                    let doc = PolytopeDocument::from_json(&json!({"dim": dim, "vertices": vs}))?;
                    LatticeSimplex::new(doc.vertices)
                })
                .collect()
        };
        let pairs = value
            .get("pairs")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("pairs"))?
            .iter()
            .map(|pair| {
                let index = |k: &str| {
                    pair.get(k)
                        .and_then(Value::as_u64)
                        .map(|x| x as usize)
                        .ok_or_else(|| bad("pairs"))
                };
                let w = EquivalenceWitness::from_json(
                    pair.get("witness").ok_or_else(|| bad("pairs"))?,
                )?;
                Ok((index("p")?, index("q")?, w))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MatchingWitness {
            p_cells: cells("p_cells")?,
            q_cells: cells("q_cells")?,
            pairs,
        })
    }
}

/// Checks a matching from scratch: the pairing is a bijection, every pair
/// witness verifies, and each side's cells lie in its polytope and add up to
/// its volume.
pub fn verify_matching(p: &LatticePolytope, q: &LatticePolytope, w: &MatchingWitness) -> bool {
    let n = w.p_cells.len();
    if w.q_cells.len() != n || w.pairs.len() != n {
        return false;
    }
    let mut seen_p = vec![false; n];
    let mut seen_q = vec![false; n];
    for (i, j, pw) in &w.pairs {
        if *i >= n || *j >= n || seen_p[*i] || seen_q[*j] {
            return false;
        }
        seen_p[*i] = true;
        seen_q[*j] = true;
        if !verify_witness(&w.p_cells[*i], &w.q_cells[*j], pw) {
            return false;
        }
    }
    let covers = |poly: &LatticePolytope, cells: &[LatticeSimplex]| -> bool {
        let Ok(t) = triangulate(poly) else {
            return false;
        };
        let total: BigInt = cells.iter().map(LatticeSimplex::normalized_volume).sum();
        total == t.normalized_volume()
            && cells.iter().all(|c| {
                c.dim() == poly.dim()
                    && c.vertices()
                        .iter()
                        .all(|v| contains(poly, v, Containment::Closed).unwrap_or(false))
            })
    };
    covers(p, &w.p_cells) && covers(q, &w.q_cells)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatchOutcome {
    Matched(MatchingWitness),
    /// One-sided: no pairing of these particular triangulations exists.
    NoMatchingFound {
        p_cells: usize,
        q_cells: usize,
    },
}

impl MatchOutcome {
    pub fn witness(&self) -> Option<&MatchingWitness> {
        match self {
            MatchOutcome::Matched(w) => Some(w),
            MatchOutcome::NoMatchingFound { .. } => None,
        }
    }
}

fn same_dim(p: &LatticePolytope, q: &LatticePolytope) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::Dimension(format!(
            "polytopes of dimension {} and {}",
            p.dim(),
            q.dim()
        )));
    }
    Ok(())
}

/// Triangulates both polytopes and pairs up their cells.
pub fn match_triangulations(
    p: &LatticePolytope,
    q: &LatticePolytope,
    how: Triangulator,
) -> Result<MatchOutcome> {
    same_dim(p, q)?;
    let vp = triangulate(p)?.normalized_volume();
    let vq = triangulate(q)?.normalized_volume();
    if vp != vq {
        return Err(Error::Precondition(format!(
            "normalized volumes differ ({vp} vs {vq}); the polytopes cannot be equidecomposable"
        )));
    }
    let tp = how.triangulate(p)?;
    if let Some(u) = polytope_equivalence(p, q)? {
        return mapped_matching(tp.cells, &u).map(MatchOutcome::Matched);
    }
    let tq = how.triangulate(q)?;
    match_cells(tp.cells, tq.cells)
}

/// Upper limit on basis images tried by [`polytope_equivalence`].
const MAX_BASIS_IMAGES: usize = 1_000_000;

/// An affine-unimodular map carrying the vertex set of `p` onto that of `q`,
/// found by sending an affine basis of `p`'s vertices to every ordered tuple
/// of `q`'s vertices. `None` if there is none or the search is too large.
pub fn polytope_equivalence(
    p: &LatticePolytope,
    q: &LatticePolytope,
) -> Result<Option<AffineUnimodularMap>> {
    same_dim(p, q)?;
    let n = p.dim();
    let m = p.num_vertices();
    if m != q.num_vertices() {
        return Ok(None);
    }
    let tuples: usize = (m - n..=m)
        .try_fold(1usize, |acc, x| acc.checked_mul(x))
        .unwrap_or(usize::MAX);
    if tuples > MAX_BASIS_IMAGES {
        return Ok(None);
    }
    let mut basis: Vec<Point> = Vec::with_capacity(n + 1);
    for v in p.sorted_vertices() {
        basis.push(v);
        if affine_rank(&basis) + 1 < basis.len() {
            basis.pop();
        }
        if basis.len() == n + 1 {
            break;
        }
    }
    let source = LatticeSimplex::new(basis)?;
    let target_set: BTreeSet<Point> = q.vertices().iter().cloned().collect();
    for tuple in (0..m).permutations(n + 1) {
        let image: Vec<Point> = tuple.iter().map(|&i| q.vertices()[i].clone()).collect();
        let Ok(t) = LatticeSimplex::new(image) else {
            continue;
        };
        if t.normalized_volume() != source.normalized_volume() {
            continue;
        }
        let Verdict::Equivalent(w) = check_equivalence_in_order(&source, &t)? else {
            continue;
        };
        let u = w.map()?;
        if p.vertices()
            .iter()
            .all(|v| target_set.contains(&u.apply_point(v)))
        {
            return Ok(Some(u));
        }
    }
    Ok(None)
}

/// Equivalence with the vertex order fixed: the identity permutation only.
fn check_equivalence_in_order(s: &LatticeSimplex, t: &LatticeSimplex) -> Result<Verdict> {
    let n = s.dim();
    let inv = s.definition_matrix().matrix().invert()?;
    let cert = matmul(&t.definition_matrix().matrix().to_rational(), &inv)?;
    let Some(cert) = cert.to_integer() else {
        return Ok(Verdict::NotEquivalent {
            permutations_tried: 1,
        });
    };
    let linear = IntegerMatrix::from_fn(n, n, |r, c| cert.get(r, c).clone());
    let translation: Point = (0..n).map(|r| cert.get(r, n).clone()).collect();
    match AffineUnimodularMap::new(linear, translation) {
        Ok(u) => Ok(Verdict::Equivalent(EquivalenceWitness::from_map(
            &u,
            (0..=n).collect(),
        ))),
        Err(_) => Ok(Verdict::NotEquivalent {
            permutations_tried: 1,
        }),
    }
}

/// Pairs every cell with its image under `u`.
fn mapped_matching(
    p_cells: Vec<LatticeSimplex>,
    u: &AffineUnimodularMap,
) -> Result<MatchingWitness> {
    let mut q_cells = Vec::with_capacity(p_cells.len());
    let mut pairs = Vec::with_capacity(p_cells.len());
    for (i, cell) in p_cells.iter().enumerate() {
        let image: Vec<Point> = cell.vertices().iter().map(|v| u.apply_point(v)).collect();
        let mut sorted = image.clone();
        sorted.sort();
        let f = image
            .iter()
            .map(|v| sorted.binary_search(v).expect("image vertex"))
            .collect();
        q_cells.push(LatticeSimplex::new(sorted)?);
        pairs.push((i, i, EquivalenceWitness::from_map(u, f)));
    }
    Ok(MatchingWitness {
        p_cells,
        q_cells,
        pairs,
    })
}

struct Class {
    rep: LatticeSimplex,
    volume: BigInt,
    /// Members with a witness from `rep`; `None` for the representative.
    p: Vec<(usize, Option<EquivalenceWitness>)>,
    q: Vec<(usize, Option<EquivalenceWitness>)>,
}

/// Pairs cells by sorting both sides into equivalence classes. Since
/// equivalence is transitive, a perfect matching exists iff every class has
/// as many cells from each side, and any pairing within a class works.
pub fn match_cells(
    mut p_cells: Vec<LatticeSimplex>,
    mut q_cells: Vec<LatticeSimplex>,
) -> Result<MatchOutcome> {
    let by_volume_desc = |a: &LatticeSimplex, b: &LatticeSimplex| {
        b.normalized_volume()
            .cmp(&a.normalized_volume())
            .then_with(|| a.vertices().cmp(b.vertices()))
    };
    p_cells.sort_by(by_volume_desc);
    q_cells.sort_by(by_volume_desc);
    let no_match = |p: &[LatticeSimplex], q: &[LatticeSimplex]| MatchOutcome::NoMatchingFound {
        p_cells: p.len(),
        q_cells: q.len(),
    };
    if p_cells.len() != q_cells.len() {
        return Ok(no_match(&p_cells, &q_cells));
    }

    let mut classes: Vec<Class> = Vec::new();
    for (side, cells) in [(0, &p_cells), (1, &q_cells)] {
        for (i, cell) in cells.iter().enumerate() {
            let volume = cell.normalized_volume();
            let found = classes
                .par_iter()
                .enumerate()
                .filter(|(_, c)| c.volume == volume)
                .map(|(k, c)| check_equivalence(&c.rep, cell, Mode::EqualVolume).map(|v| (k, v)))
                .filter(|r| !matches!(r, Ok((_, Verdict::NotEquivalent { .. }))))
                .find_first(|_| true)
                .transpose()?;
            let (k, w) = match found {
                Some((k, Verdict::Equivalent(w))) => (k, Some(w)),
                _ => {
                    classes.push(Class {
                        rep: cell.clone(),
                        volume,
                        p: Vec::new(),
                        q: Vec::new(),
                    });
                    (classes.len() - 1, None)
                }
            };
            if side == 0 {
                classes[k].p.push((i, w));
            } else {
                classes[k].q.push((i, w));
            }
        }
    }
    if classes.iter().any(|c| c.p.len() != c.q.len()) {
        return Ok(no_match(&p_cells, &q_cells));
    }

    let n = p_cells[0].dim();
    let mut pairs = Vec::with_capacity(p_cells.len());
    for class in &classes {
        for ((i, wp), (j, wq)) in class.p.iter().zip(&class.q) {
            let rep_to_p = wp
                .clone()
                .unwrap_or_else(|| EquivalenceWitness::identity(n));
            let rep_to_q = wq
                .clone()
                .unwrap_or_else(|| EquivalenceWitness::identity(n));
            let w = rep_to_p.inverse()?.then(&rep_to_q)?;
            if !verify_witness(&p_cells[*i], &q_cells[*j], &w) {
                return Err(Error::Internal(format!(
                    "composed witness for cells {i} and {j} does not verify"
                )));
            }
            pairs.push((*i, *j, w));
        }
    }
    pairs.sort_by_key(|(i, _, _)| *i);
    Ok(MatchOutcome::Matched(MatchingWitness {
        p_cells,
        q_cells,
        pairs,
    }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnimodularCheck {
    Equidecomposable(MatchingWitness),
    /// Some cell is not unimodular; nothing is claimed.
    Inconclusive {
        p_unimodular: bool,
        q_unimodular: bool,
    },
}

fn require_ehrhart_equivalent(p: &LatticePolytope, q: &LatticePolytope) -> Result<()> {
    same_dim(p, q)?;
    let lp = ehrhart_polynomial(p)?;
    let lq = ehrhart_polynomial(q)?;
    if lp != lq {
        return Err(Error::Precondition(format!(
            "Ehrhart polynomials differ: {lp} vs {lq}"
        )));
    }
    Ok(())
}

/// Ehrhart-equivalent polytopes that both triangulate into unimodular cells
/// have equally many cells of every dimension, and all unimodular simplices
/// are equivalent, so the cells match.
pub fn unimodular_triangulation_check(
    p: &LatticePolytope,
    q: &LatticePolytope,
    how: Triangulator,
) -> Result<UnimodularCheck> {
    require_ehrhart_equivalent(p, q)?;
    let tp = how.triangulate(p)?;
    let tq = how.triangulate(q)?;
    let (up, uq) = (tp.is_unimodular(), tq.is_unimodular());
    if !(up && uq) {
        return Ok(UnimodularCheck::Inconclusive {
            p_unimodular: up,
            q_unimodular: uq,
        });
    }
    if tp.len() != tq.len() {
        return Err(Error::Internal(format!(
            "unimodular triangulations of Ehrhart-equivalent polytopes have {} and {} cells",
            tp.len(),
            tq.len()
        )));
    }
    let pairs = tp
        .cells
        .par_iter()
        .zip(&tq.cells)
        .enumerate()
        .map(|(i, (a, b))| match check_equivalence(a, b, Mode::Full)? {
            Verdict::Equivalent(w) => Ok((i, i, w)),
            Verdict::NotEquivalent { .. } => Err(Error::Internal(
                "unimodular cells are not equivalent".into(),
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UnimodularCheck::Equidecomposable(MatchingWitness {
        p_cells: tp.cells,
        q_cells: tq.cells,
        pairs,
    }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DilationOutcome {
    /// `from` is `Some(j)` when the matching is the `k/j`-fold dilation of the
    /// one found at `j`.
    Matched {
        witness: MatchingWitness,
        from: Option<u64>,
    },
    NotMatched {
        p_cells: usize,
        q_cells: usize,
    },
    CapacityExceeded(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DilationReport {
    pub tested: Vec<(u64, DilationOutcome)>,
    pub first_success: Option<u64>,
}

/// The matching of `k` times the cells: `k s_i` goes to `k t_j` under
/// `v -> B v + k c`.
pub fn dilate_matching(w: &MatchingWitness, k: u64) -> Result<MatchingWitness> {
    let scale = |cells: &[LatticeSimplex]| {
        cells
            .iter()
            .map(|c| c.dilate(k))
            .collect::<Result<Vec<_>>>()
    };
    let factor = BigInt::from(k);
    let pairs = w
        .pairs
        .iter()
        .map(|(i, j, pw)| {
            let map = pw.map()?;
            let translation = map.translation().iter().map(|x| x * &factor).collect();
            let scaled = AffineUnimodularMap::new(map.linear().clone(), translation)?;
            Ok((
                *i,
                *j,
                EquivalenceWitness::from_map(&scaled, pw.vertex_bijection.clone()),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MatchingWitness {
        p_cells: scale(&w.p_cells)?,
        q_cells: scale(&w.q_cells)?,
        pairs,
    })
}

/// Tries to match `kP` and `kQ` for `k = 1..=k_max`. A matching found at `j`
/// is reused, dilated, at every multiple of `j`; otherwise both dilates are
/// triangulated afresh. The report is evidence only: a `NotMatched` entry
/// does not rule out equidecomposability.
pub fn dilation_search(
    p: &LatticePolytope,
    q: &LatticePolytope,
    k_max: u64,
    how: Triangulator,
) -> Result<DilationReport> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    require_ehrhart_equivalent(p, q)?;
    let mut tested: Vec<(u64, DilationOutcome)> = Vec::new();
    let mut first_success = None;
    for k in 1..=k_max {
        let earlier = tested.iter().find_map(|(j, o)| match o {
            DilationOutcome::Matched {
                witness,
                from: None,
            } if k % j == 0 => Some((*j, witness)),
            _ => None,
        });
        let outcome = if let Some((j, w)) = earlier {
            DilationOutcome::Matched {
                witness: dilate_matching(w, k / j)?,
                from: Some(j),
            }
        } else {
            match match_triangulations(&p.dilate(k)?, &q.dilate(k)?, how) {
                Ok(MatchOutcome::Matched(witness)) => DilationOutcome::Matched {
                    witness,
                    from: None,
                },
                Ok(MatchOutcome::NoMatchingFound { p_cells, q_cells }) => {
                    DilationOutcome::NotMatched { p_cells, q_cells }
                }
                Err(Error::Capacity(msg)) => DilationOutcome::CapacityExceeded(msg),
                Err(e) => return Err(e),
            }
        };
        if matches!(outcome, DilationOutcome::Matched { .. }) {
            first_success.get_or_insert(k);
        }
        tested.push((k, outcome));
    }
    Ok(DilationReport {
        tested,
        first_success,
    })
}
