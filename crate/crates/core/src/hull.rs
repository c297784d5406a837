//! Facet enumeration, membership and pulling triangulations for small
//! V-polytopes.
//!
//! Facets are found by brute force over `n`-subsets of the vertices, which is
//! only sensible for a handful of vertices; [`MAX_VERTICES`] guards it.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::{dot, factorial, IntegerMatrix, Rational};
use crate::polytope::{affine_rank, LatticePolytope, LatticeSimplex, Point};

/// Largest vertex count accepted by facet enumeration and triangulation.
pub const MAX_VERTICES: usize = 12;

/// The inequality `normal · x <= offset`, with `gcd(normal) = 1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfSpace {
    pub normal: Vec<BigInt>,
    pub offset: BigInt,
}

impl HalfSpace {
    pub fn slack(&self, x: &[BigInt]) -> BigInt {
        &self.offset - dot(&self.normal, x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Closed,
    Interior,
}

/// Integer normal to the hyperplane through `points`, or `None` if they do
/// not span one. Component `j` is the signed `j`-th maximal minor of the
/// difference matrix.
fn hyperplane_normal(dim: usize, points: &[&Point]) -> Option<Vec<BigInt>> {
    if dim == 1 {
        return Some(vec![BigInt::from(1)]);
    }
    let base = points[0];
    let diffs: Vec<Vec<BigInt>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let normal: Vec<BigInt> = (0..dim)
        .map(|j| {
            let minor = IntegerMatrix::from_fn(dim - 1, dim - 1, |r, c| {
                diffs[r][if c < j { c } else { c + 1 }].clone()
            });
            let det = minor.det().expect("square minor");
            if j % 2 == 0 {
                det
            } else {
                -det
            }
        })
        .collect();
    if normal.iter().all(Zero::is_zero) {
        return None;
    }
    let g = normal.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    Some(normal.into_iter().map(|x| x / &g).collect())
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Irredundant H-representation of `conv(points)`, sorted canonically.
/// The points must span `R^dim`.
pub fn facets_of_points(dim: usize, points: &[Point]) -> Result<Vec<HalfSpace>> {
    if points.len() > MAX_VERTICES && points.len() != dim + 1 {
        return Err(Error::Capacity(format!(
            "facet enumeration supports at most {MAX_VERTICES} vertices, got {}",
            points.len()
        )));
    }
    let mut found = BTreeSet::new();
    for_each_subset(points.len(), dim, |subset| {
        let chosen: Vec<&Point> = subset.iter().map(|&i| &points[i]).collect();
        let Some(normal) = hyperplane_normal(dim, &chosen) else {
            return;
        };
        let offset = dot(&normal, chosen[0]);
        let (mut above, mut below) = (false, false);
        for p in points {
            match dot(&normal, p).cmp(&offset) {
                std::cmp::Ordering::Greater => above = true,
                std::cmp::Ordering::Less => below = true,
                std::cmp::Ordering::Equal => {}
            }
            if above && below {
                return;
            }
        }
        if above {
            found.insert(HalfSpace {
                normal: normal.into_iter().map(|x| -x).collect(),
                offset: -offset,
            });
        } else {
            found.insert(HalfSpace { normal, offset });
        }
    });
    Ok(found.into_iter().collect())
}

pub fn facets(p: &LatticePolytope) -> Result<Vec<HalfSpace>> {
    Ok(p.facets()?.to_vec())
}

/// Membership against an explicit H-representation.
pub fn satisfies(facets: &[HalfSpace], x: &[BigInt], mode: Mode) -> bool {
    facets.iter().all(|h| {
        let s = h.slack(x);
        match mode {
            Mode::Closed => !s.is_negative(),
            Mode::Interior => s.is_positive(),
        }
    })
}

pub fn contains(p: &LatticePolytope, x: &[BigInt], mode: Mode) -> Result<bool> {
    Ok(satisfies(p.facets()?, x, mode))
}

/// Full-dimensional lattice simplices covering a polytope with pairwise
/// disjoint interiors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triangulation {
    pub cells: Vec<LatticeSimplex>,
}

impl Triangulation {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn normalized_volume(&self) -> BigInt {
        self.cells
            .iter()
            .map(LatticeSimplex::normalized_volume)
            .sum()
    }

    pub fn is_unimodular(&self) -> bool {
        self.cells.iter().all(LatticeSimplex::is_unimodular)
    }
}

/// Pulling triangulation: cone the lexicographically smallest vertex over the
/// recursively triangulated facets that avoid it.
///
/// The result is checked against the pulling triangulation from the opposite
/// end of the vertex order; the two must have equal total volume.
pub fn triangulate(p: &LatticePolytope) -> Result<Triangulation> {
    if p.is_simplex() {
        return Ok(Triangulation {
            cells: vec![p.to_simplex()?],
        });
    }
    let mut order: Vec<usize> = (0..p.num_vertices()).collect();
    order.sort_by(|&a, &b| p.vertices()[a].cmp(&p.vertices()[b]));
    let forward = pulling(p, &order)?;
    order.reverse();
    let backward = pulling(p, &order)?;
    if forward.normalized_volume() != backward.normalized_volume() {
        return Err(Error::Internal(format!(
            "pulling triangulations disagree on volume: {} vs {}",
            forward.normalized_volume(),
            backward.normalized_volume()
        )));
    }
    Ok(forward)
}

/// Pulling triangulation with vertices pulled in the given priority order.
fn pulling(p: &LatticePolytope, order: &[usize]) -> Result<Triangulation> {
    let n = p.dim();
    // Work with vertex ranks so that the smallest element of any face is the
    // one pulled first.
    let ranked: Vec<&Point> = order.iter().map(|&i| &p.vertices()[i]).collect();
    let facet_sets: Vec<Vec<usize>> = p
        .facets()?
        .iter()
        .map(|h| {
            (0..ranked.len())
                .filter(|&r| h.slack(ranked[r]).is_zero())
                .collect()
        })
        .collect();

    let mut cells = Vec::new();
    let all: Vec<usize> = (0..ranked.len()).collect();
    pull_face(&ranked, &facet_sets, &all, n, &mut Vec::new(), &mut cells);

    let cells = cells
        .into_iter()
        .map(|ranks| {
            let mut verts: Vec<Point> = ranks.iter().map(|&r| ranked[r].clone()).collect();
            verts.sort();
            LatticeSimplex::from_vertices_unchecked(verts)
        })
        .collect();
    Ok(Triangulation { cells })
}

fn pull_face(
    ranked: &[&Point],
    facet_sets: &[Vec<usize>],
    face: &[usize],
    dim: usize,
    apexes: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if face.len() == dim + 1 {
        let mut cell = apexes.clone();
        cell.extend_from_slice(face);
        out.push(cell);
        return;
    }
    let apex = face[0];
    let mut subfaces: BTreeSet<Vec<usize>> = BTreeSet::new();
    for g in facet_sets {
        let meet: Vec<usize> = face
            .iter()
            .copied()
            .filter(|v| g.binary_search(v).is_ok())
            .collect();
        if meet.len() < dim || meet.contains(&apex) || subfaces.contains(&meet) {
            continue;
        }
        let pts: Vec<Point> = meet.iter().map(|&r| ranked[r].clone()).collect();
        if affine_rank(&pts) == dim - 1 {
            subfaces.insert(meet);
        }
    }
    apexes.push(apex);
    for sub in &subfaces {
        pull_face(ranked, facet_sets, sub, dim - 1, apexes, out);
    }
    apexes.pop();
}

/// Number of points of `Z^n` in the bounding box of `p`.
pub fn box_size(p: &LatticePolytope) -> BigInt {
    let (lo, hi) = p.bounding_box();
    lo.iter().zip(&hi).map(|(a, b)| b - a + 1).product()
}

/// All lattice points of `p` in lexicographic order, by a scan of the
/// bounding box. Fails if the box holds more than `max_box` points.
pub fn lattice_points(p: &LatticePolytope, max_box: u64) -> Result<Vec<Point>> {
    let size = box_size(p);
    if size > BigInt::from(max_box) {
        return Err(Error::Capacity(format!(
            "bounding box holds {size} lattice points, limit {max_box}"
        )));
    }
    let facets = p.facets()?;
    let (lo, hi) = p.bounding_box();
    let mut out = Vec::new();
    let mut x = lo.clone();
    loop {
        if satisfies(facets, &x, Mode::Closed) {
            out.push(x.clone());
        }
        // odometer, last coordinate fastest
        let Some(i) = (0..x.len()).rev().find(|&i| x[i] < hi[i]) else {
            return Ok(out);
        };
        x[i] += 1;
        x[i + 1..].clone_from_slice(&lo[i + 1..]);
    }
}

/// Stellar refinement of `t` through every point of `points` that is not
/// already a vertex: each cell containing the point is replaced by the cones
/// from the point over the facets of the cell that do not contain it.
///
/// Points are inserted in the order given. Fails once the triangulation has
/// more than `max_cells` cells.
pub fn refine(t: &Triangulation, points: &[Point], max_cells: usize) -> Result<Triangulation> {
    let Some(first) = t.cells.first() else {
        return Ok(t.clone());
    };
    let n = first.dim();
    let volume = t.normalized_volume();
    let mut used: BTreeSet<Point> = t
        .cells
        .iter()
        .flat_map(|c| c.vertices().iter().cloned())
        .collect();
    let mut cells: Vec<Vec<Point>> = t.cells.iter().map(|c| c.vertices().to_vec()).collect();
    for q in points {
        if used.contains(q) {
            continue;
        }
        let mut next = Vec::with_capacity(cells.len() + n);
        let mut hit = false;
        for cell in cells {
            match split_at(&cell, q) {
                Some(parts) => {
                    hit = true;
                    next.extend(parts);
                }
                None => next.push(cell),
            }
        }
        cells = next;
        if hit {
            used.insert(q.clone());
        }
        if cells.len() > max_cells {
            return Err(Error::Capacity(format!(
                "refined triangulation exceeds {max_cells} cells"
            )));
        }
    }
    let cells: Vec<LatticeSimplex> = cells
        .into_iter()
        .map(|mut v| {
            v.sort();
            LatticeSimplex::from_vertices_unchecked(v)
        })
        .collect();
    let refined = Triangulation { cells };
    if refined.normalized_volume() != volume {
        return Err(Error::Internal(format!(
            "refinement changed the volume from {volume} to {}",
            refined.normalized_volume()
        )));
    }
    Ok(refined)
}

/// Cells of the stellar split of `cell` at `q`, or `None` if `q` is outside.
fn split_at(cell: &[Point], q: &Point) -> Option<Vec<Vec<Point>>> {
    let n = q.len();
    for j in 0..n {
        let below = cell.iter().all(|v| v[j] < q[j]);
        let above = cell.iter().all(|v| v[j] > q[j]);
        if below || above {
            return None;
        }
    }
    let det_with = |pts: &[&Point]| -> BigInt {
        IntegerMatrix::from_fn(n + 1, n + 1, |r, c| {
            if r == n {
                BigInt::from(1)
            } else {
                pts[c][r].clone()
            }
        })
        .det()
        .expect("square")
    };
    let base: Vec<&Point> = cell.iter().collect();
    let total = det_with(&base);
    let mut parts = Vec::new();
    for i in 0..=n {
        let mut pts = base.clone();
        pts[i] = q;
        let d = det_with(&pts);
        if d.is_zero() {
            continue;
        }
        if d.is_negative() != total.is_negative() {
            return None;
        }
        parts.push(pts.into_iter().cloned().collect());
    }
    Some(parts)
}

/// Pulling triangulation refined through every lattice point of `p`.
pub fn fine_triangulation(
    p: &LatticePolytope,
    max_box: u64,
    max_cells: usize,
) -> Result<Triangulation> {
    let points = lattice_points(p, max_box)?;
    if points.len() > max_cells + p.dim() {
        return Err(Error::Capacity(format!(
            "{} lattice points need more than {max_cells} cells",
            points.len()
        )));
    }
    refine(&triangulate(p)?, &points, max_cells)
}

/// Euclidean volume as an exact rational.
pub fn volume(p: &LatticePolytope) -> Result<Rational> {
    let t = triangulate(p)?;
    Ok(Rational::new(t.normalized_volume(), factorial(p.dim())))
}
