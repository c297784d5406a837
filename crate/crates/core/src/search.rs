//! Random search for Ehrhart-equivalent polytopes: perturb vertex sets,
//! compute Ehrhart polynomials and group polytopes whose polynomials
//! coincide.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ehrhart::{ehrhart_polynomial, EhrhartPolynomial};
use crate::error::{Error, Result};
use crate::polytope::{LatticePolytope, Point};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MutationPolicy {
    /// Inclusive range of the coordinate change.
    pub delta_min: i64,
    pub delta_max: i64,
    /// Number of mutation steps.
    pub budget: usize,
    pub seed: u64,
}

impl Default for MutationPolicy {
    fn default() -> Self {
        MutationPolicy {
            delta_min: -1,
            delta_max: 1,
            budget: 100,
            seed: 0,
        }
    }
}

impl MutationPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.delta_min > self.delta_max {
            return Err(Error::InvalidArgument(format!(
                "empty delta range {}..={}",
                self.delta_min, self.delta_max
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mutant {
    Valid(LatticePolytope),
    Degenerate,
}

/// Adds `delta` to coordinate `coord` of vertex `vertex` and revalidates.
pub fn mutate_at(p: &LatticePolytope, vertex: usize, coord: usize, delta: i64) -> Mutant {
    let mut vertices: Vec<Point> = p.vertices().to_vec();
    vertices[vertex][coord] += BigInt::from(delta);
    match LatticePolytope::new(p.dim(), vertices) {
        Ok(q) => Mutant::Valid(q),
        Err(_) => Mutant::Degenerate,
    }
}

/// One random step: a uniformly chosen vertex and coordinate, shifted by a
/// uniform delta from the policy's range.
pub fn mutate<R: Rng + ?Sized>(
    p: &LatticePolytope,
    policy: &MutationPolicy,
    rng: &mut R,
) -> Mutant {
    let vertex = rng.gen_range(0..p.num_vertices());
    let coord = rng.gen_range(0..p.dim());
    let delta = rng.gen_range(policy.delta_min..=policy.delta_max);
    mutate_at(p, vertex, coord, delta)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollisionClass {
    pub key: EhrhartPolynomial,
    pub members: Vec<LatticePolytope>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchReport {
    pub seed: u64,
    /// Distinct polytopes whose polynomial was computed.
    pub evaluated: usize,
    pub degenerate: usize,
    pub capacity_skipped: usize,
    pub classes: Vec<CollisionClass>,
}

/// Mutates a pool that starts with the seeds: each step picks a random pool
/// member, mutates it and adds valid new vertex sets to the pool. All
/// distinct polytopes are then grouped by Ehrhart polynomial. Classes with at
/// least two members are returned, largest first.
///
/// Mutants are generated sequentially from the seeded RNG and evaluated in
/// parallel, so the report depends only on the inputs.
pub fn search(seeds: &[LatticePolytope], policy: &MutationPolicy) -> Result<SearchReport> {
    policy.validate()?;
    if let Some(first) = seeds.first() {
        if let Some(other) = seeds.iter().find(|s| s.dim() != first.dim()) {
            return Err(Error::Dimension(format!(
                "seeds of dimension {} and {}",
                first.dim(),
                other.dim()
            )));
        }
    }
    let mut pool: Vec<LatticePolytope> = Vec::new();
    let mut seen: BTreeSet<Vec<Point>> = BTreeSet::new();
    for s in seeds {
        if seen.insert(s.sorted_vertices()) {
            pool.push(s.clone());
        }
    }
    let mut degenerate = 0;
    if !pool.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
        for _ in 0..policy.budget {
            let parent = &pool[rng.gen_range(0..pool.len())];
            match mutate(parent, policy, &mut rng) {
                Mutant::Valid(q) => {
                    if seen.insert(q.sorted_vertices()) {
                        pool.push(q);
                    }
                }
                Mutant::Degenerate => degenerate += 1,
            }
        }
    }

    let keys: Vec<Result<EhrhartPolynomial>> = pool.par_iter().map(ehrhart_polynomial).collect();
    let mut capacity_skipped = 0;
    let mut order: Vec<EhrhartPolynomial> = Vec::new();
    let mut groups: HashMap<EhrhartPolynomial, Vec<LatticePolytope>> = HashMap::new();
    for (p, key) in pool.iter().zip(keys) {
        let key = match key {
            Ok(k) => k,
            Err(Error::Capacity(_)) => {
                capacity_skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(p.clone());
    }
    let evaluated = pool.len() - capacity_skipped;
    let mut classes: Vec<CollisionClass> = order
        .into_iter()
        .filter_map(|key| {
            let members = groups.remove(&key)?;
            (members.len() >= 2).then_some(CollisionClass { key, members })
        })
        .collect();
    // stable: ties keep first-appearance order
    classes.sort_by_key(|c| std::cmp::Reverse(c.members.len()));
    Ok(SearchReport {
        seed: policy.seed,
        evaluated,
        degenerate,
        capacity_skipped,
        classes,
    })
}
