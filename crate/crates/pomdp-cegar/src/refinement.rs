//! Spuriousness checking and partition refinement.
//!
//! A counterexample found on a quotient may be spurious: its abstract
//! probability can exceed the mass its concrete realizations actually carry.
//! The algorithms here locate the depth at which abstraction inflates the
//! mass, pick the block split that shrinks the inflated sum the most, and
//! repeat until the counterexample no longer crosses the threshold.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num::Zero;

use crate::abstraction::{quotient, Partition};
use crate::cex::Counterexample;
use crate::error::{Error, Result};
use crate::logic::Cmp;
use crate::model::{Path, Waz};
use crate::rational::{one, zero, Rational};

/// Forward dynamic-programming table over the realizations of a
/// counterexample: per abstract path and depth, the accumulated concrete
/// prefix probability per concrete state. Computed once and reused for all
/// depth-from-end indices.
#[derive(Debug, Clone)]
pub struct ProjectionCache {
    /// `layers[m][d]` maps concrete state -> summed probability of the
    /// concrete prefixes of length d realizing path m's first d steps.
    layers: Vec<Vec<BTreeMap<usize, Rational>>>,
}

impl ProjectionCache {
    pub fn new(
        paths: &[(Path, Rational)],
        concrete: &Waz,
        partition: &Partition,
    ) -> ProjectionCache {
        let layers = paths
            .iter()
            .map(|(path, _)| {
                let mut layers: Vec<BTreeMap<usize, Rational>> = Vec::with_capacity(path.states.len());
                let mut front: BTreeMap<usize, Rational> = partition.blocks[path.states[0]]
                    .iter()
                    .map(|&s| (s, one()))
                    .collect();
                layers.push(front.clone());
                for (d, &action) in path.actions.iter().enumerate() {
                    let target = &partition.blocks[path.states[d + 1]];
                    let mut next: BTreeMap<usize, Rational> = BTreeMap::new();
                    for (&s, mass) in &front {
                        for (t, w) in concrete.row(s, action) {
                            if target.contains(&t) && !w.is_zero() {
                                *next.entry(t).or_insert_with(zero) += mass.clone() * w;
                            }
                        }
                    }
                    layers.push(next.clone());
                    front = next;
                }
                layers
            })
            .collect();
        ProjectionCache { layers }
    }

    pub fn layer(&self, path: usize, depth: usize) -> &BTreeMap<usize, Rational> {
        &self.layers[path][depth]
    }

    /// Total concrete mass of the length-`depth` realization prefixes of
    /// path `path` (the p⁻ value at the given pivot).
    pub fn prefix_mass(&self, path: usize, depth: usize) -> Rational {
        self.layers[path][depth].values().cloned().sum()
    }

    /// Concrete mass of the full realizations of path `path`.
    pub fn realizable_mass(&self, path: usize) -> Rational {
        self.prefix_mass(path, self.layers[path].len() - 1)
    }
}

/// All concrete paths with positive stepwise probability whose i-th state
/// lies in the i-th block of `abstract_path`. Explicit enumeration, meant
/// for reporting; the algorithms go through [`ProjectionCache`] instead.
pub fn project_paths(abstract_path: &Path, partition: &Partition, concrete: &Waz) -> Vec<Path> {
    let mut prefixes: Vec<Vec<usize>> = partition.blocks[abstract_path.states[0]]
        .iter()
        .map(|&s| vec![s])
        .collect();
    for (d, &action) in abstract_path.actions.iter().enumerate() {
        let target = &partition.blocks[abstract_path.states[d + 1]];
        let mut next = Vec::new();
        for prefix in prefixes {
            let s = *prefix.last().unwrap();
            for (t, w) in concrete.row(s, action) {
                if target.contains(&t) && !w.is_zero() {
                    let mut extended = prefix.clone();
                    extended.push(t);
                    next.push(extended);
                }
            }
        }
        prefixes = next;
    }
    prefixes
        .into_iter()
        .map(|states| Path { states, actions: abstract_path.actions.clone() })
        .collect()
}

/// Abstract probability of the suffix of `path` from `from` to its end,
/// on the quotient's weights (the p⁺ value).
fn suffix_weight(quotient: &Waz, path: &Path, from: usize) -> Rational {
    let mut w = one();
    for i in from..path.actions.len() {
        w *= quotient.weight(path.states[i], path.actions[i], path.states[i + 1]);
    }
    w
}

fn pivot_of(path: &Path, j: usize) -> usize {
    path.actions.len().saturating_sub(j)
}

/// False iff the accumulated concrete mass of all realizations already
/// crosses the threshold (early exit on crossing); true otherwise.
pub fn is_spurious(
    cex: &Counterexample,
    concrete: &Waz,
    partition: &Partition,
    p: &Rational,
    cmp: Cmp,
) -> bool {
    let cache = ProjectionCache::new(&cex.paths, concrete, partition);
    let mut acc = zero();
    for m in 0..cex.paths.len() {
        acc += cache.realizable_mass(m);
        if cmp.violated_by(&acc, p) {
            return false;
        }
    }
    true
}

/// The located inflation depth together with its per-depth mass trace.
#[derive(Debug, Clone)]
pub struct RefinementSet {
    /// Smallest depth-from-end index whose mixed sum crosses the threshold.
    pub j: usize,
    /// Blocks at the pivot positions of the counterexample paths.
    pub blocks: BTreeSet<usize>,
    /// SP_0 ..= SP_j, each the complete sum for that depth.
    pub sp_trace: Vec<Rational>,
}

/// Smallest j ≥ 0 whose mixed concrete-prefix/abstract-suffix mass SP_j
/// crosses the threshold, with the pivot blocks B_j.
pub fn find_refinement_set(
    cex: &Counterexample,
    concrete: &Waz,
    partition: &Partition,
    p: &Rational,
    cmp: Cmp,
) -> Result<RefinementSet> {
    let quot = quotient(concrete, partition)?;
    let cache = ProjectionCache::new(&cex.paths, concrete, partition);
    let j_max = cex.paths.iter().map(|(path, _)| path.actions.len()).max().unwrap_or(0);
    let mut sp_trace = Vec::new();
    for j in 0..=j_max {
        let mut sp = zero();
        for (m, (path, _)) in cex.paths.iter().enumerate() {
            let pivot = pivot_of(path, j);
            sp += cache.prefix_mass(m, pivot) * suffix_weight(&quot, path, pivot);
        }
        sp_trace.push(sp.clone());
        if cmp.violated_by(&sp, p) {
            if j == 0 {
                return Err(Error::NotSpurious);
            }
            let blocks = cex
                .paths
                .iter()
                .map(|(path, _)| path.states[pivot_of(path, j)])
                .collect();
            return Ok(RefinementSet { j, blocks, sp_trace });
        }
    }
    // SP_{j_max} equals the abstract total, which crosses by precondition
    Err(Error::NotSpurious)
}

/// A chosen split: which block, where it was cut, and the predicted new
/// contribution of the chosen path.
#[derive(Debug, Clone)]
pub struct RefinementPlan {
    pub j: usize,
    /// Index of the chosen counterexample path.
    pub path_index: usize,
    /// Separation point n, 2 ..= |block|; the first n-1 states of the
    /// ordering keep the block id, the rest become a new block.
    pub separation: usize,
    /// Block that was split.
    pub block: usize,
    /// Members sorted by descending outgoing mass into the successor block.
    pub ordering: Vec<usize>,
    /// Members moved out into the appended block.
    pub moved: Vec<usize>,
    pub predicted_r: Rational,
}

/// Splits one multi-member pivot block, choosing the path m and separation
/// point n that minimize the predicted residual contribution r_mn.
pub fn split_block(
    cex: &Counterexample,
    rset: &RefinementSet,
    concrete: &Waz,
    partition: &Partition,
) -> Result<(Partition, RefinementPlan)> {
    let quot = quotient(concrete, partition)?;
    let cache = ProjectionCache::new(&cex.paths, concrete, partition);
    let mut best: Option<RefinementPlan> = None;
    for (m, (path, _)) in cex.paths.iter().enumerate() {
        let pivot = pivot_of(path, rset.j);
        if pivot == 0 {
            continue;
        }
        let block = path.states[pivot];
        let members: Vec<usize> = partition.blocks[block].iter().copied().collect();
        if members.len() < 2 {
            continue;
        }
        let action = path.actions[pivot];
        let next = &partition.blocks[path.states[pivot + 1]];
        // outgoing mass of each member into the successor block, descending;
        // ties by state declaration order
        let mut g_plus: Vec<(usize, Rational)> = members
            .iter()
            .map(|&s| {
                let mass: Rational = concrete
                    .row(s, action)
                    .into_iter()
                    .filter(|(t, _)| next.contains(t))
                    .map(|(_, w)| w)
                    .sum();
                (s, mass)
            })
            .collect();
        g_plus.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let g_minus: Vec<Rational> = g_plus
            .iter()
            .map(|(s, _)| cache.layer(m, pivot).get(s).cloned().unwrap_or_else(zero))
            .collect();
        let p_plus = suffix_weight(&quot, path, pivot);
        let t_pi = quot.weight(block, action, path.states[pivot + 1]);
        for n in 2..=members.len() {
            let mut r = zero();
            for (d, gm) in g_minus.iter().enumerate() {
                let gp = if d < n - 1 { &g_plus[0].1 } else { &g_plus[n - 1].1 };
                r += gm.clone() * gp.clone();
            }
            r = r * p_plus.clone() / t_pi.clone();
            if best.as_ref().map_or(true, |b| r < b.predicted_r) {
                best = Some(RefinementPlan {
                    j: rset.j,
                    path_index: m,
                    separation: n,
                    block,
                    ordering: g_plus.iter().map(|(s, _)| *s).collect(),
                    moved: g_plus[n - 1..].iter().map(|(s, _)| *s).collect(),
                    predicted_r: r,
                });
            }
        }
    }
    let plan = best.ok_or(Error::NoSplittableBlock)?;
    let keep: BTreeSet<usize> = plan.ordering[..plan.separation - 1].iter().copied().collect();
    let mut refined = partition.clone();
    refined.split(plan.block, &keep);
    Ok((refined, plan))
}

/// Re-expresses abstract paths over a refinement of their partition: each
/// path maps to the distinct new-block sequences its concrete realizations
/// pass through, weighted by the new quotient.
pub fn remap_paths(
    paths: &[(Path, Rational)],
    concrete: &Waz,
    from: &Partition,
    to: &Partition,
) -> Result<Vec<(Path, Rational)>> {
    let quot = quotient(concrete, to)?;
    let owner = to.membership(concrete.states.len())?;
    let mut out: Vec<(Path, Rational)> = Vec::new();
    for (path, _) in paths {
        // frontier per (depth, new-block sequence): the consistent concrete
        // states, grouped so each surviving sequence appears exactly once
        let mut queue: VecDeque<(usize, Vec<usize>, BTreeSet<usize>)> = VecDeque::new();
        let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for &s in &from.blocks[path.states[0]] {
            groups.entry(owner[s]).or_default().insert(s);
        }
        for (b, states) in groups {
            queue.push_back((0, vec![b], states));
        }
        while let Some((d, seq, states)) = queue.pop_front() {
            if d == path.actions.len() {
                let prob = suffix_weight(&quot, &Path { states: seq.clone(), actions: path.actions.clone() }, 0);
                if !prob.is_zero() {
                    out.push((Path { states: seq, actions: path.actions.clone() }, prob));
                }
                continue;
            }
            let target = &from.blocks[path.states[d + 1]];
            let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
            for &s in &states {
                for (t, w) in concrete.row(s, path.actions[d]) {
                    if target.contains(&t) && !w.is_zero() {
                        groups.entry(owner[t]).or_default().insert(t);
                    }
                }
            }
            for (b, next_states) in groups {
                let mut next_seq = seq.clone();
                next_seq.push(b);
                queue.push_back((d + 1, next_seq, next_states));
            }
        }
    }
    out.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(a.0.states.len().cmp(&b.0.states.len()))
            .then(a.0.states.cmp(&b.0.states))
    });
    out.dedup_by(|a, b| a.0 == b.0);
    Ok(out)
}

/// One split performed during a removal loop.
#[derive(Debug, Clone)]
pub struct SplitRecord {
    pub plan: RefinementPlan,
    /// Counterexample mass under the quotient after this split.
    pub mass_after: Rational,
}

/// Result of removing a spurious counterexample.
#[derive(Debug, Clone)]
pub struct RemovalOutcome {
    pub partition: Partition,
    pub splits: Vec<SplitRecord>,
    /// Final re-mapped counterexample mass, no longer crossing the threshold.
    pub final_mass: Rational,
}

/// Splits blocks until the re-mapped counterexample mass under the refined
/// quotient no longer crosses the threshold.
pub fn remove_counterexample(
    cex: &Counterexample,
    concrete: &Waz,
    partition: &Partition,
    p: &Rational,
    cmp: Cmp,
) -> Result<RemovalOutcome> {
    let mut partition = partition.clone();
    let mut paths = cex.paths.clone();
    let mut splits = Vec::new();
    loop {
        let mass: Rational = paths.iter().map(|(_, prob)| prob.clone()).sum();
        if cmp.holds(&mass, p) {
            return Ok(RemovalOutcome { partition, splits, final_mass: mass });
        }
        let working = Counterexample {
            paths: paths.clone(),
            total: mass,
            adversary: cex.adversary.clone(),
            spec: cex.spec.clone(),
        };
        let rset = find_refinement_set(&working, concrete, &partition, p, cmp)?;
        let (refined, plan) = split_block(&working, &rset, concrete, &partition)?;
        paths = remap_paths(&paths, concrete, &partition, &refined)?;
        let mass_after: Rational = paths.iter().map(|(_, prob)| prob.clone()).sum();
        splits.push(SplitRecord { plan, mass_after });
        partition = refined;
    }
}
