//! Consistent partitions, quotient construction, and the safe-simulation
//! checker used as a correctness oracle.

use std::collections::{BTreeMap, BTreeSet};

use num::Zero;

use crate::error::{Error, Result};
use crate::model::{Waz, WazState};
use crate::rational::{zero, Rational};

/// An ordered partition of a weighted automaton's states into nonempty
/// disjoint blocks. Block ids stay stable across refinement: splits keep the
/// original id for one part and append the other as a new block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub blocks: Vec<BTreeSet<usize>>,
}

impl Partition {
    pub fn new(blocks: Vec<BTreeSet<usize>>) -> Self {
        Partition { blocks }
    }

    /// One block per state.
    pub fn discrete(num_states: usize) -> Self {
        Partition { blocks: (0..num_states).map(|s| BTreeSet::from([s])).collect() }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_of(&self, state: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&state))
    }

    /// Per-state block index; errors if the partition does not cover the
    /// state space exactly once.
    pub fn membership(&self, num_states: usize) -> Result<Vec<usize>> {
        let mut owner = vec![usize::MAX; num_states];
        for (b, block) in self.blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InconsistentPartition(format!("block #{b} is empty")));
            }
            for &s in block {
                if s >= num_states {
                    return Err(Error::InconsistentPartition(format!(
                        "block #{b} references unknown state #{s}"
                    )));
                }
                if owner[s] != usize::MAX {
                    return Err(Error::InconsistentPartition(format!(
                        "state #{s} appears in blocks #{} and #{b}",
                        owner[s]
                    )));
                }
                owner[s] = b;
            }
        }
        if let Some(s) = owner.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InconsistentPartition(format!("state #{s} is not covered")));
        }
        Ok(owner)
    }

    /// All members of a block must share z-label and atomic propositions.
    pub fn check_consistent(&self, system: &Waz) -> Result<Vec<usize>> {
        let owner = self.membership(system.states.len())?;
        for (b, block) in self.blocks.iter().enumerate() {
            let first = *block.iter().next().unwrap();
            for &s in block {
                if system.z_label(s) != system.z_label(first)
                    || system.states[s].labels != system.states[first].labels
                {
                    return Err(Error::InconsistentPartition(format!(
                        "states {} and {} in block #{b} differ in labels",
                        system.states[first].name, system.states[s].name
                    )));
                }
            }
        }
        Ok(owner)
    }

    /// True when `self` refines `other`: every block of `self` is contained
    /// in some block of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        self.blocks.iter().all(|block| {
            other
                .blocks
                .iter()
                .any(|coarse| block.iter().all(|s| coarse.contains(s)))
        })
    }

    /// Splits `block` into `keep` (retaining the block id) and the rest
    /// (appended as a new block).
    pub fn split(&mut self, block: usize, keep: &BTreeSet<usize>) {
        let rest: BTreeSet<usize> = self.blocks[block].difference(keep).copied().collect();
        debug_assert!(!keep.is_empty() && !rest.is_empty());
        self.blocks[block] = keep.clone();
        self.blocks.push(rest);
    }
}

/// Groups states with equal (z-label, proposition set), ordered by first
/// member in declaration order.
pub fn coarsest_partition(system: &Waz) -> Partition {
    let mut keys: Vec<(usize, BTreeSet<String>)> = Vec::new();
    let mut blocks: Vec<BTreeSet<usize>> = Vec::new();
    for (s, st) in system.states.iter().enumerate() {
        let key = (st.z, st.labels.clone());
        match keys.iter().position(|k| *k == key) {
            Some(i) => {
                blocks[i].insert(s);
            }
            None => {
                keys.push(key);
                blocks.push(BTreeSet::from([s]));
            }
        }
    }
    Partition { blocks }
}

/// Quotient construction: block-to-block weight is the maximum, over members
/// of the source block, of the summed weights into the target block.
pub fn quotient(system: &Waz, partition: &Partition) -> Result<Waz> {
    let owner = partition.check_consistent(system)?;
    let states: Vec<WazState> = partition
        .blocks
        .iter()
        .enumerate()
        .map(|(b, block)| {
            let repr = *block.iter().next().unwrap();
            WazState {
                name: format!("t{b}"),
                labels: system.states[repr].labels.clone(),
                z: system.z_label(repr),
            }
        })
        .collect();
    let initial = owner[system.initial];

    let mut transitions: BTreeMap<(usize, usize), BTreeMap<usize, Rational>> = BTreeMap::new();
    for (b, block) in partition.blocks.iter().enumerate() {
        for a in 0..system.actions.len() {
            let mut best: BTreeMap<usize, Rational> = BTreeMap::new();
            for &s in block {
                let mut sums: BTreeMap<usize, Rational> = BTreeMap::new();
                for (&t, w) in &system.row(s, a) {
                    *sums.entry(owner[t]).or_insert_with(zero) += w.clone();
                }
                for (tb, sum) in sums {
                    let entry = best.entry(tb).or_insert_with(zero);
                    if sum > *entry {
                        *entry = sum;
                    }
                }
            }
            best.retain(|_, w| !w.is_zero());
            if !best.is_empty() {
                transitions.insert((b, a), best);
            }
        }
    }

    Ok(Waz {
        states,
        initial,
        actions: system.actions.clone(),
        obs_labels: system.obs_labels.clone(),
        transitions,
    })
}

/// A safe simulation relation between the states of two automata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRelation {
    pub pairs: BTreeSet<(usize, usize)>,
}

impl SimRelation {
    pub fn contains(&self, s1: usize, s2: usize) -> bool {
        self.pairs.contains(&(s1, s2))
    }
}

/// Exact rational max-flow on a small bipartite network, by repeated
/// augmenting-path search.
mod flow {
    use super::*;

    /// Decides feasibility of routing all of `supply` through the allowed
    /// `edges` into `capacity`, and returns the flow on success.
    pub fn saturating_flow(
        supply: &[Rational],
        capacity: &[Rational],
        edges: &BTreeSet<(usize, usize)>,
    ) -> Option<Vec<Vec<Rational>>> {
        let n = supply.len();
        let m = capacity.len();
        let mut flow = vec![vec![zero(); m]; n];
        let mut sent = vec![zero(); n]; // flow already leaving each left node
        let mut used = vec![zero(); m]; // flow already entering each right node

        for start in 0..n {
            while sent[start] < supply[start] {
                // BFS over the residual graph from `start` to any right node
                // with spare capacity; left<->right residual arcs only.
                let mut parent_of_right: Vec<Option<usize>> = vec![None; m];
                let mut parent_of_left: Vec<Option<usize>> = vec![None; n];
                let mut seen_left = vec![false; n];
                let mut seen_right = vec![false; m];
                seen_left[start] = true;
                let mut queue = std::collections::VecDeque::from([start]);
                let mut reached: Option<usize> = None;
                'bfs: while let Some(l) = queue.pop_front() {
                    for r in 0..m {
                        if !seen_right[r] && edges.contains(&(l, r)) {
                            seen_right[r] = true;
                            parent_of_right[r] = Some(l);
                            if used[r] < capacity[r] {
                                reached = Some(r);
                                break 'bfs;
                            }
                            for l2 in 0..n {
                                if !seen_left[l2] && flow[l2][r] > zero() {
                                    seen_left[l2] = true;
                                    parent_of_left[l2] = Some(r);
                                    queue.push_back(l2);
                                }
                            }
                        }
                    }
                }
                let Some(end) = reached else { return None };

                // bottleneck along the alternating path
                let mut bottleneck = supply[start].clone() - sent[start].clone();
                bottleneck = bottleneck.min(capacity[end].clone() - used[end].clone());
                let mut r = end;
                loop {
                    let l = parent_of_right[r].unwrap();
                    if l == start {
                        break;
                    }
                    let back = parent_of_left[l].unwrap();
                    bottleneck = bottleneck.min(flow[l][back].clone());
                    r = back;
                }

                // apply augmentation
                let mut r = end;
                loop {
                    let l = parent_of_right[r].unwrap();
                    flow[l][r] += bottleneck.clone();
                    if l == start {
                        break;
                    }
                    let back = parent_of_left[l].unwrap();
                    flow[l][back] -= bottleneck.clone();
                    r = back;
                }
                sent[start] += bottleneck.clone();
                used[end] += bottleneck;
            }
        }
        Some(flow)
    }
}

/// Weight vector of `(state, action)`: successor weights as a dense pairing
/// of support states and values.
fn support(row: &BTreeMap<usize, Rational>) -> (Vec<usize>, Vec<Rational>) {
    let states: Vec<usize> = row.keys().copied().collect();
    let weights = states.iter().map(|s| row[s].clone()).collect();
    (states, weights)
}

/// Decides whether a weight function exists between two weight vectors:
/// all of `mu1` must route to `mu2` through pairs related by `related`
/// (label compatibility is folded into `related` by the callers).
pub fn weight_function_exists<F>(
    mu1: &BTreeMap<usize, Rational>,
    mu2: &BTreeMap<usize, Rational>,
    related: F,
) -> bool
where
    F: Fn(usize, usize) -> bool,
{
    weight_function(mu1, mu2, related).is_some()
}

/// As `weight_function_exists`, returning the witness flow as
/// `(left state, right state, weight)` triples.
pub fn weight_function<F>(
    mu1: &BTreeMap<usize, Rational>,
    mu2: &BTreeMap<usize, Rational>,
    related: F,
) -> Option<Vec<(usize, usize, Rational)>>
where
    F: Fn(usize, usize) -> bool,
{
    let (left, supply) = support(mu1);
    let (right, capacity) = support(mu2);
    let mut edges = BTreeSet::new();
    for (i, &s1) in left.iter().enumerate() {
        for (j, &s2) in right.iter().enumerate() {
            if related(s1, s2) {
                edges.insert((i, j));
            }
        }
    }
    let flow = flow::saturating_flow(&supply, &capacity, &edges)?;
    let mut out = Vec::new();
    for (i, &s1) in left.iter().enumerate() {
        for (j, &s2) in right.iter().enumerate() {
            if !flow[i][j].is_zero() {
                out.push((s1, s2, flow[i][j].clone()));
            }
        }
    }
    Some(out)
}

fn labels_compatible(sys1: &Waz, s1: usize, sys2: &Waz, s2: usize, obs_map: &[usize]) -> bool {
    obs_map[sys1.z_label(s1)] == sys2.z_label(s2) && sys1.states[s1].labels == sys2.states[s2].labels
}

/// Computes the coarsest safe simulation between two automata by fixpoint
/// deletion, returning it when the initial states are related.
pub fn check_safe_simulation(sys1: &Waz, sys2: &Waz) -> Result<Option<SimRelation>> {
    if sys1.actions != sys2.actions {
        return Err(Error::ActionSetMismatch(format!(
            "[{}] vs [{}]",
            sys1.actions.join(", "),
            sys2.actions.join(", ")
        )));
    }
    // observation labels matched by name
    let mut obs_map = vec![usize::MAX; sys1.obs_labels.len()];
    for (i, name) in sys1.obs_labels.iter().enumerate() {
        match sys2.obs_index(name) {
            Some(j) => obs_map[i] = j,
            None => {
                if sys1.states.iter().any(|st| st.z == i) {
                    return Err(Error::ActionSetMismatch(format!(
                        "observation label `{name}` missing from the second system"
                    )));
                }
            }
        }
    }

    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for s1 in 0..sys1.states.len() {
        for s2 in 0..sys2.states.len() {
            if labels_compatible(sys1, s1, sys2, s2, &obs_map) {
                pairs.insert((s1, s2));
            }
        }
    }

    loop {
        let mut removed = Vec::new();
        for &(s1, s2) in &pairs {
            for a in 0..sys1.actions.len() {
                let mu1 = sys1.row(s1, a);
                if mu1.is_empty() {
                    continue;
                }
                let mu2 = sys2.row(s2, a);
                let ok = weight_function_exists(&mu1, &mu2, |x, y| {
                    pairs.contains(&(x, y)) && labels_compatible(sys1, x, sys2, y, &obs_map)
                });
                if !ok {
                    removed.push((s1, s2));
                    break;
                }
            }
        }
        if removed.is_empty() {
            break;
        }
        for pair in removed {
            pairs.remove(&pair);
        }
    }

    if pairs.contains(&(sys1.initial, sys2.initial)) {
        Ok(Some(SimRelation { pairs }))
    } else {
        Ok(None)
    }
}
