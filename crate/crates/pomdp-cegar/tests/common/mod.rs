//! Seeded random generators and independent brute-force oracles shared by
//! the integration tests. The oracles deliberately use naive enumeration
//! (explicit adversary trees, explicit path sets) so they share no code
//! with the algorithms under test.

use std::collections::{BTreeMap, BTreeSet};

use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pomdp_cegar::abstraction::Partition;
use pomdp_cegar::adversary::ObservationAdversary;
use pomdp_cegar::logic::BoundedUntilSpec;
use pomdp_cegar::model::{Path, Pomdp, StateDecl, Waz, WazState};
use pomdp_cegar::rational::{one, ratio, zero, Rational};
use pomdp_cegar::Result;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_rational(rng: &mut ChaCha8Rng) -> Rational {
    ratio(rng.gen_range(0..=8), 8)
}

/// A random weighted automaton: <= 4 states, <= 2 actions, <= 2 z-labels
/// past the initial one, weights k/8, a `goal` label on a random state.
pub fn random_waz(rng: &mut ChaCha8Rng) -> Waz {
    let num_states = rng.gen_range(2..=4);
    let num_actions = rng.gen_range(1..=2);
    let num_obs = rng.gen_range(1..=2);
    let obs_labels: Vec<String> =
        (0..num_obs).map(|z| format!("z{z}")).collect();
    let goal = rng.gen_range(0..num_states);
    let states: Vec<WazState> = (0..num_states)
        .map(|s| WazState {
            name: format!("q{s}"),
            labels: if s == goal {
                BTreeSet::from(["goal".to_string()])
            } else {
                BTreeSet::new()
            },
            z: rng.gen_range(0..num_obs),
        })
        .collect();
    let mut transitions: BTreeMap<(usize, usize), BTreeMap<usize, Rational>> = BTreeMap::new();
    for s in 0..num_states {
        for a in 0..num_actions {
            let mut row = BTreeMap::new();
            for t in 0..num_states {
                if rng.gen_bool(0.6) {
                    let w = small_rational(rng);
                    if !w.is_zero() {
                        row.insert(t, w);
                    }
                }
            }
            if !row.is_empty() {
                transitions.insert((s, a), row);
            }
        }
    }
    Waz {
        states,
        initial: 0,
        actions: (0..num_actions).map(|a| format!("a{a}")).collect(),
        obs_labels,
        transitions,
    }
}

fn stochastic_row(rng: &mut ChaCha8Rng, n: usize) -> BTreeMap<usize, Rational> {
    loop {
        let weights: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=3)).collect();
        let total: u32 = weights.iter().sum();
        if total == 0 {
            continue;
        }
        return weights
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w > 0)
            .map(|(i, w)| (i, ratio(w.into(), total.into())))
            .collect();
    }
}

/// A random POMDP: <= 4 states, <= 2 actions, <= 2 observations, exact
/// stochastic rows, a `goal` label on a random state.
pub fn random_pomdp(rng: &mut ChaCha8Rng) -> Pomdp {
    let num_states = rng.gen_range(2..=4);
    let num_actions = rng.gen_range(1..=2);
    let num_obs = rng.gen_range(1..=2);
    let goal = rng.gen_range(0..num_states);
    let states: Vec<StateDecl> = (0..num_states)
        .map(|s| StateDecl {
            name: format!("q{s}"),
            labels: if s == goal {
                BTreeSet::from(["goal".to_string()])
            } else {
                BTreeSet::new()
            },
        })
        .collect();
    let mut transitions = BTreeMap::new();
    for s in 0..num_states {
        for a in 0..num_actions {
            transitions.insert((s, a), stochastic_row(rng, num_states));
        }
    }
    let obs_fn: BTreeMap<usize, BTreeMap<usize, Rational>> =
        (0..num_states).map(|s| (s, stochastic_row(rng, num_obs))).collect();
    Pomdp {
        states,
        initial: 0,
        actions: (0..num_actions).map(|a| format!("a{a}")).collect(),
        observations: (0..num_obs).map(|z| format!("z{z}")).collect(),
        transitions,
        obs_fn,
    }
}

/// All satisfying paths of the bounded until under a fixed adversary, by
/// depth-first enumeration (no priority queue, no pruning by threshold).
pub fn enumerate_satisfying_paths(
    system: &Waz,
    adversary: &ObservationAdversary,
    spec: &BoundedUntilSpec,
) -> Result<Vec<(Path, Rational)>> {
    let sat1 = pomdp_cegar::logic::satisfying_states(system, &spec.phi1)?;
    let sat2 = pomdp_cegar::logic::satisfying_states(system, &spec.phi2)?;
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<usize>, Vec<usize>, Vec<usize>, Rational)> =
        vec![(vec![system.initial], vec![], vec![], one())];
    while let Some((states, actions, obs, prob)) = stack.pop() {
        let last = *states.last().unwrap();
        if sat2.contains(&last) {
            out.push((Path { states, actions }, prob));
            continue;
        }
        if !sat1.contains(&last) || actions.len() >= spec.horizon {
            continue;
        }
        let Some(action) = adversary.action_for(&obs) else { continue };
        for (t, w) in system.row(last, action) {
            let mut states = states.clone();
            let mut actions = actions.clone();
            let mut obs = obs.clone();
            states.push(t);
            actions.push(action);
            obs.push(system.z_label(t));
            stack.push((states, actions, obs, prob.clone() * w));
        }
    }
    Ok(out)
}

/// Probability mass of all satisfying paths under a fixed adversary.
pub fn adversary_mass(
    system: &Waz,
    adversary: &ObservationAdversary,
    spec: &BoundedUntilSpec,
) -> Result<Rational> {
    Ok(enumerate_satisfying_paths(system, adversary, spec)?
        .into_iter()
        .map(|(_, p)| p)
        .fold(zero(), |acc, p| acc + p))
}

/// All pure observation-based adversary trees over the reachable histories
/// of `system` up to `horizon` steps.
pub fn all_adversaries(system: &Waz, horizon: usize) -> Vec<ObservationAdversary> {
    // reachable observation histories needing a decision, shortest first
    let mut histories: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier: Vec<(Vec<usize>, BTreeSet<usize>)> =
        vec![(vec![], BTreeSet::from([system.initial]))];
    for _ in 1..horizon {
        let mut next = Vec::new();
        for (obs, states) in frontier {
            let mut by_obs: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
            for &s in &states {
                for a in 0..system.actions.len() {
                    for (t, w) in system.row(s, a) {
                        if !w.is_zero() {
                            by_obs.entry(system.z_label(t)).or_default().insert(t);
                        }
                    }
                }
            }
            for (z, succ) in by_obs {
                let mut extended = obs.clone();
                extended.push(z);
                histories.push(extended.clone());
                next.push((extended, succ));
            }
        }
        frontier = next;
    }
    // enumerate every assignment history -> action
    let num_actions = system.actions.len();
    let mut assignments: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..histories.len() {
        assignments = assignments
            .into_iter()
            .flat_map(|prefix| {
                (0..num_actions).map(move |a| {
                    let mut next = prefix.clone();
                    next.push(a);
                    next
                })
            })
            .collect();
    }
    assignments
        .into_iter()
        .map(|choice| {
            let table: BTreeMap<&[usize], usize> = histories
                .iter()
                .zip(&choice)
                .map(|(h, &a)| (h.as_slice(), a))
                .collect();
            build_adversary(&table, horizon)
        })
        .collect()
}

fn build_adversary(table: &BTreeMap<&[usize], usize>, horizon: usize) -> ObservationAdversary {
    fn node(
        table: &BTreeMap<&[usize], usize>,
        prefix: &mut Vec<usize>,
        max_obs: usize,
        depth: usize,
    ) -> std::rc::Rc<pomdp_cegar::adversary::AdversaryNode> {
        let action = *table.get(prefix.as_slice()).unwrap_or(&0);
        let mut children = BTreeMap::new();
        if depth > 0 {
            for z in 0..max_obs {
                prefix.push(z);
                if table.contains_key(prefix.as_slice()) {
                    children.insert(z, node(table, prefix, max_obs, depth - 1));
                }
                prefix.pop();
            }
        }
        std::rc::Rc::new(pomdp_cegar::adversary::AdversaryNode { action, children })
    }
    let max_obs = table.keys().flat_map(|h| h.iter()).copied().max().map_or(1, |z| z + 1);
    let root = node(table, &mut Vec::new(), max_obs, horizon);
    ObservationAdversary::new(root, horizon).with_default(0)
}

/// Brute-force maximum satisfying mass over all pure observation-based
/// adversaries: the independent oracle for the value-iteration checker.
pub fn brute_force_value(system: &Waz, spec: &BoundedUntilSpec) -> Result<Rational> {
    let mut best = zero();
    for adversary in all_adversaries(system, spec.horizon) {
        let mass = adversary_mass(system, &adversary, spec)?;
        if mass > best {
            best = mass;
        }
    }
    Ok(best)
}

/// Concrete realizable mass of a set of abstract paths: explicit
/// enumeration of every realization, independent of the projection cache.
pub fn realizable_mass_by_enumeration(
    paths: &[(Path, Rational)],
    concrete: &Waz,
    partition: &Partition,
) -> Rational {
    let mut total = zero();
    for (path, _) in paths {
        let mut prefixes: Vec<(usize, Rational)> = partition.blocks[path.states[0]]
            .iter()
            .map(|&s| (s, Rational::from_integer(1.into())))
            .collect();
        for (d, &action) in path.actions.iter().enumerate() {
            let target = &partition.blocks[path.states[d + 1]];
            let mut next = Vec::new();
            for (s, prob) in prefixes {
                for (t, w) in concrete.row(s, action) {
                    if target.contains(&t) && !w.is_zero() {
                        next.push((t, prob.clone() * w));
                    }
                }
            }
            prefixes = next;
        }
        total = prefixes.into_iter().fold(total, |acc, (_, p)| acc + p);
    }
    total
}

/// A random consistent refinement of the coarsest partition: up to
/// `max_splits` random two-way block splits.
pub fn random_consistent_partition(
    rng: &mut ChaCha8Rng,
    system: &Waz,
    max_splits: usize,
) -> Partition {
    let mut partition = pomdp_cegar::abstraction::coarsest_partition(system);
    for _ in 0..rng.gen_range(0..=max_splits) {
        let candidates: Vec<usize> = partition
            .blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.len() >= 2)
            .map(|(i, _)| i)
            .collect();
        if candidates.is_empty() {
            break;
        }
        let block = candidates[rng.gen_range(0..candidates.len())];
        let members: Vec<usize> = partition.blocks[block].iter().copied().collect();
        let cut = rng.gen_range(1..members.len());
        let keep: BTreeSet<usize> = members[..cut].iter().copied().collect();
        partition.split(block, &keep);
    }
    partition
}
