//! Counterexample extraction from a violated abstraction.
//!
//! Under a fixed adversary the automaton unrolls into an acyclic
//! depth-bounded tree; a best-first search over that tree emits the
//! satisfying paths in nonincreasing probability order and stops at the
//! first prefix set whose accumulated mass breaks the threshold.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num::Zero;

use crate::adversary::ObservationAdversary;
use crate::error::{Error, Result};
use crate::logic::{satisfying_states, BoundedUntilSpec};
use crate::model::{Path, Waz};
use crate::rational::{one, zero, Rational};

/// A finite set of finite abstract paths whose accumulated probability
/// breaks the threshold, with the adversary that induced them.
#[derive(Debug, Clone)]
pub struct Counterexample {
    /// Paths with their probabilities, in nonincreasing probability order.
    pub paths: Vec<(Path, Rational)>,
    pub total: Rational,
    pub adversary: ObservationAdversary,
    pub spec: BoundedUntilSpec,
}

impl Counterexample {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Lazy acyclic unrolling of a system under a fixed adversary: nodes are
/// (state, observation history) pairs, expanded on demand.
pub struct Unrolling<'a> {
    pub system: &'a Waz,
    pub adversary: &'a ObservationAdversary,
    pub horizon: usize,
}

impl<'a> Unrolling<'a> {
    pub fn new(system: &'a Waz, adversary: &'a ObservationAdversary, horizon: usize) -> Self {
        Unrolling { system, adversary, horizon }
    }

    /// Successors of `state` after observation history `obs`, as
    /// (action, successor, weight) triples.
    pub fn successors(&self, state: usize, obs: &[usize]) -> Result<Vec<(usize, usize, Rational)>> {
        let action = self.adversary.action_for(obs).ok_or_else(|| {
            Error::MissingAdversaryEntry(format!(
                "history [{}]",
                obs.iter().map(|&z| self.system.obs_labels[z].clone()).collect::<Vec<_>>().join(" ")
            ))
        })?;
        Ok(self
            .system
            .row(state, action)
            .into_iter()
            .map(|(t, w)| (action, t, w))
            .collect())
    }
}

/// Search-queue entry; the heap pops the highest probability first, ties
/// by shorter path, then lexicographically smaller state sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    prob: Rational,
    states: Vec<usize>,
    actions: Vec<usize>,
    obs: Vec<usize>,
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.prob
            .cmp(&other.prob)
            .then_with(|| other.states.len().cmp(&self.states.len()))
            .then_with(|| other.states.cmp(&self.states))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Best-first enumeration of the paths satisfying the bounded until, in
/// nonincreasing probability, stopping at the first threshold crossing.
pub fn extract_counterexample(
    unrolling: &Unrolling,
    spec: &BoundedUntilSpec,
) -> Result<Counterexample> {
    let system = unrolling.system;
    let sat1 = satisfying_states(system, &spec.phi1)?;
    let sat2 = satisfying_states(system, &spec.phi2)?;

    let mut queue = BinaryHeap::new();
    queue.push(Entry {
        prob: one(),
        states: vec![system.initial],
        actions: vec![],
        obs: vec![],
    });

    let mut paths: Vec<(Path, Rational)> = Vec::new();
    let mut total: Rational = zero();
    while let Some(entry) = queue.pop() {
        if entry.prob.is_zero() {
            break;
        }
        let last = *entry.states.last().unwrap();
        if sat2.contains(&last) {
            // first hit of φ2 through φ1 states: a satisfying path
            total += entry.prob.clone();
            paths.push((
                Path { states: entry.states, actions: entry.actions },
                entry.prob,
            ));
            if spec.cmp.violated_by(&total, &spec.threshold) {
                return Ok(Counterexample {
                    paths,
                    total,
                    adversary: unrolling.adversary.clone(),
                    spec: spec.clone(),
                });
            }
            continue;
        }
        if !sat1.contains(&last) || entry.actions.len() >= unrolling.horizon {
            // ¬φ1 before reaching φ2 kills every extension; depth cap
            continue;
        }
        for (action, t, w) in unrolling.successors(last, &entry.obs)? {
            let mut states = entry.states.clone();
            let mut actions = entry.actions.clone();
            let mut obs = entry.obs.clone();
            states.push(t);
            actions.push(action);
            obs.push(system.z_label(t));
            queue.push(Entry { prob: entry.prob.clone() * w, states, actions, obs });
        }
    }
    Err(Error::Exhausted)
}
