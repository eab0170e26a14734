//! Bounded-until model checking for z-labeled 0/1-weighted automata.
//!
//! The automaton is treated as a weighted POMDP whose observation function
//! is the indicator of the z-label. Belief and normalizing coefficient are
//! fused into one unnormalized occupancy vector; the value recursion
//!
//! ```text
//! V_0(u) = sum over target states of u(s)
//! V_t(u) = max over actions of sum over labels of V_{t-1}(step(u, a, z))
//! ```
//!
//! runs on exact rationals with memoization keyed by the normalized belief
//! and the remaining depth (values scale linearly with total mass, so
//! proportional occupancies share one memo entry). Argmax actions along
//! reachable histories form the witness adversary on violation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use num::Zero;

use crate::adversary::{AdversaryNode, ObservationAdversary};
use crate::error::{Error, Result};
use crate::logic::{satisfying_states, BoundedUntilSpec};
use crate::model::Waz;
use crate::rational::{one, zero, Rational};

/// Unnormalized probability mass per state.
pub type Occupancy = BTreeMap<usize, Rational>;

#[derive(Debug, Clone)]
pub enum Verdict {
    Satisfied { max_prob: Rational },
    Violated { witness: ObservationAdversary, max_prob: Rational },
}

impl Verdict {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, Verdict::Satisfied { .. })
    }

    pub fn prob(&self) -> &Rational {
        match self {
            Verdict::Satisfied { max_prob } => max_prob,
            Verdict::Violated { max_prob, .. } => max_prob,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckConfig {
    /// Cap on distinct (belief, depth) memo entries.
    pub memo_budget: usize,
    /// Adversary from a previous iteration; evaluated first, and the check
    /// short-circuits to `Violated` if it already crosses the threshold.
    pub warm_start: Option<ObservationAdversary>,
    /// Stop as soon as the mass provably reaching the target within some
    /// depth `d <= k` already breaks the threshold (absorbed mass only
    /// grows with depth). On: returns the depth-`d` witness with `max_prob`
    /// a certified lower bound on `V_k`. Off: always computes the exact
    /// `V_k` and its argmax witness.
    pub early_exit: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { memo_budget: 1_000_000, warm_start: None, early_exit: true }
    }
}

/// Rewrites every state violating `phi1` or satisfying `phi2` to carry only
/// weight-1 self-loops, under every action.
pub fn make_absorbing(system: &Waz, spec: &BoundedUntilSpec) -> Result<Waz> {
    let sat2 = satisfying_states(system, &spec.phi2)?;
    let sat1 = satisfying_states(system, &spec.phi1)?;
    let mut absorbing: BTreeSet<usize> = sat2;
    for s in 0..system.states.len() {
        if !sat1.contains(&s) {
            absorbing.insert(s);
        }
    }
    let mut out = system.clone();
    for &s in &absorbing {
        for a in 0..out.actions.len() {
            out.transitions.insert((s, a), BTreeMap::from([(s, one())]));
        }
    }
    Ok(out)
}

/// One occupancy update: advance under action `a`, keep mass landing on
/// states labeled `z`.
pub fn step_occupancy(system: &Waz, u: &Occupancy, a: usize, z: usize) -> Occupancy {
    let mut out = Occupancy::new();
    for (&s, mass) in u {
        if mass.is_zero() {
            continue;
        }
        if let Some(row) = system.transitions.get(&(s, a)) {
            for (&t, w) in row {
                if system.z_label(t) == z && !w.is_zero() {
                    *out.entry(t).or_insert_with(zero) += mass.clone() * w.clone();
                }
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

fn normalize(u: &Occupancy) -> Option<(Rational, Vec<(usize, Rational)>)> {
    let mass: Rational = u.values().sum();
    if mass.is_zero() {
        return None;
    }
    let belief = u.iter().map(|(&s, v)| (s, v.clone() / mass.clone())).collect();
    Some((mass, belief))
}

/// Exact finite-horizon value iteration over an absorbing automaton.
pub struct ValueIteration<'a> {
    system: &'a Waz,
    target: &'a BTreeSet<usize>,
    memo_budget: usize,
    /// (normalized belief, remaining depth) -> (value, argmax action)
    memo: HashMap<(Vec<(usize, Rational)>, usize), (Rational, usize)>,
    nodes: HashMap<(Vec<(usize, Rational)>, usize), Rc<AdversaryNode>>,
}

impl<'a> ValueIteration<'a> {
    pub fn new(system: &'a Waz, target: &'a BTreeSet<usize>, memo_budget: usize) -> Self {
        ValueIteration { system, target, memo_budget, memo: HashMap::new(), nodes: HashMap::new() }
    }

    pub fn memo_entries(&self) -> usize {
        self.memo.len()
    }

    /// `V_depth(u)` for an arbitrary occupancy vector.
    pub fn value_of(&mut self, u: &Occupancy, depth: usize) -> Result<Rational> {
        match normalize(u) {
            None => Ok(zero()),
            Some((mass, belief)) => Ok(mass * self.value_normalized(belief, depth)?.0),
        }
    }

    fn target_mass(&self, belief: &[(usize, Rational)]) -> Rational {
        belief
            .iter()
            .filter(|(s, _)| self.target.contains(s))
            .map(|(_, v)| v.clone())
            .sum()
    }

    fn value_normalized(
        &mut self,
        belief: Vec<(usize, Rational)>,
        depth: usize,
    ) -> Result<(Rational, usize)> {
        if depth == 0 {
            return Ok((self.target_mass(&belief), 0));
        }
        let key = (belief, depth);
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        if self.memo.len() >= self.memo_budget {
            return Err(Error::BudgetExceeded { budget: self.memo_budget });
        }
        let u: Occupancy = key.0.iter().cloned().collect();
        let mut best: Option<(Rational, usize)> = None;
        for a in 0..self.system.actions.len() {
            let mut total = zero();
            for (mass, sub) in self.successor_groups(&u, a) {
                total += mass * self.value_normalized(sub, depth - 1)?.0;
            }
            // tie-break: lowest action in declaration order
            if best.as_ref().map_or(true, |(v, _)| total > *v) {
                best = Some((total, a));
            }
        }
        let best = best.unwrap_or_else(|| (zero(), 0));
        self.memo.insert(key, best.clone());
        Ok(best)
    }

    /// Successor beliefs grouped by observation label, with their masses.
    fn successor_groups(&self, u: &Occupancy, a: usize) -> Vec<(Rational, Vec<(usize, Rational)>)> {
        let mut by_z: BTreeMap<usize, Occupancy> = BTreeMap::new();
        for (&s, mass) in u {
            if let Some(row) = self.system.transitions.get(&(s, a)) {
                for (&t, w) in row {
                    if !w.is_zero() {
                        *by_z
                            .entry(self.system.z_label(t))
                            .or_default()
                            .entry(t)
                            .or_insert_with(zero) += mass.clone() * w.clone();
                    }
                }
            }
        }
        by_z.into_values().filter_map(|group| normalize(&group)).collect()
    }

    /// Rebuilds the argmax adversary for the reachable history tree. Must be
    /// called after `value_of` on the same occupancy and depth.
    pub fn witness(&mut self, u: &Occupancy, depth: usize) -> Result<ObservationAdversary> {
        let belief = match normalize(u) {
            Some((_, belief)) if depth > 0 => belief,
            _ => return Ok(ObservationAdversary::stationary(0, depth)),
        };
        let root = self.witness_node(belief, depth)?;
        Ok(ObservationAdversary::new(root, depth))
    }

    fn witness_node(
        &mut self,
        belief: Vec<(usize, Rational)>,
        depth: usize,
    ) -> Result<Rc<AdversaryNode>> {
        debug_assert!(depth >= 1);
        let key = (belief, depth);
        if let Some(node) = self.nodes.get(&key) {
            return Ok(Rc::clone(node));
        }
        let (_, action) = self.value_normalized(key.0.clone(), depth)?;
        let mut children = BTreeMap::new();
        if depth > 1 {
            let u: Occupancy = key.0.iter().cloned().collect();
            let mut by_z: BTreeMap<usize, Occupancy> = BTreeMap::new();
            for (&s, mass) in &u {
                if let Some(row) = self.system.transitions.get(&(s, action)) {
                    for (&t, w) in row {
                        if !w.is_zero() {
                            *by_z
                                .entry(self.system.z_label(t))
                                .or_default()
                                .entry(t)
                                .or_insert_with(zero) += mass.clone() * w.clone();
                        }
                    }
                }
            }
            for (z, group) in by_z {
                if let Some((_, sub)) = normalize(&group) {
                    children.insert(z, self.witness_node(sub, depth - 1)?);
                }
            }
        }
        let node = Rc::new(AdversaryNode { action, children });
        self.nodes.insert(key, Rc::clone(&node));
        Ok(node)
    }
}

/// The probability mass a fixed adversary achieves — no maximization.
/// Fails with `MissingAdversaryEntry` when the adversary is undefined on a
/// reachable history.
pub fn evaluate_adversary(
    system: &Waz,
    target: &BTreeSet<usize>,
    adversary: &ObservationAdversary,
    horizon: usize,
) -> Result<Rational> {
    type Key = (usize, Vec<(usize, Rational)>, usize);
    // `node = None` stands for any history that fell off the explicit tree;
    // from there every choice is the default action, so one memo slot
    // (pointer 0) covers all such histories.
    fn eval(
        system: &Waz,
        target: &BTreeSet<usize>,
        default: Option<usize>,
        node: Option<&Rc<AdversaryNode>>,
        belief: Vec<(usize, Rational)>,
        depth: usize,
        memo: &mut HashMap<Key, Rational>,
    ) -> Result<Rational> {
        if depth == 0 {
            return Ok(belief
                .iter()
                .filter(|(s, _)| target.contains(s))
                .map(|(_, v)| v.clone())
                .sum());
        }
        let (a, ptr) = match node {
            Some(n) => (n.action, Rc::as_ptr(n) as usize),
            None => match default {
                Some(a) => (a, 0usize),
                None => return Err(Error::MissingAdversaryEntry("<truncated history>".into())),
            },
        };
        let key = (ptr, belief, depth);
        if let Some(hit) = memo.get(&key) {
            return Ok(hit.clone());
        }
        let u: Occupancy = key.1.iter().cloned().collect();
        let mut by_z: BTreeMap<usize, Occupancy> = BTreeMap::new();
        for (&s, mass) in &u {
            if let Some(row) = system.transitions.get(&(s, a)) {
                for (&t, w) in row {
                    if !w.is_zero() {
                        *by_z
                            .entry(system.z_label(t))
                            .or_default()
                            .entry(t)
                            .or_insert_with(zero) += mass.clone() * w.clone();
                    }
                }
            }
        }
        let mut total = zero();
        for (z, group) in by_z {
            let Some((mass, sub)) = normalize(&group) else { continue };
            let child = node.and_then(|n| n.children.get(&z));
            if child.is_none() && depth > 1 && default.is_none() {
                return Err(Error::MissingAdversaryEntry(format!(
                    "observation `{}`",
                    system.obs_labels[z]
                )));
            }
            total += mass * eval(system, target, default, child, sub, depth - 1, memo)?;
        }
        memo.insert(key, total.clone());
        Ok(total)
    }

    let initial = Occupancy::from([(system.initial, one())]);
    let Some((mass, belief)) = normalize(&initial) else { return Ok(zero()) };
    let node = if horizon > 0 { Some(&adversary.root) } else { None };
    let mut memo = HashMap::new();
    let default = adversary.default_action;
    Ok(mass * eval(system, target, default, node, belief, horizon, &mut memo)?)
}

/// Decides `system |= spec`, returning a witness adversary on violation.
pub fn model_check(system: &Waz, spec: &BoundedUntilSpec, config: &CheckConfig) -> Result<Verdict> {
    let absorbing = make_absorbing(system, spec)?;
    let target = satisfying_states(system, &spec.phi2)?;
    let initial = Occupancy::from([(system.initial, one())]);

    if let Some(adv) = &config.warm_start {
        match evaluate_adversary(&absorbing, &target, adv, spec.horizon) {
            Ok(value) if spec.cmp.violated_by(&value, &spec.threshold) => {
                return Ok(Verdict::Violated { witness: adv.clone(), max_prob: value });
            }
            Ok(_) | Err(Error::MissingAdversaryEntry(_)) => {}
            Err(e) => return Err(e),
        }
    }

    let mut vi = ValueIteration::new(&absorbing, &target, config.memo_budget);
    if config.early_exit {
        // On absorbing systems V_d(h0) is the mass reaching the target
        // within d steps, so it grows with d; the first depth that breaks
        // the threshold certifies the violation. The shared memo makes the
        // deepening passes incremental.
        for d in 0..=spec.horizon {
            let lower = vi.value_of(&initial, d)?;
            if spec.cmp.violated_by(&lower, &spec.threshold) {
                let mut witness = vi.witness(&initial, d)?.with_default(0);
                witness.horizon = spec.horizon;
                return Ok(Verdict::Violated { witness, max_prob: lower });
            }
        }
        let max_prob = vi.value_of(&initial, spec.horizon)?;
        return Ok(Verdict::Satisfied { max_prob });
    }
    let max_prob = vi.value_of(&initial, spec.horizon)?;
    if spec.cmp.violated_by(&max_prob, &spec.threshold) {
        let witness = vi.witness(&initial, spec.horizon)?;
        Ok(Verdict::Violated { witness, max_prob })
    } else {
        Ok(Verdict::Satisfied { max_prob })
    }
}
