//! POMDPs, z-labeled 0/1-weighted automata, and paths.
//!
//! States, actions and observation labels are identified by their index in
//! declaration order; that order is the tie-break basis for everything
//! downstream. All structures are immutable after construction.

use std::collections::{BTreeMap, BTreeSet};

use num::One;

use crate::error::{Error, Result};
use crate::rational::{frac_string, in_unit_interval, one, zero, Rational};

/// Observation label assigned to the initial state of a corresponding
/// weighted automaton.
pub const INIT_OBS: &str = "init";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDecl {
    pub name: String,
    pub labels: BTreeSet<String>,
}

/// A POMDP: states with probabilistic observations, stochastic transitions.
#[derive(Debug, Clone)]
pub struct Pomdp {
    pub states: Vec<StateDecl>,
    pub initial: usize,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    /// `(state, action) -> successor -> probability`; rows must sum to 1.
    pub transitions: BTreeMap<(usize, usize), BTreeMap<usize, Rational>>,
    /// `state -> observation -> probability`; rows must sum to 1.
    pub obs_fn: BTreeMap<usize, BTreeMap<usize, Rational>>,
}

impl Pomdp {
    pub fn transition(&self, s: usize, a: usize, t: usize) -> Rational {
        self.transitions
            .get(&(s, a))
            .and_then(|row| row.get(&t))
            .cloned()
            .unwrap_or_else(zero)
    }

    pub fn observe(&self, s: usize, z: usize) -> Rational {
        self.obs_fn
            .get(&s)
            .and_then(|row| row.get(&z))
            .cloned()
            .unwrap_or_else(zero)
    }
}

/// Checks the stochasticity and reference invariants of a raw model.
pub fn validate_pomdp(model: Pomdp) -> Result<Pomdp> {
    if model.initial >= model.states.len() {
        return Err(Error::DanglingReference {
            name: format!("state #{}", model.initial),
            context: "initial state".into(),
        });
    }
    for (&(s, a), row) in &model.transitions {
        if s >= model.states.len() || a >= model.actions.len() {
            return Err(Error::DanglingReference {
                name: format!("({s},{a})"),
                context: "transition row".into(),
            });
        }
        for (&t, w) in row {
            if t >= model.states.len() {
                return Err(Error::DanglingReference {
                    name: format!("state #{t}"),
                    context: format!("transitions of ({}, {})", model.states[s].name, model.actions[a]),
                });
            }
            if !in_unit_interval(w) {
                return Err(Error::Model(format!(
                    "transition weight {} of ({}, {}) outside [0,1]",
                    frac_string(w),
                    model.states[s].name,
                    model.actions[a]
                )));
            }
        }
    }
    for s in 0..model.states.len() {
        for a in 0..model.actions.len() {
            let sum: Rational = model
                .transitions
                .get(&(s, a))
                .map(|row| row.values().sum())
                .unwrap_or_else(zero);
            if !sum.is_one() {
                return Err(Error::RowSum {
                    context: format!("({}, {})", model.states[s].name, model.actions[a]),
                    sum: frac_string(&sum),
                });
            }
        }
        let osum: Rational = model
            .obs_fn
            .get(&s)
            .map(|row| row.values().sum())
            .unwrap_or_else(zero);
        if !osum.is_one() {
            return Err(Error::RowSum {
                context: model.states[s].name.clone(),
                sum: frac_string(&osum),
            });
        }
    }
    for (&s, row) in &model.obs_fn {
        if s >= model.states.len() {
            return Err(Error::DanglingReference {
                name: format!("state #{s}"),
                context: "observation function".into(),
            });
        }
        for (&z, w) in row {
            if z >= model.observations.len() {
                return Err(Error::DanglingReference {
                    name: format!("observation #{z}"),
                    context: format!("observations of {}", model.states[s].name),
                });
            }
            if !in_unit_interval(w) {
                return Err(Error::Model(format!(
                    "observation weight {} of {} outside [0,1]",
                    frac_string(w),
                    model.states[s].name
                )));
            }
        }
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WazState {
    pub name: String,
    pub labels: BTreeSet<String>,
    /// Index into `obs_labels`.
    pub z: usize,
}

/// A z-labeled 0/1-weighted automaton. Transition weights lie in [0,1] but
/// rows need not sum to 1; every state carries a single observation label.
#[derive(Debug, Clone)]
pub struct Waz {
    pub states: Vec<WazState>,
    pub initial: usize,
    pub actions: Vec<String>,
    pub obs_labels: Vec<String>,
    pub transitions: BTreeMap<(usize, usize), BTreeMap<usize, Rational>>,
}

impl Waz {
    pub fn weight(&self, s: usize, a: usize, t: usize) -> Rational {
        self.transitions
            .get(&(s, a))
            .and_then(|row| row.get(&t))
            .cloned()
            .unwrap_or_else(zero)
    }

    /// Successor row for `(s, a)`, in state order. Empty when none declared.
    pub fn row(&self, s: usize, a: usize) -> BTreeMap<usize, Rational> {
        self.transitions.get(&(s, a)).cloned().unwrap_or_default()
    }

    pub fn z_label(&self, s: usize) -> usize {
        self.states[s].z
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|st| st.name == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn obs_index(&self, name: &str) -> Option<usize> {
        self.obs_labels.iter().position(|z| z == name)
    }

    /// Checks weight bounds and reference validity for hand-written models.
    pub fn validate(&self) -> Result<()> {
        for (&(s, a), row) in &self.transitions {
            if s >= self.states.len() || a >= self.actions.len() {
                return Err(Error::DanglingReference {
                    name: format!("({s},{a})"),
                    context: "transition row".into(),
                });
            }
            for (&t, w) in row {
                if t >= self.states.len() {
                    return Err(Error::DanglingReference {
                        name: format!("state #{t}"),
                        context: format!("transitions of ({}, {})", self.states[s].name, self.actions[a]),
                    });
                }
                if !in_unit_interval(w) {
                    return Err(Error::Model(format!(
                        "weight {} of ({}, {}) outside [0,1]",
                        frac_string(w),
                        self.states[s].name,
                        self.actions[a]
                    )));
                }
            }
        }
        for st in &self.states {
            if st.z >= self.obs_labels.len() {
                return Err(Error::DanglingReference {
                    name: format!("observation #{}", st.z),
                    context: format!("z-label of {}", st.name),
                });
            }
        }
        Ok(())
    }
}

/// A finite path `s0 a0 s1 a1 ... sn`; the length is the transition count.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

impl Path {
    pub fn new(states: Vec<usize>, actions: Vec<usize>) -> Self {
        assert_eq!(states.len(), actions.len() + 1, "malformed path");
        Path { states, actions }
    }

    pub fn singleton(state: usize) -> Self {
        Path { states: vec![state], actions: vec![] }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn state(&self, i: usize) -> usize {
        self.states[i]
    }

    pub fn last(&self) -> usize {
        *self.states.last().unwrap()
    }

    pub fn display(&self, system: &Waz) -> String {
        let mut out = system.states[self.states[0]].name.clone();
        for (i, &a) in self.actions.iter().enumerate() {
            out.push_str(&format!(" -{}-> {}", system.actions[a], system.states[self.states[i + 1]].name));
        }
        out
    }
}

/// `Pr(i,j)`: the product of transition weights from the `i`th to the `j`th
/// state of `path`; 1 when `i = j`.
pub fn path_probability(system: &Waz, path: &Path, i: usize, j: usize) -> Result<Rational> {
    if i > j || j > path.len() {
        return Err(Error::IndexOutOfRange { i, j, len: path.len() });
    }
    let mut product = one();
    for k in i..j {
        product *= system.weight(path.states[k], path.actions[k], path.states[k + 1]);
    }
    Ok(product)
}

/// The observation sequence of a path: z-labels interleaved with actions.
pub fn observation_sequence(system: &Waz, path: &Path) -> Vec<(usize, Option<usize>)> {
    let mut out = Vec::with_capacity(path.states.len());
    for (i, &s) in path.states.iter().enumerate() {
        out.push((system.z_label(s), path.actions.get(i).copied()));
    }
    out
}

pub fn observation_sequence_string(system: &Waz, path: &Path) -> String {
    observation_sequence(system, path)
        .iter()
        .map(|(z, a)| match a {
            Some(a) => format!("{} {}", system.obs_labels[*z], system.actions[*a]),
            None => system.obs_labels[*z].clone(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// The guided construction: states `[s,z]` with the observation function
/// folded into the transition weights. Pairs with `O(s,z) = 0` are omitted.
/// With z-labels attached this is the corresponding weighted automaton, so
/// both constructions share this function.
pub fn corresponding_waz(pomdp: &Pomdp) -> Waz {
    let mut states = vec![WazState {
        name: pomdp.states[pomdp.initial].name.clone(),
        labels: pomdp.states[pomdp.initial].labels.clone(),
        z: 0,
    }];
    let mut obs_labels = vec![INIT_OBS.to_string()];
    obs_labels.extend(pomdp.observations.iter().cloned());

    // guided state [s,z] -> index, in (state, observation) declaration order
    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (s, decl) in pomdp.states.iter().enumerate() {
        for (z, obs) in pomdp.observations.iter().enumerate() {
            if pomdp.observe(s, z) > zero() {
                index.insert((s, z), states.len());
                states.push(WazState {
                    name: format!("{}@{}", decl.name, obs),
                    labels: decl.labels.clone(),
                    z: z + 1,
                });
            }
        }
    }

    // every guided state [s,z] shares the transition row of s
    let mut sources: Vec<(usize, usize)> = vec![(0, pomdp.initial)];
    sources.extend(index.iter().map(|(&(s, _), &i)| (i, s)));

    let mut transitions: BTreeMap<(usize, usize), BTreeMap<usize, Rational>> = BTreeMap::new();
    for (from, s) in sources {
        for a in 0..pomdp.actions.len() {
            let Some(prow) = pomdp.transitions.get(&(s, a)) else { continue };
            let mut row: BTreeMap<usize, Rational> = BTreeMap::new();
            for (&t, w) in prow {
                for (&(_, tz), &ti) in index.range((t, 0)..(t, usize::MAX)) {
                    let weight = w.clone() * pomdp.observe(t, tz);
                    if weight > zero() {
                        row.insert(ti, weight);
                    }
                }
            }
            if !row.is_empty() {
                transitions.insert((from, a), row);
            }
        }
    }

    Waz {
        states,
        initial: 0,
        actions: pomdp.actions.clone(),
        obs_labels,
        transitions,
    }
}

/// The guided MDP alone: the corresponding automaton with z-labels dropped.
/// Rows of the result are stochastic.
pub fn guided_mdp(pomdp: &Pomdp) -> Waz {
    let mut waz = corresponding_waz(pomdp);
    for st in &mut waz.states {
        st.z = 0;
    }
    waz.obs_labels = vec![INIT_OBS.to_string()];
    waz
}

/// Ready-made example models used by the documentation, the cargo
/// examples, and the test suite.
pub mod fixtures {
    use super::*;
    use crate::rational::ratio;

    /// The chain POMDP with parameter `n` (even, >= 2): states
    /// `s_0..s_{n-1}`, `s_even`, `s_odd`, `s_f` (labeled `fail`).
    pub fn chain_pomdp(n: usize) -> Pomdp {
        assert!(n >= 2 && n % 2 == 0);
        let mut states: Vec<StateDecl> = (0..n)
            .map(|i| StateDecl { name: format!("s{i}"), labels: BTreeSet::new() })
            .collect();
        states.push(StateDecl { name: "s_even".into(), labels: BTreeSet::new() });
        states.push(StateDecl { name: "s_odd".into(), labels: BTreeSet::new() });
        states.push(StateDecl { name: "s_f".into(), labels: BTreeSet::from(["fail".to_string()]) });
        let i_even = n;
        let i_odd = n + 1;
        let i_f = n + 2;
        let actions = vec!["a".to_string(), "b".to_string()];
        let observations = vec!["z_f".to_string(), "z_even".to_string(), "z_odd".to_string()];

        let mut transitions: BTreeMap<(usize, usize), BTreeMap<usize, Rational>> = BTreeMap::new();
        let quarter = ratio(1, 4);
        let half = ratio(1, 2);
        for i in 0..n {
            let mut row = BTreeMap::new();
            if i + 1 < n {
                row.insert(i + 1, half.clone());
            } else {
                row.insert(i, half.clone());
            }
            *row.entry(i_f).or_insert_with(zero) += quarter.clone();
            let side = if i % 2 == 0 { i_even } else { i_odd };
            *row.entry(side).or_insert_with(zero) += quarter.clone();
            transitions.insert((i, 0), row);
            transitions.insert((i, 1), BTreeMap::from([(i, one())]));
        }
        transitions.insert((i_even, 0), BTreeMap::from([(i_even, one())]));
        transitions.insert((i_even, 1), BTreeMap::from([(i_even, one())]));
        transitions.insert((i_odd, 0), BTreeMap::from([(i_odd, half.clone()), (i_f, half.clone())]));
        transitions.insert((i_odd, 1), BTreeMap::from([(i_odd, one())]));
        transitions.insert((i_f, 0), BTreeMap::from([(i_f, one())]));
        transitions.insert((i_f, 1), BTreeMap::from([(i_f, one())]));

        let mut obs_fn: BTreeMap<usize, BTreeMap<usize, Rational>> = BTreeMap::new();
        for i in 0..n {
            let (even_p, odd_p) = if i % 2 == 0 {
                (ratio(19, 20), ratio(1, 20))
            } else {
                (ratio(1, 20), ratio(19, 20))
            };
            obs_fn.insert(i, BTreeMap::from([(1, even_p), (2, odd_p)]));
        }
        obs_fn.insert(i_even, BTreeMap::from([(1, one())]));
        obs_fn.insert(i_odd, BTreeMap::from([(2, one())]));
        obs_fn.insert(i_f, BTreeMap::from([(0, one())]));

        validate_pomdp(Pomdp {
            states,
            initial: 0,
            actions,
            observations,
            transitions,
            obs_fn,
        })
        .expect("fixture is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::chain_pomdp;
    use super::*;
    use crate::rational::{parse_rational, ratio};

    fn one_state_pomdp() -> Pomdp {
        Pomdp {
            states: vec![StateDecl { name: "s".into(), labels: BTreeSet::new() }],
            initial: 0,
            actions: vec!["a".into()],
            observations: vec!["z".into()],
            transitions: BTreeMap::from([((0, 0), BTreeMap::from([(0, one())]))]),
            obs_fn: BTreeMap::from([(0, BTreeMap::from([(0, one())]))]),
        }
    }

    #[test]
    fn chain_n2_is_valid() {
        chain_pomdp(2);
    }

    #[test]
    fn single_self_loop_is_valid() {
        validate_pomdp(one_state_pomdp()).unwrap();
    }

    #[test]
    fn broken_observation_row_is_reported() {
        let mut model = chain_pomdp(2);
        model
            .obs_fn
            .get_mut(&0)
            .unwrap()
            .insert(1, parse_rational("0.9").unwrap());
        match validate_pomdp(model) {
            Err(Error::RowSum { context, .. }) => assert_eq!(context, "s0"),
            other => panic!("expected RowSum on s0, got {other:?}"),
        }
    }

    #[test]
    fn guided_weights_match_hand_computation() {
        let waz = corresponding_waz(&chain_pomdp(2));
        let s1_odd = waz.state_index("s1@z_odd").unwrap();
        let s1_even = waz.state_index("s1@z_even").unwrap();
        let a = waz.action_index("a").unwrap();
        assert_eq!(waz.weight(waz.initial, a, s1_odd), ratio(19, 40));
        assert_eq!(waz.weight(waz.initial, a, s1_even), ratio(1, 40));
    }

    #[test]
    fn guided_mdp_is_stochastic() {
        let mdp = guided_mdp(&chain_pomdp(4));
        for s in 0..mdp.states.len() {
            for a in 0..mdp.actions.len() {
                let sum: Rational = mdp.row(s, a).values().sum();
                assert!(sum.is_one(), "row ({s},{a}) sums to {}", frac_string(&sum));
            }
        }
    }

    #[test]
    fn perfect_observation_reproduces_transitions() {
        // Dirac observations: the guided MDP is isomorphic to the POMDP.
        let mut model = one_state_pomdp();
        model.states.push(StateDecl { name: "t".into(), labels: BTreeSet::new() });
        model.observations.push("zt".into());
        model.transitions.insert((0, 0), BTreeMap::from([(0, ratio(1, 2)), (1, ratio(1, 2))]));
        model.transitions.insert((1, 0), BTreeMap::from([(1, one())]));
        model.obs_fn.insert(1, BTreeMap::from([(1, one())]));
        let model = validate_pomdp(model).unwrap();
        let mdp = guided_mdp(&model);
        let gs = mdp.state_index("s@z").unwrap();
        let gt = mdp.state_index("t@zt").unwrap();
        assert_eq!(mdp.weight(mdp.initial, 0, gs), ratio(1, 2));
        assert_eq!(mdp.weight(mdp.initial, 0, gt), ratio(1, 2));
        assert_eq!(mdp.weight(gs, 0, gs), ratio(1, 2));
        assert_eq!(mdp.weight(gt, 0, gt), one());
    }

    #[test]
    fn corresponding_waz_state_count() {
        // 1 initial + 2*2 chain pairs + 3 terminal pairs for n = 2.
        let waz = corresponding_waz(&chain_pomdp(2));
        assert_eq!(waz.states.len(), 8);
        let sf = waz.state_index("s_f@z_f").unwrap();
        assert_eq!(waz.obs_labels[waz.z_label(sf)], "z_f");
        assert!(waz.states[sf].labels.contains("fail"));
        assert_eq!(waz.obs_labels[waz.z_label(waz.initial)], INIT_OBS);
    }

    #[test]
    fn one_state_pomdp_gives_two_state_waz() {
        let waz = corresponding_waz(&one_state_pomdp());
        assert_eq!(waz.states.len(), 2);
    }

    #[test]
    fn path_probability_products() {
        let waz = corresponding_waz(&chain_pomdp(2));
        let s1_odd = waz.state_index("s1@z_odd").unwrap();
        let sf = waz.state_index("s_f@z_f").unwrap();
        let a = waz.action_index("a").unwrap();
        let path = Path::new(vec![waz.initial, s1_odd, sf], vec![a, a]);
        assert_eq!(path_probability(&waz, &path, 0, 2).unwrap(), ratio(19, 160));
        assert_eq!(path_probability(&waz, &path, 1, 1).unwrap(), one());
        assert_eq!(
            path_probability(&waz, &path, 0, 2).unwrap(),
            path_probability(&waz, &path, 0, 1).unwrap() * path_probability(&waz, &path, 1, 2).unwrap()
        );
        assert!(matches!(
            path_probability(&waz, &path, 0, 3),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn observation_sequences() {
        let waz = corresponding_waz(&chain_pomdp(2));
        let s1_odd = waz.state_index("s1@z_odd").unwrap();
        let sf = waz.state_index("s_f@z_f").unwrap();
        let a = waz.action_index("a").unwrap();
        let path = Path::new(vec![waz.initial, s1_odd, sf], vec![a, a]);
        assert_eq!(observation_sequence_string(&waz, &path), "init a z_odd a z_f");
        assert_eq!(observation_sequence_string(&waz, &Path::singleton(waz.initial)), "init");
    }
}
