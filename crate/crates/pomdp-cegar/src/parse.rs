//! Line-oriented text formats for models, automata, and partitions.
//!
//! A model file is a sequence of sections, each introduced by a keyword on
//! its own line, with one entry per following line. Blank lines and `#`
//! comments are ignored. A file with an `observation_function` section is a
//! POMDP; one with a `z_labels` section is a weighted automaton. All
//! probabilities are decimals or `p/q` fractions, parsed exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::abstraction::Partition;
use crate::error::{Error, Result};
use crate::model::{corresponding_waz, validate_pomdp, Pomdp, StateDecl, Waz, WazState};
use crate::rational::{decimal_string, frac_string, parse_rational, Rational};

const SECTIONS: [&str; 7] = [
    "states",
    "initial",
    "actions",
    "observations",
    "z_labels",
    "transitions",
    "observation_function",
];

/// Either input model kind; the toolkit works on the automaton view.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Pomdp(Pomdp),
    Waz(Waz),
}

impl LoadedModel {
    /// The automaton the algorithms operate on: a POMDP is translated to
    /// its corresponding weighted automaton, an automaton is used as-is.
    pub fn into_waz(self) -> Waz {
        match self {
            LoadedModel::Pomdp(pomdp) => corresponding_waz(&pomdp),
            LoadedModel::Waz(waz) => waz,
        }
    }

    pub fn as_pomdp(&self) -> Option<&Pomdp> {
        match self {
            LoadedModel::Pomdp(pomdp) => Some(pomdp),
            LoadedModel::Waz(_) => None,
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax { position: line, message: message.into() }
}

struct RawSections {
    /// section name -> entries as (line number, whitespace-split fields)
    entries: BTreeMap<String, Vec<(usize, Vec<String>)>>,
}

fn split_sections(text: &str) -> Result<RawSections> {
    let mut entries: BTreeMap<String, Vec<(usize, Vec<String>)>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if SECTIONS.contains(&content) {
            if entries.contains_key(content) {
                return Err(syntax(line, format!("duplicate section `{content}`")));
            }
            entries.insert(content.to_string(), Vec::new());
            current = Some(content.to_string());
            continue;
        }
        let section = current
            .clone()
            .ok_or_else(|| syntax(line, format!("`{content}` appears before any section header")))?;
        let fields = content.split_whitespace().map(str::to_string).collect();
        entries.get_mut(&section).unwrap().push((line, fields));
    }
    Ok(RawSections { entries })
}

impl RawSections {
    fn require(&self, name: &str) -> Result<&Vec<(usize, Vec<String>)>> {
        self.entries
            .get(name)
            .ok_or_else(|| syntax(0, format!("missing required section `{name}`")))
    }

    fn names(&self, section: &str) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for (line, fields) in self.require(section)? {
            if fields.len() != 1 {
                return Err(syntax(*line, format!("expected a single name in `{section}`")));
            }
            if out.contains(&fields[0]) {
                return Err(syntax(*line, format!("duplicate name `{}`", fields[0])));
            }
            out.push(fields[0].clone());
        }
        Ok(out)
    }
}

fn parse_states(raw: &RawSections) -> Result<Vec<StateDecl>> {
    let mut states: Vec<StateDecl> = Vec::new();
    for (line, fields) in raw.require("states")? {
        if states.iter().any(|st| st.name == fields[0]) {
            return Err(syntax(*line, format!("duplicate state `{}`", fields[0])));
        }
        states.push(StateDecl {
            name: fields[0].clone(),
            labels: fields[1..].iter().cloned().collect(),
        });
    }
    if states.is_empty() {
        return Err(syntax(0, "`states` section is empty"));
    }
    Ok(states)
}

fn lookup(names: &[String], name: &str, line: usize, kind: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| syntax(line, format!("unknown {kind} `{name}`")))
}

fn parse_prob(text: &str, line: usize) -> Result<Rational> {
    parse_rational(text).map_err(|_| syntax(line, format!("malformed probability `{text}`")))
}

fn parse_initial(raw: &RawSections, state_names: &[String]) -> Result<usize> {
    let entries = raw.require("initial")?;
    match entries.as_slice() {
        [(line, fields)] if fields.len() == 1 => lookup(state_names, &fields[0], *line, "state"),
        [(line, _)] => Err(syntax(*line, "expected a single state name in `initial`")),
        _ => Err(syntax(0, "`initial` must contain exactly one entry")),
    }
}

type WeightRows = BTreeMap<(usize, usize), BTreeMap<usize, Rational>>;

fn parse_transitions(
    raw: &RawSections,
    state_names: &[String],
    action_names: &[String],
) -> Result<WeightRows> {
    let mut rows: WeightRows = BTreeMap::new();
    for (line, fields) in raw.require("transitions")? {
        let [s, a, t, prob] = fields.as_slice() else {
            return Err(syntax(*line, "expected `state action successor probability`"));
        };
        let s = lookup(state_names, s, *line, "state")?;
        let a = lookup(action_names, a, *line, "action")?;
        let t = lookup(state_names, t, *line, "state")?;
        let prob = parse_prob(prob, *line)?;
        if rows.entry((s, a)).or_default().insert(t, prob).is_some() {
            return Err(syntax(*line, "duplicate transition entry"));
        }
    }
    Ok(rows)
}

/// Parses and validates a model file of either kind.
pub fn parse_model(text: &str) -> Result<LoadedModel> {
    let raw = split_sections(text)?;
    let is_pomdp = raw.entries.contains_key("observation_function");
    let is_waz = raw.entries.contains_key("z_labels");
    match (is_pomdp, is_waz) {
        (true, false) => parse_pomdp_sections(&raw).map(LoadedModel::Pomdp),
        (false, true) => parse_waz_sections(&raw).map(LoadedModel::Waz),
        (true, true) => Err(syntax(0, "model mixes `observation_function` and `z_labels`")),
        (false, false) => Err(syntax(
            0,
            "model needs an `observation_function` (POMDP) or `z_labels` (automaton) section",
        )),
    }
}

fn parse_pomdp_sections(raw: &RawSections) -> Result<Pomdp> {
    let states = parse_states(raw)?;
    let state_names: Vec<String> = states.iter().map(|st| st.name.clone()).collect();
    let actions = raw.names("actions")?;
    let observations = raw.names("observations")?;
    let initial = parse_initial(raw, &state_names)?;
    let transitions = parse_transitions(raw, &state_names, &actions)?;
    let mut obs_fn: BTreeMap<usize, BTreeMap<usize, Rational>> = BTreeMap::new();
    for (line, fields) in raw.require("observation_function")? {
        let [s, z, prob] = fields.as_slice() else {
            return Err(syntax(*line, "expected `state observation probability`"));
        };
        let s = lookup(&state_names, s, *line, "state")?;
        let z = lookup(&observations, z, *line, "observation")?;
        let prob = parse_prob(prob, *line)?;
        if obs_fn.entry(s).or_default().insert(z, prob).is_some() {
            return Err(syntax(*line, "duplicate observation entry"));
        }
    }
    validate_pomdp(Pomdp { states, initial, actions, observations, transitions, obs_fn })
}

fn parse_waz_sections(raw: &RawSections) -> Result<Waz> {
    let decls = parse_states(raw)?;
    let state_names: Vec<String> = decls.iter().map(|st| st.name.clone()).collect();
    let actions = raw.names("actions")?;
    let obs_labels = raw.names("observations")?;
    let initial = parse_initial(raw, &state_names)?;
    let transitions = parse_transitions(raw, &state_names, &actions)?;
    let mut z_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (line, fields) in raw.require("z_labels")? {
        let [s, z] = fields.as_slice() else {
            return Err(syntax(*line, "expected `state observation`"));
        };
        let s = lookup(&state_names, s, *line, "state")?;
        let z = lookup(&obs_labels, z, *line, "observation")?;
        if z_of.insert(s, z).is_some() {
            return Err(syntax(*line, "duplicate z-label entry"));
        }
    }
    let states: Vec<WazState> = decls
        .into_iter()
        .enumerate()
        .map(|(i, decl)| {
            let z = z_of.get(&i).copied().ok_or_else(|| {
                syntax(0, format!("state `{}` has no z-label", decl.name))
            })?;
            Ok(WazState { name: decl.name, labels: decl.labels, z })
        })
        .collect::<Result<_>>()?;
    let waz = Waz { states, initial, actions, obs_labels, transitions };
    waz.validate()?;
    Ok(waz)
}

/// Writes an automaton in the model file format; output is byte-deterministic
/// and round-trips through [`parse_model`].
pub fn write_waz(waz: &Waz) -> String {
    let mut out = String::new();
    out.push_str("states\n");
    for st in &waz.states {
        let labels: Vec<&str> = st.labels.iter().map(String::as_str).collect();
        let _ = writeln!(out, "  {}{}{}", st.name, if labels.is_empty() { "" } else { " " }, labels.join(" "));
    }
    let _ = writeln!(out, "initial\n  {}", waz.states[waz.initial].name);
    out.push_str("actions\n");
    for a in &waz.actions {
        let _ = writeln!(out, "  {a}");
    }
    out.push_str("observations\n");
    for z in &waz.obs_labels {
        let _ = writeln!(out, "  {z}");
    }
    out.push_str("z_labels\n");
    for st in &waz.states {
        let _ = writeln!(out, "  {} {}", st.name, waz.obs_labels[st.z]);
    }
    out.push_str("transitions\n");
    for (&(s, a), row) in &waz.transitions {
        for (&t, w) in row {
            let _ = writeln!(
                out,
                "  {} {} {} {}",
                waz.states[s].name,
                waz.actions[a],
                waz.states[t].name,
                frac_string(w)
            );
        }
    }
    out
}

/// Writes a POMDP in the model file format; round-trips through
/// [`parse_model`].
pub fn write_pomdp(pomdp: &Pomdp) -> String {
    let mut out = String::new();
    out.push_str("states\n");
    for st in &pomdp.states {
        let labels: Vec<&str> = st.labels.iter().map(String::as_str).collect();
        let _ = writeln!(out, "  {}{}{}", st.name, if labels.is_empty() { "" } else { " " }, labels.join(" "));
    }
    let _ = writeln!(out, "initial\n  {}", pomdp.states[pomdp.initial].name);
    out.push_str("actions\n");
    for a in &pomdp.actions {
        let _ = writeln!(out, "  {a}");
    }
    out.push_str("observations\n");
    for z in &pomdp.observations {
        let _ = writeln!(out, "  {z}");
    }
    out.push_str("transitions\n");
    for (&(s, a), row) in &pomdp.transitions {
        for (&t, w) in row {
            let _ = writeln!(
                out,
                "  {} {} {} {}",
                pomdp.states[s].name,
                pomdp.actions[a],
                pomdp.states[t].name,
                frac_string(w)
            );
        }
    }
    out.push_str("observation_function\n");
    for (&s, row) in &pomdp.obs_fn {
        for (&z, w) in row {
            let _ = writeln!(
                out,
                "  {} {} {}",
                pomdp.states[s].name,
                pomdp.observations[z],
                frac_string(w)
            );
        }
    }
    out
}

/// Partition file: one block per line, `name: member member ...`, members
/// given by state name in the automaton the partition applies to.
pub fn parse_partition(text: &str, system: &Waz) -> Result<(Partition, Vec<String>)> {
    let mut blocks: Vec<BTreeSet<usize>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (name, members) = content
            .split_once(':')
            .ok_or_else(|| syntax(line, "expected `name: member member ...`"))?;
        let name = name.trim().to_string();
        if names.contains(&name) {
            return Err(syntax(line, format!("duplicate block `{name}`")));
        }
        let mut block = BTreeSet::new();
        for member in members.split_whitespace() {
            let s = system
                .state_index(member)
                .ok_or_else(|| syntax(line, format!("unknown state `{member}`")))?;
            block.insert(s);
        }
        if block.is_empty() {
            return Err(syntax(line, format!("block `{name}` has no members")));
        }
        names.push(name);
        blocks.push(block);
    }
    let partition = Partition::new(blocks);
    partition.check_consistent(system)?;
    Ok((partition, names))
}

pub fn write_partition(partition: &Partition, system: &Waz) -> String {
    let mut out = String::new();
    for (b, block) in partition.blocks.iter().enumerate() {
        let members: Vec<&str> =
            block.iter().map(|&s| system.states[s].name.as_str()).collect();
        let _ = writeln!(out, "t{b}: {}", members.join(" "));
    }
    out
}

/// "p/q (decimal)" rendering used throughout the human-readable reports.
pub fn prob_string(r: &Rational) -> String {
    format!("{} ({})", frac_string(r), decimal_string(r))
}
