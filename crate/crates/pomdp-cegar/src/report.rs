//! Deterministic report rendering for the command-line front end.
//!
//! Human reports print exact fractions alongside decimals; structured
//! reports are a single JSON document carrying only exact fractions, with
//! no timestamps, so identical inputs yield identical bytes.

use std::fmt::Write as _;
use std::rc::Rc;

use serde_json::{json, Value};

use crate::abstraction::{Partition, SimRelation};
use crate::adversary::{AdversaryNode, ObservationAdversary};
use crate::cegar::{CegarOutcome, IterationRecord};
use crate::cex::Counterexample;
use crate::checker::Verdict;
use crate::model::{Path, Waz};
use crate::parse::prob_string;
use crate::rational::frac_string;

fn path_string(system: &Waz, path: &Path) -> String {
    let mut out = system.states[path.states[0]].name.clone();
    for (i, &a) in path.actions.iter().enumerate() {
        let _ = write!(out, " -{}-> {}", system.actions[a], system.states[path.states[i + 1]].name);
    }
    out
}

fn path_json(system: &Waz, path: &Path) -> Value {
    json!({
        "states": path.states.iter().map(|&s| system.states[s].name.clone()).collect::<Vec<_>>(),
        "actions": path.actions.iter().map(|&a| system.actions[a].clone()).collect::<Vec<_>>(),
    })
}

/// Flattens the adversary tree into `history -> action` rows with names.
fn adversary_rows(adv: &ObservationAdversary, system: &Waz) -> Vec<(String, String)> {
    let mut rows = Vec::new();
    let mut stack: Vec<(Vec<usize>, Rc<AdversaryNode>)> = vec![(vec![], Rc::clone(&adv.root))];
    while let Some((prefix, node)) = stack.pop() {
        let history = if prefix.is_empty() {
            "<initial>".to_string()
        } else {
            prefix
                .iter()
                .map(|&z| system.obs_labels[z].clone())
                .collect::<Vec<_>>()
                .join(" ")
        };
        rows.push((history, system.actions[node.action].clone()));
        for (&z, child) in node.children.iter().rev() {
            let mut next = prefix.clone();
            next.push(z);
            stack.push((next, Rc::clone(child)));
        }
    }
    if let Some(action) = adv.default_action {
        rows.push(("<otherwise>".to_string(), system.actions[action].clone()));
    }
    rows
}

fn adversary_human(adv: &ObservationAdversary, system: &Waz, out: &mut String) {
    out.push_str("witness adversary (observation history -> action):\n");
    for (history, action) in adversary_rows(adv, system) {
        let _ = writeln!(out, "  {history} -> {action}");
    }
}

fn adversary_json(adv: &ObservationAdversary, system: &Waz) -> Value {
    Value::Array(
        adversary_rows(adv, system)
            .into_iter()
            .map(|(history, action)| json!({ "history": history, "action": action }))
            .collect(),
    )
}

fn cex_human(cex: &Counterexample, system: &Waz, out: &mut String) {
    let _ = writeln!(out, "  CE total = {}", prob_string(&cex.total));
    for (path, prob) in &cex.paths {
        let _ = writeln!(out, "    {}  : {}", path_string(system, path), prob_string(prob));
    }
}

fn cex_json(cex: &Counterexample, system: &Waz) -> Value {
    json!({
        "total": frac_string(&cex.total),
        "paths": cex.paths.iter().map(|(path, prob)| {
            let mut v = path_json(system, path);
            v["probability"] = Value::String(frac_string(prob));
            v
        }).collect::<Vec<_>>(),
    })
}

pub fn check_human(system: &Waz, verdict: &Verdict) -> String {
    let mut out = String::new();
    match verdict {
        Verdict::Satisfied { max_prob } => {
            out.push_str("verdict: SATISFIED\n");
            let _ = writeln!(out, "value = {}", prob_string(max_prob));
        }
        Verdict::Violated { witness, max_prob } => {
            out.push_str("verdict: VIOLATED\n");
            let _ = writeln!(out, "crossing value = {}", prob_string(max_prob));
            adversary_human(witness, system, &mut out);
        }
    }
    out
}

pub fn check_structured(system: &Waz, verdict: &Verdict) -> String {
    let doc = match verdict {
        Verdict::Satisfied { max_prob } => json!({
            "command": "check",
            "verdict": "satisfied",
            "value": frac_string(max_prob),
        }),
        Verdict::Violated { witness, max_prob } => json!({
            "command": "check",
            "verdict": "violated",
            "value": frac_string(max_prob),
            "witness": adversary_json(witness, system),
        }),
    };
    serde_json::to_string_pretty(&doc).expect("report serialization")
}

fn iteration_human(
    n: usize,
    it: &IterationRecord,
    quotients: &[Waz],
    partitions: &[Partition],
    concrete: &Waz,
    out: &mut String,
) {
    let quot = &quotients[n];
    let _ = writeln!(out, "iteration {}: |partition| = {}", n + 1, it.partition_size);
    if it.violated {
        let _ = writeln!(out, "  verdict: VIOLATED (crossing value = {})", prob_string(&it.checked_value));
    } else {
        let _ = writeln!(out, "  verdict: SATISFIED (value = {})", prob_string(&it.checked_value));
    }
    if let Some(cex) = &it.cex {
        cex_human(cex, quot, out);
    }
    match it.spurious {
        Some(true) => out.push_str("  spurious: yes\n"),
        Some(false) => out.push_str("  spurious: no\n"),
        None => {}
    }
    for (k, split) in it.splits.iter().enumerate() {
        let moved: Vec<&str> =
            split.plan.moved.iter().map(|&s| concrete.states[s].name.as_str()).collect();
        let _ = writeln!(
            out,
            "  split {{{}}} from block t{} into t{} (predicted r = {})",
            moved.join(" "),
            split.plan.block,
            partitions[n].len() + k,
            prob_string(&split.plan.predicted_r),
        );
        let _ = writeln!(out, "  CE mass after refinement = {}", prob_string(&split.mass_after));
    }
}

fn iteration_json(
    n: usize,
    it: &IterationRecord,
    quotients: &[Waz],
    concrete: &Waz,
) -> Value {
    json!({
        "partition_size": it.partition_size,
        "verdict": if it.violated { "violated" } else { "satisfied" },
        "value": frac_string(&it.checked_value),
        "counterexample": it.cex.as_ref().map(|cex| cex_json(cex, &quotients[n])),
        "spurious": it.spurious,
        "splits": it.splits.iter().map(|split| json!({
            "block": format!("t{}", split.plan.block),
            "moved": split.plan.moved.iter()
                .map(|&s| concrete.states[s].name.clone()).collect::<Vec<_>>(),
            "predicted_r": frac_string(&split.plan.predicted_r),
            "ce_mass_after": frac_string(&split.mass_after),
        })).collect::<Vec<_>>(),
    })
}

/// Per-iteration quotients and partitions, reconstructed from the records
/// so reports can name states; `partitions[i]` was checked at iteration i.
pub struct CegarContext {
    pub quotients: Vec<Waz>,
    pub partitions: Vec<Partition>,
}

pub fn cegar_human(outcome: &CegarOutcome, ctx: &CegarContext, concrete: &Waz) -> String {
    let mut out = String::new();
    for (n, it) in outcome.iterations().iter().enumerate() {
        iteration_human(n, it, &ctx.quotients, &ctx.partitions, concrete, &mut out);
    }
    match outcome {
        CegarOutcome::Proved { partition, .. } => {
            out.push_str("outcome: PROVED\n");
            let _ = writeln!(out, "final partition has {} blocks", partition.len());
            if partition.len() == concrete.states.len() {
                out.push_str("note: refinement degenerated to the discrete partition\n");
            }
        }
        CegarOutcome::Disproved { realizable_mass, counterexample, .. } => {
            out.push_str("outcome: DISPROVED\n");
            let _ = writeln!(out, "realizable CE mass = {}", prob_string(realizable_mass));
            let _ = writeln!(
                out,
                "spec: {} {} violated on the concrete system",
                counterexample.spec.cmp.symbol(),
                prob_string(&counterexample.spec.threshold)
            );
        }
    }
    out
}

pub fn cegar_structured(outcome: &CegarOutcome, ctx: &CegarContext, concrete: &Waz) -> String {
    let iterations: Vec<Value> = outcome
        .iterations()
        .iter()
        .enumerate()
        .map(|(n, it)| iteration_json(n, it, &ctx.quotients, concrete))
        .collect();
    let doc = match outcome {
        CegarOutcome::Proved { partition, .. } => json!({
            "command": "cegar",
            "outcome": "proved",
            "iterations": iterations,
            "final_partition": partition.blocks.iter().map(|block| {
                block.iter().map(|&s| concrete.states[s].name.clone()).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
        }),
        CegarOutcome::Disproved { realizable_mass, .. } => json!({
            "command": "cegar",
            "outcome": "disproved",
            "iterations": iterations,
            "realizable_mass": frac_string(realizable_mass),
        }),
    };
    serde_json::to_string_pretty(&doc).expect("report serialization")
}

pub fn simcheck_human(relation: Option<&SimRelation>, sys1: &Waz, sys2: &Waz) -> String {
    match relation {
        None => "NOT SIMULATED\n".to_string(),
        Some(rel) => {
            let mut out = String::new();
            let _ = writeln!(out, "SIMULATED ({} pairs)", rel.pairs.len());
            for &(q1, q2) in &rel.pairs {
                let _ = writeln!(out, "  {} <= {}", sys1.states[q1].name, sys2.states[q2].name);
            }
            out
        }
    }
}

pub fn simcheck_structured(relation: Option<&SimRelation>, sys1: &Waz, sys2: &Waz) -> String {
    let doc = match relation {
        None => json!({ "command": "simcheck", "simulated": false }),
        Some(rel) => json!({
            "command": "simcheck",
            "simulated": true,
            "relation": rel.pairs.iter().map(|&(q1, q2)| {
                json!([sys1.states[q1].name, sys2.states[q2].name])
            }).collect::<Vec<_>>(),
        }),
    };
    serde_json::to_string_pretty(&doc).expect("report serialization")
}
