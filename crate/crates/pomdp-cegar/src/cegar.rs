//! The abstraction-refinement loop: model check the quotient, extract a
//! counterexample on violation, keep it if real, refine it away if spurious.

use crate::abstraction::{check_safe_simulation, coarsest_partition, quotient, Partition};
use crate::adversary::ObservationAdversary;
use crate::cex::{extract_counterexample, Counterexample, Unrolling};
use crate::checker::{model_check, CheckConfig, Verdict};
use crate::error::{Error, Result};
use crate::logic::BoundedUntilSpec;
use crate::model::{corresponding_waz, Pomdp, Waz};
use crate::rational::{zero, Rational};
use crate::refinement::{is_spurious, remove_counterexample, ProjectionCache, SplitRecord};

#[derive(Debug, Clone)]
pub struct CegarConfig {
    /// Cap on distinct (belief, depth) memo entries in the checker.
    pub memo_budget: usize,
    /// Reuse the previous iteration's witness adversary as a warm start.
    /// Off or on, outcomes are identical; only checking cost changes.
    pub warm_start: bool,
    /// Assert per iteration that the quotient safely simulates the
    /// concrete system (correctness oracle; costs an extra fixpoint).
    pub verify_simulation: bool,
}

impl Default for CegarConfig {
    fn default() -> Self {
        CegarConfig { memo_budget: 1_000_000, warm_start: true, verify_simulation: false }
    }
}

/// What happened in one model-checking iteration.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    /// Blocks in the partition checked this iteration.
    pub partition_size: usize,
    /// Checker value (exact at `Satisfied`, a crossing lower bound at
    /// `Violated` when the early exit fires).
    pub checked_value: Rational,
    pub violated: bool,
    /// Counterexample found on the quotient, when violated.
    pub cex: Option<Counterexample>,
    pub spurious: Option<bool>,
    /// Splits performed to remove a spurious counterexample.
    pub splits: Vec<SplitRecord>,
    /// Re-mapped counterexample mass after refinement.
    pub remapped_mass: Option<Rational>,
}

#[derive(Debug, Clone)]
pub enum CegarOutcome {
    /// The final quotient satisfies the spec, hence so does the POMDP.
    Proved { quotient: Waz, partition: Partition, iterations: Vec<IterationRecord> },
    /// A counterexample whose concrete realizations already cross the
    /// threshold; the adversary realizes it on the POMDP.
    Disproved {
        counterexample: Counterexample,
        adversary: ObservationAdversary,
        realizable_mass: Rational,
        iterations: Vec<IterationRecord>,
    },
}

impl CegarOutcome {
    pub fn iterations(&self) -> &[IterationRecord] {
        match self {
            CegarOutcome::Proved { iterations, .. } => iterations,
            CegarOutcome::Disproved { iterations, .. } => iterations,
        }
    }

    pub fn is_proved(&self) -> bool {
        matches!(self, CegarOutcome::Proved { .. })
    }

    /// True when refinement degenerated to the discrete partition (the
    /// abstraction is the concrete system itself).
    pub fn reached_discrete(&self, concrete_states: usize) -> bool {
        self.iterations()
            .last()
            .map_or(false, |it| it.partition_size == concrete_states)
    }
}

/// Replays the split records to recover the partition and quotient that
/// each iteration checked, for reporting.
pub fn iteration_contexts(
    concrete: &Waz,
    outcome: &CegarOutcome,
) -> Result<(Vec<Partition>, Vec<Waz>)> {
    let mut partition = coarsest_partition(concrete);
    let mut partitions = Vec::new();
    let mut quotients = Vec::new();
    for it in outcome.iterations() {
        partitions.push(partition.clone());
        quotients.push(quotient(concrete, &partition)?);
        for split in &it.splits {
            let moved: std::collections::BTreeSet<usize> =
                split.plan.moved.iter().copied().collect();
            let keep: std::collections::BTreeSet<usize> =
                partition.blocks[split.plan.block].difference(&moved).copied().collect();
            partition.split(split.plan.block, &keep);
        }
    }
    Ok((partitions, quotients))
}

pub fn run_cegar(
    pomdp: &Pomdp,
    spec: &BoundedUntilSpec,
    config: &CegarConfig,
) -> Result<CegarOutcome> {
    let concrete = corresponding_waz(pomdp);
    let mut partition = coarsest_partition(&concrete);
    let mut warm: Option<ObservationAdversary> = None;
    let mut iterations: Vec<IterationRecord> = Vec::new();
    loop {
        let quot = quotient(&concrete, &partition)?;
        if config.verify_simulation && check_safe_simulation(&concrete, &quot)?.is_none() {
            return Err(Error::InconsistentPartition(
                "quotient fails to safely simulate the concrete system".into(),
            ));
        }
        let check_cfg = CheckConfig {
            memo_budget: config.memo_budget,
            warm_start: if config.warm_start { warm.take() } else { None },
            ..CheckConfig::default()
        };
        match model_check(&quot, spec, &check_cfg)? {
            Verdict::Satisfied { max_prob } => {
                iterations.push(IterationRecord {
                    partition_size: partition.len(),
                    checked_value: max_prob,
                    violated: false,
                    cex: None,
                    spurious: None,
                    splits: Vec::new(),
                    remapped_mass: None,
                });
                return Ok(CegarOutcome::Proved { quotient: quot, partition, iterations });
            }
            Verdict::Violated { witness, max_prob } => {
                let unrolling = Unrolling::new(&quot, &witness, spec.horizon);
                let cex = extract_counterexample(&unrolling, spec)?;
                let mut record = IterationRecord {
                    partition_size: partition.len(),
                    checked_value: max_prob,
                    violated: true,
                    cex: Some(cex.clone()),
                    spurious: None,
                    splits: Vec::new(),
                    remapped_mass: None,
                };
                if !is_spurious(&cex, &concrete, &partition, &spec.threshold, spec.cmp) {
                    let cache = ProjectionCache::new(&cex.paths, &concrete, &partition);
                    let realizable: Rational =
                        (0..cex.paths.len()).fold(zero(), |acc, m| acc + cache.realizable_mass(m));
                    record.spurious = Some(false);
                    iterations.push(record);
                    return Ok(CegarOutcome::Disproved {
                        adversary: cex.adversary.clone(),
                        counterexample: cex,
                        realizable_mass: realizable,
                        iterations,
                    });
                }
                let removal =
                    remove_counterexample(&cex, &concrete, &partition, &spec.threshold, spec.cmp)?;
                record.spurious = Some(true);
                record.splits = removal.splits;
                record.remapped_mass = Some(removal.final_mass);
                iterations.push(record);
                if removal.partition.len() <= partition.len() {
                    return Err(Error::NoSplittableBlock);
                }
                partition = removal.partition;
                warm = Some(witness);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_spec;
    use crate::model::fixtures::chain_pomdp;
    use crate::rational::{parse_rational, ratio};
    use std::collections::BTreeSet;

    fn dec(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn chain_disproved_in_three_iterations() {
        let pomdp = chain_pomdp(20);
        let spec = parse_spec("P<=0.45 [ true U<=20 \"fail\" ]").unwrap();
        let outcome = run_cegar(&pomdp, &spec, &CegarConfig::default()).unwrap();
        let iterations = outcome.iterations();
        assert_eq!(iterations.len(), 3);
        assert_eq!(iterations[0].cex.as_ref().unwrap().total, ratio(39, 80));
        assert_eq!(iterations[0].remapped_mass, Some(ratio(59, 160)));
        assert_eq!(iterations[1].cex.as_ref().unwrap().total, ratio(81, 160));
        assert_eq!(iterations[1].remapped_mass, Some(dec("0.37796875")));
        match &outcome {
            CegarOutcome::Disproved { counterexample, realizable_mass, .. } => {
                assert!(counterexample.total >= dec("0.4845"));
                assert!(*realizable_mass > dec("0.45"));
            }
            CegarOutcome::Proved { .. } => panic!("expected Disproved"),
        }
    }

    #[test]
    fn second_split_moves_even_sink_out() {
        let pomdp = chain_pomdp(20);
        let concrete = corresponding_waz(&pomdp);
        let s_even = concrete.state_index("s_even@z_even").unwrap();
        let spec = parse_spec("P<=0.45 [ true U<=20 \"fail\" ]").unwrap();
        let outcome = run_cegar(&pomdp, &spec, &CegarConfig::default()).unwrap();
        let splits = &outcome.iterations()[1].splits;
        assert_eq!(splits.len(), 1);
        assert_eq!(splits[0].plan.moved, vec![s_even]);
    }

    #[test]
    fn threshold_one_is_proved_on_initial_abstraction() {
        // horizon kept small: on this quotient the weight-1 self-loops let
        // the abstract value exceed 1 at large horizons, which would force
        // refinement even against p = 1
        let pomdp = chain_pomdp(20);
        let spec = parse_spec("P<=1 [ true U<=2 \"fail\" ]").unwrap();
        let outcome = run_cegar(&pomdp, &spec, &CegarConfig::default()).unwrap();
        assert!(outcome.is_proved());
        assert_eq!(outcome.iterations().len(), 1);
        assert_eq!(outcome.iterations()[0].partition_size, 4);
    }

    #[test]
    fn unreachable_target_is_proved_immediately() {
        let pomdp = chain_pomdp(4);
        let spec = parse_spec("P<=0 [ true U<=5 \"nonexistent\" ]").unwrap();
        let outcome = run_cegar(&pomdp, &spec, &CegarConfig::default()).unwrap();
        assert!(outcome.is_proved());
        assert_eq!(outcome.iterations().len(), 1);
        assert_eq!(outcome.iterations()[0].checked_value, dec("0"));
    }

    #[test]
    fn warm_start_does_not_change_the_verdict() {
        // without the warm start the checker finds a different (depth
        // minimal) witness, so the refinement trajectory may differ; the
        // verdict and its justification must not
        let pomdp = chain_pomdp(20);
        let spec = parse_spec("P<=0.45 [ true U<=20 \"fail\" ]").unwrap();
        let with = run_cegar(&pomdp, &spec, &CegarConfig::default()).unwrap();
        let without = run_cegar(
            &pomdp,
            &spec,
            &CegarConfig { warm_start: false, ..CegarConfig::default() },
        )
        .unwrap();
        for outcome in [&with, &without] {
            match outcome {
                CegarOutcome::Disproved { realizable_mass, .. } => {
                    assert!(spec.cmp.violated_by(realizable_mass, &spec.threshold));
                }
                CegarOutcome::Proved { .. } => panic!("expected Disproved"),
            }
        }
    }

    #[test]
    fn simulation_oracle_holds_across_iterations() {
        let pomdp = chain_pomdp(20);
        let spec = parse_spec("P<=0.45 [ true U<=20 \"fail\" ]").unwrap();
        let config = CegarConfig { verify_simulation: true, ..CegarConfig::default() };
        let outcome = run_cegar(&pomdp, &spec, &config).unwrap();
        assert!(!outcome.is_proved());
    }

    #[test]
    fn partition_sizes_strictly_increase() {
        let pomdp = chain_pomdp(20);
        let spec = parse_spec("P<=0.45 [ true U<=20 \"fail\" ]").unwrap();
        let outcome = run_cegar(&pomdp, &spec, &CegarConfig::default()).unwrap();
        let sizes: Vec<usize> =
            outcome.iterations().iter().map(|it| it.partition_size).collect();
        assert!(sizes.windows(2).all(|w| w[0] < w[1]));
        let concrete = corresponding_waz(&pomdp);
        assert!(*sizes.last().unwrap() <= concrete.states.len());
        assert!(!outcome.reached_discrete(concrete.states.len()));
    }

    #[test]
    fn budget_exceeded_propagates() {
        let pomdp = chain_pomdp(20);
        let spec = parse_spec("P<=0.45 [ true U<=20 \"fail\" ]").unwrap();
        let config = CegarConfig { memo_budget: 1, ..CegarConfig::default() };
        assert!(matches!(
            run_cegar(&pomdp, &spec, &config),
            Err(Error::BudgetExceeded { budget: 1 })
        ));
    }

    #[test]
    fn disproved_adversary_realizes_the_mass_on_the_concrete_system() {
        let pomdp = chain_pomdp(20);
        let spec = parse_spec("P<=0.45 [ true U<=20 \"fail\" ]").unwrap();
        let outcome = run_cegar(&pomdp, &spec, &CegarConfig::default()).unwrap();
        let (cex, realizable) = match &outcome {
            CegarOutcome::Disproved { counterexample, realizable_mass, .. } => {
                (counterexample, realizable_mass)
            }
            CegarOutcome::Proved { .. } => panic!("expected Disproved"),
        };
        // recompute the realizable mass independently by enumerating
        // concrete realizations of the returned abstract paths
        let concrete = corresponding_waz(&pomdp);
        let mut partition = coarsest_partition(&concrete);
        for it in outcome.iterations() {
            for split in &it.splits {
                let keep: BTreeSet<usize> = partition.blocks[split.plan.block]
                    .difference(&split.plan.moved.iter().copied().collect())
                    .copied()
                    .collect();
                partition.split(split.plan.block, &keep);
            }
        }
        let mut total = zero();
        for (path, _) in &cex.paths {
            for realization in crate::refinement::project_paths(path, &partition, &concrete) {
                total += crate::model::path_probability(
                    &concrete,
                    &realization,
                    0,
                    realization.len(),
                )
                .unwrap();
            }
        }
        assert_eq!(total, *realizable);
        assert!(spec.cmp.violated_by(&total, &spec.threshold));
    }
}
