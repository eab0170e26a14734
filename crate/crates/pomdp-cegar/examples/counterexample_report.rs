//! Extracts a counterexample on the coarsest chain abstraction under the
//! stationary adversary and walks through the spuriousness analysis.
//!
//! Run with: `cargo run --example counterexample_report`

use pomdp_cegar::abstraction::{coarsest_partition, quotient};
use pomdp_cegar::adversary::ObservationAdversary;
use pomdp_cegar::cex::{extract_counterexample, Unrolling};
use pomdp_cegar::logic::parse_spec;
use pomdp_cegar::model::{corresponding_waz, fixtures::chain_pomdp};
use pomdp_cegar::parse::prob_string;
use pomdp_cegar::refinement::{find_refinement_set, is_spurious, project_paths};

fn main() -> pomdp_cegar::Result<()> {
    let concrete = corresponding_waz(&chain_pomdp(20));
    let partition = coarsest_partition(&concrete);
    let quot = quotient(&concrete, &partition)?;
    let spec = parse_spec("P<=0.45 [ true U<=20 \"fail\" ]")?;
    let adversary = ObservationAdversary::stationary(quot.action_index("a").unwrap(), 20);
    let unrolling = Unrolling::new(&quot, &adversary, spec.horizon);
    let cex = extract_counterexample(&unrolling, &spec)?;

    println!("CE total = {}", prob_string(&cex.total));
    for (path, prob) in &cex.paths {
        let names: Vec<&str> =
            path.states.iter().map(|&s| quot.states[s].name.as_str()).collect();
        println!("  {}  : {}", names.join(" -> "), prob_string(prob));
        for realization in project_paths(path, &partition, &concrete) {
            let names: Vec<&str> =
                realization.states.iter().map(|&s| concrete.states[s].name.as_str()).collect();
            println!("    realization: {}", names.join(" -> "));
        }
    }

    let spurious = is_spurious(&cex, &concrete, &partition, &spec.threshold, spec.cmp);
    println!("spurious: {spurious}");
    if spurious {
        let rset = find_refinement_set(&cex, &concrete, &partition, &spec.threshold, spec.cmp)?;
        println!("refinement depth j = {}", rset.j);
        for (j, sp) in rset.sp_trace.iter().enumerate() {
            println!("  SP_{j} = {}", prob_string(sp));
        }
    }
    Ok(())
}
