//! End-to-end abstraction refinement on the 20-state chain: three
//! model-checking iterations ending in a real counterexample.
//!
//! Run with: `cargo run --example run_cegar`

use pomdp_cegar::cegar::{iteration_contexts, run_cegar, CegarConfig};
use pomdp_cegar::logic::parse_spec;
use pomdp_cegar::model::{corresponding_waz, fixtures::chain_pomdp};
use pomdp_cegar::report::{cegar_human, CegarContext};

fn main() -> pomdp_cegar::Result<()> {
    let pomdp = chain_pomdp(20);
    let spec = parse_spec("P<=0.45 [ true U<=20 \"fail\" ]")?;
    let outcome = run_cegar(&pomdp, &spec, &CegarConfig::default())?;
    let concrete = corresponding_waz(&pomdp);
    let (partitions, quotients) = iteration_contexts(&concrete, &outcome)?;
    let ctx = CegarContext { quotients, partitions };
    print!("{}", cegar_human(&outcome, &ctx, &concrete));
    Ok(())
}
