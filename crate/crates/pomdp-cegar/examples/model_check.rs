//! Direct, abstraction-free model checking of a small chain POMDP via its
//! corresponding weighted automaton, printing the witness adversary.
//!
//! Run with: `cargo run --example model_check`

use pomdp_cegar::checker::{model_check, CheckConfig};
use pomdp_cegar::logic::parse_spec;
use pomdp_cegar::model::{corresponding_waz, fixtures::chain_pomdp};
use pomdp_cegar::report::check_human;

fn main() -> pomdp_cegar::Result<()> {
    let system = corresponding_waz(&chain_pomdp(2));
    for threshold in ["0.45", "0.3"] {
        let spec = parse_spec(&format!("P<={threshold} [ true U<=2 \"fail\" ]"))?;
        let verdict = model_check(&system, &spec, &CheckConfig::default())?;
        println!("spec: P<={threshold} [ true U<=2 \"fail\" ]");
        print!("{}", check_human(&system, &verdict));
        println!();
    }
    Ok(())
}
