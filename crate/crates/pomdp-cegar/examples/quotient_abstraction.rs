//! Builds the coarsest consistent abstraction of the 20-state chain and
//! prints the quotient automaton in the model file format.
//!
//! Run with: `cargo run --example quotient_abstraction`

use pomdp_cegar::abstraction::{coarsest_partition, quotient};
use pomdp_cegar::model::{corresponding_waz, fixtures::chain_pomdp};
use pomdp_cegar::parse::{write_partition, write_waz};

fn main() -> pomdp_cegar::Result<()> {
    let concrete = corresponding_waz(&chain_pomdp(20));
    let partition = coarsest_partition(&concrete);
    println!("# concrete automaton: {} states", concrete.states.len());
    println!("# coarsest consistent partition:");
    for line in write_partition(&partition, &concrete).lines() {
        println!("#   {line}");
    }
    let quot = quotient(&concrete, &partition)?;
    print!("{}", write_waz(&quot));
    Ok(())
}
