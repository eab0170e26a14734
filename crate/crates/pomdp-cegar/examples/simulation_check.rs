//! Verifies that the coarsest quotient safely simulates the concrete
//! automaton, and shows a mutation that breaks the simulation.
//!
//! Run with: `cargo run --example simulation_check`

use pomdp_cegar::abstraction::{check_safe_simulation, coarsest_partition, quotient};
use pomdp_cegar::model::{corresponding_waz, fixtures::chain_pomdp};
use pomdp_cegar::rational::ratio;
use pomdp_cegar::report::simcheck_human;

fn main() -> pomdp_cegar::Result<()> {
    let concrete = corresponding_waz(&chain_pomdp(20));
    let partition = coarsest_partition(&concrete);
    let quot = quotient(&concrete, &partition)?;

    let relation = check_safe_simulation(&concrete, &quot)?;
    println!("concrete vs quotient:");
    print!("{}", simcheck_human(relation.as_ref(), &concrete, &quot));

    // lowering one quotient weight below the member maximum breaks it
    let mut broken = quot.clone();
    let key = *broken.transitions.keys().next().unwrap();
    let row = broken.transitions.get_mut(&key).unwrap();
    let target = *row.keys().next().unwrap();
    row.insert(target, ratio(1, 1000));
    let relation = check_safe_simulation(&concrete, &broken)?;
    println!("\nconcrete vs mutated quotient:");
    print!("{}", simcheck_human(relation.as_ref(), &concrete, &broken));
    Ok(())
}
