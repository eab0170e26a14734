//! Regenerates the checked-in model and partition files under `models/`
//! from the built-in chain family.
//!
//! Run with: `cargo run --example export_models [output-dir]`

use pomdp_cegar::abstraction::coarsest_partition;
use pomdp_cegar::model::{corresponding_waz, fixtures::chain_pomdp};
use pomdp_cegar::parse::{write_partition, write_pomdp};

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "models".to_string());
    std::fs::create_dir_all(&dir)?;
    for n in [2usize, 20] {
        let pomdp = chain_pomdp(n);
        let path = format!("{dir}/chain_n{n}.pomdp");
        std::fs::write(&path, write_pomdp(&pomdp))?;
        println!("wrote {path}");
    }
    let concrete = corresponding_waz(&chain_pomdp(20));
    let partition = coarsest_partition(&concrete);
    let path = format!("{dir}/chain_n20_coarsest.partition");
    std::fs::write(&path, write_partition(&partition, &concrete))?;
    println!("wrote {path}");
    Ok(())
}
