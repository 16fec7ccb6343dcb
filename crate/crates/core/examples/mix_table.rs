//! Builds the mix table for a 1080p-sized frame and compares lookup against
//! a live branch-and-bound solve.

use std::time::Instant;

use sgcc::solver::{solve_mix_bnb, MixTable};
use sgcc::ModelParams;

fn main() -> sgcc::Result<()> {
    let params = ModelParams::table3();
    let n = 510;
    let start = Instant::now();
    let table = MixTable::build(n, &params)?;
    println!("{} entries for N = {n} in {:.1?}", table.len(), start.elapsed());

    for budget in [0, 1, 100, 510, 1020, 1530] {
        let (mix, objective) = table.lookup(budget).expect("budget in range");
        let live = solve_mix_bnb(n, budget, &params)?;
        println!(
            "B = {budget:4}: ({:3}, {:3}, {:3}) objective {objective:.4} (live {:.4}, {} nodes)",
            mix.n1, mix.n2, mix.n3, live.objective, live.nodes
        );
    }

    let json = table.to_json()?;
    assert_eq!(MixTable::from_json(&json)?, table);
    println!("JSON form: {} bytes", json.len());
    Ok(())
}
