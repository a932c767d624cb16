//! Runs the shuffle for one set of finishers and prints every message.

use coded_compute::codec::{build_storage_plan, SchemeParams};
use coded_compute::rational::{ratio, to_fraction_string};
use coded_compute::shuffle::{assign_reduce_tasks, measure_load, shuffle, MapResults};
use coded_compute::stragglers::trial_rng;
use coded_compute::subset::ServerSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = SchemeParams::new(6, 4, ratio(1, 2), 20, 4, 12);
    let plan = build_storage_plan(&params)?;
    let mut rng = trial_rng(7, 0);
    let a = plan
        .field()
        .random_matrix(params.rows, params.cols, &mut rng);
    let x = plan
        .field()
        .random_matrix(params.cols, params.outputs, &mut rng);

    let finishers: ServerSet = [0, 2, 3, 5].into_iter().collect();
    let map = MapResults::compute(&plan, &a, &x, finishers)?;
    let assignment = assign_reduce_tasks(finishers, params.outputs)?;
    for k in finishers.iter() {
        println!("server {k} reduces outputs {:?}", assignment.outputs_of(k));
    }
    let t = shuffle(&plan, &assignment, &map)?;
    for round in &t.rounds {
        println!(
            "round j={}: {} messages, {} symbols",
            round.j, round.messages, round.symbols
        );
    }
    if let Some(r) = &t.residual {
        println!("residual: {:?}", r.strategy);
    }
    for m in &t.messages {
        println!(
            "  {} -> {} {:?} {:?} {} symbols",
            m.sender, m.recipients, m.kind, m.phase, m.symbols
        );
    }
    println!(
        "coded {} uncoded {} padded {}",
        t.coded_symbols(),
        t.uncoded_symbols(),
        t.padded_symbols()
    );
    println!("load L = {}", to_fraction_string(&measure_load(&t)));
    Ok(())
}
