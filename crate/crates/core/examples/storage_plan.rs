//! Builds a storage plan, prints who stores what and checks that any
//! q servers can rebuild the data.

use coded_compute::codec::{build_storage_plan, verify_decodability, SchemeParams, VerifyOptions};
use coded_compute::rational::ratio;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = SchemeParams::new(6, 4, ratio(1, 2), 20, 4, 12);
    params.validate()?;
    let plan = build_storage_plan(&params)?;
    println!(
        "K={} q={} r={} coded rows={} batch size={:?}",
        params.servers,
        params.wait_for,
        params.replication(),
        plan.coded_rows(),
        params.batch_size()
    );
    for batch in plan.batches() {
        println!("  {} stores rows {:?}", batch.servers, batch.rows);
    }
    for k in 0..params.servers {
        println!("server {k}: {} rows", plan.server_rows(k).len());
    }
    let report = verify_decodability(&plan, &VerifyOptions::default());
    println!(
        "checked {} subsets, passed: {}",
        report.subsets_checked, report.passed
    );

    let broken = plan.without_batch(0);
    let report = verify_decodability(&broken, &VerifyOptions::default());
    println!("without batch 0: passed {}", report.passed);
    Ok(())
}
