//! Monte Carlo trials against the exact order statistic and load.

use coded_compute::codec::SchemeParams;
use coded_compute::rational::{ratio, to_f64};
use coded_compute::sim::{run_monte_carlo, SimConfig};
use coded_compute::stragglers::{
    empirical_order_statistic, expected_order_statistic, LatencyModel,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = LatencyModel::shifted_exponential(ratio(60, 1))?;
    for q in [6, 12, 18] {
        let exact = to_f64(&expected_order_statistic(&model, 18, q)?);
        let sampled = empirical_order_statistic(&model, 18, q, 20_000, 1)?;
        println!("K=18 q={q}: exact {exact:.3} sampled {sampled:.3}");
    }

    let params = SchemeParams::new(6, 4, ratio(1, 2), 20, 4, 12);
    let report = run_monte_carlo(&SimConfig::new(params, 5)?.monte_carlo(200))?;
    println!(
        "200 trials: mean latency {:.3} (exact {:.3}), mean load {:?}, all correct {:?}",
        report.mean_latency,
        to_f64(&report.analytic_latency),
        report.mean_load.as_ref().map(to_f64),
        report.all_correct
    );
    Ok(())
}
