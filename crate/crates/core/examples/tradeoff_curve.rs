//! Latency and load for every q, with the lower bound and both envelopes.

use coded_compute::analysis::{appendix_gap_check, tradeoff_curve, write_csv, Rendering};
use coded_compute::rational::{ratio, to_f64};
use coded_compute::stragglers::LatencyModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mu = ratio(1, 3);
    let model = LatencyModel::shifted_exponential(ratio(60, 1))?;
    let curve = tradeoff_curve(18, &mu, 180, &model)?;
    write_csv(&curve, std::io::stdout(), Rendering::Decimal(4))?;

    println!("achievable envelope vertices:");
    for (d, l) in curve.achievable_envelope.vertices() {
        println!("  D={:.3} L={:.3}", to_f64(d), to_f64(l));
    }
    if let Some(max) = curve.max_gap() {
        println!("largest gap {:.4}", to_f64(&max));
    }
    let check = appendix_gap_check(18, &mu)?;
    println!(
        "full-wait ratio {:.4} below 3+sqrt(5): {}",
        to_f64(&check.ratio),
        check.within_bound
    );
    Ok(())
}
