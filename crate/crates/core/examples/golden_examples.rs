//! Runs every simulation preset and compares it with its known numbers.

use coded_compute::presets::{self, PresetKind};
use coded_compute::rational::to_fraction_string;
use coded_compute::shuffle::measure_load;
use coded_compute::sim::{run_single_with_transcript, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for preset in presets::all() {
        let PresetKind::Simulate {
            params,
            latency,
            load,
            coded_symbols,
            uncoded_symbols,
        } = preset.kind
        else {
            continue;
        };
        let (report, t) = run_single_with_transcript(&SimConfig::new(params, 1)?)?;
        let measured = measure_load(&t);
        let ok = report.analytic_latency == latency
            && measured == load
            && (t.coded_symbols(), t.uncoded_symbols()) == (coded_symbols, uncoded_symbols)
            && report.all_correct == Some(true);
        println!(
            "{:<22} D={:<6} L={:<4} coded={:<3} uncoded={:<3} {}",
            preset.name,
            to_fraction_string(&report.analytic_latency),
            to_fraction_string(&measured),
            t.coded_symbols(),
            t.uncoded_symbols(),
            if ok { "ok" } else { "MISMATCH" }
        );
    }
    Ok(())
}
