//! Minimal library walkthrough: build a balanced complete graph, inspect its
//! communicability geometry, and run the full analysis pipeline.

use sgc::comm::communicability_set;
use sgc::graph::{detect_balance, gen_balanced_complete};
use sgc::pipeline::{analyze, PipelineConfig};

fn main() -> Result<(), sgc::error::Error> {
    let g = gen_balanced_complete(8, 3)?;
    assert!(detect_balance(&g)?.balanced);

    let set = communicability_set(&g)?; // Γ, ξ², θ, cos θ, d_θ, spectrum
    println!("spectral radius: {}", set.spectrum[0]);

    let report = analyze(&g, &PipelineConfig::new(7))?;
    assert_eq!(report.labels.k, 2); // the two factions
    println!("factions: {:?}", report.labels.assignments);
    Ok(())
}
