// temporary sizing probe for the planted experiment
use std::time::Instant;

use affect_core::classify::ClassifierKind;
use affect_core::dataset::synthetic::{generate_synthetic, SyntheticConfig};
use affect_core::dataset::Dimension;
use affect_core::eval::{run_experiment, ExperimentAxis, ExperimentConfig};
use affect_core::wavelet::BandName;

fn main() {
    let t0 = Instant::now();
    let synth = SyntheticConfig {
        participants: 32,
        trials_per_participant: 40,
        trial_seconds: 12.0,
        planted_amplitude_ratio: 1.5,
        ..SyntheticConfig::default()
    };
    let pairs = generate_synthetic(&synth, 2024).unwrap();
    println!("generated {} trials in {:.1}s", pairs.len(), t0.elapsed().as_secs_f64());

    let cfg = ExperimentConfig {
        axis: ExperimentAxis::Bands(vec![BandName::Beta, BandName::Theta]),
        dimensions: vec![Dimension::Arousal],
        classifiers: ClassifierKind::ALL.to_vec(),
        seed: 7,
        ..ExperimentConfig::default()
    };
    let t1 = Instant::now();
    let report = run_experiment(&pairs, &cfg).unwrap();
    println!("experiment in {:.1}s", t1.elapsed().as_secs_f64());
    for cell in &report.cells {
        println!(
            "{} {} {}: mean acc {:.3} (pooled {:.3})",
            cell.key.axis_value,
            cell.key.dimension,
            cell.key.classifier,
            cell.mean_accuracy,
            cell.pooled.accuracy
        );
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
}
