// temporary: time one SVM fold at acceptance scale and inspect kernels
use std::time::Instant;
use affect_core::classify::{svm_train, svm_predict, rbf_kernel, SvmConfig};
use affect_core::dataset::synthetic::{generate_synthetic, SyntheticConfig};
use affect_core::dataset::{ChannelSelection, Dimension};
use affect_core::eval::{compute_axis_features, make_folds};
use affect_core::features::AssembleMode;
use affect_core::pca;
use affect_core::preprocess::{Reference, WindowSpec};
use affect_core::wavelet::BandName;

fn main() {
    let synth = SyntheticConfig {
        participants: 32,
        trials_per_participant: 40,
        trial_seconds: 12.0,
        planted_amplitude_ratio: 1.5,
        ..SyntheticConfig::default()
    };
    let t0 = Instant::now();
    let pairs = generate_synthetic(&synth, 2024).unwrap();
    let mats = compute_axis_features(
        &pairs,
        &ChannelSelection::all_study_channels(),
        Reference::PerChannel,
        &WindowSpec::new(4.0, 0.5).unwrap(),
        &[AssembleMode::PerBand(BandName::Beta), AssembleMode::PerBand(BandName::Theta)],
    )
    .unwrap();
    println!("features in {:.1}s; {} rows x {} cols", t0.elapsed().as_secs_f64(), mats[0].values.rows(), mats[0].values.cols());

    for (name, fm) in [("beta", &mats[0]), ("theta", &mats[1])] {
        let participants: Vec<u32> = fm.rows.iter().map(|r| r.participant_id).collect();
        let plan = make_folds(&participants, 8, 7).unwrap();
        let test_p: std::collections::BTreeSet<u32> = plan.folds[0].iter().copied().collect();
        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        for (i, m) in fm.rows.iter().enumerate() {
            if test_p.contains(&m.participant_id) { test_idx.push(i) } else { train_idx.push(i) }
        }
        let x_train = fm.values.select_rows(&train_idx);
        let x_test = fm.values.select_rows(&test_idx);
        let labels = fm.labels(Dimension::Arousal);
        let y_train: Vec<_> = train_idx.iter().map(|&i| labels[i]).collect();
        let y_test: Vec<_> = test_idx.iter().map(|&i| labels[i]).collect();
        let basis = pca::fit(&x_train).unwrap();
        let z_train = pca::transform(&x_train, &basis).unwrap();
        let z_test = pca::transform(&x_test, &basis).unwrap();

        // kernel stats on a few pairs
        let mut same = Vec::new();
        let mut cross = Vec::new();
        for a in (0..z_train.rows()).step_by(397) {
            for b in (1..z_train.rows()).step_by(401) {
                if a == b { continue; }
                let k = rbf_kernel(z_train.row(a), z_train.row(b), 2.0).unwrap();
                if y_train[a] == y_train[b] { same.push(k) } else { cross.push(k) }
            }
        }
        let med = |v: &mut Vec<f64>| { v.sort_by(|x, y| x.partial_cmp(y).unwrap()); v[v.len()/2] };
        println!("{name}: median same-class K {:.3e}, cross-class K {:.3e}", med(&mut same), med(&mut cross));

        let t1 = Instant::now();
        match svm_train(&z_train, &y_train, &SvmConfig::default()) {
            Ok((model, stats)) => {
                let hits = z_test.iter_rows().zip(&y_test)
                    .filter(|(row, want)| svm_predict(&model, row).unwrap().0 == **want).count();
                println!(
                    "{name}: fold0 acc {:.3}, {} SVs, {} passes, {} updates, {:.1}s",
                    hits as f64 / y_test.len() as f64,
                    model.num_support_vectors(), stats.passes, stats.updates,
                    t1.elapsed().as_secs_f64()
                );
            }
            Err(e) => println!("{name}: train failed after {:.1}s: {e}", t1.elapsed().as_secs_f64()),
        }
    }
}
