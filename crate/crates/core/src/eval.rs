//! Participant-grouped cross-validation and experiment grids.
//!
//! A grid cell is one (classifier, dimension, axis value, window length)
//! combination; every cell is scored by the same eight folds. All windows
//! of a participant live in exactly one fold, so nothing from a test
//! subject can leak into training, and the PCA basis is refit inside
//! every fold on the training rows only.
//!
//! Cells and folds are independent jobs; they run in parallel and the
//! report is merged by key afterwards, so output does not depend on
//! scheduling.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::classify::{
    ann_train, knn_fit, svm_train, AnnConfig, ClassifierKind, KnnConfig, SvmConfig, TrainedModel,
};
use crate::dataset::{
    select_channels, ChannelSelection, Dimension, LabelValue, RatingRecord, Recording,
};
use crate::error::{Error, Result};
use crate::features::{
    resolve_columns, rows_for_trial, AssembleMode, FeatureMatrix, RowMeta,
};
use crate::matrix::Matrix;
use crate::pca::{self, PcaOptions};
use crate::preprocess::{apply_reference, normalize_unit_interval, window, Reference, WindowSpec};
use crate::wavelet::{band_level_map, decompose, BandName};

/// Seeded assignment of participants to folds of equal size.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub folds: Vec<Vec<u32>>,
}

impl FoldPlan {
    pub fn fold_of(&self, participant: u32) -> Option<usize> {
        self.folds.iter().position(|f| f.contains(&participant))
    }
}

/// Shuffle the participant set with the seed and cut it into `k` equal
/// contiguous folds.
pub fn make_folds(participants: &[u32], k: usize, seed: u64) -> Result<FoldPlan> {
    if k == 0 {
        return Err(Error::Config("fold count must be positive".into()));
    }
    let unique: BTreeSet<u32> = participants.iter().copied().collect();
    let mut ids: Vec<u32> = unique.into_iter().collect();
    if ids.len() % k != 0 {
        return Err(Error::Config(format!(
            "{} participants do not divide into {k} equal folds (remainder {}); \
             equal fold sizes are required, trim or extend the participant set",
            ids.len(),
            ids.len() % k
        )));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    use rand::Rng;
    use rand::SeedableRng;
    for i in (1..ids.len()).rev() {
        let j = rng.random_range(0..=i);
        ids.swap(i, j);
    }
    let per_fold = ids.len() / k;
    let folds = ids.chunks(per_fold).map(|c| c.to_vec()).collect();
    Ok(FoldPlan { seed, folds })
}

/// Confusion counts and the derived rates; the positive class is high.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    /// Undefined (None) when no positive labels are present.
    pub sensitivity: Option<f64>,
    /// Undefined (None) when no negative labels are present.
    pub specificity: Option<f64>,
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl MetricSet {
    pub fn from_counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> MetricSet {
        let total = (tp + tn + fp + fn_) as f64;
        MetricSet {
            accuracy: (tp + tn) as f64 / total,
            sensitivity: if tp + fn_ > 0 {
                Some(tp as f64 / (tp + fn_) as f64)
            } else {
                None
            },
            specificity: if tn + fp > 0 {
                Some(tn as f64 / (tn + fp) as f64)
            } else {
                None
            },
            tp,
            tn,
            fp,
            fn_,
        }
    }
}

pub fn compute_metrics(predictions: &[LabelValue], labels: &[LabelValue]) -> Result<MetricSet> {
    if predictions.is_empty() {
        return Err(Error::Invalid("no predictions to score".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for (p, l) in predictions.iter().zip(labels) {
        match (p.is_high(), l.is_high()) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(MetricSet::from_counts(tp, tn, fp, fn_))
}

/// Which sweep the grid runs over.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentAxis {
    /// Channel pairs, all bands per pair.
    Pairs(Vec<(String, String)>),
    /// Bands, all channels per band.
    Bands(Vec<BandName>),
}

impl ExperimentAxis {
    /// The five frontal pairs of the study.
    pub fn default_pairs() -> Self {
        ExperimentAxis::Pairs(
            [("F3", "F4"), ("F7", "F8"), ("FC1", "FC2"), ("FC5", "FC6"), ("FP1", "FP2")]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        )
    }

    pub fn default_bands() -> Self {
        ExperimentAxis::Bands(BandName::NAMED.to_vec())
    }

    pub fn modes(&self) -> Vec<AssembleMode> {
        match self {
            ExperimentAxis::Pairs(pairs) => pairs
                .iter()
                .map(|(a, b)| AssembleMode::ChannelPair(a.clone(), b.clone()))
                .collect(),
            ExperimentAxis::Bands(bands) => {
                bands.iter().map(|b| AssembleMode::PerBand(*b)).collect()
            }
        }
    }
}

/// Everything the grid runner needs besides the dataset itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub axis: ExperimentAxis,
    pub window_lengths_s: Vec<f64>,
    pub overlap_fraction: f64,
    pub dimensions: Vec<Dimension>,
    pub classifiers: Vec<ClassifierKind>,
    pub channels: ChannelSelection,
    pub reference: Reference,
    pub pca: PcaOptions,
    pub svm: SvmConfig,
    pub knn: KnnConfig,
    pub ann: AnnConfig,
    pub folds: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            axis: ExperimentAxis::default_bands(),
            window_lengths_s: vec![4.0],
            overlap_fraction: 0.5,
            dimensions: vec![Dimension::Arousal, Dimension::Valence],
            classifiers: ClassifierKind::ALL.to_vec(),
            channels: ChannelSelection::all_study_channels(),
            reference: Reference::PerChannel,
            pca: PcaOptions::default(),
            svm: SvmConfig::default(),
            knn: KnnConfig::default(),
            ann: AnnConfig::default(),
            folds: 8,
            seed: 42,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_lengths_s.is_empty() {
            return Err(Error::Config("no window lengths configured".into()));
        }
        if self.dimensions.is_empty() || self.classifiers.is_empty() {
            return Err(Error::Config("need at least one dimension and classifier".into()));
        }
        if self.axis.modes().is_empty() {
            return Err(Error::Config("experiment axis is empty".into()));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::Config(format!(
                "overlap fraction must be in [0, 1), got {}",
                self.overlap_fraction
            )));
        }
        if self.folds == 0 {
            return Err(Error::Config("fold count must be positive".into()));
        }
        Ok(())
    }
}

fn window_ms(seconds: f64) -> u32 {
    (seconds * 1000.0).round() as u32
}

/// Identity of one grid cell.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub struct CellKey {
    pub window_ms: u32,
    pub axis_value: String,
    pub dimension: Dimension,
    pub classifier: ClassifierKind,
}

impl std::fmt::Display for CellKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}ms/{}/{}-{}",
            self.window_ms, self.axis_value, self.dimension, self.classifier
        )
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FoldOutcome {
    pub fold_index: usize,
    pub test_participants: Vec<u32>,
    pub train_rows: usize,
    pub test_rows: usize,
    /// SHA-256 over the sorted (participant, trial, window) keys that
    /// entered fit calls; recorded so leakage is auditable.
    pub train_checksum: String,
    pub test_checksum: String,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CellReport {
    #[serde(flatten)]
    pub key: CellKey,
    /// Arithmetic mean of the per-fold metrics; the headline numbers.
    pub mean_accuracy: f64,
    pub mean_sensitivity: Option<f64>,
    pub mean_specificity: Option<f64>,
    /// Metrics over the pooled confusion counts of all folds.
    pub pooled: MetricSet,
    pub folds: Vec<FoldOutcome>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub fold_plan: FoldPlan,
    /// Fraction of high-labeled windows per dimension, so class skew is
    /// visible next to the accuracies.
    pub class_priors: BTreeMap<String, f64>,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn cell(&self, key: &CellKey) -> Option<&CellReport> {
        self.cells.iter().find(|c| &c.key == key)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn row_keys_checksum(meta: &[&RowMeta]) -> String {
    let mut keys: Vec<(u32, u32, usize)> = meta
        .iter()
        .map(|m| (m.participant_id, m.trial_id, m.window_index))
        .collect();
    keys.sort_unstable();
    let mut hasher = Sha256::new();
    for (p, t, w) in keys {
        hasher.update(p.to_le_bytes());
        hasher.update(t.to_le_bytes());
        hasher.update((w as u64).to_le_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Preprocess + window + decompose one trial and emit feature rows for
/// every requested mode at once, so the DWT runs once per trial.
fn trial_rows_for_modes(
    pair: &(Recording, RatingRecord),
    channels: &ChannelSelection,
    reference: Reference,
    spec: &WindowSpec,
    mode_columns: &[Vec<crate::features::ColumnDescriptor>],
) -> Result<Vec<(Vec<Vec<f64>>, Vec<RowMeta>)>> {
    let (recording, rating) = pair;
    let selected = select_channels(recording, channels)?;
    let referenced = apply_reference(&selected, reference)?;
    let normalized = normalize_unit_interval(&referenced);
    let windows = window(&normalized, spec)?;
    let decomp = decompose(&windows, normalized.sampling_rate_hz)?;
    mode_columns
        .iter()
        .map(|columns| rows_for_trial(&decomp, rating, columns))
        .collect()
}

/// Feature matrices for several modes over the whole dataset, computing
/// the wavelet decomposition of each trial exactly once.
pub fn compute_axis_features(
    pairs: &[(Recording, RatingRecord)],
    channels: &ChannelSelection,
    reference: Reference,
    spec: &WindowSpec,
    modes: &[AssembleMode],
) -> Result<Vec<FeatureMatrix>> {
    if pairs.is_empty() {
        return Err(Error::Invalid("dataset is empty".into()));
    }
    let rate = pairs[0].0.sampling_rate_hz;
    let present = band_level_map(rate)?.present_named_bands();
    let mode_columns: Vec<Vec<crate::features::ColumnDescriptor>> = modes
        .iter()
        .map(|m| resolve_columns(channels.labels(), &present, m))
        .collect::<Result<_>>()?;

    let per_trial: Vec<Vec<(Vec<Vec<f64>>, Vec<RowMeta>)>> = pairs
        .par_iter()
        .map(|pair| {
            trial_rows_for_modes(pair, channels, reference, spec, &mode_columns).map_err(|e| {
                e.in_stage(
                    "features",
                    format!("participant {} trial {}", pair.0.participant_id, pair.0.trial_id),
                )
            })
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(modes.len());
    for (m, columns) in mode_columns.into_iter().enumerate() {
        let mut values = Vec::new();
        let mut rows = Vec::new();
        for trial in &per_trial {
            values.extend(trial[m].0.iter().cloned());
            rows.extend(trial[m].1.iter().cloned());
        }
        out.push(FeatureMatrix {
            values: Matrix::from_rows(&values)?,
            columns,
            rows,
        });
    }
    Ok(out)
}

fn train_and_score(
    features: &FeatureMatrix,
    plan: &FoldPlan,
    fold_index: usize,
    key: &CellKey,
    cfg: &ExperimentConfig,
) -> Result<FoldOutcome> {
    let test_participants: BTreeSet<u32> =
        plan.folds[fold_index].iter().copied().collect();
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (i, meta) in features.rows.iter().enumerate() {
        if test_participants.contains(&meta.participant_id) {
            test_idx.push(i);
        } else {
            train_idx.push(i);
        }
    }
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::Invalid(format!(
            "fold {fold_index} leaves an empty train or test split"
        )));
    }

    // Grouped-split guard: no participant may appear on both sides.
    let train_participants: BTreeSet<u32> = train_idx
        .iter()
        .map(|&i| features.rows[i].participant_id)
        .collect();
    if !train_participants.is_disjoint(&test_participants) {
        return Err(Error::Invalid(format!(
            "fold {fold_index} mixes participants across train and test"
        )));
    }

    let train_meta: Vec<&RowMeta> = train_idx.iter().map(|&i| &features.rows[i]).collect();
    let test_meta: Vec<&RowMeta> = test_idx.iter().map(|&i| &features.rows[i]).collect();

    let x_train = features.values.select_rows(&train_idx);
    let x_test = features.values.select_rows(&test_idx);
    let labels = features.labels(key.dimension);
    let y_train: Vec<LabelValue> = train_idx.iter().map(|&i| labels[i]).collect();
    let y_test: Vec<LabelValue> = test_idx.iter().map(|&i| labels[i]).collect();

    // PCA basis from training rows only, applied to both splits.
    let basis = pca::fit_with(&x_train, &cfg.pca)?;
    let z_train = pca::transform(&x_train, &basis)?;
    let z_test = pca::transform(&x_test, &basis)?;

    let model = match key.classifier {
        ClassifierKind::Svm => TrainedModel::Svm(svm_train(&z_train, &y_train, &cfg.svm)?.0),
        ClassifierKind::Knn => TrainedModel::Knn(knn_fit(z_train, &y_train, &cfg.knn)?),
        ClassifierKind::Ann => {
            let seed = fnv1a(format!("{}/{}/fold{fold_index}", cfg.seed, key).as_bytes())
                ^ cfg.ann.seed;
            let ann_cfg = AnnConfig { seed, ..cfg.ann };
            TrainedModel::Ann(ann_train(&z_train, &y_train, &ann_cfg)?.model)
        }
    };

    let predictions: Vec<LabelValue> = z_test
        .iter_rows()
        .map(|row| model.predict(row))
        .collect::<Result<_>>()?;
    let metrics = compute_metrics(&predictions, &y_test)?;

    let mut test_sorted = plan.folds[fold_index].clone();
    test_sorted.sort_unstable();
    Ok(FoldOutcome {
        fold_index,
        test_participants: test_sorted,
        train_rows: train_idx.len(),
        test_rows: test_idx.len(),
        train_checksum: row_keys_checksum(&train_meta),
        test_checksum: row_keys_checksum(&test_meta),
        metrics,
    })
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// Run the full grid over an already-computed feature table per
/// (window, mode). `features[(window_ms, mode index)]` feeds the cells.
pub fn run_experiment_with_features(
    features: &BTreeMap<(u32, usize), FeatureMatrix>,
    plan: &FoldPlan,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let modes = cfg.axis.modes();

    let mut jobs: Vec<(CellKey, usize, &FeatureMatrix)> = Vec::new();
    for &seconds in &cfg.window_lengths_s {
        let wms = window_ms(seconds);
        for (mi, mode) in modes.iter().enumerate() {
            let fm = features.get(&(wms, mi)).ok_or_else(|| {
                Error::Invalid(format!("missing features for window {wms}ms mode {mode}"))
            })?;
            for &dimension in &cfg.dimensions {
                for &classifier in &cfg.classifiers {
                    let key = CellKey {
                        window_ms: wms,
                        axis_value: mode.to_string(),
                        dimension,
                        classifier,
                    };
                    for fold in 0..plan.folds.len() {
                        jobs.push((key.clone(), fold, fm));
                    }
                }
            }
        }
    }

    let outcomes: Vec<(CellKey, FoldOutcome)> = jobs
        .into_par_iter()
        .map(|(key, fold, fm)| {
            let outcome = train_and_score(fm, plan, fold, &key, cfg)
                .map_err(|e| e.in_stage("evaluate", format!("cell {key} fold {fold}")))?;
            Ok((key, outcome))
        })
        .collect::<Result<_>>()?;

    let mut grouped: BTreeMap<CellKey, Vec<FoldOutcome>> = BTreeMap::new();
    for (key, outcome) in outcomes {
        grouped.entry(key).or_default().push(outcome);
    }

    let mut cells = Vec::with_capacity(grouped.len());
    for (key, mut folds) in grouped {
        folds.sort_by_key(|f| f.fold_index);
        let mean_accuracy =
            folds.iter().map(|f| f.metrics.accuracy).sum::<f64>() / folds.len() as f64;
        let mean_sensitivity = mean_of(folds.iter().map(|f| f.metrics.sensitivity));
        let mean_specificity = mean_of(folds.iter().map(|f| f.metrics.specificity));
        let (tp, tn, fp, fn_) = folds.iter().fold((0, 0, 0, 0), |acc, f| {
            (
                acc.0 + f.metrics.tp,
                acc.1 + f.metrics.tn,
                acc.2 + f.metrics.fp,
                acc.3 + f.metrics.fn_,
            )
        });
        cells.push(CellReport {
            key,
            mean_accuracy,
            mean_sensitivity,
            mean_specificity,
            pooled: MetricSet::from_counts(tp, tn, fp, fn_),
            folds,
        });
    }

    // Class priors over any feature table (all share the same rows).
    let mut class_priors = BTreeMap::new();
    if let Some(fm) = features.values().next() {
        for dimension in [Dimension::Arousal, Dimension::Valence] {
            let labels = fm.labels(dimension);
            let high = labels.iter().filter(|l| l.is_high()).count();
            class_priors.insert(
                dimension.to_string(),
                high as f64 / labels.len() as f64,
            );
        }
    }

    Ok(ExperimentReport {
        seed: cfg.seed,
        fold_plan: plan.clone(),
        class_priors,
        cells,
    })
}

/// The whole pipeline: features per (window, mode), grouped folds, grid.
pub fn run_experiment(
    pairs: &[(Recording, RatingRecord)],
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let participants: Vec<u32> = pairs.iter().map(|(r, _)| r.participant_id).collect();
    let plan = make_folds(&participants, cfg.folds, cfg.seed)?;

    let modes = cfg.axis.modes();
    let mut features = BTreeMap::new();
    for &seconds in &cfg.window_lengths_s {
        let spec = WindowSpec::new(seconds, cfg.overlap_fraction)?;
        let mats = compute_axis_features(pairs, &cfg.channels, cfg.reference, &spec, &modes)?;
        for (mi, fm) in mats.into_iter().enumerate() {
            features.insert((window_ms(seconds), mi), fm);
        }
    }
    run_experiment_with_features(&features, &plan, cfg)
}

/// File names the report writer produces.
pub fn report_table_name(window_ms: u32, axis: &ExperimentAxis) -> String {
    let axis_kind = match axis {
        ExperimentAxis::Pairs(_) => "pairs",
        ExperimentAxis::Bands(_) => "bands",
    };
    format!("table_{axis_kind}_{window_ms}ms.csv")
}

/// Render one window length's accuracy table: axis values as columns,
/// dimension-classifier rows, headline (fold-averaged) accuracies in
/// percent. The first line embeds the config hash and seed.
pub fn render_accuracy_table(
    report: &ExperimentReport,
    cfg: &ExperimentConfig,
    window_ms_value: u32,
    config_hash: &str,
) -> Result<String> {
    let axis_values: Vec<String> = cfg.axis.modes().iter().map(|m| m.to_string()).collect();
    let mut text = format!("# config_hash: {config_hash} seed: {}\n", report.seed);
    text.push_str("cross_validated_accuracy_pct");
    for v in &axis_values {
        text.push(',');
        text.push_str(v);
    }
    text.push('\n');
    for &dimension in &cfg.dimensions {
        for &classifier in &cfg.classifiers {
            text.push_str(&format!("{dimension}-{classifier}"));
            for v in &axis_values {
                let key = CellKey {
                    window_ms: window_ms_value,
                    axis_value: v.clone(),
                    dimension,
                    classifier,
                };
                let cell = report
                    .cell(&key)
                    .ok_or_else(|| Error::Invalid(format!("report is missing cell {key}")))?;
                text.push_str(&format!(",{:.2}", cell.mean_accuracy * 100.0));
            }
            text.push('\n');
        }
    }
    Ok(text)
}

/// On-disk form of a finished experiment (`report.json`).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReportFile {
    pub config_hash: String,
    pub seed: u64,
    pub class_priors: BTreeMap<String, f64>,
    pub fold_plan: FoldPlan,
    pub cells: Vec<CellReport>,
}

pub fn read_report_file(path: &Path) -> Result<ReportFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

/// Emit the delimited accuracy tables (one per window length) plus
/// `report.json` with the full per-fold detail. Returns the paths written.
pub fn write_report_files(
    dir: &Path,
    report: &ExperimentReport,
    cfg: &ExperimentConfig,
    config_hash: &str,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    for &seconds in &cfg.window_lengths_s {
        let wms = window_ms(seconds);
        let text = render_accuracy_table(report, cfg, wms, config_hash)?;
        let path = dir.join(report_table_name(wms, &cfg.axis));
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    let file = ReportFile {
        config_hash: config_hash.to_string(),
        seed: report.seed,
        class_priors: report.class_priors.clone(),
        fold_plan: report.fold_plan.clone(),
        cells: report.cells.clone(),
    };
    let json = serde_json::to_string_pretty(&file).expect("report serializes");
    let path = dir.join("report.json");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synthetic::{generate_synthetic, SyntheticConfig};

    #[test]
    fn folds_partition_32_participants_into_8x4() {
        let ids: Vec<u32> = (1..=32).collect();
        let plan = make_folds(&ids, 8, 42).unwrap();
        assert_eq!(plan.folds.len(), 8);
        let mut seen = BTreeSet::new();
        for fold in &plan.folds {
            assert_eq!(fold.len(), 4);
            for id in fold {
                assert!(seen.insert(*id), "participant {id} in two folds");
            }
        }
        assert_eq!(seen.len(), 32);
    }

    #[test]
    fn folds_are_seed_deterministic() {
        let ids: Vec<u32> = (1..=16).collect();
        assert_eq!(make_folds(&ids, 8, 7).unwrap(), make_folds(&ids, 8, 7).unwrap());
        assert_ne!(
            make_folds(&ids, 8, 7).unwrap().folds,
            make_folds(&ids, 8, 8).unwrap().folds
        );
    }

    #[test]
    fn indivisible_participant_count_is_rejected() {
        let ids: Vec<u32> = (1..=30).collect();
        let err = make_folds(&ids, 8, 0).unwrap_err();
        assert!(err.to_string().contains("remainder"), "got {err}");
    }

    #[test]
    fn metrics_match_hand_computation() {
        use LabelValue::{High, Low};
        // TP=3, FN=1, TN=4, FP=2
        let labels = vec![High, High, High, High, Low, Low, Low, Low, Low, Low];
        let preds = vec![High, High, High, Low, Low, Low, Low, Low, High, High];
        let m = compute_metrics(&preds, &labels).unwrap();
        assert_eq!((m.tp, m.fn_, m.tn, m.fp), (3, 1, 4, 2));
        assert!((m.accuracy - 0.7).abs() < 1e-12);
        assert!((m.sensitivity.unwrap() - 0.75).abs() < 1e-12);
        assert!((m.specificity.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions_score_one() {
        use LabelValue::{High, Low};
        let labels = vec![High, Low];
        let m = compute_metrics(&labels.clone(), &labels).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.sensitivity, Some(1.0));
        assert_eq!(m.specificity, Some(1.0));
    }

    #[test]
    fn all_high_predictions_have_zero_specificity() {
        use LabelValue::{High, Low};
        let labels = vec![High, Low, Low];
        let preds = vec![High, High, High];
        let m = compute_metrics(&preds, &labels).unwrap();
        assert_eq!(m.specificity, Some(0.0));
        // single-class labels leave the other rate undefined
        let m = compute_metrics(&[High, High], &[High, High]).unwrap();
        assert_eq!(m.specificity, None);
        assert_eq!(m.sensitivity, Some(1.0));
    }

    fn desk_dataset(ratio: f64) -> Vec<(Recording, RatingRecord)> {
        let cfg = SyntheticConfig {
            participants: 8,
            trials_per_participant: 6,
            trial_seconds: 8.0,
            planted_amplitude_ratio: ratio,
            noise_amplitude: 0.3,
            ..SyntheticConfig::default()
        };
        generate_synthetic(&cfg, 11).unwrap()
    }

    fn desk_config() -> ExperimentConfig {
        ExperimentConfig {
            axis: ExperimentAxis::Bands(vec![BandName::Beta]),
            dimensions: vec![Dimension::Arousal],
            classifiers: vec![ClassifierKind::Knn],
            folds: 8,
            seed: 5,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn grid_shape_matches_the_experiment_design() {
        let pairs = desk_dataset(1.8);
        let cfg = ExperimentConfig {
            axis: ExperimentAxis::Bands(vec![BandName::Beta, BandName::Theta]),
            dimensions: vec![Dimension::Arousal, Dimension::Valence],
            classifiers: vec![ClassifierKind::Knn, ClassifierKind::Svm],
            ..desk_config()
        };
        let report = run_experiment(&pairs, &cfg).unwrap();
        // 2 bands x 2 dims x 2 classifiers = 8 cells, 8 folds each
        assert_eq!(report.cells.len(), 8);
        for cell in &report.cells {
            assert_eq!(cell.folds.len(), 8);
        }
        assert!(report.class_priors.contains_key("arousal"));
    }

    #[test]
    fn grouped_folds_never_mix_participants() {
        let pairs = desk_dataset(1.8);
        let cfg = desk_config();
        let report = run_experiment(&pairs, &cfg).unwrap();
        for cell in &report.cells {
            for fold in &cell.folds {
                assert_ne!(fold.train_checksum, fold.test_checksum);
                let test_set: BTreeSet<u32> =
                    fold.test_participants.iter().copied().collect();
                let plan_set: BTreeSet<u32> = report.fold_plan.folds[fold.fold_index]
                    .iter()
                    .copied()
                    .collect();
                assert_eq!(test_set, plan_set);
            }
        }
    }

    #[test]
    fn planted_effect_is_recoverable_at_desk_scale() {
        let pairs = desk_dataset(2.0);
        let cfg = desk_config();
        let report = run_experiment(&pairs, &cfg).unwrap();
        let acc = report.cells[0].mean_accuracy;
        assert!(acc > 0.8, "beta KNN accuracy {acc} too low for a 2x planted effect");
    }

    #[test]
    fn report_is_deterministic_and_files_byte_identical() {
        let pairs = desk_dataset(1.5);
        let cfg = desk_config();
        let a = run_experiment(&pairs, &cfg).unwrap();
        let b = run_experiment(&pairs, &cfg).unwrap();
        assert_eq!(a, b);

        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        write_report_files(dir_a.path(), &a, &cfg, "deadbeef").unwrap();
        write_report_files(dir_b.path(), &b, &cfg, "deadbeef").unwrap();
        for name in ["table_bands_4000ms.csv", "report.json"] {
            let x = std::fs::read(dir_a.path().join(name)).unwrap();
            let y = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(x, y, "{name} differs between identical runs");
        }
    }

    #[test]
    fn mean_accuracy_is_arithmetic_mean_of_folds() {
        let pairs = desk_dataset(1.5);
        let report = run_experiment(&pairs, &desk_config()).unwrap();
        for cell in &report.cells {
            let mean: f64 = cell.folds.iter().map(|f| f.metrics.accuracy).sum::<f64>()
                / cell.folds.len() as f64;
            assert!((cell.mean_accuracy - mean).abs() < 1e-12);
        }
    }
}
