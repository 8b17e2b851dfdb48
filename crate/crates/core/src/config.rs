//! Run configuration: a strict TOML schema covering the dataset source,
//! preprocessing, experiment grid and classifier hyperparameters.
//!
//! Unknown keys are rejected everywhere. Defaults follow the headline
//! experiment: sigma 2, C 1, K 5, hidden [32, 16], one 4 s window at 50%
//! overlap, all ten study channels, eight folds, seed 42.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::classify::{AnnConfig, ClassifierKind, KnnConfig, SvmConfig};
use crate::dataset::io::load_dataset;
use crate::dataset::synthetic::{generate_synthetic, SyntheticConfig};
use crate::dataset::{ChannelSelection, Dimension, RatingRecord, Recording};
use crate::error::{Error, Result};
use crate::eval::{ExperimentAxis, ExperimentConfig};
use crate::pca::PcaOptions;
use crate::preprocess::Reference;
use crate::wavelet::BandName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Path,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub kind: DatasetKind,
    /// Manifest path, required when `kind = "path"`.
    pub path: Option<PathBuf>,
    pub synthetic: SyntheticConfig,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            kind: DatasetKind::Synthetic,
            path: None,
            synthetic: SyntheticConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    Bands,
    Pairs,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub axis: AxisKind,
    /// Band subset for `axis = "bands"`; all four named bands when absent.
    pub bands: Option<Vec<BandName>>,
    /// Pair subset for `axis = "pairs"`; the five study pairs when absent.
    pub pairs: Option<Vec<(String, String)>>,
    pub window_lengths_s: Vec<f64>,
    pub overlap_fraction: f64,
    pub dimensions: Vec<Dimension>,
    pub classifiers: Vec<ClassifierKind>,
    pub folds: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            axis: AxisKind::Bands,
            bands: None,
            pairs: None,
            window_lengths_s: vec![4.0],
            overlap_fraction: 0.5,
            dimensions: vec![Dimension::Arousal, Dimension::Valence],
            classifiers: ClassifierKind::ALL.to_vec(),
            folds: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    pub reference: Reference,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        PreprocessSection {
            reference: Reference::PerChannel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Channel selection applied before preprocessing.
    pub channels: Vec<String>,
    pub dataset: DatasetSection,
    pub experiment: ExperimentSection,
    pub preprocess: PreprocessSection,
    pub pca: PcaOptions,
    pub svm: SvmConfig,
    pub knn: KnnConfig,
    pub ann: AnnConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out_dir: PathBuf::from("runs/out"),
            channels: crate::dataset::STUDY_CHANNELS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            dataset: DatasetSection::default(),
            experiment: ExperimentSection::default(),
            preprocess: PreprocessSection::default(),
            pca: PcaOptions::default(),
            svm: SvmConfig::default(),
            knn: KnnConfig::default(),
            ann: AnnConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.kind == DatasetKind::Path && self.dataset.path.is_none() {
            return Err(Error::Config(
                "dataset.kind is \"path\" but dataset.path is not set".into(),
            ));
        }
        self.dataset.synthetic.validate()?;
        match self.experiment.axis {
            AxisKind::Bands => {
                if self.experiment.pairs.is_some() {
                    return Err(Error::Config(
                        "experiment.pairs given but experiment.axis is \"bands\"".into(),
                    ));
                }
                if let Some(bands) = &self.experiment.bands {
                    if bands.is_empty() {
                        return Err(Error::Config("experiment.bands is empty".into()));
                    }
                    let unique: BTreeSet<&BandName> = bands.iter().collect();
                    if unique.len() != bands.len() {
                        return Err(Error::Config("experiment.bands has duplicates".into()));
                    }
                }
            }
            AxisKind::Pairs => {
                if self.experiment.bands.is_some() {
                    return Err(Error::Config(
                        "experiment.bands given but experiment.axis is \"pairs\"".into(),
                    ));
                }
                if let Some(pairs) = &self.experiment.pairs {
                    if pairs.is_empty() {
                        return Err(Error::Config("experiment.pairs is empty".into()));
                    }
                }
            }
        }
        // channel selection must be valid study channels
        ChannelSelection::new(&self.channels)?;
        self.to_experiment_config()?.validate()
    }

    pub fn axis(&self) -> ExperimentAxis {
        match self.experiment.axis {
            AxisKind::Bands => match &self.experiment.bands {
                Some(bands) => ExperimentAxis::Bands(bands.clone()),
                None => ExperimentAxis::default_bands(),
            },
            AxisKind::Pairs => match &self.experiment.pairs {
                Some(pairs) => ExperimentAxis::Pairs(pairs.clone()),
                None => ExperimentAxis::default_pairs(),
            },
        }
    }

    pub fn to_experiment_config(&self) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            axis: self.axis(),
            window_lengths_s: self.experiment.window_lengths_s.clone(),
            overlap_fraction: self.experiment.overlap_fraction,
            dimensions: self.experiment.dimensions.clone(),
            classifiers: self.experiment.classifiers.clone(),
            channels: ChannelSelection::new(&self.channels)?,
            reference: self.preprocess.reference,
            pca: self.pca,
            svm: self.svm,
            knn: self.knn,
            ann: self.ann,
            folds: self.experiment.folds,
            seed: self.seed,
        })
    }

    /// Materialize the dataset this config points at.
    pub fn load_dataset(&self) -> Result<Vec<(Recording, RatingRecord)>> {
        match self.dataset.kind {
            DatasetKind::Path => {
                let path = self.dataset.path.as_ref().expect("validated");
                load_dataset(path)
            }
            DatasetKind::Synthetic => generate_synthetic(&self.dataset.synthetic, self.seed),
        }
    }

    /// Canonical serialized form; two configs hash equal iff this string
    /// is equal.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form, hex-encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Hash of the subset that determines feature tables (dataset,
    /// channels, preprocessing, windows, axis, seed). Classifier and PCA
    /// settings deliberately do not participate, so classifier sweeps
    /// reuse cached features.
    pub fn feature_cache_key(&self) -> String {
        #[derive(serde::Serialize)]
        struct FeatureKey<'a> {
            seed: u64,
            channels: &'a [String],
            dataset: &'a DatasetSection,
            reference: Reference,
            axis: ExperimentAxis,
            window_lengths_s: &'a [f64],
            overlap_fraction: f64,
        }
        let key = FeatureKey {
            seed: self.seed,
            channels: &self.channels,
            dataset: &self.dataset,
            reference: self.preprocess.reference,
            axis: self.axis(),
            window_lengths_s: &self.experiment.window_lengths_s,
            overlap_fraction: self.experiment.overlap_fraction,
        };
        let json = serde_json::to_string(&key).expect("key serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_stable() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.svm.sigma, 2.0);
        assert_eq!(cfg.svm.c, 1.0);
        assert_eq!(cfg.knn.k, 5);
        assert_eq!(cfg.ann.hidden, [32, 16]);
        assert_eq!(cfg.experiment.window_lengths_s, vec![4.0]);
        // hash is reproducible
        assert_eq!(cfg.hash(), RunConfig::default().hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("unknown_key = 1");
        assert!(err.is_err());
        let err = toml::from_str::<RunConfig>("[svm]\nsigma = 2.0\nnope = 3");
        assert!(err.is_err());
    }

    #[test]
    fn axis_list_mismatch_is_rejected() {
        let cfg: RunConfig = toml::from_str(
            "[experiment]\naxis = \"bands\"\npairs = [[\"F3\", \"F4\"]]\n",
        )
        .unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn path_kind_requires_a_path() {
        let cfg: RunConfig = toml::from_str("[dataset]\nkind = \"path\"\n").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn parse_a_full_config() {
        let text = r#"
            seed = 7
            out_dir = "runs/demo"
            channels = ["F3", "F4"]

            [dataset]
            kind = "synthetic"

            [dataset.synthetic]
            participants = 8
            trials_per_participant = 6
            trial_seconds = 8.0

            [experiment]
            axis = "pairs"
            pairs = [["F3", "F4"]]
            window_lengths_s = [4.0, 2.0]
            classifiers = ["svm"]
            dimensions = ["arousal"]

            [svm]
            sigma = 0.1
            c = 2.0
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.svm.sigma, 0.1);
        let exp = cfg.to_experiment_config().unwrap();
        assert_eq!(exp.window_lengths_s, vec![4.0, 2.0]);
        match exp.axis {
            ExperimentAxis::Pairs(p) => assert_eq!(p.len(), 1),
            _ => panic!("expected pair axis"),
        }
    }

    #[test]
    fn hash_tracks_content_and_cache_key_ignores_classifiers() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        b.seed = 43;
        assert_ne!(a.hash(), b.hash());

        let mut c = RunConfig::default();
        c.svm.c = 99.0;
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.feature_cache_key(), c.feature_cache_key());

        let mut d = RunConfig::default();
        d.experiment.window_lengths_s = vec![2.0];
        assert_ne!(a.feature_cache_key(), d.feature_cache_key());
    }

    #[test]
    fn invalid_channel_selection_is_rejected() {
        let cfg: RunConfig = toml::from_str("channels = [\"XX\"]").unwrap();
        assert!(cfg.validate().is_err());
    }
}
