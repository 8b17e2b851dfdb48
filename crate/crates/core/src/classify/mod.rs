//! The three classifiers and their shared surface.

pub mod ann;
pub mod bundle;
pub mod knn;
pub mod svm;

pub use ann::{ann_predict, ann_train, AnnConfig, AnnModel, AnnTrainResult};
pub use knn::{knn_fit, knn_predict, KnnConfig, KnnModel};
pub use svm::{rbf_kernel, svm_predict, svm_train, SvmConfig, SvmModel, SvmTrainStats};

use crate::dataset::LabelValue;
use crate::error::{Error, Result};

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    serde::Serialize,
    serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Svm,
    Knn,
    Ann,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] =
        [ClassifierKind::Svm, ClassifierKind::Knn, ClassifierKind::Ann];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Ann => "ann",
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svm" => Ok(ClassifierKind::Svm),
            "knn" => Ok(ClassifierKind::Knn),
            "ann" => Ok(ClassifierKind::Ann),
            other => Err(Error::Config(format!("unknown classifier {other:?}"))),
        }
    }
}

/// Any trained classifier, ready to predict.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Svm(SvmModel),
    Knn(KnnModel),
    Ann(AnnModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::Svm(_) => ClassifierKind::Svm,
            TrainedModel::Knn(_) => ClassifierKind::Knn,
            TrainedModel::Ann(_) => ClassifierKind::Ann,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<LabelValue> {
        match self {
            TrainedModel::Svm(m) => Ok(svm_predict(m, x)?.0),
            TrainedModel::Knn(m) => knn_predict(m, x),
            TrainedModel::Ann(m) => Ok(ann_predict(m, x)?.0),
        }
    }
}
