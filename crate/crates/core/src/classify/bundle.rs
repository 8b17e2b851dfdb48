//! Model bundles: a trained classifier, its PCA basis and its feature
//! columns saved as a directory of diffable text files.
//!
//! Layout: `model.json` names the classifier kind, hyperparameters and
//! the matrix files next to it. Matrices are plain text, one row per
//! line, comma-separated floats in shortest round-trip form, so two
//! bundles can be compared with ordinary text tools.

use std::fs;
use std::path::Path;

use crate::classify::{
    AnnModel, ClassifierKind, KnnModel, SvmModel, TrainedModel,
};
use crate::dataset::LabelValue;
use crate::error::{Error, Result};
use crate::features::ColumnDescriptor;
use crate::matrix::Matrix;
use crate::pca::PcaBasis;

#[derive(Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleMeta {
    kind: ClassifierKind,
    columns: Vec<String>,
    pca_mean_file: String,
    pca_basis_file: String,
    pca_variances_file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    svm: Option<SvmMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    knn: Option<KnnMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ann: Option<AnnMeta>,
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct SvmMeta {
    sigma: f64,
    c: f64,
    bias: f64,
    support_vectors_file: String,
    dual_coefs_file: String,
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct KnnMeta {
    k: usize,
    train_file: String,
    labels_file: String,
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnMeta {
    layer_sizes: Vec<usize>,
    weight_files: Vec<String>,
    bias_files: Vec<String>,
}

fn write_text_matrix<'a>(
    path: &Path,
    rows: impl Iterator<Item = &'a [f64]>,
) -> Result<()> {
    let mut text = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            detail: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(rows)
}

pub fn save_bundle(
    dir: &Path,
    model: &TrainedModel,
    pca: &PcaBasis,
    columns: &[ColumnDescriptor],
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    write_text_matrix(&dir.join("pca_mean.txt"), std::iter::once(pca.mean.as_slice()))?;
    write_text_matrix(&dir.join("pca_basis.txt"), pca.basis.iter_rows())?;
    write_text_matrix(
        &dir.join("pca_variances.txt"),
        std::iter::once(pca.variances.as_slice()),
    )?;

    let mut meta = BundleMeta {
        kind: model.kind(),
        columns: columns.iter().map(|c| c.to_string()).collect(),
        pca_mean_file: "pca_mean.txt".into(),
        pca_basis_file: "pca_basis.txt".into(),
        pca_variances_file: "pca_variances.txt".into(),
        svm: None,
        knn: None,
        ann: None,
    };

    match model {
        TrainedModel::Svm(m) => {
            write_text_matrix(&dir.join("svm_support_vectors.txt"), m.support_vectors.iter_rows())?;
            write_text_matrix(
                &dir.join("svm_dual_coefs.txt"),
                std::iter::once(m.dual_coefs.as_slice()),
            )?;
            meta.svm = Some(SvmMeta {
                sigma: m.sigma,
                c: m.c,
                bias: m.bias,
                support_vectors_file: "svm_support_vectors.txt".into(),
                dual_coefs_file: "svm_dual_coefs.txt".into(),
            });
        }
        TrainedModel::Knn(m) => {
            write_text_matrix(&dir.join("knn_train.txt"), m.train.iter_rows())?;
            let labels: String = m
                .labels
                .iter()
                .map(|l| format!("{l}\n"))
                .collect();
            fs::write(dir.join("knn_labels.txt"), labels)
                .map_err(|e| Error::io(dir.join("knn_labels.txt"), e))?;
            meta.knn = Some(KnnMeta {
                k: m.k,
                train_file: "knn_train.txt".into(),
                labels_file: "knn_labels.txt".into(),
            });
        }
        TrainedModel::Ann(m) => {
            let mut weight_files = Vec::new();
            let mut bias_files = Vec::new();
            let mut layer_sizes = vec![m.input_dim()];
            for (i, layer) in m.layers.iter().enumerate() {
                let wf = format!("ann_weights_{i}.txt");
                let bf = format!("ann_biases_{i}.txt");
                write_text_matrix(&dir.join(&wf), layer.weights.iter_rows())?;
                write_text_matrix(&dir.join(&bf), std::iter::once(layer.biases.as_slice()))?;
                weight_files.push(wf);
                bias_files.push(bf);
                layer_sizes.push(layer.biases.len());
            }
            meta.ann = Some(AnnMeta {
                layer_sizes,
                weight_files,
                bias_files,
            });
        }
    }

    let json = serde_json::to_string_pretty(&meta).expect("bundle meta serializes");
    fs::write(dir.join("model.json"), json).map_err(|e| Error::io(dir.join("model.json"), e))?;
    Ok(())
}

pub fn load_bundle(dir: &Path) -> Result<(TrainedModel, PcaBasis, Vec<ColumnDescriptor>)> {
    let meta_path = dir.join("model.json");
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: BundleMeta = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: meta_path.clone(),
        detail: e.to_string(),
    })?;

    let columns: Vec<ColumnDescriptor> = meta
        .columns
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;

    let single_row = |file: &str| -> Result<Vec<f64>> {
        let rows = read_text_matrix(&dir.join(file))?;
        rows.into_iter().next().ok_or_else(|| Error::Parse {
            path: dir.join(file),
            detail: "expected one row".into(),
        })
    };
    let mean = single_row(&meta.pca_mean_file)?;
    let variances = single_row(&meta.pca_variances_file)?;
    let basis_rows = read_text_matrix(&dir.join(&meta.pca_basis_file))?;
    let pca = PcaBasis {
        mean,
        basis: Matrix::from_rows(&basis_rows)?,
        variances,
    };

    let model = match meta.kind {
        ClassifierKind::Svm => {
            let m = meta.svm.ok_or_else(|| Error::Parse {
                path: meta_path.clone(),
                detail: "kind is svm but svm section is missing".into(),
            })?;
            let sv = read_text_matrix(&dir.join(&m.support_vectors_file))?;
            TrainedModel::Svm(SvmModel {
                support_vectors: Matrix::from_rows(&sv)?,
                dual_coefs: single_row(&m.dual_coefs_file)?,
                bias: m.bias,
                sigma: m.sigma,
                c: m.c,
            })
        }
        ClassifierKind::Knn => {
            let m = meta.knn.ok_or_else(|| Error::Parse {
                path: meta_path.clone(),
                detail: "kind is knn but knn section is missing".into(),
            })?;
            let train = read_text_matrix(&dir.join(&m.train_file))?;
            let label_text = fs::read_to_string(dir.join(&m.labels_file))
                .map_err(|e| Error::io(dir.join(&m.labels_file), e))?;
            let labels: Vec<LabelValue> = label_text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| match l.trim() {
                    "high" => Ok(LabelValue::High),
                    "low" => Ok(LabelValue::Low),
                    other => Err(Error::Parse {
                        path: dir.join(&m.labels_file),
                        detail: format!("bad label {other:?}"),
                    }),
                })
                .collect::<Result<_>>()?;
            TrainedModel::Knn(KnnModel {
                train: Matrix::from_rows(&train)?,
                labels,
                k: m.k,
            })
        }
        ClassifierKind::Ann => {
            let m = meta.ann.ok_or_else(|| Error::Parse {
                path: meta_path.clone(),
                detail: "kind is ann but ann section is missing".into(),
            })?;
            let mut layers = Vec::new();
            for (wf, bf) in m.weight_files.iter().zip(&m.bias_files) {
                let weights = read_text_matrix(&dir.join(wf))?;
                let biases = single_row(bf)?;
                layers.push(crate::classify::ann::Layer {
                    weights: Matrix::from_rows(&weights)?,
                    biases,
                });
            }
            TrainedModel::Ann(AnnModel { layers })
        }
    };
    Ok((model, pca, columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{ann_train, knn_fit, svm_train, AnnConfig, KnnConfig, SvmConfig};
    use crate::features::FeatureKind;
    use crate::pca;
    use crate::wavelet::BandName;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_problem() -> (Matrix, Vec<LabelValue>) {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let high = i % 2 == 0;
            let c = if high { 1.0 } else { -1.0 };
            rows.push(vec![c + rng.random_range(-0.3..0.3), c]);
            labels.push(if high { LabelValue::High } else { LabelValue::Low });
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    fn columns() -> Vec<ColumnDescriptor> {
        vec![
            ColumnDescriptor {
                channel: "F3".into(),
                band: BandName::Beta,
                kind: FeatureKind::Entropy,
            },
            ColumnDescriptor {
                channel: "F3".into(),
                band: BandName::Beta,
                kind: FeatureKind::Energy,
            },
        ]
    }

    fn assert_roundtrip(model: TrainedModel, x: &Matrix) {
        let basis = pca::fit(x).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_bundle(dir.path(), &model, &basis, &columns()).unwrap();
        let (loaded, basis2, cols2) = load_bundle(dir.path()).unwrap();
        assert_eq!(basis, basis2);
        assert_eq!(columns(), cols2);
        assert_eq!(model, loaded);
        // and predictions agree on a probe point
        let probe = vec![0.2, -0.1];
        assert_eq!(model.predict(&probe).unwrap(), loaded.predict(&probe).unwrap());
    }

    #[test]
    fn svm_bundle_roundtrip() {
        let (x, labels) = toy_problem();
        let (m, _) = svm_train(&x, &labels, &SvmConfig::default()).unwrap();
        assert_roundtrip(TrainedModel::Svm(m), &x);
    }

    #[test]
    fn knn_bundle_roundtrip() {
        let (x, labels) = toy_problem();
        let m = knn_fit(x.clone(), &labels, &KnnConfig::default()).unwrap();
        assert_roundtrip(TrainedModel::Knn(m), &x);
    }

    #[test]
    fn ann_bundle_roundtrip() {
        let (x, labels) = toy_problem();
        let cfg = AnnConfig {
            epochs: 5,
            ..AnnConfig::default()
        };
        let r = ann_train(&x, &labels, &cfg).unwrap();
        assert_roundtrip(TrainedModel::Ann(r.model), &x);
    }

    #[test]
    fn missing_section_is_an_error() {
        let (x, labels) = toy_problem();
        let (m, _) = svm_train(&x, &labels, &SvmConfig::default()).unwrap();
        let basis = pca::fit(&x).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_bundle(dir.path(), &TrainedModel::Svm(m), &basis, &columns()).unwrap();
        // corrupt the metadata: claim knn while only svm files exist
        let meta_path = dir.path().join("model.json");
        let text = std::fs::read_to_string(&meta_path).unwrap();
        std::fs::write(&meta_path, text.replace("\"svm\"", "\"knn\"")).unwrap();
        assert!(load_bundle(dir.path()).is_err());
    }
}
