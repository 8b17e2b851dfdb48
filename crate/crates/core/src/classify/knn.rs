//! K-nearest-neighbor voter over the stored training set.
//!
//! Brute-force Euclidean search. Ties are pinned down so results are
//! reproducible: equal distances resolve to the lower training-row index,
//! and a tied vote (only possible when an even K is explicitly allowed)
//! falls back to the single nearest neighbor's label.

use crate::dataset::LabelValue;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnConfig {
    pub k: usize,
    /// Reject even K up front; on by default so votes cannot tie.
    pub enforce_odd_k: bool,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k: 5,
            enforce_odd_k: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub train: Matrix,
    pub labels: Vec<LabelValue>,
    pub k: usize,
}

pub fn knn_fit(train: Matrix, labels: &[LabelValue], cfg: &KnnConfig) -> Result<KnnModel> {
    if train.rows() == 0 {
        return Err(Error::Invalid("empty training set".into()));
    }
    if train.rows() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} rows with {} labels",
            train.rows(),
            labels.len()
        )));
    }
    if cfg.k == 0 || cfg.k > train.rows() {
        return Err(Error::Config(format!(
            "K must be in [1, {}], got {}",
            train.rows(),
            cfg.k
        )));
    }
    if cfg.enforce_odd_k && cfg.k % 2 == 0 {
        return Err(Error::Config(format!(
            "K = {} is even; pick an odd K or disable enforce_odd_k",
            cfg.k
        )));
    }
    Ok(KnnModel {
        train,
        labels: labels.to_vec(),
        k: cfg.k,
    })
}

pub fn knn_predict(model: &KnnModel, x: &[f64]) -> Result<LabelValue> {
    if x.len() != model.train.cols() {
        return Err(Error::Invalid(format!(
            "query has {} features, model expects {}",
            x.len(),
            model.train.cols()
        )));
    }
    // Squared distances order identically to Euclidean ones.
    let mut dist: Vec<(f64, usize)> = model
        .train
        .iter_rows()
        .enumerate()
        .map(|(i, row)| {
            let d: f64 = row
                .iter()
                .zip(x)
                .map(|(a, b)| {
                    let d = a - b;
                    d * d
                })
                .sum();
            (d, i)
        })
        .collect();
    dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let neighbors = &dist[..model.k];
    let high_votes = neighbors
        .iter()
        .filter(|(_, i)| model.labels[*i].is_high())
        .count();
    let low_votes = model.k - high_votes;
    Ok(match high_votes.cmp(&low_votes) {
        std::cmp::Ordering::Greater => LabelValue::High,
        std::cmp::Ordering::Less => LabelValue::Low,
        std::cmp::Ordering::Equal => model.labels[neighbors[0].1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn label(v: bool) -> LabelValue {
        if v {
            LabelValue::High
        } else {
            LabelValue::Low
        }
    }

    /// Independent exhaustive-search oracle: recompute every true
    /// Euclidean distance, sort with the documented tie-breaks, vote.
    fn knn_oracle(train: &Matrix, labels: &[LabelValue], x: &[f64], k: usize) -> LabelValue {
        let mut all: Vec<(f64, usize)> = (0..train.rows())
            .map(|i| {
                let row = train.row(i);
                let d = row
                    .iter()
                    .zip(x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                (d, i)
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut high = 0usize;
        let mut low = 0usize;
        for (_, i) in &all[..k] {
            if labels[*i].is_high() {
                high += 1;
            } else {
                low += 1;
            }
        }
        match high.cmp(&low) {
            std::cmp::Ordering::Greater => LabelValue::High,
            std::cmp::Ordering::Less => LabelValue::Low,
            std::cmp::Ordering::Equal => labels[all[0].1],
        }
    }

    #[test]
    fn exact_training_point_with_k1() {
        let train = Matrix::from_rows(&[vec![0.0, 0.0], vec![5.0, 5.0]]).unwrap();
        let labels = vec![label(true), label(false)];
        let model = knn_fit(
            train,
            &labels,
            &KnnConfig {
                k: 1,
                ..KnnConfig::default()
            },
        )
        .unwrap();
        assert_eq!(knn_predict(&model, &[0.0, 0.0]).unwrap(), LabelValue::High);
        assert_eq!(knn_predict(&model, &[5.0, 5.0]).unwrap(), LabelValue::Low);
    }

    #[test]
    fn equidistant_points_resolve_to_lower_index() {
        let train = Matrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
        let labels = vec![label(false), label(true)];
        let model = knn_fit(
            train,
            &labels,
            &KnnConfig {
                k: 1,
                ..KnnConfig::default()
            },
        )
        .unwrap();
        // exactly between the two: the lower-index (low) point wins
        assert_eq!(knn_predict(&model, &[0.0]).unwrap(), LabelValue::Low);
    }

    #[test]
    fn matches_oracle_on_random_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<LabelValue> = (0..30).map(|_| label(rng.random::<bool>())).collect();
        let train = Matrix::from_rows(&rows).unwrap();
        for k in [1usize, 3, 5, 7] {
            let model = knn_fit(
                train.clone(),
                &labels,
                &KnnConfig {
                    k,
                    ..KnnConfig::default()
                },
            )
            .unwrap();
            for _ in 0..100 {
                let q: Vec<f64> = (0..3).map(|_| rng.random_range(-1.2..1.2)).collect();
                assert_eq!(
                    knn_predict(&model, &q).unwrap(),
                    knn_oracle(&train, &labels, &q, k),
                    "k={k}"
                );
            }
        }
    }

    #[test]
    fn even_k_rejected_unless_opted_in() {
        let train = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let labels = vec![label(true), label(false), label(true), label(false)];
        assert!(knn_fit(
            train.clone(),
            &labels,
            &KnnConfig {
                k: 4,
                enforce_odd_k: true
            }
        )
        .is_err());
        let model = knn_fit(
            train,
            &labels,
            &KnnConfig {
                k: 4,
                enforce_odd_k: false,
            },
        )
        .unwrap();
        // 2-2 vote: nearest neighbor (index 1, low) breaks the tie
        assert_eq!(knn_predict(&model, &[1.2]).unwrap(), LabelValue::Low);
    }

    #[test]
    fn k_bounds_are_enforced() {
        let train = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let labels = vec![label(true), label(false)];
        for k in [0usize, 3] {
            assert!(knn_fit(
                train.clone(),
                &labels,
                &KnnConfig {
                    k,
                    enforce_odd_k: false
                }
            )
            .is_err());
        }
    }
}
