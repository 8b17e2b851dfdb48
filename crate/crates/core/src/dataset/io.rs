//! On-disk dataset layout.
//!
//! A dataset directory contains:
//!
//! * `manifest.json` — lists the participant files and the ratings table:
//!
//!   ```json
//!   {
//!     "version": 1,
//!     "ratings_file": "ratings.csv",
//!     "participants": [
//!       { "id": 1, "signal_file": "participant_001.f32le",
//!         "meta_file": "participant_001.json" }
//!     ]
//!   }
//!   ```
//!
//! * one signal file per participant: a little-endian 32-bit-float matrix,
//!   row-major `[channels x total_samples]`, all trials concatenated along
//!   time;
//! * one sidecar per participant naming channels, the sampling rate and the
//!   trial boundaries within the matrix;
//! * a delimited ratings table with header `participant,trial,valence,arousal`.
//!
//! Converters from other acquisition formats only need to emit this layout;
//! nothing here parses vendor files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::{RatingRecord, Recording};
use crate::error::{Error, Result};

#[derive(Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub ratings_file: String,
    pub participants: Vec<ManifestEntry>,
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: u32,
    pub signal_file: String,
    pub meta_file: String,
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantMeta {
    pub participant_id: u32,
    pub sampling_rate_hz: f64,
    pub channel_names: Vec<String>,
    pub total_samples: u64,
    pub trials: Vec<TrialSpan>,
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialSpan {
    pub trial_id: u32,
    pub start_sample: u64,
    pub num_samples: u64,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

fn read_ratings(path: &Path) -> Result<BTreeMap<(u32, u32), RatingRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
                Error::MissingInput {
                    path: path.to_path_buf(),
                    detail: "ratings file not found".into(),
                }
            }
            _ => Error::Parse {
                path: path.to_path_buf(),
                detail: e.to_string(),
            },
        })?;

    let expected = ["participant", "trial", "valence", "arousal"];
    let headers = reader.headers().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            detail: format!("ratings header must be {expected:?}, got {headers:?}"),
        });
    }

    let mut out = BTreeMap::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let parse = |idx: usize, what: &str| -> Result<f64> {
            row.get(idx)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    detail: format!("row {}: bad {what}", line + 2),
                })
        };
        let record = RatingRecord {
            participant_id: parse(0, "participant id")? as u32,
            trial_id: parse(1, "trial id")? as u32,
            valence_rating: parse(2, "valence rating")?,
            arousal_rating: parse(3, "arousal rating")?,
        };
        record.validate()?;
        out.insert((record.participant_id, record.trial_id), record);
    }
    Ok(out)
}

fn read_signal_matrix(path: &Path, channels: usize, total_samples: u64) -> Result<Vec<Vec<f64>>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = channels as u64 * total_samples * 4;
    if bytes.len() as u64 != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            detail: format!(
                "signal file is {} bytes, metadata implies {expected} ({channels} channels x {total_samples} samples x 4)",
                bytes.len()
            ),
        });
    }
    let total = total_samples as usize;
    let mut matrix = Vec::with_capacity(channels);
    for c in 0..channels {
        let start = c * total * 4;
        let row = bytes[start..start + total * 4]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        matrix.push(row);
    }
    Ok(matrix)
}

/// Load every `(Recording, RatingRecord)` pair a manifest references.
///
/// Recordings come back in manifest participant order, then sidecar trial
/// order, with channel ordering exactly as the sidecar names them.
pub fn load_dataset(manifest_path: &Path) -> Result<Vec<(Recording, RatingRecord)>> {
    let manifest: Manifest = read_json(manifest_path)?;
    if manifest.version != 1 {
        return Err(Error::Config(format!(
            "unsupported manifest version {}",
            manifest.version
        )));
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let ratings = read_ratings(&base.join(&manifest.ratings_file))?;

    let mut pairs = Vec::new();
    for entry in &manifest.participants {
        let meta: ParticipantMeta = read_json(&base.join(&entry.meta_file))?;
        if meta.participant_id != entry.id {
            return Err(Error::Dataset {
                participant: entry.id,
                trial: 0,
                detail: format!("sidecar declares participant {}", meta.participant_id),
            });
        }
        let matrix = read_signal_matrix(
            &base.join(&entry.signal_file),
            meta.channel_names.len(),
            meta.total_samples,
        )?;
        for span in &meta.trials {
            let start = span.start_sample as usize;
            let end = start + span.num_samples as usize;
            if end as u64 > meta.total_samples {
                return Err(Error::Dataset {
                    participant: entry.id,
                    trial: span.trial_id,
                    detail: format!(
                        "trial span [{start}, {end}) exceeds {} recorded samples",
                        meta.total_samples
                    ),
                });
            }
            let samples: Vec<Vec<f64>> = matrix.iter().map(|ch| ch[start..end].to_vec()).collect();
            let recording = Recording::new(
                entry.id,
                span.trial_id,
                samples,
                meta.sampling_rate_hz,
                meta.channel_names.clone(),
            )?;
            let rating = ratings
                .get(&(entry.id, span.trial_id))
                .cloned()
                .ok_or(Error::Dataset {
                    participant: entry.id,
                    trial: span.trial_id,
                    detail: "trial has no rating record".into(),
                })?;
            pairs.push((recording, rating));
        }
    }
    Ok(pairs)
}

/// Write a dataset directory in the layout [`load_dataset`] reads.
///
/// Samples are stored as little-endian `f32`; callers that need bit-exact
/// round trips must hold values already representable in `f32` (everything
/// this crate generates or loads is).
pub fn save_dataset(dir: &Path, pairs: &[(Recording, RatingRecord)]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    // Group trials by participant, preserving first-seen order.
    let mut order: Vec<u32> = Vec::new();
    let mut by_participant: BTreeMap<u32, Vec<&(Recording, RatingRecord)>> = BTreeMap::new();
    for pair in pairs {
        let id = pair.0.participant_id;
        if !order.contains(&id) {
            order.push(id);
        }
        by_participant.entry(id).or_default().push(pair);
    }

    let mut manifest = Manifest {
        version: 1,
        ratings_file: "ratings.csv".into(),
        participants: Vec::new(),
    };

    for id in &order {
        let trials = &by_participant[id];
        let first = &trials[0].0;
        for (rec, _) in trials.iter() {
            if rec.channel_names != first.channel_names
                || rec.sampling_rate_hz != first.sampling_rate_hz
            {
                return Err(Error::Dataset {
                    participant: *id,
                    trial: rec.trial_id,
                    detail: "inconsistent channels or rate within participant".into(),
                });
            }
        }
        let channels = first.num_channels();
        let mut spans = Vec::new();
        let mut cursor = 0u64;
        for (rec, _) in trials.iter() {
            spans.push(TrialSpan {
                trial_id: rec.trial_id,
                start_sample: cursor,
                num_samples: rec.num_samples() as u64,
            });
            cursor += rec.num_samples() as u64;
        }

        let mut bytes = Vec::with_capacity(channels * cursor as usize * 4);
        for c in 0..channels {
            for (rec, _) in trials.iter() {
                for &v in &rec.samples[c] {
                    bytes.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
        }

        let signal_file = format!("participant_{id:03}.f32le");
        let meta_file = format!("participant_{id:03}.json");
        fs::write(dir.join(&signal_file), &bytes)
            .map_err(|e| Error::io(dir.join(&signal_file), e))?;
        let meta = ParticipantMeta {
            participant_id: *id,
            sampling_rate_hz: first.sampling_rate_hz,
            channel_names: first.channel_names.clone(),
            total_samples: cursor,
            trials: spans,
        };
        let meta_json = serde_json::to_string_pretty(&meta).expect("meta serializes");
        fs::write(dir.join(&meta_file), meta_json).map_err(|e| Error::io(dir.join(&meta_file), e))?;
        manifest.participants.push(ManifestEntry {
            id: *id,
            signal_file,
            meta_file,
        });
    }

    let mut ratings = String::from("participant,trial,valence,arousal\n");
    for id in &order {
        for (_, rating) in &by_participant[id] {
            ratings.push_str(&format!(
                "{},{},{:?},{:?}\n",
                rating.participant_id, rating.trial_id, rating.valence_rating, rating.arousal_rating
            ));
        }
    }
    fs::write(dir.join("ratings.csv"), ratings)
        .map_err(|e| Error::io(dir.join("ratings.csv"), e))?;

    let manifest_path = dir.join("manifest.json");
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, manifest_json).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}
