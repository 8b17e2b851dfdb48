//! Recordings, ratings, labels and channel selection.
//!
//! A dataset is a collection of `(Recording, RatingRecord)` pairs, one per
//! participant-trial. On disk it lives in a documented directory layout
//! (see [`io`]); for desk-scale work the seeded generator in [`synthetic`]
//! produces the same shape without any external data.

pub mod io;
pub mod synthetic;

use crate::error::{Error, Result};

/// The ten frontal channels the study restricts itself to.
pub const STUDY_CHANNELS: [&str; 10] = [
    "F3", "F4", "F7", "F8", "FC1", "FC2", "FC5", "FC6", "FP1", "FP2",
];

/// Which self-assessment scale a label refers to.
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
pub enum Dimension {
    Valence,
    Arousal,
}

impl Dimension {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dimension::Valence => "valence",
            Dimension::Arousal => "arousal",
        }
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Binarized rating. Ordered so that `Low < High`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum LabelValue {
    Low,
    High,
}

impl LabelValue {
    pub fn is_high(&self) -> bool {
        matches!(self, LabelValue::High)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            LabelValue::Low => "low",
            LabelValue::High => "high",
        }
    }
}

impl std::fmt::Display for LabelValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A binarized label on one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryLabel {
    pub dimension: Dimension,
    pub value: LabelValue,
}

/// Threshold rule: a rating strictly greater than 4.5 is high, anything
/// else (including exactly 4.5) is low.
pub fn binarize(rating: f64) -> Result<LabelValue> {
    if !(1.0..=9.0).contains(&rating) {
        return Err(Error::Invalid(format!("rating {rating} outside [1, 9]")));
    }
    Ok(if rating > 4.5 {
        LabelValue::High
    } else {
        LabelValue::Low
    })
}

/// One participant-trial self-assessment.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RatingRecord {
    pub participant_id: u32,
    pub trial_id: u32,
    pub valence_rating: f64,
    pub arousal_rating: f64,
}

impl RatingRecord {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("valence", self.valence_rating),
            ("arousal", self.arousal_rating),
        ] {
            if !(1.0..=9.0).contains(&v) {
                return Err(Error::RatingOutOfRange {
                    participant: self.participant_id,
                    trial: self.trial_id,
                    value: v,
                }
                .in_stage("ratings", format!("{name} rating")));
            }
        }
        Ok(())
    }

    pub fn label(&self, dimension: Dimension) -> Result<LabelValue> {
        match dimension {
            Dimension::Valence => binarize(self.valence_rating),
            Dimension::Arousal => binarize(self.arousal_rating),
        }
    }
}

/// One participant-trial multichannel EEG segment.
///
/// `samples[c]` is channel `c` over time; all channels have equal length
/// and `channel_names[c]` names them, in matrix row order.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub participant_id: u32,
    pub trial_id: u32,
    pub samples: Vec<Vec<f64>>,
    pub sampling_rate_hz: f64,
    pub channel_names: Vec<String>,
}

impl Recording {
    pub fn new(
        participant_id: u32,
        trial_id: u32,
        samples: Vec<Vec<f64>>,
        sampling_rate_hz: f64,
        channel_names: Vec<String>,
    ) -> Result<Self> {
        let rec = Recording {
            participant_id,
            trial_id,
            samples,
            sampling_rate_hz,
            channel_names,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |detail: String| Error::Dataset {
            participant: self.participant_id,
            trial: self.trial_id,
            detail,
        };
        if !(self.sampling_rate_hz.is_finite() && self.sampling_rate_hz > 0.0) {
            return Err(fail(format!(
                "sampling rate must be positive, got {}",
                self.sampling_rate_hz
            )));
        }
        if self.channel_names.len() != self.samples.len() {
            return Err(fail(format!(
                "{} channel names for {} sample rows",
                self.channel_names.len(),
                self.samples.len()
            )));
        }
        if let Some(first) = self.samples.first() {
            let n = first.len();
            if let Some((i, row)) = self
                .samples
                .iter()
                .enumerate()
                .find(|(_, row)| row.len() != n)
            {
                return Err(fail(format!(
                    "channel {i} has {} samples, channel 0 has {n}",
                    row.len()
                )));
            }
        }
        Ok(())
    }

    pub fn num_channels(&self) -> usize {
        self.samples.len()
    }

    pub fn num_samples(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channel_names.iter().position(|c| c == name)
    }
}

/// Ordered, duplicate-free subset of [`STUDY_CHANNELS`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSelection(Vec<String>);

impl ChannelSelection {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Invalid("channel selection is empty".into()));
        }
        let mut seen = Vec::with_capacity(labels.len());
        for label in labels {
            let label = label.as_ref();
            if !STUDY_CHANNELS.contains(&label) {
                return Err(Error::UnknownChannel(label.to_string()));
            }
            if seen.iter().any(|s: &String| s == label) {
                return Err(Error::Invalid(format!("duplicate channel {label:?}")));
            }
            seen.push(label.to_string());
        }
        Ok(ChannelSelection(seen))
    }

    /// All ten study channels in their canonical order.
    pub fn all_study_channels() -> Self {
        ChannelSelection(STUDY_CHANNELS.iter().map(|s| s.to_string()).collect())
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Restrict a recording to the requested channels, in the requested order.
pub fn select_channels(recording: &Recording, selection: &ChannelSelection) -> Result<Recording> {
    let mut samples = Vec::with_capacity(selection.len());
    for label in selection.labels() {
        let idx = recording
            .channel_index(label)
            .ok_or_else(|| Error::UnknownChannel(label.clone()))?;
        samples.push(recording.samples[idx].clone());
    }
    Ok(Recording {
        participant_id: recording.participant_id,
        trial_id: recording.trial_id,
        samples,
        sampling_rate_hz: recording.sampling_rate_hz,
        channel_names: selection.labels().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recording_with(names: &[&str]) -> Recording {
        let samples = names.iter().map(|_| vec![0.0, 1.0, 2.0]).collect();
        Recording::new(
            1,
            0,
            samples,
            128.0,
            names.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn binarize_threshold() {
        assert_eq!(binarize(7.0).unwrap(), LabelValue::High);
        assert_eq!(binarize(4.5).unwrap(), LabelValue::Low);
        assert_eq!(binarize(1.0).unwrap(), LabelValue::Low);
        assert!(binarize(9.5).is_err());
        assert!(binarize(0.5).is_err());
    }

    #[test]
    fn select_pair_from_wide_recording() {
        // 32-channel cap with the study channels embedded somewhere.
        let mut names: Vec<String> = (0..22).map(|i| format!("X{i}")).collect();
        names.extend(STUDY_CHANNELS.iter().map(|s| s.to_string()));
        let samples: Vec<Vec<f64>> = (0..32).map(|i| vec![i as f64; 4]).collect();
        let rec = Recording::new(3, 7, samples, 128.0, names).unwrap();

        let sel = ChannelSelection::new(&["F3", "F4"]).unwrap();
        let out = select_channels(&rec, &sel).unwrap();
        assert_eq!(out.num_channels(), 2);
        assert_eq!(out.channel_names, vec!["F3", "F4"]);
        assert_eq!(out.samples[0], vec![22.0; 4]);
        assert_eq!(out.participant_id, 3);
    }

    #[test]
    fn select_all_is_identity() {
        let rec = recording_with(&STUDY_CHANNELS);
        let sel = ChannelSelection::all_study_channels();
        let out = select_channels(&rec, &sel).unwrap();
        assert_eq!(out, rec);
    }

    #[test]
    fn select_is_idempotent() {
        let rec = recording_with(&STUDY_CHANNELS);
        let sel = ChannelSelection::new(&["F7", "F3"]).unwrap();
        let once = select_channels(&rec, &sel).unwrap();
        let twice = select_channels(&once, &sel).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn unknown_channel_is_rejected() {
        assert!(matches!(
            ChannelSelection::new(&["XX"]),
            Err(Error::UnknownChannel(_))
        ));
        let rec = recording_with(&["F3"]);
        let sel = ChannelSelection::new(&["F3", "F4"]).unwrap();
        assert!(select_channels(&rec, &sel).is_err());
    }

    #[test]
    fn ragged_channels_rejected() {
        let err = Recording::new(
            1,
            0,
            vec![vec![0.0; 3], vec![0.0; 2]],
            128.0,
            vec!["F3".into(), "F4".into()],
        );
        assert!(err.is_err());
    }

    #[test]
    fn binarize_is_monotone() {
        let mut prev = LabelValue::Low;
        for i in 0..=80 {
            let r = 1.0 + i as f64 * 0.1;
            let label = binarize(r).unwrap();
            assert!(label >= prev, "label order broke at rating {r}");
            prev = label;
        }
    }
}
