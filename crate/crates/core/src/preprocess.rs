//! Referencing, [0,1] normalization and overlapped windowing.

use crate::dataset::Recording;
use crate::error::{Error, Result};

/// How the mean reference is computed before normalization.
///
/// The default subtracts each channel's own mean. `CommonAverage`
/// subtracts the instantaneous cross-channel average instead; it is opt-in
/// and never selected implicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    #[default]
    PerChannel,
    CommonAverage,
}

/// Subtract each channel's mean from its own samples.
pub fn remove_mean(recording: &Recording) -> Result<Recording> {
    let mut out = recording.clone();
    for (idx, channel) in out.samples.iter_mut().enumerate() {
        if channel.is_empty() {
            return Err(Error::Dataset {
                participant: recording.participant_id,
                trial: recording.trial_id,
                detail: format!("channel {idx} is empty"),
            });
        }
        let mean = channel.iter().sum::<f64>() / channel.len() as f64;
        for v in channel.iter_mut() {
            *v -= mean;
        }
    }
    Ok(out)
}

/// Subtract the per-sample average across channels from every channel.
pub fn remove_common_average(recording: &Recording) -> Result<Recording> {
    if recording.num_channels() == 0 || recording.num_samples() == 0 {
        return Err(Error::Dataset {
            participant: recording.participant_id,
            trial: recording.trial_id,
            detail: "cannot reference an empty recording".into(),
        });
    }
    let n = recording.num_samples();
    let ch = recording.num_channels() as f64;
    let mut avg = vec![0.0; n];
    for channel in &recording.samples {
        for (a, v) in avg.iter_mut().zip(channel) {
            *a += v / ch;
        }
    }
    let mut out = recording.clone();
    for channel in out.samples.iter_mut() {
        for (v, a) in channel.iter_mut().zip(&avg) {
            *v -= a;
        }
    }
    Ok(out)
}

pub fn apply_reference(recording: &Recording, reference: Reference) -> Result<Recording> {
    match reference {
        Reference::PerChannel => remove_mean(recording),
        Reference::CommonAverage => remove_common_average(recording),
    }
}

/// Map each channel onto [0, 1] via `(x - min) / (max - min)`.
///
/// A constant channel has no range to stretch; it maps to all zeros and a
/// warning is logged rather than aborting the batch.
pub fn normalize_unit_interval(recording: &Recording) -> Recording {
    let mut out = recording.clone();
    for (idx, channel) in out.samples.iter_mut().enumerate() {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in channel.iter() {
            min = min.min(v);
            max = max.max(v);
        }
        let range = max - min;
        if channel.is_empty() || range == 0.0 {
            log::warn!(
                "participant {} trial {} channel {}: constant channel, normalized to zeros",
                recording.participant_id,
                recording.trial_id,
                idx
            );
            channel.iter_mut().for_each(|v| *v = 0.0);
            continue;
        }
        for v in channel.iter_mut() {
            *v = (*v - min) / range;
        }
    }
    out
}

/// Windowing parameters. Defaults follow the experiment design: 4 s
/// windows at 50% overlap, with 2 s as the alternate sweep value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WindowSpec {
    pub length_seconds: f64,
    pub overlap_fraction: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            length_seconds: 4.0,
            overlap_fraction: 0.5,
        }
    }
}

impl WindowSpec {
    pub fn new(length_seconds: f64, overlap_fraction: f64) -> Result<Self> {
        let spec = WindowSpec {
            length_seconds,
            overlap_fraction,
        };
        // Sizes depend on the sampling rate; validate what we can here.
        if !(length_seconds.is_finite() && length_seconds > 0.0) {
            return Err(Error::Config(format!(
                "window length must be positive, got {length_seconds}"
            )));
        }
        if !(0.0..1.0).contains(&overlap_fraction) {
            return Err(Error::Config(format!(
                "overlap fraction must be in [0, 1), got {overlap_fraction}"
            )));
        }
        Ok(spec)
    }

    /// Window length in samples at the given rate.
    pub fn window_samples(&self, sampling_rate_hz: f64) -> Result<usize> {
        let w = (self.length_seconds * sampling_rate_hz).round() as usize;
        if w < 2 {
            return Err(Error::Config(format!(
                "window of {}s at {sampling_rate_hz} Hz is {w} samples, need at least 2",
                self.length_seconds
            )));
        }
        Ok(w)
    }

    /// Hop between window starts in samples.
    pub fn hop_samples(&self, sampling_rate_hz: f64) -> Result<usize> {
        let w = self.window_samples(sampling_rate_hz)?;
        let hop = (w as f64 * (1.0 - self.overlap_fraction)).round() as usize;
        Ok(hop.max(1))
    }
}

/// Overlapped windows of one channel, with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSignal {
    pub participant_id: u32,
    pub trial_id: u32,
    pub channel_name: String,
    /// `windows[w]` is the w-th window's samples.
    pub windows: Vec<Vec<f64>>,
    /// Start sample of each window within the trial.
    pub start_samples: Vec<usize>,
}

/// Slice a recording into overlapped windows, one [`WindowedSignal`] per
/// channel. Trailing samples that do not fill a window are discarded.
pub fn window(recording: &Recording, spec: &WindowSpec) -> Result<Vec<WindowedSignal>> {
    let w = spec.window_samples(recording.sampling_rate_hz)?;
    let hop = spec.hop_samples(recording.sampling_rate_hz)?;
    let n = recording.num_samples();
    if n < w {
        return Err(Error::Dataset {
            participant: recording.participant_id,
            trial: recording.trial_id,
            detail: format!("trial has {n} samples, shorter than one {w}-sample window"),
        });
    }
    let count = (n - w) / hop + 1;
    let starts: Vec<usize> = (0..count).map(|i| i * hop).collect();

    let mut out = Vec::with_capacity(recording.num_channels());
    for (channel, name) in recording.samples.iter().zip(&recording.channel_names) {
        let windows: Vec<Vec<f64>> = starts
            .iter()
            .map(|&s| channel[s..s + w].to_vec())
            .collect();
        out.push(WindowedSignal {
            participant_id: recording.participant_id,
            trial_id: recording.trial_id,
            channel_name: name.clone(),
            windows,
            start_samples: starts.clone(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Recording;

    fn rec(channels: Vec<Vec<f64>>, rate: f64) -> Recording {
        let names = (0..channels.len()).map(|i| format!("F{i}")).collect();
        Recording::new(1, 0, channels, rate, names).unwrap()
    }

    #[test]
    fn remove_mean_centers_each_channel() {
        let r = rec(vec![vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]], 128.0);
        let out = remove_mean(&r).unwrap();
        assert_eq!(out.samples[0], vec![-1.0, 0.0, 1.0]);
        assert_eq!(out.samples[1], vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn remove_mean_is_idempotent() {
        let r = rec(vec![vec![0.3, -1.7, 2.4, 9.1]], 128.0);
        let once = remove_mean(&r).unwrap();
        let twice = remove_mean(&once).unwrap();
        for (a, b) in once.samples[0].iter().zip(&twice.samples[0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let mean: f64 = once.samples[0].iter().sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn common_average_reference_zeroes_channel_sum() {
        let r = rec(vec![vec![1.0, 2.0], vec![3.0, 6.0]], 128.0);
        let out = remove_common_average(&r).unwrap();
        for i in 0..2 {
            let col_sum: f64 = out.samples.iter().map(|ch| ch[i]).sum();
            assert!(col_sum.abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_maps_extremes_to_unit_interval() {
        let r1 = rec(vec![vec![-1.0, 0.0, 1.0]], 128.0);
        let out = normalize_unit_interval(&r1);
        assert_eq!(out.samples[0], vec![0.0, 0.5, 1.0]);
        let r2 = rec(vec![vec![0.0, 10.0]], 128.0);
        assert_eq!(normalize_unit_interval(&r2).samples[0], vec![0.0, 1.0]);
    }

    #[test]
    fn normalize_constant_channel_is_zeros() {
        let r = rec(vec![vec![5.0, 5.0, 5.0]], 128.0);
        assert_eq!(normalize_unit_interval(&r).samples[0], vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn window_counts_follow_floor_formula() {
        // 60 s at 128 Hz: 29 four-second windows, 59 two-second windows.
        let n = 7680;
        let r = rec(vec![(0..n).map(|i| i as f64).collect()], 128.0);
        let w4 = window(&r, &WindowSpec::new(4.0, 0.5).unwrap()).unwrap();
        assert_eq!(w4[0].windows.len(), 29);
        assert_eq!(w4[0].windows[0].len(), 512);
        let w2 = window(&r, &WindowSpec::new(2.0, 0.5).unwrap()).unwrap();
        assert_eq!(w2[0].windows.len(), 59);
        assert_eq!(w2[0].windows[0].len(), 256);
    }

    #[test]
    fn window_exact_fit_gives_one_window() {
        let r = rec(vec![(0..512).map(|i| i as f64).collect()], 128.0);
        let w = window(&r, &WindowSpec::default()).unwrap();
        assert_eq!(w[0].windows.len(), 1);
        assert_eq!(w[0].start_samples, vec![0]);
    }

    #[test]
    fn window_too_short_errors() {
        let r = rec(vec![vec![0.0; 100]], 128.0);
        assert!(window(&r, &WindowSpec::default()).is_err());
    }

    #[test]
    fn window_starts_advance_by_hop() {
        let r = rec(vec![(0..2000).map(|i| i as f64 * 0.5).collect()], 128.0);
        let spec = WindowSpec::new(4.0, 0.5).unwrap();
        let w = window(&r, &spec).unwrap();
        let hop = spec.hop_samples(128.0).unwrap();
        for pair in w[0].start_samples.windows(2) {
            assert_eq!(pair[1] - pair[0], hop);
        }
        // every window fully inside the trial
        let last = *w[0].start_samples.last().unwrap();
        assert!(last + 512 <= 2000);
        // window content matches the source slice
        assert_eq!(w[0].windows[1][0], r.samples[0][hop]);
    }
}
