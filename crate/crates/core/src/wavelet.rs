//! Multi-level discrete wavelet transform with the 8-tap Daubechies-4
//! filter pair, and the mapping from detail levels to physiological
//! frequency bands.
//!
//! Conventions, fixed so coefficient vectors are stable across releases:
//!
//! * analysis is convolution with the decomposition filters followed by
//!   downsampling at even phase; one level of an N-sample signal yields
//!   `ceil((N + L - 1) / 2)` coefficients per branch (L = 8);
//! * boundaries use half-point symmetric extension (the first and last
//!   samples are duplicated under reflection);
//! * `idwt_level` inverts a level exactly (to rounding) for any signal at
//!   least one filter long.
//!
//! Energy bookkeeping under this scheme: the analysis atoms are an
//! orthonormal family, so coefficient energy equals the energy of the
//! extended signal's projection onto their span. The identity
//! `sum(coeffs^2) == sum(signal^2)` is exact when the signal is zero
//! within a filter length of each boundary (the atoms reaching past the
//! ends then carry nothing); for general signals the reflected tails add
//! boundary terms and only reconstruction is exact.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::WindowedSignal;

/// Daubechies-4 scaling coefficients in natural order (sum = sqrt(2)).
const DB4_SCALING: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

/// Analysis filter pair: `highpass[k] = (-1)^k * lowpass[L-1-k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilterPair {
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
}

impl WaveletFilterPair {
    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }
}

/// The standard db4 analysis pair (four vanishing moments, eight taps).
pub fn db4_filters() -> WaveletFilterPair {
    let lowpass: Vec<f64> = DB4_SCALING.iter().rev().copied().collect();
    let l = lowpass.len();
    let highpass: Vec<f64> = (0..l)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * lowpass[l - 1 - k]
        })
        .collect();
    WaveletFilterPair { lowpass, highpass }
}

/// Index into a signal under half-point symmetric extension.
fn sym_index(mut i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Number of coefficients one analysis level produces per branch.
pub fn coeff_len(signal_len: usize, filter_len: usize) -> usize {
    (signal_len + filter_len - 1).div_ceil(2)
}

/// One analysis level: convolve with both filters over the symmetric
/// extension and keep the even-indexed samples of the valid segment.
pub fn dwt_level(signal: &[f64], filters: &WaveletFilterPair) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = signal.len();
    let l = filters.len();
    if n < l {
        return Err(Error::Invalid(format!(
            "signal of {n} samples is shorter than the {l}-tap filter"
        )));
    }
    let out_len = coeff_len(n, l);
    let mut approx = vec![0.0; out_len];
    let mut detail = vec![0.0; out_len];
    for j in 0..out_len {
        let base = 2 * j as isize;
        let mut a = 0.0;
        let mut d = 0.0;
        for k in 0..l {
            let x = signal[sym_index(base - k as isize, n)];
            a += filters.lowpass[k] * x;
            d += filters.highpass[k] * x;
        }
        approx[j] = a;
        detail[j] = d;
    }
    Ok((approx, detail))
}

/// Invert one analysis level, recovering `original_len` samples exactly.
pub fn idwt_level(
    approx: &[f64],
    detail: &[f64],
    filters: &WaveletFilterPair,
    original_len: usize,
) -> Result<Vec<f64>> {
    if approx.len() != detail.len() {
        return Err(Error::Invalid(format!(
            "approx has {} coefficients, detail {}",
            approx.len(),
            detail.len()
        )));
    }
    let l = filters.len();
    if coeff_len(original_len, l) != approx.len() {
        return Err(Error::Invalid(format!(
            "{} coefficients cannot come from a {original_len}-sample signal",
            approx.len()
        )));
    }
    let mut out = vec![0.0; original_len];
    for j in 0..approx.len() {
        let base = 2 * j as isize;
        for k in 0..l {
            let i = base - k as isize;
            if i >= 0 && (i as usize) < original_len {
                out[i as usize] += approx[j] * filters.lowpass[k] + detail[j] * filters.highpass[k];
            }
        }
    }
    Ok(out)
}

/// Full multi-level analysis product.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    /// `details[j-1]` holds level-j detail coefficients.
    pub details: Vec<Vec<f64>>,
    /// Approximation left below the deepest level.
    pub approx: Vec<f64>,
    /// Input length at each level, needed to invert.
    pub input_lens: Vec<usize>,
}

/// Deepest level free of pure boundary coefficients.
pub fn max_decomposition_levels(signal_len: usize, filter_len: usize) -> usize {
    if filter_len < 2 || signal_len < filter_len {
        return 0;
    }
    (signal_len as f64 / (filter_len - 1) as f64).log2().floor() as usize
}

pub fn wavedec(
    signal: &[f64],
    filters: &WaveletFilterPair,
    levels: usize,
) -> Result<WaveletDecomposition> {
    if levels == 0 {
        return Err(Error::Invalid("need at least one decomposition level".into()));
    }
    let mut details = Vec::with_capacity(levels);
    let mut input_lens = Vec::with_capacity(levels);
    let mut current = signal.to_vec();
    for _ in 0..levels {
        input_lens.push(current.len());
        let (a, d) = dwt_level(&current, filters)?;
        details.push(d);
        current = a;
    }
    Ok(WaveletDecomposition {
        details,
        approx: current,
        input_lens,
    })
}

pub fn waverec(dec: &WaveletDecomposition, filters: &WaveletFilterPair) -> Result<Vec<f64>> {
    let mut current = dec.approx.clone();
    for level in (0..dec.details.len()).rev() {
        current = idwt_level(&current, &dec.details[level], filters, dec.input_lens[level])?;
    }
    Ok(current)
}

/// Physiological band names. Variant order is ascending frequency, which
/// is also the canonical feature-column order.
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
pub enum BandName {
    /// 4-8 Hz
    Theta,
    /// 8-16 Hz
    Alpha,
    /// 16-32 Hz
    Beta,
    /// 32-64 Hz
    Gamma,
    /// everything above 64 Hz
    Noise,
}

impl BandName {
    pub const NAMED: [BandName; 4] = [
        BandName::Theta,
        BandName::Alpha,
        BandName::Beta,
        BandName::Gamma,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BandName::Theta => "theta",
            BandName::Alpha => "alpha",
            BandName::Beta => "beta",
            BandName::Gamma => "gamma",
            BandName::Noise => "noise",
        }
    }

    /// Nominal range in Hz; the upper edge of noise is the Nyquist rate.
    pub fn nominal_range_hz(&self) -> (f64, f64) {
        match self {
            BandName::Theta => (4.0, 8.0),
            BandName::Alpha => (8.0, 16.0),
            BandName::Beta => (16.0, 32.0),
            BandName::Gamma => (32.0, 64.0),
            BandName::Noise => (64.0, f64::INFINITY),
        }
    }
}

impl fmt::Display for BandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BandName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "theta" => Ok(BandName::Theta),
            "alpha" => Ok(BandName::Alpha),
            "beta" => Ok(BandName::Beta),
            "gamma" => Ok(BandName::Gamma),
            "noise" => Ok(BandName::Noise),
            other => Err(Error::Config(format!("unknown band {other:?}"))),
        }
    }
}

/// Which detail level carries each band at a given sampling rate.
///
/// Level j spans `(fs / 2^(j+1), fs / 2^j]`, so the named bands line up
/// only when `fs` is a power of two of at least 16 Hz.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandLevelMap {
    levels: BTreeMap<BandName, Vec<usize>>,
    /// Decomposition depth needed to reach theta.
    pub decomposition_levels: usize,
    pub sampling_rate_hz_log2: u32,
}

impl BandLevelMap {
    /// Levels carrying a band; named bands have exactly one, noise may
    /// have several or none. Absent bands return None.
    pub fn levels_of(&self, band: BandName) -> Option<&[usize]> {
        self.levels.get(&band).map(|v| v.as_slice())
    }

    pub fn named_level(&self, band: BandName) -> Option<usize> {
        match band {
            BandName::Noise => None,
            _ => self.levels.get(&band).and_then(|v| v.first().copied()),
        }
    }

    /// Named bands present at this rate, ascending frequency.
    pub fn present_named_bands(&self) -> Vec<BandName> {
        BandName::NAMED
            .iter()
            .copied()
            .filter(|b| self.levels.contains_key(b))
            .collect()
    }
}

pub fn band_level_map(sampling_rate_hz: f64) -> Result<BandLevelMap> {
    if !(sampling_rate_hz.is_finite() && sampling_rate_hz >= 16.0) {
        return Err(Error::BandAlignment {
            rate_hz: sampling_rate_hz,
            detail: "rate must be at least 16 Hz so theta is resolvable".into(),
        });
    }
    let m = sampling_rate_hz.log2().round();
    if (sampling_rate_hz - 2f64.powf(m)).abs() > 1e-9 * sampling_rate_hz {
        return Err(Error::BandAlignment {
            rate_hz: sampling_rate_hz,
            detail: "rate must be a power of two for dyadic band edges to hit 4/8/16/32/64 Hz"
                .into(),
        });
    }
    let m = m as i64;

    let mut levels: BTreeMap<BandName, Vec<usize>> = BTreeMap::new();
    // Band with upper edge `fs / 2^j = edge` sits at level j = m - log2(edge).
    for (band, edge_log2) in [
        (BandName::Theta, 3),
        (BandName::Alpha, 4),
        (BandName::Beta, 5),
        (BandName::Gamma, 6),
    ] {
        let j = m - edge_log2;
        if j >= 1 {
            levels.insert(band, vec![j as usize]);
        }
    }
    let noise: Vec<usize> = (1..=(m - 7).max(0)).map(|j| j as usize).collect();
    if !noise.is_empty() {
        levels.insert(BandName::Noise, noise);
    }
    let depth = (m - 3) as usize;
    Ok(BandLevelMap {
        levels,
        decomposition_levels: depth,
        sampling_rate_hz_log2: m as u32,
    })
}

/// Per-band detail vectors of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBands {
    /// Detail coefficients of the named bands present at this rate.
    pub details: BTreeMap<BandName, Vec<f64>>,
    /// Detail levels above gamma. Retained, but excluded from features by
    /// default.
    pub noise_details: Vec<Vec<f64>>,
    /// Approximation below theta, likewise excluded by default.
    pub residual_approx: Vec<f64>,
}

/// One trial's band decomposition: `coeffs[channel][window]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandDecomposition {
    pub participant_id: u32,
    pub trial_id: u32,
    pub sampling_rate_hz: f64,
    pub channel_names: Vec<String>,
    pub window_starts: Vec<usize>,
    pub coeffs: Vec<Vec<WindowBands>>,
}

impl BandDecomposition {
    pub fn num_windows(&self) -> usize {
        self.window_starts.len()
    }
}

/// Decompose one trial's windowed channels down to the theta level.
pub fn decompose(windowed: &[WindowedSignal], sampling_rate_hz: f64) -> Result<BandDecomposition> {
    let map = band_level_map(sampling_rate_hz)?;
    let filters = db4_filters();
    let first = windowed
        .first()
        .ok_or_else(|| Error::Invalid("no channels to decompose".into()))?;

    let depth = map.decomposition_levels;
    let min_len = (1usize << depth) * filters.len();
    if let Some(w) = first.windows.first() {
        if w.len() < min_len {
            return Err(Error::Invalid(format!(
                "{}-sample windows are too short for {depth} levels (need at least {min_len})",
                w.len()
            )));
        }
    } else {
        return Err(Error::Invalid("windowed signal holds no windows".into()));
    }

    let mut coeffs = Vec::with_capacity(windowed.len());
    let mut channel_names = Vec::with_capacity(windowed.len());
    for ws in windowed {
        if ws.participant_id != first.participant_id
            || ws.trial_id != first.trial_id
            || ws.start_samples != first.start_samples
        {
            return Err(Error::Invalid(
                "all channels passed to decompose must come from the same windowed trial".into(),
            ));
        }
        let mut per_window = Vec::with_capacity(ws.windows.len());
        for w in &ws.windows {
            let dec = wavedec(w, &filters, depth)?;
            let mut details = BTreeMap::new();
            for band in BandName::NAMED {
                if let Some(level) = map.named_level(band) {
                    details.insert(band, dec.details[level - 1].clone());
                }
            }
            let noise_details = map
                .levels_of(BandName::Noise)
                .map(|levels| {
                    levels
                        .iter()
                        .map(|&j| dec.details[j - 1].clone())
                        .collect()
                })
                .unwrap_or_default();
            per_window.push(WindowBands {
                details,
                noise_details,
                residual_approx: dec.approx.clone(),
            });
        }
        coeffs.push(per_window);
        channel_names.push(ws.channel_name.clone());
    }

    Ok(BandDecomposition {
        participant_id: first.participant_id,
        trial_id: first.trial_id,
        sampling_rate_hz,
        channel_names,
        window_starts: first.start_samples.clone(),
        coeffs,
    })
}

/// Write the filter taps and a reference level-1 decomposition of a fixed
/// ramp signal as delimited text, for checking other implementations
/// against this one.
pub fn write_golden_vectors(path: &Path) -> Result<()> {
    let filters = db4_filters();
    let signal: Vec<f64> = (0..32).map(|i| ((i * 7) % 13) as f64 / 13.0 - 0.5).collect();
    let (approx, detail) = dwt_level(&signal, &filters)?;
    let fmt_row = |values: &[f64]| {
        values
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut text = String::new();
    text.push_str("# db4 analysis filters and a level-1 reference decomposition\n");
    text.push_str(&format!("lowpass,{}\n", fmt_row(&filters.lowpass)));
    text.push_str(&format!("highpass,{}\n", fmt_row(&filters.highpass)));
    text.push_str(&format!("signal,{}\n", fmt_row(&signal)));
    text.push_str(&format!("approx,{}\n", fmt_row(&approx)));
    text.push_str(&format!("detail,{}\n", fmt_row(&detail)));
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Check a golden-vector file against the current implementation.
pub fn verify_golden_vectors(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for line in text.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let name = parts.next().unwrap_or_default().to_string();
        let values: std::result::Result<Vec<f64>, _> =
            parts.map(|p| p.trim().parse::<f64>()).collect();
        let values = values.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            detail: format!("row {name}: {e}"),
        })?;
        rows.insert(name, values);
    }
    let signal = rows
        .get("signal")
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            detail: "missing signal row".into(),
        })?
        .clone();
    let filters = db4_filters();
    let (approx, detail) = dwt_level(&signal, &filters)?;
    for (name, expected) in [
        ("lowpass", &filters.lowpass),
        ("highpass", &filters.highpass),
        ("approx", &approx),
        ("detail", &detail),
    ] {
        let got = rows.get(name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            detail: format!("missing {name} row"),
        })?;
        if got.len() != expected.len()
            || got
                .iter()
                .zip(expected)
                .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::Invalid(format!(
                "golden vector {name} does not match this implementation"
            )));
        }
    }
    Ok(())
}
