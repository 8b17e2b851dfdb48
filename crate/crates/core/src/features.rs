//! Wavelet entropy and energy features, and the window-by-feature matrices
//! the classifiers consume.
//!
//! Both features are computed on raw detail coefficients exactly as
//! written: entropy is `-sum(c^2 * ln(c^2))` with `0 * ln 0 = 0` (no
//! normalization to a probability distribution, so values may be
//! negative), energy is `sum(c^2)`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::dataset::{LabelValue, RatingRecord};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::wavelet::{BandDecomposition, BandName};

/// Wavelet entropy of one detail vector.
pub fn entropy(coeffs: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for &c in coeffs {
        if !c.is_finite() {
            return Err(Error::Invalid(format!("non-finite coefficient {c}")));
        }
        let sq = c * c;
        if sq > 0.0 {
            sum -= sq * sq.ln();
        }
    }
    Ok(sum)
}

/// Wavelet energy of one detail vector.
pub fn energy(coeffs: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for &c in coeffs {
        if !c.is_finite() {
            return Err(Error::Invalid(format!("non-finite coefficient {c}")));
        }
        sum += c * c;
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureKind {
    Entropy,
    Energy,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 2] = [FeatureKind::Entropy, FeatureKind::Energy];

    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureKind::Entropy => "entropy",
            FeatureKind::Energy => "energy",
        }
    }
}

/// One feature column: a (channel, band, kind) triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDescriptor {
    pub channel: String,
    pub band: BandName,
    pub kind: FeatureKind,
}

impl fmt::Display for ColumnDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.channel, self.band, self.kind.as_str())
    }
}

impl std::str::FromStr for ColumnDescriptor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('.').collect();
        if parts.len() != 3 {
            return Err(Error::Invalid(format!("bad column name {s:?}")));
        }
        let band: BandName = parts[1].parse()?;
        let kind = match parts[2] {
            "entropy" => FeatureKind::Entropy,
            "energy" => FeatureKind::Energy,
            other => return Err(Error::Invalid(format!("bad feature kind {other:?}"))),
        };
        Ok(ColumnDescriptor {
            channel: parts[0].to_string(),
            band,
            kind,
        })
    }
}

/// Provenance and labels of one feature row (one window).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowMeta {
    pub participant_id: u32,
    pub trial_id: u32,
    pub window_index: usize,
    pub valence: LabelValue,
    pub arousal: LabelValue,
}

/// Which experiment axis the matrix is assembled for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssembleMode {
    /// Two channels, every named band present at the rate.
    ChannelPair(String, String),
    /// Every channel, one band.
    PerBand(BandName),
}

impl fmt::Display for AssembleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssembleMode::ChannelPair(a, b) => write!(f, "{a}-{b}"),
            AssembleMode::PerBand(band) => write!(f, "{band}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Matrix,
    pub columns: Vec<ColumnDescriptor>,
    pub rows: Vec<RowMeta>,
}

impl FeatureMatrix {
    pub fn labels(&self, dimension: crate::dataset::Dimension) -> Vec<LabelValue> {
        self.rows
            .iter()
            .map(|r| match dimension {
                crate::dataset::Dimension::Valence => r.valence,
                crate::dataset::Dimension::Arousal => r.arousal,
            })
            .collect()
    }
}

/// Work out the column layout a mode implies for a given trial shape.
pub fn resolve_columns(
    channel_names: &[String],
    present_bands: &[BandName],
    mode: &AssembleMode,
) -> Result<Vec<ColumnDescriptor>> {
    let mut columns = Vec::new();
    match mode {
        AssembleMode::ChannelPair(a, b) => {
            for ch in [a, b] {
                if !channel_names.iter().any(|c| c == ch) {
                    return Err(Error::UnknownChannel(ch.clone()));
                }
            }
            for ch in [a, b] {
                for &band in present_bands {
                    for kind in FeatureKind::ALL {
                        columns.push(ColumnDescriptor {
                            channel: ch.clone(),
                            band,
                            kind,
                        });
                    }
                }
            }
        }
        AssembleMode::PerBand(band) => {
            if !present_bands.contains(band) {
                return Err(Error::Invalid(format!(
                    "band {band} is not present at this sampling rate"
                )));
            }
            for ch in channel_names {
                for kind in FeatureKind::ALL {
                    columns.push(ColumnDescriptor {
                        channel: ch.clone(),
                        band: *band,
                        kind,
                    });
                }
            }
        }
    }
    Ok(columns)
}

/// Feature rows of a single decomposed trial, in window order.
pub fn rows_for_trial(
    decomp: &BandDecomposition,
    rating: &RatingRecord,
    columns: &[ColumnDescriptor],
) -> Result<(Vec<Vec<f64>>, Vec<RowMeta>)> {
    if decomp.participant_id != rating.participant_id || decomp.trial_id != rating.trial_id {
        return Err(Error::Invalid(format!(
            "decomposition ({}, {}) paired with rating ({}, {})",
            decomp.participant_id, decomp.trial_id, rating.participant_id, rating.trial_id
        )));
    }
    let valence = rating.label(crate::dataset::Dimension::Valence)?;
    let arousal = rating.label(crate::dataset::Dimension::Arousal)?;

    // channel index per column, resolved once
    let channel_idx: Vec<usize> = columns
        .iter()
        .map(|col| {
            decomp
                .channel_names
                .iter()
                .position(|c| *c == col.channel)
                .ok_or_else(|| Error::UnknownChannel(col.channel.clone()))
        })
        .collect::<Result<_>>()?;

    let mut values = Vec::with_capacity(decomp.num_windows());
    let mut meta = Vec::with_capacity(decomp.num_windows());
    for w in 0..decomp.num_windows() {
        let mut row = Vec::with_capacity(columns.len());
        for (col, &ci) in columns.iter().zip(&channel_idx) {
            let bands = &decomp.coeffs[ci][w];
            let coeffs = bands.details.get(&col.band).ok_or_else(|| {
                Error::Invalid(format!("band {} absent from decomposition", col.band))
            })?;
            let v = match col.kind {
                FeatureKind::Entropy => entropy(coeffs)?,
                FeatureKind::Energy => energy(coeffs)?,
            };
            row.push(v);
        }
        values.push(row);
        meta.push(RowMeta {
            participant_id: decomp.participant_id,
            trial_id: decomp.trial_id,
            window_index: w,
            valence,
            arousal,
        });
    }
    Ok((values, meta))
}

/// Assemble a feature matrix from decomposed trials. `decomps[i]` must be
/// the trial `ratings[i]` rates.
pub fn assemble(
    decomps: &[BandDecomposition],
    ratings: &[RatingRecord],
    mode: &AssembleMode,
) -> Result<FeatureMatrix> {
    if decomps.is_empty() || decomps.iter().all(|d| d.num_windows() == 0) {
        return Err(Error::Invalid("no windows to assemble features from".into()));
    }
    if decomps.len() != ratings.len() {
        return Err(Error::Invalid(format!(
            "{} decompositions paired with {} ratings",
            decomps.len(),
            ratings.len()
        )));
    }
    let first = &decomps[0];
    let present = crate::wavelet::band_level_map(first.sampling_rate_hz)?.present_named_bands();
    let columns = resolve_columns(&first.channel_names, &present, mode)?;

    let mut values = Vec::new();
    let mut rows = Vec::new();
    for (decomp, rating) in decomps.iter().zip(ratings) {
        if decomp.channel_names != first.channel_names {
            return Err(Error::Invalid(
                "all trials must share the same channel set".into(),
            ));
        }
        let (v, m) = rows_for_trial(decomp, rating, &columns)?;
        values.extend(v);
        rows.extend(m);
    }
    Ok(FeatureMatrix {
        values: Matrix::from_rows(&values)?,
        columns,
        rows,
    })
}

const META_COLUMNS: [&str; 5] = ["participant", "trial", "window", "valence", "arousal"];

/// Write a feature matrix as delimited text: five metadata columns, then
/// one column per descriptor, floats in shortest round-trip form.
pub fn write_feature_table(path: &Path, fm: &FeatureMatrix) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let mut header: Vec<String> = META_COLUMNS.iter().map(|s| s.to_string()).collect();
    for col in &fm.columns {
        let name = col.to_string();
        if name.contains(',') {
            return Err(Error::Invalid(format!("column name {name:?} not writable")));
        }
        header.push(name);
    }
    writer.write_record(&header).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    for (meta, row) in fm.rows.iter().zip(fm.values.iter_rows()) {
        let mut record: Vec<String> = vec![
            meta.participant_id.to_string(),
            meta.trial_id.to_string(),
            meta.window_index.to_string(),
            meta.valence.to_string(),
            meta.arousal.to_string(),
        ];
        record.extend(row.iter().map(|v| format!("{v:?}")));
        writer.write_record(&record).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read a table written by [`write_feature_table`].
pub fn read_feature_table(path: &Path) -> Result<FeatureMatrix> {
    let parse_err = |detail: String| Error::Parse {
        path: path.to_path_buf(),
        detail,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    let headers = reader
        .headers()
        .map_err(|e| parse_err(e.to_string()))?
        .clone();
    let header_vec: Vec<&str> = headers.iter().collect();
    if header_vec.len() < META_COLUMNS.len() || header_vec[..5] != META_COLUMNS {
        return Err(parse_err(format!(
            "feature table must start with {META_COLUMNS:?}"
        )));
    }
    let mut columns = Vec::new();
    for name in &header_vec[5..] {
        columns.push(name.parse::<ColumnDescriptor>()?);
    }

    let parse_label = |s: &str| match s {
        "high" => Ok(LabelValue::High),
        "low" => Ok(LabelValue::Low),
        other => Err(parse_err(format!("bad label {other:?}"))),
    };
    let mut values = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        if record.len() != 5 + columns.len() {
            return Err(parse_err(format!(
                "row has {} fields, expected {}",
                record.len(),
                5 + columns.len()
            )));
        }
        rows.push(RowMeta {
            participant_id: record[0].parse().map_err(|_| parse_err("bad participant".into()))?,
            trial_id: record[1].parse().map_err(|_| parse_err("bad trial".into()))?,
            window_index: record[2].parse().map_err(|_| parse_err("bad window".into()))?,
            valence: parse_label(&record[3])?,
            arousal: parse_label(&record[4])?,
        });
        let row: std::result::Result<Vec<f64>, _> =
            (5..record.len()).map(|i| record[i].parse::<f64>()).collect();
        values.push(row.map_err(|e| parse_err(e.to_string()))?);
    }
    Ok(FeatureMatrix {
        values: Matrix::from_rows(&values)?,
        columns,
        rows,
    })
}

/// Group row indices by participant, preserving first-seen order.
pub fn rows_by_participant(rows: &[RowMeta]) -> BTreeMap<u32, Vec<usize>> {
    let mut map: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        map.entry(r.participant_id).or_default().push(i);
    }
    map
}
