//! Dataset plumbing: CSV ingestion, z-score normalization fitted on the
//! training split only, segmentation into fixed-length windows, seeded 6:2:2
//! splitting, and a manifest that pins everything needed to reproduce a
//! prepared dataset bit-exactly.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::bptt::Trajectory;
use crate::error::{Error, Result};
use crate::numerics::Vector;

/// An ordered multivariate series: exogenous inputs `u` and targets `y` per
/// step, with optional timestamps.
#[derive(Debug, Clone)]
pub struct RawSeries {
    pub timestamps: Option<Vec<String>>,
    pub u: Vec<Vector>,
    pub y: Vec<Vector>,
}

impl RawSeries {
    pub fn new(timestamps: Option<Vec<String>>, u: Vec<Vector>, y: Vec<Vector>) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::Data(format!(
                "input/target length mismatch: {} vs {}",
                u.len(),
                y.len()
            )));
        }
        if u.is_empty() {
            return Err(Error::Data("series is empty".into()));
        }
        if let Some(ts) = &timestamps {
            if ts.len() != u.len() {
                return Err(Error::Data("timestamp column length mismatch".into()));
            }
            for i in 1..ts.len() {
                if ts[i] <= ts[i - 1] {
                    return Err(Error::Data(format!(
                        "timestamps not strictly increasing at row {}: {:?} after {:?}",
                        i + 1,
                        ts[i],
                        ts[i - 1]
                    )));
                }
            }
        }
        let (n_u, n_y) = (u[0].dim(), y[0].dim());
        if u.iter().any(|v| v.dim() != n_u) || y.iter().any(|v| v.dim() != n_y) {
            return Err(Error::Data("ragged rows: channel arity varies".into()));
        }
        Ok(RawSeries { timestamps, u, y })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn n_u(&self) -> usize {
        self.u[0].dim()
    }

    pub fn n_y(&self) -> usize {
        self.y[0].dim()
    }
}

/// Parses a CSV file with a header row into a [`RawSeries`], mapping named
/// columns to roles. All data cells in the selected columns must be numeric;
/// failures name the 1-based data row.
pub fn load_csv(
    path: &Path,
    timestamp_column: Option<&str>,
    input_columns: &[String],
    target_columns: &[String],
) -> Result<RawSeries> {
    if input_columns.is_empty() || target_columns.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one input column and one target column".into(),
        ));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Data(format!("cannot open {}: {e}", path.display())),
        _ => Error::Data(format!("cannot read {}: {e}", path.display())),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("bad header row: {e}")))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("column {name:?} not found in {}", path.display())))
    };
    let ts_idx = timestamp_column.map(col).transpose()?;
    let u_idx: Vec<usize> = input_columns.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let y_idx: Vec<usize> = target_columns.iter().map(|c| col(c)).collect::<Result<_>>()?;

    let mut timestamps = ts_idx.map(|_| Vec::new());
    let mut u = Vec::new();
    let mut y = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let row = row_no + 1;
        let record = record.map_err(|e| Error::CsvRow {
            row,
            message: e.to_string(),
        })?;
        let cell = |idx: usize| -> Result<f64> {
            let raw = record.get(idx).ok_or_else(|| Error::CsvRow {
                row,
                message: format!("missing field {idx}"),
            })?;
            raw.trim().parse::<f64>().map_err(|_| Error::CsvRow {
                row,
                message: format!("non-numeric cell {raw:?} in column {:?}", &headers[idx]),
            })
        };
        if let (Some(ts), Some(idx)) = (timestamps.as_mut(), ts_idx) {
            ts.push(record.get(idx).unwrap_or_default().to_string());
        }
        u.push(Vector::from(
            u_idx.iter().map(|&i| cell(i)).collect::<Result<Vec<_>>>()?,
        ));
        y.push(Vector::from(
            y_idx.iter().map(|&i| cell(i)).collect::<Result<Vec<_>>>()?,
        ));
    }
    if u.is_empty() {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }
    RawSeries::new(timestamps, u, y)
}

/// Writes a series back out as CSV with the given column names, the inverse
/// of [`load_csv`]. Values are printed with full round-trip precision.
pub fn save_csv(
    series: &RawSeries,
    path: &Path,
    timestamp_header: &str,
    input_headers: &[String],
    target_headers: &[String],
) -> Result<()> {
    if input_headers.len() != series.n_u() || target_headers.len() != series.n_y() {
        return Err(Error::InvalidArgument(format!(
            "need {} input and {} target column names, got {} and {}",
            series.n_u(),
            series.n_y(),
            input_headers.len(),
            target_headers.len()
        )));
    }
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::Data(format!("cannot create {}: {e}", path.display())))?;
    let mut header: Vec<String> = Vec::new();
    if series.timestamps.is_some() {
        header.push(timestamp_header.to_string());
    }
    header.extend(input_headers.iter().cloned());
    header.extend(target_headers.iter().cloned());
    writer
        .write_record(&header)
        .map_err(|e| Error::Data(e.to_string()))?;
    for t in 0..series.len() {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        if let Some(ts) = &series.timestamps {
            row.push(ts[t].clone());
        }
        row.extend(series.u[t].data().iter().map(|v| format!("{v:?}")));
        row.extend(series.y[t].data().iter().map(|v| format!("{v:?}")));
        writer
            .write_record(&row)
            .map_err(|e| Error::Data(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Per-channel z-score parameters, fitted on training rows only.
/// Standard deviations use the population convention (denominator `N`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub u_mean: Vec<f64>,
    pub u_std: Vec<f64>,
    pub y_mean: Vec<f64>,
    pub y_std: Vec<f64>,
}

fn channel_stats(
    values: impl Fn(usize, usize) -> f64,
    rows: &[usize],
    channels: usize,
    role: &str,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rows.len() as f64;
    let mut means = Vec::with_capacity(channels);
    let mut stds = Vec::with_capacity(channels);
    for c in 0..channels {
        let mut sum = 0.0;
        for &r in rows {
            sum += values(r, c);
        }
        let mean = sum / n;
        let mut var = 0.0;
        for &r in rows {
            let d = values(r, c) - mean;
            var += d * d;
        }
        let std = (var / n).sqrt();
        if std <= 1e-12 {
            return Err(Error::Data(format!(
                "{role} channel {c} is constant over the training rows; cannot normalize"
            )));
        }
        means.push(mean);
        stds.push(std);
    }
    Ok((means, stds))
}

/// Fits z-score stats over the given row indices (the training rows).
pub fn fit_normalize(series: &RawSeries, rows: &[usize]) -> Result<NormalizationStats> {
    if rows.is_empty() {
        return Err(Error::Data("no training rows to fit normalization on".into()));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= series.len()) {
        return Err(Error::Data(format!(
            "training row {bad} out of range for series of length {}",
            series.len()
        )));
    }
    let (u_mean, u_std) = channel_stats(|r, c| series.u[r].get(c), rows, series.n_u(), "input")?;
    let (y_mean, y_std) = channel_stats(|r, c| series.y[r].get(c), rows, series.n_y(), "target")?;
    Ok(NormalizationStats {
        u_mean,
        u_std,
        y_mean,
        y_std,
    })
}

impl NormalizationStats {
    pub fn normalize_u(&self, v: &Vector) -> Vector {
        Vector::from(
            v.data()
                .iter()
                .enumerate()
                .map(|(c, x)| (x - self.u_mean[c]) / self.u_std[c])
                .collect::<Vec<_>>(),
        )
    }

    pub fn normalize_y(&self, v: &Vector) -> Vector {
        Vector::from(
            v.data()
                .iter()
                .enumerate()
                .map(|(c, x)| (x - self.y_mean[c]) / self.y_std[c])
                .collect::<Vec<_>>(),
        )
    }

    pub fn denormalize_y(&self, v: &Vector) -> Vector {
        Vector::from(
            v.data()
                .iter()
                .enumerate()
                .map(|(c, x)| x * self.y_std[c] + self.y_mean[c])
                .collect::<Vec<_>>(),
        )
    }
}

/// Z-scores every row of the series.
pub fn apply_normalize(series: &RawSeries, stats: &NormalizationStats) -> Result<RawSeries> {
    if stats.u_mean.len() != series.n_u() || stats.y_mean.len() != series.n_y() {
        return Err(Error::Data("normalization stats arity mismatch".into()));
    }
    Ok(RawSeries {
        timestamps: series.timestamps.clone(),
        u: series.u.iter().map(|v| stats.normalize_u(v)).collect(),
        y: series.y.iter().map(|v| stats.normalize_y(v)).collect(),
    })
}

/// Fixed-length windows into a series: window `i` covers rows
/// `starts[i] .. starts[i] + T_p + T_f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSet {
    pub starts: Vec<usize>,
    pub t_p: usize,
    pub t_f: usize,
    pub stride: usize,
}

impl SegmentSet {
    pub fn window(&self) -> usize {
        self.t_p + self.t_f
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }
}

/// Cuts windows of length `T_p + T_f` starting at `0, stride, 2·stride, ...`;
/// a trailing remainder shorter than one window is dropped. `stride = None`
/// means disjoint partition (`stride = T_p + T_f`).
pub fn segment(
    series_len: usize,
    t_p: usize,
    t_f: usize,
    stride: Option<usize>,
) -> Result<SegmentSet> {
    if t_p == 0 || t_f == 0 {
        return Err(Error::InvalidArgument(
            "segmentation needs T_p >= 1 and T_f >= 1".into(),
        ));
    }
    let window = t_p + t_f;
    let stride = stride.unwrap_or(window);
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    if series_len < window {
        return Err(Error::Data(format!(
            "series of length {series_len} is shorter than one window of {window}"
        )));
    }
    let starts = (0..=series_len - window).step_by(stride).collect();
    Ok(SegmentSet {
        starts,
        t_p,
        t_f,
        stride,
    })
}

/// Disjoint assignment of segment indices (into `SegmentSet::starts`) to the
/// three splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles segments under the seed, then assigns the first `⌊r_train·M⌋` to
/// train, the next `⌊r_val·M⌋` to val, and the remainder to test.
pub fn split_shuffle(set: &SegmentSet, ratios: [f64; 3], seed: u64) -> Result<Split> {
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || ratios.iter().any(|r| *r <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratios must be positive and sum to 1, got {ratios:?}"
        )));
    }
    let m = set.len();
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = (ratios[0] * m as f64).floor() as usize;
    let n_val = (ratios[1] * m as f64).floor() as usize;
    if n_train == 0 || n_val == 0 || n_train + n_val >= m {
        return Err(Error::Data(format!(
            "split of {m} segments at {ratios:?} leaves an empty split"
        )));
    }
    Ok(Split {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    })
}

/// Materializes trajectories for the given segment indices from a normalized
/// series. Innovation slots start at zero.
pub fn trajectories(
    series: &RawSeries,
    set: &SegmentSet,
    indices: &[usize],
) -> Result<Vec<Trajectory>> {
    let window = set.window();
    indices
        .iter()
        .map(|&i| {
            let start = *set.starts.get(i).ok_or_else(|| {
                Error::Data(format!("segment index {i} out of range ({} segments)", set.len()))
            })?;
            let u = series.u[start..start + window].to_vec();
            let y = series.y[start..start + window].to_vec();
            Trajectory::new(u, y, set.t_p, set.t_f)
        })
        .collect()
}

/// Everything needed to rebuild a prepared dataset bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub source: String,
    pub timestamp_column: Option<String>,
    pub input_columns: Vec<String>,
    pub target_columns: Vec<String>,
    pub series_len: usize,
    pub t_p: usize,
    pub t_f: usize,
    pub stride: usize,
    pub ratios: [f64; 3],
    pub seed: u64,
    pub stats: NormalizationStats,
    pub segments: SegmentSet,
    pub split: Split,
}

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

impl DatasetManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let manifest: DatasetManifest = serde_json::from_str(&text)?;
        if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "manifest schema version {} unsupported (expected {})",
                manifest.schema_version, MANIFEST_SCHEMA_VERSION
            )));
        }
        Ok(manifest)
    }
}

/// A fully prepared dataset: normalized trajectories per split plus the
/// manifest that reproduces them.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub manifest: DatasetManifest,
    pub train: Vec<Trajectory>,
    pub val: Vec<Trajectory>,
    pub test: Vec<Trajectory>,
}

/// Full preparation pipeline: segment the raw series, shuffle-split the
/// segments, fit normalization on the training segments' rows only, z-score,
/// and materialize trajectories.
pub fn prepare(
    series: &RawSeries,
    source: &str,
    timestamp_column: Option<String>,
    input_columns: Vec<String>,
    target_columns: Vec<String>,
    t_p: usize,
    t_f: usize,
    stride: Option<usize>,
    ratios: [f64; 3],
    seed: u64,
) -> Result<PreparedData> {
    let segments = segment(series.len(), t_p, t_f, stride)?;
    let split = split_shuffle(&segments, ratios, seed)?;

    // Training rows = union of the training segments' windows (deduplicated,
    // so overlapping strides do not double-count).
    let mut in_train = vec![false; series.len()];
    for &i in &split.train {
        let start = segments.starts[i];
        for r in start..start + segments.window() {
            in_train[r] = true;
        }
    }
    let train_rows: Vec<usize> = (0..series.len()).filter(|&r| in_train[r]).collect();
    let stats = fit_normalize(series, &train_rows)?;
    let normalized = apply_normalize(series, &stats)?;

    let manifest = DatasetManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        source: source.to_string(),
        timestamp_column,
        input_columns,
        target_columns,
        series_len: series.len(),
        t_p,
        t_f,
        stride: segments.stride,
        ratios,
        seed,
        stats,
        segments: segments.clone(),
        split: split.clone(),
    };
    Ok(PreparedData {
        train: trajectories(&normalized, &segments, &split.train)?,
        val: trajectories(&normalized, &segments, &split.val)?,
        test: trajectories(&normalized, &segments, &split.test)?,
        manifest,
    })
}

/// Rebuilds the prepared splits from a saved manifest and the raw series it
/// describes, using the *recorded* stats and split (no re-fitting), so a
/// reload reproduces the original preparation bit-exactly.
pub fn materialize(series: &RawSeries, manifest: &DatasetManifest) -> Result<PreparedData> {
    if series.len() != manifest.series_len {
        return Err(Error::Data(format!(
            "series has {} rows but the manifest was built from {}",
            series.len(),
            manifest.series_len
        )));
    }
    let normalized = apply_normalize(series, &manifest.stats)?;
    Ok(PreparedData {
        train: trajectories(&normalized, &manifest.segments, &manifest.split.train)?,
        val: trajectories(&normalized, &manifest.segments, &manifest.split.val)?,
        test: trajectories(&normalized, &manifest.segments, &manifest.split.test)?,
        manifest: manifest.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn ramp_series(len: usize) -> RawSeries {
        let u = (0..len)
            .map(|t| Vector::from_slice(&[t as f64, (t as f64 * 0.5).sin()]))
            .collect();
        let y = (0..len)
            .map(|t| Vector::from_slice(&[(t as f64 * 0.1).cos() + 0.01 * t as f64]))
            .collect();
        RawSeries::new(None, u, y).unwrap()
    }

    #[test]
    fn load_three_row_file() {
        let f = write_csv("date,a,b\n2020-01-01,1.0,2.0\n2020-01-02,3.0,4.0\n2020-01-03,5.0,6.0\n");
        let s = load_csv(f.path(), Some("date"), &["a".into()], &["b".into()]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.u[1].data(), &[3.0]);
        assert_eq!(s.y[2].data(), &[6.0]);
    }

    #[test]
    fn missing_column_names_the_column() {
        let f = write_csv("date,a\n2020-01-01,1.0\n");
        let err = load_csv(f.path(), None, &["a".into()], &["oil_temp".into()]).unwrap_err();
        assert!(err.to_string().contains("oil_temp"), "{err}");
    }

    #[test]
    fn non_numeric_cell_reports_row_number() {
        let f = write_csv("a,b\n1.0,2.0\n1.0,oops\n3.0,4.0\n");
        let err = load_csv(f.path(), None, &["a".into()], &["b".into()]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('2') && msg.contains("oops"), "{msg}");
    }

    #[test]
    fn non_monotone_timestamps_rejected() {
        let f = write_csv("date,a,b\n2020-01-02,1.0,2.0\n2020-01-01,3.0,4.0\n");
        assert!(load_csv(f.path(), Some("date"), &["a".into()], &["b".into()]).is_err());
    }

    #[test]
    fn population_zscore_example() {
        // Target values 5,5,7,7: mean 6, population std 1, z-scores
        // (-1,-1,1,1). The input channel just needs to be non-constant.
        let u: Vec<Vector> = (0..4).map(|t| Vector::from_slice(&[t as f64])).collect();
        let y = [5.0, 5.0, 7.0, 7.0]
            .iter()
            .map(|v| Vector::from_slice(&[*v]))
            .collect();
        let series = RawSeries::new(None, u, y).unwrap();
        let stats = fit_normalize(&series, &[0, 1, 2, 3]).unwrap();
        assert_eq!(stats.y_mean, vec![6.0]);
        assert_eq!(stats.y_std, vec![1.0]);
        let norm = apply_normalize(&series, &stats).unwrap();
        let z: Vec<f64> = norm.y.iter().map(|v| v.get(0)).collect();
        assert_eq!(z, vec![-1.0, -1.0, 1.0, 1.0]);
    }

    #[test]
    fn normalize_round_trips() {
        let series = ramp_series(50);
        let stats = fit_normalize(&series, &(0..50).collect::<Vec<_>>()).unwrap();
        let norm = apply_normalize(&series, &stats).unwrap();
        for (orig, z) in series.y.iter().zip(&norm.y) {
            let back = stats.denormalize_y(z);
            assert!((back.get(0) - orig.get(0)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_channel_rejected() {
        let u = vec![Vector::from_slice(&[1.0]); 5];
        let y = (0..5).map(|t| Vector::from_slice(&[t as f64])).collect();
        let series = RawSeries::new(None, u, y).unwrap();
        let err = fit_normalize(&series, &[0, 1, 2, 3, 4]).unwrap_err();
        assert!(err.to_string().contains("constant"), "{err}");
    }

    #[test]
    fn segment_counts() {
        assert_eq!(segment(100, 24, 5, None).unwrap().len(), 3);
        assert_eq!(segment(29, 24, 5, Some(1)).unwrap().len(), 1);
        assert_eq!(segment(17_420, 24, 5, None).unwrap().len(), 600);
        assert!(segment(28, 24, 5, None).is_err());
    }

    #[test]
    fn sliding_windows() {
        let set = segment(10, 3, 2, Some(1)).unwrap();
        assert_eq!(set.starts, (0..=5).collect::<Vec<_>>());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let set = segment(290, 24, 5, None).unwrap(); // 10 segments
        let split = split_shuffle(&set, [0.6, 0.2, 0.2], 7).unwrap();
        assert_eq!(
            (split.train.len(), split.val.len(), split.test.len()),
            (6, 2, 2)
        );
        assert_eq!(split, split_shuffle(&set, [0.6, 0.2, 0.2], 7).unwrap());
        assert_ne!(split, split_shuffle(&set, [0.6, 0.2, 0.2], 8).unwrap());

        let set600 = segment(17_420, 24, 5, None).unwrap();
        let split600 = split_shuffle(&set600, [0.6, 0.2, 0.2], 7).unwrap();
        assert_eq!(
            (
                split600.train.len(),
                split600.val.len(),
                split600.test.len()
            ),
            (360, 120, 120)
        );
    }

    #[test]
    fn splits_are_disjoint_and_exhaustive() {
        let set = segment(1000, 24, 5, None).unwrap();
        let split = split_shuffle(&set, [0.6, 0.2, 0.2], 3).unwrap();
        let mut all: Vec<usize> = split
            .train
            .iter()
            .chain(&split.val)
            .chain(&split.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..set.len()).collect::<Vec<_>>());
    }

    #[test]
    fn bad_ratios_and_empty_splits_rejected() {
        let set = segment(290, 24, 5, None).unwrap();
        assert!(split_shuffle(&set, [0.5, 0.2, 0.2], 1).is_err());
        let tiny = segment(58, 24, 5, None).unwrap(); // 2 segments
        assert!(split_shuffle(&tiny, [0.6, 0.2, 0.2], 1).is_err());
    }

    #[test]
    fn no_leakage_from_test_rows() {
        let series = ramp_series(290);
        let prepared = prepare(
            &series,
            "mem",
            None,
            vec!["a".into(), "b".into()],
            vec!["y".into()],
            24,
            5,
            None,
            [0.6, 0.2, 0.2],
            11,
        )
        .unwrap();

        // Perturb every row belonging to a test segment and re-fit.
        let mut perturbed = series.clone();
        for &i in &prepared.manifest.split.test {
            let start = prepared.manifest.segments.starts[i];
            for r in start..start + 29 {
                perturbed.y[r] = perturbed.y[r].map(|v| v + 100.0);
                perturbed.u[r] = perturbed.u[r].map(|v| v - 100.0);
            }
        }
        let again = prepare(
            &perturbed,
            "mem",
            None,
            vec!["a".into(), "b".into()],
            vec!["y".into()],
            24,
            5,
            None,
            [0.6, 0.2, 0.2],
            11,
        )
        .unwrap();
        assert_eq!(prepared.manifest.stats, again.manifest.stats);
        // And bit-exactly so.
        assert_eq!(
            serde_json::to_string(&prepared.manifest.stats).unwrap(),
            serde_json::to_string(&again.manifest.stats).unwrap()
        );
    }

    #[test]
    fn trajectories_reconstruct_raw_rows() {
        let series = ramp_series(290);
        let prepared = prepare(
            &series,
            "mem",
            None,
            vec!["a".into(), "b".into()],
            vec!["y".into()],
            24,
            5,
            None,
            [0.6, 0.2, 0.2],
            4,
        )
        .unwrap();
        let stats = &prepared.manifest.stats;
        for (slot, traj) in prepared.test.iter().enumerate() {
            let seg_idx = prepared.manifest.split.test[slot];
            let start = prepared.manifest.segments.starts[seg_idx];
            for t in 0..29 {
                let back = stats.denormalize_y(&traj.y[t]);
                assert!((back.get(0) - series.y[start + t].get(0)).abs() < 1e-12);
            }
            // Innovation slots start at zero.
            assert!(traj
                .e_stored
                .iter()
                .all(|e| e.data().iter().all(|v| *v == 0.0)));
        }
    }

    #[test]
    fn manifest_round_trips_through_disk() {
        let series = ramp_series(290);
        let prepared = prepare(
            &series,
            "mem",
            None,
            vec!["a".into(), "b".into()],
            vec!["y".into()],
            24,
            5,
            None,
            [0.6, 0.2, 0.2],
            11,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        prepared.manifest.save(&path).unwrap();
        let loaded = DatasetManifest::load(&path).unwrap();
        assert_eq!(prepared.manifest, loaded);
    }
}
