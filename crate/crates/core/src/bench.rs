//! Dataset manifests, batch scoring, leaderboards and correlation reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{psnr_capped, ssim, EXTERNAL_METRICS};
use crate::error::{Error, Result};
use crate::eval::Correlations;
use crate::features::{extract_all, FeatureParams, FeatureVector, FEATURE_NAMES, NUM_FEATURES};
use crate::forest::{RandomForestModel, TrainRow};
use crate::imgcore::{load_png, to_luma};

pub const MANIFEST_HEADER: [&str; 6] = [
    "crop_id",
    "scene_id",
    "blurred_path",
    "deblurred_path",
    "method",
    "subjective",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestRow {
    pub crop_id: String,
    pub scene_id: String,
    pub blurred_path: PathBuf,
    pub deblurred_path: PathBuf,
    pub method: String,
    pub subjective: Option<f64>,
    /// 1-based line in the source file (header is line 1), 0 if built in memory.
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    rows: Vec<ManifestRow>,
}

fn invalid(row: usize, message: impl Into<String>) -> Error {
    Error::Validation {
        row,
        message: message.into(),
    }
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    for (i, want) in expected.iter().enumerate() {
        match found.get(i) {
            Some(got) if got == *want => {}
            Some(got) => {
                return Err(invalid(
                    1,
                    format!("column {}: expected '{want}', found '{got}'", i + 1),
                ))
            }
            None => return Err(invalid(1, format!("missing column '{want}'"))),
        }
    }
    if found.len() > expected.len() {
        return Err(invalid(
            1,
            format!("unexpected extra column '{}'", &found[expected.len()]),
        ));
    }
    Ok(())
}

fn parse_optional_score(field: &str, line: usize, column: &str) -> Result<Option<f64>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(invalid(line, format!("{column}: '{field}' is not a finite number"))),
    }
}

impl DatasetManifest {
    /// Checks `(crop_id, method)` uniqueness and that there is at least one row.
    pub fn new(rows: Vec<ManifestRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid(1, "manifest has no rows"));
        }
        let mut seen = BTreeMap::new();
        for (i, r) in rows.iter().enumerate() {
            let line = if r.line > 0 { r.line } else { i + 2 };
            if let Some(first) = seen.insert((r.crop_id.as_str(), r.method.as_str()), line) {
                return Err(invalid(
                    line,
                    format!(
                        "duplicate (crop_id, method) = ({}, {}), first seen on row {first}",
                        r.crop_id, r.method
                    ),
                ));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[ManifestRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `crop_id -> scene_id`, erroring if a crop is listed under two scenes.
    pub fn scene_of_crop(&self) -> Result<BTreeMap<String, String>> {
        let mut map = BTreeMap::new();
        for r in &self.rows {
            if let Some(prev) = map.insert(r.crop_id.clone(), r.scene_id.clone()) {
                if prev != r.scene_id {
                    return Err(invalid(
                        r.line,
                        format!("crop '{}' listed under scenes '{prev}' and '{}'", r.crop_id, r.scene_id),
                    ));
                }
            }
        }
        Ok(map)
    }
}

/// Reads a manifest CSV. Relative image paths resolve against its directory.
pub fn ingest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header = reader.headers().map_err(|e| invalid(1, e.to_string()))?.clone();
    check_header(&header, &MANIFEST_HEADER)?;

    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            invalid(line, e.to_string())
        })?;
        let line = rec.position().map_or(rows.len() + 2, |p| p.line() as usize);
        if rec.len() != MANIFEST_HEADER.len() {
            return Err(invalid(
                line,
                format!("expected {} fields, found {}", MANIFEST_HEADER.len(), rec.len()),
            ));
        }
        for (i, name) in MANIFEST_HEADER[..5].iter().enumerate() {
            if rec[i].trim().is_empty() {
                return Err(invalid(line, format!("{name} is empty")));
            }
        }
        rows.push(ManifestRow {
            crop_id: rec[0].to_string(),
            scene_id: rec[1].to_string(),
            blurred_path: base.join(&rec[2]),
            deblurred_path: base.join(&rec[3]),
            method: rec[4].to_string(),
            subjective: parse_optional_score(&rec[5], line, "subjective")?,
            line,
        });
    }
    DatasetManifest::new(rows)
}

/// Scores for one manifest row.
#[derive(Clone, Debug, PartialEq)]
pub struct RowRecord {
    pub crop_id: String,
    pub scene_id: String,
    pub method: String,
    pub features: FeatureVector,
    /// Luma PSNR of deblurred vs blurred, capped at 100 dB for identical images.
    pub psnr: f64,
    /// Luma SSIM of deblurred vs blurred.
    pub ssim: f64,
    pub predicted: Option<f64>,
    pub subjective: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowFailure {
    pub crop_id: String,
    pub method: String,
    pub line: usize,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeaderboardRow {
    pub method: String,
    pub predicted: Option<f64>,
    pub subjective: Option<f64>,
    pub psnr: f64,
    pub ssim: f64,
    pub ssim_m: f64,
    pub n_crops: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchOutput {
    /// Sorted by `(crop_id, method)`.
    pub records: Vec<RowRecord>,
    /// Rows that could not be scored, in manifest order.
    pub failures: Vec<RowFailure>,
    pub leaderboard: Vec<LeaderboardRow>,
}

fn score_row(row: &ManifestRow, model: Option<&RandomForestModel>, params: &FeatureParams) -> Result<RowRecord> {
    let b = load_png(&row.blurred_path)?;
    let d = load_png(&row.deblurred_path)?;
    let features = extract_all(&b, &d, params)?;
    let (lb, ld) = (to_luma(&b), to_luma(&d));
    Ok(RowRecord {
        crop_id: row.crop_id.clone(),
        scene_id: row.scene_id.clone(),
        method: row.method.clone(),
        features,
        psnr: psnr_capped(&lb, &ld, 255.0)?,
        ssim: ssim(&lb, &ld)?,
        predicted: model.map(|m| m.predict(&features)),
        subjective: row.subjective,
    })
}

/// Scores every row. `jobs` bounds the worker count (`None` = all cores).
/// Row failures are collected and excluded from the leaderboard.
pub fn run_benchmark(
    manifest: &DatasetManifest,
    model: Option<&RandomForestModel>,
    params: &FeatureParams,
    jobs: Option<usize>,
) -> Result<BenchOutput> {
    if manifest.is_empty() {
        return Err(invalid(1, "manifest has no rows"));
    }
    params.validate()?;
    let work = || -> Vec<Result<RowRecord>> {
        manifest
            .rows()
            .par_iter()
            .map(|r| score_row(r, model, params))
            .collect()
    };
    let results = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (row, res) in manifest.rows().iter().zip(results) {
        match res {
            Ok(rec) => records.push(rec),
            Err(e) => {
                log::warn!("row {} ({}, {}): {e}", row.line, row.crop_id, row.method);
                failures.push(RowFailure {
                    crop_id: row.crop_id.clone(),
                    method: row.method.clone(),
                    line: row.line,
                    error: e.to_string(),
                });
            }
        }
    }
    records.sort_by(|a, b| (&a.crop_id, &a.method).cmp(&(&b.crop_id, &b.method)));
    let leaderboard = leaderboard(&records);
    Ok(BenchOutput {
        records,
        failures,
        leaderboard,
    })
}

fn mean_of(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in v {
        sum += x;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Per-method means, sorted by predicted score descending, then method name.
pub fn leaderboard(records: &[RowRecord]) -> Vec<LeaderboardRow> {
    let mut by_method: BTreeMap<&str, Vec<&RowRecord>> = BTreeMap::new();
    for r in records {
        by_method.entry(&r.method).or_default().push(r);
    }
    let mut rows: Vec<LeaderboardRow> = by_method
        .into_iter()
        .map(|(method, rs)| {
            let predicted = if rs.iter().all(|r| r.predicted.is_some()) {
                mean_of(rs.iter().filter_map(|r| r.predicted))
            } else {
                None
            };
            LeaderboardRow {
                method: method.to_string(),
                predicted,
                subjective: mean_of(rs.iter().filter_map(|r| r.subjective)),
                psnr: mean_of(rs.iter().map(|r| r.psnr)).unwrap_or(f64::NAN),
                ssim: mean_of(rs.iter().map(|r| r.ssim)).unwrap_or(f64::NAN),
                ssim_m: mean_of(rs.iter().map(|r| r.features.ssim_m)).unwrap_or(f64::NAN),
                n_crops: rs.len(),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        let key = |r: &LeaderboardRow| r.predicted.unwrap_or(f64::NEG_INFINITY);
        key(b).total_cmp(&key(a)).then_with(|| a.method.cmp(&b.method))
    });
    rows
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

pub fn leaderboard_markdown(rows: &[LeaderboardRow]) -> String {
    let mut s = String::from("| Method | Predicted | Subj. | PSNR | SSIM | SSIM-M |");
    for m in EXTERNAL_METRICS {
        let _ = write!(s, " {m} |");
    }
    s.push_str(" Crops |\n|---|---|---|---|---|---|");
    s.push_str(&"---|".repeat(EXTERNAL_METRICS.len()));
    s.push_str("---|\n");
    for r in rows {
        let _ = write!(
            s,
            "| {} | {} | {} | {:.4} | {:.4} | {:.4} |",
            r.method,
            fmt_opt(r.predicted),
            fmt_opt(r.subjective),
            r.psnr,
            r.ssim,
            r.ssim_m
        );
        for _ in EXTERNAL_METRICS {
            s.push_str(" external |");
        }
        let _ = writeln!(s, " {} |", r.n_crops);
    }
    s
}

/// One metric's agreement with the subjective scores.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricCorrelation {
    pub metric: String,
    pub pooled: Option<Correlations>,
    pub per_group: Option<Correlations>,
    pub groups_used: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub n: usize,
    pub metrics: Vec<MetricCorrelation>,
    pub external: Vec<String>,
}

/// Correlation of every metric column against `subjective`, pooled and as
/// the mean over scenes. Rows without a subjective score are ignored.
pub fn correlation_report(records: &[RowRecord]) -> Result<CorrelationReport> {
    let rated: Vec<&RowRecord> = records.iter().filter(|r| r.subjective.is_some()).collect();
    if rated.len() < 2 {
        return Err(Error::Data(format!(
            "need subjective scores on at least 2 rows, found {}",
            rated.len()
        )));
    }
    let truth: Vec<f64> = rated.iter().map(|r| r.subjective.unwrap()).collect();
    let groups: Vec<String> = rated.iter().map(|r| r.scene_id.clone()).collect();

    let mut columns: Vec<(String, Vec<f64>)> = (0..NUM_FEATURES)
        .map(|i| {
            (
                FEATURE_NAMES[i].to_string(),
                rated.iter().map(|r| r.features.to_array()[i]).collect(),
            )
        })
        .collect();
    columns.push(("psnr".into(), rated.iter().map(|r| r.psnr).collect()));
    columns.push(("ssim".into(), rated.iter().map(|r| r.ssim).collect()));
    if rated.iter().all(|r| r.predicted.is_some()) {
        columns.push(("predicted".into(), rated.iter().map(|r| r.predicted.unwrap()).collect()));
    }

    let metrics = columns
        .into_iter()
        .map(|(metric, xs)| {
            let pooled = Correlations::pooled(&xs, &truth);
            let grouped = Correlations::per_group_mean(&xs, &truth, &groups);
            let error = match (&pooled, &grouped) {
                (Err(e), _) | (_, Err(e)) => Some(e.to_string()),
                _ => None,
            };
            let (per_group, groups_used) = match grouped {
                Ok((c, k)) => (Some(c), k),
                Err(_) => (None, 0),
            };
            MetricCorrelation {
                metric,
                pooled: pooled.ok(),
                per_group,
                groups_used,
                error,
            }
        })
        .collect();
    Ok(CorrelationReport {
        n: rated.len(),
        metrics,
        external: EXTERNAL_METRICS.iter().map(|s| s.to_string()).collect(),
    })
}

pub fn correlation_markdown(report: &CorrelationReport) -> String {
    let mut s = String::from(
        "| Metric | PLCC | SRCC | KRCC | PLCC (per scene) | SRCC (per scene) | KRCC (per scene) |\n\
         |---|---|---|---|---|---|---|\n",
    );
    let cells = |c: &Option<Correlations>| match c {
        Some(c) => format!("{:.4} | {:.4} | {:.4}", c.plcc, c.srcc, c.krcc),
        None => "- | - | -".to_string(),
    };
    for m in &report.metrics {
        let _ = writeln!(s, "| {} | {} | {} |", m.metric, cells(&m.pooled), cells(&m.per_group));
    }
    for m in &report.external {
        let _ = writeln!(s, "| {m} | external | external | external | external | external | external |");
    }
    s
}

pub const FEATURES_HEADER: [&str; 12] = [
    "crop_id",
    "method",
    "laplacian",
    "fft",
    "gabor",
    "hough",
    "hog",
    "ssim_m",
    "sobel",
    "lbp",
    "reblur",
    "subjective",
];

/// One line of a features CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub crop_id: String,
    pub method: String,
    pub features: FeatureVector,
    pub subjective: Option<f64>,
}

impl From<&RowRecord> for FeatureRow {
    fn from(r: &RowRecord) -> Self {
        Self {
            crop_id: r.crop_id.clone(),
            method: r.method.clone(),
            features: r.features,
            subjective: r.subjective,
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_features_csv(path: impl AsRef<Path>, rows: &[FeatureRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(FEATURES_HEADER).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        let mut rec = vec![r.crop_id.clone(), r.method.clone()];
        rec.extend(r.features.to_array().iter().map(|&v| fmt_float(v)));
        rec.push(r.subjective.map(fmt_float).unwrap_or_default());
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_features_csv(path: impl AsRef<Path>) -> Result<Vec<FeatureRow>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header = reader.headers().map_err(|e| invalid(1, e.to_string()))?.clone();
    check_header(&header, &FEATURES_HEADER)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| invalid(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(out.len() + 2, |p| p.line() as usize);
        if rec.len() != FEATURES_HEADER.len() {
            return Err(invalid(
                line,
                format!("expected {} fields, found {}", FEATURES_HEADER.len(), rec.len()),
            ));
        }
        let mut values = [0.0; NUM_FEATURES];
        for (i, v) in values.iter_mut().enumerate() {
            let name = FEATURE_NAMES[i];
            *v = parse_optional_score(&rec[i + 2], line, name)?
                .ok_or_else(|| invalid(line, format!("{name} is empty")))?;
        }
        out.push(FeatureRow {
            crop_id: rec[0].to_string(),
            method: rec[1].to_string(),
            features: FeatureVector::from_array(values),
            subjective: parse_optional_score(&rec[11], line, "subjective")?,
        });
    }
    Ok(out)
}

/// Training rows from a features table; every row needs a subjective score.
pub fn training_rows(rows: &[FeatureRow]) -> Result<Vec<TrainRow>> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            r.subjective
                .map(|s| TrainRow::new(r.features, s))
                .ok_or_else(|| {
                    invalid(
                        i + 2,
                        format!("no subjective score for ({}, {})", r.crop_id, r.method),
                    )
                })
        })
        .collect()
}

/// Writes `features.csv`, `leaderboard.md` and `correlations.json` into `dir`.
pub fn write_outputs(dir: impl AsRef<Path>, out: &BenchOutput) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let rows: Vec<FeatureRow> = out.records.iter().map(FeatureRow::from).collect();
    write_features_csv(dir.join("features.csv"), &rows)?;

    let mut md = leaderboard_markdown(&out.leaderboard);
    let report = correlation_report(&out.records);
    let json = match &report {
        Ok(r) => {
            md.push('\n');
            md.push_str(&correlation_markdown(r));
            serde_json::to_value(r).expect("report serializes")
        }
        Err(e) => {
            log::warn!("correlations skipped: {e}");
            serde_json::json!({ "error": e.to_string() })
        }
    };
    let p = dir.join("leaderboard.md");
    fs::write(&p, md).map_err(|e| Error::io(&p, e))?;
    let p = dir.join("correlations.json");
    let mut text = serde_json::to_string_pretty(&json).expect("json serializes");
    text.push('\n');
    fs::write(&p, text).map_err(|e| Error::io(&p, e))
}

/// Distinct method names, sorted.
pub fn methods(records: &[RowRecord]) -> BTreeSet<&str> {
    records.iter().map(|r| r.method.as_str()).collect()
}
