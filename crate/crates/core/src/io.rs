//! Plain-text file formats: value lists, long-format site series, simulated
//! datasets, training histories and report tables.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::MseReport;
use crate::gev::GevParams;
use crate::nn::TrainingRecord;
use crate::summaries::{QuantileSummary, StandardizationInfo, PERCENTILE_COUNT};
use crate::training::{Dataset, EpochRecord, TrainingHistory};

/// One value per line. `#` lines are comments and blank lines are ignored.
pub fn write_values(path: &Path, header: &[String], values: &[f64]) -> Result<()> {
    let mut out = String::new();
    for h in header {
        out.push_str("# ");
        out.push_str(h);
        out.push('\n');
    }
    for v in values {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut values = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| {
            Error::Parse(format!("{}:{}: not a number: {t:?}", path.display(), i + 1))
        })?;
        if !v.is_finite() {
            return Err(Error::Parse(format!(
                "{}:{}: non-finite value",
                path.display(),
                i + 1
            )));
        }
        values.push(v);
    }
    Ok(values)
}

pub fn write_table<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub site_id: String,
    pub year: i64,
    pub value: f64,
}

/// Long-format `site_id,year,value` records with unique `(site_id, year)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    records: Vec<SeriesRecord>,
}

impl SeriesTable {
    pub fn new(records: Vec<SeriesRecord>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for r in &records {
            if !r.value.is_finite() {
                return Err(Error::Parse(format!(
                    "site {} year {}: non-finite value",
                    r.site_id, r.year
                )));
            }
            if !seen.insert((r.site_id.as_str(), r.year)) {
                return Err(Error::Parse(format!(
                    "site {} year {} appears twice",
                    r.site_id, r.year
                )));
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[SeriesRecord] {
        &self.records
    }

    /// Values per site, sites in lexical order and values in year order.
    pub fn by_site(&self) -> BTreeMap<String, Vec<f64>> {
        let mut sites: BTreeMap<String, Vec<(i64, f64)>> = BTreeMap::new();
        for r in &self.records {
            sites
                .entry(r.site_id.clone())
                .or_default()
                .push((r.year, r.value));
        }
        sites
            .into_iter()
            .map(|(k, mut v)| {
                v.sort_by_key(|&(y, _)| y);
                (k, v.into_iter().map(|(_, x)| x).collect())
            })
            .collect()
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::new(read_table(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_table(path, &self.records)
    }
}

fn dataset_header() -> Vec<String> {
    let pset = crate::summaries::PercentileSet::standard();
    let mut h = vec!["split".to_string(), "n".to_string()];
    h.extend(pset.probs().iter().map(|p| format!("p{p}")));
    for s in [
        "min",
        "max",
        "mean",
        "iqr",
        "mu_std",
        "sigma_std",
        "xi_std",
        "mu",
        "sigma",
        "xi",
    ] {
        h.push(s.to_string());
    }
    h
}

/// One row per record: split, sample size, the 11 standardized percentiles,
/// standardized extremes, standardization constants, the standardized target
/// and the raw parameters.
pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(dataset_header())?;
    let splits = [
        ("train", &ds.train, &ds.train_params),
        ("valid", &ds.valid, &ds.valid_params),
    ];
    for (split, records, params) in splits {
        for (r, p) in records.iter().zip(params.iter()) {
            let s = &r.summary;
            let mut row = vec![split.to_string(), s.n.to_string()];
            let nums = s.percentiles.iter().copied().chain([
                s.sample_min,
                s.sample_max,
                s.info.mean(),
                s.info.iqr(),
                r.target_std.mu(),
                r.target_std.sigma(),
                r.target_std.xi(),
                p.mu(),
                p.sigma(),
                p.xi(),
            ]);
            row.extend(nums.map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?
        .iter()
        .ne(dataset_header().iter().map(String::as_str))
    {
        return Err(Error::Parse(format!(
            "{}: unexpected dataset header",
            path.display()
        )));
    }
    let mut ds = Dataset {
        train: vec![],
        valid: vec![],
        train_params: vec![],
        valid_params: vec![],
        redraws: 0,
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad =
            |what: &str| Error::Parse(format!("{}: row {}: {what}", path.display(), line + 2));
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(&format!("column {}", i + 1)))
        };
        let n: usize = rec
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("sample size"))?;
        let mut percentiles = [0.0; PERCENTILE_COUNT];
        for (k, p) in percentiles.iter_mut().enumerate() {
            *p = num(2 + k)?;
        }
        let base = 2 + PERCENTILE_COUNT;
        let v: Vec<f64> = (base..base + 10).map(num).collect::<Result<_>>()?;
        let summary = QuantileSummary {
            percentiles,
            sample_min: v[0],
            sample_max: v[1],
            info: StandardizationInfo::new(v[2], v[3])?,
            n,
        };
        let target_std = GevParams::new(v[4], v[5], v[6])?;
        let theta = GevParams::new(v[7], v[8], v[9])?;
        let record = TrainingRecord {
            summary,
            target_std,
        };
        match rec.get(0) {
            Some("train") => {
                ds.train.push(record);
                ds.train_params.push(theta);
            }
            Some("valid") => {
                ds.valid.push(record);
                ds.valid_params.push(theta);
            }
            _ => return Err(bad("split must be train or valid")),
        }
    }
    Ok(ds)
}

#[derive(Serialize, Deserialize)]
struct HistoryRow {
    epoch: usize,
    train_loss: f64,
    valid_loss: f64,
    valid_mse: f64,
    lr: f64,
    best: bool,
}

pub fn write_history(path: &Path, h: &TrainingHistory) -> Result<()> {
    let rows: Vec<HistoryRow> = h
        .epochs
        .iter()
        .map(|e| HistoryRow {
            epoch: e.epoch,
            train_loss: e.train_loss,
            valid_loss: e.valid_loss,
            valid_mse: e.valid_mse,
            lr: e.lr,
            best: e.epoch == h.best_epoch,
        })
        .collect();
    write_table(path, &rows)
}

/// Reads a history table. Whether training stopped early is not stored, so it
/// is inferred from the best epoch lying before the last one.
pub fn read_history(path: &Path) -> Result<TrainingHistory> {
    let rows: Vec<HistoryRow> = read_table(path)?;
    let best_epoch = rows
        .iter()
        .find(|r| r.best)
        .map(|r| r.epoch)
        .ok_or_else(|| Error::Parse(format!("{}: no best epoch marked", path.display())))?;
    let stopped_early = rows.last().is_some_and(|r| r.epoch > best_epoch);
    let epochs = rows
        .into_iter()
        .map(|r| EpochRecord {
            epoch: r.epoch,
            train_loss: r.train_loss,
            valid_loss: r.valid_loss,
            valid_mse: r.valid_mse,
            lr: r.lr,
        })
        .collect();
    Ok(TrainingHistory {
        epochs,
        best_epoch,
        stopped_early,
    })
}

/// One `fig3_mse_n{size}.csv` per sample size in `report`.
pub fn write_mse_tables(dir: &Path, report: &MseReport) -> Result<Vec<PathBuf>> {
    let mut sizes: Vec<usize> = report.cells.iter().map(|c| c.size).collect();
    sizes.dedup();
    let mut paths = Vec::new();
    for size in sizes {
        let path = dir.join(format!("fig3_mse_n{size}.csv"));
        let cells: Vec<_> = report.cells.iter().filter(|c| c.size == size).collect();
        write_table(&path, &cells)?;
        paths.push(path);
    }
    Ok(paths)
}
