//! Output files. Every file carries a [`Provenance`]: CSV files as `#`
//! comment lines before the header, JSON files as a `provenance` field and
//! JSON-lines traces as their first line.

use std::fs;
use std::path::{Path, PathBuf};

use robustaug_core::metrics::MetricsReport;
use robustaug_core::search::SearchTrace;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version tag of every output format.
pub const SCHEMA: &str = "robustaug/1";

pub const CSV_HEADER: [&str; 7] = ["run_id", "scenario", "dataset", "ap", "accuracy", "map", "map_gain_percent"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub schema: String,
    pub config_hash: String,
    pub master_seed: u64,
}

impl Provenance {
    pub fn new(config_hash: String, master_seed: u64) -> Self {
        Self { schema: SCHEMA.into(), config_hash, master_seed }
    }
}

/// One line of a metrics CSV. Per-dataset rows carry AP and accuracy; the
/// per-scenario summary row (dataset `mean`) carries mean accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run_id: String,
    pub scenario: String,
    pub dataset: String,
    pub ap: Option<f64>,
    pub accuracy: Option<f64>,
    pub map: f64,
    pub map_gain_percent: Option<f64>,
}

impl MetricsRow {
    /// One row per dataset (in name order) and a closing `mean` row.
    pub fn from_report(run_id: &str, report: &MetricsReport, gain_percent: Option<f64>) -> Vec<MetricsRow> {
        let mut rows: Vec<MetricsRow> = report
            .per_dataset_ap
            .iter()
            .map(|(name, &ap)| MetricsRow {
                run_id: run_id.into(),
                scenario: report.scenario_name.clone(),
                dataset: name.clone(),
                ap: Some(ap),
                accuracy: report.accuracy_per_dataset.get(name).copied(),
                map: report.map,
                map_gain_percent: gain_percent,
            })
            .collect();
        rows.push(MetricsRow {
            run_id: run_id.into(),
            scenario: report.scenario_name.clone(),
            dataset: "mean".into(),
            ap: None,
            accuracy: Some(report.mean_accuracy()),
            map: report.map,
            map_gain_percent: gain_percent,
        });
        rows
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Metrics CSV with the provenance as leading comments plus any extra
/// comment lines.
pub fn metrics_csv(prov: &Provenance, extra_comments: &[String], rows: &[MetricsRow]) -> Result<Vec<u8>> {
    let mut comments = vec![
        format!("schema: {}", prov.schema),
        format!("config_hash: {}", prov.config_hash),
        format!("master_seed: {}", prov.master_seed),
    ];
    comments.extend(extra_comments.iter().cloned());
    csv_with_comments(&comments, rows)
}

/// Metrics CSV after the given `#` comment lines.
pub fn csv_with_comments(comments: &[String], rows: &[MetricsRow]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for c in comments {
        out.extend(format!("# {c}\n").bytes());
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    out.extend(w.into_inner().map_err(|e| Error::Schema(e.to_string()))?);
    Ok(out)
}

/// Schema tag and rows of a metrics CSV produced by [`metrics_csv`].
pub fn read_metrics_csv(path: &Path) -> Result<(Option<String>, Vec<MetricsRow>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let schema =
        text.lines().take_while(|l| l.starts_with('#')).find_map(|l| l.strip_prefix("# schema: ").map(str::to_owned));
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::Schema(format!("{}: unexpected columns {header:?}", path.display())));
    }
    let rows = r.deserialize().collect::<std::result::Result<Vec<MetricsRow>, _>>()?;
    Ok((schema, rows))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

#[derive(Serialize)]
struct TraceHeader<'a> {
    provenance: &'a Provenance,
    strategy: &'a str,
    pool: &'a [String],
}

/// One JSON object per line: a header, then one record per evaluation.
pub fn trace_jsonl(prov: &Provenance, pool: &[String], trace: &SearchTrace) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec(&TraceHeader { provenance: prov, strategy: &trace.strategy, pool })?;
    out.push(b'\n');
    for r in &trace.records {
        out.extend(serde_json::to_vec(r)?);
        out.push(b'\n');
    }
    Ok(out)
}

/// Every `*.csv` below `dir` not named `skip_name`, sorted by path.
pub fn find_csv_files(dir: &Path, skip_name: &str) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let path = entry.map_err(|e| Error::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") && !path.ends_with(skip_name) {
                found.push(path);
            }
        }
    }
    found.sort();
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn report() -> MetricsReport {
        MetricsReport {
            scenario_name: "blur".into(),
            per_dataset_ap: BTreeMap::from([("b".into(), 0.5), ("a".into(), 1.0)]),
            accuracy_per_dataset: BTreeMap::from([("b".into(), 0.25), ("a".into(), 0.75)]),
            map: 0.75,
        }
    }

    #[test]
    fn rows_follow_dataset_names() {
        let rows = MetricsRow::from_report("r", &report(), Some(12.5));
        let names: Vec<&str> = rows.iter().map(|r| r.dataset.as_str()).collect();
        assert_eq!(names, ["a", "b", "mean"]);
        assert_eq!(rows[2].accuracy, Some(0.5));
        assert_eq!(rows[2].ap, None);
        assert!(rows.iter().all(|r| r.map == 0.75 && r.map_gain_percent == Some(12.5)));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let prov = Provenance::new("f".repeat(64), 9);
        let rows = MetricsRow::from_report("r", &report(), None);
        let bytes = metrics_csv(&prov, &["note: x".into()], &rows).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("# schema: robustaug/1\n# config_hash: ffff"));
        assert!(
            text.contains("# master_seed: 9\n# note: x\nrun_id,scenario,dataset,ap,accuracy,map,map_gain_percent\n")
        );
        assert!(text.contains("r,blur,mean,,0.5,0.75,\n"));
        write_bytes(&path, &bytes).unwrap();
        let (schema, back) = read_metrics_csv(&path).unwrap();
        assert_eq!(schema.as_deref(), Some(SCHEMA));
        assert_eq!(back, rows);
    }

    #[test]
    fn wrong_columns_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_bytes(&path, b"# schema: robustaug/1\nrun_id,scenario\nx,y\n").unwrap();
        assert_eq!(read_metrics_csv(&path).unwrap_err().category(), "schema");
    }
}
