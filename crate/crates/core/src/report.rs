//! Export of run results: frontier, annual summaries, NEW-supply plans,
//! cost reports, failures, year-detail curves and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dispatch::{write_ldc_csv, Tranche, RAMP_CLASSES};
use crate::economics::{frontier, frontier_cells, Components, FrontierEntry};
use crate::pipeline::{ScenarioOutcome, YearDetail};
use crate::Result;

pub const FRONTIER_FILE: &str = "frontier.csv";
pub const FRONTIER_CELLS_FILE: &str = "frontier_cells.csv";
pub const ANNUAL_FILE: &str = "annual.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const REPORTS_FILE: &str = "reports.json";
pub const NEW_SUPPLY_FILE: &str = "new_supply.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn frontier_header() -> Vec<String> {
    let mut h: Vec<String> = ["rank", "scenario", "key", "re_2030", "new_option", "npv_total"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(Components::NAMES.iter().map(|n| format!("npv_{n}")));
    h.extend(
        ["levelized_existing", "levelized_new", "new_capacity_mw", "curtailment_twh"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_frontier_csv<W: Write>(out: W, entries: &[FrontierEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(frontier_header())?;
    for (rank, e) in entries.iter().enumerate() {
        let mut row = vec![
            (rank + 1).to_string(),
            e.scenario.to_string(),
            e.key.clone(),
            e.re_2030.to_string(),
            e.new_option.as_str().to_string(),
            e.npv_total.to_string(),
        ];
        row.extend(e.npv_by_component.values().iter().map(|v| v.to_string()));
        row.extend([
            opt(e.levelized_existing),
            opt(e.levelized_new),
            e.new_capacity_mw.to_string(),
            e.curtailment_twh.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Field names of a flat serializable record, in declaration order.
fn field_names<T: Serialize + Default>() -> Vec<String> {
    match serde_json::to_value(T::default()) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

pub fn annual_header() -> Vec<String> {
    let mut h = vec!["scenario".to_string(), "key".to_string()];
    h.extend(field_names::<crate::pipeline::YearSummary>());
    h
}

pub fn write_annual_csv<W: Write>(out: W, outcomes: &[ScenarioOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(annual_header())?;
    for o in outcomes {
        let Ok(r) = &o.result else { continue };
        for y in &r.annual {
            let mut row = vec![o.index.to_string(), o.key.clone()];
            if let Value::Object(m) = serde_json::to_value(y)? {
                row.extend(m.values().map(cell));
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_failures_csv<W: Write>(out: W, outcomes: &[ScenarioOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "key", "error"])?;
    for o in outcomes {
        if let Err(e) = &o.result {
            w.write_record([o.index.to_string(), o.key.clone(), e.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn reports_json(outcomes: &[ScenarioOutcome]) -> Value {
    Value::Array(
        outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok())
            .map(|r| {
                json!({
                    "scenario": r.index,
                    "key": r.key,
                    "base_residual": r.base_residual,
                    "capacity": r.capacity,
                    "cost": r.cost,
                })
            })
            .collect(),
    )
}

fn new_supply_json(outcomes: &[ScenarioOutcome]) -> Value {
    Value::Array(
        outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok())
            .map(|r| json!({"scenario": r.index, "key": r.key, "plan": r.plan}))
            .collect(),
    )
}

/// Chronological mix with biodiesel as its own column; each row's supply
/// plus unmet equals demand.
pub fn write_mix_csv<W: Write>(out: W, d: &YearDetail) -> Result<()> {
    let dy = &d.dispatch;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["slot".to_string(), "demand_mw".into()];
    header.extend(Tranche::ALL.iter().map(|t| format!("{}_mw", t.as_str())));
    header.extend(["biodiesel_mw".into(), "unmet_mw".into(), "curtailment_mw".into()]);
    w.write_record(&header)?;
    for i in 0..dy.len() {
        let mut row = vec![i.to_string(), dy.demand[i].to_string()];
        row.extend(Tranche::ALL.iter().map(|&t| dy.supply[t][i].to_string()));
        row.push(d.biodiesel_mw[i].to_string());
        row.push(dy.unmet[i].to_string());
        row.push(dy.curtailment[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ramp_csv<W: Write>(out: W, d: &YearDetail) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class_pct_per_min", "slot_pairs"])?;
    for (class, n) in RAMP_CLASSES.iter().zip(d.ramp.counts()) {
        w.write_record([class.to_string(), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, v)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// Write every result file into `dir`, creating it if needed. Returns the
/// paths written. Contents depend only on `outcomes`.
pub fn write_outputs(dir: impl AsRef<Path>, outcomes: &[ScenarioOutcome]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut path = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };

    let entries = frontier(
        outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok())
            .map(|r| r.frontier_entry())
            .collect(),
    );
    write_frontier_csv(create(&path(FRONTIER_FILE))?, &entries)?;
    write_frontier_csv(create(&path(FRONTIER_CELLS_FILE))?, &frontier_cells(&entries))?;
    write_annual_csv(create(&path(ANNUAL_FILE))?, outcomes)?;
    write_failures_csv(create(&path(FAILURES_FILE))?, outcomes)?;
    write_json(&path(REPORTS_FILE), &reports_json(outcomes))?;
    write_json(&path(NEW_SUPPLY_FILE), &new_supply_json(outcomes))?;

    for d in outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok())
        .filter_map(|r| r.detail.as_ref())
    {
        let y = d.year;
        write_mix_csv(create(&path(&format!("mix_{y}.csv")))?, d)?;
        write_ldc_csv(create(&path(&format!("ldc_new_{y}.csv")))?, "unmet_mw", &d.unmet_before_new)?;
        write_ramp_csv(create(&path(&format!("ramp_{y}.csv")))?, d)?;
        if let Some(soc) = &d.soc {
            soc.write_csv(create(&path(&format!("soc_{y}.csv")))?)?;
        }
    }
    Ok(written)
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let mut f = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance of a run. Not part of the reproducible outputs: it carries
/// wall-clock time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub inputs: Vec<InputDigest>,
    pub synthetic_seed: Option<u64>,
    pub scenarios: usize,
    pub failures: usize,
    pub parallelism: usize,
    pub wall_seconds: f64,
}

impl RunManifest {
    pub fn digest_inputs(paths: &[PathBuf]) -> Result<Vec<InputDigest>> {
        paths
            .iter()
            .map(|p| {
                Ok(InputDigest {
                    path: p.clone(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect()
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let path = dir.as_ref().join(MANIFEST_FILE);
        write_json(&path, &serde_json::to_value(self)?)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{run_grid, BaseInputs, RunOptions};
    use crate::scenario::ParamGrid;

    #[test]
    fn sha256_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        std::fs::write(&p, b"abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn empty_run_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        write_outputs(dir.path(), &[]).unwrap();
        let frontier = std::fs::read_to_string(dir.path().join(FRONTIER_FILE)).unwrap();
        assert_eq!(frontier.trim_end(), frontier_header().join(","));
        let annual = std::fs::read_to_string(dir.path().join(ANNUAL_FILE)).unwrap();
        assert_eq!(annual.lines().count(), 1);
        assert!(annual.starts_with("scenario,key,year,demand_mwh"));
        let reports = std::fs::read_to_string(dir.path().join(REPORTS_FILE)).unwrap();
        assert_eq!(reports.trim(), "[]");
    }

    #[test]
    fn detail_files_and_mix_rows_balance() {
        let base = BaseInputs::synthetic(3);
        let scenarios = ParamGrid::new().expand().unwrap();
        let out = run_grid(
            &base,
            &scenarios,
            &RunOptions {
                parallelism: 1,
                detail_year: Some(2030),
                detail_scenario: 0,
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(dir.path(), &out).unwrap();
        for f in ["mix_2030.csv", "ldc_new_2030.csv", "ramp_2030.csv", "soc_2030.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let mut rdr = csv::Reader::from_path(dir.path().join("mix_2030.csv")).unwrap();
        let n_cols = rdr.headers().unwrap().len();
        for rec in rdr.records() {
            let rec = rec.unwrap();
            let v: Vec<f64> = rec.iter().map(|c| c.parse().unwrap()).collect();
            let supplied: f64 = v[2..n_cols - 1].iter().sum();
            assert!((supplied - v[1]).abs() <= 1e-6 * v[1].max(1.0));
        }
        let frontier = std::fs::read_to_string(dir.path().join(FRONTIER_FILE)).unwrap();
        assert_eq!(frontier.lines().count(), 2);
    }
}
