use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{EmcError, Result};
use crate::noise_estimator::EstimatorKind;
use crate::plant::DesignModelParams;

use super::config::ExperimentConfig;
use super::run::{Row, RunResult, RunSummary, COLUMNS};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EmcError + '_ {
    move |source| EmcError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> EmcError + '_ {
    move |e| EmcError::Format(format!("{}: {e}", path.display()))
}

/// First line of every CSV file.
pub fn provenance_line(seed: u64, config_hash: &str) -> String {
    format!("# emc run seed={seed} config_sha256={config_hash}")
}

/// Seed and hash from a provenance line.
pub fn parse_provenance(line: &str) -> Option<(u64, String)> {
    let rest = line.strip_prefix("# emc run ")?;
    let mut seed = None;
    let mut hash = None;
    for part in rest.split_whitespace() {
        if let Some(v) = part.strip_prefix("seed=") {
            seed = v.parse().ok();
        } else if let Some(v) = part.strip_prefix("config_sha256=") {
            hash = Some(v.to_string());
        }
    }
    Some((seed?, hash?))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn row_record(r: &Row) -> [String; 23] {
    [
        r.t_s.to_string(),
        r.q_ref.to_string(),
        r.q_true.to_string(),
        fmt_opt(r.q_meas),
        r.w_meas.to_string(),
        r.q_hat.to_string(),
        r.w_hat.to_string(),
        r.sg_hat.to_string(),
        r.a_hat.to_string(),
        r.u_cmd.to_string(),
        r.e_track_true.to_string(),
        r.e_track_post.to_string(),
        fmt_opt(r.e_model),
        u8::from(r.sat_flag).to_string(),
        r.w_ref.to_string(),
        r.u_ref.to_string(),
        r.w_true.to_string(),
        r.e_rate_true.to_string(),
        r.e_rate_post.to_string(),
        fmt_opt(r.e_control),
        r.e_model_rate.to_string(),
        r.link_acc.to_string(),
        r.dist_total.to_string(),
    ]
}

/// Writes rows as CSV with a provenance comment line and a header row.
/// Floats use the shortest representation that parses back to the same value.
pub fn write_timeseries_csv(path: &Path, seed: u64, config_hash: &str, rows: &[Row]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{}", provenance_line(seed, config_hash)).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(row_record(r)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Rows and provenance `(seed, config hash)` of a time-series CSV.
pub fn read_timeseries_csv(path: &Path) -> Result<(u64, String, Vec<Row>)> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(io_err(path))?;
    let (seed, hash) = parse_provenance(first.trim_end())
        .ok_or_else(|| EmcError::Format(format!("{}: missing provenance line", path.display())))?;
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(EmcError::Format(format!("{}: unexpected columns", path.display())));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = |col: usize| EmcError::Format(format!("{}: row {} column {}", path.display(), line + 1, COLUMNS[col]));
        let f = |col: usize| rec[col].parse::<f64>().map_err(|_| bad(col));
        let o = |col: usize| if rec[col].is_empty() { Ok(None) } else { f(col).map(Some) };
        rows.push(Row {
            t_s: f(0)?,
            q_ref: f(1)?,
            q_true: f(2)?,
            q_meas: o(3)?,
            w_meas: f(4)?,
            q_hat: f(5)?,
            w_hat: f(6)?,
            sg_hat: f(7)?,
            a_hat: f(8)?,
            u_cmd: f(9)?,
            e_track_true: f(10)?,
            e_track_post: f(11)?,
            e_model: o(12)?,
            sat_flag: match &rec[13] {
                "0" => false,
                "1" => true,
                _ => return Err(bad(13)),
            },
            w_ref: f(14)?,
            u_ref: f(15)?,
            w_true: f(16)?,
            e_rate_true: f(17)?,
            e_rate_post: f(18)?,
            e_control: o(19)?,
            e_model_rate: f(20)?,
            link_acc: f(21)?,
            dist_total: f(22)?,
        });
    }
    Ok((seed, hash, rows))
}

/// JSON companion of a run: provenance, configuration snapshot and statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_sha256: String,
    pub seed: u64,
    pub stream: u64,
    pub estimator: EstimatorKind,
    pub params: DesignModelParams,
    pub unstable: bool,
    pub unstable_at_s: Option<f64>,
    pub summary: RunSummary,
    pub config: ExperimentConfig,
}

impl RunReport {
    pub fn new(result: &RunResult, config: &ExperimentConfig) -> Self {
        Self {
            config_sha256: result.config_hash.clone(),
            seed: result.seed,
            stream: result.stream,
            estimator: result.estimator,
            params: result.params,
            unstable: result.unstable,
            unstable_at_s: result.unstable_at_s,
            summary: result.summary.clone(),
            config: config.clone(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.json`; returns both paths.
pub fn export_run(result: &RunResult, config: &ExperimentConfig, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    ensure_dir(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    write_timeseries_csv(&csv_path, result.seed, &result.config_hash, &result.rows)?;
    write_json(&json_path, &RunReport::new(result, config))?;
    Ok((csv_path, json_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run::{run_closed_loop, summarize};
    use crate::harness::stats::WindowBounds;

    #[test]
    fn provenance_round_trip() {
        let line = provenance_line(42, "abc");
        assert_eq!(parse_provenance(&line), Some((42, "abc".to_string())));
        assert_eq!(parse_provenance("t_s,q_ref"), None);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let cfg = ExperimentConfig { duration_s: 3.0, ..ExperimentConfig::default() };
        let r = run_closed_loop(&cfg, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (csv_path, json_path) = export_run(&r, &cfg, dir.path(), "run").unwrap();
        let (seed, hash, rows) = read_timeseries_csv(&csv_path).unwrap();
        assert_eq!(seed, 9);
        assert_eq!(hash, cfg.hash().unwrap());
        assert_eq!(rows, r.rows);
        let bounds = WindowBounds::new(cfg.step_s, cfg.zero_reference_from_s, cfg.slew_window_s);
        assert_eq!(summarize(&rows, bounds), r.summary);
        let report: RunReport = read_json(&json_path).unwrap();
        assert_eq!(report.summary, r.summary);
        assert_eq!(report.config_sha256, hash);
    }

    #[test]
    fn missing_file_has_path_context() {
        let err = read_timeseries_csv(Path::new("/nonexistent/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.csv"));
    }
}
