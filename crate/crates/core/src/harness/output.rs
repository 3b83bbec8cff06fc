use std::path::{Path, PathBuf};

use super::config::OutputPaths;
use super::runner::{ExperimentOutput, RunRecord, SummaryRow};
use super::svg::{line_chart, Series};
use crate::error::{Error, Result};

pub const RAW_HEADER: [&str; 11] = [
    "sweep_param",
    "sweep_value",
    "replicate",
    "method",
    "h",
    "weighted_loss",
    "snr",
    "snr_mod",
    "snr_exc",
    "iters",
    "wall_ms",
];

pub const SUMMARY_HEADER: [&str; 10] = [
    "sweep_param",
    "sweep_value",
    "method",
    "n_reps",
    "n_failed",
    "h_mean",
    "h_se",
    "weighted_loss_mean",
    "weighted_loss_se",
    "iters_mean",
];

/// 17 significant digits, so values round-trip exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn raw_csv(records: &[RunRecord]) -> Result<Vec<u8>> {
    let rows = records
        .iter()
        .map(|r| {
            vec![
                r.sweep_param.clone().unwrap_or_default(),
                opt_f64(r.sweep_value),
                r.replicate.to_string(),
                r.method.name().to_string(),
                opt_f64(r.h),
                opt_f64(r.weighted_loss),
                opt_f64(r.snr),
                opt_f64(r.snr_mod),
                opt_f64(r.snr_exc),
                r.iters.map(|v| v.to_string()).unwrap_or_default(),
                opt_f64(r.wall_ms),
            ]
        })
        .collect();
    csv_bytes(&RAW_HEADER, rows)
}

pub fn summary_csv(summary: &[SummaryRow]) -> Result<Vec<u8>> {
    let rows = summary
        .iter()
        .map(|s| {
            let finite = |v: f64| if v.is_finite() { fmt_f64(v) } else { String::new() };
            vec![
                s.sweep_param.clone().unwrap_or_default(),
                opt_f64(s.sweep_value),
                s.method.name().to_string(),
                s.n_reps.to_string(),
                s.n_failed.to_string(),
                finite(s.h_mean),
                finite(s.h_se),
                opt_f64(s.weighted_loss_mean),
                opt_f64(s.weighted_loss_se),
                opt_f64(s.iters_mean),
            ]
        })
        .collect();
    csv_bytes(&SUMMARY_HEADER, rows)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Charts of the per-method means against the sweep value, one per metric.
pub fn charts(name: &str, summary: &[SummaryRow]) -> Vec<(String, String)> {
    let x_label = summary
        .first()
        .and_then(|s| s.sweep_param.clone())
        .unwrap_or_else(|| "point".into());
    let mut methods: Vec<_> = summary.iter().map(|s| s.method).collect();
    methods.sort();
    methods.dedup();
    type Getter = fn(&SummaryRow) -> Option<(f64, f64)>;
    let metrics: [(&str, Getter); 2] = [
        ("h", |s| (s.n_reps > 0).then_some((s.h_mean, s.h_se))),
        ("weighted_loss", |s| s.weighted_loss_mean.zip(s.weighted_loss_se)),
    ];
    let mut out = Vec::new();
    for (metric, get) in metrics {
        let series: Vec<Series> = methods
            .iter()
            .map(|&m| Series {
                label: m.name().to_string(),
                points: summary
                    .iter()
                    .filter(|s| s.method == m)
                    .filter_map(|s| {
                        let x = s.sweep_value.unwrap_or(s.point as f64);
                        get(s).map(|(y, e)| (x, y, e))
                    })
                    .collect(),
            })
            .filter(|s| !s.points.is_empty())
            .collect();
        if series.is_empty() {
            continue;
        }
        let title = format!("{name}: mean {metric}");
        out.push((
            format!("{name}_{metric}.svg"),
            line_chart(&title, &x_label, metric, &series),
        ));
    }
    out
}

/// Writes whichever outputs have a path. Returns the files written.
pub fn emit_outputs(name: &str, out: &ExperimentOutput, paths: &OutputPaths) -> Result<Vec<PathBuf>> {
    if out.records.is_empty() {
        return Err(Error::Contract("no records to write".into()));
    }
    let mut written = Vec::new();
    if let Some(p) = &paths.raw_csv {
        let p = PathBuf::from(p);
        write(&p, &raw_csv(&out.records)?)?;
        written.push(p);
    }
    if let Some(p) = &paths.summary_csv {
        let p = PathBuf::from(p);
        write(&p, &summary_csv(&out.summary)?)?;
        written.push(p);
    }
    if let Some(dir) = &paths.chart_dir {
        for (file, svg) in charts(name, &out.summary) {
            let p = Path::new(dir).join(file);
            write(&p, svg.as_bytes())?;
            written.push(p);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Method;

    fn record(method: Method, replicate: usize, h: f64) -> RunRecord {
        RunRecord {
            sweep_param: None,
            sweep_value: None,
            point: 0,
            replicate,
            method,
            h: Some(h),
            weighted_loss: None,
            snr: Some(1.5),
            snr_mod: None,
            snr_exc: None,
            iters: Some(3),
            wall_ms: None,
            error: None,
        }
    }

    #[test]
    fn one_record_layout() {
        let bytes = raw_csv(&[record(Method::Copo, 0, 0.25)]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], RAW_HEADER.join(","));
        assert_eq!(
            lines[1],
            ",,0,copo,2.5000000000000000e-1,,1.5000000000000000e0,,,3,"
        );
    }

    #[test]
    fn formatted_floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456.789] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let out = ExperimentOutput {
            records: vec![record(Method::Copo, 0, 0.0)],
            summary: vec![],
        };
        let paths = OutputPaths {
            raw_csv: Some(blocker.join("raw.csv").to_string_lossy().into_owned()),
            ..Default::default()
        };
        assert!(matches!(emit_outputs("x", &out, &paths), Err(Error::Io(_))));
    }
}
