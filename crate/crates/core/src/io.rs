//! CSV formats.
//!
//! | file        | header                   |
//! |-------------|--------------------------|
//! | dataset     | `time,status`            |
//! | KM curve    | `time,survival,at_risk`  |
//! | limit curve | `time,survival`          |
//!
//! `status` is one of `failure`, `dropout`, `administrative`. Numbers are
//! written with Rust's shortest round-trip decimal formatting, so a dataset
//! written and read back is bit-identical.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::FormatError;
use crate::oracles::LimitCurve;
use crate::scenarios::SimulationSummary;
use crate::survival::{KmCurve, Status, SubjectRecord, SurvivalDataset};

pub const DATASET_HEADER: [&str; 2] = ["time", "status"];
pub const KM_HEADER: [&str; 3] = ["time", "survival", "at_risk"];
pub const LIMIT_HEADER: [&str; 2] = ["time", "survival"];

fn io_err(path: &str) -> impl Fn(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_string(),
        source,
    }
}

fn csv_err(path: &str, e: csv::Error) -> FormatError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => FormatError::Io {
            path: path.to_string(),
            source,
        },
        other => FormatError::Line {
            path: path.to_string(),
            line,
            reason: format!("{other:?}"),
        },
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, FormatError> {
    let label = path.display().to_string();
    File::create(path).map(BufWriter::new).map_err(io_err(&label))
}

fn open(path: &Path) -> Result<File, FormatError> {
    let label = path.display().to_string();
    File::open(path).map_err(io_err(&label))
}

pub fn write_dataset<W: Write>(out: W, data: &SurvivalDataset) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "time,status")?;
    for r in data.records() {
        writeln!(out, "{},{}", r.time, r.status.as_str())?;
    }
    out.flush()
}

pub fn write_dataset_file(path: &Path, data: &SurvivalDataset) -> Result<(), FormatError> {
    let label = path.display().to_string();
    write_dataset(create(path)?, data).map_err(io_err(&label))
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn check_header<R: Read>(
    rdr: &mut csv::Reader<R>,
    label: &str,
    accepted: &[&[&str]],
) -> Result<usize, FormatError> {
    let header = rdr.headers().map_err(|e| csv_err(label, e))?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found.is_empty() {
        return Err(FormatError::File {
            path: label.to_string(),
            reason: "file is empty".into(),
        });
    }
    accepted
        .iter()
        .position(|h| *h == found.as_slice())
        .ok_or_else(|| FormatError::Line {
            path: label.to_string(),
            line: 1,
            reason: format!(
                "unexpected header `{}`, expected `{}`",
                found.join(","),
                accepted.iter().map(|h| h.join(",")).collect::<Vec<_>>().join("` or `")
            ),
        })
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    idx: usize,
    name: &str,
    label: &str,
) -> Result<T, FormatError> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(idx).unwrap_or("");
    raw.parse().map_err(|_| FormatError::Line {
        path: label.to_string(),
        line,
        reason: format!("cannot parse {name} `{raw}`"),
    })
}

/// Reads a dataset; `label` names the source in error messages.
pub fn read_dataset<R: Read>(input: R, label: &str) -> Result<SurvivalDataset, FormatError> {
    let mut rdr = reader(input);
    check_header(&mut rdr, label, &[&DATASET_HEADER])?;
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(label, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let at_line = |reason: String| FormatError::Line {
            path: label.to_string(),
            line,
            reason,
        };
        let time: f64 = field(&rec, 0, "time", label)?;
        let status: Status = rec
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|e: crate::error::DomainError| at_line(e.to_string()))?;
        let r = SubjectRecord::new(time, status).map_err(|e| at_line(e.to_string()))?;
        records.push(r);
    }
    SurvivalDataset::new(records).map_err(|e| FormatError::File {
        path: label.to_string(),
        reason: e.to_string(),
    })
}

pub fn read_dataset_file(path: &Path) -> Result<SurvivalDataset, FormatError> {
    read_dataset(open(path)?, &path.display().to_string())
}

pub fn write_km_curve<W: Write>(out: W, curve: &KmCurve) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "time,survival,at_risk")?;
    for ((t, s), n) in curve.event_times().iter().zip(curve.survival()).zip(curve.at_risk()) {
        writeln!(out, "{t},{s},{n}")?;
    }
    out.flush()
}

pub fn write_km_curve_file(path: &Path, curve: &KmCurve) -> Result<(), FormatError> {
    let label = path.display().to_string();
    write_km_curve(create(path)?, curve).map_err(io_err(&label))
}

pub fn write_limit_curve<W: Write>(out: W, curve: &LimitCurve) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "time,survival")?;
    for (t, s) in curve.grid.iter().zip(&curve.survival) {
        writeln!(out, "{t},{s}")?;
    }
    out.flush()
}

pub fn write_limit_curve_file(path: &Path, curve: &LimitCurve) -> Result<(), FormatError> {
    let label = path.display().to_string();
    write_limit_curve(create(path)?, curve).map_err(io_err(&label))
}

/// Either kind of curve file, told apart by its header.
#[derive(Clone, Debug, PartialEq)]
pub enum CurveFile {
    Km(KmCurve),
    Limit(LimitCurve),
}

/// A KM file stores only the steps, so the curve read back takes its last
/// event time as the last observed time.
pub fn read_curve<R: Read>(input: R, label: &str) -> Result<CurveFile, FormatError> {
    let mut rdr = reader(input);
    let kind = check_header(&mut rdr, label, &[&KM_HEADER, &LIMIT_HEADER])?;
    let mut times = Vec::new();
    let mut survival = Vec::new();
    let mut at_risk = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(label, e))?;
        times.push(field::<f64>(&rec, 0, "time", label)?);
        survival.push(field::<f64>(&rec, 1, "survival", label)?);
        if kind == 0 {
            at_risk.push(field::<u64>(&rec, 2, "at_risk", label)?);
        }
    }
    if times.is_empty() {
        return Err(FormatError::File {
            path: label.to_string(),
            reason: "curve file has no rows".into(),
        });
    }
    let invalid = |e: crate::error::DomainError| FormatError::File {
        path: label.to_string(),
        reason: e.to_string(),
    };
    if kind == 0 {
        let n_total = at_risk.first().copied().unwrap_or(0);
        let last = times.last().copied().unwrap_or(0.0);
        KmCurve::from_steps(times, survival, at_risk, n_total, last)
            .map(CurveFile::Km)
            .map_err(invalid)
    } else {
        if times.windows(2).any(|w| w[0] >= w[1]) || survival.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(FormatError::File {
                path: label.to_string(),
                reason: "limit curve needs increasing times and survival in [0, 1]".into(),
            });
        }
        Ok(CurveFile::Limit(LimitCurve { grid: times, survival }))
    }
}

pub fn read_curve_file(path: &Path) -> Result<CurveFile, FormatError> {
    read_curve(open(path)?, &path.display().to_string())
}

pub const SUMMARY_HEADER: &str = "n,pct_censored_total,pct_dropout,pct_administrative,pct_failures,s_at_ams,s_at_ams_extrapolated,ms_over_ams,ams";

/// One-row summary table; `ms_over_ams` is empty when the median is absent.
pub fn write_summary<W: Write>(out: W, s: &SimulationSummary) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{SUMMARY_HEADER}")?;
    let ms = s.ms_over_ams.map(|m| m.to_string()).unwrap_or_default();
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{}",
        s.n,
        s.pct_censored_total,
        s.pct_dropout,
        s.pct_administrative,
        s.pct_failures,
        s.s_at_ams,
        s.s_at_ams_extrapolated,
        ms,
        s.ams
    )?;
    out.flush()
}

pub fn write_summary_file(path: &Path, s: &SimulationSummary) -> Result<(), FormatError> {
    let label = path.display().to_string();
    write_summary(create(path)?, s).map_err(io_err(&label))
}

/// Writes `contents` to `path`, naming the path on failure.
pub fn write_text_file(path: &Path, contents: &str) -> Result<(), FormatError> {
    let label = path.display().to_string();
    std::fs::write(path, contents).map_err(io_err(&label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survival::{fit_km, CensoringPolicy};

    fn sample() -> SurvivalDataset {
        SurvivalDataset::new(vec![
            SubjectRecord::failure(0.1 + 0.2),
            SubjectRecord::dropout(1e-7),
            SubjectRecord::administrative(2.5),
            SubjectRecord::failure(std::f64::consts::PI),
        ])
        .unwrap()
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let d = sample();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &d).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time,status\n0.30000000000000004,failure\n0.0000001,dropout\n"));
        let back = read_dataset(buf.as_slice(), "mem").unwrap();
        assert_eq!(back.records(), d.records());
    }

    #[test]
    fn dataset_errors_cite_lines() {
        let bad = "time,status\n1.0,failure\n2.0,lost-to-follow-up\n";
        let err = read_dataset(bad.as_bytes(), "d.csv").unwrap_err().to_string();
        assert!(err.contains("d.csv: line 3"), "{err}");
        assert!(err.contains("failure, dropout, administrative"), "{err}");

        let bad = "time,status\n-1,failure\n";
        let err = read_dataset(bad.as_bytes(), "d.csv").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");

        let bad = "time,status\nabc,failure\n";
        assert!(read_dataset(bad.as_bytes(), "d.csv").unwrap_err().to_string().contains("line 2"));

        let bad = "t,s\n1,failure\n";
        assert!(read_dataset(bad.as_bytes(), "d.csv").unwrap_err().to_string().contains("header"));
    }

    #[test]
    fn curve_files() {
        let curve = fit_km(&sample(), CensoringPolicy::AllCensoredEqual).unwrap();
        let mut buf = Vec::new();
        write_km_curve(&mut buf, &curve).unwrap();
        match read_curve(buf.as_slice(), "c.csv").unwrap() {
            CurveFile::Km(back) => {
                assert_eq!(back.event_times(), curve.event_times());
                assert_eq!(back.survival(), curve.survival());
                assert_eq!(back.at_risk(), curve.at_risk());
            }
            other => panic!("{other:?}"),
        }

        let limit = LimitCurve {
            grid: vec![0.0, 1.0],
            survival: vec![1.0, 0.5],
        };
        let mut buf = Vec::new();
        write_limit_curve(&mut buf, &limit).unwrap();
        assert_eq!(read_curve(buf.as_slice(), "l.csv").unwrap(), CurveFile::Limit(limit));

        let err = read_curve("time,survival\n".as_bytes(), "empty.csv").unwrap_err();
        assert!(err.to_string().contains("empty.csv"));
        assert!(read_curve("".as_bytes(), "blank.csv").is_err());
    }

    #[test]
    fn summary_row() {
        let s = SimulationSummary {
            n: 4,
            pct_censored_total: 50.0,
            pct_dropout: 25.0,
            pct_administrative: 25.0,
            pct_failures: 50.0,
            s_at_ams: 0.75,
            s_at_ams_extrapolated: false,
            ms_over_ams: None,
            ams: 1.0,
        };
        let mut buf = Vec::new();
        write_summary(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "4,50,25,25,50,0.75,false,,1");
    }
}
