//! Re-runs each reference table and diffs it against the printed values.
//!
//! Row `i` of a table is simulated with seed `seed + i`, so every row is an
//! independent sample and a table is reproducible from one seed.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{ConfigError, Error};
use crate::oracles::{admin_fraction_s2, admin_fraction_s3};
use crate::reference::*;
use crate::scenarios::{run_scenario, summarize, ScenarioConfig, SimulationSummary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TableId {
    T1,
    T2,
    T3,
    T4,
}

impl TableId {
    pub const ALL: [TableId; 4] = [TableId::T1, TableId::T2, TableId::T3, TableId::T4];

    pub fn number(self) -> u8 {
        match self {
            TableId::T1 => 1,
            TableId::T2 => 2,
            TableId::T3 => 3,
            TableId::T4 => 4,
        }
    }
}

impl FromStr for TableId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" => Ok(TableId::T1),
            "2" => Ok(TableId::T2),
            "3" => Ok(TableId::T3),
            "4" => Ok(TableId::T4),
            other => Err(ConfigError::new("table", format!("`{other}` is not 1, 2, 3 or 4"))),
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// One simulated quantity against its reference value.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricCheck {
    pub metric: &'static str,
    pub simulated: Option<f64>,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl MetricCheck {
    fn new(metric: &'static str, simulated: Option<f64>, reference: f64, tolerance: f64) -> Self {
        let pass = simulated.is_some_and(|v| (v - reference).abs() <= tolerance);
        Self {
            metric,
            simulated,
            reference,
            tolerance,
            pass,
        }
    }

    pub fn diff(&self) -> Option<f64> {
        self.simulated.map(|v| v - self.reference)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    /// Printed row label (dropout law or study design).
    pub label: String,
    pub config: ScenarioConfig,
    pub summary: SimulationSummary,
    pub checks: Vec<MetricCheck>,
}

impl ReportRow {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, metric: &str) -> Option<&MetricCheck> {
        self.checks.iter().find(|c| c.metric == metric)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReproductionReport {
    pub table: TableId,
    pub n: u64,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    pub overall_pass: bool,
}

/// The configurations behind a table's rows, with their printed labels.
pub fn table_configs(table: TableId, n: u64, seed: u64) -> Vec<(String, ScenarioConfig)> {
    let row_seed = |i: usize| seed.wrapping_add(i as u64);
    match table {
        TableId::T1 => TABLE1
            .iter()
            .enumerate()
            .map(|(i, r)| {
                (
                    r.label.to_string(),
                    ScenarioConfig::scenario1(n, r.p, r.dropout.spec(), row_seed(i)),
                )
            })
            .collect(),
        TableId::T2 => TABLE2
            .iter()
            .enumerate()
            .map(|(i, r)| {
                (
                    format!("T = {} ams", r.t_study),
                    ScenarioConfig::scenario2(n, r.t_study, row_seed(i)),
                )
            })
            .collect(),
        TableId::T3 => TABLE3
            .iter()
            .enumerate()
            .map(|(i, r)| {
                (
                    format!("T = {} ams, R = {} ams", r.t_study, r.t_recruitment),
                    ScenarioConfig::scenario3(n, r.t_study, r.t_recruitment, row_seed(i)),
                )
            })
            .collect(),
        TableId::T4 => TABLE4
            .iter()
            .enumerate()
            .map(|(i, r)| {
                (
                    r.label.to_string(),
                    ScenarioConfig::scenario4(
                        n,
                        r.p,
                        r.dropout.spec(),
                        TABLE4_T_STUDY,
                        TABLE4_T_RECRUITMENT,
                        row_seed(i),
                    ),
                )
            })
            .collect(),
    }
}

fn binomial_band(fraction: f64, n: u64) -> f64 {
    100.0 * CLOSED_FORM_SIGMAS * (fraction * (1.0 - fraction) / n as f64).sqrt()
}

fn checks_for(table: TableId, row: usize, s: &SimulationSummary, cfg: &ScenarioConfig) -> Vec<MetricCheck> {
    let n = cfg.n;
    match table {
        TableId::T1 => {
            let r = &TABLE1[row];
            vec![
                // exactly round(p n) subjects drop out
                MetricCheck::new("pct_censored", Some(s.pct_censored_total), r.pct_censored, 100.0 / n as f64),
                MetricCheck::new("s_at_ams", Some(s.s_at_ams), r.s_at_ams, TOL_SURVIVAL),
                MetricCheck::new("ms_over_ams", s.ms_over_ams, r.ms_over_ams, TOL_MEDIAN_RATIO),
            ]
        }
        TableId::T2 => {
            let r = &TABLE2[row];
            let closed = admin_fraction_s2(cfg.lambda, r.t_study * cfg.ams()).expect("valid row");
            vec![
                MetricCheck::new("pct_censored", Some(s.pct_censored_total), r.pct_censored, TOL_PCT_ADMIN),
                MetricCheck::new("s_at_ams", Some(s.s_at_ams), r.s_at_ams, TOL_SURVIVAL),
                MetricCheck::new(
                    "pct_censored_closed_form",
                    Some(s.pct_censored_total),
                    100.0 * closed,
                    binomial_band(closed, n),
                ),
            ]
        }
        TableId::T3 => {
            let r = &TABLE3[row];
            let ams = cfg.ams();
            let closed = admin_fraction_s3(cfg.lambda, r.t_study * ams, r.t_recruitment * ams)
                .expect("valid row");
            vec![
                MetricCheck::new("pct_censored", Some(s.pct_censored_total), r.pct_censored, TOL_PCT_ADMIN),
                MetricCheck::new("s_at_ams", Some(s.s_at_ams), r.s_at_ams, TOL_SURVIVAL),
                MetricCheck::new(
                    "pct_censored_closed_form",
                    Some(s.pct_censored_total),
                    100.0 * closed,
                    binomial_band(closed, n),
                ),
            ]
        }
        TableId::T4 => {
            let r = &TABLE4[row];
            vec![
                MetricCheck::new("pct_censored", Some(s.pct_censored_total), r.pct_censored, TOL_PCT_MIXED),
                MetricCheck::new("s_at_ams", Some(s.s_at_ams), r.s_at_ams, TOL_SURVIVAL),
                MetricCheck::new("ms_over_ams", s.ms_over_ams, r.ms_over_ams, TOL_MEDIAN_RATIO),
                MetricCheck::new("pct_administrative", Some(s.pct_administrative), r.pct_administrative, TOL_PCT_MIXED),
                MetricCheck::new("pct_dropout", Some(s.pct_dropout), r.pct_dropout, TOL_PCT_MIXED),
                MetricCheck::new("pct_failures", Some(s.pct_failures), r.pct_failures, TOL_PCT_MIXED),
            ]
        }
    }
}

/// Simulates every row of `table` at size `n` and compares it with the reference.
pub fn reproduce_table(table: TableId, n: u64, seed: u64) -> Result<ReproductionReport, Error> {
    if n < MIN_REPRODUCTION_N {
        return Err(ConfigError::new(
            "n",
            format!(
                "{n} is below the minimum of {MIN_REPRODUCTION_N}; Monte Carlo error would exceed the tolerances"
            ),
        )
        .into());
    }
    let mut rows = Vec::new();
    for (i, (label, cfg)) in table_configs(table, n, seed).into_iter().enumerate() {
        let data = run_scenario(&cfg)?;
        let summary = summarize(&data, cfg.lambda)?;
        let checks = checks_for(table, i, &summary, &cfg);
        rows.push(ReportRow {
            label,
            config: cfg,
            summary,
            checks,
        });
    }
    let overall_pass = rows.iter().all(ReportRow::pass);
    Ok(ReproductionReport {
        table,
        n,
        seed,
        rows,
        overall_pass,
    })
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

fn fmt_diff(c: &MetricCheck, digits: usize) -> String {
    match c.diff() {
        Some(d) => format!("{d:+.digits$}"),
        None => "-".into(),
    }
}

impl ReproductionReport {
    /// Markdown table laid out like the reference table, with simulated,
    /// reference and difference columns per metric.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "### Table {}: n = {}, seed = {}, reference v{}\n",
            self.table, self.n, self.seed, REFERENCE_VERSION
        );
        let spec: &[(&str, &str, usize)] = match self.table {
            TableId::T1 => &[("pct_censored", "% censored", 2), ("s_at_ams", "S(ams)", 3), ("ms_over_ams", "ms / ams", 3)],
            TableId::T2 | TableId::T3 => &[
                ("pct_censored", "% censored", 2),
                ("s_at_ams", "S(ams)", 3),
                ("pct_censored_closed_form", "% censored (closed form)", 2),
            ],
            TableId::T4 => &[
                ("pct_censored", "% censored", 2),
                ("s_at_ams", "S(ams)", 3),
                ("ms_over_ams", "ms / ams", 3),
                ("pct_administrative", "% administrative", 2),
                ("pct_dropout", "% dropout", 2),
                ("pct_failures", "% failures", 2),
            ],
        };
        let first = match self.table {
            TableId::T1 | TableId::T4 => "| Dropout distribution | Simulated as",
            TableId::T2 => "| Study length | P",
            TableId::T3 => "| Study / recruitment | P",
        };
        let mut header = first.to_string();
        let mut rule = "|---|---".to_string();
        for (_, title, _) in spec {
            let _ = write!(header, " | {title} | ref | diff");
            rule.push_str("|---:|---:|---:");
        }
        header.push_str(" | pass |");
        rule.push_str("|:---:|");
        let _ = writeln!(out, "{header}\n{rule}");
        for row in &self.rows {
            let second = match self.table {
                TableId::T1 | TableId::T4 => {
                    let law = row.config.dropout.map(|d| d.to_string()).unwrap_or_default();
                    format!("{law}, P = {}", row.config.p.unwrap_or(0.0))
                }
                _ => "-".to_string(),
            };
            let _ = write!(out, "| {} | {}", row.label, second);
            for (metric, _, digits) in spec {
                let c = row.check(metric).expect("metric present");
                let mut sim = fmt_opt(c.simulated, *digits);
                if *metric == "s_at_ams" && row.summary.s_at_ams_extrapolated {
                    sim.push('*');
                }
                let _ = write!(out, " | {sim} | {:.*} | {}", digits, c.reference, fmt_diff(c, *digits));
            }
            let _ = writeln!(out, " | {} |", if row.pass() { "yes" } else { "NO" });
        }
        if self.rows.iter().any(|r| r.summary.s_at_ams_extrapolated) {
            out.push_str("\n`*` S(ams) held constant past the last observed time.\n");
        }
        let _ = writeln!(
            out,
            "\noverall: {}",
            if self.overall_pass { "PASS" } else { "FAIL" }
        );
        out
    }

    /// Long-format CSV: one line per (row, metric) with a pass flag, plus a
    /// `row_pass` column repeating the row verdict.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("table,row,label,metric,simulated,reference,diff,tolerance,pass,row_pass\n");
        for (i, row) in self.rows.iter().enumerate() {
            for c in &row.checks {
                let _ = writeln!(
                    out,
                    "{},{},\"{}\",{},{},{},{},{},{},{}",
                    self.table,
                    i + 1,
                    row.label,
                    c.metric,
                    c.simulated.map(|v| v.to_string()).unwrap_or_default(),
                    c.reference,
                    c.diff().map(|v| v.to_string()).unwrap_or_default(),
                    c.tolerance,
                    c.pass,
                    row.pass()
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_small_n() {
        let err = reproduce_table(TableId::T1, 100, 1).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("--n") && msg.contains("100000"), "{msg}");
    }

    #[test]
    fn configs_cover_every_row() {
        assert_eq!(table_configs(TableId::T1, 1000, 0).len(), 9);
        assert_eq!(table_configs(TableId::T2, 1000, 0).len(), 7);
        assert_eq!(table_configs(TableId::T3, 1000, 0).len(), 16);
        let t4 = table_configs(TableId::T4, 1000, 5);
        assert_eq!(t4.len(), 9);
        assert_eq!(t4[3].1.seed, 8);
        for (_, cfg) in t4 {
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn metric_check_handles_absent_values() {
        let c = MetricCheck::new("ms_over_ams", None, 1.0, 0.03);
        assert!(!c.pass);
        assert_eq!(c.diff(), None);
        let c = MetricCheck::new("s_at_ams", Some(0.509), 0.5, 0.01);
        assert!(c.pass);
    }

    #[test]
    fn table_id_parse() {
        assert_eq!("3".parse::<TableId>().unwrap(), TableId::T3);
        assert_eq!("5".parse::<TableId>().unwrap_err().field, "table");
    }
}
