//! Survival data with a three-way status and the product-limit estimator.
//!
//! Observed data are the outcome of three competing risks: the subject's own
//! failure time, a dropout time, and an administrative (end of study) time.
//! Only the smallest of the three is recorded, together with which one it was.

mod km;

use std::fmt;
use std::str::FromStr;

pub use km::{
    aggregate_ties, dropout_sensitivity, fit_km, median_survival, survival_at, CensoringPolicy,
    GapAt, KmCurve, SensitivityReport, SurvivalEstimate, TimeGroup, MEDIAN_LEVEL,
};

use crate::error::{DomainError, EstimationError};
use crate::scenarios::ScenarioConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Failure,
    DropoutCensored,
    AdministrativeCensored,
}

impl Status {
    pub const ALL: [Status; 3] = [
        Status::Failure,
        Status::DropoutCensored,
        Status::AdministrativeCensored,
    ];

    /// The event indicator: 1 for an observed failure, 0 for either censoring.
    pub fn delta(self) -> u8 {
        u8::from(self == Status::Failure)
    }

    pub fn is_failure(self) -> bool {
        self == Status::Failure
    }

    pub fn is_censored(self) -> bool {
        !self.is_failure()
    }

    /// Token used in the dataset CSV format.
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Failure => "failure",
            Status::DropoutCensored => "dropout",
            Status::AdministrativeCensored => "administrative",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "failure" => Ok(Status::Failure),
            "dropout" => Ok(Status::DropoutCensored),
            "administrative" => Ok(Status::AdministrativeCensored),
            other => Err(DomainError::text(
                "status",
                other,
                "expected one of: failure, dropout, administrative",
            )),
        }
    }
}

/// One subject: the observed time and why observation stopped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubjectRecord {
    pub time: f64,
    pub status: Status,
}

impl SubjectRecord {
    pub fn new(time: f64, status: Status) -> Result<Self, DomainError> {
        if !(time.is_finite() && time >= 0.0) {
            return Err(DomainError::new("time", time, "must be finite and non-negative"));
        }
        Ok(Self { time, status })
    }

    pub fn failure(time: f64) -> Self {
        Self::new(time, Status::Failure).expect("valid failure time")
    }

    pub fn dropout(time: f64) -> Self {
        Self::new(time, Status::DropoutCensored).expect("valid dropout time")
    }

    pub fn administrative(time: f64) -> Self {
        Self::new(time, Status::AdministrativeCensored).expect("valid administrative time")
    }
}

/// Per-status counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StatusCounts {
    pub failures: u64,
    pub dropout: u64,
    pub administrative: u64,
}

impl StatusCounts {
    pub fn total(&self) -> u64 {
        self.failures + self.dropout + self.administrative
    }

    pub fn censored(&self) -> u64 {
        self.dropout + self.administrative
    }
}

/// An immutable collection of subject records, optionally tagged with the
/// configuration that generated it.
#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalDataset {
    records: Vec<SubjectRecord>,
    provenance: Option<ScenarioConfig>,
}

impl SurvivalDataset {
    pub fn new(records: Vec<SubjectRecord>) -> Result<Self, DomainError> {
        if let Some(bad) = records.iter().find(|r| !(r.time.is_finite() && r.time >= 0.0)) {
            return Err(DomainError::new("time", bad.time, "must be finite and non-negative"));
        }
        Ok(Self {
            records,
            provenance: None,
        })
    }

    pub(crate) fn from_trusted(records: Vec<SubjectRecord>, provenance: ScenarioConfig) -> Self {
        Self {
            records,
            provenance: Some(provenance),
        }
    }

    pub fn with_provenance(mut self, cfg: ScenarioConfig) -> Self {
        self.provenance = Some(cfg);
        self
    }

    pub fn records(&self) -> &[SubjectRecord] {
        &self.records
    }

    pub fn provenance(&self) -> Option<&ScenarioConfig> {
        self.provenance.as_ref()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn counts(&self) -> StatusCounts {
        let mut c = StatusCounts::default();
        for r in &self.records {
            match r.status {
                Status::Failure => c.failures += 1,
                Status::DropoutCensored => c.dropout += 1,
                Status::AdministrativeCensored => c.administrative += 1,
            }
        }
        c
    }
}

/// Percentage of subjects in each status.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CensoringBreakdown {
    pub pct_failures: f64,
    pub pct_dropout: f64,
    pub pct_administrative: f64,
    pub counts: StatusCounts,
}

impl CensoringBreakdown {
    pub fn pct_censored(&self) -> f64 {
        self.pct_dropout + self.pct_administrative
    }
}

pub fn censoring_breakdown(data: &SurvivalDataset) -> Result<CensoringBreakdown, EstimationError> {
    if data.is_empty() {
        return Err(EstimationError::EmptyDataset);
    }
    let counts = data.counts();
    let n = counts.total() as f64;
    let pct = |k: u64| 100.0 * k as f64 / n;
    Ok(CensoringBreakdown {
        pct_failures: pct(counts.failures),
        pct_dropout: pct(counts.dropout),
        pct_administrative: pct(counts.administrative),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_tokens() {
        for s in Status::ALL {
            assert_eq!(s.as_str().parse::<Status>().unwrap(), s);
        }
        assert_eq!(Status::Failure.delta(), 1);
        assert_eq!(Status::DropoutCensored.delta(), 0);
        assert_eq!(Status::AdministrativeCensored.delta(), 0);
        let err = "lost-to-follow-up".parse::<Status>().unwrap_err();
        assert!(err.to_string().contains("failure, dropout, administrative"));
    }

    #[test]
    fn rejects_bad_times() {
        assert!(SubjectRecord::new(-1.0, Status::Failure).is_err());
        assert!(SubjectRecord::new(f64::NAN, Status::Failure).is_err());
        assert!(SubjectRecord::new(f64::INFINITY, Status::Failure).is_err());
        let bad = SubjectRecord {
            time: -0.5,
            status: Status::Failure,
        };
        assert!(SurvivalDataset::new(vec![bad]).is_err());
    }

    #[test]
    fn breakdown() {
        let all_fail =
            SurvivalDataset::new((1..=4).map(|t| SubjectRecord::failure(t as f64)).collect())
                .unwrap();
        let b = censoring_breakdown(&all_fail).unwrap();
        assert_eq!((b.pct_failures, b.pct_dropout, b.pct_administrative), (100.0, 0.0, 0.0));

        let mixed = SurvivalDataset::new(vec![
            SubjectRecord::failure(1.0),
            SubjectRecord::dropout(0.5),
            SubjectRecord::administrative(2.0),
            SubjectRecord::administrative(2.5),
        ])
        .unwrap();
        let b = censoring_breakdown(&mixed).unwrap();
        assert_eq!((b.pct_failures, b.pct_dropout, b.pct_administrative), (25.0, 25.0, 50.0));
        assert_eq!(b.counts.total(), 4);
        assert_eq!(b.pct_censored(), 75.0);

        let empty = SurvivalDataset::new(vec![]).unwrap();
        assert_eq!(censoring_breakdown(&empty), Err(EstimationError::EmptyDataset));
    }
}
