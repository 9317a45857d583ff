use rayon::slice::ParallelSliceMut;

use super::{Status, SubjectRecord, SurvivalDataset};
use crate::error::{DomainError, EstimationError};

/// The survival level that defines the median.
pub const MEDIAN_LEVEL: f64 = 0.5;

// Products of (1 - d/n) that equal 0.5 in exact arithmetic can land one ulp
// above it in floating point.
const MEDIAN_SLACK: f64 = 1e-12;

// Below this many records a sequential sort is faster than rayon's.
const PARALLEL_SORT_MIN: usize = 1 << 16;

/// Which censored records take part in a fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CensoringPolicy {
    /// Dropout and administrative censoring are treated identically.
    AllCensoredEqual,
    /// Dropout records are removed before fitting.
    ExcludeDropouts,
}

impl CensoringPolicy {
    fn includes(self, status: Status) -> bool {
        match self {
            CensoringPolicy::AllCensoredEqual => true,
            CensoringPolicy::ExcludeDropouts => status != Status::DropoutCensored,
        }
    }
}

/// All records sharing one observed time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGroup {
    pub time: f64,
    pub failures: u64,
    pub censored: u64,
}

/// A fitted product-limit step function.
///
/// The curve is 1 on `[0, event_times[0])` and `survival[i]` on
/// `[event_times[i], event_times[i + 1])`.
#[derive(Clone, Debug, PartialEq)]
pub struct KmCurve {
    event_times: Vec<f64>,
    survival: Vec<f64>,
    at_risk: Vec<u64>,
    n_total: u64,
    last_observed: f64,
    reaches_zero: bool,
}

impl KmCurve {
    /// Builds a curve from its parts, checking the step-function invariants.
    pub fn from_steps(
        event_times: Vec<f64>,
        survival: Vec<f64>,
        at_risk: Vec<u64>,
        n_total: u64,
        last_observed: f64,
    ) -> Result<Self, DomainError> {
        if event_times.len() != survival.len() || event_times.len() != at_risk.len() {
            return Err(DomainError::new(
                "curve",
                event_times.len() as f64,
                "event_times, survival and at_risk must have equal length",
            ));
        }
        if event_times.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            return Err(DomainError::text("event_times", "..", "must be strictly increasing"));
        }
        if let Some(&t) = event_times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(DomainError::new("event_time", t, "must be finite and non-negative"));
        }
        let mut prev = 1.0;
        for &s in &survival {
            if !(0.0..=prev).contains(&s) {
                return Err(DomainError::new("survival", s, "must be non-increasing within [0, 1]"));
            }
            prev = s;
        }
        if at_risk.contains(&0) {
            return Err(DomainError::text("at_risk", "0", "counts must be positive"));
        }
        let last_observed = event_times.last().map_or(last_observed, |&t| last_observed.max(t));
        Ok(Self::assemble(event_times, survival, at_risk, n_total, last_observed))
    }

    pub(crate) fn assemble(
        event_times: Vec<f64>,
        survival: Vec<f64>,
        at_risk: Vec<u64>,
        n_total: u64,
        last_observed: f64,
    ) -> Self {
        let reaches_zero = survival.last().is_some_and(|&s| s == 0.0);
        Self {
            event_times,
            survival,
            at_risk,
            n_total,
            last_observed,
            reaches_zero,
        }
    }

    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    pub fn survival(&self) -> &[f64] {
        &self.survival
    }

    pub fn at_risk(&self) -> &[u64] {
        &self.at_risk
    }

    /// Number of records the curve was fitted on.
    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    /// Largest observed time (failure or censored) among the fitted records.
    pub fn last_observed(&self) -> f64 {
        self.last_observed
    }

    pub fn reaches_zero(&self) -> bool {
        self.reaches_zero
    }

    pub fn len(&self) -> usize {
        self.event_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_times.is_empty()
    }

    /// Survival value just after the last event (1 when there are no events).
    pub fn final_survival(&self) -> f64 {
        self.survival.last().copied().unwrap_or(1.0)
    }

    /// Right-continuous step lookup without argument checks.
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.event_times.partition_point(|&e| e <= t);
        if idx == 0 {
            1.0
        } else {
            self.survival[idx - 1]
        }
    }
}

/// Result of a survival query. `extrapolated` is set when `t` lies beyond the
/// last observed time and the value is the curve's final level held constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurvivalEstimate {
    pub survival: f64,
    pub extrapolated: bool,
}

/// Sorts the included records by time and collapses ties into
/// `(time, failures, censored)` groups.
pub fn aggregate_ties(records: &[SubjectRecord], policy: CensoringPolicy) -> Vec<TimeGroup> {
    // `+ 0.0` folds -0.0 into 0.0 so that total_cmp does not split them.
    let mut keyed: Vec<(f64, bool)> = records
        .iter()
        .filter(|r| policy.includes(r.status))
        .map(|r| (r.time + 0.0, r.status.is_failure()))
        .collect();
    if keyed.len() >= PARALLEL_SORT_MIN {
        keyed.par_sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    } else {
        keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    }

    let mut groups: Vec<TimeGroup> = Vec::new();
    for (time, failed) in keyed {
        match groups.last_mut() {
            Some(g) if g.time == time => {
                if failed {
                    g.failures += 1;
                } else {
                    g.censored += 1;
                }
            }
            _ => groups.push(TimeGroup {
                time,
                failures: u64::from(failed),
                censored: u64::from(!failed),
            }),
        }
    }
    groups
}

/// Fits the product-limit estimator.
///
/// At a tied time, failures are counted against a risk set that still
/// contains the records censored at that same time.
pub fn fit_km(data: &SurvivalDataset, policy: CensoringPolicy) -> Result<KmCurve, EstimationError> {
    if data.is_empty() {
        return Err(EstimationError::EmptyDataset);
    }
    let groups = aggregate_ties(data.records(), policy);
    if groups.is_empty() {
        return Err(EstimationError::OnlyDropouts);
    }
    let n_total: u64 = groups.iter().map(|g| g.failures + g.censored).sum();
    let last_observed = groups.last().map_or(0.0, |g| g.time);

    let mut event_times = Vec::new();
    let mut survival = Vec::new();
    let mut at_risk = Vec::new();
    let mut remaining = n_total;
    let mut s = 1.0;
    for g in &groups {
        if g.failures > 0 {
            s *= 1.0 - g.failures as f64 / remaining as f64;
            event_times.push(g.time);
            survival.push(s);
            at_risk.push(remaining);
        }
        remaining -= g.failures + g.censored;
    }
    Ok(KmCurve::assemble(event_times, survival, at_risk, n_total, last_observed))
}

pub fn survival_at(curve: &KmCurve, t: f64) -> Result<SurvivalEstimate, DomainError> {
    if t.is_nan() || t < 0.0 {
        return Err(DomainError::new("t", t, "must be non-negative"));
    }
    Ok(SurvivalEstimate {
        survival: curve.value_at(t),
        extrapolated: t > curve.last_observed,
    })
}

/// Earliest event time at which the curve is at or below one half.
pub fn median_survival(curve: &KmCurve) -> Option<f64> {
    curve
        .survival
        .iter()
        .position(|&s| s <= MEDIAN_LEVEL + MEDIAN_SLACK)
        .map(|i| curve.event_times[i])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapAt {
    pub time: f64,
    pub all_subjects: f64,
    pub no_dropout: f64,
    pub gap: f64,
}

/// The all-subjects fit next to the dropout-excluded fit.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityReport {
    pub curve_all: KmCurve,
    pub curve_no_dropout: KmCurve,
    pub max_abs_gap: f64,
    pub gaps: Vec<GapAt>,
}

pub fn dropout_sensitivity(
    data: &SurvivalDataset,
    eval_times: &[f64],
) -> Result<SensitivityReport, EstimationError> {
    let curve_all = fit_km(data, CensoringPolicy::AllCensoredEqual)?;
    let curve_no_dropout = fit_km(data, CensoringPolicy::ExcludeDropouts)?;
    let mut gaps = Vec::with_capacity(eval_times.len());
    for &t in eval_times {
        let all = survival_at(&curve_all, t)?.survival;
        let excl = survival_at(&curve_no_dropout, t)?.survival;
        gaps.push(GapAt {
            time: t,
            all_subjects: all,
            no_dropout: excl,
            gap: (all - excl).abs(),
        });
    }
    let max_abs_gap = gaps.iter().map(|g| g.gap).fold(0.0, f64::max);
    Ok(SensitivityReport {
        curve_all,
        curve_no_dropout,
        max_abs_gap,
        gaps,
    })
}
