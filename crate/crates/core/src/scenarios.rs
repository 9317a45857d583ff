//! The four censoring scenarios and the summary each simulated table reports.
//!
//! Failure times are `Exp(lambda)`. Study lengths are given in multiples of
//! the actual median survival time (`ams = ln 2 / lambda`); with the default
//! `lambda = ln 2` one ams is one time unit.
//!
//! Subject `i` draws from stream `(seed, i)` in a fixed order: its failure
//! time, then its study observation time (scenarios 2 to 4), then its dropout
//! fraction (only if selected for dropout). The dropout subset comes from the
//! reserved stream [`SELECTION_STREAM`]. The output never depends on the
//! number of worker threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{ConfigError, EstimationError};
use crate::rand_dist::{
    make_stream, sample_exponential, sample_uniform_interval, scale_dropout, sample_unit_fraction,
    DropoutSpec, StreamFamily,
};
use crate::survival::{
    censoring_breakdown, fit_km, median_survival, survival_at, CensoringPolicy, KmCurve,
    SubjectRecord, SurvivalDataset,
};

/// Stream id reserved for choosing which subjects drop out.
pub const SELECTION_STREAM: u64 = u64::MAX;

pub const DEFAULT_LAMBDA: f64 = std::f64::consts::LN_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    /// Dropout only; no study end.
    S1,
    /// Administrative censoring with entry over the whole study.
    S2,
    /// Administrative censoring with entry during the recruitment window.
    S3,
    /// Dropout plus administrative censoring with a recruitment window.
    S4,
}

impl ScenarioId {
    pub fn number(self) -> u8 {
        match self {
            ScenarioId::S1 => 1,
            ScenarioId::S2 => 2,
            ScenarioId::S3 => 3,
            ScenarioId::S4 => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(ScenarioId::S1),
            2 => Some(ScenarioId::S2),
            3 => Some(ScenarioId::S3),
            4 => Some(ScenarioId::S4),
            _ => None,
        }
    }

    fn uses_dropout(self) -> bool {
        matches!(self, ScenarioId::S1 | ScenarioId::S4)
    }

    fn uses_study(self) -> bool {
        !matches!(self, ScenarioId::S1)
    }

    fn uses_recruitment(self) -> bool {
        matches!(self, ScenarioId::S3 | ScenarioId::S4)
    }
}

/// Everything needed to reproduce one simulated dataset.
///
/// `t_study` and `t_recruitment` are in ams units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    pub n: u64,
    pub p: Option<f64>,
    pub dropout: Option<DropoutSpec>,
    pub lambda: f64,
    pub t_study: Option<f64>,
    pub t_recruitment: Option<f64>,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn scenario1(n: u64, p: f64, dropout: DropoutSpec, seed: u64) -> Self {
        Self {
            scenario: ScenarioId::S1,
            n,
            p: Some(p),
            dropout: Some(dropout),
            lambda: DEFAULT_LAMBDA,
            t_study: None,
            t_recruitment: None,
            seed,
        }
    }

    pub fn scenario2(n: u64, t_study: f64, seed: u64) -> Self {
        Self {
            scenario: ScenarioId::S2,
            n,
            p: None,
            dropout: None,
            lambda: DEFAULT_LAMBDA,
            t_study: Some(t_study),
            t_recruitment: None,
            seed,
        }
    }

    pub fn scenario3(n: u64, t_study: f64, t_recruitment: f64, seed: u64) -> Self {
        Self {
            scenario: ScenarioId::S3,
            t_recruitment: Some(t_recruitment),
            ..Self::scenario2(n, t_study, seed)
        }
    }

    pub fn scenario4(
        n: u64,
        p: f64,
        dropout: DropoutSpec,
        t_study: f64,
        t_recruitment: f64,
        seed: u64,
    ) -> Self {
        Self {
            scenario: ScenarioId::S4,
            p: Some(p),
            dropout: Some(dropout),
            ..Self::scenario3(n, t_study, t_recruitment, seed)
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// The actual median survival time, `ln 2 / lambda`.
    pub fn ams(&self) -> f64 {
        std::f64::consts::LN_2 / self.lambda
    }

    /// Number of subjects selected for dropout: `floor(p * n + 0.5)`.
    pub fn dropout_count(&self) -> u64 {
        let p = self.p.unwrap_or(0.0);
        ((p * self.n as f64 + 0.5).floor() as u64).min(self.n)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let sc = self.scenario;
        if self.n == 0 {
            return Err(ConfigError::new("n", "must be a positive integer"));
        }
        if usize::try_from(self.n).is_err() {
            return Err(ConfigError::new("n", "too large for this platform"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(ConfigError::new("lambda", format!("{} is not a positive rate", self.lambda)));
        }
        check_presence("p", self.p.is_some(), sc.uses_dropout(), sc)?;
        check_presence("dropout", self.dropout.is_some(), sc.uses_dropout(), sc)?;
        check_presence("t-study", self.t_study.is_some(), sc.uses_study(), sc)?;
        check_presence("t-recruitment", self.t_recruitment.is_some(), sc.uses_recruitment(), sc)?;
        if let Some(p) = self.p {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::new("p", format!("{p} is not a proportion in [0, 1]")));
            }
        }
        if let Some(t) = self.t_study {
            if !(t.is_finite() && t > 0.0) {
                return Err(ConfigError::new("t-study", format!("{t} is not a positive length")));
            }
        }
        if let Some(r) = self.t_recruitment {
            if !(r.is_finite() && r > 0.0) {
                return Err(ConfigError::new(
                    "t-recruitment",
                    format!("{r} is not a positive length"),
                ));
            }
            if r > self.t_study.unwrap_or(f64::INFINITY) {
                return Err(ConfigError::new(
                    "t-recruitment",
                    format!("{r} exceeds the study length"),
                ));
            }
        }
        Ok(())
    }

    /// Window `[lo, hi)` of study observation times, in time units.
    fn observation_window(&self) -> Option<(f64, f64)> {
        let ams = self.ams();
        let t = self.t_study? * ams;
        let r = self.t_recruitment.map_or(t, |r| r * ams);
        Some((t - r, t))
    }
}

fn check_presence(
    field: &'static str,
    present: bool,
    required: bool,
    sc: ScenarioId,
) -> Result<(), ConfigError> {
    match (present, required) {
        (false, true) => Err(ConfigError::new(
            field,
            format!("required by scenario {}", sc.number()),
        )),
        (true, false) => Err(ConfigError::new(
            field,
            format!("not used by scenario {}", sc.number()),
        )),
        _ => Ok(()),
    }
}

/// Flat `key = value` form using the CLI flag names as keys.
impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario = {}", self.scenario.number())?;
        writeln!(f, "n = {}", self.n)?;
        if let Some(p) = self.p {
            writeln!(f, "p = {p}")?;
        }
        if let Some(x) = &self.dropout {
            writeln!(f, "dropout = {x}")?;
        }
        writeln!(f, "lambda = {}", self.lambda)?;
        if let Some(t) = self.t_study {
            writeln!(f, "t-study = {t}")?;
        }
        if let Some(r) = self.t_recruitment {
            writeln!(f, "t-recruitment = {r}")?;
        }
        writeln!(f, "seed = {}", self.seed)
    }
}

impl FromStr for ScenarioConfig {
    type Err = ConfigError;

    /// Parses the `key = value` form. `#` starts a comment; `lambda` defaults
    /// to `ln 2`; `seed` defaults to 0.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut scenario = None;
        let mut cfg = ScenarioConfig {
            scenario: ScenarioId::S1,
            n: 0,
            p: None,
            dropout: None,
            lambda: DEFAULT_LAMBDA,
            t_study: None,
            t_recruitment: None,
            seed: 0,
        };
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new("config", format!("expected `key = value`, got `{line}`")))?;
            let value = value.trim();
            match key.trim() {
                "scenario" => {
                    let id = value
                        .parse::<u8>()
                        .ok()
                        .and_then(ScenarioId::from_number)
                        .ok_or_else(|| ConfigError::new("scenario", format!("`{value}` is not 1, 2, 3 or 4")))?;
                    scenario = Some(id);
                }
                "n" => cfg.n = parse_field("n", value)?,
                "p" => cfg.p = Some(parse_field("p", value)?),
                "dropout" => {
                    cfg.dropout = Some(
                        value
                            .parse()
                            .map_err(|e: crate::error::DomainError| ConfigError::new("dropout", e.to_string()))?,
                    )
                }
                "lambda" => cfg.lambda = parse_field("lambda", value)?,
                "t-study" => cfg.t_study = Some(parse_field("t-study", value)?),
                "t-recruitment" => cfg.t_recruitment = Some(parse_field("t-recruitment", value)?),
                "seed" => cfg.seed = parse_field("seed", value)?,
                other => {
                    return Err(ConfigError::new("config", format!("unknown key `{other}`")));
                }
            }
        }
        cfg.scenario = scenario.ok_or_else(|| ConfigError::new("scenario", "missing"))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_field<T: FromStr>(field: &'static str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::new(field, format!("cannot parse `{value}`")))
}

/// Dispatches on `cfg.scenario`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SurvivalDataset, ConfigError> {
    match cfg.scenario {
        ScenarioId::S1 => run_scenario1(cfg),
        ScenarioId::S2 => run_scenario2(cfg),
        ScenarioId::S3 => run_scenario3(cfg),
        ScenarioId::S4 => run_scenario4(cfg),
    }
}

fn expect(cfg: &ScenarioConfig, id: ScenarioId) -> Result<(), ConfigError> {
    if cfg.scenario != id {
        return Err(ConfigError::new(
            "scenario",
            format!("expected {}, got {}", id.number(), cfg.scenario.number()),
        ));
    }
    cfg.validate()
}

/// Marks `round(p * n)` subjects, chosen uniformly without replacement.
fn dropout_mask(cfg: &ScenarioConfig) -> Vec<bool> {
    let n = cfg.n as usize;
    let k = cfg.dropout_count() as usize;
    let mut mask = vec![false; n];
    if k == 0 {
        return mask;
    }
    let mut rng = make_stream(cfg.seed, SELECTION_STREAM);
    for i in rand::seq::index::sample(&mut rng, n, k) {
        mask[i] = true;
    }
    mask
}

/// Runs `subject(i, stream)` for every subject in index order.
fn generate<F>(cfg: &ScenarioConfig, subject: F) -> SurvivalDataset
where
    F: Fn(usize, &mut crate::rand_dist::RandomStream) -> SubjectRecord + Sync,
{
    let family = StreamFamily::new(cfg.seed);
    let records: Vec<SubjectRecord> = (0..cfg.n as usize)
        .into_par_iter()
        .with_min_len(4096)
        .map(|i| subject(i, &mut family.stream(i as u64)))
        .collect();
    SurvivalDataset::from_trusted(records, *cfg)
}

/// Dropout only: a proportion `p` of subjects is censored at `u * T_i`.
pub fn run_scenario1(cfg: &ScenarioConfig) -> Result<SurvivalDataset, ConfigError> {
    expect(cfg, ScenarioId::S1)?;
    let lambda = cfg.lambda;
    let spec = cfg.dropout.expect("validated");
    let mask = dropout_mask(cfg);
    Ok(generate(cfg, |i, s| {
        let t = sample_exponential(s, lambda).expect("validated rate");
        if mask[i] {
            let u = sample_unit_fraction(s, &spec);
            SubjectRecord::dropout(scale_dropout(u, t).expect("valid fraction"))
        } else {
            SubjectRecord::failure(t)
        }
    }))
}

fn administrative_only(cfg: &ScenarioConfig) -> SurvivalDataset {
    let lambda = cfg.lambda;
    let (lo, hi) = cfg.observation_window().expect("validated");
    generate(cfg, |_, s| {
        let t = sample_exponential(s, lambda).expect("validated rate");
        let e = sample_uniform_interval(s, lo, hi).expect("validated window");
        if t - e > 0.0 {
            SubjectRecord::administrative(e)
        } else {
            SubjectRecord::failure(t)
        }
    })
}

/// Administrative censoring at `E_i ~ U(0, T_study)` when the subject outlives it.
pub fn run_scenario2(cfg: &ScenarioConfig) -> Result<SurvivalDataset, ConfigError> {
    expect(cfg, ScenarioId::S2)?;
    Ok(administrative_only(cfg))
}

/// As scenario 2 with `E_i ~ U(T_study - T_recruitment, T_study)`.
pub fn run_scenario3(cfg: &ScenarioConfig) -> Result<SurvivalDataset, ConfigError> {
    expect(cfg, ScenarioId::S3)?;
    Ok(administrative_only(cfg))
}

/// Scenario 1's dropout assignment followed by scenario 3's study end. A
/// subject whose failure or dropout time exceeds `E_i` is administratively
/// censored at `E_i`.
pub fn run_scenario4(cfg: &ScenarioConfig) -> Result<SurvivalDataset, ConfigError> {
    expect(cfg, ScenarioId::S4)?;
    let lambda = cfg.lambda;
    let spec = cfg.dropout.expect("validated");
    let (lo, hi) = cfg.observation_window().expect("validated");
    let mask = dropout_mask(cfg);
    Ok(generate(cfg, |i, s| {
        let t = sample_exponential(s, lambda).expect("validated rate");
        let e = sample_uniform_interval(s, lo, hi).expect("validated window");
        let candidate = if mask[i] {
            let u = sample_unit_fraction(s, &spec);
            SubjectRecord::dropout(scale_dropout(u, t).expect("valid fraction"))
        } else {
            SubjectRecord::failure(t)
        };
        if candidate.time - e > 0.0 {
            SubjectRecord::administrative(e)
        } else {
            candidate
        }
    }))
}

/// The per-run quantities the reference tables report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationSummary {
    pub n: u64,
    pub pct_censored_total: f64,
    pub pct_dropout: f64,
    pub pct_administrative: f64,
    pub pct_failures: f64,
    /// Estimated survival at the actual median survival time.
    pub s_at_ams: f64,
    /// Set when ams lies beyond the last observed time.
    pub s_at_ams_extrapolated: bool,
    /// Estimated median over actual median; `None` when the curve never reaches 0.5.
    pub ms_over_ams: Option<f64>,
    pub ams: f64,
}

pub fn summarize(data: &SurvivalDataset, lambda: f64) -> Result<SimulationSummary, EstimationError> {
    let curve = fit_km(data, CensoringPolicy::AllCensoredEqual)?;
    summarize_curve(data, &curve, lambda)
}

/// As [`summarize`] for a curve that has already been fitted on `data`.
pub fn summarize_curve(
    data: &SurvivalDataset,
    curve: &KmCurve,
    lambda: f64,
) -> Result<SimulationSummary, EstimationError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(crate::error::DomainError::new("lambda", lambda, "must be a positive rate").into());
    }
    let ams = std::f64::consts::LN_2 / lambda;
    let breakdown = censoring_breakdown(data)?;
    let at_ams = survival_at(curve, ams)?;
    Ok(SimulationSummary {
        n: data.len() as u64,
        pct_censored_total: breakdown.pct_censored(),
        pct_dropout: breakdown.pct_dropout,
        pct_administrative: breakdown.pct_administrative,
        pct_failures: breakdown.pct_failures,
        s_at_ams: at_ams.survival,
        s_at_ams_extrapolated: at_ams.extrapolated,
        ms_over_ams: median_survival(curve).map(|m| m / ams),
        ams,
    })
}
