//! Monte-Carlo-free cross-checks for the simulations and the estimator.
//!
//! * closed-form administrative censoring fractions for scenarios 2 and 3;
//! * the large-sample limit of the product-limit estimator under scenario 1's
//!   dependent dropout, by nested adaptive quadrature;
//! * a direct O(n^2) product-limit implementation sharing no code with
//!   [`crate::survival::fit_km`].

pub mod quadrature;

use statrs::function::beta::ln_beta;

use crate::error::{DomainError, EstimationError};
use crate::rand_dist::DropoutSpec;
use crate::survival::{CensoringPolicy, KmCurve, Status, SurvivalDataset};

use quadrature::integrate;

/// Absolute tolerance of the cumulative hazard at every grid point.
pub const LIMIT_TOLERANCE: f64 = 1e-6;

/// Input size above which [`brute_force_km`] refuses to run.
pub const BRUTE_FORCE_LIMIT: usize = 10_000;

// Below u = lambda * s / CLIP_EXPONENT the inner integrand is under
// exp(-CLIP_EXPONENT) times the density, so the omitted mass is < 2e-22.
const CLIP_EXPONENT: f64 = 50.0;

fn positive(name: &'static str, v: f64) -> Result<(), DomainError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(DomainError::new(name, v, "must be positive and finite"))
    }
}

/// Probability that an `Exp(lambda)` failure outlives a `U(0, t_study)`
/// observation time: `(1 - exp(-lambda T)) / (lambda T)`.
pub fn admin_fraction_s2(lambda: f64, t_study: f64) -> Result<f64, DomainError> {
    positive("lambda", lambda)?;
    positive("t_study", t_study)?;
    let x = lambda * t_study;
    Ok(-(-x).exp_m1() / x)
}

/// As [`admin_fraction_s2`] with observation time `U(T - R, T)`:
/// `(exp(-lambda (T - R)) - exp(-lambda T)) / (lambda R)`.
pub fn admin_fraction_s3(lambda: f64, t_study: f64, t_rec: f64) -> Result<f64, DomainError> {
    positive("lambda", lambda)?;
    positive("t_study", t_study)?;
    positive("t_rec", t_rec)?;
    if t_rec > t_study {
        return Err(DomainError::new("t_rec", t_rec, "must not exceed t_study"));
    }
    let x = lambda * t_rec;
    Ok((-lambda * t_study).exp() * x.exp_m1() / x)
}

/// A deterministic survival curve sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitCurve {
    pub grid: Vec<f64>,
    pub survival: Vec<f64>,
}

impl LimitCurve {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// First grid point at or below `level`.
    pub fn first_at_or_below(&self, level: f64) -> Option<f64> {
        self.survival
            .iter()
            .position(|&s| s <= level)
            .map(|i| self.grid[i])
    }
}

/// `n` equally spaced points covering `[0, t_max]`.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Density of the dropout fraction.
fn fraction_density(x: &DropoutSpec) -> impl Fn(f64) -> f64 {
    let (a, b, norm) = match x {
        DropoutSpec::UnitUniform => (1.0, 1.0, 0.0),
        DropoutSpec::Beta(s) => (s.alpha(), s.beta(), ln_beta(s.alpha(), s.beta())),
    };
    move |u: f64| {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        ((a - 1.0) * u.ln() + (b - 1.0) * (-u).ln_1p() - norm).exp()
    }
}

/// The scenario-1 large-sample hazard of the product-limit estimator.
struct Scenario1Limit<D> {
    density: D,
    p: f64,
    lambda: f64,
}

impl<D: Fn(f64) -> f64> Scenario1Limit<D> {
    /// `exp(lambda s) * P[u T >= s] = E_u[exp(-lambda s (1/u - 1))]`.
    fn scaled_dropout_tail(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 1.0;
        }
        let ls = self.lambda * s;
        let lo = (ls / (CLIP_EXPONENT + ls)).min(1.0);
        let f = |u: f64| (-ls * (1.0 / u - 1.0)).exp() * (self.density)(u);
        integrate(&f, lo, 1.0, LIMIT_TOLERANCE * 1e-4)
    }

    /// `(1-p) lambda exp(-lambda s) / Hbar(s)` with `exp(-lambda s)` divided out.
    fn hazard(&self, s: f64) -> f64 {
        let q = 1.0 - self.p;
        q * self.lambda / (q + self.p * self.scaled_dropout_tail(s))
    }

    fn cumulative(&self, a: f64, b: f64, tol: f64) -> f64 {
        integrate(&|s| self.hazard(s), a, b, tol)
    }
}

fn scenario1_limit(
    x: &DropoutSpec,
    p: f64,
    lambda: f64,
) -> Result<Scenario1Limit<impl Fn(f64) -> f64>, DomainError> {
    positive("lambda", lambda)?;
    if !(0.0..1.0).contains(&p) {
        return Err(DomainError::new("p", p, "must lie in [0, 1)"));
    }
    Ok(Scenario1Limit {
        density: fraction_density(x),
        p,
        lambda,
    })
}

/// Large-sample limit `exp(-Lambda(t))` of the product-limit estimator when a
/// proportion `p` of subjects drops out at `u T`, `u ~ x`, and the rest fail.
///
/// The cumulative hazard `Lambda(t) = int_0^t (1-p) lambda e^{-lambda s} / Hbar(s) ds`
/// uses `Hbar(s) = (1-p) e^{-lambda s} + p P[u T >= s]`; both integrals are
/// computed adaptively and `Lambda` is accumulated across the grid.
pub fn km_limit_scenario1(
    x: &DropoutSpec,
    p: f64,
    lambda: f64,
    grid: &[f64],
) -> Result<LimitCurve, DomainError> {
    let limit = scenario1_limit(x, p, lambda)?;
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DomainError::text("grid", "..", "must be increasing, finite and non-negative"));
    }
    // Segment tolerances add up to LIMIT_TOLERANCE at the last grid point.
    let span = grid.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let mut survival = Vec::with_capacity(grid.len());
    let mut cumulative = 0.0;
    let mut prev = 0.0;
    for &t in grid {
        cumulative += limit.cumulative(prev, t, LIMIT_TOLERANCE * (t - prev) / span);
        prev = t;
        survival.push((-cumulative).exp());
    }
    Ok(LimitCurve {
        grid: grid.to_vec(),
        survival,
    })
}

/// Time at which the scenario-1 limit curve crosses one half, by bisection.
pub fn km_limit_median_scenario1(x: &DropoutSpec, p: f64, lambda: f64) -> Result<f64, DomainError> {
    let limit = scenario1_limit(x, p, lambda)?;
    let target = std::f64::consts::LN_2;
    // The limiting hazard is at least (1-p) lambda, so the median is below this.
    let mut hi = target / ((1.0 - p) * lambda);
    let mut lo = 0.0;
    let mut at_lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let at_mid = at_lo + limit.cumulative(lo, mid, 1e-10);
        if at_mid >= target {
            hi = mid;
        } else {
            lo = mid;
            at_lo = at_mid;
        }
        if hi - lo < 1e-9 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Product-limit estimate straight from the definition: for each distinct
/// failure time, count failures at it and subjects still at risk by scanning
/// every record.
pub fn brute_force_km(data: &SurvivalDataset) -> Result<KmCurve, EstimationError> {
    brute_force_km_with(data, CensoringPolicy::AllCensoredEqual)
}

pub fn brute_force_km_with(
    data: &SurvivalDataset,
    policy: CensoringPolicy,
) -> Result<KmCurve, EstimationError> {
    if data.len() > BRUTE_FORCE_LIMIT {
        return Err(EstimationError::Oversize {
            limit: BRUTE_FORCE_LIMIT,
            got: data.len(),
        });
    }
    if data.is_empty() {
        return Err(EstimationError::EmptyDataset);
    }
    let kept: Vec<(f64, bool)> = data
        .records()
        .iter()
        .filter(|r| policy == CensoringPolicy::AllCensoredEqual || r.status != Status::DropoutCensored)
        .map(|r| (r.time, r.status == Status::Failure))
        .collect();
    if kept.is_empty() {
        return Err(EstimationError::OnlyDropouts);
    }

    let mut event_times = Vec::new();
    let mut survival = Vec::new();
    let mut at_risk = Vec::new();
    let mut s = 1.0;
    let mut previous: Option<f64> = None;
    loop {
        // smallest failure time strictly after the previous one
        let next = kept
            .iter()
            .filter(|(t, failed)| *failed && previous.is_none_or(|p| *t > p))
            .map(|(t, _)| *t)
            .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))));
        let Some(t) = next else { break };
        let d = kept.iter().filter(|(u, failed)| *failed && *u == t).count() as u64;
        let n = kept.iter().filter(|(u, _)| *u >= t).count() as u64;
        s *= 1.0 - d as f64 / n as f64;
        event_times.push(t + 0.0);
        survival.push(s);
        at_risk.push(n);
        previous = Some(t);
    }
    let last = kept.iter().map(|(t, _)| *t + 0.0).fold(0.0, f64::max);
    Ok(KmCurve::assemble(event_times, survival, at_risk, kept.len() as u64, last))
}
