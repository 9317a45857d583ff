//! Seeded random streams and the handful of samplers the simulations need.
//!
//! Every stream is a ChaCha8 generator keyed by the run seed (expanded with
//! `SeedableRng::seed_from_u64`) and positioned on a ChaCha stream selected by
//! `stream_id`. Scenario generators give each subject its own stream id, so
//! the generated data depend only on `(seed, subject index)` and never on how
//! the work is split across threads.
//!
//! Beta variates are produced with the gamma-ratio method: `X / (X + Y)` with
//! `X ~ Gamma(alpha)` and `Y ~ Gamma(beta)`, each drawn with Marsaglia and
//! Tsang's squeeze method (boosted for shapes below one). Normal deviates for
//! the squeeze come from Marsaglia's polar method.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::DomainError;

/// A deterministic random stream identified by `(seed, stream_id)`.
///
/// A stream is single-owner; parallel code creates one stream per work item.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn next_unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn next_open_unit(&mut self) -> f64 {
        // Offsetting by half an ulp of the 52-bit grid keeps both ends open.
        ((self.rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

pub fn make_stream(seed: u64, stream_id: u64) -> RandomStream {
    RandomStream::new(seed, stream_id)
}

/// All streams of one seed. `family.stream(id)` is identical to
/// `make_stream(seed, id)` but skips re-expanding the seed for every subject.
#[derive(Clone, Debug)]
pub struct StreamFamily {
    seed: u64,
    base: ChaCha8Rng,
}

impl StreamFamily {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, stream_id: u64) -> RandomStream {
        let mut rng = self.base.clone();
        rng.set_stream(stream_id);
        RandomStream {
            seed: self.seed,
            stream_id,
            rng,
        }
    }
}

/// Shape parameters of a beta law; both strictly positive and finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaShape {
    alpha: f64,
    beta: f64,
}

impl BetaShape {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, DomainError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(DomainError::new("alpha", alpha, "must be a positive finite number"));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(DomainError::new("beta", beta, "must be a positive finite number"));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// The law of the fraction `u` of a subject's failure time at which it drops out.
///
/// Only laws supported on `(0, 1)` are representable. `Beta(a, b)` uses the
/// usual parameterization with mean `a / (a + b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DropoutSpec {
    UnitUniform,
    Beta(BetaShape),
}

impl DropoutSpec {
    pub fn beta(alpha: f64, beta: f64) -> Result<Self, DomainError> {
        BetaShape::new(alpha, beta).map(DropoutSpec::Beta)
    }

    pub fn mean(&self) -> f64 {
        match self {
            DropoutSpec::UnitUniform => 0.5,
            DropoutSpec::Beta(shape) => shape.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            DropoutSpec::UnitUniform => 1.0 / 12.0,
            DropoutSpec::Beta(s) => {
                let (a, b) = (s.alpha, s.beta);
                a * b / ((a + b) * (a + b) * (a + b + 1.0))
            }
        }
    }
}

impl fmt::Display for DropoutSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropoutSpec::UnitUniform => f.write_str("uniform"),
            DropoutSpec::Beta(s) => write!(f, "beta:{},{}", s.alpha, s.beta),
        }
    }
}

impl FromStr for DropoutSpec {
    type Err = DomainError;

    /// Accepts `uniform` or `beta:A,B`, ignoring ASCII case and surrounding spaces.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let lowered = text.trim().to_ascii_lowercase();
        if lowered == "uniform" {
            return Ok(DropoutSpec::UnitUniform);
        }
        let bad = || DomainError::text("dropout", text, "expected `uniform` or `beta:A,B`");
        let params = lowered.strip_prefix("beta:").ok_or_else(bad)?;
        let (a, b) = params.split_once(',').ok_or_else(bad)?;
        let alpha: f64 = a.trim().parse().map_err(|_| bad())?;
        let beta: f64 = b.trim().parse().map_err(|_| bad())?;
        DropoutSpec::beta(alpha, beta)
    }
}

/// Inverse CDF of `Exp(lambda)`: maps `u` in `[0, 1)` to `-ln(1 - u) / lambda`.
pub fn exponential_quantile(u: f64, lambda: f64) -> Result<f64, DomainError> {
    check_rate(lambda)?;
    if !(0.0..1.0).contains(&u) {
        return Err(DomainError::new("u", u, "must lie in [0, 1)"));
    }
    Ok(-(-u).ln_1p() / lambda)
}

pub fn sample_exponential(s: &mut RandomStream, lambda: f64) -> Result<f64, DomainError> {
    check_rate(lambda)?;
    let u = s.next_unit();
    Ok(-(-u).ln_1p() / lambda)
}

/// One draw of the dropout fraction `u ~ x`, always strictly inside `(0, 1)`.
pub fn sample_unit_fraction(s: &mut RandomStream, x: &DropoutSpec) -> f64 {
    match x {
        DropoutSpec::UnitUniform => s.next_open_unit(),
        DropoutSpec::Beta(shape) => sample_beta(s, shape.alpha, shape.beta),
    }
}

/// Uniform on `[lo, hi)`.
pub fn sample_uniform_interval(s: &mut RandomStream, lo: f64, hi: f64) -> Result<f64, DomainError> {
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(DomainError::new(
            "interval",
            hi - lo,
            "requires finite bounds with lo < hi",
        ));
    }
    loop {
        let x = lo + s.next_unit() * (hi - lo);
        if x < hi {
            return Ok(x);
        }
    }
}

/// Scales a dropout fraction onto a failure time, keeping the result strictly
/// below `failure_time` whenever `failure_time > 0`.
pub fn scale_dropout(u: f64, failure_time: f64) -> Result<f64, DomainError> {
    check_time(failure_time)?;
    if !(u > 0.0 && u < 1.0) {
        return Err(DomainError::new("u", u, "must lie in (0, 1)"));
    }
    let d = u * failure_time;
    if failure_time > 0.0 && d >= failure_time {
        return Ok(failure_time.next_down());
    }
    Ok(d)
}

pub fn sample_dropout_time(
    s: &mut RandomStream,
    x: &DropoutSpec,
    failure_time: f64,
) -> Result<f64, DomainError> {
    check_time(failure_time)?;
    let u = sample_unit_fraction(s, x);
    scale_dropout(u, failure_time)
}

fn check_rate(lambda: f64) -> Result<(), DomainError> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(DomainError::new("lambda", lambda, "must be a positive finite rate"))
    }
}

fn check_time(t: f64) -> Result<(), DomainError> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(DomainError::new("failure_time", t, "must be finite and non-negative"))
    }
}

fn sample_beta(s: &mut RandomStream, alpha: f64, beta: f64) -> f64 {
    loop {
        let x = sample_gamma(s, alpha);
        let y = sample_gamma(s, beta);
        let sum = x + y;
        if sum > 0.0 && sum.is_finite() {
            let u = x / sum;
            if u > 0.0 && u < 1.0 {
                return u;
            }
        }
    }
}

/// Standard gamma variate of the given shape (unit scale).
fn sample_gamma(s: &mut RandomStream, shape: f64) -> f64 {
    if shape < 1.0 {
        // Gamma(a) = Gamma(a + 1) * U^(1/a)
        let boost = s.next_open_unit().powf(1.0 / shape);
        return sample_gamma(s, shape + 1.0) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z = sample_standard_normal(s);
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = s.next_open_unit();
        let z2 = z * z;
        if u < 1.0 - 0.0331 * z2 * z2 {
            return d * v;
        }
        if u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

fn sample_standard_normal(s: &mut RandomStream) -> f64 {
    loop {
        let x = 2.0 * s.next_unit() - 1.0;
        let y = 2.0 * s.next_unit() - 1.0;
        let r2 = x * x + y * y;
        if r2 > 0.0 && r2 < 1.0 {
            return x * (-2.0 * r2.ln() / r2).sqrt();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{Beta, ContinuousCDF};

    fn moments(mut draw: impl FnMut() -> f64, n: usize) -> (f64, f64) {
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let x = draw();
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        (mean, sq / n as f64 - mean * mean)
    }

    #[test]
    fn same_seed_and_stream_repeat() {
        let mut a = make_stream(42, 0);
        let mut b = make_stream(42, 0);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn first_draws_are_frozen() {
        // Regression fixture for ChaCha8 keyed by seed_from_u64(42).
        let a = make_stream(42, 0).next_unit();
        let b = make_stream(42, 1).next_unit();
        assert_ne!(a, b);
        assert_eq!(a.to_bits(), FIXTURE_42_0);
        assert_eq!(b.to_bits(), FIXTURE_42_1);
    }

    const FIXTURE_42_0: u64 = 0x3fe5_d217_f6a7_2bab;
    const FIXTURE_42_1: u64 = 0x3fe6_eff5_0c31_b93d;

    #[test]
    fn family_matches_make_stream() {
        let family = StreamFamily::new(42);
        for id in [0, 1, 7, 1_000_000, u64::MAX] {
            let mut a = family.stream(id);
            let mut b = make_stream(42, id);
            for _ in 0..40 {
                assert_eq!(a.next_u64(), b.next_u64());
            }
        }
    }

    #[test]
    fn stream_does_not_depend_on_thread() {
        let here: Vec<u64> = {
            let mut s = make_stream(42, 7);
            (0..16).map(|_| s.next_u64()).collect()
        };
        let there = std::thread::spawn(|| {
            let mut s = make_stream(42, 7);
            (0..16).map(|_| s.next_u64()).collect::<Vec<_>>()
        })
        .join()
        .unwrap();
        assert_eq!(here, there);
    }

    #[test]
    fn exponential_quantile_boundaries() {
        let ln2 = std::f64::consts::LN_2;
        assert!((exponential_quantile(0.5, ln2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(exponential_quantile(0.0, 3.0).unwrap(), 0.0);
        assert!(exponential_quantile(1e-300, 1.0).unwrap() < 1e-299);
        assert!(exponential_quantile(0.5, 0.0).is_err());
        assert!(sample_exponential(&mut make_stream(1, 1), -1.0).is_err());
    }

    #[test]
    fn exponential_mean() {
        let mut s = make_stream(3, 0);
        let (mean, _) = moments(|| sample_exponential(&mut s, 2.0).unwrap(), 1_000_000);
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn unit_fraction_means() {
        let cases = [
            (DropoutSpec::UnitUniform, 0.5),
            (DropoutSpec::beta(5.0, 2.0).unwrap(), 5.0 / 7.0),
            (DropoutSpec::beta(2.0, 5.0).unwrap(), 2.0 / 7.0),
        ];
        for (i, (spec, want)) in cases.iter().enumerate() {
            let mut s = make_stream(11, i as u64);
            let n = 1_000_000;
            let (mean, var) = moments(|| sample_unit_fraction(&mut s, spec), n);
            assert!((mean - want).abs() < 0.001, "{spec}: mean {mean}");
            let se = (spec.variance() / n as f64).sqrt();
            assert!((mean - want).abs() < 5.0 * se, "{spec}: {mean} vs {want}");
            // Variance check: the sample variance has SE about var * sqrt(2/n) for these laws.
            let var_se = spec.variance() * (2.0 / n as f64).sqrt() * 2.0;
            assert!((var - spec.variance()).abs() < 5.0 * var_se, "{spec}: var {var}");
        }
    }

    #[test]
    fn unit_fraction_stays_open() {
        let specs = [
            DropoutSpec::UnitUniform,
            DropoutSpec::beta(0.05, 0.05).unwrap(),
            DropoutSpec::beta(200.0, 0.3).unwrap(),
        ];
        for spec in &specs {
            let mut s = make_stream(5, 0);
            for _ in 0..100_000 {
                let u = sample_unit_fraction(&mut s, spec);
                assert!(u > 0.0 && u < 1.0, "{spec} produced {u}");
            }
        }
    }

    #[test]
    fn beta_cdf_sup_norm() {
        let n = 1_000_000;
        let spec = DropoutSpec::beta(5.0, 2.0).unwrap();
        let mut s = make_stream(2024, 0);
        let mut draws: Vec<f64> = (0..n).map(|_| sample_unit_fraction(&mut s, &spec)).collect();
        draws.sort_by(f64::total_cmp);
        let law = Beta::new(5.0, 2.0).unwrap();
        let mut sup: f64 = 0.0;
        for (i, &x) in draws.iter().enumerate() {
            let f = law.cdf(x);
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            sup = sup.max((f - lo).abs()).max((f - hi).abs());
        }
        assert!(sup <= 0.005, "sup-norm {sup}");
    }

    #[test]
    fn uniform_interval() {
        let mut s = make_stream(9, 0);
        let (mean, _) = moments(|| sample_uniform_interval(&mut s, 0.0, 3.0).unwrap(), 1_000_000);
        assert!((mean - 1.5).abs() < 0.003);
        for _ in 0..10_000 {
            let x = sample_uniform_interval(&mut s, 2.5, 3.0).unwrap();
            assert!((2.5..3.0).contains(&x));
        }
        assert!(sample_uniform_interval(&mut s, 1.0, 1.0).is_err());
        assert!(sample_uniform_interval(&mut s, 2.0, 1.0).is_err());
    }

    #[test]
    fn dropout_time() {
        let mut s = make_stream(1, 0);
        assert_eq!(sample_dropout_time(&mut s, &DropoutSpec::UnitUniform, 0.0).unwrap(), 0.0);
        assert_eq!(scale_dropout(0.5, 2.0).unwrap(), 1.0);
        assert!(sample_dropout_time(&mut s, &DropoutSpec::UnitUniform, -1.0).is_err());
        // The largest fraction below one must still land strictly before the failure.
        let u = 1.0f64.next_down();
        for t in [0.3, 1.0, 7.77, 1e9] {
            assert!(scale_dropout(u, t).unwrap() < t);
        }
        let (mean, _) = moments(
            || sample_dropout_time(&mut s, &DropoutSpec::UnitUniform, 4.0).unwrap(),
            1_000_000,
        );
        assert!((mean - 2.0).abs() < 0.01);
    }

    #[test]
    fn parse_dropout_spec() {
        assert_eq!("uniform".parse::<DropoutSpec>().unwrap(), DropoutSpec::UnitUniform);
        assert_eq!("UNIFORM".parse::<DropoutSpec>().unwrap(), DropoutSpec::UnitUniform);
        assert_eq!(
            "Beta:5,2".parse::<DropoutSpec>().unwrap(),
            DropoutSpec::beta(5.0, 2.0).unwrap()
        );
        assert_eq!(
            " beta:2, 5 ".parse::<DropoutSpec>().unwrap(),
            DropoutSpec::beta(2.0, 5.0).unwrap()
        );
        for bad in ["beta", "beta:1", "beta:0,2", "beta:-1,2", "gamma:1,1", "beta:a,b"] {
            assert!(bad.parse::<DropoutSpec>().is_err(), "{bad}");
        }
        let spec = DropoutSpec::beta(5.0, 2.0).unwrap();
        assert_eq!(spec.to_string().parse::<DropoutSpec>().unwrap(), spec);
    }
}
