use kmbias::oracles::{brute_force_km, brute_force_km_with};
use kmbias::survival::{survival_at, CensoringPolicy, Status, SubjectRecord, SurvivalDataset};
use kmbias::fit_km;
use proptest::prelude::*;

fn status() -> impl Strategy<Value = Status> {
    prop_oneof![
        Just(Status::Failure),
        Just(Status::DropoutCensored),
        Just(Status::AdministrativeCensored),
    ]
}

/// Times on a coarse grid so that ties between failures and censorings are common.
fn dataset(max: usize) -> impl Strategy<Value = SurvivalDataset> {
    prop::collection::vec((0u32..12, status()), 1..=max).prop_map(|rows| {
        SurvivalDataset::new(
            rows.into_iter()
                .map(|(t, s)| SubjectRecord::new(t as f64 * 0.25, s).unwrap())
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_brute_force(d in dataset(20)) {
        prop_assert_eq!(fit_km(&d, CensoringPolicy::AllCensoredEqual).unwrap(), brute_force_km(&d).unwrap());
        let fast = fit_km(&d, CensoringPolicy::ExcludeDropouts);
        let slow = brute_force_km_with(&d, CensoringPolicy::ExcludeDropouts);
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn monotone_from_one(d in dataset(20)) {
        let c = fit_km(&d, CensoringPolicy::AllCensoredEqual).unwrap();
        let mut prev = 1.0;
        for &s in c.survival() {
            prop_assert!((0.0..=prev).contains(&s));
            prev = s;
        }
        if let Some(&first) = c.event_times().first() {
            if first > 0.0 {
                prop_assert_eq!(survival_at(&c, first * 0.5).unwrap().survival, 1.0);
            }
        }
    }

    #[test]
    fn right_continuous(d in dataset(20), frac in 0.0f64..0.99) {
        let c = fit_km(&d, CensoringPolicy::AllCensoredEqual).unwrap();
        let times = c.event_times();
        for (i, &t) in times.iter().enumerate() {
            let next = times.get(i + 1).copied().unwrap_or(t + 1.0);
            let eps = frac * (next - t);
            prop_assert_eq!(survival_at(&c, t).unwrap().survival, survival_at(&c, t + eps).unwrap().survival);
        }
    }

    #[test]
    fn uncensored_is_empirical_survivor(times in prop::collection::vec(0u32..12, 1..=20)) {
        let d = SurvivalDataset::new(times.iter().map(|&t| SubjectRecord::failure(t as f64)).collect()).unwrap();
        let c = fit_km(&d, CensoringPolicy::AllCensoredEqual).unwrap();
        let n = times.len() as f64;
        for (&t, &s) in c.event_times().iter().zip(c.survival()) {
            let beyond = times.iter().filter(|&&u| u as f64 > t).count() as f64;
            prop_assert!((s - beyond / n).abs() < 1e-12, "t={} s={} empirical={}", t, s, beyond / n);
        }
        prop_assert!(c.reaches_zero());
    }

    #[test]
    fn censoring_at_a_failure_time_keeps_it_at_risk(d in dataset(19), pick in any::<prop::sample::Index>()) {
        let base = fit_km(&d, CensoringPolicy::AllCensoredEqual).unwrap();
        prop_assume!(!base.is_empty());
        let i = pick.index(base.len());
        let t = base.event_times()[i];
        let mut rows = d.records().to_vec();
        rows.push(SubjectRecord::administrative(t));
        let more = fit_km(&SurvivalDataset::new(rows).unwrap(), CensoringPolicy::AllCensoredEqual).unwrap();
        let j = more.event_times().iter().position(|&u| u == t).unwrap();
        prop_assert_eq!(more.at_risk()[j], base.at_risk()[i] + 1);
    }

    #[test]
    fn exclusion_is_identity_without_dropouts(d in dataset(20)) {
        let rows: Vec<_> = d.records().iter().copied().filter(|r| r.status != Status::DropoutCensored).collect();
        prop_assume!(!rows.is_empty());
        let d = SurvivalDataset::new(rows).unwrap();
        prop_assert_eq!(
            fit_km(&d, CensoringPolicy::ExcludeDropouts).unwrap(),
            fit_km(&d, CensoringPolicy::AllCensoredEqual).unwrap()
        );
    }
}

#[test]
fn continuous_times_match_brute_force() {
    // Continuous times: ties are rare, so this covers the untied path on a larger input.
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let rows: Vec<SubjectRecord> = (0..5000)
        .map(|_| {
            let s = match (next() * 3.0) as u8 {
                0 => Status::Failure,
                1 => Status::DropoutCensored,
                _ => Status::AdministrativeCensored,
            };
            SubjectRecord::new(next() * 10.0, s).unwrap()
        })
        .collect();
    let d = SurvivalDataset::new(rows).unwrap();
    assert_eq!(fit_km(&d, CensoringPolicy::AllCensoredEqual).unwrap(), brute_force_km(&d).unwrap());
}
