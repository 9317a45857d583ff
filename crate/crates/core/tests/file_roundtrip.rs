use kmbias::io::{
    read_curve_file, read_dataset_file, write_dataset_file, write_km_curve_file, write_limit_curve_file,
    CurveFile,
};
use kmbias::oracles::{km_limit_scenario1, uniform_grid};
use kmbias::{censoring_breakdown, fit_km, run_scenario, CensoringPolicy, DropoutSpec, Error, ScenarioConfig};

#[test]
fn scenario4_dump_reads_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s4.csv");
    let cfg = ScenarioConfig::scenario4(20_000, 0.3, DropoutSpec::beta(2.0, 5.0).unwrap(), 3.0, 0.5, 9);
    let data = run_scenario(&cfg).unwrap();
    write_dataset_file(&path, &data).unwrap();
    let back = read_dataset_file(&path).unwrap();
    assert_eq!(back.records(), data.records());
    assert_eq!(censoring_breakdown(&back).unwrap(), censoring_breakdown(&data).unwrap());
    let fit = |d| fit_km(d, CensoringPolicy::AllCensoredEqual).unwrap();
    assert_eq!(fit(&back), fit(&data));
}

#[test]
fn curves_read_back_by_header() {
    let dir = tempfile::tempdir().unwrap();
    let data = run_scenario(&ScenarioConfig::scenario2(2000, 3.0, 1)).unwrap();
    let km = fit_km(&data, CensoringPolicy::AllCensoredEqual).unwrap();
    let km_path = dir.path().join("km.csv");
    write_km_curve_file(&km_path, &km).unwrap();
    match read_curve_file(&km_path).unwrap() {
        CurveFile::Km(c) => {
            assert_eq!(c.event_times(), km.event_times());
            assert_eq!(c.survival(), km.survival());
            assert_eq!(c.at_risk(), km.at_risk());
            assert_eq!(c.n_total(), km.n_total());
        }
        other => panic!("expected a KM curve, got {other:?}"),
    }

    let limit = km_limit_scenario1(&DropoutSpec::UnitUniform, 0.4, std::f64::consts::LN_2, &uniform_grid(4.0, 50)).unwrap();
    let limit_path = dir.path().join("limit.csv");
    write_limit_curve_file(&limit_path, &limit).unwrap();
    match read_curve_file(&limit_path).unwrap() {
        CurveFile::Limit(c) => assert_eq!(c, limit),
        other => panic!("expected a limit curve, got {other:?}"),
    }
}

#[test]
fn bad_rows_cite_path_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "time,status\n1.0,failure\n2.0,lost-to-follow-up\n").unwrap();
    let msg = read_dataset_file(&path).unwrap_err().to_string();
    assert!(msg.contains("bad.csv") && msg.contains("line 3"), "{msg}");
    assert!(msg.contains("failure") && msg.contains("dropout") && msg.contains("administrative"), "{msg}");

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let msg = Error::from(read_curve_file(&empty).unwrap_err()).to_string();
    assert!(msg.contains("empty.csv"), "{msg}");

    let missing = dir.path().join("missing.csv");
    assert!(read_dataset_file(&missing).unwrap_err().to_string().contains("missing.csv"));
}
