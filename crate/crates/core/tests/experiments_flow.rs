use std::collections::BTreeMap;

use paradiff::calibration::Calibration;
use paradiff::experiments::{
    build_family, emit_report, loss_rate_experiment, read_csv, verify_suite, LossConfig, LossRow, ReportInputs, Suite,
    SuiteConfig, FAMILY_IDS,
};
use paradiff::Error;

fn quick_loss() -> LossConfig {
    LossConfig { grid_n: 128, dt: 4e-3, t_end: 1.0, frequencies: vec![4, 8, 16, 32], samples: 10, ..Default::default() }
}

#[test]
fn every_registered_family_builds_with_defaults() {
    for id in FAMILY_IDS {
        let f = build_family(id, &BTreeMap::new()).unwrap();
        assert_eq!(f.id, id);
    }
    assert!(matches!(build_family("nope", &BTreeMap::new()), Err(Error::UnknownFamily(_))));
    let negative = BTreeMap::from([("A".to_string(), -5.0)]);
    assert!(build_family("ll_cusp", &negative).is_err());
}

#[test]
fn loss_run_reports_and_round_trips() {
    let f = build_family("constant", &BTreeMap::new()).unwrap();
    let fit = loss_rate_experiment(&f, &quick_loss()).unwrap();
    assert!(fit.lambda_emp.abs() < 0.02);
    let dir = tempfile::tempdir().unwrap();
    let fits = [fit];
    emit_report(&ReportInputs { verify: None, loss: &fits, energy: &[] }, dir.path()).unwrap();
    let rows: Vec<LossRow> = read_csv(&dir.path().join("loss_rate.csv")).unwrap();
    assert_eq!(rows.len(), fits[0].times.len() * 4);
    for (row, expected) in rows.iter().zip(fits[0].blowup_times.iter().flatten()) {
        assert_eq!(row.sigma_star.to_bits(), expected.to_bits());
    }
    let script = std::fs::read_to_string(dir.path().join("loss_rate.gp")).unwrap();
    assert!(script.contains("loss_rate.csv"));
}

#[test]
fn loss_rate_is_deterministic() {
    let f = build_family("tent_t", &BTreeMap::new()).unwrap();
    let a = loss_rate_experiment(&f, &quick_loss()).unwrap();
    let b = loss_rate_experiment(&f, &quick_loss()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn halved_calibration_fails_verification() {
    let cal = Calibration::embedded().unwrap();
    let cfg = SuiteConfig::default();
    let suites = [Suite::Paraproduct, Suite::Mollified];
    let (ok, _) = verify_suite(&suites, &cfg, &cal).unwrap();
    assert!(ok.pass);
    let (bad, _) = verify_suite(&suites, &cfg, &cal.scaled(0.5)).unwrap();
    assert!(!bad.pass);
    assert!(bad.failures().any(|c| c.id.starts_with("paraproduct.t_a")));
}

#[test]
fn missing_calibration_is_an_error() {
    let cal = Calibration::new(256);
    let err = verify_suite(&[Suite::Paraproduct], &SuiteConfig::default(), &cal).unwrap_err();
    assert!(matches!(err, Error::MissingCalibration(_)), "{err}");
}
