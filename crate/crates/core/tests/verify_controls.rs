use num_rational::Ratio;
use wodzicki::residue::sphere_moment;
use wodzicki::verify::{run_suite, run_suite_with, VerifyOptions};

/// Off by one part in six for `ξ₁²ξ₂²` only.
fn broken_moment(n: usize, alpha: &[u8]) -> Ratio<i64> {
    let m = sphere_moment(n, alpha);
    if n == 4 && alpha == [2, 2, 0, 0] {
        m * Ratio::new(7, 6)
    } else {
        m
    }
}

#[test]
fn broken_moment_table_is_caught_and_pinpointed() {
    let report = run_suite_with("moments", &VerifyOptions { moment: broken_moment }).unwrap();
    assert!(!report.pass());
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.label.as_str()).collect();
    assert!(failed.iter().any(|l| l.contains("α=[2, 2, 0, 0]")), "{failed:?}");
    assert!(report.summary_line().starts_with("FAIL 10 moments"));
}

#[test]
fn unknown_suite_is_an_argument_error() {
    assert!(run_suite("nc6-anything").is_err());
}

#[test]
fn reports_are_deterministic() {
    let a = run_suite("nc2-dirac").unwrap();
    let b = run_suite("nc2-dirac").unwrap();
    for (x, y) in a.checks.iter().zip(&b.checks) {
        assert_eq!(x.label, y.label);
        assert_eq!(x.measured.re.to_bits(), y.measured.re.to_bits());
        assert_eq!(x.measured.im.to_bits(), y.measured.im.to_bits());
    }
}
