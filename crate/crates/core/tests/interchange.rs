use num_complex::Complex64;
use proptest::prelude::*;
use wodzicki::algebra::{Deformation, FourierRecord, Mode, TorusElement};
use wodzicki::config::RunConfig;
use wodzicki::functionals::{FunctionalReport, ReportRecord};

const NC2: &str = include_str!("../configs/nc2_metric.toml");

#[test]
fn config_survives_json_and_reruns_identically() {
    let cfg = RunConfig::from_toml(NC2).unwrap();
    let json = serde_json::to_string(&cfg).unwrap();
    let back: RunConfig = serde_json::from_str(&json).unwrap();
    let (a, b) = (cfg.execute().unwrap(), back.execute().unwrap());
    assert_eq!(a.value.re.to_bits(), b.value.re.to_bits());
    assert_eq!(a.value.im.to_bits(), b.value.im.to_bits());
}

#[test]
fn report_record_round_trip() {
    let report = RunConfig::from_toml(NC2).unwrap().execute().unwrap();
    let text = serde_json::to_string(&report.to_record()).unwrap();
    let rec: ReportRecord = serde_json::from_str(&text).unwrap();
    let back = FunctionalReport::from_record(&rec).unwrap();
    assert_eq!(back.value, report.value);
    assert_eq!(back.density.v_coeff, report.density.v_coeff);
}

proptest! {
    #[test]
    fn element_records_round_trip_exactly(
        theta in -3.0f64..3.0,
        terms in proptest::collection::vec((-4i32..=4, -4i32..=4, -4i32..=4, -4i32..=4, -1e3f64..1e3, -1e3f64..1e3), 0..12),
    ) {
        let d = Deformation::two_torus(theta);
        let e = TorusElement::from_terms(
            &d,
            terms.iter().map(|&(a, b, c, e, re, im)| {
                let mut m = Mode::left(&[a, b]);
                m.right[..2].copy_from_slice(&[c, e]);
                (m, Complex64::new(re, im))
            }),
        ).unwrap();
        let text = serde_json::to_string(&e.to_record()).unwrap();
        let rec: FourierRecord = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(TorusElement::from_record(&rec).unwrap(), e);
    }
}
