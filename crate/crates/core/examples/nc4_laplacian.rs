//! Einstein functional of the conformally rescaled Laplacian on a noncommutative 4-torus,
//! against the closed form and, at θ = 0, against classical curvature.

use num_complex::Complex64;
use wodzicki::algebra::{Deformation, TorusElement};
use wodzicki::functionals::{closed_form_reference, einstein_vf, ClosedForm, Part};
use wodzicki::geometry::{functional_oracle, MetricData, OracleKind};
use wodzicki::operators::{build_conformal_laplacian, LaplacianVariant, VectorFieldSpec};
use wodzicki::symbol::CalculusSettings;

fn run(theta: f64) -> wodzicki::error::Result<()> {
    let s = CalculusSettings::default();
    let mut th = vec![vec![0.0; 4]; 4];
    for (a, b, x) in [(0, 1, 0.21 * theta), (0, 2, theta), (1, 3, 1.3 * theta)] {
        th[a][b] = x;
        th[b][a] = -x;
    }
    let d = Deformation::new(4, &th)?;
    let cos = |k: &[i32], a: f64| {
        let e = TorusElement::monomial(&d, k);
        (&e + &e.adjoint()).scale_real(a)
    };
    let chi = &(&TorusElement::one(&d) + &cos(&[1, 0, 1, 0], 0.04)) + &cos(&[0, 1, 0, 0], -0.03);
    let v = [1.0, 0.0, 0.5, 0.0].map(|x| Complex64::new(x, 0.0)).to_vec();
    let w = [0.0, 1.0, 0.4, 0.2].map(|x| Complex64::new(x, 0.0)).to_vec();
    let spec = |c: &[Complex64]| VectorFieldSpec::rescaled(c.iter().map(|x| TorusElement::scalar(&d, *x)).collect(), chi.clone());

    let lap = build_conformal_laplacian(&chi, LaplacianVariant::FourTorus, &s)?;
    let engine = einstein_vf(&lap, &spec(&v), &spec(&w), None, &s)?.value;
    let closed = closed_form_reference(&ClosedForm::NcFourLaplacian { chi: chi.clone(), v: v.clone(), w: w.clone(), part: Part::Einstein })?.value;
    println!("θ = {theta}: engine {engine:.12}  closed form {closed:.12}");
    if theta == 0.0 {
        let geometric = |c: &[Complex64]| c.iter().map(|x| TorusElement::scalar(&d, -Complex64::i() * x)).collect::<Vec<_>>();
        let metric = MetricData::ConformallyFlat { factor: chi.clone(), exponent: 1 };
        let oracle = functional_oracle(&metric, &geometric(&v), &geometric(&w), OracleKind::Einstein)?;
        println!("        (v₃/6)∫G(V,W) vol = {oracle:.12}");
    }
    Ok(())
}

fn main() -> wodzicki::error::Result<()> {
    run(0.37)?;
    run(0.0)
}
