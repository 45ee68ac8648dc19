//! Functionals of the product of `D_k` on the noncommutative 2-torus with a two-point space.

use num_complex::Complex64;
use wodzicki::algebra::{Deformation, TorusElement};
use wodzicki::functionals::{
    closed_form_reference, einstein_form_op, metric_form_op, product_form_value, ClosedForm, FormOrdering, Part, ProductForm,
};
use wodzicki::geometry::MetricData;
use wodzicki::operators::{build_dirac, one_form_value, product_triple, DiracFlavor, OneFormSpec};
use wodzicki::symbol::CalculusSettings;

fn main() -> wodzicki::error::Result<()> {
    let s = CalculusSettings::default();
    let d = Deformation::two_torus(1.0 / 2f64.sqrt());
    let e = TorusElement::opposite_monomial(&d, &[0, 1]);
    let k = &TorusElement::one(&d) + &(&e + &e.adjoint()).scale_real(0.1);
    let base = build_dirac(&MetricData::Flat(d.clone()), &DiracFlavor::Conformal(k.clone()), &s)?;

    let u = TorusElement::monomial(&d, &[1, 0]);
    let one = TorusElement::one(&d);
    let form = |a: f64, b: f64| one_form_value(&OneFormSpec::rescaled(vec![one.scale_real(a), &one + &u.scale_real(b)], k.clone()), &base.rep);
    let omega = ProductForm { plus: form(1.0, 0.2)?, minus: form(0.5, -0.3)?, phi_plus: u.clone(), phi_minus: one.scale_real(0.4) };
    let omega_prime = ProductForm { plus: form(-0.3, 0.1)?, minus: form(0.2, 0.5)?, phi_plus: one.clone(), phi_minus: u.adjoint() };

    for c in [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.4)] {
        let big = product_triple(&base.symbol, &base.grading, c)?;
        let (o, op) = (product_form_value(&omega, &base.grading, c), product_form_value(&omega_prime, &base.grading, c));
        let g = metric_form_op(&big, &o, &op, &s)?.value;
        let big_g = einstein_form_op(&big, &o, &op, FormOrdering::Right, &s)?.value;
        let reference = |part| {
            closed_form_reference(&ClosedForm::ProductTriple {
                base: base.symbol.clone(),
                c,
                omega: omega.clone(),
                omega_prime: omega_prime.clone(),
                part,
            })
        };
        println!(
            "c = {c}: 𝓰 {g:.10} (base formula {:.10})  𝒢 {big_g:.10} (base formula {:.10})",
            reference(Part::Metric)?.value,
            reference(Part::Einstein)?.value
        );
    }
    Ok(())
}
