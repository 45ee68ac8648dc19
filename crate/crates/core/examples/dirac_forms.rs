//! Metric and Einstein functionals on one-forms for `D_k = k D k` on the
//! noncommutative 2-torus, including spectral closedness.

use wodzicki::algebra::{Deformation, TorusElement};
use wodzicki::clifford::CliffordValue;
use wodzicki::functionals::{einstein_form, metric_form, spectral_closedness_check};
use wodzicki::geometry::MetricData;
use wodzicki::operators::{build_dirac, DiracFlavor, OneFormSpec};
use wodzicki::residue::sphere_volume;
use wodzicki::symbol::CalculusSettings;

fn main() -> wodzicki::error::Result<()> {
    let s = CalculusSettings::default();
    let d = Deformation::two_torus(1.0 / 2f64.sqrt());
    // k lives in the commutant copy of the algebra.
    let e = TorusElement::opposite_monomial(&d, &[1, 1]);
    let k = &TorusElement::one(&d) + &(&e + &e.adjoint()).scale_real(0.1);
    let dk = build_dirac(&MetricData::Flat(d.clone()), &DiracFlavor::Conformal(k.clone()), &s)?;

    let u = TorusElement::monomial(&d, &[1, 0]);
    let v = vec![&TorusElement::one(&d) + &u.scale_real(0.3), TorusElement::real(&d, 0.5)];
    let w = vec![TorusElement::real(&d, 0.2), &TorusElement::real(&d, -1.0) + &u.adjoint().scale_real(0.4)];
    let (vf, wf) = (OneFormSpec::rescaled(v.clone(), k.clone()), OneFormSpec::rescaled(w.clone(), k.clone()));

    let samples: Vec<CliffordValue> = (0..2).map(|a| CliffordValue::from_const(&u, dk.rep.gamma(a))).collect();
    let closed = spectral_closedness_check(&dk.symbol, &samples, 1e-9, &s)?;
    println!("spectrally closed: {} (max |𝒲(T D |D|⁻²)| = {:.2e})", closed.pass, closed.max_abs);

    let g = metric_form(&dk.symbol, &dk.rep, &vf, &wf, &s)?;
    let tau = (&v[0] * &w[0]).trace() + (&v[1] * &w[1]).trace();
    println!("𝓰_D(v,w) = {:.12}  (2 v₁ τ(V^aW^a) = {:.12})", g.value, tau * 2.0 * sphere_volume(2));
    let big = einstein_form(&dk.symbol, &dk.rep, &vf, &wf, &s)?;
    println!("𝒢_D(v,w) = {:.2e}", big.value.norm());
    Ok(())
}
