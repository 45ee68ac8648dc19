//! Classical curvature of the conformally flat metric `g = k^{-4} δ` on T⁴,
//! compared with the Einstein functional of `D_k` and the closed-form G_ab.

use std::sync::Arc;

use wodzicki::algebra::{Deformation, TorusElement};
use wodzicki::functionals::{closed_form_reference, einstein_form, ClosedForm};
use wodzicki::geometry::{curvature_tensors, MetricData};
use wodzicki::operators::{build_dirac, DiracFlavor, OneFormSpec};
use wodzicki::residue::sphere_volume;
use wodzicki::symbol::CalculusSettings;

fn cos(d: &Arc<Deformation>, k: &[i32], a: f64) -> TorusElement {
    let e = TorusElement::monomial(d, k);
    (&e + &e.adjoint()).scale_real(a)
}

fn main() -> wodzicki::error::Result<()> {
    let s = CalculusSettings::default();
    let d = Deformation::commutative(4)?;
    let k = &(&TorusElement::one(&d) + &cos(&d, &[1, 0, 1, 0], 0.05)) + &cos(&d, &[0, 1, 0, 0], 0.04);
    let metric = MetricData::ConformallyFlat { factor: k.clone(), exponent: -4 };

    let curv = curvature_tensors(&metric)?;
    println!("max |∇^a G_ab| on the grid: {:.2e}", curv.bianchi_defect()?);
    println!("τ(√g R) = {:.12}", curv.metric.integrate(&curv.scalar)?);

    let v: Vec<TorusElement> = [1.0, 0.2, 0.0, -0.4].iter().map(|x| TorusElement::real(&d, *x)).collect();
    let w: Vec<TorusElement> = [0.3, 1.0, 0.5, 0.0].iter().map(|x| TorusElement::real(&d, *x)).collect();
    let oracle = curv.metric.integrate(&curv.einstein_forms(&v, &w)?)? * (4.0 * sphere_volume(4) / 6.0);

    let dk = build_dirac(&MetricData::Flat(d.clone()), &DiracFlavor::Conformal(k.clone()), &s)?;
    let (vf, wf) = (OneFormSpec::rescaled(v.clone(), k.clone()), OneFormSpec::rescaled(w.clone(), k.clone()));
    let engine = einstein_form(&dk.symbol, &dk.rep, &vf, &wf, &s)?.value;
    let display = closed_form_reference(&ClosedForm::DiracCommutativeLimit { k, v, w })?.value;
    println!("𝒢_D(v,w) = {engine:.12}\n4(v₃/6)∫G(v,w) vol = {oracle:.12}\nG_ab closed form = {display:.12}");
    Ok(())
}
