//! Laplace-type operators `Δ_{T,E}` on the flat 4-torus: the curvature term of a
//! U(1) connection and the shift by the endomorphism `E`.

use std::sync::Arc;

use num_complex::Complex64;

use wodzicki::algebra::{Deformation, TorusElement};
use wodzicki::clifford::CliffordValue;
use wodzicki::functionals::{closed_form_reference, functional_of, ClosedForm};
use wodzicki::geometry::MetricData;
use wodzicki::operators::{build_covariant_vector_field, build_laplace_type, ConnectionData};
use wodzicki::symbol::{compose, CalculusSettings};

fn cos(d: &Arc<Deformation>, k: &[i32], a: f64) -> TorusElement {
    let e = TorusElement::monomial(d, k);
    (&e + &e.adjoint()).scale_real(a)
}

fn main() -> wodzicki::error::Result<()> {
    let s = CalculusSettings::default();
    let d = Deformation::commutative(4)?;
    let z = TorusElement::zero(&d);
    let potential = vec![cos(&d, &[0, 1, 0, 0], 0.2), z.clone(), cos(&d, &[1, 0, 0, 0], 0.1), z.clone()];
    let conn = ConnectionData::u1(&potential);
    let e = CliffordValue::scalar(&(&TorusElement::real(&d, 0.7) + &cos(&d, &[0, 0, 1, 0], 0.2)), 1);
    let conn_e = conn.clone().with_potential(e.clone());

    // sin x₂ is δ₂ of cos x₂ up to a factor of −i.
    let sin = cos(&d, &[0, 1, 0, 0], 0.3).derive(1)?.scale(-Complex64::i());
    let v = vec![TorusElement::one(&d), sin, z.clone(), z.clone()];
    let w = vec![TorusElement::one(&d), z.clone(), TorusElement::real(&d, 0.5), z];

    let flat = MetricData::Flat(d.clone());
    let vw = compose(&build_covariant_vector_field(&v, &conn)?, &build_covariant_vector_field(&w, &conn)?, 3)?;
    let g_t = functional_of("einstein_vf", &vw, &build_laplace_type(&flat, &conn)?, 2, &s)?.value;
    let g_te = functional_of("einstein_vf", &vw, &build_laplace_type(&flat, &conn_e)?, 2, &s)?.value;

    let f_ref = closed_form_reference(&ClosedForm::ConnectionCurvature { connection: conn, v: v.clone(), w: w.clone() })?.value;
    let e_ref = closed_form_reference(&ClosedForm::PotentialShift { e, v, w })?.value;
    println!("𝒢(V,W) for Δ_T     {g_t:.12}  (v₃/2)∫V^aW^bF_ab {f_ref:.12}");
    println!("shift by E          {:.12}  ½v₃∫Tr(E)g(V,W) {e_ref:.12}", g_te - g_t);
    Ok(())
}

