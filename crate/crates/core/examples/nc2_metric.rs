//! Metric and Einstein functionals of `h^{-1} Δ h^{-1}` on the noncommutative 2-torus.

use std::f64::consts::PI;

use num_complex::Complex64;
use wodzicki::algebra::{Deformation, TorusElement};
use wodzicki::functionals::{einstein_vf, metric_vf};
use wodzicki::operators::{build_conformal_laplacian, LaplacianVariant, VectorFieldSpec};
use wodzicki::symbol::CalculusSettings;

fn main() -> wodzicki::error::Result<()> {
    let s = CalculusSettings::default();
    let d = Deformation::two_torus(1.0 / 2f64.sqrt());
    let u = TorusElement::monomial(&d, &[1, 1]);
    let h = &TorusElement::one(&d) + &(&u + &u.adjoint()).scale_real(0.15);

    let lap = build_conformal_laplacian(&h, LaplacianVariant::TwoTorus, &s)?;
    let field = |a: f64, b: f64| VectorFieldSpec::rescaled(vec![TorusElement::real(&d, a), TorusElement::real(&d, b)], h.clone());
    let (v, w) = (field(1.0, 0.5), field(0.3, -1.0));

    let g = metric_vf(&lap, &v, &w, None, &s)?;
    let expected = h.pow(4).trace() * PI * Complex64::new(0.3 - 0.5, 0.0);
    println!("metric   {:.12}  (π τ(h⁴) V·W = {:.12})", g.value, expected);

    let big = einstein_vf(&lap, &v, &w, None, &s)?;
    println!("einstein {:.3e}  density l1 {:.3e}", big.value.norm(), big.density.v_coeff.l1_norm());
    Ok(())
}
