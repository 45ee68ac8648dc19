//! Parametrix of a variable-coefficient operator on T² and the closed form
//! for the low-order symbols of its powers.

use std::sync::Arc;

use wodzicki::algebra::{Deformation, TorusElement};
use wodzicki::clifford::CliffordValue;
use wodzicki::symbol::{compose, parametrix, power_symbols, scalar_power_closed_form, Symbol, TermKey};

fn cos(d: &Arc<Deformation>, k: &[i32], a: f64) -> TorusElement {
    let e = TorusElement::monomial(d, k);
    (&e + &e.adjoint()).scale_real(a)
}

fn main() -> wodzicki::error::Result<()> {
    let d = Deformation::commutative(2)?;
    // a(x)‖ξ‖² + b(x)ξ₁ + c(x)
    let a = &TorusElement::one(&d) + &cos(&d, &[1, 0], 0.1);
    let lead = CliffordValue::scalar(&a, 1);
    let p = Symbol::new(
        &d,
        1,
        2,
        None,
        [
            (TermKey::xi(&[0, 0]), lead.clone()),
            (TermKey::xi(&[1, 1]), lead),
            (TermKey::xi(&[0]), CliffordValue::scalar(&cos(&d, &[0, 1], 0.2), 1)),
            (TermKey::ONE, CliffordValue::scalar(&cos(&d, &[1, 1], 0.3), 1)),
        ],
    )?;

    let b = parametrix(&p, 3)?;
    let id = Symbol::identity(&d, 1).truncate(3);
    println!("‖B∘P − 1‖ over three orders: {:.2e}", compose(&b, &p, 3)?.distance(&id)?);

    let (b0, b1, b2) = (b.component_symbol(-2), b.component_symbol(-3), b.component_symbol(-4));
    for l in 2..=4 {
        let closed = scalar_power_closed_form(&b0, &b1, &b2, l)?;
        let iterated = power_symbols(&b, l, 3)?;
        println!("l = {l}: closed form vs iterated composition {:.2e}", closed.distance(&iterated)?);
    }
    Ok(())
}
