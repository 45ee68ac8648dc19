//! Exact sphere moments, a Monte-Carlo cross-check and the residue of `Δ^{-2}` on T⁴.

use wodzicki::algebra::Deformation;
use wodzicki::residue::{monte_carlo_moment, sphere_moment, sphere_volume, wodzicki_residue};
use wodzicki::symbol::{parametrix, power_symbols, Symbol};

fn main() -> wodzicki::error::Result<()> {
    for alpha in [[2u8, 0, 0, 0], [2, 2, 0, 0], [4, 0, 0, 0], [2, 2, 2, 0]] {
        let exact = sphere_moment(4, &alpha);
        let mc = monte_carlo_moment(4, &alpha, 1_000_000, 7);
        println!("∫ξ^{alpha:?} / v₃ = {exact:<6} ≈ {mc:.5}");
    }

    let d = Deformation::commutative(4)?;
    let lap = Symbol::flat_laplacian(&d, 1);
    let inv2 = power_symbols(&parametrix(&lap, 1)?, 2, 1)?;
    let r = wodzicki_residue(&inv2)?;
    println!("𝒲(Δ⁻²) = {:.12} = v₃ = {:.12}", r.value.re, sphere_volume(4));
    Ok(())
}
