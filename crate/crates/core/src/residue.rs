//! Cosphere moments and the Wodzicki residue of symbols over `Â`.

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;

use crate::algebra::{FourierRecord, TorusElement, MAX_DIM};
use crate::clifford::{matrix_trace, CliffordValue};
use crate::error::{Error, Result};
use crate::symbol::{weighted_component, Symbol, SymbolTerm};

/// Exact sphere moment as a rational multiple of `v_{n−1}`.
pub type MomentFn = fn(usize, &[u8]) -> Ratio<i64>;

/// Volume `v_{n−1}` of the unit sphere `S^{n−1}`, i.e. `2π^{n/2}/Γ(n/2)`.
pub fn sphere_volume(n: usize) -> f64 {
    let m = n as f64 / 2.0;
    let gamma = if n % 2 == 0 {
        (1..n / 2).map(|k| k as f64).product::<f64>()
    } else {
        // Γ(m) for half-integer m.
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while x < m {
            g *= x;
            x += 1.0;
        }
        g
    };
    2.0 * std::f64::consts::PI.powf(m) / gamma
}

/// `∫_{S^{n−1}} ξ^α / v_{n−1}`: the number of perfect matchings compatible with
/// `α`, `∏(α_a − 1)!!`, over `n(n+2)···(n+|α|−2)`.
pub fn sphere_moment(n: usize, alpha: &[u8]) -> Ratio<i64> {
    if alpha.iter().any(|a| a % 2 == 1) {
        return Ratio::from_integer(0);
    }
    let mut num: i64 = 1;
    for &a in alpha {
        let mut k = a as i64 - 1;
        while k > 1 {
            num *= k;
            k -= 2;
        }
    }
    let half: u32 = alpha.iter().map(|a| *a as u32).sum::<u32>() / 2;
    let den: i64 = (0..half as i64).map(|i| n as i64 + 2 * i).product();
    Ratio::new(num, den)
}

/// Orders and residual data of a residue computation.
#[derive(Clone, Debug)]
pub struct Residue {
    /// `𝒲(P)`.
    pub value: Complex64,
    /// `𝒲(P) / v_{n−1}`.
    pub v_coeff: Complex64,
    /// Density before `τ`, as a multiple of `v_{n−1}`.
    pub density: ResidueDensity,
    /// Set when the symbol has no component of order `−n` to begin with.
    pub below_order: bool,
}

/// The element `tr ∫ σ_{−n}` of `Â`, stored as the coefficient of `v_{n−1}`.
#[derive(Clone, Debug)]
pub struct ResidueDensity {
    pub v_coeff: TorusElement,
}

impl ResidueDensity {
    /// `τ(density · f)` as a multiple of `v_{n−1}`.
    pub fn pair(&self, f: &TorusElement) -> Result<Complex64> {
        Ok(self.v_coeff.try_mul(f)?.trace())
    }

    pub fn value(&self) -> TorusElement {
        let n = self.v_coeff.dim();
        self.v_coeff.scale_real(sphere_volume(n))
    }

    pub fn l1_norm(&self) -> f64 {
        self.value().l1_norm()
    }

    pub fn to_record(&self) -> FourierRecord {
        self.v_coeff.to_record()
    }
}

/// Replace every `ξ^α` by its moment; returns the coefficient of `v_{n−1}`.
pub fn cosphere_integrate(component: &[SymbolTerm], n: usize) -> Result<CliffordValue> {
    cosphere_integrate_with(component, n, sphere_moment)
}

pub fn cosphere_integrate_with(component: &[SymbolTerm], n: usize, moment: MomentFn) -> Result<CliffordValue> {
    let first = component
        .first()
        .ok_or_else(|| Error::Precondition("empty component".into()))?;
    let order = first.order();
    if component.iter().any(|t| t.order() != order) {
        return Err(Error::Precondition("terms of mixed order".into()));
    }
    if n > MAX_DIM || first.coeff.deformation().dim() != n {
        return Err(Error::Config(format!("dimension {n} does not match the symbol")));
    }
    let parts: Vec<CliffordValue> = component
        .par_iter()
        .filter_map(|t| {
            let r = moment(n, &t.key.alpha[..n]);
            let c = *r.numer() as f64 / *r.denom() as f64;
            (c != 0.0).then(|| t.coeff.scale(Complex64::new(c, 0.0)))
        })
        .collect();
    let mut acc = CliffordValue::zero(first.coeff.deformation(), first.coeff.dim());
    for p in parts {
        acc = &acc + &p;
    }
    Ok(acc)
}

/// `tr ∫_{S^{n−1}} σ_{−n}(P)` before the trace `τ`.
pub fn residue_density(p: &Symbol) -> Result<(ResidueDensity, bool)> {
    residue_density_with(p, sphere_moment)
}

pub fn residue_density_with(p: &Symbol, moment: MomentFn) -> Result<(ResidueDensity, bool)> {
    let n = p.dim();
    let target = -(n as i32);
    let zero = ResidueDensity { v_coeff: TorusElement::zero(p.deformation()) };
    if p.top_order() < target {
        return Ok((zero, true));
    }
    if !p.tracks(target) {
        return Err(Error::Precondition(format!(
            "symbol with top order {} and depth {:?} does not track order {target}",
            p.top_order(),
            p.depth()
        )));
    }
    let component = p.component(target);
    if component.is_empty() {
        return Ok((zero, false));
    }
    let integrated = cosphere_integrate_with(&component, n, moment)?;
    Ok((ResidueDensity { v_coeff: matrix_trace(&integrated) }, false))
}

/// `𝒲(P) = τ(tr ∫ σ_{−n}(P))`.
pub fn wodzicki_residue(p: &Symbol) -> Result<Residue> {
    wodzicki_residue_with(p, sphere_moment)
}

pub fn wodzicki_residue_with(p: &Symbol, moment: MomentFn) -> Result<Residue> {
    let (density, below_order) = residue_density_with(p, moment)?;
    let v_coeff = density.v_coeff.trace();
    Ok(Residue { value: v_coeff * sphere_volume(p.dim()), v_coeff, density, below_order })
}

/// `𝒲(P∘Q)` computed from the weighted order `−n` component, without forming it.
pub fn composition_residue(p: &Symbol, q: &Symbol) -> Result<Residue> {
    let n = p.dim();
    let target = -(n as i32);
    if p.top_order() + q.top_order() < target {
        let density = ResidueDensity { v_coeff: TorusElement::zero(p.deformation()) };
        return Ok(Residue { value: Complex64::new(0.0, 0.0), v_coeff: Complex64::new(0.0, 0.0), density, below_order: true });
    }
    let integrated = weighted_component(p, q, target, |k| {
        let r = sphere_moment(n, &k.alpha[..n]);
        *r.numer() as f64 / *r.denom() as f64
    })?;
    let density = ResidueDensity { v_coeff: matrix_trace(&integrated) };
    let v_coeff = density.v_coeff.trace();
    Ok(Residue { value: v_coeff * sphere_volume(n), v_coeff, density, below_order: false })
}

/// Monte-Carlo estimate of `∫_{S^{n−1}} ξ^α / v_{n−1}` from Gaussian samples.
pub fn monte_carlo_moment(n: usize, alpha: &[u8], samples: usize, seed: u64) -> f64 {
    monte_carlo_moments(n, &[alpha.to_vec()], samples, seed)[0]
}

/// Estimates for several `α` from one set of samples, drawn in parallel chunks
/// with per-chunk seeds derived from `seed`.
pub fn monte_carlo_moments(n: usize, alphas: &[Vec<u8>], samples: usize, seed: u64) -> Vec<f64> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    const CHUNK: usize = 1 << 16;
    let top = alphas.iter().flat_map(|a| a.iter().copied()).max().unwrap_or(0) as usize;
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut acc = vec![0.0; alphas.len()];
            let mut powers = vec![vec![1.0f64; top + 1]; n];
            for _ in 0..CHUNK.min(samples - c * CHUNK) {
                let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                for (a, p) in powers.iter_mut().enumerate() {
                    for k in 1..=top {
                        p[k] = p[k - 1] * x[a] / r;
                    }
                }
                for (s, alpha) in acc.iter_mut().zip(alphas) {
                    *s += alpha.iter().enumerate().map(|(a, k)| powers[a][*k as usize]).product::<f64>();
                }
            }
            acc
        })
        .collect();
    (0..alphas.len()).map(|i| sums.iter().map(|s| s[i]).sum::<f64>() / samples as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Deformation;
    use crate::symbol::{parametrix, power_symbols, TermKey};
    use proptest::prelude::*;

    #[test]
    fn sphere_volumes() {
        assert!((sphere_volume(2) - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert!((sphere_volume(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-14);
        assert!((sphere_volume(3) - 4.0 * std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn known_moments() {
        assert_eq!(sphere_moment(4, &[2, 0, 0, 0]), Ratio::new(1, 4));
        assert_eq!(sphere_moment(4, &[4, 0, 0, 0]), Ratio::new(1, 8));
        assert_eq!(sphere_moment(4, &[2, 2, 0, 0]), Ratio::new(1, 24));
        assert_eq!(sphere_moment(2, &[1, 2]), Ratio::from_integer(0));
        for n in [2usize, 4] {
            let total: Ratio<i64> = (0..n)
                .map(|a| {
                    let mut alpha = [0u8; 4];
                    alpha[a] = 2;
                    sphere_moment(n, &alpha[..n])
                })
                .sum();
            assert_eq!(total, Ratio::from_integer(1));
        }
    }

    #[test]
    fn moments_agree_with_sampling() {
        for (n, alpha) in [(2usize, vec![2u8, 2]), (4, vec![4, 0, 0, 0]), (4, vec![2, 2, 2, 0]), (2, vec![6, 0])] {
            let exact = sphere_moment(n, &alpha);
            let exact = *exact.numer() as f64 / *exact.denom() as f64;
            let mc = monte_carlo_moment(n, &alpha, 400_000, 3);
            assert!((mc - exact).abs() < 1e-3, "{alpha:?}: {mc} vs {exact}");
        }
    }

    proptest! {
        #[test]
        fn moments_symmetric_under_permutation(a in 0u8..5, b in 0u8..5, c in 0u8..5, d in 0u8..5) {
            let m = sphere_moment(4, &[a, b, c, d]);
            prop_assert_eq!(m, sphere_moment(4, &[d, b, a, c]));
            prop_assert_eq!(m, sphere_moment(4, &[b, a, d, c]));
            if (a + b + c + d) % 2 == 1 {
                prop_assert_eq!(m, Ratio::from_integer(0));
            }
        }
    }

    #[test]
    fn flat_inverse_laplacian_residue() {
        let d = Deformation::two_torus(0.7);
        let b = parametrix(&Symbol::flat_laplacian(&d, 1), 1).unwrap();
        let r = wodzicki_residue(&b).unwrap();
        assert!((r.value - Complex64::new(2.0 * std::f64::consts::PI, 0.0)).norm() < 1e-14);
        assert!((r.v_coeff - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let d4 = Deformation::commutative(4).unwrap();
        let b4 = power_symbols(&parametrix(&Symbol::flat_laplacian(&d4, 2), 1).unwrap(), 2, 1).unwrap();
        let r4 = wodzicki_residue(&b4).unwrap();
        assert!((r4.value.re - 2.0 * sphere_volume(4)).abs() < 1e-12);
    }

    #[test]
    fn lower_orders_have_no_residue() {
        let d = Deformation::two_torus(0.2);
        let b = parametrix(&Symbol::flat_laplacian(&d, 1), 1).unwrap();
        let b2 = power_symbols(&b, 2, 1).unwrap();
        let r = wodzicki_residue(&b2).unwrap();
        assert!(r.below_order);
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn untracked_order_is_an_error() {
        let d = Deformation::two_torus(0.2);
        let truncated = Symbol::new(&d, 1, 0, Some(1), []).unwrap();
        assert!(matches!(wodzicki_residue(&truncated), Err(Error::Precondition(_))));
    }

    #[test]
    fn odd_moments_vanish_and_mixed_orders_rejected() {
        let d = Deformation::two_torus(0.2);
        let one = CliffordValue::identity(&d, 1);
        let odd = [SymbolTerm { key: TermKey::xi(&[0, 1, 1]).with_inverse_norm(2), coeff: one.clone() }];
        assert!(cosphere_integrate(&odd, 2).unwrap().is_zero());
        let mixed = [
            SymbolTerm { key: TermKey::inverse_norm(1), coeff: one.clone() },
            SymbolTerm { key: TermKey::xi(&[0]).with_inverse_norm(2), coeff: one },
        ];
        assert!(matches!(cosphere_integrate(&mixed, 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn quadratic_moment_is_delta_over_n() {
        let d = Deformation::commutative(4).unwrap();
        let one = CliffordValue::identity(&d, 1);
        for a in 0..4 {
            for b in 0..4 {
                let t = [SymbolTerm { key: TermKey::xi(&[a, b]).with_inverse_norm(3), coeff: one.clone() }];
                let v = cosphere_integrate(&t, 4).unwrap().get(0, 0).constant_term().re;
                assert_eq!(v, if a == b { 0.25 } else { 0.0 });
            }
        }
    }
}
