use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;

use super::{complex, constant_fields, constants, positive, rng, trig, Check};
use crate::algebra::{Deformation, TorusElement};
use crate::clifford::CliffordValue;
use crate::error::Result;
use crate::functionals::{
    einstein_form_op, metric_form_op, metric_vf, product_form_value, spectral_closedness_check, FormOrdering, ProductForm,
};
use crate::geometry::MetricData;
use crate::operators::{
    build_conformal_laplacian, build_dirac, one_form_value, product_triple as product_dirac, DiracFlavor, LaplacianVariant, OneFormSpec, VectorFieldSpec,
};
use crate::residue::{monte_carlo_moments, MomentFn};
use crate::symbol::{
    compose, parametrix, power_symbols, scalar_power_closed_form, CalculusSettings, Symbol, TermKey,
};

type Rng = rand_chacha::ChaCha8Rng;

/// `a(x)‖ξ‖² + b^a(x)ξ_a + c(x)` with `a > 0`.
fn random_scalar_operator(d: &Arc<Deformation>, r: &mut Rng) -> Result<Symbol> {
    let modes: [&[i32]; 3] = [&[1, 0], &[0, 1], &[1, -1]];
    let lead = CliffordValue::scalar(&positive(d, r, &modes, 0.15, false), 1);
    let mut terms = vec![(TermKey::xi(&[0, 0]), lead.clone()), (TermKey::xi(&[1, 1]), lead)];
    for a in 0..2 {
        let b = &TorusElement::scalar(d, complex(r)) + &trig(d, r, &modes, 0.3, false);
        terms.push((TermKey::xi(&[a]), CliffordValue::scalar(&b, 1)));
    }
    terms.push((TermKey::ONE, CliffordValue::scalar(&trig(d, r, &modes, 0.3, false), 1)));
    Symbol::new(d, 1, 2, None, terms)
}

pub(super) fn appendix_powers() -> Result<Vec<Check>> {
    let d = Deformation::commutative(2)?;
    let mut r = rng(71);
    let ops = (0..10).map(|_| random_scalar_operator(&d, &mut r)).collect::<Result<Vec<_>>>()?;
    let per: Vec<Result<Vec<Check>>> = ops
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let b = parametrix(p, 3)?;
            let (p0, p1, p2) = (b.component_symbol(-2), b.component_symbol(-3), b.component_symbol(-4));
            let mut out = Vec::new();
            for l in 2..=4 {
                let closed = scalar_power_closed_form(&p0, &p1, &p2, l)?;
                let iterated = power_symbols(&b, l, 3)?;
                out.push(Check::bound(format!("P{i} l={l}: closed form vs iterated composition"), closed.distance(&iterated)?, 1e-12));
            }
            let id = Symbol::identity(&d, 1).truncate(3);
            out.push(Check::bound(format!("P{i}: B∘P − 1 over three orders"), compose(&b, p, 3)?.distance(&id)?, 1e-12));
            Ok(out)
        })
        .collect();
    Ok(per.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

/// Perfect matchings of the points `0..α_1+...+α_n` (point `i` on axis
/// `axis[i]`) whose pairs stay on one axis, by full enumeration.
fn axis_matchings(axis: &[usize]) -> i64 {
    fn go(rest: &mut Vec<usize>) -> i64 {
        if rest.is_empty() {
            return 1;
        }
        let first = rest.remove(0);
        let mut total = 0;
        for j in 0..rest.len() {
            let other = rest.remove(j);
            if other == first {
                total += go(rest);
            }
            rest.insert(j, other);
        }
        rest.insert(0, first);
        total
    }
    go(&mut axis.to_vec())
}

/// `∫ ξ^α / v_{n−1}` as Gaussian moment over `E r^{|α|}`, both by counting.
fn pairing_moment(n: usize, alpha: &[u8]) -> Ratio<i64> {
    let axis: Vec<usize> = alpha.iter().enumerate().flat_map(|(a, k)| std::iter::repeat(a).take(*k as usize)).collect();
    if axis.len() % 2 == 1 {
        return Ratio::from_integer(0);
    }
    let radial: i64 = (0..axis.len() as i64 / 2).map(|i| n as i64 + 2 * i).product();
    Ratio::new(axis_matchings(&axis), radial)
}

fn multi_indices(n: usize, max: u8) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|b: Vec<u8>| {
                let used: u8 = b.iter().sum();
                (0..=max - used).map(move |k| {
                    let mut c = b.clone();
                    c.push(k);
                    c
                })
            })
            .collect();
    }
    out
}

pub(super) fn moments(moment: MomentFn) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in [2usize, 4] {
        let alphas = multi_indices(n, 6);
        let mut worst_exact: (f64, String) = (0.0, String::new());
        for a in &alphas {
            let (got, want) = (moment(n, a), pairing_moment(n, a));
            if got != want {
                let err = (*got.numer() as f64 / *got.denom() as f64 - *want.numer() as f64 / *want.denom() as f64).abs();
                out.push(Check::bound(format!("n={n} α={a:?}: moment vs pairing count ({got} vs {want})"), err.max(f64::MIN_POSITIVE), 0.0));
            }
            let err = if got == want { 0.0 } else { 1.0 };
            if err >= worst_exact.0 {
                worst_exact = (err, format!("{a:?}"));
            }
        }
        out.push(Check::bound(format!("n={n}: {} moments equal pairing counts exactly", alphas.len()), worst_exact.0, 0.0));

        let mc = monte_carlo_moments(n, &alphas, 4_000_000, 97 + n as u64);
        let (mut worst, mut at) = (0.0f64, String::new());
        for (a, est) in alphas.iter().zip(&mc) {
            let r = moment(n, a);
            let err = (est - *r.numer() as f64 / *r.denom() as f64).abs();
            if err > worst {
                worst = err;
                at = format!("{a:?}");
            }
        }
        out.push(Check::bound(format!("n={n}: Monte-Carlo, worst at α={at}"), worst, 1e-3));
    }
    Ok(out)
}

pub(super) fn module_linearity() -> Result<Vec<Check>> {
    let s = CalculusSettings::default();
    let d = Deformation::two_torus(1.0 / 2f64.sqrt());
    let mut r = rng(79);
    let modes: [&[i32]; 3] = [&[1, 0], &[0, 1], &[1, 1]];
    let mut out = Vec::new();
    let rel = |label: String, a: Complex64, b: Complex64, tol: f64| Check::rel(label, a, b, tol, 1e-6);

    // Vector-field functionals of Δ_h.
    let h = positive(&d, &mut r, &modes, 0.2, false);
    let l = build_conformal_laplacian(&h, LaplacianVariant::TwoTorus, &s)?;
    let (v, w) = (constants(&mut r, 2), constants(&mut r, 2));
    let f = &TorusElement::scalar(&d, complex(&mut r)) + &trig(&d, &mut r, &modes, 0.5, false);
    let field = |c: &[Complex64]| VectorFieldSpec::derivation(constant_fields(&d, c));
    let (vs, ws) = (field(&v), field(&w));
    let vw = metric_vf(&l, &vs, &ws, None, &s)?.value;
    out.push(rel("metric_vf(V,W) = metric_vf(W,V)".into(), vw, metric_vf(&l, &ws, &vs, None, &s)?.value, 1e-12));
    let c = complex(&mut r);
    let u = constants(&mut r, 2);
    let mixed: Vec<Complex64> = v.iter().zip(&u).map(|(a, b)| c * a + b).collect();
    let lhs = metric_vf(&l, &field(&mixed), &ws, None, &s)?.value;
    let rhs = c * vw + metric_vf(&l, &field(&u), &ws, None, &s)?.value;
    out.push(rel("metric_vf(cV+U,W) = c·metric_vf(V,W) + metric_vf(U,W)".into(), lhs, rhs, 1e-12));
    let local = metric_vf(&l, &vs, &ws, Some(&f), &s)?.value;
    out.push(rel("𝒲(fVWΔ⁻²) = metric_vf(fV,W)".into(), local, metric_vf(&l, &vs.left_multiplied(&f)?, &ws, None, &s)?.value, 1e-12));
    out.push(rel("𝒲(fVWΔ⁻²) = metric_vf(V,fW)".into(), local, metric_vf(&l, &vs, &ws.left_multiplied(&f)?, None, &s)?.value, 1e-12));

    // Form functionals of the product triple over D_k, where 𝒢 does not vanish.
    let k = positive(&d, &mut r, &modes[..2], 0.2, true);
    let dk = build_dirac(&MetricData::Flat(d.clone()), &DiracFlavor::Conformal(k.clone()), &s)?;
    let c = Complex64::new(0.3, 0.4);
    let big = product_dirac(&dk.symbol, &dk.grading, c)?;
    let element = |r: &mut Rng| &TorusElement::scalar(&d, complex(r)) + &trig(&d, r, &modes, 0.5, false);
    let form = |r: &mut Rng| -> Result<CliffordValue> {
        let mut one = || -> Result<CliffordValue> {
            let comps = (0..2).map(|_| element(r)).collect();
            one_form_value(&OneFormSpec::rescaled(comps, k.clone()), &dk.rep)
        };
        let (plus, minus) = (one()?, one()?);
        let parts = ProductForm { plus, minus, phi_plus: element(r), phi_minus: element(r) };
        Ok(product_form_value(&parts, &dk.grading, c))
    };
    let (vv, ww) = (form(&mut r)?, form(&mut r)?);
    let dim = big.mat_dim();
    let (a, b) = (CliffordValue::scalar(&element(&mut r), dim), CliffordValue::scalar(&element(&mut r), dim));
    let g = |x: &CliffordValue, y: &CliffordValue| -> Result<Complex64> { Ok(metric_form_op(&big, x, y, &s)?.value) };
    let big_g = |x: &CliffordValue, y: &CliffordValue, o| -> Result<Complex64> { Ok(einstein_form_op(&big, x, y, o, &s)?.value) };
    let (vb, bw, av, wa) = (vv.try_mul(&b)?, b.try_mul(&ww)?, a.try_mul(&vv)?, ww.try_mul(&a)?);
    out.push(rel("𝓰_𝒟(vb,w) = 𝓰_𝒟(v,bw)".into(), g(&vb, &ww)?, g(&vv, &bw)?, 1e-12));
    out.push(rel("𝓰_𝒟(av,w) = 𝓰_𝒟(v,wa)".into(), g(&av, &ww)?, g(&vv, &wa)?, 1e-12));

    // 𝒢 is right-linear only for spectrally closed triples: D_k on the 4-torus.
    let mut th = vec![vec![0.0; 4]; 4];
    for (x, y, t) in [(0, 2, 0.37), (1, 3, 0.481), (0, 3, -0.185)] {
        th[x][y] = t;
        th[y][x] = -t;
    }
    let d4 = Deformation::new(4, &th)?;
    let k4 = positive(&d4, &mut r, &[&[1, 0, 1, 0]], 0.2, true);
    let dk4 = build_dirac(&MetricData::Flat(d4.clone()), &DiracFlavor::Conformal(k4.clone()), &s)?;
    let element4 = |r: &mut Rng, m: &[i32]| &TorusElement::scalar(&d4, complex(r)) + &trig(&d4, r, &[m], 0.5, false);
    let form4 = |r: &mut Rng| -> Result<CliffordValue> {
        let comps = (0..4).map(|a| element4(r, if a % 2 == 0 { &[1, 0, 0, 0] } else { &[0, 0, 1, 0] })).collect();
        one_form_value(&OneFormSpec::rescaled(comps, k4.clone()), &dk4.rep)
    };
    let (v4, w4) = (form4(&mut r)?, form4(&mut r)?);
    let b4 = CliffordValue::scalar(&element4(&mut r, &[0, 1, 0, 0]), 4);
    let samples = vec![b4.clone(), v4.clone(), w4.clone()];
    let closed = spectral_closedness_check(&dk4.symbol, &samples, 1e-9, &s)?;
    out.push(Check::bound("D_k on the 4-torus spectrally closed", closed.max_abs, 1e-9));
    if closed.pass {
        let g4 = |x: &CliffordValue, y: &CliffordValue| -> Result<Complex64> {
            Ok(einstein_form_op(&dk4.symbol, x, y, FormOrdering::Right, &s)?.value)
        };
        out.push(rel("𝒢_D(vb,w) = 𝒢_D(v,bw)".into(), g4(&v4.try_mul(&b4)?, &w4)?, g4(&v4, &b4.try_mul(&w4)?)?, 1e-12));
    }
    let right = big_g(&vv, &ww, FormOrdering::Right)?;
    out.push(rel("𝒢_𝒟 orderings v{𝒟,w}𝒟 and {𝒟,v}w𝒟".into(), right, big_g(&vv, &ww, FormOrdering::Left)?, 1e-10));
    Ok(out)
}
