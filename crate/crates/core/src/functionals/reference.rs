//! Displayed closed forms, evaluated term by term with algebra primitives only.
//!
//! Formulas written for the conformally rescaled Dirac operators are
//! normalized by `2^m v_{n−1}`; the reports carry that factor in `value` so
//! they compare directly with the engine.

use num_complex::Complex64;

use super::{
    commutator_form, einstein_form_op, metric_form_op, volume_functional, FormOrdering,
    FunctionalReport, ReportMeta,
};
use crate::algebra::TorusElement;
use crate::clifford::{matrix_trace, CliffordValue};
use crate::error::{Error, Result};
use crate::operators::ConnectionData;
use crate::residue::sphere_volume;
use crate::symbol::{CalculusSettings, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Metric,
    Einstein,
}

/// A one-form `[[w₊, γcφ₊], [γc*φ₋, w₋]]` of the product triple.
#[derive(Clone, Debug)]
pub struct ProductForm {
    pub plus: CliffordValue,
    pub minus: CliffordValue,
    pub phi_plus: TorusElement,
    pub phi_minus: TorusElement,
}

#[derive(Clone, Debug)]
pub enum ClosedForm {
    /// `π τ(h⁴) V^a W^a` and a vanishing Einstein functional.
    NcTwoLaplacian { h: TorusElement, v: Vec<Complex64>, w: Vec<Complex64>, part: Part },
    /// The noncommutative four-torus Laplacian, with constant `V`, `W`.
    NcFourLaplacian { chi: TorusElement, v: Vec<Complex64>, w: Vec<Complex64>, part: Part },
    /// Commutative density of the four-torus Einstein functional.
    FourLaplacianCommutativeLimit { chi: TorusElement, v: Vec<Complex64>, w: Vec<Complex64> },
    /// `τ(V^a W^a)` and a vanishing Einstein functional for `D_k` on the two-torus.
    NcTwoDirac { v: Vec<TorusElement>, w: Vec<TorusElement>, part: Part },
    /// `D_k` on the four-torus.
    NcFourDirac { k: TorusElement, v: Vec<TorusElement>, w: Vec<TorusElement>, part: Part },
    /// `(1/6) τ(V^a W^b G_{ab})` with the conformal Einstein tensor of `g = k^{-4} δ`.
    DiracCommutativeLimit { k: TorusElement, v: Vec<TorusElement>, w: Vec<TorusElement> },
    /// `½ v_{n−1} τ(V^a W^b Tr F_{ab})` on a flat torus.
    ConnectionCurvature { connection: ConnectionData, v: Vec<TorusElement>, w: Vec<TorusElement> },
    /// `½ v_{n−1} τ(Tr E · V^a W^a)` on a flat torus.
    PotentialShift { e: CliffordValue, v: Vec<TorusElement>, w: Vec<TorusElement> },
    /// The product triple over `A ⊗ C²`, assembled from functionals of the base triple.
    ProductTriple {
        base: Symbol,
        c: Complex64,
        omega: ProductForm,
        omega_prime: ProductForm,
        part: Part,
    },
}

impl ClosedForm {
    fn name(&self) -> &'static str {
        match self {
            ClosedForm::NcTwoLaplacian { .. } => "nc2-laplacian",
            ClosedForm::NcFourLaplacian { .. } => "nc4-laplacian",
            ClosedForm::FourLaplacianCommutativeLimit { .. } => "nc4-laplacian-commutative-limit",
            ClosedForm::NcTwoDirac { .. } => "nc2-dirac",
            ClosedForm::NcFourDirac { .. } => "nc4-dirac",
            ClosedForm::DiracCommutativeLimit { .. } => "nc4-dirac-commutative-limit",
            ClosedForm::ConnectionCurvature { .. } => "connection-curvature",
            ClosedForm::PotentialShift { .. } => "potential-shift",
            ClosedForm::ProductTriple { .. } => "product-triple",
        }
    }
}

fn check_len<T>(n: usize, xs: &[&[T]]) -> Result<()> {
    if xs.iter().any(|x| x.len() != n) {
        return Err(Error::Argument(format!("expected {n} components")));
    }
    Ok(())
}

fn inv(a: &TorusElement) -> Result<TorusElement> {
    let s = CalculusSettings::default();
    Ok(a.invert(s.inversion_tol, s.max_radius)?.0)
}

fn dot(v: &[Complex64], w: &[Complex64]) -> Complex64 {
    v.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// `Σ_a c_a δ_a x`.
fn along(c: &[Complex64], x: &TorusElement) -> Result<TorusElement> {
    let mut acc = TorusElement::zero(x.deformation());
    for (a, ca) in c.iter().enumerate() {
        acc = &acc + &x.derive(a)?.scale(*ca);
    }
    Ok(acc)
}

fn mul(factors: &[&TorusElement]) -> Result<TorusElement> {
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = acc.try_mul(f)?;
    }
    Ok(acc)
}

fn report(name: &str, density: TorusElement, normalization: Option<f64>) -> FunctionalReport {
    let n = density.dim();
    FunctionalReport::from_density(
        density,
        ReportMeta { functional: name.into(), dim: n, normalization, ..ReportMeta::default() },
    )
}

/// Factor `2^m` in front of the Dirac formulas, as a density multiplier.
fn spinor_factor(n: usize) -> (f64, f64) {
    let f = 2f64.powi(n as i32 / 2);
    (f, f * sphere_volume(n))
}

pub fn closed_form_reference(form: &ClosedForm) -> Result<FunctionalReport> {
    let name = form.name();
    match form {
        ClosedForm::NcTwoLaplacian { h, v, w, part } => {
            check_len(2, &[v, w])?;
            let density = match part {
                Part::Metric => h.pow(4).scale(dot(v, w) * 0.5),
                Part::Einstein => TorusElement::zero(h.deformation()),
            };
            Ok(report(name, density, None))
        }
        ClosedForm::NcFourLaplacian { chi, v, w, part } => {
            check_len(4, &[v, w])?;
            let density = match part {
                Part::Metric => chi.pow(3).scale(dot(v, w)),
                Part::Einstein => four_laplacian_einstein(chi, v, w)?,
            };
            Ok(report(name, density, None))
        }
        ClosedForm::FourLaplacianCommutativeLimit { chi, v, w } => {
            check_len(4, &[v, w])?;
            if !chi.deformation().is_commutative() {
                return Err(Error::Precondition("commutative limit needs θ = 0".into()));
            }
            let vc = along(v, chi)?;
            let wc = along(w, chi)?;
            let mut hess = TorusElement::zero(chi.deformation());
            for a in 0..4 {
                for b in 0..4 {
                    hess = &hess + &chi.derive(a)?.derive(b)?.scale(v[a] * w[b]);
                }
            }
            let mut grad2 = TorusElement::zero(chi.deformation());
            for a in 0..4 {
                let d = chi.derive(a)?;
                grad2 = &grad2 + &(&d * &d);
            }
            let vw = dot(v, w);
            let density = &(&(&(&vc * &wc).scale_real(0.25) - &(&hess * chi).scale_real(1.0 / 6.0))
                - &grad2.scale(vw / 8.0))
                + &(&chi.flat_laplacian() * chi).scale(vw / 6.0);
            Ok(report(name, density, None))
        }
        ClosedForm::NcTwoDirac { v, w, part } => {
            check_len(2, &[v, w])?;
            let (f, norm) = spinor_factor(2);
            let density = match part {
                Part::Metric => contract(v, w)?.scale_real(f),
                Part::Einstein => TorusElement::zero(v[0].deformation()),
            };
            Ok(report(name, density, Some(norm)))
        }
        ClosedForm::NcFourDirac { k, v, w, part } => {
            check_len(4, &[v, w])?;
            let (f, norm) = spinor_factor(4);
            let density = match part {
                Part::Metric => contract(w, v)?.try_mul(&inv(k)?.pow(4))?,
                Part::Einstein => four_dirac_einstein(k, v, w)?,
            };
            Ok(report(name, density.scale_real(f), Some(norm)))
        }
        ClosedForm::DiracCommutativeLimit { k, v, w } => {
            check_len(4, &[v, w])?;
            if !k.deformation().is_commutative() {
                return Err(Error::Precondition("commutative limit needs θ = 0".into()));
            }
            let (f, norm) = spinor_factor(4);
            let density = conformal_einstein_contracted(k, v, w)?.scale_real(f / 6.0);
            Ok(report(name, density, Some(norm)))
        }
        ClosedForm::ConnectionCurvature { connection, v, w } => {
            let n = connection.t.len();
            check_len(n, &[v, w])?;
            let defm = v[0].deformation();
            let mut density = TorusElement::zero(defm);
            for a in 0..n {
                for b in 0..n {
                    let tr = matrix_trace(&connection.curvature(a, b)?);
                    density = &density + &mul(&[&v[a], &w[b], &tr])?;
                }
            }
            Ok(report(name, density.scale_real(0.5), None))
        }
        ClosedForm::PotentialShift { e, v, w } => {
            let n = e.deformation().dim();
            check_len(n, &[v, w])?;
            let density = matrix_trace(e).try_mul(&contract(v, w)?)?.scale_real(0.5);
            Ok(report(name, density, None))
        }
        ClosedForm::ProductTriple { base, c, omega, omega_prime, part } => {
            product_triple(base, *c, omega, omega_prime, *part)
        }
    }
}

/// `Σ_a v_a w_a`.
fn contract(v: &[TorusElement], w: &[TorusElement]) -> Result<TorusElement> {
    let mut acc = TorusElement::zero(v[0].deformation());
    for (a, b) in v.iter().zip(w) {
        acc = &acc + &a.try_mul(b)?;
    }
    Ok(acc)
}

fn four_laplacian_einstein(chi: &TorusElement, v: &[Complex64], w: &[Complex64]) -> Result<TorusElement> {
    let ci = inv(chi)?;
    let vc = along(v, chi)?;
    let wc = along(w, chi)?;
    let vw = dot(v, w);
    let t = |c: f64, fs: &[&TorusElement]| -> Result<TorusElement> { Ok(mul(fs)?.scale_real(c)) };
    let mut acc = TorusElement::zero(chi.deformation());
    for term in [
        t(-1.0 / 24.0, &[chi, &vc, &ci, &wc])?,
        t(-1.0 / 24.0, &[chi, &wc, &ci, &vc])?,
        t(5.0 / 24.0, &[&vc, &ci, &wc, chi])?,
        t(5.0 / 24.0, &[&wc, &ci, &vc, chi])?,
        t(-1.0 / 24.0, &[&vc, &wc])?,
        t(-1.0 / 24.0, &[&wc, &vc])?,
    ] {
        acc = &acc + &term;
    }
    let mut hess = TorusElement::zero(chi.deformation());
    for a in 0..4 {
        for b in 0..4 {
            hess = &hess + &chi.derive(a)?.derive(b)?.scale(v[a] * w[b]);
        }
    }
    acc = &acc + &(&hess * chi).scale_real(-1.0 / 3.0);
    acc = &acc + &(chi * &hess).scale_real(1.0 / 6.0);
    let lap = chi.flat_laplacian();
    let mut trace_part = &(chi * &lap).scale_real(1.0 / 12.0) + &(&lap * chi).scale_real(1.0 / 12.0);
    for a in 0..4 {
        let d = chi.derive(a)?;
        trace_part = &trace_part + &t(-1.0 / 24.0, &[&d, &ci, &d, chi])?;
        trace_part = &trace_part + &t(-1.0 / 24.0, &[chi, &d, &ci, &d])?;
        trace_part = &trace_part + &t(-1.0 / 24.0, &[&d, &d])?;
    }
    Ok(&acc + &trace_part.scale(vw))
}

fn four_dirac_einstein(k: &TorusElement, v: &[TorusElement], w: &[TorusElement]) -> Result<TorusElement> {
    let ki = inv(k)?;
    let kp: Vec<TorusElement> = (0..=4).map(|p| k.pow(p)).collect();
    let kn: Vec<TorusElement> = (0..=4).map(|p| ki.pow(p)).collect();
    let dk: Vec<TorusElement> = (0..4).map(|a| k.derive(a)).collect::<Result<_>>()?;
    let t = |c: f64, fs: &[&TorusElement]| -> Result<TorusElement> { Ok(mul(fs)?.scale_real(c)) };
    let defm = k.deformation();
    let mut trace_part = TorusElement::zero(defm);
    for c in 0..4 {
        let d = &dk[c];
        trace_part = &trace_part + &t(1.0 / 3.0, &[&kn[1], d, &kn[1], d])?;
        trace_part = &trace_part + &t(1.0 / 3.0, &[&kp[2], d, &kn[4], d])?;
        trace_part = &trace_part + &t(2.0 / 3.0, &[&kp[1], d, &kn[3], d])?;
    }
    trace_part = &trace_part - &(&kn[1] * &k.flat_laplacian()).scale_real(2.0 / 3.0);
    let mut acc = TorusElement::zero(defm);
    for a in 0..4 {
        for b in 0..4 {
            let (da, db) = (&dk[a], &dk[b]);
            let mut inner = TorusElement::zero(defm);
            for term in [
                t(1.0 / 3.0, &[&kn[4], da, &kp[2], db])?,
                t(2.0 / 3.0, &[&kn[3], da, &kp[1], db])?,
                t(1.0, &[&kn[2], da, db])?,
                t(2.0 / 3.0, &[&kn[1], da, &kn[1], db])?,
                t(-4.0 / 3.0, &[&kp[1], da, &kn[3], db])?,
                t(-2.0 / 3.0, &[&kp[2], da, &kn[4], db])?,
                t(2.0 / 3.0, &[&kn[1], &da.derive(b)?])?,
            ] {
                inner = &inner + &term;
            }
            if a == b {
                inner = &inner + &trace_part;
            }
            acc = &acc + &mul(&[&v[a], &w[b], &inner])?;
        }
    }
    Ok(acc)
}

/// `V^a W^b G_{ab}` with `G_{ab} = 4(k^{-2}k_a k_b + k^{-1}k_{ab}) + 8δ_{ab}k^{-2}k_c k_c − 4δ_{ab}k^{-1}k_{cc}`
/// and `k_a = ∂_a k`.
fn conformal_einstein_contracted(k: &TorusElement, v: &[TorusElement], w: &[TorusElement]) -> Result<TorusElement> {
    let i = Complex64::new(0.0, 1.0);
    let defm = k.deformation();
    let ki = inv(k)?;
    let ki2 = &ki * &ki;
    let grad: Vec<TorusElement> = (0..4).map(|a| Ok(k.derive(a)?.scale(i))).collect::<Result<_>>()?;
    let hess = |a: usize, b: usize| -> Result<TorusElement> { Ok(k.derive(a)?.derive(b)?.scale_real(-1.0)) };
    let mut grad2 = TorusElement::zero(defm);
    let mut lap = TorusElement::zero(defm);
    for c in 0..4 {
        grad2 = &grad2 + &(&grad[c] * &grad[c]);
        lap = &lap + &hess(c, c)?;
    }
    let mut acc = TorusElement::zero(defm);
    for a in 0..4 {
        for b in 0..4 {
            let mut g = (&(&ki2 * &(&grad[a] * &grad[b])) + &(&ki * &hess(a, b)?)).scale_real(4.0);
            if a == b {
                g = &g + &(&(&ki2 * &grad2).scale_real(8.0) - &(&ki * &lap).scale_real(4.0));
            }
            acc = &acc + &mul(&[&v[a], &w[b], &g])?;
        }
    }
    Ok(acc)
}

fn product_triple(
    base: &Symbol,
    c: Complex64,
    o: &ProductForm,
    op: &ProductForm,
    part: Part,
) -> Result<FunctionalReport> {
    let s = CalculusSettings::default();
    let n = base.dim();
    let cc = c.norm_sqr();
    let g = |x: &CliffordValue, y: &CliffordValue| metric_form_op(base, x, y, &s);
    let big_g = |x: &CliffordValue, y: &CliffordValue| einstein_form_op(base, x, y, FormOrdering::Right, &s);
    let vol = |f: &TorusElement| volume_functional(base, f, &s);
    let mut parts: Vec<(f64, FunctionalReport)> = Vec::new();
    match part {
        Part::Metric => {
            parts.push((1.0, g(&o.plus, &op.plus)?));
            parts.push((1.0, g(&o.minus, &op.minus)?));
            let mixed = &o.phi_plus.try_mul(&op.phi_minus)? + &o.phi_minus.try_mul(&op.phi_plus)?;
            parts.push((cc, vol(&mixed)?));
        }
        Part::Einstein => {
            let gpp = g(&o.plus, &op.plus)?;
            let gmm = g(&o.minus, &op.minus)?;
            parts.push((1.0, big_g(&o.plus, &op.plus)?));
            parts.push((1.0, big_g(&o.minus, &op.minus)?));
            parts.push((cc, g(&(&o.plus - &o.minus), &(&op.plus - &op.minus))?));
            parts.push((-(n as f64) / 2.0 * cc, gpp));
            parts.push((-(n as f64) / 2.0 * cc, gmm));
            let rank = base.mat_dim();
            let d = |phi: &TorusElement| commutator_form(base, &CliffordValue::scalar(phi, rank), &s);
            parts.push((cc, g(&o.plus, &d(&op.phi_plus)?)?));
            parts.push((-cc, g(&d(&o.phi_plus)?, &op.minus)?));
            parts.push((cc, g(&o.minus, &d(&op.phi_minus)?)?));
            parts.push((-cc, g(&d(&o.phi_minus)?, &op.plus)?));
            let sum = &o.phi_plus + &o.phi_minus;
            let sum_p = &op.phi_plus + &op.phi_minus;
            parts.push((cc * cc, vol(&sum.try_mul(&sum_p)?)?));
        }
    }
    let mut density = TorusElement::zero(base.deformation());
    for (coeff, r) in &parts {
        density = &density + &r.density.v_coeff.scale_real(*coeff);
    }
    let mut out = report("product-triple", density, None);
    out.meta.mat_dim = 2 * base.mat_dim();
    Ok(out)
}
