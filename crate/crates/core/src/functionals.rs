//! Spectral metric and Einstein functionals, spectral closedness, and
//! closed-form evaluators used to cross-check them.
//!
//! With `n = 2m` the functionals over vector fields are
//! `𝒲(f V W L^{-m-1})` (metric) and `𝒲(f V W L^{-m})` (Einstein); over
//! one-forms they are `𝒲(v w (D²)^{-m})` and `𝒲(v {D, w} D (D²)^{-m})`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{FourierRecord, TorusElement};
use crate::clifford::{CliffordValue, ConstMatrix};
use crate::error::{Error, Result};
use crate::operators::{build_vector_field, one_form_value, OneFormSpec, VectorFieldSpec};
use crate::clifford::GammaRep;
use crate::residue::{composition_residue, sphere_volume, wodzicki_residue, Residue, ResidueDensity};
use crate::symbol::{compose_with, parametrix_with, power_symbols_with, CalculusSettings, Symbol, TermKey};

mod reference;

pub use reference::{closed_form_reference, ClosedForm, Part, ProductForm};


#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub functional: String,
    pub dim: usize,
    pub mat_dim: usize,
    pub depth: u32,
    pub below_order: bool,
    /// Scale between `value` and the formula's own normalization, when it has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Fully resolved run configuration, when the report comes from one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

/// A functional value, its coefficient of `v_{n−1}`, and the density it came from.
#[derive(Clone, Debug)]
pub struct FunctionalReport {
    pub value: Complex64,
    pub v_coeff: Complex64,
    pub density: ResidueDensity,
    pub meta: ReportMeta,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexRecord {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexRecord {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

impl From<ComplexRecord> for Complex64 {
    fn from(c: ComplexRecord) -> Self {
        Complex64::new(c.re, c.im)
    }
}

/// Serialized form of a [`FunctionalReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub value: ComplexRecord,
    pub v_coeff: ComplexRecord,
    pub density: FourierRecord,
    pub meta: ReportMeta,
}

impl FunctionalReport {
    fn from_residue(r: Residue, meta: ReportMeta) -> Self {
        Self { value: r.value, v_coeff: r.v_coeff, density: r.density, meta }
    }

    /// A report for a value known in closed form, with density `v_coeff`.
    pub fn from_density(v_coeff: TorusElement, meta: ReportMeta) -> Self {
        let n = v_coeff.dim();
        let c = v_coeff.trace();
        Self { value: c * sphere_volume(n), v_coeff: c, density: ResidueDensity { v_coeff }, meta }
    }

    /// `|value − other.value|` relative to `max(|other.value|, floor)`.
    pub fn rel_err(&self, other: &FunctionalReport, floor: f64) -> f64 {
        (self.value - other.value).norm() / other.value.norm().max(floor)
    }

    pub fn to_record(&self) -> ReportRecord {
        ReportRecord {
            value: self.value.into(),
            v_coeff: self.v_coeff.into(),
            density: self.density.to_record(),
            meta: self.meta.clone(),
        }
    }

    pub fn from_record(rec: &ReportRecord) -> Result<Self> {
        Ok(Self {
            value: rec.value.into(),
            v_coeff: rec.v_coeff.into(),
            density: ResidueDensity { v_coeff: TorusElement::from_record(&rec.density)? },
            meta: rec.meta.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }
}

fn meta(name: &str, s: &Symbol, depth: u32, below_order: bool) -> ReportMeta {
    ReportMeta {
        functional: name.into(),
        dim: s.dim(),
        mat_dim: s.mat_dim(),
        depth,
        below_order,
        ..ReportMeta::default()
    }
}

fn half_dim(s: &Symbol) -> Result<u32> {
    let n = s.dim();
    if n % 2 != 0 {
        return Err(Error::Precondition(format!("functionals need an even dimension, got {n}")));
    }
    Ok((n / 2) as u32)
}

/// `σ(L^{-l})` tracked to `depth` orders.
pub fn inverse_power(l_sym: &Symbol, l: u32, depth: u32, settings: &CalculusSettings) -> Result<Symbol> {
    let b = parametrix_with(l_sym, depth, settings)?;
    power_symbols_with(&b, l, depth, settings)
}

/// Orders of `L^{-l}` that reach order `−n` after composing with an operator of order `front`.
fn inverse_depth(front: i32, l: u32, n: usize, settings: &CalculusSettings) -> u32 {
    ((front - 2 * l as i32 + n as i32 + 1).max(1) as u32).max(settings.min_depth)
}

fn localize(p: Symbol, f: Option<&TorusElement>) -> Symbol {
    match f {
        Some(f) => {
            let rank = p.mat_dim();
            p.left_mul(&CliffordValue::scalar(f, rank))
        }
        None => p,
    }
}

fn vector_functional(
    name: &str,
    l_sym: &Symbol,
    v: &VectorFieldSpec,
    w: &VectorFieldSpec,
    f: Option<&TorusElement>,
    power: u32,
    settings: &CalculusSettings,
) -> Result<FunctionalReport> {
    if l_sym.top_order() != 2 {
        return Err(Error::Precondition("vector-field functionals need an order-2 operator".into()));
    }
    let defm = l_sym.deformation();
    let rank = l_sym.mat_dim();
    let vs = build_vector_field(v, defm, rank, settings)?;
    let ws = build_vector_field(w, defm, rank, settings)?;
    let vw = compose_with(&vs, &ws, 3, settings)?;
    let depth = inverse_depth(2, power, l_sym.dim(), settings);
    let inv = inverse_power(l_sym, power, depth, settings)?;
    let r = composition_residue(&localize(vw, f), &inv)?;
    let below = r.below_order;
    Ok(FunctionalReport::from_residue(r, meta(name, l_sym, depth, below)))
}

/// `𝒲(f V W L^{-m-1})`.
pub fn metric_vf(
    l_sym: &Symbol,
    v: &VectorFieldSpec,
    w: &VectorFieldSpec,
    f: Option<&TorusElement>,
    settings: &CalculusSettings,
) -> Result<FunctionalReport> {
    let m = half_dim(l_sym)?;
    vector_functional("metric_vf", l_sym, v, w, f, m + 1, settings)
}

/// `𝒲(f V W L^{-m})`.
pub fn einstein_vf(
    l_sym: &Symbol,
    v: &VectorFieldSpec,
    w: &VectorFieldSpec,
    f: Option<&TorusElement>,
    settings: &CalculusSettings,
) -> Result<FunctionalReport> {
    let m = half_dim(l_sym)?;
    vector_functional("einstein_vf", l_sym, v, w, f, m, settings)
}

/// `𝒲(P L^{-m})` and `𝒲(P L^{-m-1})` for an arbitrary differential operator `P`
/// of order 2 in place of `VW`.
pub fn functional_of(name: &str, p: &Symbol, l_sym: &Symbol, power: u32, settings: &CalculusSettings) -> Result<FunctionalReport> {
    let depth = inverse_depth(p.top_order(), power, l_sym.dim(), settings);
    let inv = inverse_power(l_sym, power, depth, settings)?;
    let r = composition_residue(p, &inv)?;
    let below = r.below_order;
    Ok(FunctionalReport::from_residue(r, meta(name, l_sym, depth, below)))
}

/// `σ(D²)` composed exactly.
pub fn dirac_square(d: &Symbol, settings: &CalculusSettings) -> Result<Symbol> {
    let exact = CalculusSettings { prune_eps: 0.0, ..*settings };
    compose_with(d, d, 3, &exact)
}

/// Which side the anticommutator sits on in the Einstein functional of forms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormOrdering {
    /// `v {D, w} D`.
    #[default]
    Right,
    /// `{D, v} w D`.
    Left,
}

/// `𝒲(v w (D²)^{-m})` for zero-order `v`, `w`.
pub fn metric_form_op(d: &Symbol, v: &CliffordValue, w: &CliffordValue, settings: &CalculusSettings) -> Result<FunctionalReport> {
    let m = half_dim(d)?;
    let depth = inverse_depth(0, m, d.dim(), settings);
    let inv = inverse_power(&dirac_square(d, settings)?, m, depth, settings)?;
    let p = inv.left_mul(&v.try_mul(w)?);
    let r = wodzicki_residue(&p)?;
    let below = r.below_order;
    Ok(FunctionalReport::from_residue(r, meta("metric_form", d, depth, below)))
}

/// `𝒲(v {D, w} D (D²)^{-m})`, or the left ordering.
pub fn einstein_form_op(
    d: &Symbol,
    v: &CliffordValue,
    w: &CliffordValue,
    ordering: FormOrdering,
    settings: &CalculusSettings,
) -> Result<FunctionalReport> {
    let m = half_dim(d)?;
    let exact = CalculusSettings { prune_eps: 0.0, ..*settings };
    let anti = |x: &CliffordValue| -> Result<Symbol> {
        let xs = Symbol::multiplication(x);
        compose_with(d, &xs, 2, &exact)?.try_add(&compose_with(&xs, d, 2, &exact)?)
    };
    let front = match ordering {
        FormOrdering::Right => anti(w)?.left_mul(v),
        FormOrdering::Left => compose_with(&anti(v)?, &Symbol::multiplication(w), 2, &exact)?,
    };
    let p = compose_with(&front, d, 3, &exact)?;
    let depth = inverse_depth(2, m, d.dim(), settings);
    let inv = inverse_power(&dirac_square(d, settings)?, m, depth, settings)?;
    let r = composition_residue(&p, &inv)?;
    let below = r.below_order;
    Ok(FunctionalReport::from_residue(r, meta("einstein_form", d, depth, below)))
}

pub fn metric_form(d: &Symbol, rep: &GammaRep, v: &OneFormSpec, w: &OneFormSpec, settings: &CalculusSettings) -> Result<FunctionalReport> {
    metric_form_op(d, &one_form_value(v, rep)?, &one_form_value(w, rep)?, settings)
}

pub fn einstein_form(d: &Symbol, rep: &GammaRep, v: &OneFormSpec, w: &OneFormSpec, settings: &CalculusSettings) -> Result<FunctionalReport> {
    einstein_form_op(d, &one_form_value(v, rep)?, &one_form_value(w, rep)?, FormOrdering::Right, settings)
}

/// `𝓋(f) = 𝒲(f (D²)^{-m})`.
pub fn volume_functional(d: &Symbol, f: &TorusElement, settings: &CalculusSettings) -> Result<FunctionalReport> {
    let rank = d.mat_dim();
    let mut r = metric_form_op(d, &CliffordValue::scalar(f, rank), &CliffordValue::identity(d.deformation(), rank), settings)?;
    r.meta.functional = "volume".into();
    Ok(r)
}

/// The zero-order operator `[D, a]` for a zero-order `a`.
pub fn commutator_form(d: &Symbol, a: &CliffordValue, settings: &CalculusSettings) -> Result<CliffordValue> {
    let exact = CalculusSettings { prune_eps: 0.0, ..*settings };
    let a_sym = Symbol::multiplication(a);
    let c = compose_with(d, &a_sym, 2, &exact)?.try_sub(&compose_with(&a_sym, d, 2, &exact)?)?;
    zero_order_value(&c)
}

/// The coefficient of an operator of order zero with no `ξ` dependence.
pub fn zero_order_value(s: &Symbol) -> Result<CliffordValue> {
    let mut out = CliffordValue::zero(s.deformation(), s.mat_dim());
    for t in s.terms() {
        if t.key == TermKey::ONE {
            out = &out + &t.coeff;
        } else if t.coeff.max_abs() > 1e-14 {
            return Err(Error::Precondition("operator is not of order zero".into()));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClosednessReport {
    pub values: Vec<ComplexRecord>,
    pub max_abs: f64,
    pub tol: f64,
    pub pass: bool,
}

/// `max |𝒲(T D (D²)^{-m})|` over the sample operators `T`.
pub fn spectral_closedness_check(
    d: &Symbol,
    samples: &[CliffordValue],
    tol: f64,
    settings: &CalculusSettings,
) -> Result<ClosednessReport> {
    let m = half_dim(d)?;
    let inv = inverse_power(&dirac_square(d, settings)?, m, inverse_depth(1, m, d.dim(), settings), settings)?;
    let values = samples
        .iter()
        .map(|t| Ok(composition_residue(&d.left_mul(t), &inv)?.value))
        .collect::<Result<Vec<Complex64>>>()?;
    let max_abs = values.iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok(ClosednessReport { values: values.into_iter().map(Into::into).collect(), max_abs, tol, pass: max_abs <= tol })
}

/// Block form `[[w₊, γcφ₊], [γc*φ₋, w₋]]` of a one-form of the product triple.
pub fn product_form_value(form: &ProductForm, grading: &ConstMatrix, c: Complex64) -> CliffordValue {
    let gc = grading.scale(c);
    let gcc = grading.scale(c.conj());
    CliffordValue::block(
        &form.plus,
        &CliffordValue::from_const(&form.phi_plus, &gc),
        &CliffordValue::from_const(&form.phi_minus, &gcc),
        &form.minus,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Deformation;
    use crate::operators::{build_dirac, build_flat_laplacian, DiracFlavor, VectorFieldSpec};
    use crate::residue::sphere_volume;
    use crate::geometry::MetricData;
    use std::sync::Arc;

    fn cosine(defm: &Arc<Deformation>, k: &[i32], amp: f64) -> TorusElement {
        let minus: Vec<i32> = k.iter().map(|x| -x).collect();
        (&TorusElement::monomial(defm, k) + &TorusElement::monomial(defm, &minus)).scale_real(amp / 2.0)
    }

    fn unit(defm: &Arc<Deformation>, a: usize) -> Vec<TorusElement> {
        (0..defm.dim()).map(|b| TorusElement::real(defm, if a == b { 1.0 } else { 0.0 })).collect()
    }

    #[test]
    fn flat_metric_is_minus_half_sphere_volume() {
        let s = CalculusSettings::default();
        let d = Deformation::two_torus(0.3);
        let l = build_flat_laplacian(&d, 1);
        for a in 0..2 {
            for b in 0..2 {
                let r = metric_vf(&l, &VectorFieldSpec::geometric(unit(&d, a)), &VectorFieldSpec::geometric(unit(&d, b)), None, &s).unwrap();
                let want = if a == b { -sphere_volume(2) / 2.0 } else { 0.0 };
                assert!((r.value.re - want).abs() < 1e-13 && r.value.im.abs() < 1e-13, "{a}{b}: {}", r.value);
                let e = einstein_vf(&l, &VectorFieldSpec::geometric(unit(&d, a)), &VectorFieldSpec::geometric(unit(&d, b)), None, &s).unwrap();
                assert!(e.value.norm() < 1e-13);
            }
        }
    }

    #[test]
    fn vector_functionals_are_symmetric_bilinear_and_localize() {
        let s = CalculusSettings::default();
        let d = Deformation::two_torus(1.0 / 2f64.sqrt());
        let h = &TorusElement::one(&d) + &cosine(&d, &[1, 0], 0.3);
        let l = crate::operators::build_conformal_laplacian(&h, crate::operators::LaplacianVariant::TwoTorus, &s).unwrap();
        let v = vec![&TorusElement::one(&d) + &cosine(&d, &[0, 1], 0.4), TorusElement::real(&d, 0.5)];
        let w = vec![TorusElement::real(&d, -0.2), cosine(&d, &[1, 1], 0.6)];
        let f = &TorusElement::real(&d, 0.7) + &cosine(&d, &[1, 0], 0.2);
        let geo = VectorFieldSpec::geometric;
        let vw = metric_vf(&l, &geo(v.clone()), &geo(w.clone()), None, &s).unwrap();
        let wv = metric_vf(&l, &geo(w.clone()), &geo(v.clone()), None, &s).unwrap();
        assert!((vw.value - wv.value).norm() < 1e-12 * vw.value.norm().max(1.0));
        let c = Complex64::new(0.4, -1.1);
        let v2: Vec<TorusElement> = v.iter().zip(&w).map(|(a, b)| &a.scale(c) + b).collect();
        let lin = metric_vf(&l, &geo(v2), &geo(w.clone()), None, &s).unwrap();
        let ww = metric_vf(&l, &geo(w.clone()), &geo(w.clone()), None, &s).unwrap();
        assert!((lin.value - (vw.value * c + ww.value)).norm() < 1e-12 * lin.value.norm().max(1.0));
        let loc = metric_vf(&l, &geo(v.clone()), &geo(w.clone()), Some(&f), &s).unwrap();
        let fv = metric_vf(&l, &geo(v.clone()).left_multiplied(&f).unwrap(), &geo(w.clone()), None, &s).unwrap();
        assert!((loc.value - fv.value).norm() < 1e-12 * loc.value.norm().max(1.0));
    }

    #[test]
    fn form_orderings_agree_and_report_roundtrips() {
        let s = CalculusSettings::default();
        let d = Deformation::two_torus(1.0 / 2f64.sqrt());
        let k = &TorusElement::one(&d)
            + &(&TorusElement::opposite_monomial(&d, &[1, 0]) + &TorusElement::opposite_monomial(&d, &[-1, 0])).scale_real(0.1);
        let dk = build_dirac(&MetricData::Flat(d.clone()), &DiracFlavor::Conformal(k.clone()), &s).unwrap();
        let v = one_form_value(&OneFormSpec::rescaled(vec![cosine(&d, &[0, 1], 0.5), TorusElement::one(&d)], k.clone()), &dk.rep).unwrap();
        let w = one_form_value(&OneFormSpec::rescaled(vec![TorusElement::real(&d, 0.3), cosine(&d, &[1, 1], 0.2)], k), &dk.rep).unwrap();
        let right = einstein_form_op(&dk.symbol, &v, &w, FormOrdering::Right, &s).unwrap();
        let left = einstein_form_op(&dk.symbol, &v, &w, FormOrdering::Left, &s).unwrap();
        assert!((right.value - left.value).norm() < 1e-10);
        let g = metric_form_op(&dk.symbol, &v, &w, &s).unwrap();
        let back = FunctionalReport::from_record(&serde_json::from_str(&g.to_json().unwrap()).unwrap()).unwrap();
        assert_eq!(back.value, g.value);
        assert_eq!(back.meta.functional, "metric_form");
        assert!(back.rel_err(&g, 1e-300) < 1e-15);
    }

    #[test]
    fn closed_forms_at_unit_factors() {
        let d = Deformation::new(4, &vec![vec![0.0; 4]; 4]).unwrap();
        let one = TorusElement::one(&d);
        let v = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)];
        let metric = closed_form_reference(&ClosedForm::NcFourLaplacian { chi: one.clone(), v: v.clone(), w: v.clone(), part: Part::Metric }).unwrap();
        let einstein = closed_form_reference(&ClosedForm::NcFourLaplacian { chi: one, v: v.clone(), w: v, part: Part::Einstein }).unwrap();
        assert!(einstein.value.norm() < 1e-15);
        assert!(metric.value.norm() > 0.0);
    }
}
