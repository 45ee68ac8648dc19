//! Symbols of the operators built over `Â`: Laplacians, Laplace-type
//! operators, Dirac operators, vector fields and one-forms.
//!
//! Derivations act as `δ_a ↦ ξ_a`, so a classical partial derivative has
//! symbol `i ξ_a`. Every composite operator is assembled through
//! [`compose`](crate::symbol::compose) from its factors.

use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{Deformation, Side, TorusElement};
use crate::clifford::{gamma_basis, CliffordValue, ConstMatrix, GammaRep};
use crate::error::{Error, Result};
use crate::geometry::{curvature_tensors, MetricData};
use crate::symbol::{compose_chain, compose_with, CalculusSettings, Symbol, TermKey};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// How a vector field acts as a differential operator.
#[derive(Clone, Debug)]
pub enum VectorFlavor {
    /// `V = V^a ∂_a`, symbol `i V^a ξ_a`.
    Geometric,
    /// `V = V^a δ_a`, symbol `V^a ξ_a`.
    Derivation,
    /// `V_h = V^a h δ_a h^{-1}`.
    Rescaled(TorusElement),
}

#[derive(Clone, Debug)]
pub struct VectorFieldSpec {
    pub components: Vec<TorusElement>,
    pub flavor: VectorFlavor,
}

impl VectorFieldSpec {
    pub fn geometric(components: Vec<TorusElement>) -> Self {
        Self { components, flavor: VectorFlavor::Geometric }
    }

    pub fn derivation(components: Vec<TorusElement>) -> Self {
        Self { components, flavor: VectorFlavor::Derivation }
    }

    pub fn rescaled(components: Vec<TorusElement>, h: TorusElement) -> Self {
        Self { components, flavor: VectorFlavor::Rescaled(h) }
    }

    /// The same field with every component multiplied by `f` from the left.
    pub fn left_multiplied(&self, f: &TorusElement) -> Result<Self> {
        let components = self.components.iter().map(|c| f.try_mul(c)).collect::<Result<_>>()?;
        Ok(Self { components, flavor: self.flavor.clone() })
    }

    fn check(&self, defm: &Arc<Deformation>) -> Result<()> {
        if self.components.len() != defm.dim() {
            return Err(Error::Config(format!(
                "vector field has {} components, expected {}",
                self.components.len(),
                defm.dim()
            )));
        }
        for c in &self.components {
            c.check_compatible(&TorusElement::zero(defm))?;
        }
        Ok(())
    }
}

/// Endomorphism part of `∇_a = ∂_a − T_a` and an optional potential `E`.
#[derive(Clone, Debug)]
pub struct ConnectionData {
    pub t: Vec<CliffordValue>,
    pub e: Option<CliffordValue>,
}

impl ConnectionData {
    pub fn trivial(defm: &Arc<Deformation>, rank: usize) -> Self {
        Self { t: vec![CliffordValue::zero(defm, rank); defm.dim()], e: None }
    }

    /// `U(1)` connection `T_a = i A_a`.
    pub fn u1(potential: &[TorusElement]) -> Self {
        Self { t: potential.iter().map(|a| CliffordValue::scalar(&a.scale(I), 1)).collect(), e: None }
    }

    pub fn with_potential(mut self, e: CliffordValue) -> Self {
        self.e = Some(e);
        self
    }

    pub fn rank(&self) -> usize {
        self.t.first().map_or(1, |t| t.dim())
    }

    /// `F_{ab} = −(∂_a T_b − ∂_b T_a) + [T_a, T_b]`.
    pub fn curvature(&self, a: usize, b: usize) -> Result<CliffordValue> {
        let d = |x: &CliffordValue, axis: usize| -> Result<CliffordValue> { Ok(x.derive(axis)?.scale(I)) };
        let ta = &self.t[a];
        let tb = &self.t[b];
        let exterior = &d(tb, a)? - &d(ta, b)?;
        let bracket = &ta.try_mul(tb)? - &tb.try_mul(ta)?;
        Ok(&bracket - &exterior)
    }
}

/// A one-form `v = k² v_a γ^a` with `k` in the commutant.
#[derive(Clone, Debug)]
pub struct OneFormSpec {
    pub components: Vec<TorusElement>,
    pub rescale: Option<TorusElement>,
}

impl OneFormSpec {
    pub fn new(components: Vec<TorusElement>) -> Self {
        Self { components, rescale: None }
    }

    pub fn rescaled(components: Vec<TorusElement>, k: TorusElement) -> Self {
        Self { components, rescale: Some(k) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaplacianVariant {
    /// `h^{-1} Δ h^{-1}`.
    TwoTorus,
    /// `Σ_a χ^{-1} δ_a χ δ_a χ^{-1}`.
    FourTorus,
}

#[derive(Clone, Debug)]
pub enum DiracFlavor {
    /// `D = γ^a δ_a`.
    Flat,
    /// `D_k = k D k` with `k` in the commutant `A°`.
    Conformal(TorusElement),
    /// Spin Dirac operator of a conformally flat metric at θ = 0, built from
    /// the orthonormal frame `e_j = φ ∂_j` with `g = φ^{-2} δ`.
    SpinConformalCommutative,
    /// `𝒟 = [[D, γc], [γc*, D]]` on two copies of the spinor space.
    ProductTriple { base: Box<DiracFlavor>, c: Complex64 },
}

fn inverse(a: &TorusElement, settings: &CalculusSettings) -> Result<TorusElement> {
    Ok(a.invert(settings.inversion_tol, settings.max_radius)?.0)
}

fn mult(a: &TorusElement, rank: usize) -> Symbol {
    Symbol::scalar_multiplication(a, rank)
}

fn xi(defm: &Arc<Deformation>, axis: usize, coeff: CliffordValue) -> Symbol {
    Symbol::new(defm, coeff.dim(), 1, None, [(TermKey::xi(&[axis]), coeff)]).expect("order-1 term")
}

/// Express a commutant factor in `A°` (at θ = 0 any factor is moved there).
pub fn commutant_factor(k: &TorusElement) -> Result<TorusElement> {
    match k.side() {
        Side::Right => Ok(k.clone()),
        _ if k.terms().iter().all(|(m, _)| m.is_zero()) => Ok(k.clone()),
        _ if k.deformation().is_commutative() => k.to_side(Side::Right),
        _ => Err(Error::Precondition("the conformal factor must lie in the commutant A°".into())),
    }
}

pub fn build_flat_laplacian(defm: &Arc<Deformation>, rank: usize) -> Symbol {
    Symbol::flat_laplacian(defm, rank)
}

/// Conformally rescaled Laplacian of the noncommutative 2- or 4-torus.
pub fn build_conformal_laplacian(
    w: &TorusElement,
    variant: LaplacianVariant,
    settings: &CalculusSettings,
) -> Result<Symbol> {
    let defm = w.deformation();
    let w_inv = inverse(w, settings)?;
    match variant {
        LaplacianVariant::TwoTorus => {
            if defm.dim() != 2 {
                return Err(Error::Config("the two-torus Laplacian needs n = 2".into()));
            }
            let h_inv = mult(&w_inv, 1);
            compose_chain(&[&h_inv, &Symbol::flat_laplacian(defm, 1), &h_inv], 3, settings)
        }
        LaplacianVariant::FourTorus => {
            if defm.dim() != 4 {
                return Err(Error::Config("the four-torus Laplacian needs n = 4".into()));
            }
            let chi = mult(w, 1);
            let chi_inv = mult(&w_inv, 1);
            let mut total: Option<Symbol> = None;
            for a in 0..4 {
                let d = xi(defm, a, CliffordValue::identity(defm, 1));
                let term = compose_chain(&[&chi_inv, &d, &chi, &d, &chi_inv], 3, settings)?;
                total = Some(match total {
                    Some(t) => t.try_add(&term)?,
                    None => term,
                });
            }
            Ok(total.expect("four terms"))
        }
    }
}

/// `Δ_{T,E} = −g^{ab}(∇_a∇_b − Γ^c_{ab}∇_c) + E` with `∇_a = ∂_a − T_a`.
pub fn build_laplace_type(m: &MetricData, c: &ConnectionData) -> Result<Symbol> {
    let defm = m.deformation().clone();
    let n = defm.dim();
    let rank = c.rank();
    if c.t.len() != n {
        return Err(Error::Config(format!("connection needs {n} components")));
    }
    if let Some(e) = &c.e {
        if e.dim() != rank {
            return Err(Error::Config("potential and connection ranks differ".into()));
        }
    }
    let exact = CalculusSettings { prune_eps: 0.0, ..CalculusSettings::default() };
    let nabla: Vec<Symbol> = (0..n)
        .map(|a| -> Result<Symbol> {
            let mut s = xi(&defm, a, CliffordValue::identity(&defm, rank).scale(I));
            if !c.t[a].is_zero() {
                s = s.try_add(&Symbol::multiplication(&c.t[a].scale(Complex64::new(-1.0, 0.0))))?;
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;

    let mut total = match m {
        MetricData::Flat(_) => {
            let mut acc = Symbol::new(&defm, rank, 2, None, [])?;
            for a in 0..n {
                acc = acc.try_sub(&compose_with(&nabla[a], &nabla[a], 3, &exact)?)?;
            }
            acc
        }
        _ => {
            let curv = curvature_tensors(m)?;
            let ginv = &curv.metric.g_inv;
            let mut acc = Symbol::new(&defm, rank, 2, None, [])?;
            for a in 0..n {
                for b in 0..n {
                    let gab = ginv.get(&[a, b]);
                    if gab.is_zero() {
                        continue;
                    }
                    let second = compose_with(&nabla[a], &nabla[b], 3, &exact)?;
                    acc = acc.try_sub(&second.left_mul(&CliffordValue::scalar(gab, rank)))?;
                }
            }
            for cc in 0..n {
                let mut contracted = TorusElement::zero(&defm);
                for a in 0..n {
                    for b in 0..n {
                        contracted = &contracted + &(ginv.get(&[a, b]) * curv.christoffel.get(&[cc, a, b]));
                    }
                }
                if !contracted.is_zero() {
                    acc = acc.try_add(&nabla[cc].left_mul(&CliffordValue::scalar(&contracted, rank)))?;
                }
            }
            acc
        }
    };
    if let Some(e) = &c.e {
        total = total.try_add(&Symbol::multiplication(e))?;
    }
    Ok(total)
}

/// Symbol of a vector field acting on `C^rank`-valued functions.
pub fn build_vector_field(v: &VectorFieldSpec, defm: &Arc<Deformation>, rank: usize, settings: &CalculusSettings) -> Result<Symbol> {
    v.check(defm)?;
    let mut total = Symbol::new(defm, rank, 1, None, [])?;
    for (a, va) in v.components.iter().enumerate() {
        if va.is_zero() {
            continue;
        }
        let term = match &v.flavor {
            VectorFlavor::Geometric => xi(defm, a, CliffordValue::scalar(&va.scale(I), rank)),
            VectorFlavor::Derivation => xi(defm, a, CliffordValue::scalar(va, rank)),
            VectorFlavor::Rescaled(h) => {
                let h_inv = inverse(h, settings)?;
                let d = xi(defm, a, CliffordValue::identity(defm, rank));
                compose_chain(&[&mult(&va.try_mul(h)?, rank), &d, &mult(&h_inv, rank)], 2, settings)?
            }
        };
        total = total.try_add(&term)?;
    }
    Ok(total)
}

/// `∇_V = V^a (∂_a − T_a)`.
pub fn build_covariant_vector_field(v: &[TorusElement], c: &ConnectionData) -> Result<Symbol> {
    let defm = c
        .t
        .first()
        .ok_or_else(|| Error::Config("empty connection".into()))?
        .deformation()
        .clone();
    let rank = c.rank();
    if v.len() != defm.dim() {
        return Err(Error::Config(format!("vector field needs {} components", defm.dim())));
    }
    let mut total = Symbol::new(&defm, rank, 1, None, [])?;
    for (a, va) in v.iter().enumerate() {
        let coeff = CliffordValue::scalar(va, rank);
        total = total.try_add(&xi(&defm, a, coeff.scale(I)))?;
        if !c.t[a].is_zero() {
            total = total.try_sub(&Symbol::multiplication(&coeff.try_mul(&c.t[a])?))?;
        }
    }
    Ok(total)
}

/// The zero-order Clifford multiplication operator of a one-form.
pub fn one_form_value(f: &OneFormSpec, rep: &GammaRep) -> Result<CliffordValue> {
    let defm = f
        .components
        .first()
        .ok_or_else(|| Error::Config("empty one-form".into()))?
        .deformation()
        .clone();
    if f.components.len() != rep.n {
        return Err(Error::Config(format!("one-form needs {} components", rep.n)));
    }
    let k2 = match &f.rescale {
        Some(k) => {
            let k = commutant_factor(k)?;
            Some(k.try_mul(&k)?)
        }
        None => None,
    };
    let mut total = CliffordValue::zero(&defm, rep.spinor_dim());
    for (a, va) in f.components.iter().enumerate() {
        let coeff = match &k2 {
            Some(k2) => va.try_mul(k2)?,
            None => va.clone(),
        };
        total = &total + &CliffordValue::from_const(&coeff, rep.gamma(a));
    }
    Ok(total)
}

pub fn build_one_form(f: &OneFormSpec, rep: &GammaRep) -> Result<Symbol> {
    Ok(Symbol::multiplication(&one_form_value(f, rep)?))
}

/// A Dirac symbol together with its Clifford data.
#[derive(Clone, Debug)]
pub struct DiracOperator {
    pub symbol: Symbol,
    /// Gamma matrices of the base spinor space.
    pub rep: GammaRep,
    /// Grading acting on the full space of the symbol.
    pub grading: ConstMatrix,
}

/// Flat Dirac symbol `γ^a ξ_a`.
fn flat_dirac(defm: &Arc<Deformation>, rep: &GammaRep) -> Result<Symbol> {
    let one = TorusElement::one(defm);
    let terms = (0..defm.dim()).map(|a| (TermKey::xi(&[a]), CliffordValue::from_const(&one, rep.gamma(a))));
    Symbol::new(defm, rep.spinor_dim(), 1, None, terms)
}

pub fn build_dirac(m: &MetricData, flavor: &DiracFlavor, settings: &CalculusSettings) -> Result<DiracOperator> {
    let defm = m.deformation().clone();
    let rep = gamma_basis(defm.dim())?;
    let dim = rep.spinor_dim();
    match flavor {
        DiracFlavor::Flat => Ok(DiracOperator { symbol: flat_dirac(&defm, &rep)?, grading: rep.grading.clone(), rep }),
        DiracFlavor::Conformal(k) => {
            let k = commutant_factor(k)?;
            let km = mult(&k, dim);
            let symbol = compose_chain(&[&km, &flat_dirac(&defm, &rep)?, &km], 2, settings)?;
            Ok(DiracOperator { symbol, grading: rep.grading.clone(), rep })
        }
        DiracFlavor::SpinConformalCommutative => {
            let phi = frame_factor(m, settings)?;
            let symbol = spin_conformal_dirac(&phi, &rep)?;
            Ok(DiracOperator { symbol, grading: rep.grading.clone(), rep })
        }
        DiracFlavor::ProductTriple { base, c } => {
            let inner = build_dirac(m, base, settings)?;
            if inner.symbol.mat_dim() != inner.grading.dim {
                return Err(Error::Precondition("product triples need a base triple on a single spinor space".into()));
            }
            let symbol = product_triple(&inner.symbol, &inner.grading, *c)?;
            let grading = ConstMatrix::block(
                &inner.grading,
                &ConstMatrix::zeros(dim),
                &ConstMatrix::zeros(dim),
                &inner.grading.scale(Complex64::new(-1.0, 0.0)),
            );
            Ok(DiracOperator { symbol, grading, rep: inner.rep })
        }
    }
}

/// `φ` with `g = φ^{-2} δ`, from a conformally flat metric `g = f^e δ` (`e` even).
fn frame_factor(m: &MetricData, settings: &CalculusSettings) -> Result<TorusElement> {
    let MetricData::ConformallyFlat { factor, exponent } = m else {
        return Err(Error::Precondition("spin Dirac operator needs a conformally flat metric".into()));
    };
    if !factor.deformation().is_commutative() {
        return Err(Error::Precondition("spin Dirac operator is built at θ = 0 only".into()));
    }
    if exponent % 2 != 0 {
        return Err(Error::Precondition("conformal exponent must be even".into()));
    }
    let power = -exponent / 2;
    let base = if power < 0 { inverse(factor, settings)? } else { factor.clone() };
    Ok(base.pow(power.unsigned_abs()))
}

/// `φ γ^j ξ_j + (i/4) α_{ijk} γ^i γ^j γ^k` with
/// `c_{ijk} = (∂_i φ) δ_{jk} − (∂_j φ) δ_{ik}` and `α_{ijk} = ½(c_{ijk} + c_{kij} + c_{kji})`.
fn spin_conformal_dirac(phi: &TorusElement, rep: &GammaRep) -> Result<Symbol> {
    let defm = phi.deformation();
    let n = defm.dim();
    let dphi: Vec<TorusElement> = (0..n).map(|i| Ok(phi.derive(i)?.scale(I))).collect::<Result<_>>()?;
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let c = |i: usize, j: usize, k: usize| -> TorusElement {
        &dphi[i].scale_real(delta(j, k)) - &dphi[j].scale_real(delta(i, k))
    };
    let mut zero_order = CliffordValue::zero(defm, rep.spinor_dim());
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let alpha = (&(&c(i, j, k) + &c(k, i, j)) + &c(k, j, i)).scale_real(0.5);
                if alpha.is_zero() {
                    continue;
                }
                let g = rep.product(&[i, j, k]);
                zero_order = &zero_order + &CliffordValue::from_const(&alpha.scale(I * 0.25), &g);
            }
        }
    }
    let mut terms: Vec<(TermKey, CliffordValue)> =
        (0..n).map(|j| (TermKey::xi(&[j]), CliffordValue::from_const(phi, rep.gamma(j)))).collect();
    terms.push((TermKey::ONE, zero_order));
    Symbol::new(defm, rep.spinor_dim(), 1, None, terms)
}

/// `[[D, γc], [γc*, D]]`.
pub fn product_triple(base: &Symbol, grading: &ConstMatrix, c: Complex64) -> Result<Symbol> {
    let defm = base.deformation();
    let dim = base.mat_dim();
    let zero = CliffordValue::zero(defm, dim);
    let one = TorusElement::one(defm);
    let mut terms = Vec::new();
    for t in base.terms() {
        terms.push((t.key, CliffordValue::block(&t.coeff, &zero, &zero, &t.coeff)));
    }
    let off = CliffordValue::block(
        &zero,
        &CliffordValue::from_const(&one, &grading.scale(c)),
        &CliffordValue::from_const(&one, &grading.scale(c.conj())),
        &zero,
    );
    let with_diag = Symbol::new(defm, 2 * dim, base.top_order(), base.depth(), terms)?;
    with_diag.try_add(&Symbol::multiplication(&off))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Mode;
    use crate::symbol::{compose, parametrix};

    fn cosine(defm: &Arc<Deformation>, k: &[i32], amp: f64) -> TorusElement {
        let minus: Vec<i32> = k.iter().map(|x| -x).collect();
        (&TorusElement::monomial(defm, k) + &TorusElement::monomial(defm, &minus)).scale_real(amp / 2.0)
    }

    fn positive(defm: &Arc<Deformation>, modes: &[(&[i32], f64)]) -> TorusElement {
        let mut acc = TorusElement::one(defm);
        for (k, a) in modes {
            acc = &acc + &cosine(defm, k, *a);
        }
        acc
    }

    #[test]
    fn unit_factors_reduce_to_flat() {
        let s = CalculusSettings::default();
        let d2 = Deformation::two_torus(0.4);
        let lap = build_conformal_laplacian(&TorusElement::one(&d2), LaplacianVariant::TwoTorus, &s).unwrap();
        assert!(lap.distance(&Symbol::flat_laplacian(&d2, 1)).unwrap() < 1e-15);
        let d4 = Deformation::commutative(4).unwrap();
        let lap4 = build_conformal_laplacian(&TorusElement::one(&d4), LaplacianVariant::FourTorus, &s).unwrap();
        assert!(lap4.distance(&Symbol::flat_laplacian(&d4, 1)).unwrap() < 1e-15);
        let dk = build_dirac(&MetricData::Flat(d2.clone()), &DiracFlavor::Conformal(TorusElement::one(&d2)), &s).unwrap();
        let flat = build_dirac(&MetricData::Flat(d2), &DiracFlavor::Flat, &s).unwrap();
        assert!(dk.symbol.distance(&flat.symbol).unwrap() < 1e-15);
    }

    #[test]
    fn two_torus_principal_symbol() {
        let d = Deformation::two_torus(1.0 / 2f64.sqrt());
        let h = positive(&d, &[(&[1, 1], 0.2), (&[0, 1], 0.1)]);
        let s = CalculusSettings::default();
        let lap = build_conformal_laplacian(&h, LaplacianVariant::TwoTorus, &s).unwrap();
        let h_inv = h.invert(1e-14, 48).unwrap().0;
        let principal = Symbol::flat_laplacian(&d, 1).left_mul(&CliffordValue::scalar(&(&h_inv * &h_inv), 1));
        assert!(lap.component_symbol(2).distance(&principal.component_symbol(2)).unwrap() < 1e-13);
        assert!(!lap.component(1).is_empty());
        assert!(parametrix(&lap, 3).is_ok());
    }

    #[test]
    fn dirac_squares() {
        let s = CalculusSettings::default();
        let d = Deformation::two_torus(0.3);
        let dirac = build_dirac(&MetricData::Flat(d.clone()), &DiracFlavor::Flat, &s).unwrap();
        let sq = compose(&dirac.symbol, &dirac.symbol, 3).unwrap();
        assert!(sq.distance(&Symbol::flat_laplacian(&d, 2)).unwrap() < 1e-15);

        // D_k² = k D k² D k, assembled in two ways.
        let k = commutant_factor(&positive(&d, &[(&[1, 0], 0.2)]).to_side(Side::Left).unwrap());
        assert!(k.is_err());
        let k = TorusElement::from_terms(&d, [(Mode::ZERO, Complex64::new(1.0, 0.0)), (Mode::right(&[1, 1]), Complex64::new(0.1, 0.0)), (Mode::right(&[-1, -1]), Complex64::new(0.1, 0.0))]).unwrap();
        let dk = build_dirac(&MetricData::Flat(d.clone()), &DiracFlavor::Conformal(k.clone()), &s).unwrap();
        let sq = compose(&dk.symbol, &dk.symbol, 3).unwrap();
        let km = mult(&k, 2);
        let k2m = mult(&(&k * &k), 2);
        let direct = compose_chain(&[&km, &dirac.symbol, &k2m, &dirac.symbol, &km], 3, &s).unwrap();
        assert!(sq.distance(&direct).unwrap() < 1e-12);
    }

    #[test]
    fn spin_dirac_matches_conformal_covariance() {
        // D_g = φ^{(n+1)/2} D φ^{-(n-1)/2} for g = φ^{-2}δ; with φ = k², g = k^{-4}δ.
        let s = CalculusSettings::default();
        for (n, modes) in [(2usize, vec![(vec![1, 1], 0.2)]), (4, vec![(vec![1, 0, -1, 0], 0.15), (vec![0, 1, 0, 0], 0.1)])] {
            let d = Deformation::commutative(n).unwrap();
            let mut k = TorusElement::one(&d);
            for (m, a) in &modes {
                k = &k + &cosine(&d, m, *a);
            }
            let metric = MetricData::ConformallyFlat { factor: k.clone(), exponent: -4 };
            let spin = build_dirac(&metric, &DiracFlavor::SpinConformalCommutative, &s).unwrap();
            let flat = build_dirac(&MetricData::Flat(d.clone()), &DiracFlavor::Flat, &s).unwrap();
            let k_inv = k.invert(1e-15, 64).unwrap().0;
            let left = mult(&k.pow(n as u32 + 1), flat.rep.spinor_dim());
            let right = mult(&k_inv.pow(n as u32 - 1), flat.rep.spinor_dim());
            let expected = compose_chain(&[&left, &flat.symbol, &right], 2, &s).unwrap();
            let dist = spin.symbol.distance(&expected).unwrap();
            assert!(dist < 1e-12, "n = {n}: {dist:e}");
        }
    }

    #[test]
    fn vector_field_flavors() {
        let s = CalculusSettings::default();
        let d = Deformation::commutative(2).unwrap();
        let one = TorusElement::one(&d);
        let zero = TorusElement::zero(&d);
        let v = build_vector_field(&VectorFieldSpec::geometric(vec![one.clone(), zero.clone()]), &d, 1, &s).unwrap();
        let w = build_vector_field(&VectorFieldSpec::geometric(vec![zero.clone(), one.clone()]), &d, 1, &s).unwrap();
        let vw = compose(&v, &w, 3).unwrap();
        let expected = Symbol::new(&d, 1, 2, None, [(TermKey::xi(&[0, 1]), CliffordValue::identity(&d, 1).scale(Complex64::new(-1.0, 0.0)))]).unwrap();
        assert!(vw.distance(&expected).unwrap() < 1e-15);

        // σ(VW) = −V^aW^bξ_aξ_b + i V^a δ_a(W^b) ξ_b in geometric flavor (δ here meaning ∂).
        let f = positive(&d, &[(&[1, 2], 0.3)]);
        let vv = build_vector_field(&VectorFieldSpec::geometric(vec![f.clone(), zero.clone()]), &d, 1, &s).unwrap();
        let ww = build_vector_field(&VectorFieldSpec::geometric(vec![zero.clone(), f.clone()]), &d, 1, &s).unwrap();
        let prod = compose(&vv, &ww, 3).unwrap();
        let df = f.derive(0).unwrap().scale(I);
        let expected = Symbol::new(
            &d,
            1,
            2,
            None,
            [
                (TermKey::xi(&[0, 1]), CliffordValue::scalar(&(&f * &f).scale_real(-1.0), 1)),
                (TermKey::xi(&[1]), CliffordValue::scalar(&(&f * &df).scale(I), 1)),
            ],
        )
        .unwrap();
        assert!(prod.distance(&expected).unwrap() < 1e-14);

        let der = build_vector_field(&VectorFieldSpec::derivation(vec![one.clone(), zero.clone()]), &d, 1, &s).unwrap();
        let res = build_vector_field(&VectorFieldSpec::rescaled(vec![one.clone(), zero.clone()], one.clone()), &d, 1, &s).unwrap();
        assert!(der.distance(&res).unwrap() < 1e-15);
    }

    #[test]
    fn laplace_type_pieces() {
        let d = Deformation::commutative(4).unwrap();
        let flat = MetricData::Flat(d.clone());
        let lap = build_laplace_type(&flat, &ConnectionData::trivial(&d, 1)).unwrap();
        assert!(lap.distance(&Symbol::flat_laplacian(&d, 1)).unwrap() < 1e-15);

        let e = positive(&d, &[(&[1, 0, 0, 0], 0.5)]);
        let with_e = build_laplace_type(&flat, &ConnectionData::trivial(&d, 1).with_potential(CliffordValue::scalar(&e, 1))).unwrap();
        let diff = with_e.try_sub(&lap).unwrap();
        assert!(diff.distance(&Symbol::scalar_multiplication(&e, 1)).unwrap() < 1e-15);

        // U(1): −(iξ_a − iA_a)² = ‖ξ‖² − 2A_aξ_a + A_aA_a − i∂_a(A_a)·(−1)·… by hand:
        // (iξ − iA)∘(iξ − iA) = −ξ² + 2Aξ − A² − i·i·δ_a A_a·(−1)…; compare against the
        // direct expansion ‖ξ‖² − 2 A_a ξ_a + A_a A_a + δ_a(A_a).
        let a1 = cosine(&d, &[0, 1, 0, 0], 0.4);
        let zero = TorusElement::zero(&d);
        let pot = vec![a1.clone(), zero.clone(), zero.clone(), zero];
        let lt = build_laplace_type(&flat, &ConnectionData::u1(&pot)).unwrap();
        let expected = Symbol::flat_laplacian(&d, 1)
            .try_add(&Symbol::new(&d, 1, 1, None, [(TermKey::xi(&[0]), CliffordValue::scalar(&a1.scale_real(-2.0), 1))]).unwrap())
            .unwrap()
            .try_add(&Symbol::scalar_multiplication(&(&(&a1 * &a1) + &a1.derive(0).unwrap()), 1))
            .unwrap();
        assert!(lt.distance(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn laplace_type_of_conformal_metric_matches_conjugated_laplacian() {
        // In 4D, g = χδ gives Δ_g = χ^{-1} (χ^{-1}δ_aχδ_aχ^{-1}) χ.
        let s = CalculusSettings::default();
        let d = Deformation::commutative(4).unwrap();
        let chi = positive(&d, &[(&[1, 0, 0, 0], 0.2), (&[0, 0, 1, 1], 0.1)]);
        let lb = build_laplace_type(&MetricData::ConformallyFlat { factor: chi.clone(), exponent: 1 }, &ConnectionData::trivial(&d, 1)).unwrap();
        let conf = build_conformal_laplacian(&chi, LaplacianVariant::FourTorus, &s).unwrap();
        let chi_inv = chi.invert(1e-15, 64).unwrap().0;
        let conj = compose_chain(&[&mult(&chi_inv, 1), &conf, &mult(&chi, 1)], 3, &s).unwrap();
        assert!(lb.distance(&conj).unwrap() < 1e-11, "{}", lb.distance(&conj).unwrap());
    }

    #[test]
    fn product_triple_square() {
        let s = CalculusSettings::default();
        let d = Deformation::two_torus(0.5);
        let c = Complex64::new(0.3, 0.4);
        let dirac = build_dirac(&MetricData::Flat(d.clone()), &DiracFlavor::ProductTriple { base: Box::new(DiracFlavor::Flat), c }, &s).unwrap();
        let sq = compose(&dirac.symbol, &dirac.symbol, 3).unwrap();
        let expected = Symbol::flat_laplacian(&d, 4)
            .try_add(&Symbol::multiplication(&CliffordValue::identity(&d, 4).scale(Complex64::new(c.norm_sqr(), 0.0))))
            .unwrap();
        assert!(sq.distance(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn one_forms() {
        let d = Deformation::two_torus(0.5);
        let rep = gamma_basis(2).unwrap();
        let one = TorusElement::one(&d);
        let zero = TorusElement::zero(&d);
        let v = one_form_value(&OneFormSpec::new(vec![one.clone(), zero.clone()]), &rep).unwrap();
        assert_eq!(v, CliffordValue::from_const(&one, rep.gamma(0)));
        let r = one_form_value(&OneFormSpec::rescaled(vec![one.clone(), zero], one.clone()), &rep).unwrap();
        assert_eq!(r, v);
    }
}
