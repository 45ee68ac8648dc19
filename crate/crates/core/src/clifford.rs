//! Gamma matrices in dimensions 2 and 4 and square matrices over the
//! coefficient algebra.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{Deformation, TorusElement};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Constant complex square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstMatrix {
    pub dim: usize,
    pub entries: Vec<Complex64>,
}

impl ConstMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = ONE;
        }
        Self { dim, entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![ZERO; dim * dim] }
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let dim = rows.len();
        Self { dim, entries: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|x| x * c).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Block matrix `[[a, b], [c, d]]`.
    pub fn block(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        let k = a.dim;
        let dim = 2 * k;
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..k {
            for j in 0..k {
                entries[i * dim + j] = a.get(i, j);
                entries[i * dim + j + k] = b.get(i, j);
                entries[(i + k) * dim + j] = c.get(i, j);
                entries[(i + k) * dim + j + k] = d.get(i, j);
            }
        }
        Self { dim, entries }
    }
}

impl<'a> Mul<&'a ConstMatrix> for &'a ConstMatrix {
    type Output = ConstMatrix;
    fn mul(self, rhs: &'a ConstMatrix) -> ConstMatrix {
        let d = self.dim;
        let mut entries = vec![ZERO; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    entries[i * d + j] += a * rhs.get(k, j);
                }
            }
        }
        ConstMatrix { dim: d, entries }
    }
}

impl<'a> Add<&'a ConstMatrix> for &'a ConstMatrix {
    type Output = ConstMatrix;
    fn add(self, rhs: &'a ConstMatrix) -> ConstMatrix {
        ConstMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

/// A fixed Euclidean representation `γ^a γ^b + γ^b γ^a = 2δ_ab`.
#[derive(Clone, Debug)]
pub struct GammaRep {
    pub n: usize,
    pub matrices: Vec<ConstMatrix>,
    /// Chirality `(-i)^m γ^1 ··· γ^n`, squares to the identity.
    pub grading: ConstMatrix,
}

impl GammaRep {
    /// Spinor dimension `2^{n/2}`.
    pub fn spinor_dim(&self) -> usize {
        1 << (self.n / 2)
    }

    pub fn gamma(&self, a: usize) -> &ConstMatrix {
        &self.matrices[a]
    }

    /// Product `γ^{i_1} ··· γ^{i_k}`.
    pub fn product(&self, indices: &[usize]) -> ConstMatrix {
        indices
            .iter()
            .fold(ConstMatrix::identity(self.spinor_dim()), |acc, &i| &acc * &self.matrices[i])
    }
}

/// Concrete gamma matrices: Pauli type for `n = 2` (matching `D = γ^a δ_a` with
/// off-diagonal entries `δ_2 ∓ iδ_1`), the chiral Euclidean set for `n = 4`.
pub fn gamma_basis(n: usize) -> Result<GammaRep> {
    let sx = [[ZERO, ONE], [ONE, ZERO]];
    let sy = [[ZERO, -I], [I, ZERO]];
    let sz = [[ONE, ZERO], [ZERO, -ONE]];
    let pauli = |s: [[Complex64; 2]; 2]| ConstMatrix::from_rows(&[&s[0], &s[1]]);
    let matrices = match n {
        2 => vec![pauli(sy), pauli(sx)],
        4 => {
            let zero2 = ConstMatrix { dim: 2, entries: vec![ZERO; 4] };
            let mut out: Vec<ConstMatrix> = [sx, sy, sz]
                .into_iter()
                .map(|s| {
                    let p = pauli(s);
                    ConstMatrix::block(&zero2, &p.scale(-I), &p.scale(I), &zero2)
                })
                .collect();
            out.push(ConstMatrix::block(
                &zero2,
                &ConstMatrix::identity(2),
                &ConstMatrix::identity(2),
                &zero2,
            ));
            out
        }
        _ => return Err(Error::Config(format!("no gamma representation for n = {n}"))),
    };
    let m = n / 2;
    let mut grading = matrices
        .iter()
        .fold(ConstMatrix::identity(1 << m), |acc, g| &acc * g);
    grading = grading.scale((-I).powi(m as i32));
    let rep = GammaRep { n, matrices, grading };
    verify_anticommutation(&rep)?;
    Ok(rep)
}

fn verify_anticommutation(rep: &GammaRep) -> Result<()> {
    let id = ConstMatrix::identity(rep.spinor_dim());
    for a in 0..rep.n {
        for b in 0..rep.n {
            let s = &(&rep.matrices[a] * &rep.matrices[b]) + &(&rep.matrices[b] * &rep.matrices[a]);
            let expected = if a == b { id.scale(Complex64::new(2.0, 0.0)) } else { id.scale(ZERO) };
            if s != expected {
                return Err(Error::Config(format!("gamma matrices {a},{b} fail anticommutation")));
            }
        }
        let ga = &(&rep.grading * &rep.matrices[a]) + &(&rep.matrices[a] * &rep.grading);
        if ga.max_abs() != 0.0 {
            return Err(Error::Config("grading does not anticommute".into()));
        }
    }
    if &rep.grading * &rep.grading != id {
        return Err(Error::Config("grading does not square to one".into()));
    }
    Ok(())
}

/// Square matrix with entries in the coefficient algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordValue {
    dim: usize,
    entries: Vec<TorusElement>,
}

impl CliffordValue {
    pub fn zero(defm: &Arc<Deformation>, dim: usize) -> Self {
        Self { dim, entries: vec![TorusElement::zero(defm); dim * dim] }
    }

    pub fn identity(defm: &Arc<Deformation>, dim: usize) -> Self {
        Self::scalar(&TorusElement::one(defm), dim)
    }

    /// `a · 1` for an algebra element `a`.
    pub fn scalar(a: &TorusElement, dim: usize) -> Self {
        let mut out = Self::zero(a.deformation(), dim);
        for i in 0..dim {
            out.entries[i * dim + i] = a.clone();
        }
        out
    }

    /// `a · M` for a constant matrix `M`.
    pub fn from_const(a: &TorusElement, m: &ConstMatrix) -> Self {
        Self {
            dim: m.dim,
            entries: m.entries.iter().map(|c| if *c == ZERO { TorusElement::zero(a.deformation()) } else { a.scale(*c) }).collect(),
        }
    }

    pub fn from_entries(dim: usize, entries: Vec<TorusElement>) -> Result<Self> {
        if entries.len() != dim * dim || dim == 0 {
            return Err(Error::Config(format!("expected {} entries, got {}", dim * dim, entries.len())));
        }
        for e in &entries[1..] {
            entries[0].check_compatible(e)?;
        }
        Ok(Self { dim, entries })
    }

    /// Block matrix `[[a, b], [c, d]]` of equally sized blocks.
    pub fn block(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        let k = a.dim;
        let dim = 2 * k;
        let mut entries = vec![TorusElement::zero(a.deformation()); dim * dim];
        for i in 0..k {
            for j in 0..k {
                entries[i * dim + j] = a.get(i, j).clone();
                entries[i * dim + j + k] = b.get(i, j).clone();
                entries[(i + k) * dim + j] = c.get(i, j).clone();
                entries[(i + k) * dim + j + k] = d.get(i, j).clone();
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn deformation(&self) -> &Arc<Deformation> {
        self.entries[0].deformation()
    }

    pub fn get(&self, i: usize, j: usize) -> &TorusElement {
        &self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[TorusElement] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.l1_norm()).sum()
    }

    /// Returns the common diagonal entry if the matrix is `a · 1`.
    pub fn as_scalar(&self) -> Option<&TorusElement> {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                let e = self.get(i, j);
                if i == j {
                    if e != self.get(0, 0) {
                        return None;
                    }
                } else if !e.is_zero() {
                    return None;
                }
            }
        }
        Some(self.get(0, 0))
    }

    pub fn map(&self, f: impl FnMut(&TorusElement) -> TorusElement) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(f).collect() }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|e| e.scale(c))
    }

    /// Entrywise derivation `δ^β`.
    pub fn derive_multi(&self, beta: &[u8]) -> Self {
        self.map(|e| e.derive_multi(beta))
    }

    pub fn derive(&self, axis: usize) -> Result<Self> {
        if axis >= self.deformation().dim() {
            return Err(Error::Argument(format!("axis {axis} out of range")));
        }
        Ok(self.map(|e| e.derive_unchecked(axis)))
    }

    /// Left multiplication by an algebra element.
    pub fn left_mul(&self, a: &TorusElement) -> Self {
        self.map(|e| if e.is_zero() { e.clone() } else { a * e })
    }

    pub fn right_mul(&self, a: &TorusElement) -> Self {
        self.map(|e| if e.is_zero() { e.clone() } else { e * a })
    }

    pub fn prune(&self, eps: f64) -> (Self, f64) {
        let mut dropped = 0.0;
        let out = self.map(|e| {
            let (p, d) = e.prune(eps);
            dropped += d;
            p
        });
        (out, dropped)
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::Config(format!("matrix sizes {} and {} differ", self.dim, rhs.dim)));
        }
        self.entries[0].check_compatible(&rhs.entries[0])?;
        let d = self.dim;
        let mut out = Self::zero(self.deformation(), d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = TorusElement::zero(self.deformation());
                for k in 0..d {
                    let (a, b) = (self.get(i, k), rhs.get(k, j));
                    if !a.is_zero() && !b.is_zero() {
                        acc = &acc + &(a * b);
                    }
                }
                out.entries[i * d + j] = acc;
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zero(self.deformation(), d);
        for i in 0..d {
            for j in 0..d {
                out.entries[j * d + i] = self.get(i, j).adjoint();
            }
        }
        out
    }
}

/// Matrix trace `Σ M_ii`.
pub fn matrix_trace(m: &CliffordValue) -> TorusElement {
    (0..m.dim).fold(TorusElement::zero(m.deformation()), |acc, i| &acc + m.get(i, i))
}

impl<'a> Add<&'a CliffordValue> for &'a CliffordValue {
    type Output = CliffordValue;
    fn add(self, rhs: &'a CliffordValue) -> CliffordValue {
        assert_eq!(self.dim, rhs.dim, "matrix sizes differ");
        CliffordValue {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a CliffordValue> for &'a CliffordValue {
    type Output = CliffordValue;
    fn sub(self, rhs: &'a CliffordValue) -> CliffordValue {
        assert_eq!(self.dim, rhs.dim, "matrix sizes differ");
        CliffordValue {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a> Mul<&'a CliffordValue> for &'a CliffordValue {
    type Output = CliffordValue;
    fn mul(self, rhs: &'a CliffordValue) -> CliffordValue {
        self.try_mul(rhs).expect("incompatible matrices")
    }
}

impl Neg for &CliffordValue {
    type Output = CliffordValue;
    fn neg(self) -> CliffordValue {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta(a: usize, b: usize) -> f64 {
        (a == b) as u8 as f64
    }

    #[test]
    fn anticommutation_and_squares() {
        for n in [2, 4] {
            let rep = gamma_basis(n).unwrap();
            let id = ConstMatrix::identity(rep.spinor_dim());
            for a in 0..n {
                assert_eq!(&rep.matrices[a] * &rep.matrices[a], id);
                assert_eq!(rep.matrices[a].trace(), ZERO);
            }
            assert_eq!(id.trace(), Complex64::new(rep.spinor_dim() as f64, 0.0));
        }
        let rep2 = gamma_basis(2).unwrap();
        let s = &rep2.product(&[0, 1]) + &rep2.product(&[1, 0]);
        assert_eq!(s.max_abs(), 0.0);
        assert_eq!(rep2.product(&[0, 1]).trace(), ZERO);
        assert!(gamma_basis(3).is_err());
    }

    #[test]
    fn four_gamma_trace_identity() {
        // Brute-force over every index quadruple.
        for n in [2, 4] {
            let rep = gamma_basis(n).unwrap();
            let s = rep.spinor_dim() as f64;
            for a in 0..n {
                for b in 0..n {
                    assert_eq!(rep.product(&[a, b]).trace(), Complex64::new(s * delta(a, b), 0.0));
                    for c in 0..n {
                        assert_eq!(rep.product(&[a, b, c]).trace(), ZERO);
                        for d in 0..n {
                            let expected = s
                                * (delta(a, b) * delta(c, d) - delta(a, c) * delta(b, d)
                                    + delta(a, d) * delta(b, c));
                            let got = rep.product(&[a, b, c, d]).trace();
                            assert!((got - Complex64::new(expected, 0.0)).norm() < 1e-15);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn clifford_matrix_trace() {
        let defm = Deformation::two_torus(0.3);
        let rep = gamma_basis(2).unwrap();
        let one = TorusElement::one(&defm);
        let id = CliffordValue::identity(&defm, 2);
        assert_eq!(matrix_trace(&id), TorusElement::real(&defm, 2.0));
        let g0 = CliffordValue::from_const(&one, rep.gamma(0));
        let g1 = CliffordValue::from_const(&one, rep.gamma(1));
        assert!(matrix_trace(&(&g0 * &g1)).is_zero());
        assert_eq!(matrix_trace(&(&g0 * &g0)), TorusElement::real(&defm, 2.0));
        assert!(id.as_scalar().is_some());
        assert!(g0.as_scalar().is_none());
    }
}
