//! The coefficient ring: smooth elements of the deformed torus algebra `A`,
//! its commutant copy `A°` and the enlarged algebra `Â = A·A°`.
//!
//! Elements are finite Fourier sums over ordered monomials
//! `e_k ⊗ e°_l` with `e_k = U_1^{k_1} ··· U_n^{k_n}` and
//! `U_a U_b = e^{iθ_ab} U_b U_a`. The copy `A°` is realised as the opposite
//! algebra, `e°_k e°_l = (e_l e_k)°`, so it commutes with `A` exactly.
//!
//! Derivations act diagonally, `δ_a(e_k ⊗ e°_l) = (k_a + l_a) e_k ⊗ e°_l`.
//! The trace is the mean diagonal of `x ↦ e_k x e_l` on `L²(A, τ)`: it picks
//! `l = −k` with `θk = 0`, so it factorizes for nondegenerate `θ` and is the
//! integral over the torus at `θ = 0`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;

/// Products with more than this many term pairs are split across threads.
const PARALLEL_PRODUCT_THRESHOLD: usize = 1 << 16;
/// Fixed chunking keeps the summation order independent of the thread count.
const PRODUCT_CHUNK: usize = 32;
const DENSE_PRODUCT_LIMIT: usize = 1 << 21;
const DENSE_PARALLEL_LIMIT: usize = 1 << 17;
const DENSE_CHUNKS: usize = 8;

/// Real skew-symmetric deformation matrix of an even-dimensional torus.
#[derive(Clone, Debug, PartialEq)]
pub struct Deformation {
    n: usize,
    theta: [[f64; MAX_DIM]; MAX_DIM],
}

impl Deformation {
    pub fn new(n: usize, theta: &[Vec<f64>]) -> Result<Arc<Self>> {
        if n != 2 && n != 4 {
            return Err(Error::Config(format!("dimension {n} not supported (use 2 or 4)")));
        }
        if theta.len() != n || theta.iter().any(|row| row.len() != n) {
            return Err(Error::Config(format!("theta must be a {n}x{n} matrix")));
        }
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for a in 0..n {
            for b in 0..n {
                if theta[a][b] != -theta[b][a] {
                    return Err(Error::Config(format!(
                        "theta is not skew-symmetric at ({a},{b}): {} vs {}",
                        theta[a][b], theta[b][a]
                    )));
                }
                m[a][b] = theta[a][b];
            }
        }
        Ok(Arc::new(Self { n, theta: m }))
    }

    /// The commutative torus of dimension `n`.
    pub fn commutative(n: usize) -> Result<Arc<Self>> {
        Self::new(n, &vec![vec![0.0; n]; n])
    }

    /// Two-torus with `U_1 U_2 = e^{iθ} U_2 U_1`.
    pub fn two_torus(theta: f64) -> Arc<Self> {
        Self::new(2, &[vec![0.0, theta], vec![-theta, 0.0]]).expect("valid 2x2 skew matrix")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn theta(&self, a: usize, b: usize) -> f64 {
        self.theta[a][b]
    }

    pub fn theta_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|a| self.theta[a][..self.n].to_vec()).collect()
    }

    pub fn is_commutative(&self) -> bool {
        self.theta.iter().flatten().all(|t| *t == 0.0)
    }

    /// Phase angle of `e_k e_l = e^{i·angle} e_{k+l}` in ordered monomials.
    pub fn phase_angle(&self, k: &[i32; MAX_DIM], l: &[i32; MAX_DIM]) -> f64 {
        let mut s = 0.0;
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                s += self.theta[b][a] * (k[b] as f64) * (l[a] as f64);
            }
        }
        s
    }

    /// `τ(e_k ⊗ e°_l)`, or `None` when it vanishes.
    fn trace_phase(&self, mode: &Mode) -> Option<Complex64> {
        let n = self.n;
        if (0..n).any(|a| mode.left[a] + mode.right[a] != 0) {
            return None;
        }
        let scale: f64 = self.theta.iter().flatten().fold(0.0f64, |m, t| m.max(t.abs())) * mode.left.iter().map(|k| k.abs() as f64).sum::<f64>();
        for a in 0..n {
            let row: f64 = (0..n).map(|b| self.theta[a][b] * mode.left[b] as f64).sum();
            if row.abs() > 1e-12 * scale {
                return None;
            }
        }
        Some(Complex64::cis(-self.phase_angle(&mode.left, &mode.left)))
    }

    /// Precomputed linear forms so that the phase of `(e_k e°_k')(e_l e°_l')`
    /// is `left·l + right·l'`.
    fn phase_forms(&self, mode: &Mode) -> ([f64; MAX_DIM], [f64; MAX_DIM]) {
        let mut left = [0.0; MAX_DIM];
        let mut right = [0.0; MAX_DIM];
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                left[a] += self.theta[b][a] * mode.left[b] as f64;
            }
        }
        // Opposite product: e°_k' e°_l' = χ(l', k') e°_{k'+l'}.
        for b in 0..self.n {
            for a in 0..b {
                right[b] += self.theta[b][a] * mode.right[a] as f64;
            }
        }
        (left, right)
    }
}

/// Which subalgebra an element lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// The algebra `A` itself (scalars included).
    Left,
    /// The commutant copy `A°`.
    Right,
    /// Genuinely mixed element of `Â`.
    Mixed,
}

/// Lattice label `(k, k°)` of a basis monomial of `Â`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mode {
    pub left: [i32; MAX_DIM],
    pub right: [i32; MAX_DIM],
}

impl Mode {
    pub const ZERO: Mode = Mode { left: [0; MAX_DIM], right: [0; MAX_DIM] };

    pub fn left(k: &[i32]) -> Self {
        let mut m = Mode::ZERO;
        m.left[..k.len()].copy_from_slice(k);
        m
    }

    pub fn right(k: &[i32]) -> Self {
        let mut m = Mode::ZERO;
        m.right[..k.len()].copy_from_slice(k);
        m
    }

    pub fn is_zero(&self) -> bool {
        *self == Mode::ZERO
    }

    fn add(&self, other: &Mode) -> Mode {
        let mut m = *self;
        for a in 0..MAX_DIM {
            m.left[a] += other.left[a];
            m.right[a] += other.right[a];
        }
        m
    }

    fn neg(&self) -> Mode {
        let mut m = *self;
        for a in 0..MAX_DIM {
            m.left[a] = -m.left[a];
            m.right[a] = -m.right[a];
        }
        m
    }

    /// Eigenvalue of `δ_axis`.
    pub fn weight(&self, axis: usize) -> i32 {
        self.left[axis] + self.right[axis]
    }

    /// Sup-norm radius over both lattice labels.
    pub fn radius(&self) -> i32 {
        self.left.iter().chain(self.right.iter()).map(|c| c.abs()).max().unwrap_or(0)
    }
}

/// Finitely supported element of `Â`, stored in canonical (sorted) form.
#[derive(Clone)]
pub struct TorusElement {
    defm: Arc<Deformation>,
    terms: Vec<(Mode, Complex64)>,
}

impl fmt::Debug for TorusElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusElement")
            .field("n", &self.defm.n)
            .field("terms", &self.terms)
            .finish()
    }
}

impl PartialEq for TorusElement {
    fn eq(&self, other: &Self) -> bool {
        *self.defm == *other.defm && self.terms == other.terms
    }
}

impl TorusElement {
    fn canonical(defm: Arc<Deformation>, mut terms: Vec<(Mode, Complex64)>) -> Self {
        terms.retain(|(_, c)| *c != Complex64::new(0.0, 0.0));
        terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        Self { defm, terms }
    }

    fn from_map(defm: Arc<Deformation>, map: FxHashMap<Mode, Complex64>) -> Self {
        Self::canonical(defm, map.into_iter().collect())
    }

    pub fn zero(defm: &Arc<Deformation>) -> Self {
        Self { defm: defm.clone(), terms: Vec::new() }
    }

    pub fn one(defm: &Arc<Deformation>) -> Self {
        Self::scalar(defm, Complex64::new(1.0, 0.0))
    }

    pub fn scalar(defm: &Arc<Deformation>, c: Complex64) -> Self {
        Self::canonical(defm.clone(), vec![(Mode::ZERO, c)])
    }

    pub fn real(defm: &Arc<Deformation>, c: f64) -> Self {
        Self::scalar(defm, Complex64::new(c, 0.0))
    }

    /// Basis monomial `e_k` of `A`.
    pub fn monomial(defm: &Arc<Deformation>, k: &[i32]) -> Self {
        Self::canonical(defm.clone(), vec![(Mode::left(k), Complex64::new(1.0, 0.0))])
    }

    /// Basis monomial `e°_k` of the commutant copy.
    pub fn opposite_monomial(defm: &Arc<Deformation>, k: &[i32]) -> Self {
        Self::canonical(defm.clone(), vec![(Mode::right(k), Complex64::new(1.0, 0.0))])
    }

    /// Build from explicit `(mode, coefficient)` pairs; repeated modes add up.
    pub fn from_terms(defm: &Arc<Deformation>, terms: impl IntoIterator<Item = (Mode, Complex64)>) -> Result<Self> {
        let n = defm.n;
        let mut map: FxHashMap<Mode, Complex64> = FxHashMap::default();
        for (m, c) in terms {
            if m.left[n..].iter().chain(m.right[n..].iter()).any(|x| *x != 0) {
                return Err(Error::Config(format!("mode {m:?} exceeds dimension {n}")));
            }
            *map.entry(m).or_default() += c;
        }
        Ok(Self::from_map(defm.clone(), map))
    }

    pub fn deformation(&self) -> &Arc<Deformation> {
        &self.defm
    }

    pub fn dim(&self) -> usize {
        self.defm.n
    }

    pub fn terms(&self) -> &[(Mode, Complex64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn side(&self) -> Side {
        let has_left = self.terms.iter().any(|(m, _)| m.left.iter().any(|x| *x != 0));
        let has_right = self.terms.iter().any(|(m, _)| m.right.iter().any(|x| *x != 0));
        match (has_left, has_right) {
            (_, false) => Side::Left,
            (false, true) => Side::Right,
            (true, true) => Side::Mixed,
        }
    }

    pub fn coefficient(&self, mode: &Mode) -> Complex64 {
        self.terms
            .binary_search_by(|(m, _)| m.cmp(mode))
            .map(|i| self.terms[i].1)
            .unwrap_or_default()
    }

    /// Identity component `λ₀`.
    pub fn constant_term(&self) -> Complex64 {
        self.coefficient(&Mode::ZERO)
    }

    pub fn radius(&self) -> i32 {
        self.terms.iter().map(|(m, _)| m.radius()).max().unwrap_or(0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.defm, &other.defm) || *self.defm == *other.defm {
            Ok(())
        } else {
            Err(Error::Config("elements live on different deformed tori".into()))
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.merge(other, 1.0))
    }

    fn merge(&self, other: &Self, sign: f64) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let ord = match (self.terms.get(i), other.terms.get(j)) {
                (Some(a), Some(b)) => a.0.cmp(&b.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    out.push(self.terms[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    let (m, c) = other.terms[j];
                    out.push((m, c * sign));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = self.terms[i].1 + other.terms[j].1 * sign;
                    if c != Complex64::new(0.0, 0.0) {
                        out.push((self.terms[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Self { defm: self.defm.clone(), terms: out }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        if c == Complex64::new(0.0, 0.0) {
            return Self::zero(&self.defm);
        }
        Self::canonical(self.defm.clone(), self.terms.iter().map(|(m, x)| (*m, x * c)).collect())
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Bilinear product with exact bicharacter phases.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(&self.defm);
        }
        if let Some(p) = self.mul_dense(other) {
            return p;
        }
        let defm = &*self.defm;
        let commutative = defm.is_commutative();
        let accumulate = |chunk: &[(Mode, Complex64)], map: &mut FxHashMap<Mode, Complex64>| {
            for (ma, ca) in chunk {
                let (lf, rf) = defm.phase_forms(ma);
                for (mb, cb) in &other.terms {
                    let mut c = ca * cb;
                    if !commutative {
                        let mut angle = 0.0;
                        for a in 0..defm.n {
                            angle += lf[a] * mb.left[a] as f64 + rf[a] * mb.right[a] as f64;
                        }
                        if angle != 0.0 {
                            c *= Complex64::cis(angle);
                        }
                    }
                    *map.entry(ma.add(mb)).or_default() += c;
                }
            }
        };
        let work = self.terms.len() * other.terms.len();
        if work < PARALLEL_PRODUCT_THRESHOLD {
            let mut map = FxHashMap::default();
            map.reserve(work.min(1 << 20));
            accumulate(&self.terms, &mut map);
            return Self::from_map(self.defm.clone(), map);
        }
        let partials: Vec<Vec<(Mode, Complex64)>> = self
            .terms
            .par_chunks(PRODUCT_CHUNK)
            .map(|chunk| {
                let mut map = FxHashMap::default();
                accumulate(chunk, &mut map);
                let mut v: Vec<_> = map.into_iter().collect();
                v.sort_unstable_by(|a, b| a.0.cmp(&b.0));
                v
            })
            .collect();
        let mut map: FxHashMap<Mode, Complex64> = FxHashMap::default();
        for part in partials {
            for (m, c) in part {
                *map.entry(m).or_default() += c;
            }
        }
        Self::from_map(self.defm.clone(), map)
    }

    /// Product accumulated on the bounding box of the result, with phases read
    /// from per-coordinate tables. `None` when the box is too sparse.
    fn mul_dense(&self, other: &Self) -> Option<Self> {
        const COORDS: usize = 2 * MAX_DIM;
        let coord = |m: &Mode, c: usize| if c < MAX_DIM { m.left[c] } else { m.right[c - MAX_DIM] };
        let bounds = |terms: &[(Mode, Complex64)]| {
            let mut lo = [i32::MAX; COORDS];
            let mut hi = [i32::MIN; COORDS];
            for (m, _) in terms {
                for c in 0..COORDS {
                    lo[c] = lo[c].min(coord(m, c));
                    hi[c] = hi[c].max(coord(m, c));
                }
            }
            (lo, hi)
        };
        let (alo, ahi) = bounds(&self.terms);
        let (blo, bhi) = bounds(&other.terms);
        let mut stride = [0usize; COORDS];
        let mut extent = [0usize; COORDS];
        let mut volume = 1usize;
        for c in 0..COORDS {
            extent[c] = (ahi[c] + bhi[c] - alo[c] - blo[c] + 1) as usize;
            stride[c] = volume;
            volume = volume.checked_mul(extent[c])?;
        }
        let work = self.terms.len() * other.terms.len();
        if volume > DENSE_PRODUCT_LIMIT || volume > (8 * work).max(1024) {
            return None;
        }

        let defm = &*self.defm;
        let commutative = defm.is_commutative();
        let offset = |m: &Mode, lo: &[i32; COORDS]| -> usize {
            (0..COORDS).map(|c| (coord(m, c) - lo[c]) as usize * stride[c]).sum()
        };
        let b_off: Vec<usize> = other.terms.iter().map(|(m, _)| offset(m, &blo)).collect();
        let b_rel: Vec<[u32; COORDS]> = other
            .terms
            .iter()
            .map(|(m, _)| std::array::from_fn(|c| (coord(m, c) - blo[c]) as u32))
            .collect();

        let accumulate = |chunk: &[(Mode, Complex64)], buf: &mut [Complex64]| {
            let mut tables: Vec<(usize, Vec<Complex64>)> = Vec::new();
            for (ma, ca) in chunk {
                let a_off = offset(ma, &alo);
                if commutative {
                    for ((_, cb), ob) in other.terms.iter().zip(&b_off) {
                        buf[a_off + ob] += ca * cb;
                    }
                    continue;
                }
                let (lf, rf) = defm.phase_forms(ma);
                tables.clear();
                for c in 0..COORDS {
                    let w = if c < MAX_DIM { lf[c] } else { rf[c - MAX_DIM] };
                    if w != 0.0 {
                        let t = (blo[c]..=bhi[c]).map(|x| Complex64::cis(w * x as f64)).collect();
                        tables.push((c, t));
                    }
                }
                for (j, (_, cb)) in other.terms.iter().enumerate() {
                    let mut v = ca * cb;
                    for (c, t) in &tables {
                        v *= t[b_rel[j][*c] as usize];
                    }
                    buf[a_off + b_off[j]] += v;
                }
            }
        };

        let buf = if work >= PARALLEL_PRODUCT_THRESHOLD && volume <= DENSE_PARALLEL_LIMIT {
            let chunk = self.terms.len().div_ceil(DENSE_CHUNKS).max(1);
            let parts: Vec<Vec<Complex64>> = self
                .terms
                .par_chunks(chunk)
                .map(|ch| {
                    let mut b = vec![Complex64::default(); volume];
                    accumulate(ch, &mut b);
                    b
                })
                .collect();
            let mut it = parts.into_iter();
            let mut acc = it.next().expect("at least one chunk");
            for p in it {
                for (a, b) in acc.iter_mut().zip(p) {
                    *a += b;
                }
            }
            acc
        } else {
            let mut b = vec![Complex64::default(); volume];
            accumulate(&self.terms, &mut b);
            b
        };

        let mut terms = Vec::new();
        for (idx, c) in buf.into_iter().enumerate() {
            if c == Complex64::default() {
                continue;
            }
            let mut m = Mode::ZERO;
            for k in 0..COORDS {
                let v = alo[k] + blo[k] + ((idx / stride[k]) % extent[k]) as i32;
                if k < MAX_DIM {
                    m.left[k] = v;
                } else {
                    m.right[k - MAX_DIM] = v;
                }
            }
            terms.push((m, c));
        }
        Some(Self::canonical(self.defm.clone(), terms))
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut acc = Self::one(&self.defm);
        for _ in 0..exp {
            acc = acc.mul_unchecked(self);
        }
        acc
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Derivation `δ_axis` (0-based axis).
    pub fn derive(&self, axis: usize) -> Result<Self> {
        if axis >= self.defm.n {
            return Err(Error::Argument(format!(
                "derivation axis {axis} out of range for dimension {}",
                self.defm.n
            )));
        }
        Ok(self.derive_unchecked(axis))
    }

    pub(crate) fn derive_unchecked(&self, axis: usize) -> Self {
        Self::canonical(
            self.defm.clone(),
            self.terms
                .iter()
                .map(|(m, c)| (*m, c * m.weight(axis) as f64))
                .collect(),
        )
    }

    /// Apply `δ^β` for a multi-index `beta`.
    pub fn derive_multi(&self, beta: &[u8]) -> Self {
        if beta.iter().all(|b| *b == 0) {
            return self.clone();
        }
        Self::canonical(
            self.defm.clone(),
            self.terms
                .iter()
                .map(|(m, c)| {
                    let mut f = 1.0;
                    for (a, &b) in beta.iter().enumerate() {
                        f *= (m.weight(a) as f64).powi(b as i32);
                    }
                    (*m, c * f)
                })
                .collect(),
        )
    }

    /// `δ_1² + ... + δ_n²`.
    pub fn flat_laplacian(&self) -> Self {
        let n = self.defm.n;
        Self::canonical(
            self.defm.clone(),
            self.terms
                .iter()
                .map(|(m, c)| {
                    let s: i32 = (0..n).map(|a| m.weight(a) * m.weight(a)).sum();
                    (*m, c * s as f64)
                })
                .collect(),
        )
    }

    /// Factorized trace `τ⊗`, normalised by `τ(1) = 1`.
    pub fn trace(&self) -> Complex64 {
        self.terms.iter().filter_map(|(m, c)| self.defm.trace_phase(m).map(|p| c * p)).sum()
    }

    /// Involution, with `(e_k)^* e_k = 1` on both copies.
    pub fn adjoint(&self) -> Self {
        let defm = &self.defm;
        Self::canonical(
            defm.clone(),
            self.terms
                .iter()
                .map(|(m, c)| {
                    let neg = m.neg();
                    let angle = defm.phase_angle(&m.left, &neg.left)
                        + defm.phase_angle(&neg.right, &m.right);
                    (neg, c.conj() * Complex64::cis(-angle))
                })
                .collect(),
        )
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        (self - &self.adjoint()).max_abs() <= tol
    }

    /// Drop every coefficient with modulus `<= eps`; returns the dropped ℓ¹ mass.
    pub fn prune(&self, eps: f64) -> (Self, f64) {
        let mut dropped = 0.0;
        let terms = self
            .terms
            .iter()
            .filter(|(_, c)| {
                let keep = c.norm() > eps;
                if !keep {
                    dropped += c.norm();
                }
                keep
            })
            .copied()
            .collect();
        (Self { defm: self.defm.clone(), terms }, dropped)
    }

    /// Restrict the support to sup-radius `<= radius`; returns the dropped ℓ¹ mass.
    pub fn clip(&self, radius: i32) -> (Self, f64) {
        let mut dropped = 0.0;
        let terms = self
            .terms
            .iter()
            .filter(|(m, c)| {
                let keep = m.radius() <= radius;
                if !keep {
                    dropped += c.norm();
                }
                keep
            })
            .copied()
            .collect();
        (Self { defm: self.defm.clone(), terms }, dropped)
    }

    /// Distance `‖self − other‖₁`.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        (self - other).l1_norm()
    }

    /// Inverse by Newton–Schulz iteration `b ← b + b(1 − ab)` in truncated
    /// Fourier space.
    ///
    /// Starts from `λ₀^{-1}` when `‖a/λ₀ − 1‖₁ < 1`. Otherwise a self-adjoint
    /// `a` starts from `1/‖a‖₁` and any other `a` from `a*/‖a‖₁²`; these
    /// converge when `a` is positive, respectively invertible. Coefficients far
    /// below the square of the current residual are pruned along the way. The
    /// returned residual is `‖ab − 1‖₁` computed from the unclipped product.
    pub fn invert(&self, tol: f64, max_radius: i32) -> Result<(Self, f64)> {
        let lambda = self.constant_term();
        let one = Self::one(&self.defm);
        let norm = self.l1_norm();
        if norm == 0.0 {
            return Err(Error::Inversion { reason: "zero element".into(), residual: f64::INFINITY });
        }
        let mut starts = Vec::new();
        if lambda.norm() > 0.0 && (&self.scale(lambda.inv()) - &one).l1_norm() < 1.0 {
            starts.push(Self::scalar(&self.defm, lambda.inv()));
        } else {
            if self.is_self_adjoint(1e-14 * norm) {
                starts.push(Self::real(&self.defm, 1.0 / norm));
            }
            starts.push(self.adjoint().scale_real(1.0 / (norm * norm)));
        }
        let mut last = Err(Error::Inversion { reason: "no starting point".into(), residual: f64::INFINITY });
        for start in starts {
            last = self.newton_schulz(start, tol, max_radius);
            if last.is_ok() {
                break;
            }
        }
        last
    }

    fn newton_schulz(&self, start: Self, tol: f64, max_radius: i32) -> Result<(Self, f64)> {
        let one = Self::one(&self.defm);
        let residual_of = |b: &Self| (&(self * b) - &one).l1_norm();
        let mut b = start;
        let mut residual = residual_of(&b);
        let mut best = residual;
        let mut stalled = 0;
        for _ in 0..120 {
            if residual <= tol {
                return Ok((b, residual));
            }
            let defect = &one - &(self * &b);
            let next = &b + &(&b * &defect);
            let (next, _) = next.clip(max_radius);
            let floor = (tol * 1e-6).max(1e-4 * residual.min(1.0).powi(2));
            let (next, _) = next.prune(floor / (1.0 + next.l1_norm()));
            let r = residual_of(&next);
            if !r.is_finite() || r > 1e8 {
                return Err(Error::Inversion { reason: "iteration diverged".into(), residual: r });
            }
            if r >= best * 0.999 && best < 1e-3 {
                stalled += 1;
                if stalled >= 3 {
                    break;
                }
            } else if r < best {
                stalled = 0;
                best = r;
            }
            b = next;
            residual = r;
        }
        if residual <= tol {
            Ok((b, residual))
        } else {
            Err(Error::Inversion {
                reason: format!("no convergence within support radius {max_radius}"),
                residual,
            })
        }
    }

    /// Pointwise value of the commutative (θ = 0) function `Σ c e^{i(k+k°)·x}`.
    pub fn eval_commutative(&self, x: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let phase: f64 = (0..self.defm.n).map(|a| m.weight(a) as f64 * x[a]).sum();
                c * Complex64::cis(phase)
            })
            .sum()
    }

    /// Move every coefficient to the given side (θ = 0 only, where `A ≅ A°`).
    pub fn to_side(&self, side: Side) -> Result<Self> {
        if !self.defm.is_commutative() && self.side() != side && side != Side::Mixed {
            return Err(Error::Precondition("side transfer requires θ = 0".into()));
        }
        let terms = self.terms.iter().map(|(m, c)| {
            let mut w = [0; MAX_DIM];
            for (a, wa) in w.iter_mut().enumerate() {
                *wa = m.weight(a);
            }
            let mode = match side {
                Side::Right => Mode { left: [0; MAX_DIM], right: w },
                _ => Mode { left: w, right: [0; MAX_DIM] },
            };
            (mode, *c)
        });
        Self::from_terms(&self.defm, terms)
    }

    pub fn to_record(&self) -> FourierRecord {
        let n = self.defm.n;
        FourierRecord {
            n,
            theta: self.defm.theta_rows(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TermRecord {
                    k: m.left[..n].to_vec(),
                    k0: m.right[..n].to_vec(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }

    pub fn from_record(rec: &FourierRecord) -> Result<Self> {
        let defm = Deformation::new(rec.n, &rec.theta)?;
        Self::from_record_on(rec, &defm)
    }

    /// Decode a record onto an existing deformation (which must match).
    pub fn from_record_on(rec: &FourierRecord, defm: &Arc<Deformation>) -> Result<Self> {
        if rec.n != defm.n || rec.theta != defm.theta_rows() {
            return Err(Error::Config("record deformation does not match".into()));
        }
        let mut terms = Vec::with_capacity(rec.terms.len());
        for t in &rec.terms {
            if t.k.len() != rec.n || !(t.k0.is_empty() || t.k0.len() == rec.n) {
                return Err(Error::Config(format!("term label length mismatch in {t:?}")));
            }
            let mut m = Mode::left(&t.k);
            m.right[..t.k0.len()].copy_from_slice(&t.k0);
            terms.push((m, Complex64::new(t.re, t.im)));
        }
        Self::from_terms(defm, terms)
    }
}

/// Text/JSON interchange form of an element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierRecord {
    pub n: usize,
    pub theta: Vec<Vec<f64>>,
    pub terms: Vec<TermRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub k: Vec<i32>,
    #[serde(default)]
    pub k0: Vec<i32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl<'a> Add<&'a TorusElement> for &'a TorusElement {
    type Output = TorusElement;
    fn add(self, rhs: &'a TorusElement) -> TorusElement {
        self.try_add(rhs).expect("incompatible torus elements")
    }
}

impl<'a> Sub<&'a TorusElement> for &'a TorusElement {
    type Output = TorusElement;
    fn sub(self, rhs: &'a TorusElement) -> TorusElement {
        self.check_compatible(rhs).expect("incompatible torus elements");
        self.merge(rhs, -1.0)
    }
}

impl<'a> Mul<&'a TorusElement> for &'a TorusElement {
    type Output = TorusElement;
    fn mul(self, rhs: &'a TorusElement) -> TorusElement {
        self.try_mul(rhs).expect("incompatible torus elements")
    }
}

impl Neg for &TorusElement {
    type Output = TorusElement;
    fn neg(self) -> TorusElement {
        self.scale_real(-1.0)
    }
}

impl AddAssign<&TorusElement> for TorusElement {
    fn add_assign(&mut self, rhs: &TorusElement) {
        *self = &*self + rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_element(defm: &Arc<Deformation>, rng: &mut ChaCha8Rng, radius: i32, mixed: bool) -> TorusElement {
        let n = defm.dim();
        let terms = (0..6).map(|_| {
            let mut m = Mode::ZERO;
            for a in 0..n {
                m.left[a] = rng.gen_range(-radius..=radius);
                if mixed {
                    m.right[a] = rng.gen_range(-radius..=radius);
                }
            }
            (m, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        });
        TorusElement::from_terms(defm, terms).unwrap()
    }

    #[test]
    fn ordered_basis_product() {
        let d = Deformation::two_torus(0.7);
        let e10 = TorusElement::monomial(&d, &[1, 0]);
        let e01 = TorusElement::monomial(&d, &[0, 1]);
        assert_eq!(&e10 * &e01, TorusElement::monomial(&d, &[1, 1]));
        let swapped = &e01 * &e10;
        // U_2 U_1 = e^{-iθ} U_1 U_2
        assert!((swapped.coefficient(&Mode::left(&[1, 1])) - Complex64::cis(-0.7)).norm() < 1e-15);
        assert_ne!(swapped, &e10 * &e01);
    }

    #[test]
    fn commutative_limit_commutes() {
        let d = Deformation::commutative(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_element(&d, &mut rng, 2, false);
        let b = random_element(&d, &mut rng, 2, false);
        assert!((&a * &b).l1_distance(&(&b * &a)) < 1e-14);
    }

    #[test]
    fn associativity_and_trace_property() {
        let d = Deformation::new(
            4,
            &[
                vec![0.0, 0.3, -0.5, 0.11],
                vec![-0.3, 0.0, 0.7, 0.2],
                vec![0.5, -0.7, 0.0, -0.9],
                vec![-0.11, -0.2, 0.9, 0.0],
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let a = random_element(&d, &mut rng, 2, true);
            let b = random_element(&d, &mut rng, 2, true);
            let cc = random_element(&d, &mut rng, 2, true);
            let lhs = &(&a * &b) * &cc;
            let rhs = &a * &(&b * &cc);
            assert!(lhs.l1_distance(&rhs) < 1e-13);
            assert!(((&a * &b).trace() - (&b * &a).trace()).norm() < 1e-13);
        }
    }

    #[test]
    fn commutant_commutes_exactly() {
        let d = Deformation::two_torus(1.0 / 2f64.sqrt());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_element(&d, &mut rng, 2, false);
        let b = random_element(&d, &mut rng, 2, false).to_side(Side::Right);
        // to_side only valid at θ = 0; build the opposite element directly instead.
        assert!(b.is_err());
        let bo = TorusElement::from_terms(
            &d,
            a.terms().iter().map(|(m, c)| (Mode { left: [0; 4], right: m.left }, *c * 0.5)),
        )
        .unwrap();
        assert_eq!(bo.side(), Side::Right);
        assert!(a.commutator(&bo).is_zero());
    }

    #[test]
    fn opposite_copy_is_antiisomorphic() {
        let d = Deformation::two_torus(0.9);
        let x = TorusElement::opposite_monomial(&d, &[1, 0]);
        let y = TorusElement::opposite_monomial(&d, &[0, 1]);
        let xy = &x * &y;
        let ex = TorusElement::monomial(&d, &[1, 0]);
        let ey = TorusElement::monomial(&d, &[0, 1]);
        let yx_left = &ey * &ex;
        assert!((xy.coefficient(&Mode::right(&[1, 1])) - yx_left.coefficient(&Mode::left(&[1, 1]))).norm() < 1e-15);
    }

    #[test]
    fn derivation_examples_and_leibniz() {
        let d = Deformation::two_torus(0.4);
        let e = TorusElement::monomial(&d, &[2, 3]);
        assert_eq!(e.derive(0).unwrap(), e.scale_real(2.0));
        assert!(TorusElement::one(&d).derive(1).unwrap().is_zero());
        assert!(matches!(e.derive(2), Err(Error::Argument(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_element(&d, &mut rng, 3, true);
        let b = random_element(&d, &mut rng, 3, true);
        let lhs = (&a * &b).derive(0).unwrap();
        let rhs = &(&a.derive(0).unwrap() * &b) + &(&a * &b.derive(0).unwrap());
        assert!(lhs.l1_distance(&rhs) < 1e-12);
        // τ∘δ = 0
        assert_eq!(a.derive(1).unwrap().trace(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn trace_examples() {
        let d = Deformation::two_torus(0.3);
        assert_eq!(TorusElement::one(&d).trace(), c(1.0));
        assert_eq!(TorusElement::monomial(&d, &[1, 0]).trace(), c(0.0));
        // h = 1 + 0.1(e1 + e-1): τ(h⁴) = Σ_j C(4,j) 0.1^j [coefficient of cos^j mean]
        // 1 + 6·0.01·2 + 0.0001·6 = 1.1206
        let h = &TorusElement::one(&d)
            + &(&TorusElement::monomial(&d, &[1, 0]) + &TorusElement::monomial(&d, &[-1, 0])).scale_real(0.1);
        assert!((h.pow(4).trace() - c(1.1206)).norm() < 1e-14);
    }

    #[test]
    fn involution_is_antimultiplicative() {
        let d = Deformation::two_torus(0.77);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_element(&d, &mut rng, 2, true);
        let b = random_element(&d, &mut rng, 2, true);
        let lhs = (&a * &b).adjoint();
        let rhs = &b.adjoint() * &a.adjoint();
        assert!(lhs.l1_distance(&rhs) < 1e-13);
        let e = TorusElement::monomial(&d, &[2, -1]);
        assert!((&e.adjoint() * &e).l1_distance(&TorusElement::one(&d)) < 1e-14);
        let h = &e + &e.adjoint();
        assert!(h.is_self_adjoint(1e-15));
    }

    #[test]
    fn inversion_examples() {
        let d = Deformation::two_torus(0.5);
        let (b, r) = TorusElement::real(&d, 2.0).invert(1e-14, 8).unwrap();
        assert_eq!(b, TorusElement::real(&d, 0.5));
        assert_eq!(r, 0.0);

        // Neumann series oracle: (1 + 0.1 s)^{-1} = Σ (-0.1)^j s^j with s = e1 + e-1.
        let s = &TorusElement::monomial(&d, &[1, 0]) + &TorusElement::monomial(&d, &[-1, 0]);
        let a = &TorusElement::one(&d) + &s.scale_real(0.1);
        let (b, r) = a.invert(1e-13, 24).unwrap();
        assert!(r < 1e-12);
        let mut oracle = TorusElement::zero(&d);
        let mut power = TorusElement::one(&d);
        for j in 0..40 {
            oracle += &power.scale_real((-0.1f64).powi(j));
            power = &power * &s;
        }
        let (oracle, _) = oracle.clip(24);
        assert!(b.l1_distance(&oracle) < 1e-11);

        let err = s.invert(1e-12, 24).unwrap_err();
        assert!(matches!(err, Error::Inversion { .. }));

        // (1 + 0.3 s)² is far from its constant term in ℓ¹ but still invertible.
        let base = &TorusElement::one(&d) + &s.scale_real(0.3);
        let sq = &base * &base;
        let (b, r) = sq.invert(1e-13, 64).unwrap();
        assert!(r < 1e-13);
        let (bi, _) = base.invert(1e-14, 64).unwrap();
        assert!(b.l1_distance(&(&bi * &bi)) < 1e-11);
    }

    #[test]
    fn inversion_reports_radius_failure() {
        let d = Deformation::two_torus(0.5);
        let s = &TorusElement::monomial(&d, &[1, 0]) + &TorusElement::monomial(&d, &[-1, 0]);
        let a = &TorusElement::one(&d) + &s.scale_real(0.45);
        match a.invert(1e-14, 3) {
            Err(Error::Inversion { residual, .. }) => assert!(residual > 1e-14 && residual.is_finite()),
            other => panic!("expected inversion failure, got {other:?}"),
        }
    }

    #[test]
    fn commutative_limit_matches_grid_arithmetic() {
        // Values on a (2N+1)^2 grid: products and derivatives agree with
        // pointwise arithmetic on the sampled trigonometric polynomials.
        let d = Deformation::commutative(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_element(&d, &mut rng, 2, false);
        let b = random_element(&d, &mut rng, 2, false);
        let ab = &a * &b;
        let da = a.derive(0).unwrap();
        let npts = 2 * 4 + 1;
        for i in 0..npts {
            for j in 0..npts {
                let x = [
                    2.0 * std::f64::consts::PI * i as f64 / npts as f64,
                    2.0 * std::f64::consts::PI * j as f64 / npts as f64,
                ];
                let (va, vb) = (a.eval_commutative(&x), b.eval_commutative(&x));
                assert!((ab.eval_commutative(&x) - va * vb).norm() < 1e-10);
                // δ = -i ∂: finite-difference-free check through the exact Fourier derivative.
                let h = 1e-6;
                let fd = (a.eval_commutative(&[x[0] + h, x[1]]) - a.eval_commutative(&[x[0] - h, x[1]])) / (2.0 * h);
                assert!((da.eval_commutative(&x) - fd * Complex64::new(0.0, -1.0)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn record_round_trip_is_exact() {
        let d = Deformation::two_torus(1.0 / 2f64.sqrt());
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_element(&d, &mut rng, 3, true);
        let text = serde_json::to_string(&a.to_record()).unwrap();
        let back: FourierRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(TorusElement::from_record(&back).unwrap(), a);
    }

    #[test]
    fn rejects_non_skew_theta() {
        assert!(matches!(
            Deformation::new(2, &[vec![0.0, 0.5], vec![0.5, 0.0]]),
            Err(Error::Config(_))
        ));
        assert!(Deformation::new(3, &[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]]).is_err());
    }

    #[test]
    fn mismatched_deformations_error() {
        let a = TorusElement::one(&Deformation::two_torus(0.1));
        let b = TorusElement::one(&Deformation::two_torus(0.2));
        assert!(matches!(a.try_mul(&b), Err(Error::Config(_))));
    }

    #[test]
    fn trace_of_mixed_monomials() {
        let flat = Deformation::commutative(2).unwrap();
        let k = [2, -1];
        let pair = TorusElement::monomial(&flat, &k).try_mul(&TorusElement::opposite_monomial(&flat, &[-2, 1])).unwrap();
        assert!((pair.trace() - c(1.0)).norm() < 1e-15);

        let nc = Deformation::two_torus(0.7);
        let pair = TorusElement::monomial(&nc, &k).try_mul(&TorusElement::opposite_monomial(&nc, &[-2, 1])).unwrap();
        assert_eq!(pair.trace(), c(0.0));

        // A degenerate direction of θ survives with the phase of e_m e_{-m}.
        let th = vec![vec![0.0, 0.5, 0.0, 0.0], vec![-0.5, 0.0, 0.0, 0.0], vec![0.0; 4], vec![0.0; 4]];
        let d = Deformation::new(4, &th).unwrap();
        let m = [0, 0, 1, 3];
        let e = TorusElement::monomial(&d, &m);
        let pair = e.try_mul(&TorusElement::opposite_monomial(&d, &[0, 0, -1, -3])).unwrap();
        assert!((pair.trace() - c(1.0)).norm() < 1e-15);
        assert!((e.try_mul(&e.adjoint()).unwrap().trace() - c(1.0)).norm() < 1e-15);
    }
}
