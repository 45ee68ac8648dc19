//! Graded pseudodifferential symbols with matrix coefficients over `Â`.
//!
//! A symbol is a finite sum of terms `c · ξ^α · ‖ξ‖^{-2j}`, homogeneous of
//! order `|α| − 2j`, with the coefficient written to the left. Derivations
//! carry the symbol `σ(δ_a) = ξ_a`, so the composition rule reads
//!
//! ```text
//! σ(P∘Q) = Σ_β (1/β!) ∂_ξ^β σ(P) · δ^β σ(Q)
//! ```
//!
//! with the multi-index factorial `β!` and no powers of `i`. The classical
//! `(−i)^{|β|} ∂_x^β` form is recovered through `δ = −i∂`.
//!
//! Every symbol records the orders it tracks: either all of them (`depth =
//! None`, e.g. differential operators) or the `depth` highest orders starting
//! at `top_order`. Operations propagate the tracked window so truncation is
//! always explicit.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Deformation, FourierRecord, TorusElement, MAX_DIM};
use crate::clifford::CliffordValue;
use crate::error::{Error, Result};

/// Default number of tracked orders.
pub const DEFAULT_DEPTH: u32 = 3;

/// Monomial label `ξ^α ‖ξ‖^{-2j}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermKey {
    pub alpha: [u8; MAX_DIM],
    pub j: u16,
}

impl TermKey {
    pub const ONE: TermKey = TermKey { alpha: [0; MAX_DIM], j: 0 };

    /// `ξ_{a_1} ξ_{a_2} ···`.
    pub fn xi(axes: &[usize]) -> Self {
        let mut k = Self::ONE;
        for &a in axes {
            k.alpha[a] += 1;
        }
        k
    }

    /// `‖ξ‖^{-2j}`.
    pub fn inverse_norm(j: u16) -> Self {
        TermKey { alpha: [0; MAX_DIM], j }
    }

    pub fn with_inverse_norm(mut self, j: u16) -> Self {
        self.j += j;
        self
    }

    pub fn degree(&self) -> u32 {
        self.alpha.iter().map(|a| *a as u32).sum()
    }

    pub fn order(&self) -> i32 {
        self.degree() as i32 - 2 * self.j as i32
    }

    fn times(&self, other: &TermKey) -> TermKey {
        let mut k = *self;
        for a in 0..MAX_DIM {
            k.alpha[a] += other.alpha[a];
        }
        k.j += other.j;
        k
    }
}

/// One homogeneous term of a symbol.
#[derive(Clone, Debug)]
pub struct SymbolTerm {
    pub key: TermKey,
    pub coeff: CliffordValue,
}

impl SymbolTerm {
    pub fn order(&self) -> i32 {
        self.key.order()
    }
}

/// Knobs for numerical steps inside the calculus.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalculusSettings {
    /// Residual target `‖ab − 1‖₁` for coefficient inversion.
    pub inversion_tol: f64,
    /// Support radius at which inverses are clipped.
    pub max_radius: i32,
    /// Coefficients with modulus below this are dropped after each
    /// composition (0 disables pruning).
    pub prune_eps: f64,
    /// Lower bound on the number of orders tracked for inverse powers.
    #[serde(default)]
    pub min_depth: u32,
}

impl Default for CalculusSettings {
    fn default() -> Self {
        Self { inversion_tol: 1e-14, max_radius: 48, prune_eps: 1e-17, min_depth: 0 }
    }
}

type TermMap = BTreeMap<TermKey, CliffordValue>;

/// A truncated graded symbol.
#[derive(Clone, Debug)]
pub struct Symbol {
    defm: Arc<Deformation>,
    mat_dim: usize,
    top_order: i32,
    depth: Option<u32>,
    terms: TermMap,
}

impl Symbol {
    /// Build a symbol; terms outside the tracked window are rejected.
    pub fn new(
        defm: &Arc<Deformation>,
        mat_dim: usize,
        top_order: i32,
        depth: Option<u32>,
        terms: impl IntoIterator<Item = (TermKey, CliffordValue)>,
    ) -> Result<Self> {
        if depth == Some(0) {
            return Err(Error::Argument("depth must be at least 1".into()));
        }
        let mut s = Self { defm: defm.clone(), mat_dim, top_order, depth, terms: TermMap::new() };
        for (key, coeff) in terms {
            if coeff.dim() != mat_dim {
                return Err(Error::Config("coefficient size mismatch".into()));
            }
            coeff.get(0, 0).check_compatible(&TorusElement::zero(defm))?;
            let o = key.order();
            if o > top_order || s.lowest_tracked().is_some_and(|low| o < low) {
                return Err(Error::Precondition(format!("term of order {o} outside tracked window")));
            }
            if key.alpha[defm.dim()..].iter().any(|a| *a != 0) {
                return Err(Error::Config("ξ-index exceeds the dimension".into()));
            }
            s.add_term(key, coeff);
        }
        Ok(s)
    }

    /// The zero-order symbol of multiplication by `c` (exact).
    pub fn multiplication(c: &CliffordValue) -> Self {
        let mut s = Self {
            defm: c.deformation().clone(),
            mat_dim: c.dim(),
            top_order: 0,
            depth: None,
            terms: TermMap::new(),
        };
        s.add_term(TermKey::ONE, c.clone());
        s
    }

    /// Multiplication by a scalar algebra element, as an operator on `C^dim`.
    pub fn scalar_multiplication(a: &TorusElement, mat_dim: usize) -> Self {
        Self::multiplication(&CliffordValue::scalar(a, mat_dim))
    }

    pub fn identity(defm: &Arc<Deformation>, mat_dim: usize) -> Self {
        Self::multiplication(&CliffordValue::identity(defm, mat_dim))
    }

    /// `‖ξ‖²` times the identity.
    pub fn flat_laplacian(defm: &Arc<Deformation>, mat_dim: usize) -> Self {
        let id = CliffordValue::identity(defm, mat_dim);
        let terms = (0..defm.dim()).map(|a| (TermKey::xi(&[a, a]), id.clone()));
        Self::new(defm, mat_dim, 2, None, terms).expect("valid flat laplacian")
    }

    fn add_term(&mut self, key: TermKey, coeff: CliffordValue) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.remove(&key) {
            Some(prev) => {
                let sum = &prev + &coeff;
                if !sum.is_zero() {
                    self.terms.insert(key, sum);
                }
            }
            None => {
                self.terms.insert(key, coeff);
            }
        }
    }

    pub fn deformation(&self) -> &Arc<Deformation> {
        &self.defm
    }

    /// Spatial dimension `n`.
    pub fn dim(&self) -> usize {
        self.defm.dim()
    }

    pub fn mat_dim(&self) -> usize {
        self.mat_dim
    }

    pub fn top_order(&self) -> i32 {
        self.top_order
    }

    pub fn depth(&self) -> Option<u32> {
        self.depth
    }

    pub fn is_exact(&self) -> bool {
        self.depth.is_none()
    }

    /// Lowest order known to be correct (`None` when every order is exact).
    pub fn lowest_tracked(&self) -> Option<i32> {
        self.depth.map(|d| self.top_order - d as i32 + 1)
    }

    pub fn tracks(&self, order: i32) -> bool {
        order <= self.top_order && self.lowest_tracked().map_or(true, |low| order >= low)
    }

    /// True if every term is polynomial in `ξ` (a differential operator).
    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|k| k.j == 0)
    }

    pub fn terms(&self) -> impl Iterator<Item = SymbolTerm> + '_ {
        self.terms.iter().map(|(k, c)| SymbolTerm { key: *k, coeff: c.clone() })
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn component(&self, order: i32) -> Vec<SymbolTerm> {
        self.terms().filter(|t| t.order() == order).collect()
    }

    /// The homogeneous part of the given order as its own exact symbol.
    pub fn component_symbol(&self, order: i32) -> Symbol {
        let mut s = Symbol {
            defm: self.defm.clone(),
            mat_dim: self.mat_dim,
            top_order: order,
            depth: Some(1),
            terms: TermMap::new(),
        };
        for t in self.component(order) {
            s.add_term(t.key, t.coeff);
        }
        s
    }

    pub fn orders(&self) -> Vec<i32> {
        let mut o: Vec<i32> = self.terms.keys().map(|k| k.order()).collect();
        o.sort_unstable_by(|a, b| b.cmp(a));
        o.dedup();
        o
    }

    fn check_compatible(&self, other: &Symbol) -> Result<()> {
        if self.dim() != other.dim() || self.mat_dim != other.mat_dim {
            return Err(Error::Config(format!(
                "symbols over different spaces: (n={}, rank {}) vs (n={}, rank {})",
                self.dim(),
                self.mat_dim,
                other.dim(),
                other.mat_dim
            )));
        }
        TorusElement::zero(&self.defm).check_compatible(&TorusElement::zero(&other.defm))
    }

    /// Restrict to the `depth` highest orders below `top_order`.
    pub fn truncate(&self, depth: u32) -> Symbol {
        let depth = self.depth.map_or(depth, |d| d.min(depth)).max(1);
        let low = self.top_order - depth as i32 + 1;
        Symbol {
            defm: self.defm.clone(),
            mat_dim: self.mat_dim,
            top_order: self.top_order,
            depth: Some(depth),
            terms: self.terms.iter().filter(|(k, _)| k.order() >= low).map(|(k, c)| (*k, c.clone())).collect(),
        }
    }

    fn combine(&self, other: &Symbol, sign: f64) -> Result<Symbol> {
        self.check_compatible(other)?;
        let top = self.top_order.max(other.top_order);
        let low = match (self.lowest_tracked(), other.lowest_tracked()) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(i32::MIN).max(b.unwrap_or(i32::MIN))),
        };
        let mut out = Symbol {
            defm: self.defm.clone(),
            mat_dim: self.mat_dim,
            top_order: top,
            depth: low.map(|l| (top - l + 1).max(1) as u32),
            terms: self.terms.clone(),
        };
        for (k, c) in &other.terms {
            out.add_term(*k, c.scale(Complex64::new(sign, 0.0)));
        }
        if let Some(l) = low {
            out.terms.retain(|k, _| k.order() >= l);
        }
        Ok(out)
    }

    pub fn try_add(&self, other: &Symbol) -> Result<Symbol> {
        self.combine(other, 1.0)
    }

    pub fn try_sub(&self, other: &Symbol) -> Result<Symbol> {
        self.combine(other, -1.0)
    }

    pub fn scale(&self, c: Complex64) -> Symbol {
        let mut out = self.clone();
        out.terms = self
            .terms
            .iter()
            .map(|(k, v)| (*k, v.scale(c)))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        out
    }

    /// `c · σ`, i.e. composition with a zero-order multiplication from the left
    /// (exact, since `∂_ξ c = 0`).
    pub fn left_mul(&self, c: &CliffordValue) -> Symbol {
        let mut out = self.clone();
        out.terms = self
            .terms
            .iter()
            .map(|(k, v)| (*k, c * v))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        out
    }

    pub fn prune(&self, eps: f64) -> (Symbol, f64) {
        let mut dropped = 0.0;
        let mut out = self.clone();
        out.terms = self
            .terms
            .iter()
            .map(|(k, v)| {
                let (p, d) = v.prune(eps);
                dropped += d;
                (*k, p)
            })
            .filter(|(_, v)| !v.is_zero())
            .collect();
        (out, dropped)
    }

    /// Entrywise derivation `δ_axis` of all coefficients (the symbol of
    /// the commutator `[δ_axis, P]`).
    pub fn x_derivative(&self, axis: usize) -> Result<Symbol> {
        let mut out = self.clone();
        out.terms = TermMap::new();
        for (k, v) in &self.terms {
            out.add_term(*k, v.derive(axis)?);
        }
        Ok(out)
    }

    /// `∂_{ξ_axis}` of every term; lowers the order by one.
    pub fn xi_derivative(&self, axis: usize) -> Result<Symbol> {
        if axis >= self.dim() {
            return Err(Error::Argument(format!("axis {axis} out of range")));
        }
        let mut beta = [0u8; MAX_DIM];
        beta[axis] = 1;
        let mut out = Symbol {
            defm: self.defm.clone(),
            mat_dim: self.mat_dim,
            top_order: self.top_order - 1,
            depth: self.depth,
            terms: TermMap::new(),
        };
        for (k, v) in &self.terms {
            for (f, key) in xi_derivative_expansion(k, &beta) {
                out.add_term(key, v.scale(Complex64::new(f, 0.0)));
            }
        }
        Ok(out)
    }

    /// Pointwise product `σ·τ` of symbols (not the composition).
    pub fn mul_pointwise(&self, other: &Symbol) -> Result<Symbol> {
        self.check_compatible(other)?;
        let top = self.top_order + other.top_order;
        let depth = match (self.depth, other.depth) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(u32::MAX).min(b.unwrap_or(u32::MAX))),
        };
        let mut out = Symbol {
            defm: self.defm.clone(),
            mat_dim: self.mat_dim,
            top_order: top,
            depth,
            terms: TermMap::new(),
        };
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                out.add_term(ka.times(kb), va * vb);
            }
        }
        if let Some(low) = out.lowest_tracked() {
            out.terms.retain(|k, _| k.order() >= low);
        }
        Ok(out)
    }

    /// Rewrite each order over the common denominator `‖ξ‖^{2J}` (with `J` at
    /// least `min_j[order]`), giving a canonical polynomial numerator.
    fn homogenized(&self, min_j: &BTreeMap<i32, u16>) -> BTreeMap<(i32, [u8; MAX_DIM]), CliffordValue> {
        let n = self.dim();
        let mut target: BTreeMap<i32, u16> = min_j.clone();
        for k in self.terms.keys() {
            let e = target.entry(k.order()).or_insert(0);
            *e = (*e).max(k.j);
        }
        let mut out: BTreeMap<(i32, [u8; MAX_DIM]), CliffordValue> = BTreeMap::new();
        for (k, v) in &self.terms {
            let big_j = target[&k.order()];
            for (f, alpha) in norm_power_expansion(n, big_j - k.j) {
                let mut a = k.alpha;
                for i in 0..MAX_DIM {
                    a[i] += alpha[i];
                }
                let c = v.scale(Complex64::new(f, 0.0));
                let slot = (k.order(), a);
                match out.remove(&slot) {
                    Some(prev) => {
                        out.insert(slot, &prev + &c);
                    }
                    None => {
                        out.insert(slot, c);
                    }
                }
            }
        }
        out
    }

    /// Largest coefficient modulus of `self − other` in canonical form, over
    /// the orders both symbols track.
    pub fn distance(&self, other: &Symbol) -> Result<f64> {
        self.check_compatible(other)?;
        let top = self.top_order.max(other.top_order);
        let low = self.lowest_tracked().unwrap_or(i32::MIN).max(other.lowest_tracked().unwrap_or(i32::MIN));
        let mut jmax: BTreeMap<i32, u16> = BTreeMap::new();
        for k in self.terms.keys().chain(other.terms.keys()) {
            let e = jmax.entry(k.order()).or_insert(0);
            *e = (*e).max(k.j);
        }
        let a = self.homogenized(&jmax);
        let b = other.homogenized(&jmax);
        let mut worst: f64 = 0.0;
        let zero = CliffordValue::zero(&self.defm, self.mat_dim);
        for key in a.keys().chain(b.keys()) {
            if key.0 > top || key.0 < low {
                continue;
            }
            let d = a.get(key).unwrap_or(&zero) - b.get(key).unwrap_or(&zero);
            worst = worst.max(d.max_abs());
        }
        Ok(worst)
    }

    /// Largest coefficient modulus, canonical form.
    pub fn max_abs(&self) -> f64 {
        self.homogenized(&BTreeMap::new()).values().map(|v| v.max_abs()).fold(0.0, f64::max)
    }

    pub fn to_dump(&self) -> SymbolDump {
        let mut coefficients = Vec::new();
        let mut terms = Vec::new();
        for (k, v) in &self.terms {
            terms.push(DumpTerm {
                order: k.order(),
                alpha: k.alpha[..self.dim()].to_vec(),
                j: k.j,
                coeff_ref: coefficients.len(),
            });
            coefficients.push(v.entries().iter().map(|e| e.to_record()).collect());
        }
        SymbolDump {
            n: self.dim(),
            mat_dim: self.mat_dim,
            top_order: self.top_order,
            depth: self.depth,
            terms,
            coefficients,
        }
    }

    pub fn from_dump(dump: &SymbolDump, defm: &Arc<Deformation>) -> Result<Symbol> {
        let mut terms = Vec::with_capacity(dump.terms.len());
        for t in &dump.terms {
            let records = dump
                .coefficients
                .get(t.coeff_ref)
                .ok_or_else(|| Error::Config(format!("dangling coeff_ref {}", t.coeff_ref)))?;
            let entries = records
                .iter()
                .map(|r| TorusElement::from_record_on(r, defm))
                .collect::<Result<Vec<_>>>()?;
            let mut key = TermKey { alpha: [0; MAX_DIM], j: t.j };
            if t.alpha.len() > MAX_DIM {
                return Err(Error::Config("alpha too long".into()));
            }
            key.alpha[..t.alpha.len()].copy_from_slice(&t.alpha);
            if key.order() != t.order {
                return Err(Error::Config(format!("term order {} inconsistent with alpha/j", t.order)));
            }
            terms.push((key, CliffordValue::from_entries(dump.mat_dim, entries)?));
        }
        Symbol::new(defm, dump.mat_dim, dump.top_order, dump.depth, terms)
    }
}

/// JSON dump of a symbol for golden files.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SymbolDump {
    pub n: usize,
    pub mat_dim: usize,
    pub top_order: i32,
    pub depth: Option<u32>,
    pub terms: Vec<DumpTerm>,
    /// Row-major coefficient matrices, referenced by `coeff_ref`.
    pub coefficients: Vec<Vec<FourierRecord>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DumpTerm {
    pub order: i32,
    pub alpha: Vec<u8>,
    pub j: u16,
    pub coeff_ref: usize,
}

/// `∂_ξ^β (ξ^α ‖ξ‖^{-2j})` as a list of `(factor, key)`.
fn xi_derivative_expansion(key: &TermKey, beta: &[u8; MAX_DIM]) -> Vec<(f64, TermKey)> {
    let mut current: BTreeMap<TermKey, f64> = BTreeMap::new();
    current.insert(*key, 1.0);
    for axis in 0..MAX_DIM {
        for _ in 0..beta[axis] {
            let mut next: BTreeMap<TermKey, f64> = BTreeMap::new();
            for (k, f) in current {
                if k.alpha[axis] > 0 {
                    let mut d = k;
                    d.alpha[axis] -= 1;
                    *next.entry(d).or_default() += f * k.alpha[axis] as f64;
                }
                if k.j > 0 {
                    let mut d = k;
                    d.alpha[axis] += 1;
                    d.j += 1;
                    *next.entry(d).or_default() -= f * 2.0 * k.j as f64;
                }
            }
            next.retain(|_, f| *f != 0.0);
            current = next;
        }
    }
    current.into_iter().map(|(k, f)| (f, k)).collect()
}

/// `(ξ_1² + ... + ξ_n²)^t` as `(multinomial coefficient, α)` pairs.
fn norm_power_expansion(n: usize, t: u16) -> Vec<(f64, [u8; MAX_DIM])> {
    let mut out: BTreeMap<[u8; MAX_DIM], f64> = BTreeMap::new();
    out.insert([0; MAX_DIM], 1.0);
    for _ in 0..t {
        let mut next = BTreeMap::new();
        for (a, f) in out {
            for axis in 0..n {
                let mut b = a;
                b[axis] += 2;
                *next.entry(b).or_insert(0.0) += f;
            }
        }
        out = next;
    }
    out.into_iter().map(|(a, f)| (f, a)).collect()
}

/// All multi-indices in `n` variables with `|β| <= max`.
fn multi_indices(n: usize, max: u32) -> Vec<([u8; MAX_DIM], u32)> {
    let mut out = vec![([0u8; MAX_DIM], 0u32)];
    for axis in 0..n {
        let mut next = Vec::new();
        for (b, s) in &out {
            for extra in 0..=(max - s) {
                let mut c = *b;
                c[axis] = extra as u8;
                next.push((c, s + extra));
            }
        }
        out = next;
    }
    out.sort();
    out
}

fn factorial(b: &[u8; MAX_DIM]) -> f64 {
    b.iter().map(|&k| (1..=k as u32).map(|i| i as f64).product::<f64>()).product()
}

/// Composition terms of order `>= low` (or all of them when `low` is `None`
/// and both inputs are polynomial). Inputs are treated as exact.
/// Terms of `σ(P∘Q)` of order at least `low`, or of order exactly `only`.
fn compose_terms(p: &Symbol, q: &Symbol, low: Option<i32>, only: Option<i32>) -> TermMap {
    let low = only.or(low);
    let n = p.dim();
    let p_terms: Vec<(&TermKey, &CliffordValue)> = p.terms.iter().collect();
    let q_terms: Vec<(&TermKey, &CliffordValue)> = q.terms.iter().collect();
    let pairs: Vec<(usize, usize)> = (0..p_terms.len())
        .flat_map(|i| (0..q_terms.len()).map(move |j| (i, j)))
        .collect();

    let contributions: Vec<Vec<(TermKey, CliffordValue)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (kp, cp) = p_terms[i];
            let (kq, cq) = q_terms[j];
            let base_order = kp.order() + kq.order();
            let max_beta = match low {
                Some(l) if base_order < l => return Vec::new(),
                Some(l) => (base_order - l) as u32,
                None => kp.degree(),
            };
            let mut out = Vec::new();
            for (beta, size) in multi_indices(n, max_beta) {
                if (low.is_none() && size > kp.degree()) || only.is_some_and(|o| base_order - size as i32 != o) {
                    continue;
                }
                let derived_q = cq.derive_multi(&beta);
                if derived_q.is_zero() {
                    continue;
                }
                let expansion = xi_derivative_expansion(kp, &beta);
                if expansion.is_empty() {
                    continue;
                }
                let product = cp * &derived_q;
                if product.is_zero() {
                    continue;
                }
                let inv_fact = 1.0 / factorial(&beta);
                for (f, kd) in expansion {
                    out.push((kd.times(kq), product.scale(Complex64::new(f * inv_fact, 0.0))));
                }
            }
            out
        })
        .collect();

    let mut acc: TermMap = TermMap::new();
    for part in contributions {
        for (k, c) in part {
            match acc.remove(&k) {
                Some(prev) => {
                    let s = &prev + &c;
                    if !s.is_zero() {
                        acc.insert(k, s);
                    }
                }
                None => {
                    if !c.is_zero() {
                        acc.insert(k, c);
                    }
                }
            }
        }
    }
    acc
}

/// Symbol of the composition `P∘Q`, tracked to at most `depth` orders.
pub fn compose(p: &Symbol, q: &Symbol, depth: u32) -> Result<Symbol> {
    compose_with(p, q, depth, &CalculusSettings::default())
}

pub fn compose_with(p: &Symbol, q: &Symbol, depth: u32, settings: &CalculusSettings) -> Result<Symbol> {
    if depth == 0 {
        return Err(Error::Argument("depth must be at least 1".into()));
    }
    p.check_compatible(q)?;
    let top = p.top_order + q.top_order;
    let exact = p.is_exact() && q.is_exact() && p.is_polynomial() && q.is_polynomial();
    let (low, out_depth) = if exact {
        (None, None)
    } else {
        let valid = match (p.lowest_tracked(), q.lowest_tracked()) {
            (None, None) => i32::MIN,
            (lp, lq) => {
                let a = lp.map_or(i32::MIN, |l| l.saturating_add(q.top_order));
                let b = lq.map_or(i32::MIN, |l| l.saturating_add(p.top_order));
                a.max(b)
            }
        };
        let low = valid.max(top - depth as i32 + 1);
        (Some(low), Some((top - low + 1) as u32))
    };
    let terms = compose_terms(p, q, low, None);
    let out = Symbol { defm: p.defm.clone(), mat_dim: p.mat_dim, top_order: top, depth: out_depth, terms };
    Ok(if settings.prune_eps > 0.0 { out.prune(settings.prune_eps).0 } else { out })
}

/// The homogeneous component of order `order` of `σ(P∘Q)`.
pub fn compose_at_order(p: &Symbol, q: &Symbol, order: i32, settings: &CalculusSettings) -> Result<Symbol> {
    p.check_compatible(q)?;
    let top = p.top_order + q.top_order;
    let valid = match (p.lowest_tracked(), q.lowest_tracked()) {
        (None, None) => i32::MIN,
        (lp, lq) => {
            let a = lp.map_or(i32::MIN, |l| l.saturating_add(q.top_order));
            let b = lq.map_or(i32::MIN, |l| l.saturating_add(p.top_order));
            a.max(b)
        }
    };
    if order > top || order < valid {
        return Err(Error::Precondition(format!("order {order} is not determined by the factors (top {top}, lowest {valid})")));
    }
    let terms = compose_terms(p, q, None, Some(order));
    let out = Symbol { defm: p.defm.clone(), mat_dim: p.mat_dim, top_order: order, depth: Some(1), terms };
    Ok(if settings.prune_eps > 0.0 { out.prune(settings.prune_eps).0 } else { out })
}

/// `Σ_α w(α) c_α` over the terms `c_α ξ^α‖ξ‖^{-2j}` of the order-`order`
/// component of `σ(P∘Q)`, without forming the component. Each term of `P`
/// is multiplied once against a weighted sum of `Q`-side coefficients.
pub fn weighted_component(
    p: &Symbol,
    q: &Symbol,
    order: i32,
    weight: impl Fn(&TermKey) -> f64 + Sync,
) -> Result<CliffordValue> {
    p.check_compatible(q)?;
    let top = p.top_order + q.top_order;
    let valid = match (p.lowest_tracked(), q.lowest_tracked()) {
        (None, None) => i32::MIN,
        (lp, lq) => {
            let a = lp.map_or(i32::MIN, |l| l.saturating_add(q.top_order));
            let b = lq.map_or(i32::MIN, |l| l.saturating_add(p.top_order));
            a.max(b)
        }
    };
    if order > top || order < valid {
        return Err(Error::Precondition(format!("order {order} is not determined by the factors (top {top}, lowest {valid})")));
    }
    let n = p.dim();
    let q_terms: Vec<(&TermKey, &CliffordValue)> = q.terms.iter().collect();
    let parts: Vec<CliffordValue> = p
        .terms
        .par_iter()
        .filter_map(|(kp, cp)| {
            let mut side = CliffordValue::zero(&p.defm, p.mat_dim);
            for (kq, cq) in &q_terms {
                let base = kp.order() + kq.order();
                if base < order {
                    continue;
                }
                let size = (base - order) as u32;
                for (beta, s) in multi_indices(n, size) {
                    if s != size {
                        continue;
                    }
                    let mut w = 0.0;
                    for (f, kd) in xi_derivative_expansion(kp, &beta) {
                        w += f * weight(&kd.times(kq));
                    }
                    if w == 0.0 {
                        continue;
                    }
                    let derived = cq.derive_multi(&beta);
                    if derived.is_zero() {
                        continue;
                    }
                    side = &side + &derived.scale(Complex64::new(w / factorial(&beta), 0.0));
                }
            }
            (!side.is_zero()).then(|| cp * &side)
        })
        .collect();
    let mut acc = CliffordValue::zero(&p.defm, p.mat_dim);
    for part in parts {
        acc = &acc + &part;
    }
    Ok(acc)
}

/// Compose a chain `P_1∘P_2∘···∘P_k` from the right.
pub fn compose_chain(factors: &[&Symbol], depth: u32, settings: &CalculusSettings) -> Result<Symbol> {
    let (last, rest) = factors
        .split_last()
        .ok_or_else(|| Error::Argument("empty composition".into()))?;
    let mut acc = (*last).clone();
    for f in rest.iter().rev() {
        acc = compose_with(f, &acc, depth, settings)?;
    }
    Ok(acc)
}

/// The principal coefficient `c` of an order-2 symbol of the form `c‖ξ‖²`.
pub fn principal_scalar(p: &Symbol) -> Result<CliffordValue> {
    if p.top_order != 2 {
        return Err(Error::Precondition(format!("expected an order-2 symbol, got order {}", p.top_order)));
    }
    let principal = p.component_symbol(2);
    // Value at ξ = e_1.
    let mut c = CliffordValue::zero(&p.defm, p.mat_dim);
    for t in principal.terms() {
        if t.key.alpha[0] as u32 == t.key.degree() && t.key.alpha[0] == 2 + 2 * t.key.j as u8 {
            c = &c + &t.coeff;
        }
    }
    let model = Symbol::flat_laplacian(&p.defm, p.mat_dim).left_mul(&c);
    let mismatch = principal.distance(&model.component_symbol(2))?;
    let scale = c.max_abs().max(1e-300);
    if mismatch > 1e-12 * scale {
        return Err(Error::Precondition(format!(
            "principal symbol is not of the form c·‖ξ‖² (mismatch {mismatch:.3e})"
        )));
    }
    Ok(c)
}

/// Parametrix `σ(P^{-1}) = 𝔟₂ + 𝔟₃ + ...` of an order-2 symbol with principal
/// part `c(x)‖ξ‖²`, solving `σ(P∘B) = 1` order by order with `𝔟₂` multiplied
/// from the left.
pub fn parametrix(p: &Symbol, depth: u32) -> Result<Symbol> {
    parametrix_with(p, depth, &CalculusSettings::default())
}

pub fn parametrix_with(p: &Symbol, depth: u32, settings: &CalculusSettings) -> Result<Symbol> {
    if depth == 0 {
        return Err(Error::Argument("depth must be at least 1".into()));
    }
    let c = principal_scalar(p)?;
    let c0 = c.as_scalar().ok_or_else(|| {
        Error::Precondition("principal coefficient must be a scalar multiple of the identity".into())
    })?;
    let (c_inv, _residual) = c0.invert(settings.inversion_tol, settings.max_radius)?;
    let b2 = CliffordValue::scalar(&c_inv, p.mat_dim);
    let depth = p.depth.map_or(depth, |d| d.min(depth));

    let mut b = Symbol { defm: p.defm.clone(), mat_dim: p.mat_dim, top_order: -2, depth: None, terms: TermMap::new() };
    b.add_term(TermKey::inverse_norm(1), b2.clone());
    for r in 1..depth as i32 {
        let product = compose_terms(p, &b, None, Some(-r));
        for (k, v) in product.into_iter().filter(|(k, _)| k.order() == -r) {
            let coeff = -&(&b2 * &v);
            let coeff = if settings.prune_eps > 0.0 { coeff.prune(settings.prune_eps).0 } else { coeff };
            b.add_term(k.with_inverse_norm(1), coeff);
        }
    }
    b.depth = Some(depth);
    Ok(b)
}

/// `σ(B^l)` by iterated composition `B∘(B∘(···))`.
pub fn power_symbols(b: &Symbol, l: u32, depth: u32) -> Result<Symbol> {
    power_symbols_with(b, l, depth, &CalculusSettings::default())
}

pub fn power_symbols_with(b: &Symbol, l: u32, depth: u32, settings: &CalculusSettings) -> Result<Symbol> {
    if l < 1 {
        return Err(Error::Argument("power must be at least 1".into()));
    }
    let mut acc = b.truncate(depth);
    for _ in 1..l {
        acc = compose_with(b, &acc, depth, settings)?;
    }
    Ok(acc)
}

/// Closed form of the three leading symbols of `P^l` for mutually commuting
/// scalar symbols, given the homogeneous parts `p_k`, `p_{k+1}`, `p_{k+2}`.
///
/// Uses the dictionary `−i ∂_x ↦ δ`; negative powers of `p_k` that appear
/// with vanishing prefactors for small `l` are never formed.
pub fn scalar_power_closed_form(pk: &Symbol, pk1: &Symbol, pk2: &Symbol, l: u32) -> Result<Symbol> {
    if l < 1 {
        return Err(Error::Argument("power must be at least 1".into()));
    }
    for s in [pk, pk1, pk2] {
        if s.mat_dim != 1 || !s.defm.is_commutative() {
            return Err(Error::Precondition(
                "closed-form powers require commuting scalar coefficients (θ = 0, rank 1)".into(),
            ));
        }
        pk.check_compatible(s)?;
    }
    let n = pk.dim();
    let order = pk.top_order;
    let exact = |s: &Symbol, o: i32| {
        let mut c = s.component_symbol(o);
        c.depth = None;
        c
    };
    let p = exact(pk, order);
    let p1 = exact(pk1, order - 1);
    let p2 = exact(pk2, order - 2);
    let one = Symbol::identity(&pk.defm, 1);
    let pow = |k: i64| -> Symbol {
        let mut acc = one.clone();
        for _ in 0..k.max(0) {
            acc = acc.mul_pointwise(&p).expect("compatible");
        }
        acc
    };
    let mul = |a: &Symbol, b: &Symbol| a.mul_pointwise(b).expect("compatible");
    let add = |a: &Symbol, b: &Symbol| a.try_add(b).expect("compatible");
    let sc = |a: &Symbol, f: f64| a.scale(Complex64::new(f, 0.0));
    let dxi = |a: &Symbol, ax: usize| a.xi_derivative(ax).expect("axis in range");
    let dx = |a: &Symbol, ax: usize| a.x_derivative(ax).expect("axis in range");
    let lf = l as f64;
    let li = l as i64;

    // 𝔯_{lk}
    let r0 = pow(li);

    // 𝔯_{lk+1} = l p^{l−1} p_{k+1} + l(l−1)/2 p^{l−2} ∂_a p δ_a p
    let mut first_order = Symbol { top_order: order - 1, ..Symbol::zero_like(pk) };
    for a in 0..n {
        first_order = add(&first_order, &mul(&dxi(&p, a), &dx(&p, a)));
    }
    let mut r1 = sc(&mul(&pow(li - 1), &p1), lf);
    if l >= 2 {
        r1 = add(&r1, &sc(&mul(&pow(li - 2), &first_order), lf * (lf - 1.0) / 2.0));
    }

    // 𝔯_{lk+2}
    let mut r2 = sc(&mul(&pow(li - 1), &p2), lf);
    if l >= 2 {
        let c2 = lf * (lf - 1.0) / 2.0;
        r2 = add(&r2, &sc(&mul(&pow(li - 2), &mul(&p1, &p1)), c2));
        // p^{l−3}[p(∂p_{k+1} δp + ∂p δp_{k+1}) + (l−2) p_{k+1} ∂p δp]
        let mut mixed = Symbol::zero_like(pk);
        for a in 0..n {
            mixed = add(&mixed, &mul(&dxi(&p1, a), &dx(&p, a)));
            mixed = add(&mixed, &mul(&dxi(&p, a), &dx(&p1, a)));
        }
        r2 = add(&r2, &sc(&mul(&pow(li - 2), &mixed), c2));
        if l >= 3 {
            r2 = add(&r2, &sc(&mul(&pow(li - 3), &mul(&p1, &first_order)), c2 * (lf - 2.0)));
        }
        // l(l−1)/24 p^{l−4}(6p²∂∂p δδp + 3(l−2)(l−3)∂p∂p δp δp + 4(l−2)p[...])
        let c24 = lf * (lf - 1.0) / 24.0;
        let mut second = Symbol::zero_like(pk);
        let mut quartic = Symbol::zero_like(pk);
        let mut bracket = Symbol::zero_like(pk);
        for a in 0..n {
            for b in 0..n {
                let dab_xi = dxi(&dxi(&p, a), b);
                let dab_x = dx(&dx(&p, a), b);
                second = add(&second, &mul(&dab_xi, &dab_x));
                let (da_xi, db_xi, da_x, db_x) = (dxi(&p, a), dxi(&p, b), dx(&p, a), dx(&p, b));
                quartic = add(&quartic, &mul(&mul(&da_xi, &db_xi), &mul(&da_x, &db_x)));
                bracket = add(&bracket, &mul(&mul(&da_xi, &db_xi), &dab_x));
                bracket = add(&bracket, &mul(&mul(&da_xi, &dxi(&dx(&p, a), b)), &db_x));
                bracket = add(&bracket, &mul(&dab_xi, &mul(&da_x, &db_x)));
            }
        }
        r2 = add(&r2, &sc(&mul(&pow(li - 2), &second), 6.0 * c24));
        if l >= 4 {
            r2 = add(&r2, &sc(&mul(&pow(li - 4), &quartic), 3.0 * (lf - 2.0) * (lf - 3.0) * c24));
        }
        if l >= 3 {
            r2 = add(&r2, &sc(&mul(&pow(li - 3), &bracket), 4.0 * (lf - 2.0) * c24));
        }
    }

    let mut out = Symbol {
        defm: pk.defm.clone(),
        mat_dim: 1,
        top_order: order * l as i32,
        depth: Some(3),
        terms: TermMap::new(),
    };
    for part in [r0, r1, r2] {
        for (k, v) in part.terms {
            out.add_term(k, v);
        }
    }
    Ok(out)
}

impl Symbol {
    fn zero_like(s: &Symbol) -> Symbol {
        Symbol { defm: s.defm.clone(), mat_dim: s.mat_dim, top_order: 0, depth: None, terms: TermMap::new() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Mode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(defm: &Arc<Deformation>, a: &TorusElement) -> CliffordValue {
        let _ = defm;
        CliffordValue::scalar(a, 1)
    }

    fn xi_symbol(defm: &Arc<Deformation>, axis: usize) -> Symbol {
        Symbol::new(defm, 1, 1, None, [(TermKey::xi(&[axis]), CliffordValue::identity(defm, 1))]).unwrap()
    }

    fn trig(defm: &Arc<Deformation>, rng: &mut ChaCha8Rng, amp: f64) -> TorusElement {
        let mut terms = vec![(Mode::ZERO, Complex64::new(1.0, 0.0))];
        for _ in 0..2 {
            let k = [rng.gen_range(-2..=2), rng.gen_range(-2..=2)];
            let c = Complex64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
            terms.push((Mode::left(&k), c));
            terms.push((Mode::left(&[-k[0], -k[1]]), c.conj()));
        }
        TorusElement::from_terms(defm, terms).unwrap()
    }

    /// Random second-order scalar operator `Σ a_ab ξ_aξ_b + Σ b_a ξ_a + c`.
    fn random_operator(defm: &Arc<Deformation>, rng: &mut ChaCha8Rng) -> Symbol {
        let mut terms = Vec::new();
        let lead = trig(defm, rng, 0.05);
        for a in 0..2 {
            terms.push((TermKey::xi(&[a, a]), scalar(defm, &lead)));
        }
        for a in 0..2 {
            let t = &trig(defm, rng, 0.2) - &TorusElement::one(defm);
            terms.push((TermKey::xi(&[a]), scalar(defm, &t)));
        }
        terms.push((TermKey::ONE, scalar(defm, &trig(defm, rng, 0.2))));
        Symbol::new(defm, 1, 2, None, terms).unwrap()
    }

    #[test]
    fn constant_coefficients_compose_without_corrections() {
        let d = Deformation::two_torus(0.3);
        let s = compose(&xi_symbol(&d, 0), &xi_symbol(&d, 1), 3).unwrap();
        let expected = Symbol::new(&d, 1, 2, None, [(TermKey::xi(&[0, 1]), CliffordValue::identity(&d, 1))]).unwrap();
        assert_eq!(s.distance(&expected).unwrap(), 0.0);
        assert!(s.is_exact());
    }

    #[test]
    fn derivation_past_multiplication() {
        // δ_1∘a = a·δ_1 + δ_1(a)
        let d = Deformation::two_torus(0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = trig(&d, &mut rng, 0.5);
        let ma = Symbol::scalar_multiplication(&a, 1);
        let left = compose(&xi_symbol(&d, 0), &ma, 3).unwrap();
        let right = compose(&ma, &xi_symbol(&d, 0), 3).unwrap();
        let diff = left.try_sub(&right).unwrap();
        let expected = Symbol::scalar_multiplication(&a.derive(0).unwrap(), 1);
        assert!(diff.distance(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn classical_i_factor_dictionary() {
        // With ∂ = iδ: σ(∂_1∘f) = iξ_1 f + ∂_1 f in the classical (−i)^{|β|} rule.
        let d = Deformation::commutative(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = trig(&d, &mut rng, 0.3);
        let i = Complex64::new(0.0, 1.0);
        let partial = xi_symbol(&d, 0).scale(i);
        let got = compose(&partial, &Symbol::scalar_multiplication(&f, 1), 3).unwrap();
        let d1f = f.derive(0).unwrap().scale(i); // ∂_1 f
        let expected = Symbol::new(
            &d,
            1,
            1,
            None,
            [(TermKey::xi(&[0]), scalar(&d, &f.scale(i))), (TermKey::ONE, scalar(&d, &d1f))],
        )
        .unwrap();
        assert!(got.distance(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn flat_parametrix_is_exact_inverse() {
        let d = Deformation::two_torus(0.2);
        let lap = Symbol::flat_laplacian(&d, 1);
        let b = parametrix(&lap, 3).unwrap();
        let expected = Symbol::new(&d, 1, -2, Some(3), [(TermKey::inverse_norm(1), CliffordValue::identity(&d, 1))]).unwrap();
        assert!(b.distance(&expected).unwrap() < 1e-15);
        let id = compose(&lap, &b, 3).unwrap();
        assert!(id.distance(&Symbol::identity(&d, 1).truncate(3)).unwrap() < 1e-15);
        let sq = power_symbols(&b, 2, 3).unwrap();
        let expected = Symbol::new(&d, 1, -4, Some(3), [(TermKey::inverse_norm(2), CliffordValue::identity(&d, 1))]).unwrap();
        assert!(sq.distance(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn parametrix_inverts_variable_operator_on_both_sides() {
        let d = Deformation::two_torus(1.0 / 2f64.sqrt());
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = random_operator(&d, &mut rng);
        let b = parametrix(&p, 3).unwrap();
        let right = compose(&p, &b, 3).unwrap();
        let left = compose(&b, &p, 3).unwrap();
        let id = Symbol::identity(&d, 1).truncate(3);
        assert!(right.distance(&id).unwrap() < 1e-12, "{}", right.distance(&id).unwrap());
        assert!(left.distance(&id).unwrap() < 1e-12, "{}", left.distance(&id).unwrap());
    }

    #[test]
    fn b3_vanishes_without_first_order_part() {
        let d = Deformation::two_torus(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let zero_order = trig(&d, &mut rng, 0.3);
        let p = Symbol::flat_laplacian(&d, 1)
            .scale(Complex64::new(2.5, 0.0))
            .try_add(&Symbol::scalar_multiplication(&zero_order, 1))
            .unwrap();
        let b = parametrix(&p, 3).unwrap();
        assert!(b.component(-3).is_empty());
        assert!(!b.component(-4).is_empty());
    }

    #[test]
    fn parametrix_rejects_non_scalar_principal_part() {
        let d = Deformation::two_torus(0.5);
        let id = CliffordValue::identity(&d, 1);
        let p = Symbol::new(&d, 1, 2, None, [(TermKey::xi(&[0, 0]), id.clone()), (TermKey::xi(&[1, 1]), id.scale(Complex64::new(2.0, 0.0)))]).unwrap();
        assert!(matches!(parametrix(&p, 3), Err(Error::Precondition(_))));
        let s = &TorusElement::monomial(&d, &[1, 0]) + &TorusElement::monomial(&d, &[-1, 0]);
        let bad = Symbol::flat_laplacian(&d, 1).left_mul(&CliffordValue::scalar(&s, 1));
        assert!(matches!(parametrix(&bad, 3), Err(Error::Inversion { .. })));
    }

    #[test]
    fn composition_is_associative() {
        let d = Deformation::two_torus(0.37);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let p = random_operator(&d, &mut rng);
        let q = parametrix(&random_operator(&d, &mut rng), 3).unwrap();
        let r = random_operator(&d, &mut rng);
        let lhs = compose(&compose(&p, &q, 3).unwrap(), &r, 3).unwrap();
        let rhs = compose(&p, &compose(&q, &r, 3).unwrap(), 3).unwrap();
        assert_eq!(lhs.top_order(), 2);
        assert!(lhs.distance(&rhs).unwrap() < 1e-12);
        for t in lhs.terms() {
            assert_eq!(t.key.degree() as i32 - 2 * t.key.j as i32, t.order());
            assert!(lhs.tracks(t.order()));
        }
    }

    #[test]
    fn powers_independent_of_association() {
        let d = Deformation::two_torus(0.81);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let b = parametrix(&random_operator(&d, &mut rng), 3).unwrap();
        let p3 = power_symbols(&b, 3, 3).unwrap();
        let other = compose(&compose(&b, &b, 3).unwrap(), &b, 3).unwrap();
        assert_eq!(p3.top_order(), -6);
        assert!(p3.distance(&other).unwrap() < 1e-12);
        assert!(matches!(power_symbols(&b, 0, 3), Err(Error::Argument(_))));
    }

    #[test]
    fn closed_form_identity_and_constant_cases() {
        let d = Deformation::commutative(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = parametrix(&random_operator(&d, &mut rng), 3).unwrap();
        let (p0, p1, p2) = (b.component_symbol(-2), b.component_symbol(-3), b.component_symbol(-4));
        let one = scalar_power_closed_form(&p0, &p1, &p2, 1).unwrap();
        assert!(one.distance(&b).unwrap() < 1e-15);

        // constant p: 𝔯_{lk+1} = l p^{l−1} p_{k+1}
        let c = CliffordValue::identity(&d, 1);
        let pk = Symbol::new(&d, 1, -2, Some(1), [(TermKey::inverse_norm(1), c.scale(Complex64::new(2.0, 0.0)))]).unwrap();
        let pk1 = Symbol::new(&d, 1, -3, Some(1), [(TermKey::xi(&[0]).with_inverse_norm(2), c.clone())]).unwrap();
        let pk2 = Symbol::new(&d, 1, -4, Some(1), []).unwrap();
        let r = scalar_power_closed_form(&pk, &pk1, &pk2, 3).unwrap();
        let expected = Symbol::new(&d, 1, -7, Some(1), [(TermKey::xi(&[0]).with_inverse_norm(4), c.scale(Complex64::new(12.0, 0.0)))]).unwrap();
        assert!(r.component_symbol(-7).distance(&expected).unwrap() < 1e-14);

        let nc = Deformation::two_torus(0.4);
        let q = Symbol::flat_laplacian(&nc, 1);
        assert!(matches!(scalar_power_closed_form(&q, &q, &q, 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn closed_form_matches_iterated_composition() {
        let d = Deformation::commutative(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for l in 2..=4 {
            let b = parametrix(&random_operator(&d, &mut rng), 3).unwrap();
            let (p0, p1, p2) = (b.component_symbol(-2), b.component_symbol(-3), b.component_symbol(-4));
            let closed = scalar_power_closed_form(&p0, &p1, &p2, l).unwrap();
            let iterated = power_symbols(&b, l, 3).unwrap();
            let dist = closed.distance(&iterated).unwrap();
            assert!(dist < 1e-12, "l = {l}: {dist:e}");
        }
    }

    #[test]
    fn dump_round_trip() {
        let d = Deformation::two_torus(0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = parametrix(&random_operator(&d, &mut rng), 2).unwrap();
        let text = serde_json::to_string(&b.to_dump()).unwrap();
        let dump: SymbolDump = serde_json::from_str(&text).unwrap();
        let back = Symbol::from_dump(&dump, &d).unwrap();
        assert_eq!(back.distance(&b).unwrap(), 0.0);
        assert_eq!(back.to_dump(), b.to_dump());
    }
}
