//! Classical (θ = 0) Levi-Civita geometry of metrics on `T^n` with Fourier
//! polynomial data.
//!
//! Linear operations and products stay in sparse Fourier form. Nonlinear
//! pointwise maps (inverse metric, `√det g`, negative powers) are evaluated
//! on a grid over the sublattice spanned by the input modes and transformed
//! back, with the resolution doubled until the spectral tail is negligible.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::algebra::{Deformation, Mode, Side, TorusElement, MAX_DIM};
use crate::error::{Error, Result};
use crate::residue::sphere_volume;

/// Target for the spectral tail of grid-evaluated fields.
pub const GRID_TAIL_TOL: f64 = 1e-13;
/// Largest outer band accepted once the grid has reached its size limit.
pub const GRID_TAIL_CAP_TOL: f64 = 1e-9;

const ROUNDOFF_FLOOR: f64 = 1e-15;

/// Metric on `T^n`.
#[derive(Clone, Debug)]
pub enum MetricData {
    Flat(Arc<Deformation>),
    /// `g = factor^exponent · δ`.
    ConformallyFlat { factor: TorusElement, exponent: i32 },
    /// Components `g_{ab}` (θ = 0 only).
    General(Vec<Vec<TorusElement>>),
}

impl MetricData {
    pub fn deformation(&self) -> &Arc<Deformation> {
        match self {
            MetricData::Flat(d) => d,
            MetricData::ConformallyFlat { factor, .. } => factor.deformation(),
            MetricData::General(g) => g[0][0].deformation(),
        }
    }

    pub fn dim(&self) -> usize {
        self.deformation().dim()
    }
}

/// Fully covariant or mixed tensor with components stored row-major.
#[derive(Clone, Debug)]
pub struct TensorField {
    pub n: usize,
    pub rank: usize,
    pub components: Vec<TorusElement>,
}

impl TensorField {
    fn from_fn(n: usize, rank: usize, mut f: impl FnMut(&[usize]) -> TorusElement) -> Self {
        let mut components = Vec::with_capacity(n.pow(rank as u32));
        let mut idx = vec![0usize; rank];
        for flat in 0..n.pow(rank as u32) {
            let mut r = flat;
            for slot in (0..rank).rev() {
                idx[slot] = r % n;
                r /= n;
            }
            components.push(f(&idx));
        }
        Self { n, rank, components }
    }

    pub fn get(&self, idx: &[usize]) -> &TorusElement {
        let flat = idx.iter().fold(0, |acc, i| acc * self.n + i);
        &self.components[flat]
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }
}

/// Integer basis of the lattice generated by a set of modes, in row echelon form.
#[derive(Clone, Debug)]
struct Sublattice {
    basis: Vec<[i64; MAX_DIM]>,
    pivots: Vec<usize>,
}

impl Sublattice {
    fn spanned_by(vectors: impl IntoIterator<Item = [i64; MAX_DIM]>) -> Self {
        let mut rows: Vec<[i64; MAX_DIM]> = vectors.into_iter().filter(|v| v.iter().any(|x| *x != 0)).collect();
        let mut basis = Vec::new();
        let mut pivots = Vec::new();
        for col in 0..MAX_DIM {
            // Euclid on column `col` across the remaining rows.
            loop {
                let mut nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
                if nz.len() <= 1 {
                    break;
                }
                nz.sort_by_key(|&i| rows[i][col].abs());
                let p = nz[0];
                let pivot = rows[p];
                for &i in &nz[1..] {
                    let q = rows[i][col] / pivot[col];
                    for c in 0..MAX_DIM {
                        rows[i][c] -= q * pivot[c];
                    }
                }
                rows.retain(|v| v.iter().any(|x| *x != 0));
            }
            if let Some(i) = rows.iter().position(|v| v[col] != 0) {
                let mut v = rows.remove(i);
                if v[col] < 0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                basis.push(v);
                pivots.push(col);
            }
        }
        Self { basis, pivots }
    }

    fn rank(&self) -> usize {
        self.basis.len()
    }

    fn coordinates(&self, k: &[i64; MAX_DIM]) -> Option<Vec<i64>> {
        let mut rest = *k;
        let mut m = Vec::with_capacity(self.rank());
        for (b, &p) in self.basis.iter().zip(&self.pivots) {
            if rest[p] % b[p] != 0 {
                return None;
            }
            let q = rest[p] / b[p];
            for c in 0..MAX_DIM {
                rest[c] -= q * b[c];
            }
            m.push(q);
        }
        rest.iter().all(|x| *x == 0).then_some(m)
    }

    fn mode(&self, m: &[i64]) -> [i32; MAX_DIM] {
        let mut k = [0i64; MAX_DIM];
        for (b, &q) in self.basis.iter().zip(m) {
            for c in 0..MAX_DIM {
                k[c] += q * b[c];
            }
        }
        k.map(|x| x as i32)
    }
}

fn left_modes(e: &TorusElement) -> Result<TorusElement> {
    if !e.deformation().is_commutative() {
        return Err(Error::Precondition("classical geometry requires θ = 0".into()));
    }
    e.to_side(Side::Left)
}

fn fft_axes(data: &mut [Complex64], size: usize, rank: usize, inverse: bool, planner: &mut FftPlanner<f64>) {
    let fft = if inverse { planner.plan_fft_inverse(size) } else { planner.plan_fft_forward(size) };
    let mut line = vec![Complex64::default(); size];
    for axis in 0..rank {
        let stride = size.pow(axis as u32);
        let total = data.len();
        for start in 0..total {
            if (start / stride) % size != 0 {
                continue;
            }
            for (i, v) in line.iter_mut().enumerate() {
                *v = data[start + i * stride];
            }
            fft.process(&mut line);
            for (i, v) in line.iter().enumerate() {
                data[start + i * stride] = *v;
            }
        }
    }
}

/// Apply a pointwise map to θ = 0 fields. Returns the outputs in Fourier form
/// together with the largest outer-band coefficient seen at the final resolution.
pub fn grid_map(
    inputs: &[&TorusElement],
    outputs: usize,
    f: impl Fn(&[Complex64], &mut [Complex64]) + Sync,
) -> Result<(Vec<TorusElement>, f64)> {
    let defm = inputs
        .first()
        .ok_or_else(|| Error::Argument("grid_map needs at least one input".into()))?
        .deformation()
        .clone();
    let fields: Vec<TorusElement> = inputs.iter().map(|e| left_modes(e)).collect::<Result<_>>()?;
    let lattice = Sublattice::spanned_by(
        fields.iter().flat_map(|e| e.terms().iter().map(|(m, _)| m.left.map(|x| x as i64))),
    );
    let rank = lattice.rank();
    let (start, cap) = match rank {
        0 => (1, 1),
        1 => (64, 1 << 14),
        2 => (32, 512),
        3 => (16, 64),
        _ => (8, 32),
    };
    let mut size = start;
    loop {
        let (out, tail) = grid_map_at(&fields, &lattice, size, outputs, &f, &defm)?;
        if tail <= GRID_TAIL_TOL {
            return Ok((out, tail));
        }
        if size >= cap {
            if tail.is_finite() && tail <= GRID_TAIL_CAP_TOL {
                return Ok((out, tail));
            }
            return Err(Error::Tolerance(format!(
                "pointwise map did not resolve on a {size}^{rank} grid (outer band {tail:.3e})"
            )));
        }
        size *= 2;
    }
}

fn grid_map_at(
    fields: &[TorusElement],
    lattice: &Sublattice,
    size: usize,
    outputs: usize,
    f: &(impl Fn(&[Complex64], &mut [Complex64]) + Sync),
    defm: &Arc<Deformation>,
) -> Result<(Vec<TorusElement>, f64)> {
    let rank = lattice.rank();
    let points = size.pow(rank as u32);
    let half = (size / 2) as i64;
    let mut planner = FftPlanner::new();
    let mut samples: Vec<Vec<Complex64>> = Vec::with_capacity(fields.len());
    for e in fields {
        let mut grid = vec![Complex64::default(); points];
        if e.terms().is_empty() {
            samples.push(grid);
            continue;
        }
        for (m, c) in e.terms() {
            let coords = lattice
                .coordinates(&m.left.map(|x| x as i64))
                .expect("mode lies in its own lattice");
            if coords.iter().any(|q| q.abs() >= half) {
                return Ok((vec![TorusElement::zero(defm); outputs], f64::INFINITY));
            }
            let idx = coords
                .iter()
                .rev()
                .fold(0usize, |acc, q| acc * size + q.rem_euclid(size as i64) as usize);
            grid[idx] += c;
        }
        fft_axes(&mut grid, size, rank, true, &mut planner);
        samples.push(grid);
    }

    let mut out_grids = vec![vec![Complex64::default(); points]; outputs];
    let values: Vec<Vec<Complex64>> = (0..points)
        .into_par_iter()
        .map(|p| {
            let x: Vec<Complex64> = samples.iter().map(|s| s[p]).collect();
            let mut y = vec![Complex64::default(); outputs];
            f(&x, &mut y);
            y
        })
        .collect();
    for (p, y) in values.into_iter().enumerate() {
        for (o, v) in y.into_iter().enumerate() {
            out_grids[o][p] = v;
        }
    }

    let coords: Vec<Vec<i64>> = (0..points)
        .map(|idx| {
            let mut r = idx;
            (0..rank)
                .map(|_| {
                    let q = (r % size) as i64;
                    r /= size;
                    if q >= half { q - size as i64 } else { q }
                })
                .collect()
        })
        .collect();
    let outer_band: Vec<bool> = coords.iter().map(|m| m.iter().any(|q| q.abs() > half / 2)).collect();
    let decoded: Vec<Result<(TorusElement, f64)>> = out_grids
        .into_par_iter()
        .map(|mut grid| {
            if grid.iter().all(|c| *c == Complex64::default()) {
                return Ok((TorusElement::zero(defm), 0.0));
            }
            fft_axes(&mut grid, size, rank, false, &mut FftPlanner::new());
            let scale = 1.0 / points as f64;
            let floor = grid.iter().map(|c| c.norm()).fold(0.0, f64::max) * scale * ROUNDOFF_FLOOR;
            let mut terms = Vec::new();
            let mut outer: f64 = 0.0;
            for (idx, c) in grid.iter().enumerate() {
                let c = c * scale;
                if outer_band[idx] {
                    outer = outer.max(c.norm());
                }
                if c.norm() > floor.max(1e-18) {
                    terms.push((Mode::left(&lattice.mode(&coords[idx])), c));
                }
            }
            Ok((TorusElement::from_terms(defm, terms)?, outer))
        })
        .collect();
    let mut tail: f64 = 0.0;
    let mut result = Vec::with_capacity(outputs);
    for d in decoded {
        let (e, outer) = d?;
        tail = tail.max(outer);
        result.push(e);
    }
    Ok((result, tail))
}

/// Metric, inverse metric and volume density as Fourier fields.
#[derive(Clone, Debug)]
pub struct MetricFields {
    pub n: usize,
    pub g: TensorField,
    pub g_inv: TensorField,
    pub sqrt_det: TorusElement,
    pub tail: f64,
}

fn real_inverse(n: usize, a: &[f64]) -> Option<(Vec<f64>, f64)> {
    let mut m = a.to_vec();
    let mut inv: Vec<f64> = (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }).collect();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[piv * n + col] == 0.0 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(piv * n + c, col * n + c);
                inv.swap(piv * n + c, col * n + c);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det *= p;
        for c in 0..n {
            m[col * n + c] /= p;
            inv[col * n + c] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                for c in 0..n {
                    m[r * n + c] -= f * m[col * n + c];
                    inv[r * n + c] -= f * inv[col * n + c];
                }
            }
        }
    }
    Some((inv, det))
}

/// Smallest leading principal minor (positive iff positive definite).
fn min_leading_minor(n: usize, a: &[f64]) -> f64 {
    (1..=n)
        .map(|k| {
            let sub: Vec<f64> = (0..k * k).map(|i| a[(i / k) * n + i % k]).collect();
            real_inverse(k, &sub).map_or(0.0, |(_, d)| d)
        })
        .fold(f64::INFINITY, f64::min)
}

impl MetricFields {
    pub fn new(m: &MetricData) -> Result<Self> {
        let g_rows = metric_components(m)?;
        let n = m.dim();
        let flat: Vec<&TorusElement> = g_rows.iter().flatten().collect();
        let positive = AtomicBool::new(true);
        let (mut out, tail) = grid_map(&flat, n * n + 1, |x, y| {
            let a: Vec<f64> = x.iter().map(|c| c.re).collect();
            if min_leading_minor(n, &a) <= 0.0 {
                positive.store(false, Ordering::Relaxed);
                return;
            }
            let (inv, det) = real_inverse(n, &a).expect("positive definite");
            for (o, v) in inv.iter().enumerate() {
                y[o] = Complex64::new(*v, 0.0);
            }
            y[n * n] = Complex64::new(det.sqrt(), 0.0);
        })?;
        if !positive.load(Ordering::Relaxed) {
            return Err(Error::Config("metric is not positive definite on the sample grid".into()));
        }
        let sqrt_det = out.pop().expect("det output");
        let g = TensorField::from_fn(n, 2, |i| g_rows[i[0]][i[1]].clone());
        let g_inv = TensorField { n, rank: 2, components: out };
        Ok(Self { n, g, g_inv, sqrt_det, tail })
    }

    /// `τ(√g · f)`, i.e. `∫ f vol_g` normalized by `(2π)^n`.
    pub fn integrate(&self, f: &TorusElement) -> Result<Complex64> {
        Ok(self.sqrt_det.try_mul(&left_modes(f)?)?.trace())
    }

    /// `g(V, W) = g_{ab} V^a W^b`.
    pub fn inner_vectors(&self, v: &[TorusElement], w: &[TorusElement]) -> Result<TorusElement> {
        contract(&self.g, v, w)
    }

    /// `g(v, w) = g^{ab} v_a w_b` on one-forms.
    pub fn inner_forms(&self, v: &[TorusElement], w: &[TorusElement]) -> Result<TorusElement> {
        contract(&self.g_inv, v, w)
    }
}

fn contract(t: &TensorField, v: &[TorusElement], w: &[TorusElement]) -> Result<TorusElement> {
    let n = t.n;
    if v.len() != n || w.len() != n {
        return Err(Error::Config(format!("expected {n} components")));
    }
    let mut acc = TorusElement::zero(t.components[0].deformation());
    for a in 0..n {
        for b in 0..n {
            let c = t.get(&[a, b]);
            if c.is_zero() {
                continue;
            }
            acc = acc.try_add(&c.try_mul(&left_modes(&v[a])?)?.try_mul(&left_modes(&w[b])?)?)?;
        }
    }
    Ok(acc)
}

/// Classical `∂_a = i δ_a`.
fn partial(e: &TorusElement, a: usize) -> TorusElement {
    e.derive_unchecked(a).scale(Complex64::new(0.0, 1.0))
}

/// Levi-Civita curvature data.
#[derive(Clone, Debug)]
pub struct Curvature {
    pub metric: MetricFields,
    /// `Γ^c_{ab}` indexed `[c, a, b]`.
    pub christoffel: TensorField,
    /// `R^a_{bcd}` indexed `[a, b, c, d]`.
    pub riemann: TensorField,
    pub ricci: TensorField,
    pub scalar: TorusElement,
    pub einstein: TensorField,
}

/// Metric components `g_{ab}` as Fourier fields.
fn metric_components(m: &MetricData) -> Result<Vec<Vec<TorusElement>>> {
    let defm = m.deformation().clone();
    if !defm.is_commutative() {
        return Err(Error::Precondition("classical geometry requires θ = 0".into()));
    }
    let n = defm.dim();
    match m {
        MetricData::Flat(_) => Ok((0..n)
            .map(|a| (0..n).map(|b| TorusElement::real(&defm, if a == b { 1.0 } else { 0.0 })).collect())
            .collect()),
        MetricData::ConformallyFlat { factor, exponent } => {
            let e = *exponent;
            let positive = AtomicBool::new(true);
            let (phi, _) = grid_map(&[factor], 1, |x, y| {
                if x[0].re <= 0.0 {
                    positive.store(false, Ordering::Relaxed);
                }
                y[0] = Complex64::new(x[0].re.powi(e), 0.0)
            })?;
            if !positive.load(Ordering::Relaxed) {
                return Err(Error::Config("conformal factor is not positive on the sample grid".into()));
            }
            let phi = phi.into_iter().next().expect("one output");
            Ok((0..n)
                .map(|a| (0..n).map(|b| if a == b { phi.clone() } else { TorusElement::zero(&defm) }).collect())
                .collect())
        }
        MetricData::General(g) => {
            if g.len() != n || g.iter().any(|r| r.len() != n) {
                return Err(Error::Config(format!("metric must be {n}×{n}")));
            }
            for a in 0..n {
                for b in 0..n {
                    g[a][b].check_compatible(&g[b][a])?;
                    if (&g[a][b] - &g[b][a]).max_abs() > 1e-14 {
                        return Err(Error::Config("metric is not symmetric".into()));
                    }
                }
            }
            Ok(g.clone())
        }
    }
}

/// `Γ`, Riemann, Ricci, scalar curvature and Einstein tensor of a θ = 0 metric.
///
/// Derivatives of `g` are taken exactly in Fourier space; everything else is
/// evaluated pointwise on the grid in one pass.
pub fn curvature_tensors(m: &MetricData) -> Result<Curvature> {
    curvature_pass(m, true)
}

/// Metric fields, scalar curvature and Einstein tensor only; Γ, Riemann and
/// Ricci are left empty.
pub fn einstein_tensor(m: &MetricData) -> Result<Curvature> {
    curvature_pass(m, false)
}

fn curvature_pass(m: &MetricData, full: bool) -> Result<Curvature> {
    let g_rows = metric_components(m)?;
    let n = m.dim();
    let n2 = n * n;
    let mut inputs: Vec<TorusElement> = g_rows.iter().flatten().cloned().collect();
    for c in 0..n {
        for e in g_rows.iter().flatten() {
            inputs.push(partial(e, c));
        }
    }
    for c in 0..n {
        for d in 0..n {
            for e in g_rows.iter().flatten() {
                inputs.push(partial(&partial(e, c), d));
            }
        }
    }
    let refs: Vec<&TorusElement> = inputs.iter().collect();

    // Output layout: g^{-1} (n²), √g (1), Γ (n³), Riemann (n⁴), Ricci (n²), R (1), G (n²).
    let off_sqrt = n2;
    let off_gamma = off_sqrt + 1;
    let off_riem = off_gamma + if full { n * n2 } else { 0 };
    let off_ric = off_riem + if full { n2 * n2 } else { 0 };
    let off_r = off_ric + if full { n2 } else { 0 };
    let off_g = off_r + 1;
    let outputs = off_g + n2;

    let positive = AtomicBool::new(true);
    let (out, tail) = grid_map(&refs, outputs, |x, y| {
        let g: Vec<f64> = x[..n2].iter().map(|c| c.re).collect();
        let dg = |c: usize, a: usize, b: usize| x[n2 + c * n2 + a * n + b].re;
        let ddg = |c: usize, d: usize, a: usize, b: usize| x[n2 + n * n2 + (c * n + d) * n2 + a * n + b].re;
        if min_leading_minor(n, &g) <= 0.0 {
            positive.store(false, Ordering::Relaxed);
            return;
        }
        let (ginv, det) = real_inverse(n, &g).expect("positive definite");
        let gi = |a: usize, b: usize| ginv[a * n + b];
        // ∂_c g^{ab} = −g^{ae} ∂_c g_{ef} g^{fb}
        let mut dginv = vec![0.0; n * n2];
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut s = 0.0;
                    for e in 0..n {
                        for f in 0..n {
                            s -= gi(a, e) * dg(c, e, f) * gi(f, b);
                        }
                    }
                    dginv[c * n2 + a * n + b] = s;
                }
            }
        }
        let low = |f: usize, a: usize, b: usize| 0.5 * (dg(a, f, b) + dg(b, f, a) - dg(f, a, b));
        let dlow =
            |c: usize, f: usize, a: usize, b: usize| 0.5 * (ddg(c, a, f, b) + ddg(c, b, f, a) - ddg(c, f, a, b));
        let mut gamma = vec![0.0; n * n2];
        let mut dgamma = vec![0.0; n * n * n2];
        for e in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut s = 0.0;
                    for f in 0..n {
                        s += gi(e, f) * low(f, a, b);
                    }
                    gamma[e * n2 + a * n + b] = s;
                    for c in 0..n {
                        let mut t = 0.0;
                        for f in 0..n {
                            t += dginv[c * n2 + e * n + f] * low(f, a, b) + gi(e, f) * dlow(c, f, a, b);
                        }
                        dgamma[c * n * n2 + e * n2 + a * n + b] = t;
                    }
                }
            }
        }
        let gm = |a: usize, b: usize, c: usize| gamma[a * n2 + b * n + c];
        let dgm = |c: usize, a: usize, d: usize, b: usize| dgamma[c * n * n2 + a * n2 + d * n + b];
        let mut riem = vec![0.0; n2 * n2];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut r = dgm(c, a, d, b) - dgm(d, a, c, b);
                        for e in 0..n {
                            r += gm(a, c, e) * gm(e, d, b) - gm(a, d, e) * gm(e, c, b);
                        }
                        riem[((a * n + b) * n + c) * n + d] = r;
                    }
                }
            }
        }
        let mut ric = vec![0.0; n2];
        for b in 0..n {
            for d in 0..n {
                ric[b * n + d] = (0..n).map(|a| riem[((a * n + b) * n + a) * n + d]).sum();
            }
        }
        let scalar: f64 = (0..n2).map(|i| ginv[i] * ric[i]).sum();
        for i in 0..n2 {
            y[i] = Complex64::new(ginv[i], 0.0);
            if full {
                y[off_ric + i] = Complex64::new(ric[i], 0.0);
            }
            y[off_g + i] = Complex64::new(ric[i] - 0.5 * scalar * g[i], 0.0);
        }
        y[off_sqrt] = Complex64::new(det.sqrt(), 0.0);
        if full {
            for (i, v) in gamma.iter().enumerate() {
                y[off_gamma + i] = Complex64::new(*v, 0.0);
            }
            for (i, v) in riem.iter().enumerate() {
                y[off_riem + i] = Complex64::new(*v, 0.0);
            }
        }
        y[off_r] = Complex64::new(scalar, 0.0);
    })?;
    if !positive.load(Ordering::Relaxed) {
        return Err(Error::Config("metric is not positive definite on the sample grid".into()));
    }
    let field = |rank: usize, off: usize| {
        let len = if full || off == 0 || off == off_g { n.pow(rank as u32) } else { 0 };
        TensorField { n, rank, components: out[off..off + len].to_vec() }
    };
    let metric = MetricFields {
        n,
        g: TensorField::from_fn(n, 2, |i| g_rows[i[0]][i[1]].clone()),
        g_inv: field(2, 0),
        sqrt_det: out[off_sqrt].clone(),
        tail,
    };
    Ok(Curvature {
        metric,
        christoffel: field(3, off_gamma),
        riemann: field(4, off_riem),
        ricci: field(2, off_ric),
        scalar: out[off_r].clone(),
        einstein: field(2, off_g),
    })
}

impl Curvature {
    /// `G(V, W) = G_{ab} V^a W^b`.
    pub fn einstein_vectors(&self, v: &[TorusElement], w: &[TorusElement]) -> Result<TorusElement> {
        contract(&self.einstein, v, w)
    }

    /// `G(v, w) = G^{ab} v_a w_b` with indices raised by `g^{-1}`.
    pub fn einstein_forms(&self, v: &[TorusElement], w: &[TorusElement]) -> Result<TorusElement> {
        let n = self.metric.n;
        let ginv = &self.metric.g_inv;
        let raise = |f: &[TorusElement]| -> Result<Vec<TorusElement>> {
            (0..n)
                .map(|a| {
                    let mut acc = TorusElement::zero(ginv.components[0].deformation());
                    for b in 0..n {
                        acc = acc.try_add(&ginv.get(&[a, b]).try_mul(&left_modes(&f[b])?)?)?;
                    }
                    Ok(acc)
                })
                .collect()
        };
        if v.len() != n || w.len() != n {
            return Err(Error::Config(format!("expected {n} components")));
        }
        contract(&self.einstein, &raise(v)?, &raise(w)?)
    }

    /// Largest grid value of the contracted Bianchi defect `∇^a G_{ab}`.
    pub fn bianchi_defect(&self) -> Result<f64> {
        let n = self.metric.n;
        let n2 = n * n;
        let mut inputs: Vec<&TorusElement> = self.metric.g_inv.components.iter().collect();
        inputs.extend(self.christoffel.components.iter());
        inputs.extend(self.einstein.components.iter());
        let derived: Vec<TorusElement> =
            (0..n).flat_map(|c| self.einstein.components.iter().map(move |e| partial(e, c))).collect();
        inputs.extend(derived.iter());
        let worst = std::sync::Mutex::new(0.0f64);
        grid_map(&inputs, 1, |x, _| {
            let gi = |a: usize, b: usize| x[a * n + b].re;
            let gm = |c: usize, a: usize, b: usize| x[n2 + c * n2 + a * n + b].re;
            let eg = |a: usize, b: usize| x[n2 + n * n2 + a * n + b].re;
            let deg = |c: usize, a: usize, b: usize| x[2 * n2 + n * n2 + c * n2 + a * n + b].re;
            let mut local: f64 = 0.0;
            for b in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    for c in 0..n {
                        let mut cov = deg(c, a, b);
                        for d in 0..n {
                            cov -= gm(d, c, a) * eg(d, b) + gm(d, c, b) * eg(a, d);
                        }
                        s += gi(a, c) * cov;
                    }
                }
                local = local.max(s.abs());
            }
            let mut w = worst.lock().expect("unpoisoned");
            *w = w.max(local);
        })?;
        Ok(worst.into_inner().expect("unpoisoned"))
    }
}

/// Which classical functional to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    /// `−(v_{n−1}/n) ∫ g(V, W) vol_g`
    Metric,
    /// `(v_{n−1}/6) ∫ G(V, W) vol_g`
    Einstein,
    /// `((n−2)/12) v_{n−1} ∫ f R vol_g`
    ScalarEinsteinHilbert,
}

/// Classical value of a functional for geometric vector fields `V`, `W`
/// (or the weight `f = V[0]` for the scalar kind), with `∫` normalized so
/// the flat torus has unit volume.
pub fn functional_oracle(m: &MetricData, v: &[TorusElement], w: &[TorusElement], kind: OracleKind) -> Result<Complex64> {
    let n = m.dim();
    let vol = sphere_volume(n);
    match kind {
        OracleKind::Metric => {
            let fields = MetricFields::new(m)?;
            Ok(fields.integrate(&fields.inner_vectors(v, w)?)? * (-vol / n as f64))
        }
        OracleKind::Einstein => {
            let curv = einstein_tensor(m)?;
            Ok(curv.metric.integrate(&curv.einstein_vectors(v, w)?)? * (vol / 6.0))
        }
        OracleKind::ScalarEinsteinHilbert => {
            let curv = einstein_tensor(m)?;
            let f = v.first().ok_or_else(|| Error::Argument("weight function missing".into()))?;
            let density = curv.scalar.try_mul(&left_modes(f)?)?;
            Ok(curv.metric.integrate(&density)? * ((n as f64 - 2.0) / 12.0 * vol))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(defm: &Arc<Deformation>, k: &[i32], amp: f64) -> TorusElement {
        let minus: Vec<i32> = k.iter().map(|x| -x).collect();
        (&TorusElement::monomial(defm, k) + &TorusElement::monomial(defm, &minus)).scale_real(amp / 2.0)
    }

    #[test]
    fn sublattice_coordinates() {
        let l = Sublattice::spanned_by([[1, 1, 0, 0], [1, -1, 0, 0], [0, 0, 0, 0]]);
        assert_eq!(l.rank(), 2);
        assert!(l.coordinates(&[2, 0, 0, 0]).is_some());
        assert!(l.coordinates(&[1, 0, 0, 0]).is_none());
        let m = l.coordinates(&[3, -1, 0, 0]).unwrap();
        assert_eq!(l.mode(&m), [3, -1, 0, 0]);
    }

    #[test]
    fn grid_inverse_of_cosine() {
        let d = Deformation::commutative(4).unwrap();
        let f = &TorusElement::one(&d) + &cosine(&d, &[1, 0, -1, 0], 0.4);
        let (out, tail) = grid_map(&[&f], 1, |x, y| y[0] = x[0].inv()).unwrap();
        assert!(tail < GRID_TAIL_TOL);
        let prod = &f * &out[0];
        assert!((&prod - &TorusElement::one(&d)).max_abs() < 1e-13);
    }

    #[test]
    fn flat_metric_has_no_curvature() {
        let d = Deformation::commutative(4).unwrap();
        let c = curvature_tensors(&MetricData::Flat(d)).unwrap();
        assert_eq!(c.riemann.max_abs(), 0.0);
        assert_eq!(c.einstein.max_abs(), 0.0);
    }

    #[test]
    fn two_dimensional_conformal_scalar_curvature() {
        // g = e^{2u} δ has R = −2 e^{−2u} ∂²u; with u = log φ / 2 this is
        // R = −φ^{-1} ∂² log φ.
        let d = Deformation::commutative(2).unwrap();
        let phi = &TorusElement::one(&d) + &cosine(&d, &[1, 2], 0.3);
        let c = curvature_tensors(&MetricData::ConformallyFlat { factor: phi.clone(), exponent: 1 }).unwrap();
        let (logs, _) = grid_map(&[&phi], 2, |x, y| {
            y[0] = x[0].ln();
            y[1] = x[0].inv();
        })
        .unwrap();
        let lap = logs[0].flat_laplacian(); // Σ δ_a² = −∂²
        let expected = &logs[1] * &lap;
        assert!((&c.scalar - &expected).max_abs() < 1e-11);
        assert!(c.einstein.max_abs() < 1e-11);
    }

    #[test]
    fn general_two_torus_metric_has_vanishing_einstein_tensor() {
        let d = Deformation::commutative(2).unwrap();
        let one = TorusElement::one(&d);
        let g11 = &one + &cosine(&d, &[1, 0], 0.3);
        let g22 = &one + &cosine(&d, &[0, 1], 0.2);
        let g12 = cosine(&d, &[1, 1], 0.1);
        let m = MetricData::General(vec![vec![g11, g12.clone()], vec![g12, g22]]);
        let c = curvature_tensors(&m).unwrap();
        assert!(c.scalar.max_abs() > 1e-3);
        assert!(c.einstein.max_abs() < 1e-10, "{}", c.einstein.max_abs());
    }

    #[test]
    fn riemann_symmetries_and_bianchi() {
        let d = Deformation::commutative(4).unwrap();
        let one = TorusElement::one(&d);
        let g11 = &one + &cosine(&d, &[1, 0, 0, 0], 0.2);
        let g22 = &one + &cosine(&d, &[0, 1, 0, 0], 0.2);
        let g12 = cosine(&d, &[1, 1, 0, 0], 0.05);
        let zero = TorusElement::zero(&d);
        let g = vec![
            vec![g11, g12.clone(), zero.clone(), zero.clone()],
            vec![g12, g22, zero.clone(), zero.clone()],
            vec![zero.clone(), zero.clone(), one.clone(), zero.clone()],
            vec![zero.clone(), zero.clone(), zero.clone(), &one + &cosine(&d, &[1, 0, 0, 0], 0.1)],
        ];
        let c = curvature_tensors(&MetricData::General(g)).unwrap();
        let n = 4;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for dd in 0..n {
                        let anti = c.riemann.get(&[a, b, cc, dd]) + c.riemann.get(&[a, b, dd, cc]);
                        worst = worst.max(anti.max_abs());
                        let first = &(c.riemann.get(&[a, b, cc, dd]) + c.riemann.get(&[a, cc, dd, b]))
                            + c.riemann.get(&[a, dd, b, cc]);
                        worst = worst.max(first.max_abs());
                    }
                }
                let ric_sym = c.ricci.get(&[a, b]) - c.ricci.get(&[b, a]);
                worst = worst.max(ric_sym.max_abs());
            }
        }
        assert!(worst < 1e-10, "{worst}");
        let defect = c.bianchi_defect().unwrap();
        assert!(defect < 1e-7, "{defect}");
    }

    #[test]
    fn oracle_flat_metric_value() {
        let d = Deformation::commutative(2).unwrap();
        let one = TorusElement::one(&d);
        let zero = TorusElement::zero(&d);
        let v = [one.clone(), zero.clone()];
        let val = functional_oracle(&MetricData::Flat(d.clone()), &v, &v, OracleKind::Metric).unwrap();
        assert!((val.re + sphere_volume(2) / 2.0).abs() < 1e-14);
        let e = functional_oracle(&MetricData::Flat(d), &v, &v, OracleKind::Einstein).unwrap();
        assert_eq!(e.norm(), 0.0);
    }

    #[test]
    fn rejects_indefinite_metric() {
        let d = Deformation::commutative(2).unwrap();
        let f = &TorusElement::real(&d, 0.2) + &cosine(&d, &[1, 0], 1.0);
        let m = MetricData::ConformallyFlat { factor: f, exponent: 1 };
        assert!(matches!(MetricFields::new(&m), Err(Error::Config(_))));
    }

    #[test]
    fn reduced_pass_matches_full_curvature() {
        let d = Deformation::commutative(4).unwrap();
        let f = &TorusElement::one(&d) + &cosine(&d, &[1, 0, 1, 0], 0.2);
        let m = MetricData::ConformallyFlat { factor: f, exponent: -4 };
        let (full, reduced) = (curvature_tensors(&m).unwrap(), einstein_tensor(&m).unwrap());
        for (a, b) in full.einstein.components.iter().zip(&reduced.einstein.components) {
            assert!(a.l1_distance(b) < 1e-14);
        }
        for (a, b) in full.metric.g_inv.components.iter().zip(&reduced.metric.g_inv.components) {
            assert!(a.l1_distance(b) < 1e-14);
        }
        assert!(full.scalar.l1_distance(&reduced.scalar) < 1e-14);
        assert!(reduced.riemann.components.is_empty());
    }
}
