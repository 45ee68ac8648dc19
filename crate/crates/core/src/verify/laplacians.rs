use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::{complex, constant_fields, constants, positive, rng, trace_of_product, trig, Check};
use crate::algebra::{Deformation, TorusElement};
use crate::clifford::CliffordValue;
use crate::error::Result;
use crate::functionals::{closed_form_reference, einstein_vf, functional_of, metric_vf, ClosedForm, Part};
use crate::geometry::{curvature_tensors, functional_oracle, MetricData, OracleKind};
use crate::operators::{
    build_conformal_laplacian, build_covariant_vector_field, build_flat_laplacian, build_laplace_type, ConnectionData,
    LaplacianVariant, VectorFieldSpec,
};
use crate::residue::sphere_volume;
use crate::symbol::{compose_with, CalculusSettings, Symbol};

const I: Complex64 = Complex64::new(0.0, 1.0);

const NC2_MODES: [&[i32]; 4] = [&[1, 0], &[0, 1], &[1, 1], &[1, -1]];

fn nc2_inputs() -> (Arc<Deformation>, Vec<(TorusElement, Vec<Complex64>, Vec<Complex64>, TorusElement)>) {
    let d = Deformation::two_torus(1.0 / 2f64.sqrt());
    let mut r = rng(11);
    let inputs = (0..5)
        .map(|_| {
            let h = positive(&d, &mut r, &NC2_MODES, 0.2, false);
            let v = constants(&mut r, 2);
            let w = constants(&mut r, 2);
            let f = &TorusElement::real(&d, 0.5) + &trig(&d, &mut r, &NC2_MODES[..2], 0.4, false);
            (h, v, w, f)
        })
        .collect();
    (d, inputs)
}

fn dot(v: &[Complex64], w: &[Complex64]) -> Complex64 {
    v.iter().zip(w).map(|(a, b)| a * b).sum()
}

/// `V^a h δ_a h^{-1}` with constant `V^a`.
fn rescaled(d: &Arc<Deformation>, c: &[Complex64], h: &TorusElement) -> VectorFieldSpec {
    VectorFieldSpec::rescaled(constant_fields(d, c), h.clone())
}

pub(super) fn nc2_metric() -> Result<Vec<Check>> {
    let s = CalculusSettings::default();
    let (d, inputs) = nc2_inputs();
    let per: Vec<Result<Vec<Check>>> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, (h, v, w, _))| {
            let l = build_conformal_laplacian(h, LaplacianVariant::TwoTorus, &s)?;
            let engine = metric_vf(&l, &rescaled(&d, v, h), &rescaled(&d, w, h), None, &s)?;
            let oracle = trace_of_product(&[h, h, h, h])? * PI * dot(v, w);
            let closed = closed_form_reference(&ClosedForm::NcTwoLaplacian { h: h.clone(), v: v.clone(), w: w.clone(), part: Part::Metric })?;
            Ok(vec![
                Check::rel(format!("h{i}: metric_vf vs π τ(h⁴) V·W"), engine.value, oracle, 1e-9, 1e-300),
                Check::rel(format!("h{i}: closed form vs convolution τ(h⁴)"), closed.value, oracle, 1e-12, 1e-300),
            ])
        })
        .collect();
    Ok(per.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

pub(super) fn nc2_einstein_vanishing() -> Result<Vec<Check>> {
    let s = CalculusSettings::default();
    let (d, inputs) = nc2_inputs();
    let per: Vec<Result<Vec<Check>>> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, (h, v, w, f))| {
            let l = build_conformal_laplacian(h, LaplacianVariant::TwoTorus, &s)?;
            let (vs, ws) = (rescaled(&d, v, h), rescaled(&d, w, h));
            let scale = v.iter().map(|x| x.norm()).sum::<f64>()
                * w.iter().map(|x| x.norm()).sum::<f64>()
                * h.l1_norm().powi(4)
                * f.l1_norm().max(1.0);
            let plain = einstein_vf(&l, &vs, &ws, None, &s)?;
            let local = einstein_vf(&l, &vs, &ws, Some(f), &s)?;
            Ok(vec![
                Check::zero(format!("h{i}: einstein_vf"), plain.value, 1e-9 * scale),
                Check::bound(format!("h{i}: ‖density‖₁"), plain.density.l1_norm(), 1e-9 * scale),
                Check::zero(format!("h{i}: localized 𝒲(f VW Δ_h⁻¹)"), local.value, 1e-9 * scale),
                Check::bound(format!("h{i}: localized ‖density‖₁"), local.density.l1_norm(), 1e-9 * scale),
            ])
        })
        .collect();
    Ok(per.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

fn nc4_theta(t: f64) -> Vec<Vec<f64>> {
    let mut th = vec![vec![0.0; 4]; 4];
    for (a, b, x) in [(0, 1, 0.21), (0, 2, t), (1, 3, 1.3 * t), (2, 3, -0.4 * t)] {
        let x = if t == 0.0 { 0.0 } else { x };
        th[a][b] = x;
        th[b][a] = -x;
    }
    th
}

const NC4_MODES: [&[i32]; 3] = [&[1, 0, 1, 0], &[0, 1, 0, 0], &[0, 0, 1, 1]];

pub(super) fn nc4_laplacian() -> Result<Vec<Check>> {
    let s = CalculusSettings::default();
    let mut r = rng(23);
    let mut jobs = Vec::new();
    for i in 0..5 {
        let d = Deformation::new(4, &nc4_theta(0.37))?;
        let chi = positive(&d, &mut r, &NC4_MODES[..2], 0.08, false);
        jobs.push((format!("χ{i}"), d, chi, constants(&mut r, 4), constants(&mut r, 4)));
    }
    for i in 0..2 {
        let d = Deformation::new(4, &nc4_theta(0.0))?;
        let chi = positive(&d, &mut r, &NC4_MODES[..2], 0.08, false);
        jobs.push((format!("θ=0 χ{i}"), d, chi, constants(&mut r, 4), constants(&mut r, 4)));
    }
    let per: Vec<Result<Vec<Check>>> = jobs
        .par_iter()
        .map(|(label, d, chi, v, w)| {
            let l = build_conformal_laplacian(chi, LaplacianVariant::FourTorus, &s)?;
            let (vs, ws) = (rescaled(d, v, chi), rescaled(d, w, chi));
            let einstein = einstein_vf(&l, &vs, &ws, None, &s)?;
            let prop_e = closed_form_reference(&ClosedForm::NcFourLaplacian { chi: chi.clone(), v: v.clone(), w: w.clone(), part: Part::Einstein })?;
            let floor = 1e-3 * dot(v, w).norm().max(1e-3);
            let mut out = vec![Check::rel(format!("{label}: einstein_vf vs closed form"), einstein.value, prop_e.value, 1e-8, floor)];
            if d.is_commutative() {
                // `V^a δ_a = (−i V^a) ∂_a` as a geometric vector field.
                let vg: Vec<TorusElement> = v.iter().map(|x| TorusElement::scalar(d, -I * x)).collect();
                let wg: Vec<TorusElement> = w.iter().map(|x| TorusElement::scalar(d, -I * x)).collect();
                let metric = MetricData::ConformallyFlat { factor: chi.clone(), exponent: 1 };
                let oracle = functional_oracle(&metric, &vg, &wg, OracleKind::Einstein)?;
                out.push(Check::rel(format!("{label}: einstein_vf vs (v₃/6)∫G(V,W) oracle"), einstein.value, oracle, 1e-6, floor));
            } else {
                let metric = metric_vf(&l, &vs, &ws, None, &s)?;
                let prop_m = closed_form_reference(&ClosedForm::NcFourLaplacian { chi: chi.clone(), v: v.clone(), w: w.clone(), part: Part::Metric })?;
                let theorem = trace_of_product(&[chi, chi, chi])? * dot(v, w) * (sphere_volume(4) / 4.0);
                out.push(Check::rel(format!("{label}: metric_vf vs closed form"), metric.value, prop_m.value, 1e-8, floor));
                out.push(Check::rel(format!("{label}: metric_vf vs (v₃/4)τ(χ³)V·W"), metric.value, theorem, 1e-8, floor));
            }
            Ok(out)
        })
        .collect();
    Ok(per.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

fn trig_fields(d: &Arc<Deformation>, r: &mut rand_chacha::ChaCha8Rng, modes: &[&[i32]]) -> Vec<TorusElement> {
    (0..d.dim())
        .map(|_| &TorusElement::scalar(d, complex(r)) + &trig(d, r, modes, 0.5, false))
        .collect()
}

pub(super) fn commutative_einstein() -> Result<Vec<Check>> {
    let s = CalculusSettings::default();
    let mut out = Vec::new();
    let mut r = rng(31);

    let d4 = Deformation::commutative(4)?;
    let geo = VectorFieldSpec::geometric;
    for i in 0..2 {
        let phi = positive(&d4, &mut r, &NC4_MODES[..2], 0.1, false);
        let metric = MetricData::ConformallyFlat { factor: phi, exponent: 1 };
        let l = build_laplace_type(&metric, &ConnectionData::trivial(&d4, 1))?;
        let v = trig_fields(&d4, &mut r, &NC4_MODES[1..2]);
        let w = trig_fields(&d4, &mut r, &NC4_MODES[..1]);
        let engine = einstein_vf(&l, &geo(v.clone()), &geo(w.clone()), None, &s)?;
        let oracle = functional_oracle(&metric, &v, &w, OracleKind::Einstein)?;
        out.push(Check::rel(format!("T⁴ g{i}: einstein_vf vs (v₃/6)∫G(V,W)"), engine.value, oracle, 1e-6, 1e-6));
    }
    let flat = build_flat_laplacian(&d4, 1);
    let v = trig_fields(&d4, &mut r, &NC4_MODES[..2]);
    let w = trig_fields(&d4, &mut r, &NC4_MODES[1..]);
    let e = einstein_vf(&flat, &geo(v), &geo(w), None, &s)?;
    out.push(Check::zero("flat T⁴: einstein_vf", e.value, 1e-12));

    let d2 = Deformation::commutative(2)?;
    for i in 0..2 {
        let phi = positive(&d2, &mut r, &[&[1, 0], &[1, 1]], 0.2, false);
        let metric = MetricData::ConformallyFlat { factor: phi, exponent: 1 };
        let l = build_laplace_type(&metric, &ConnectionData::trivial(&d2, 1))?;
        let v = trig_fields(&d2, &mut r, &[&[0, 1]]);
        let w = trig_fields(&d2, &mut r, &[&[1, -1]]);
        let e = einstein_vf(&l, &geo(v), &geo(w), None, &s)?;
        out.push(Check::zero(format!("T² conformal g{i}: einstein_vf"), e.value, 1e-10));
    }
    for i in 0..2 {
        let g11 = positive(&d2, &mut r, &[&[1, 0], &[0, 1]], 0.2, false);
        let g22 = positive(&d2, &mut r, &[&[1, 1], &[0, 1]], 0.2, false);
        let g12 = trig(&d2, &mut r, &[&[1, 0], &[1, -1]], 0.15, false);
        let curv = curvature_tensors(&MetricData::General(vec![vec![g11, g12.clone()], vec![g12, g22]]))?;
        out.push(Check::bound(format!("T² general g{i}: max |G_ab|"), curv.einstein.max_abs(), 1e-10));
    }
    Ok(out)
}

fn covariant_pair(v: &[TorusElement], w: &[TorusElement], c: &ConnectionData, s: &CalculusSettings) -> Result<Symbol> {
    compose_with(&build_covariant_vector_field(v, c)?, &build_covariant_vector_field(w, c)?, 3, s)
}

pub(super) fn laplace_type_terms() -> Result<Vec<Check>> {
    let s = CalculusSettings::default();
    let mut r = rng(47);
    let d4 = Deformation::commutative(4)?;
    let modes: [&[i32]; 3] = [&[1, 0, 0, 0], &[0, 1, 0, 0], &[1, 0, 0, 1]];
    let real_trig = |r: &mut rand_chacha::ChaCha8Rng| trig(&d4, r, &modes, 0.3, false);
    let potential: Vec<TorusElement> = (0..4).map(|_| real_trig(&mut r)).collect();
    let conn = ConnectionData::u1(&potential);
    // Sine parts keep `∫V^aW^bF_ab` away from zero by parity.
    let field = |r: &mut rand_chacha::ChaCha8Rng| {
        let sines = trig(&d4, r, &modes, 0.3, false).derive_unchecked(r.gen_range(0..2)).scale(-I);
        &(&TorusElement::real(&d4, r.gen_range(-1.0..1.0)) + &real_trig(r)) + &sines
    };
    let v: Vec<TorusElement> = (0..4).map(|_| field(&mut r)).collect();
    let w: Vec<TorusElement> = (0..4).map(|_| field(&mut r)).collect();
    let e = CliffordValue::scalar(&(&TorusElement::real(&d4, 0.7) + &real_trig(&mut r)), 1);
    let conn_e = conn.clone().with_potential(e.clone());

    let flat = MetricData::Flat(d4.clone());
    let l_t = build_laplace_type(&flat, &conn)?;
    let l_te = build_laplace_type(&flat, &conn_e)?;
    let p = covariant_pair(&v, &w, &conn, &s)?;
    let g_t = functional_of("einstein_vf", &p, &l_t, 2, &s)?;
    let g_te = functional_of("einstein_vf", &p, &l_te, 2, &s)?;
    let f_ref = closed_form_reference(&ClosedForm::ConnectionCurvature { connection: conn.clone(), v: v.clone(), w: w.clone() })?;
    let e_ref = closed_form_reference(&ClosedForm::PotentialShift { e, v: v.clone(), w: w.clone() })?;

    let geo = VectorFieldSpec::geometric;
    let base = metric_vf(&build_flat_laplacian(&d4, 1), &geo(v.clone()), &geo(w.clone()), None, &s)?;
    let m_t = functional_of("metric_vf", &p, &l_t, 3, &s)?;
    let m_te = functional_of("metric_vf", &p, &l_te, 3, &s)?;

    let mut out = vec![
        Check::rel("U(1): einstein_vf vs (v₃/2)∫V^aW^bF_ab", g_t.value, f_ref.value, 1e-8, 1e-12),
        Check::rel("E shift vs ½ v₃ ∫Tr(E) g(V,W)", g_te.value - g_t.value, e_ref.value, 1e-8, 1e-12),
        Check::zero("metric_vf(Δ_T) − metric_vf(Δ)", m_t.value - base.value, 1e-10),
        Check::zero("metric_vf(Δ_T,E) − metric_vf(Δ)", m_te.value - base.value, 1e-10),
    ];

    // A rank-2 connection: metric_vf(Δ_T) = 2·metric_vf(Δ).
    let z = TorusElement::zero(&d4);
    let anti = |a: &TorusElement, b: &TorusElement, c: &TorusElement| -> Result<CliffordValue> {
        let ib = b.scale(I);
        CliffordValue::from_entries(2, vec![a.scale(I), &ib + &c.scale_real(1.0), &ib - &c.scale_real(1.0), z.clone()])
    };
    let t = (0..4)
        .map(|_| anti(&real_trig(&mut r), &real_trig(&mut r), &real_trig(&mut r)))
        .collect::<Result<Vec<_>>>()?;
    let conn2 = ConnectionData { t, e: None };
    let l2 = build_laplace_type(&flat, &conn2)?;
    let m2 = functional_of("metric_vf", &covariant_pair(&v, &w, &conn2, &s)?, &l2, 3, &s)?;
    out.push(Check::zero("rank 2: metric_vf(Δ_T) − 2 metric_vf(Δ)", m2.value - base.value * 2.0, 1e-10));
    Ok(out)
}
