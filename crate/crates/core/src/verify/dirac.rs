use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{complex, positive, rng, trace_of_product, trig, Check};
use crate::algebra::{Deformation, TorusElement};
use crate::clifford::CliffordValue;
use crate::error::Result;
use crate::functionals::{
    closed_form_reference, einstein_form, einstein_form_op, metric_form, metric_form_op, product_form_value,
    spectral_closedness_check, ClosedForm, FormOrdering, Part, ProductForm,
};
use crate::geometry::{curvature_tensors, einstein_tensor, MetricData};
use crate::operators::{build_dirac, one_form_value, product_triple as product_dirac, DiracFlavor, OneFormSpec};
use crate::residue::sphere_volume;
use crate::symbol::CalculusSettings;

type Rng = rand_chacha::ChaCha8Rng;

fn form_fields(d: &Arc<Deformation>, r: &mut Rng, modes: &[&[i32]]) -> Vec<TorusElement> {
    (0..d.dim())
        .map(|i| &TorusElement::scalar(d, complex(r)) + &trig(d, r, &modes[i % modes.len()..][..1], 0.6, false))
        .collect()
}

/// Zero-order test operators: functions, Clifford generators and the grading.
fn closedness_samples(d: &Arc<Deformation>, r: &mut Rng, rep: &crate::clifford::GammaRep) -> Vec<CliffordValue> {
    let dim = rep.spinor_dim();
    let mut out = Vec::new();
    for a in 0..rep.n {
        let f = &TorusElement::scalar(d, complex(r)) + &trig(d, r, &[&[1, 0], &[0, 1], &[1, 1]], 0.5, false);
        out.push(CliffordValue::from_const(&f, rep.gamma(a)));
    }
    let f = trig(d, r, &[&[1, -1]], 0.5, false);
    out.push(CliffordValue::scalar(&f, dim));
    out.push(CliffordValue::from_const(&f, &rep.grading));
    out
}

pub(super) fn nc2_dirac() -> Result<Vec<Check>> {
    let s = CalculusSettings::default();
    let d = Deformation::two_torus(1.0 / 2f64.sqrt());
    let mut r = rng(53);
    let mut out = Vec::new();
    for i in 0..3 {
        let k = positive(&d, &mut r, &[&[1, 0], &[1, 1]], 0.2, true);
        let dk = build_dirac(&MetricData::Flat(d.clone()), &DiracFlavor::Conformal(k.clone()), &s)?;
        let samples = closedness_samples(&d, &mut r, &dk.rep);
        let closed = spectral_closedness_check(&dk.symbol, &samples, 1e-9, &s)?;
        out.push(Check::bound(format!("k{i}: spectral closedness max |𝒲(TD|D|⁻²)|"), closed.max_abs, 1e-9));

        let v = form_fields(&d, &mut r, &[&[1, 0], &[0, 1]]);
        let w = form_fields(&d, &mut r, &[&[1, 0], &[0, 1]]);
        let (vf, wf) = (OneFormSpec::rescaled(v.clone(), k.clone()), OneFormSpec::rescaled(w.clone(), k.clone()));
        let g = metric_form(&dk.symbol, &dk.rep, &vf, &wf, &s)?;
        let big_g = einstein_form(&dk.symbol, &dk.rep, &vf, &wf, &s)?;
        let closed_g = closed_form_reference(&ClosedForm::NcTwoDirac { v: v.clone(), w: w.clone(), part: Part::Metric })?;
        let direct = (trace_of_product(&[&v[0], &w[0]])? + trace_of_product(&[&v[1], &w[1]])?) * (2.0 * sphere_volume(2));
        out.push(Check::rel(format!("k{i}: metric_form vs 2v₁τ(V^aW^a)"), g.value, direct, 1e-9, 1e-6));
        out.push(Check::rel(format!("k{i}: closed form vs convolution τ(V^aW^a)"), closed_g.value, direct, 1e-12, 1e-6));
        out.push(Check::zero(format!("k{i}: einstein_form"), big_g.value, 1e-9));
    }
    Ok(out)
}

fn nc4_theta(t: f64) -> Vec<Vec<f64>> {
    let mut th = vec![vec![0.0; 4]; 4];
    for (a, b, x) in [(0, 2, t), (1, 3, 1.3 * t), (0, 3, -0.5 * t)] {
        th[a][b] = x;
        th[b][a] = -x;
    }
    th
}

const K_MODES: [&[i32]; 2] = [&[1, 0, 1, 0], &[0, 1, 0, 0]];

pub(super) fn nc4_dirac() -> Result<Vec<Check>> {
    let s = CalculusSettings::default();
    let mut r = rng(59);
    let mut jobs = Vec::new();
    for (i, theta) in [0.37, 0.37, 0.37, 0.0, 0.0].into_iter().enumerate() {
        let d = Deformation::new(4, &nc4_theta(theta))?;
        let k = positive(&d, &mut r, &K_MODES, 0.1, theta != 0.0);
        let v = form_fields(&d, &mut r, &[&[1, 0, 0, 0]]);
        let w = form_fields(&d, &mut r, &[&[0, 1, 0, 0]]);
        jobs.push((format!("θ={theta} k{i}"), d, k, v, w));
    }
    let per: Vec<Result<Vec<Check>>> = jobs
        .par_iter()
        .map(|(label, d, k, v, w)| {
            let dk = build_dirac(&MetricData::Flat(d.clone()), &DiracFlavor::Conformal(k.clone()), &s)?;
            let (vf, wf) = (OneFormSpec::rescaled(v.clone(), k.clone()), OneFormSpec::rescaled(w.clone(), k.clone()));
            let big_g = einstein_form(&dk.symbol, &dk.rep, &vf, &wf, &s)?;
            let mut out = Vec::new();
            if d.is_commutative() {
                let limit = closed_form_reference(&ClosedForm::DiracCommutativeLimit { k: k.clone(), v: v.clone(), w: w.clone() })?;
                out.push(Check::rel(format!("{label}: einstein_form vs G_ab display"), big_g.value, limit.value, 1e-8, 1e-6));
            } else {
                let g = metric_form(&dk.symbol, &dk.rep, &vf, &wf, &s)?;
                let prop_g = closed_form_reference(&ClosedForm::NcFourDirac { k: k.clone(), v: v.clone(), w: w.clone(), part: Part::Metric })?;
                let prop_big = closed_form_reference(&ClosedForm::NcFourDirac { k: k.clone(), v: v.clone(), w: w.clone(), part: Part::Einstein })?;
                out.push(Check::rel(format!("{label}: metric_form vs closed form"), g.value, prop_g.value, 1e-8, 1e-6));
                out.push(Check::rel(format!("{label}: einstein_form vs closed form"), big_g.value, prop_big.value, 1e-8, 1e-6));
            }
            Ok(out)
        })
        .collect();
    Ok(per.into_iter().collect::<Result<Vec<_>>>()?.concat())
}

pub(super) fn forms_commutative() -> Result<Vec<Check>> {
    let s = CalculusSettings::default();
    let mut r = rng(61);
    let mut out = Vec::new();

    let d2 = Deformation::commutative(2)?;
    let flat = MetricData::Flat(d2.clone());
    let dirac = build_dirac(&flat, &DiracFlavor::Flat, &s)?;
    let curv = curvature_tensors(&flat)?;
    for i in 0..2 {
        let v = form_fields(&d2, &mut r, &[&[1, 0], &[1, 1]]);
        let w = form_fields(&d2, &mut r, &[&[0, 1], &[1, 1]]);
        let (vf, wf) = (OneFormSpec::new(v.clone()), OneFormSpec::new(w.clone()));
        let g = metric_form(&dirac.symbol, &dirac.rep, &vf, &wf, &s)?;
        let big_g = einstein_form(&dirac.symbol, &dirac.rep, &vf, &wf, &s)?;
        let oracle = curv.metric.integrate(&curv.metric.inner_forms(&v, &w)?)? * (2.0 * sphere_volume(2));
        out.push(Check::rel(format!("flat T² f{i}: 𝓰_D vs 2v₁∫g(v,w)"), g.value, oracle, 1e-6, 1e-6));
        out.push(Check::zero(format!("flat T² f{i}: 𝒢_D"), big_g.value, 1e-10));
    }

    let d4 = Deformation::commutative(4)?;
    let mut jobs = Vec::new();
    for i in 0..2 {
        let k = positive(&d4, &mut r, &K_MODES, 0.1, false);
        let v = form_fields(&d4, &mut r, &[&[1, 0, 0, 0]]);
        let w = form_fields(&d4, &mut r, &[&[0, 0, 1, 0]]);
        jobs.push((i, k, v, w));
    }
    let per: Vec<Result<Vec<Check>>> = jobs
        .par_iter()
        .map(|(i, k, v, w)| {
            let metric = MetricData::ConformallyFlat { factor: k.clone(), exponent: -4 };
            let curv = einstein_tensor(&metric)?;
            let vol = 4.0 * sphere_volume(4);
            let g_oracle = curv.metric.integrate(&curv.metric.inner_forms(v, w)?)? * vol;
            let big_oracle = curv.metric.integrate(&curv.einstein_forms(v, w)?)? * (vol / 6.0);
            let dk = build_dirac(&MetricData::Flat(d4.clone()), &DiracFlavor::Conformal(k.clone()), &s)?;
            let (vf, wf) = (OneFormSpec::rescaled(v.clone(), k.clone()), OneFormSpec::rescaled(w.clone(), k.clone()));
            let g = metric_form(&dk.symbol, &dk.rep, &vf, &wf, &s)?;
            let big_g = einstein_form(&dk.symbol, &dk.rep, &vf, &wf, &s)?;
            Ok(vec![
                Check::rel(format!("T⁴ k{i}: 𝓰_D vs 4v₃∫g(v,w)"), g.value, g_oracle, 1e-6, 1e-6),
                Check::rel(format!("T⁴ k{i}: 𝒢_D vs 4(v₃/6)∫G(v,w)"), big_g.value, big_oracle, 1e-6, 1e-6),
            ])
        })
        .collect();
    out.extend(per.into_iter().collect::<Result<Vec<_>>>()?.concat());
    Ok(out)
}

pub(super) fn product_triple() -> Result<Vec<Check>> {
    let s = CalculusSettings::default();
    let d = Deformation::two_torus(1.0 / 2f64.sqrt());
    let mut r = rng(67);
    let k = positive(&d, &mut r, &[&[1, 1], &[0, 1]], 0.2, true);
    let base = build_dirac(&MetricData::Flat(d.clone()), &DiracFlavor::Conformal(k.clone()), &s)?;
    let form = |r: &mut Rng| -> Result<ProductForm> {
        let plus = one_form_value(&OneFormSpec::rescaled(form_fields(&d, r, &[&[1, 0], &[0, 1]]), k.clone()), &base.rep)?;
        let minus = one_form_value(&OneFormSpec::rescaled(form_fields(&d, r, &[&[1, 1], &[0, 1]]), k.clone()), &base.rep)?;
        let phi_plus = &TorusElement::scalar(&d, complex(r)) + &trig(&d, r, &[&[1, 0]], 0.5, false);
        let phi_minus = &TorusElement::scalar(&d, complex(r)) + &trig(&d, r, &[&[0, 1]], 0.5, false);
        Ok(ProductForm { plus, minus, phi_plus, phi_minus })
    };
    let (o, op) = (form(&mut r)?, form(&mut r)?);
    let cs = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.4)];
    let per: Vec<Result<Vec<Check>>> = cs
        .par_iter()
        .map(|&c| {
            let big = product_dirac(&base.symbol, &base.grading, c)?;
            let (ov, opv) = (product_form_value(&o, &base.grading, c), product_form_value(&op, &base.grading, c));
            let g = metric_form_op(&big, &ov, &opv, &s)?;
            let big_g = einstein_form_op(&big, &ov, &opv, FormOrdering::Right, &s)?;
            let reference = |part| {
                closed_form_reference(&ClosedForm::ProductTriple {
                    base: base.symbol.clone(),
                    c,
                    omega: o.clone(),
                    omega_prime: op.clone(),
                    part,
                })
            };
            Ok(vec![
                Check::rel(format!("c={c}: 𝓰_𝒟 vs base-triple formula"), g.value, reference(Part::Metric)?.value, 1e-8, 1e-6),
                Check::rel(format!("c={c}: 𝒢_𝒟 vs base-triple formula"), big_g.value, reference(Part::Einstein)?.value, 1e-8, 1e-6),
            ])
        })
        .collect();
    Ok(per.into_iter().collect::<Result<Vec<_>>>()?.concat())
}
