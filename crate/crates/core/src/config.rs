//! TOML run configurations for single functional evaluations.
//!
//! ```toml
//! dimension = 2
//! theta = 0.7071067811865476
//!
//! [operator]
//! kind = "conformal-laplacian"
//! factor = [{ k = [0, 0], re = 1.0 }, { k = [1, 0], re = 0.1 }, { k = [-1, 0], re = 0.1 }]
//!
//! [functional]
//! kind = "metric"
//!
//! [v]
//! flavor = "derivation"
//! components = [[{ k = [0, 0], re = 1.0 }], []]
//! ```

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{Deformation, FourierRecord, TermRecord, TorusElement};
use crate::clifford::CliffordValue;
use crate::error::{Error, Result};
use crate::functionals::{
    einstein_form_op, einstein_vf, functional_of, metric_form_op, metric_vf, volume_functional, FormOrdering,
    FunctionalReport,
};
use crate::geometry::MetricData;
use crate::operators::{
    build_conformal_laplacian, build_covariant_vector_field, build_dirac, build_flat_laplacian, build_laplace_type,
    one_form_value, ConnectionData, DiracFlavor, LaplacianVariant, OneFormSpec, VectorFieldSpec,
};
use crate::symbol::{compose_with, CalculusSettings};

pub type Terms = Vec<TermRecord>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Theta {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "Tolerances::default_inversion")]
    pub inversion: f64,
    #[serde(default = "Tolerances::default_radius")]
    pub max_radius: i32,
    #[serde(default = "Tolerances::default_prune")]
    pub prune: f64,
}

impl Tolerances {
    fn default_inversion() -> f64 {
        CalculusSettings::default().inversion_tol
    }
    fn default_radius() -> i32 {
        CalculusSettings::default().max_radius
    }
    fn default_prune() -> f64 {
        CalculusSettings::default().prune_eps
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { inversion: Self::default_inversion(), max_radius: Self::default_radius(), prune: Self::default_prune() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiracKind {
    Flat,
    Conformal,
    SpinConformal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorConfig {
    FlatLaplacian {
        #[serde(default = "one")]
        rank: usize,
    },
    /// `h^{-1}Δh^{-1}` on the two-torus or the four-torus `χ` form.
    ConformalLaplacian { factor: Terms },
    /// `Δ_{T,E}` on the flat torus with a `U(1)` potential `A_a` and scalar `E`.
    LaplaceType {
        potential: Vec<Terms>,
        #[serde(default)]
        endomorphism: Option<Terms>,
    },
    Dirac {
        flavor: DiracKind,
        #[serde(default)]
        factor: Option<Terms>,
        /// `c` of the product with the two-point space, as `[re, im]`.
        #[serde(default)]
        product: Option<[f64; 2]>,
    },
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalKind {
    Metric,
    Einstein,
    Volume,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub kind: FunctionalKind,
    #[serde(default)]
    pub localize: Option<Terms>,
    #[serde(default)]
    pub ordering: FormOrdering,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldFlavor {
    Geometric,
    #[default]
    Derivation,
    Rescaled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(default)]
    pub flavor: FieldFlavor,
    pub components: Vec<Terms>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    #[serde(default)]
    pub theta: Option<Theta>,
    #[serde(default)]
    pub depth: Option<u32>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub operator: OperatorConfig,
    pub functional: FunctionalConfig,
    #[serde(default)]
    pub v: Option<FieldConfig>,
    #[serde(default)]
    pub w: Option<FieldConfig>,
    /// Verification suites to run after the computation.
    #[serde(default)]
    pub suites: Vec<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn theta_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.dimension;
        match &self.theta {
            None => Ok(vec![vec![0.0; n]; n]),
            Some(Theta::Matrix(m)) => Ok(m.clone()),
            Some(Theta::Scalar(t)) if n == 2 => Ok(vec![vec![0.0, *t], vec![-*t, 0.0]]),
            Some(Theta::Scalar(_)) => Err(Error::Config("a scalar theta needs dimension 2".into())),
        }
    }

    pub fn deformation(&self) -> Result<Arc<Deformation>> {
        Deformation::new(self.dimension, &self.theta_matrix()?)
    }

    pub fn settings(&self) -> CalculusSettings {
        CalculusSettings {
            inversion_tol: self.tolerances.inversion,
            max_radius: self.tolerances.max_radius,
            prune_eps: self.tolerances.prune,
            min_depth: self.depth.unwrap_or(0),
        }
    }

    /// Check everything that can be checked without numerics.
    pub fn validate(&self) -> Result<()> {
        let defm = self.deformation()?;
        let n = self.dimension;
        let t = &self.tolerances;
        if !(t.inversion > 0.0) || t.max_radius < 1 || t.prune < 0.0 {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.depth == Some(0) {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        let needs_fields = self.functional.kind != FunctionalKind::Volume;
        for (name, field) in [("v", &self.v), ("w", &self.w)] {
            match field {
                Some(f) => {
                    if f.components.len() != n {
                        return Err(Error::Config(format!("[{name}] needs {n} components")));
                    }
                    for c in &f.components {
                        element(c, &defm)?;
                    }
                }
                None if needs_fields => return Err(Error::Config(format!("missing [{name}] section"))),
                None => {}
            }
        }
        match &self.operator {
            OperatorConfig::FlatLaplacian { rank } if *rank == 0 => {
                return Err(Error::Config("rank must be positive".into()))
            }
            OperatorConfig::LaplaceType { potential, .. } if potential.len() != n => {
                return Err(Error::Config(format!("potential needs {n} components")))
            }
            OperatorConfig::Dirac { flavor: DiracKind::Flat, factor: Some(_), .. } => {
                return Err(Error::Config("a flat Dirac operator takes no factor".into()))
            }
            OperatorConfig::Dirac { flavor: DiracKind::Conformal | DiracKind::SpinConformal, factor: None, .. } => {
                return Err(Error::Config("conformal Dirac operators need a factor".into()))
            }
            _ => {}
        }
        if self.functional.kind == FunctionalKind::Volume && !matches!(self.operator, OperatorConfig::Dirac { .. }) {
            return Err(Error::Config("the volume functional is defined for Dirac operators".into()));
        }
        Ok(())
    }

    /// The resolved configuration, with every default filled in.
    pub fn resolved(&self) -> Result<serde_json::Value> {
        let mut out = self.clone();
        out.theta = Some(Theta::Matrix(self.theta_matrix()?));
        let mut value = serde_json::to_value(&out)?;
        value["settings"] = serde_json::to_value(self.settings())?;
        Ok(value)
    }

    pub fn execute(&self) -> Result<FunctionalReport> {
        self.validate()?;
        let defm = self.deformation()?;
        let s = self.settings();
        let localize = self.functional.localize.as_ref().map(|t| element(t, &defm)).transpose()?;
        let fields = |f: &Option<FieldConfig>| -> Result<Vec<TorusElement>> {
            match f {
                Some(f) => f.components.iter().map(|c| element(c, &defm)).collect(),
                None => Ok(Vec::new()),
            }
        };
        let (v, w) = (fields(&self.v)?, fields(&self.w)?);
        let kind = self.functional.kind;
        let mut report = match &self.operator {
            OperatorConfig::FlatLaplacian { rank } => {
                let l = build_flat_laplacian(&defm, *rank);
                self.vector_fields(&l, &v, &w, None, localize.as_ref(), &s)?
            }
            OperatorConfig::ConformalLaplacian { factor } => {
                let h = element(factor, &defm)?;
                let variant = if self.dimension == 2 { LaplacianVariant::TwoTorus } else { LaplacianVariant::FourTorus };
                let l = build_conformal_laplacian(&h, variant, &s)?;
                self.vector_fields(&l, &v, &w, Some(&h), localize.as_ref(), &s)?
            }
            OperatorConfig::LaplaceType { potential, endomorphism } => {
                let a = potential.iter().map(|t| element(t, &defm)).collect::<Result<Vec<_>>>()?;
                let mut c = ConnectionData::u1(&a);
                if let Some(e) = endomorphism {
                    c = c.with_potential(CliffordValue::scalar(&element(e, &defm)?, 1));
                }
                let l = build_laplace_type(&MetricData::Flat(defm.clone()), &c)?;
                let mut p = compose_with(
                    &build_covariant_vector_field(&v, &c)?,
                    &build_covariant_vector_field(&w, &c)?,
                    3,
                    &s,
                )?;
                if let Some(f) = &localize {
                    p = p.left_mul(&CliffordValue::scalar(f, 1));
                }
                let m = (self.dimension / 2) as u32;
                match kind {
                    FunctionalKind::Metric => functional_of("metric_vf", &p, &l, m + 1, &s)?,
                    FunctionalKind::Einstein => functional_of("einstein_vf", &p, &l, m, &s)?,
                    FunctionalKind::Volume => unreachable!("rejected by validate"),
                }
            }
            OperatorConfig::Dirac { flavor, factor, product } => {
                let k = factor.as_ref().map(|t| element(t, &defm)).transpose()?;
                let metric = match (flavor, &k) {
                    (DiracKind::SpinConformal, Some(k)) => MetricData::ConformallyFlat { factor: k.clone(), exponent: -2 },
                    _ => MetricData::Flat(defm.clone()),
                };
                let base = match (flavor, &k) {
                    (DiracKind::Conformal, Some(k)) => DiracFlavor::Conformal(k.clone()),
                    (DiracKind::SpinConformal, _) => DiracFlavor::SpinConformalCommutative,
                    _ => DiracFlavor::Flat,
                };
                let dirac_flavor = match product {
                    Some([re, im]) => DiracFlavor::ProductTriple { base: Box::new(base), c: Complex64::new(*re, *im) },
                    None => base,
                };
                let d = build_dirac(&metric, &dirac_flavor, &s)?;
                let rescale = (*flavor == DiracKind::Conformal).then(|| k.clone()).flatten();
                let form = |comps: &[TorusElement]| -> Result<CliffordValue> {
                    let spec = match &rescale {
                        Some(k) => OneFormSpec::rescaled(comps.to_vec(), k.clone()),
                        None => OneFormSpec::new(comps.to_vec()),
                    };
                    let base_rep = d.rep.clone();
                    let value = one_form_value(&spec, &base_rep)?;
                    if value.dim() == d.symbol.mat_dim() {
                        Ok(value)
                    } else {
                        let zero = CliffordValue::zero(&defm, value.dim());
                        Ok(CliffordValue::block(&value, &zero, &zero, &value))
                    }
                };
                match kind {
                    FunctionalKind::Volume => {
                        let f = localize.clone().unwrap_or_else(|| TorusElement::one(&defm));
                        volume_functional(&d.symbol, &f, &s)?
                    }
                    _ => {
                        let mut vv = form(&v)?;
                        if let Some(f) = &localize {
                            vv = CliffordValue::scalar(f, vv.dim()).try_mul(&vv)?;
                        }
                        let ww = form(&w)?;
                        match kind {
                            FunctionalKind::Metric => metric_form_op(&d.symbol, &vv, &ww, &s)?,
                            _ => einstein_form_op(&d.symbol, &vv, &ww, self.functional.ordering, &s)?,
                        }
                    }
                }
            }
        };
        report.meta.config = Some(self.resolved()?);
        Ok(report)
    }

    fn vector_fields(
        &self,
        l: &crate::symbol::Symbol,
        v: &[TorusElement],
        w: &[TorusElement],
        h: Option<&TorusElement>,
        f: Option<&TorusElement>,
        s: &CalculusSettings,
    ) -> Result<FunctionalReport> {
        let spec = |comps: &[TorusElement], cfg: &Option<FieldConfig>| -> Result<VectorFieldSpec> {
            let flavor = cfg.as_ref().map(|c| c.flavor).unwrap_or_default();
            Ok(match flavor {
                FieldFlavor::Geometric => VectorFieldSpec::geometric(comps.to_vec()),
                FieldFlavor::Derivation => VectorFieldSpec::derivation(comps.to_vec()),
                FieldFlavor::Rescaled => {
                    let h = h.ok_or_else(|| Error::Config("rescaled fields need a conformal factor".into()))?;
                    VectorFieldSpec::rescaled(comps.to_vec(), h.clone())
                }
            })
        };
        let (vs, ws) = (spec(v, &self.v)?, spec(w, &self.w)?);
        match self.functional.kind {
            FunctionalKind::Metric => metric_vf(l, &vs, &ws, f, s),
            FunctionalKind::Einstein => einstein_vf(l, &vs, &ws, f, s),
            FunctionalKind::Volume => Err(Error::Config("the volume functional is defined for Dirac operators".into())),
        }
    }
}

/// Decode a term list onto `defm`.
pub fn element(terms: &Terms, defm: &Arc<Deformation>) -> Result<TorusElement> {
    let rec = FourierRecord { n: defm.dim(), theta: defm.theta_rows(), terms: terms.clone() };
    TorusElement::from_record_on(&rec, defm)
}
