//! Verification suites: one per identity checked against an independent oracle.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{Deformation, TorusElement, MAX_DIM};
use crate::error::{Error, Result};
use crate::functionals::ComplexRecord;
use crate::residue::{sphere_moment, MomentFn};

mod calculus;
mod dirac;
mod laplacians;

/// Suite names in manifest order.
pub const SUITES: [&str; 12] = [
    "nc2-metric",
    "nc2-einstein-vanishing",
    "nc4-laplacian",
    "nc2-dirac",
    "nc4-dirac",
    "commutative-einstein",
    "laplace-type-terms",
    "forms-commutative",
    "appendix-powers",
    "moments",
    "product-triple",
    "module-linearity",
];

#[derive(Clone, Copy)]
pub struct VerifyOptions {
    /// Sphere moments used by the `moments` suite.
    pub moment: MomentFn,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { moment: sphere_moment }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub label: String,
    pub measured: ComplexRecord,
    pub expected: ComplexRecord,
    pub error: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    /// `|got − want| / max(|want|, floor) ≤ tol`.
    pub fn rel(label: impl Into<String>, got: Complex64, want: Complex64, tol: f64, floor: f64) -> Self {
        let error = (got - want).norm() / want.norm().max(floor);
        Self::build(label, got, want, error, tol)
    }

    /// `|got| ≤ tol`.
    pub fn zero(label: impl Into<String>, got: Complex64, tol: f64) -> Self {
        Self::build(label, got, Complex64::new(0.0, 0.0), got.norm(), tol)
    }

    /// A non-negative error measure that must stay below `tol`.
    pub fn bound(label: impl Into<String>, error: f64, tol: f64) -> Self {
        Self::build(label, Complex64::new(error, 0.0), Complex64::new(0.0, 0.0), error, tol)
    }

    fn build(label: impl Into<String>, got: Complex64, want: Complex64, error: f64, tol: f64) -> Self {
        Self { label: label.into(), measured: got.into(), expected: want.into(), error, tol, pass: error <= tol }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub criterion: usize,
    pub checks: Vec<Check>,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn worst(&self) -> Option<&Check> {
        self.checks.iter().filter(|c| !c.pass).chain(self.checks.iter()).max_by(|a, b| {
            (a.error / a.tol).partial_cmp(&(b.error / b.tol)).unwrap_or(std::cmp::Ordering::Equal)
        })
    }

    pub fn summary_line(&self) -> String {
        let status = if self.pass() { "PASS" } else { "FAIL" };
        let detail = match (&self.error, self.worst()) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(c)) => format!("worst {} err {:.2e} tol {:.0e}", c.label, c.error, c.tol),
            (None, None) => "no checks".into(),
        };
        format!("{status} {:>2} {:<24} {:>6.2}s  {detail}", self.criterion, self.suite, self.seconds)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "  {} {:<48} measured {:>+.12e}{:+.3e}i  expected {:>+.12e}{:+.3e}i  err {:.2e} tol {:.0e}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.label,
                c.measured.re,
                c.measured.im,
                c.expected.re,
                c.expected.im,
                c.error,
                c.tol
            ));
        }
        out
    }
}

pub fn run_suite(name: &str) -> Result<SuiteReport> {
    run_suite_with(name, &VerifyOptions::default())
}

/// Run one suite. Unknown names are an argument error; numerical failures
/// inside a suite are recorded in the report.
pub fn run_suite_with(name: &str, opts: &VerifyOptions) -> Result<SuiteReport> {
    let criterion = SUITES
        .iter()
        .position(|s| *s == name)
        .ok_or_else(|| Error::Argument(format!("unknown suite {name:?}; known: {}", SUITES.join(", "))))?
        + 1;
    let start = Instant::now();
    let outcome = match name {
        "nc2-metric" => laplacians::nc2_metric(),
        "nc2-einstein-vanishing" => laplacians::nc2_einstein_vanishing(),
        "nc4-laplacian" => laplacians::nc4_laplacian(),
        "nc2-dirac" => dirac::nc2_dirac(),
        "nc4-dirac" => dirac::nc4_dirac(),
        "commutative-einstein" => laplacians::commutative_einstein(),
        "laplace-type-terms" => laplacians::laplace_type_terms(),
        "forms-commutative" => dirac::forms_commutative(),
        "appendix-powers" => calculus::appendix_powers(),
        "moments" => calculus::moments(opts.moment),
        "product-triple" => dirac::product_triple(),
        _ => calculus::module_linearity(),
    };
    let (checks, error) = match outcome {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    Ok(SuiteReport { suite: name.into(), criterion, checks, seconds: start.elapsed().as_secs_f64(), error })
}

pub fn run_all(opts: &VerifyOptions) -> Vec<SuiteReport> {
    SUITES.iter().map(|s| run_suite_with(s, opts).expect("known suite")).collect()
}

fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Σ a_j (e_{k_j} + e_{k_j}*)/2` with `a_j` uniform in `[−amp, amp]`.
fn trig(defm: &Arc<Deformation>, rng: &mut ChaCha8Rng, modes: &[&[i32]], amp: f64, opposite: bool) -> TorusElement {
    let mut acc = TorusElement::zero(defm);
    for k in modes {
        let e = if opposite { TorusElement::opposite_monomial(defm, k) } else { TorusElement::monomial(defm, k) };
        let a = rng.gen_range(-amp..amp);
        acc = &acc + &(&e + &e.adjoint()).scale_real(a / 2.0);
    }
    acc
}

/// `1 + trig(...)`, positive as long as `modes.len()·amp < 1`.
fn positive(defm: &Arc<Deformation>, rng: &mut ChaCha8Rng, modes: &[&[i32]], amp: f64, opposite: bool) -> TorusElement {
    &TorusElement::one(defm) + &trig(defm, rng, modes, amp, opposite)
}

fn complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn constants(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| complex(rng)).collect()
}

fn constant_fields(defm: &Arc<Deformation>, c: &[Complex64]) -> Vec<TorusElement> {
    c.iter().map(|x| TorusElement::scalar(defm, *x)).collect()
}

/// `τ(x_1 x_2 ··· x_k)` for left elements by direct convolution of the
/// Fourier coefficients with the twist `e_k e_l = e^{i Σ_{a<b} θ_{ba} k_b l_a} e_{k+l}`.
fn trace_of_product(factors: &[&TorusElement]) -> Result<Complex64> {
    let defm = factors[0].deformation().clone();
    let n = defm.dim();
    let coeffs = |x: &TorusElement| -> Result<HashMap<[i32; MAX_DIM], Complex64>> {
        let mut out = HashMap::new();
        for (m, c) in x.terms() {
            if m.right.iter().any(|r| *r != 0) {
                return Err(Error::Precondition("convolution oracle takes left elements".into()));
            }
            *out.entry(m.left).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Ok(out)
    };
    let mut acc = coeffs(factors[0])?;
    for f in &factors[1..] {
        let g = coeffs(f)?;
        let mut next: HashMap<[i32; MAX_DIM], Complex64> = HashMap::new();
        for (k, a) in &acc {
            for (l, b) in &g {
                let mut angle = 0.0;
                for x in 0..n {
                    for y in (x + 1)..n {
                        angle += defm.theta(y, x) * k[y] as f64 * l[x] as f64;
                    }
                }
                let mut s = [0; MAX_DIM];
                for x in 0..n {
                    s[x] = k[x] + l[x];
                }
                *next.entry(s).or_insert(Complex64::new(0.0, 0.0)) += a * b * Complex64::from_polar(1.0, angle);
            }
        }
        acc = next;
    }
    Ok(acc.get(&[0; MAX_DIM]).copied().unwrap_or_default())
}
