//! Observation distributions and quadrature oracles for the mean difference
//! `θ = E|X₁ − X₂|`, its truncated version and the tail functionals of
//! `Z = |X₁ − X₂|`.
//!
//! `θ` has two independent routes: the one-dimensional identity
//! `θ = 2∫F(1−F)` through the CDF, and iterated quadrature of `|x − y|`
//! against the pair density, which touches only the density.

pub mod quadrature;
pub mod special;

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal, Pareto, StudentT};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use quadrature::{integrate, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    StudentT { nu: f64 },
    Uniform01,
    StandardNormal,
    Pareto { alpha: f64, xm: f64 },
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::StudentT { nu } => write!(f, "t(nu={nu})"),
            DistributionSpec::Uniform01 => f.write_str("uniform(0,1)"),
            DistributionSpec::StandardNormal => f.write_str("normal(0,1)"),
            DistributionSpec::Pareto { alpha, xm } => write!(f, "pareto(alpha={alpha}, xm={xm})"),
        }
    }
}

/// Default accuracy for the tail functionals, which have no tolerance argument.
pub const FUNCTIONAL_TOL: Tolerance = Tolerance {
    abs: 1e-12,
    rel: 1e-10,
};

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::StudentT { nu } if !(nu > 0.0 && nu.is_finite()) => {
                Err(Error::Validation(format!("degrees of freedom must be > 0, got {nu}")))
            }
            DistributionSpec::Pareto { alpha, xm }
                if !(alpha > 0.0 && xm > 0.0 && alpha.is_finite() && xm.is_finite()) =>
            {
                Err(Error::Validation(format!(
                    "pareto needs alpha > 0 and xm > 0, got alpha={alpha}, xm={xm}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Whether `E|X| < ∞`, i.e. whether `θ` exists.
    pub fn has_finite_mean(&self) -> bool {
        match *self {
            DistributionSpec::StudentT { nu } => nu > 1.0,
            DistributionSpec::Pareto { alpha, .. } => alpha > 1.0,
            _ => true,
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            DistributionSpec::Uniform01 => (0.0, 1.0),
            DistributionSpec::Pareto { xm, .. } => (xm, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Points where the density peaks or has a kink.
    fn features(&self) -> Vec<f64> {
        match *self {
            DistributionSpec::Uniform01 => vec![0.0, 1.0],
            DistributionSpec::Pareto { xm, .. } => vec![xm],
            _ => vec![0.0],
        }
    }

    fn symmetric(&self) -> bool {
        matches!(
            self,
            DistributionSpec::StudentT { .. } | DistributionSpec::StandardNormal
        )
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::StudentT { nu } => special::student_t_cdf(x, nu),
            DistributionSpec::StandardNormal => special::normal_cdf(x),
            DistributionSpec::Uniform01 => x.clamp(0.0, 1.0),
            DistributionSpec::Pareto { alpha, xm } => {
                if x <= xm {
                    0.0
                } else {
                    -(alpha * (xm / x).ln()).exp_m1()
                }
            }
        }
    }

    /// `1 − F(x)`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::StudentT { nu } => special::student_t_sf(x, nu),
            DistributionSpec::StandardNormal => special::normal_sf(x),
            DistributionSpec::Uniform01 => 1.0 - x.clamp(0.0, 1.0),
            DistributionSpec::Pareto { alpha, xm } => {
                if x <= xm {
                    1.0
                } else {
                    (xm / x).powf(alpha)
                }
            }
        }
    }

    /// Density evaluator with constants hoisted out.
    fn density(&self) -> impl Fn(f64) -> f64 + '_ {
        let ln_norm = match *self {
            DistributionSpec::StudentT { nu } => special::student_t_ln_norm(nu),
            _ => 0.0,
        };
        move |x: f64| match *self {
            DistributionSpec::StudentT { nu } => special::student_t_pdf_with(x, nu, ln_norm),
            DistributionSpec::StandardNormal => special::normal_pdf(x),
            DistributionSpec::Uniform01 => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionSpec::Pareto { alpha, xm } => {
                if x < xm {
                    0.0
                } else {
                    alpha / xm * (xm / x).powf(alpha + 1.0)
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.density()(x)
    }
}

/// `n` i.i.d. draws from `spec`.
pub fn sample_iid<R: Rng + ?Sized>(spec: &DistributionSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Validation("sample size must be >= 1".into()));
    }
    let bad = |e: &dyn fmt::Display| Error::Validation(format!("{spec}: {e}"));
    Ok(match *spec {
        DistributionSpec::StudentT { nu } => {
            let d = StudentT::new(nu).map_err(|e| bad(&e))?;
            (0..n).map(|_| d.sample(rng)).collect()
        }
        DistributionSpec::StandardNormal => {
            let d = Normal::new(0.0, 1.0).map_err(|e| bad(&e))?;
            (0..n).map(|_| d.sample(rng)).collect()
        }
        DistributionSpec::Uniform01 => (0..n).map(|_| rng.random::<f64>()).collect(),
        DistributionSpec::Pareto { alpha, xm } => {
            let d = Pareto::new(xm, alpha).map_err(|e| bad(&e))?;
            (0..n).map(|_| d.sample(rng)).collect()
        }
    })
}

fn check_oracle(spec: &DistributionSpec, kernel: &Kernel) -> Result<()> {
    spec.validate()?;
    if kernel.name() != "absdiff" || kernel.arity() != 2 {
        return Err(Error::UnsupportedOracle(format!(
            "oracles are available for the absdiff kernel only, not `{}`",
            kernel.name()
        )));
    }
    if !spec.has_finite_mean() {
        return Err(Error::Domain(format!(
            "E|X| is infinite for {spec}, so E|X1 - X2| is undefined"
        )));
    }
    Ok(())
}

/// `θ = E|X₁ − X₂|` through `θ = 2∫F(x)(1 − F(x))dx`, to absolute accuracy `tol`.
pub fn theta_oracle(spec: &DistributionSpec, kernel: &Kernel, tol: f64) -> Result<f64> {
    check_oracle(spec, kernel)?;
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tolerance must be > 0, got {tol}")));
    }
    let gini = |x: f64| spec.cdf(x) * spec.sf(x);
    let features = spec.features();
    if spec.symmetric() {
        let r = integrate(&gini, 0.0, f64::INFINITY, &features, Tolerance::abs(tol / 4.0))?;
        Ok(4.0 * r.value)
    } else {
        let (lo, hi) = spec.support();
        let r = integrate(&gini, lo, hi, &features, Tolerance::abs(tol / 2.0))?;
        Ok(2.0 * r.value)
    }
}

/// `2 ∫ f(x) ∫_{x+lo_gap}^{x+hi_gap} w(y − x) f(y) dy dx`, i.e. `E[w(Z)·1{lo_gap ≤ Z ≤ hi_gap}]`
/// for `Z = |X₁ − X₂|`, by iterated adaptive quadrature over the pair density.
fn pair_functional<W: Fn(f64) -> f64>(
    spec: &DistributionSpec,
    weight: W,
    lo_gap: f64,
    hi_gap: f64,
    tol: Tolerance,
) -> Result<f64> {
    let (lo, hi) = spec.support();
    let f = spec.density();
    let modes = spec.features();
    let inner_tol = Tolerance {
        abs: tol.abs * 0.1,
        rel: tol.rel * 0.1,
    };
    let inner = |x: f64| -> f64 {
        let a = (x + lo_gap).max(lo);
        let b = (x + hi_gap).min(hi);
        if !(a < b) {
            return 0.0;
        }
        let g = |y: f64| weight(y - x) * f(y);
        match integrate(&g, a, b, &modes, inner_tol) {
            Ok(r) => r.value,
            Err(_) => f64::NAN,
        }
    };
    let outer = |x: f64| {
        let fx = f(x);
        if fx == 0.0 {
            0.0
        } else {
            fx * inner(x)
        }
    };
    let mut features = modes.clone();
    for &m in &modes {
        for gap in [lo_gap, hi_gap] {
            if gap.is_finite() {
                features.push(m - gap);
            }
        }
    }
    let outer_tol = Tolerance {
        abs: tol.abs * 0.5,
        rel: tol.rel * 0.5,
    };
    let r = integrate(&outer, lo, hi, &features, outer_tol)?;
    if !r.value.is_finite() {
        return Err(Error::Quadrature(format!("inner integral failed for {spec}")));
    }
    Ok(2.0 * r.value)
}

/// `θ` by iterated quadrature of `|x − y| f(x) f(y)`; independent of the CDF
/// route used by [`theta_oracle`].
pub fn theta_by_pair_density(spec: &DistributionSpec, kernel: &Kernel, tol: f64) -> Result<f64> {
    check_oracle(spec, kernel)?;
    pair_functional(spec, |d| d, 0.0, f64::INFINITY, Tolerance::abs(tol))
}

fn check_level(c: f64) -> Result<()> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("truncation level must be > 0, got {c}")));
    }
    Ok(())
}

/// `θ_c = E[|X₁ − X₂|·1{|X₁ − X₂| ≤ c}]` to absolute accuracy `tol`.
pub fn truncated_theta_oracle(spec: &DistributionSpec, kernel: &Kernel, c: f64, tol: f64) -> Result<f64> {
    check_oracle(spec, kernel)?;
    check_level(c)?;
    pair_functional(spec, |d| d, 0.0, c, Tolerance::abs(tol))
}

/// `E[Z·1{Z > c}]`.
///
/// `Z = |X₁ − X₂|` for every family except Pareto, where `Z` is the Pareto
/// variate itself (the fixture with closed-form tail integrals).
pub fn tail_moment(spec: &DistributionSpec, kernel: &Kernel, c: f64) -> Result<f64> {
    check_oracle(spec, kernel)?;
    check_level(c)?;
    match *spec {
        DistributionSpec::Pareto { xm, .. } => {
            let f = spec.density();
            let r = integrate(&|z: f64| z * f(z), c.max(xm), f64::INFINITY, &[xm], FUNCTIONAL_TOL)?;
            Ok(r.value)
        }
        _ => pair_functional(spec, |d| d, c, f64::INFINITY, FUNCTIONAL_TOL),
    }
}

/// `E[Z²·1{Z ≤ c}]`, with `Z` as in [`tail_moment`].
pub fn truncated_second_moment(spec: &DistributionSpec, kernel: &Kernel, c: f64) -> Result<f64> {
    check_oracle(spec, kernel)?;
    check_level(c)?;
    match *spec {
        DistributionSpec::Pareto { xm, .. } => {
            if c <= xm {
                return Ok(0.0);
            }
            let f = spec.density();
            let r = integrate(&|z: f64| z * z * f(z), xm, c, &[xm], FUNCTIONAL_TOL)?;
            Ok(r.value)
        }
        _ => pair_functional(spec, |d| d * d, 0.0, c, FUNCTIONAL_TOL),
    }
}
