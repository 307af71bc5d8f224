//! Symmetric kernels `h`, their truncations `h_c = h·1[|h| ≤ c]` and the
//! centered truncations `g_c = h_c − θ_c`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type KernelFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A permutation-symmetric real kernel of fixed arity on scalar observations.
///
/// `moment_order` is the user-declared `p ≥ 1` such that `E|h|^p < ∞`; it is
/// metadata only and is never inferred from data.
#[derive(Clone)]
pub struct Kernel {
    name: String,
    arity: usize,
    moment_order: f64,
    eval: Arc<KernelFn>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("moment_order", &self.moment_order)
            .finish()
    }
}

impl Kernel {
    /// Registers a custom kernel. The caller is responsible for symmetry.
    pub fn new<F>(name: impl Into<String>, arity: usize, moment_order: f64, eval: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if arity == 0 {
            return Err(Error::Validation("kernel arity must be positive".into()));
        }
        if !(moment_order >= 1.0) {
            return Err(Error::Domain(format!(
                "moment order must be >= 1, got {moment_order}"
            )));
        }
        Ok(Self {
            name: name.into(),
            arity,
            moment_order,
            eval: Arc::new(eval),
        })
    }

    /// `h(x, y) = |x − y|`; its mean is the Gini mean difference.
    pub fn abs_diff() -> Self {
        Self::new("absdiff", 2, 1.0, |a| (a[0] - a[1]).abs()).expect("valid builtin")
    }

    /// `h(x, y) = (x − y)² / 2`; its U-statistic is the unbiased sample variance.
    pub fn variance() -> Self {
        Self::new("variance", 2, 1.0, |a| {
            let d = a[0] - a[1];
            0.5 * d * d
        })
        .expect("valid builtin")
    }

    /// Looks up a built-in kernel by its CLI token.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "absdiff" => Ok(Self::abs_diff()),
            "variance" => Ok(Self::variance()),
            other => Err(Error::Config(format!(
                "unknown kernel `{other}` (expected absdiff or variance)"
            ))),
        }
    }

    pub fn with_moment_order(mut self, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("moment order must be >= 1, got {p}")));
        }
        self.moment_order = p;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn moment_order(&self) -> f64 {
        self.moment_order
    }

    /// Checked evaluation: argument count and finiteness are validated.
    pub fn eval(&self, args: &[f64]) -> Result<f64> {
        self.check_args(args)?;
        Ok((self.eval)(args))
    }

    /// Unchecked evaluation for hot loops whose inputs were validated upstream.
    #[inline]
    pub(crate) fn eval_unchecked(&self, args: &[f64]) -> f64 {
        (self.eval)(args)
    }

    fn check_args(&self, args: &[f64]) -> Result<()> {
        if args.len() != self.arity {
            return Err(Error::Arity {
                kernel: self.name.clone(),
                expected: self.arity,
                got: args.len(),
            });
        }
        if let Some(x) = args.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("kernel argument {x}")));
        }
        Ok(())
    }
}

/// `h_c(x) = h(x)·1[|h(x)| ≤ c]`, optionally carrying its mean `θ_c` so that
/// the centered version `g_c = h_c − θ_c` can be evaluated.
#[derive(Debug, Clone)]
pub struct TruncatedKernel {
    base: Kernel,
    level: f64,
    center: Option<f64>,
}

impl TruncatedKernel {
    pub fn new(base: Kernel, level: f64) -> Result<Self> {
        if !(level > 0.0) {
            return Err(Error::Domain(format!(
                "truncation level must be > 0, got {level}"
            )));
        }
        Ok(Self {
            base,
            level,
            center: None,
        })
    }

    pub fn with_center(mut self, theta_c: f64) -> Result<Self> {
        if !theta_c.is_finite() {
            return Err(Error::NonFinite(format!("center {theta_c}")));
        }
        self.center = Some(theta_c);
        Ok(self)
    }

    pub fn base(&self) -> &Kernel {
        &self.base
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn center(&self) -> Option<f64> {
        self.center
    }

    /// The boundary `|h| = c` is kept.
    pub fn eval(&self, args: &[f64]) -> Result<f64> {
        let h = self.base.eval(args)?;
        Ok(truncate(h, self.level))
    }

    pub fn eval_centered(&self, args: &[f64]) -> Result<f64> {
        let center = self.center.ok_or(Error::CenterUnset)?;
        Ok(self.eval(args)? - center)
    }
}

#[inline]
pub(crate) fn truncate(h: f64, level: f64) -> f64 {
    if h.abs() <= level {
        h
    } else {
        0.0
    }
}
