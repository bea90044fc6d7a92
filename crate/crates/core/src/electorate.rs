//! Voter-type distributions, the polarization order and its pivot family,
//! and belief-distortion maps with the conservatism order.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::signals::{AuditReport, RealFn};

/// Slack in the polarization checker.
pub const POLARIZATION_TOL: f64 = 1e-9;

/// Margin required by the strict conservatism inequalities.
pub const CONSERVATISM_MARGIN: f64 = 1e-12;

/// Distribution `H` of voter types over the real line.
#[derive(Clone)]
pub struct Electorate {
    name: String,
    cdf: RealFn,
    pdf: RealFn,
    quantile: RealFn,
}

impl fmt::Debug for Electorate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Electorate").field("name", &self.name).finish()
    }
}

impl Electorate {
    pub fn from_fns(name: impl Into<String>, cdf: RealFn, pdf: RealFn, quantile: RealFn) -> Self {
        Self {
            name: name.into(),
            cdf,
            pdf,
            quantile,
        }
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::domain(format!("normal electorate mean must be finite, got {mean}")));
        }
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::domain(format!("normal electorate sd must be positive, got {sd}")));
        }
        let law = Normal::new(mean, sd).expect("validated parameters");
        Ok(Self::from_fns(
            format!("normal(mean={mean}, sd={sd})"),
            Arc::new(move |x| law.cdf(x)),
            Arc::new(move |x| law.pdf(x)),
            Arc::new(move |u| law.inverse_cdf(u)),
        ))
    }

    pub fn logistic(mean: f64, scale: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::domain(format!("logistic electorate mean must be finite, got {mean}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!("logistic electorate scale must be positive, got {scale}")));
        }
        Ok(Self::from_fns(
            format!("logistic(mean={mean}, scale={scale})"),
            Arc::new(move |x| 1.0 / (1.0 + (-(x - mean) / scale).exp())),
            Arc::new(move |x| {
                let z = (-((x - mean) / scale).abs()).exp();
                z / (scale * (1.0 + z) * (1.0 + z))
            }),
            Arc::new(move |u: f64| mean + scale * (u / (1.0 - u)).ln()),
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        (self.cdf)(x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !x.is_finite() {
            return 0.0;
        }
        (self.pdf)(x)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if u >= 1.0 {
            return f64::INFINITY;
        }
        (self.quantile)(u)
    }

    /// The pivot family `H_r(x) = H((1-r) x + r/2)`: mass moves away from
    /// 1/2 on both sides while `H_r(1/2) = H(1/2)`.
    pub fn polarize(&self, r: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::domain(format!("polarization index r = {r} outside [0, 1)")));
        }
        if r == 0.0 {
            return Ok(self.clone());
        }
        let (cdf, pdf, quantile) = (self.cdf.clone(), self.pdf.clone(), self.quantile.clone());
        let keep = 1.0 - r;
        let pivot = 0.5 * r;
        Ok(Self::from_fns(
            format!("polarize({}, r={r})", self.name),
            Arc::new(move |x| cdf(keep * x + pivot)),
            Arc::new(move |x| keep * pdf(keep * x + pivot)),
            Arc::new(move |u| (quantile(u) - pivot) / keep),
        ))
    }

    /// Probe-grid audit: monotone cdf, positive pdf, quantile round trip,
    /// and pdf consistent with the cdf.
    pub fn audit(&self, grid: &[f64]) -> AuditReport {
        let mut issues = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for &x in grid {
            let c = self.cdf(x);
            if let Some((px, pc)) = prev {
                if c < pc {
                    issues.push(format!("cdf decreases between x = {px} and x = {x}"));
                }
            }
            prev = Some((x, c));
            if !(self.pdf(x) > 0.0) {
                issues.push(format!("pdf not positive at x = {x}"));
            }
            if c > 1e-9 && c < 1.0 - 1e-9 && (self.quantile(c) - x).abs() > 1e-6 {
                issues.push(format!("quantile does not invert cdf at x = {x}"));
            }
            let h = 1e-5;
            let numeric = (self.cdf(x + h) - self.cdf(x - h)) / (2.0 * h);
            if (numeric - self.pdf(x)).abs() > 1e-5 * self.pdf(x).max(1.0) {
                issues.push(format!("pdf inconsistent with cdf at x = {x}"));
            }
        }
        AuditReport { issues }
    }
}

/// Outcome of an order check, with the grid points that failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    pub holds: bool,
    pub violations: Vec<f64>,
}

impl OrderReport {
    fn from_violations(violations: Vec<f64>) -> Self {
        Self {
            holds: violations.is_empty(),
            violations,
        }
    }
}

/// Whether `candidate` puts at least as much mass below every `x <= 1/2`
/// and at least as much above every `x >= 1/2` as `base`.
pub fn admits_greater_polarization(candidate: &Electorate, base: &Electorate, grid: &[f64]) -> Result<OrderReport> {
    if grid.is_empty() {
        return Err(Error::precondition("polarization grid is empty"));
    }
    let mut violations = Vec::new();
    for &x in grid {
        let (c, b) = (candidate.cdf(x), base.cdf(x));
        let low_ok = x > 0.5 || c >= b - POLARIZATION_TOL;
        let high_ok = x < 0.5 || c <= b + POLARIZATION_TOL;
        if !(low_ok && high_ok) {
            violations.push(x);
        }
    }
    Ok(OrderReport::from_violations(violations))
}

/// A strictly increasing belief distortion `beta` with `beta(0) = 0`: the
/// voter acts as if she had seen `beta(s)` after observing `s`.
#[derive(Clone)]
pub struct DistortionFn {
    name: String,
    forward: RealFn,
    inverse: RealFn,
}

impl fmt::Debug for DistortionFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistortionFn").field("name", &self.name).finish()
    }
}

impl DistortionFn {
    pub fn from_fns(name: impl Into<String>, forward: RealFn, inverse: RealFn) -> Self {
        Self {
            name: name.into(),
            forward,
            inverse,
        }
    }

    pub fn identity() -> Self {
        Self::from_fns("identity", Arc::new(|s| s), Arc::new(|s| s))
    }

    /// `beta(s) = sign(s) |s|^k`.
    pub fn power(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::domain(format!("power distortion exponent must be positive, got {k}")));
        }
        let inv = 1.0 / k;
        Ok(Self::from_fns(
            format!("power(k={k})"),
            Arc::new(move |s: f64| s.signum() * s.abs().powf(k)),
            Arc::new(move |s: f64| s.signum() * s.abs().powf(inv)),
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn forward(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        (self.forward)(s)
    }

    pub fn inverse(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        (self.inverse)(s)
    }

    /// Probe-grid audit: strict monotonicity, fixed zero, round trip.
    pub fn audit(&self, grid: &[f64]) -> AuditReport {
        let mut issues = Vec::new();
        if self.forward(0.0) != 0.0 {
            issues.push("beta(0) is not 0".to_string());
        }
        let mut prev: Option<(f64, f64)> = None;
        for &s in grid {
            let b = self.forward(s);
            if let Some((ps, pb)) = prev {
                if !(b > pb) {
                    issues.push(format!("beta not increasing between s = {ps} and s = {s}"));
                }
            }
            prev = Some((s, b));
            if (self.inverse(b) - s).abs() > 1e-8 * s.abs().max(1.0) {
                issues.push(format!("inverse does not undo beta at s = {s}"));
            }
        }
        AuditReport { issues }
    }
}

/// `beta_r(s) = beta(s) / r`.
pub fn scale_distortion(base: &DistortionFn, r: f64) -> Result<DistortionFn> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("distortion scale r must be positive, got {r}")));
    }
    if r == 1.0 {
        return Ok(base.clone());
    }
    let (forward, inverse) = (base.forward.clone(), base.inverse.clone());
    Ok(DistortionFn::from_fns(
        format!("scale({}, r={r})", base.name),
        Arc::new(move |s| forward(s) / r),
        Arc::new(move |s| inverse(r * s)),
    ))
}

/// Whether `candidate` pulls every grid signal strictly closer to zero than
/// `base` does.
pub fn is_more_conservative(candidate: &DistortionFn, base: &DistortionFn, grid: &[f64]) -> Result<OrderReport> {
    if !grid.iter().any(|&s| s < 0.0) || !grid.iter().any(|&s| s > 0.0) {
        return Err(Error::precondition(
            "conservatism grid needs both negative and positive points",
        ));
    }
    if grid.iter().any(|&s| s == 0.0 || s.is_nan()) {
        return Err(Error::precondition("conservatism grid must not contain zero"));
    }
    let violations = grid
        .iter()
        .copied()
        .filter(|&s| {
            let (c, b) = (candidate.forward(s), base.forward(s));
            if s < 0.0 {
                !(c > b + CONSERVATISM_MARGIN)
            } else {
                !(c < b - CONSERVATISM_MARGIN)
            }
        })
        .collect();
    Ok(OrderReport::from_violations(violations))
}

/// Configuration record for a type distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectorateSpec {
    #[serde(flatten)]
    pub family: ElectorateFamily,
    /// Pivot-family index applied on top of the base law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarize: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ElectorateFamily {
    Normal { mean: f64, sd: f64 },
    Logistic { mean: f64, scale: f64 },
}

impl ElectorateSpec {
    pub fn base(&self) -> Result<Electorate> {
        match self.family {
            ElectorateFamily::Normal { mean, sd } => Electorate::normal(mean, sd),
            ElectorateFamily::Logistic { mean, scale } => Electorate::logistic(mean, scale),
        }
    }

    pub fn build(&self) -> Result<Electorate> {
        let base = self.base()?;
        match self.polarize {
            Some(r) => base.polarize(r),
            None => Ok(base),
        }
    }
}

/// Configuration record for a belief distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distortion", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistortionSpec {
    Identity,
    Power { k: f64 },
    /// `s / r`, the identity scaled down by `r`.
    Scale { r: f64 },
}

impl DistortionSpec {
    pub fn build(&self) -> Result<DistortionFn> {
        match *self {
            DistortionSpec::Identity => Ok(DistortionFn::identity()),
            DistortionSpec::Power { k } => DistortionFn::power(k),
            DistortionSpec::Scale { r } => scale_distortion(&DistortionFn::identity(), r),
        }
    }
}
