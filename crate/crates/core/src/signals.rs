//! Information structures: state-conditional signal laws, likelihood
//! ratios, no-troll posteriors, decision cutoffs and the informativeness
//! order on cutoff error rates.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::numerics::{bisect, expand_bracket, BisectOptions};

/// Shared real-valued function.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tolerance on `m(s) - x/(1-x)` when a cutoff is found by bisection.
pub const CUTOFF_TOL: f64 = 1e-10;

/// Slack allowed by the informativeness checker.
pub const INFORMATIVENESS_TOL: f64 = 1e-9;

/// The binary state of the world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    /// theta = 0: the government is incompetent.
    #[serde(rename = "0")]
    Low,
    /// theta = 1: the government is competent.
    #[serde(rename = "1")]
    High,
}

impl State {
    pub const BOTH: [State; 2] = [State::Low, State::High];

    pub fn index(self) -> usize {
        match self {
            State::Low => 0,
            State::High => 1,
        }
    }

    pub fn from_index(theta: u8) -> Result<Self> {
        match theta {
            0 => Ok(State::Low),
            1 => Ok(State::High),
            other => Err(Error::domain(format!("state must be 0 or 1, got {other}"))),
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

struct Inner {
    name: String,
    density: [RealFn; 2],
    cdf: [RealFn; 2],
    sf: Option<[RealFn; 2]>,
    quantile: Option<[RealFn; 2]>,
    likelihood_ratio: Option<RealFn>,
    cutoff: Option<RealFn>,
    support_probe: (f64, f64),
}

/// An information structure `(F0, F1)` with densities, cdfs and optional
/// closed forms. Cheap to clone; all evaluations are pure.
#[derive(Clone)]
pub struct SignalModel {
    inner: Arc<Inner>,
}

impl fmt::Debug for SignalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SignalModel")
            .field("name", &self.inner.name)
            .field("support_probe", &self.inner.support_probe)
            .finish()
    }
}

/// Builder for user-supplied information structures.
pub struct SignalModelBuilder {
    inner: Inner,
}

impl SignalModelBuilder {
    /// Survival functions `1 - F_theta`, for accurate upper tails.
    pub fn survival(mut self, sf0: RealFn, sf1: RealFn) -> Self {
        self.inner.sf = Some([sf0, sf1]);
        self
    }

    pub fn quantile(mut self, q0: RealFn, q1: RealFn) -> Self {
        self.inner.quantile = Some([q0, q1]);
        self
    }

    /// Closed-form `f1/f0`; used in place of the density quotient.
    pub fn likelihood_ratio(mut self, m: RealFn) -> Self {
        self.inner.likelihood_ratio = Some(m);
        self
    }

    /// Closed-form `s*(x)`.
    pub fn cutoff(mut self, cutoff: RealFn) -> Self {
        self.inner.cutoff = Some(cutoff);
        self
    }

    pub fn build(self) -> SignalModel {
        SignalModel {
            inner: Arc::new(self.inner),
        }
    }
}

impl SignalModel {
    /// Starts a model from densities and cdfs. `support_probe` is a finite
    /// bracket used to seed root searches; it is expanded when too narrow.
    pub fn builder(
        name: impl Into<String>,
        density: [RealFn; 2],
        cdf: [RealFn; 2],
        support_probe: (f64, f64),
    ) -> SignalModelBuilder {
        SignalModelBuilder {
            inner: Inner {
                name: name.into(),
                density,
                cdf,
                sf: None,
                quantile: None,
                likelihood_ratio: None,
                cutoff: None,
                support_probe,
            },
        }
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        GaussianFamily::new(mu, sigma).map(|g| g.model())
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn support_probe(&self) -> (f64, f64) {
        self.inner.support_probe
    }

    pub fn has_closed_form_cutoff(&self) -> bool {
        self.inner.cutoff.is_some()
    }

    pub fn density(&self, state: State, s: f64) -> f64 {
        (self.inner.density[state.index()])(s)
    }

    pub fn cdf(&self, state: State, s: f64) -> f64 {
        if s == f64::NEG_INFINITY {
            return 0.0;
        }
        if s == f64::INFINITY {
            return 1.0;
        }
        (self.inner.cdf[state.index()])(s)
    }

    /// `1 - F_theta(s)`, from the survival closure when one was supplied.
    pub fn sf(&self, state: State, s: f64) -> f64 {
        if s == f64::NEG_INFINITY {
            return 1.0;
        }
        if s == f64::INFINITY {
            return 0.0;
        }
        match &self.inner.sf {
            Some(sf) => (sf[state.index()])(s),
            None => 1.0 - self.cdf(state, s),
        }
    }

    /// `F0(s) - F1(s)`, evaluated on whichever side avoids cancellation.
    pub fn cdf_gap(&self, s: f64) -> f64 {
        if !s.is_finite() {
            return 0.0;
        }
        let f1 = self.cdf(State::High, s);
        if f1 <= 0.5 {
            self.cdf(State::Low, s) - f1
        } else {
            self.sf(State::High, s) - self.sf(State::Low, s)
        }
    }

    /// Signal with `F_theta(s) = u`, by closed form or bisection on the cdf.
    pub fn quantile(&self, state: State, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!("quantile level {u} outside [0, 1]")));
        }
        if u == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if u == 1.0 {
            return Ok(f64::INFINITY);
        }
        if let Some(q) = &self.inner.quantile {
            return Ok((q[state.index()])(u));
        }
        let g = |s: f64| self.cdf(state, s) - u;
        let (lo, hi) = expand_bracket(g, self.inner.support_probe.0, self.inner.support_probe.1, true)?;
        let opts = BisectOptions {
            x_tol: 1e-12,
            ..Default::default()
        };
        Ok(bisect(g, lo, hi, &opts)?.root)
    }

    /// `m(s) = f1(s)/f0(s)`.
    pub fn likelihood_ratio(&self, s: f64) -> Result<f64> {
        if let Some(m) = &self.inner.likelihood_ratio {
            return Ok(m(s));
        }
        let f0 = self.density(State::Low, s);
        if !(f0 >= f64::MIN_POSITIVE) {
            return Err(Error::domain(format!(
                "f0({s}) = {f0:e} underflows; likelihood ratio undefined"
            )));
        }
        Ok(self.density(State::High, s) / f0)
    }

    /// `pi(s) = m(s)/(m(s)+1)`: the belief in state 1 after signal `s` when
    /// no trolls are present.
    pub fn posterior_no_trolls(&self, s: f64) -> Result<f64> {
        match self.likelihood_ratio(s) {
            Ok(m) if m.is_infinite() => Ok(1.0),
            Ok(m) => Ok(m / (m + 1.0)),
            Err(err) => {
                if self.density(State::High, s) > 0.0 {
                    Ok(1.0)
                } else {
                    Err(err)
                }
            }
        }
    }

    /// `s*(x) = m^{-1}(x/(1-x))`: the lowest signal after which a type-`x`
    /// voter supports the government.
    pub fn cutoff(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::domain(format!("type x = {x} outside (0, 1)")));
        }
        if let Some(cutoff) = &self.inner.cutoff {
            return Ok(cutoff(x));
        }
        let target = x / (1.0 - x);
        let g = |s: f64| match self.likelihood_ratio(s) {
            Ok(m) => m - target,
            // underflowing f0 only happens far in a tail; the sign is known there
            Err(_) => {
                if s > 0.0 {
                    f64::INFINITY
                } else {
                    -target
                }
            }
        };
        let (lo, hi) = expand_bracket(g, self.inner.support_probe.0, self.inner.support_probe.1, true)?;
        let opts = BisectOptions {
            f_tol: CUTOFF_TOL * target.max(1.0),
            ..Default::default()
        };
        Ok(bisect(g, lo, hi, &opts)?.root)
    }

    /// Probe-grid audit of the modelling assumptions.
    pub fn audit(&self, grid: &[f64]) -> AuditReport {
        let mut issues = Vec::new();
        let f0 = self.density(State::Low, 0.0);
        let f1 = self.density(State::High, 0.0);
        if (f0 - f1).abs() > 1e-12 * f0.max(f1).max(1.0) {
            issues.push(format!("f0(0) = {f0} differs from f1(0) = {f1}"));
        }
        let mut prev: Option<(f64, f64)> = None;
        for &s in grid {
            match self.likelihood_ratio(s) {
                Ok(m) => {
                    if let Some((ps, pm)) = prev {
                        if !(m > pm) {
                            issues.push(format!("MLRP fails between s = {ps} and s = {s}"));
                        }
                    }
                    prev = Some((s, m));
                }
                Err(e) => issues.push(e.to_string()),
            }
            let gap = self.cdf_gap(s);
            let saturated = self.cdf(State::Low, s) == 0.0 || self.sf(State::High, s) == 0.0;
            if gap < 0.0 || (gap == 0.0 && !saturated) {
                issues.push(format!("FOSD fails at s = {s}: F0 - F1 = {gap:e}"));
            }
            for state in State::BOTH {
                let h = 1e-4;
                let lo = self.cdf(state, s - h);
                let hi = self.cdf(state, s + h);
                if hi < lo {
                    issues.push(format!("cdf {state} decreases near s = {s}"));
                }
                let numeric = (hi - lo) / (2.0 * h);
                let exact = self.density(state, s);
                if (numeric - exact).abs() > 1e-6 {
                    issues.push(format!(
                        "density {state} inconsistent with cdf at s = {s}: {exact} vs {numeric}"
                    ));
                }
            }
        }
        AuditReport { issues }
    }
}

/// Outcome of [`SignalModel::audit`] or [`crate::electorate::Electorate::audit`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub issues: Vec<String>,
}

impl AuditReport {
    pub fn passes(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Gaussian mean-separation family: in state theta the signal is
/// `N((2 theta - 1) mu, sigma^2)`, so `m(s) = exp(2 mu s / sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFamily {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianFamily {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::domain(format!("gaussian mu must be positive, got {mu}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("gaussian sigma must be positive, got {sigma}")));
        }
        Ok(Self { mu, sigma })
    }

    /// Informativeness index `r` with `mu = e^r`, unit sigma.
    pub fn from_index(r: f64) -> Result<Self> {
        Self::new(r.exp(), 1.0)
    }

    pub fn model(&self) -> SignalModel {
        let (mu, sigma) = (self.mu, self.sigma);
        let laws = [
            Normal::new(-mu, sigma).expect("validated parameters"),
            Normal::new(mu, sigma).expect("validated parameters"),
        ];
        let [n0, n1] = laws;
        let pdf = |n: Normal| -> RealFn { Arc::new(move |s| n.pdf(s)) };
        let cdf = |n: Normal| -> RealFn { Arc::new(move |s| n.cdf(s)) };
        let sf = |n: Normal| -> RealFn { Arc::new(move |s| n.sf(s)) };
        let quantile = |n: Normal| -> RealFn { Arc::new(move |u| n.inverse_cdf(u)) };
        let slope = 2.0 * mu / (sigma * sigma);
        let probe = mu + 10.0 * sigma;
        SignalModel::builder(
            format!("gaussian(mu={mu}, sigma={sigma})"),
            [pdf(n0), pdf(n1)],
            [cdf(n0), cdf(n1)],
            (-probe, probe),
        )
        .survival(sf(n0), sf(n1))
        .quantile(quantile(n0), quantile(n1))
        .likelihood_ratio(Arc::new(move |s| (slope * s).exp()))
        .cutoff(Arc::new(move |x| (x / (1.0 - x)).ln() / slope))
        .build()
    }
}

/// Generalized normal (exponential power) family: in state theta the
/// signal has density proportional to `exp(-|(s - loc)/scale|^shape)` with
/// `loc = (2 theta - 1) mu`. For `shape > 1` the likelihood ratio is
/// unbounded and strictly increasing; only `shape = 2` has a closed-form
/// cutoff, so the others go through bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedNormalFamily {
    pub mu: f64,
    pub scale: f64,
    pub shape: f64,
}

impl GeneralizedNormalFamily {
    pub fn new(mu: f64, scale: f64, shape: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::domain(format!("generalized normal mu must be positive, got {mu}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!(
                "generalized normal scale must be positive, got {scale}"
            )));
        }
        if !(shape > 1.0 && shape.is_finite()) {
            return Err(Error::domain(format!(
                "generalized normal shape must exceed 1 for an unbounded likelihood ratio, got {shape}"
            )));
        }
        Ok(Self { mu, scale, shape })
    }

    pub fn model(&self) -> SignalModel {
        let (mu, b, p) = (self.mu, self.scale, self.shape);
        let inv_p = 1.0 / p;
        let log_norm = (p / (2.0 * b)).ln() - ln_gamma(inv_p);
        // P(Z < -|z|) for the standardized law
        let lower_tail = move |z: f64| {
            let t = z.abs().powf(p);
            if t == 0.0 {
                0.5
            } else {
                0.5 * gamma_ur(inv_p, t)
            }
        };
        let pdf = |loc: f64| -> RealFn { Arc::new(move |s: f64| (log_norm - ((s - loc) / b).abs().powf(p)).exp()) };
        let cdf = |loc: f64| -> RealFn {
            Arc::new(move |s: f64| {
                let z = (s - loc) / b;
                if z <= 0.0 {
                    lower_tail(z)
                } else {
                    1.0 - lower_tail(z)
                }
            })
        };
        let sf = |loc: f64| -> RealFn {
            Arc::new(move |s: f64| {
                let z = (s - loc) / b;
                if z >= 0.0 {
                    lower_tail(z)
                } else {
                    1.0 - lower_tail(z)
                }
            })
        };
        let bp = b.powf(p);
        let probe = mu + 10.0 * b;
        SignalModel::builder(
            format!("generalized_normal(mu={mu}, scale={b}, shape={p})"),
            [pdf(-mu), pdf(mu)],
            [cdf(-mu), cdf(mu)],
            (-probe, probe),
        )
        .survival(sf(-mu), sf(mu))
        .likelihood_ratio(Arc::new(move |s: f64| {
            (((s + mu).abs().powf(p) - (s - mu).abs().powf(p)) / bp).exp()
        }))
        .build()
    }
}

/// Configuration record for a parametric information structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    Gaussian {
        mu: f64,
        #[serde(default = "unit")]
        sigma: f64,
    },
    GeneralizedNormal {
        mu: f64,
        #[serde(default = "unit")]
        scale: f64,
        shape: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl SignalSpec {
    pub fn build(&self) -> Result<SignalModel> {
        match *self {
            SignalSpec::Gaussian { mu, sigma } => Ok(GaussianFamily::new(mu, sigma)?.model()),
            SignalSpec::GeneralizedNormal { mu, scale, shape } => {
                Ok(GeneralizedNormalFamily::new(mu, scale, shape)?.model())
            }
        }
    }

    /// Same family with its separation replaced by `e^r`.
    pub fn with_index(&self, r: f64) -> Result<SignalModel> {
        match *self {
            SignalSpec::Gaussian { sigma, .. } => Ok(GaussianFamily::new(r.exp(), sigma)?.model()),
            SignalSpec::GeneralizedNormal { scale, shape, .. } => {
                Ok(GeneralizedNormalFamily::new(r.exp(), scale, shape)?.model())
            }
        }
    }

    pub fn separation(&self) -> f64 {
        match *self {
            SignalSpec::Gaussian { mu, .. } | SignalSpec::GeneralizedNormal { mu, .. } => mu,
        }
    }
}

/// Outcome of the informativeness check: `holds` with the grid types where
/// either error-rate comparison failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InformativenessReport {
    pub holds: bool,
    pub violations: Vec<f64>,
}

/// Checks on `type_grid` whether `candidate` is more informative than
/// `baseline`: at each type the candidate's cutoff rejects at least as often
/// in state 0 and accepts at least as often in state 1.
pub fn is_more_informative(
    candidate: &SignalModel,
    baseline: &SignalModel,
    type_grid: &[f64],
) -> Result<InformativenessReport> {
    if type_grid.is_empty() {
        return Err(Error::precondition("informativeness grid is empty"));
    }
    let mut violations = Vec::new();
    for &x in type_grid {
        let sc = candidate.cutoff(x)?;
        let sb = baseline.cutoff(x)?;
        let rejects_more = candidate.cdf(State::Low, sc) >= baseline.cdf(State::Low, sb) - INFORMATIVENESS_TOL;
        // compare F1 through survival functions to keep upper-tail precision
        let accepts_more = candidate.sf(State::High, sc) >= baseline.sf(State::High, sb) - INFORMATIVENESS_TOL;
        if !(rejects_more && accepts_more) {
            violations.push(x);
        }
    }
    Ok(InformativenessReport {
        holds: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{linspace, type_grid};
    use proptest::prelude::*;
    use statrs::function::erf::erfc;

    fn std_normal_cdf(z: f64) -> f64 {
        0.5 * erfc(-z / std::f64::consts::SQRT_2)
    }

    #[test]
    fn ratio_is_one_at_zero() {
        let m = SignalModel::gaussian(1.0, 1.0).unwrap();
        assert!((m.likelihood_ratio(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((m.posterior_no_trolls(0.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gaussian_ratio_and_posterior_at_one() {
        let m = SignalModel::gaussian(0.5, 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((m.likelihood_ratio(1.0).unwrap() - e).abs() < 1e-12);
        assert!((m.posterior_no_trolls(1.0).unwrap() - e / (e + 1.0)).abs() < 1e-12);
        assert!((m.posterior_no_trolls(1.0).unwrap() - 0.731_059).abs() < 1e-6);
    }

    #[test]
    fn closed_form_ratio_matches_density_quotient() {
        let g = SignalModel::gaussian(0.7, 1.3).unwrap();
        for s in linspace(-5.0, 5.0, 101) {
            let quotient = g.density(State::High, s) / g.density(State::Low, s);
            let closed = (2.0 * 0.7 * s / (1.3 * 1.3)).exp();
            assert!((quotient / closed - 1.0).abs() < 1e-9, "s = {s}");
            assert!((g.likelihood_ratio(s).unwrap() / closed - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_tends_to_one() {
        let m = SignalModel::gaussian(1.0, 1.0).unwrap();
        assert!(m.posterior_no_trolls(50.0).unwrap() > 1.0 - 1e-15);
        assert_eq!(m.posterior_no_trolls(1e6).unwrap(), 1.0);
    }

    #[test]
    fn cutoff_at_half_is_zero() {
        let g = SignalModel::gaussian(1.0, 1.0).unwrap();
        let l = GeneralizedNormalFamily::new(1.0, 1.0, 1.5).unwrap().model();
        assert!(g.cutoff(0.5).unwrap().abs() < 1e-15);
        assert!(l.cutoff(0.5).unwrap().abs() < 1e-9);
    }

    #[test]
    fn gaussian_cutoff_closed_form() {
        let (mu, sigma) = (0.8, 1.5);
        let g = SignalModel::gaussian(mu, sigma).unwrap();
        for x in [0.05f64, 0.2, 0.5, 0.7, 0.999] {
            let expected = sigma * sigma / (2.0 * mu) * (x / (1.0 - x)).ln();
            assert!((g.cutoff(x).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn bisection_cutoff_meets_ratio_tolerance() {
        let l = GeneralizedNormalFamily::new(0.6, 0.8, 1.5).unwrap().model();
        for x in [0.01, 0.1, 0.3, 0.6, 0.9, 0.999] {
            let s = l.cutoff(x).unwrap();
            let target = x / (1.0 - x);
            let m = l.likelihood_ratio(s).unwrap();
            assert!((m - target).abs() <= CUTOFF_TOL * target.max(1.0), "x = {x}: {m} vs {target}");
        }
    }

    #[test]
    fn cutoff_rejects_types_outside_unit_interval() {
        let g = SignalModel::gaussian(1.0, 1.0).unwrap();
        for x in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(g.cutoff(x), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn density_underflow_is_a_domain_error() {
        let n0 = Normal::new(-1.0, 1.0).unwrap();
        let n1 = Normal::new(1.0, 1.0).unwrap();
        let m = SignalModel::builder(
            "raw gaussian",
            [Arc::new(move |s| n0.pdf(s)), Arc::new(move |s| n1.pdf(s))],
            [Arc::new(move |s| n0.cdf(s)), Arc::new(move |s| n1.cdf(s))],
            (-10.0, 10.0),
        )
        .build();
        assert!((m.likelihood_ratio(1.0).unwrap() - 2f64.exp()).abs() < 1e-12);
        let err = m.likelihood_ratio(-60.0).unwrap_err();
        assert!(err.to_string().contains("-60"));
        // the generic cutoff agrees with the closed form
        let s = m.cutoff(0.3).unwrap();
        assert!((s - 0.5 * (0.3f64 / 0.7).ln()).abs() < 1e-9);
    }

    #[test]
    fn builtin_families_pass_audit() {
        let grid = linspace(-10.0, 10.0, 1000);
        for model in [
            SignalModel::gaussian(1.0, 1.0).unwrap(),
            SignalModel::gaussian(0.05, 2.0).unwrap(),
            SignalModel::gaussian(4.0, 1.0).unwrap(),
            GeneralizedNormalFamily::new(1.0, 1.0, 1.5).unwrap().model(),
        ] {
            let report = model.audit(&grid);
            assert!(report.passes(), "{}: {:?}", model.name(), report.issues);
        }
    }

    #[test]
    fn audit_flags_decreasing_ratio() {
        // states swapped: m is decreasing and F0 < F1
        let n0 = Normal::new(1.0, 1.0).unwrap();
        let n1 = Normal::new(-1.0, 1.0).unwrap();
        let m = SignalModel::builder(
            "swapped",
            [Arc::new(move |s| n0.pdf(s)), Arc::new(move |s| n1.pdf(s))],
            [Arc::new(move |s| n0.cdf(s)), Arc::new(move |s| n1.cdf(s))],
            (-10.0, 10.0),
        )
        .build();
        let report = m.audit(&linspace(-3.0, 3.0, 50));
        assert!(report.issues.iter().any(|i| i.contains("MLRP")));
        assert!(report.issues.iter().any(|i| i.contains("FOSD")));
    }

    #[test]
    fn gaussian_cdf_uses_standard_normal() {
        let g = SignalModel::gaussian(1.0, 1.0).unwrap();
        assert!((g.cdf(State::Low, 0.0) - std_normal_cdf(1.0)).abs() < 1e-15);
        assert!((g.cdf(State::High, 0.0) - std_normal_cdf(-1.0)).abs() < 1e-15);
        // upper-tail gap keeps relative precision
        let gap = g.cdf_gap(12.0);
        let expected = 0.5 * erfc(11.0 / std::f64::consts::SQRT_2) - 0.5 * erfc(13.0 / std::f64::consts::SQRT_2);
        assert!((gap / expected - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let g = SignalModel::gaussian(1.0, 1.0).unwrap();
        let l = GeneralizedNormalFamily::new(1.0, 0.5, 3.0).unwrap().model();
        for u in [1e-6, 0.01, 0.3, 0.5, 0.9, 0.999_999] {
            for state in State::BOTH {
                for model in [&g, &l] {
                    let s = model.quantile(state, u).unwrap();
                    assert!((model.cdf(state, s) - u).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn informativeness_is_reflexive() {
        let g = SignalModel::gaussian(1.0, 1.0).unwrap();
        let report = is_more_informative(&g, &g, &type_grid(0.01)).unwrap();
        assert!(report.holds);
    }

    #[test]
    fn informativeness_checker_records_verdicts() {
        let grid: Vec<f64> = (3..=9).map(|k| k as f64 / 10.0).collect();
        let sharp = SignalModel::gaussian(2.0, 1.0).unwrap();
        let blunt = SignalModel::gaussian(1.0, 1.0).unwrap();
        // on {0.3, ..., 0.9} mu = 2 dominates mu = 1 (needs |ln(x/(1-x))| < 2)
        assert!(is_more_informative(&sharp, &blunt, &grid).unwrap().holds);
        assert!(!is_more_informative(&blunt, &sharp, &grid).unwrap().holds);

        // a sharper structure is not more informative for extreme types
        let a = SignalModel::gaussian(1.0, 1.0).unwrap();
        let b = SignalModel::gaussian(0.5, 1.0).unwrap();
        let report = is_more_informative(&a, &b, &[0.5, 0.7, 0.95]).unwrap();
        assert!(!report.holds);
        assert_eq!(report.violations, vec![0.95]);

        // near-flat pairs: the verdict is whatever both sides evaluate to
        let a = SignalModel::gaussian(0.05, 1.0).unwrap();
        let b = SignalModel::gaussian(0.01, 1.0).unwrap();
        let grid = [0.5, 0.7, 0.95];
        let expected = grid.iter().all(|&x: &f64| {
            let (sa, sb) = (0.5 / 0.05 * (x / (1.0 - x)).ln(), 0.5 / 0.01 * (x / (1.0 - x)).ln());
            let f0 = |mu: f64, s: f64| std_normal_cdf(s + mu);
            let g1 = |mu: f64, s: f64| std_normal_cdf(mu - s);
            f0(0.05, sa) >= f0(0.01, sb) - INFORMATIVENESS_TOL && g1(0.05, sa) >= g1(0.01, sb) - INFORMATIVENESS_TOL
        });
        assert_eq!(is_more_informative(&a, &b, &grid).unwrap().holds, expected);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let g = SignalModel::gaussian(1.0, 1.0).unwrap();
        assert!(is_more_informative(&g, &g, &[]).is_err());
    }

    #[test]
    fn config_records_parse() {
        let spec: SignalSpec = toml::from_str("family = \"gaussian\"\nmu = 2.0\nsigma = 0.5").unwrap();
        assert_eq!(spec, SignalSpec::Gaussian { mu: 2.0, sigma: 0.5 });
        let spec: SignalSpec = toml::from_str("family = \"generalized_normal\"\nmu = 1.0\nshape = 1.5").unwrap();
        assert_eq!(spec, SignalSpec::GeneralizedNormal { mu: 1.0, scale: 1.0, shape: 1.5 });
        assert!(toml::from_str::<SignalSpec>("family = \"cauchy\"\nmu = 1.0").is_err());
        assert!(SignalSpec::Gaussian { mu: -1.0, sigma: 1.0 }.build().is_err());
    }

    proptest! {
        #[test]
        fn ratio_strictly_increasing(mu in 0.05f64..5.0, sigma in 0.5f64..3.0, s in -8.0f64..8.0, ds in 1e-3f64..2.0) {
            let g = SignalModel::gaussian(mu, sigma).unwrap();
            prop_assert!(g.likelihood_ratio(s + ds).unwrap() > g.likelihood_ratio(s).unwrap());
        }

        #[test]
        fn cutoff_increasing_in_type(x in 0.01f64..0.98, dx in 1e-3f64..0.01) {
            let l = GeneralizedNormalFamily::new(0.9, 1.1, 1.5).unwrap().model();
            prop_assert!(l.cutoff(x + dx).unwrap() > l.cutoff(x).unwrap());
        }

        #[test]
        fn posterior_at_cutoff_recovers_type(k in 1usize..10, mu in 0.1f64..4.0) {
            let x = k as f64 / 10.0;
            for model in [SignalModel::gaussian(mu, 1.0).unwrap(), GeneralizedNormalFamily::new(mu, 1.0, 1.5).unwrap().model()] {
                let s = model.cutoff(x).unwrap();
                prop_assert!((model.posterior_no_trolls(s).unwrap() - x).abs() < 1e-6);
            }
        }

        #[test]
        fn informativeness_transitive(a in 0.5f64..6.0, b in 0.5f64..6.0, c in 0.5f64..6.0) {
            let grid: Vec<f64> = (2..=8).map(|k| k as f64 / 10.0).collect();
            let ma = SignalModel::gaussian(a, 1.0).unwrap();
            let mb = SignalModel::gaussian(b, 1.0).unwrap();
            let mc = SignalModel::gaussian(c, 1.0).unwrap();
            let ab = is_more_informative(&ma, &mb, &grid).unwrap().holds;
            let bc = is_more_informative(&mb, &mc, &grid).unwrap().holds;
            if ab && bc {
                prop_assert!(is_more_informative(&ma, &mc, &grid).unwrap().holds);
            }
        }
    }
}
