//! The sender's per-type problem: `kappa`, the optimal troll mass, troll
//! message laws, posteriors under trolls, and the reach-capped variant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bisect, BisectOptions};
use crate::signals::{SignalModel, State};

/// Types closer than this to 1/2 hit the vanishing `1 - 2x` denominator.
pub const SINGULAR_BAND: f64 = 1e-9;

/// Relative slack when deciding whether a mass pins the posterior at `x`.
const PIN_TOL: f64 = 1e-12;

/// Width tolerance for inverse-transform sampling of troll messages.
pub const SAMPLING_TOL: f64 = 1e-10;

fn check_type(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("type x = {x} outside (0, 1)")))
    }
}

fn check_regular(x: f64) -> Result<()> {
    check_type(x)?;
    if (x - 0.5).abs() < SINGULAR_BAND {
        return Err(Error::Singularity { x });
    }
    Ok(())
}

// x F0 - (1-x) F1 over 1 - 2x, written as x (F0 - F1)/(1 - 2x) - F1 so that
// the small gap carries the cancellation instead of the two cdfs.
fn kappa_unchecked(model: &SignalModel, x: f64, s: f64) -> f64 {
    if s == f64::NEG_INFINITY {
        return 0.0;
    }
    if s == f64::INFINITY {
        return -1.0;
    }
    x * model.cdf_gap(s) / (1.0 - 2.0 * x) - model.cdf(State::High, s)
}

// -1 - kappa for x > 1/2, from upper tails: (1-x)(F0 - F1)/(2x - 1) - (1 - F0).
fn upper_tail_unchecked(model: &SignalModel, x: f64, s: f64) -> f64 {
    if s == f64::INFINITY {
        return 0.0;
    }
    if s == f64::NEG_INFINITY {
        return -1.0;
    }
    (1.0 - x) * model.cdf_gap(s) / (2.0 * x - 1.0) - model.sf(State::Low, s)
}

/// `kappa_x(s) = (x F0(s) - (1-x) F1(s)) / (1 - 2x)`.
pub fn kappa(model: &SignalModel, x: f64, s: f64) -> Result<f64> {
    check_regular(x)?;
    if s.is_nan() {
        return Err(Error::domain("signal is NaN"));
    }
    Ok(kappa_unchecked(model, x, s))
}

/// `-1 - kappa_x(s)`, evaluated from upper tails; for `x > 1/2` and
/// `s >= s*(x)` it is the remaining kappa mass above `s`.
pub fn kappa_upper_tail(model: &SignalModel, x: f64, s: f64) -> Result<f64> {
    check_regular(x)?;
    if s.is_nan() {
        return Err(Error::domain("signal is NaN"));
    }
    Ok(upper_tail_unchecked(model, x, s))
}

/// `kappa'_x(s) = (x f0(s) - (1-x) f1(s)) / (1 - 2x)`.
pub fn kappa_prime(model: &SignalModel, x: f64, s: f64) -> Result<f64> {
    check_regular(x)?;
    Ok(kappa_prime_unchecked(model, x, s))
}

fn kappa_prime_unchecked(model: &SignalModel, x: f64, s: f64) -> f64 {
    (x * model.density(State::Low, s) - (1.0 - x) * model.density(State::High, s)) / (1.0 - 2.0 * x)
}

/// `kappa_x(s*)` for `x < 1/2`, or `-1 - kappa_x(s*)` for `x > 1/2`: the
/// odds `alpha/(1 - alpha)` of the optimal troll mass.
fn optimal_odds(model: &SignalModel, x: f64, cutoff: f64) -> f64 {
    let odds = if x < 0.5 {
        kappa_unchecked(model, x, cutoff)
    } else {
        upper_tail_unchecked(model, x, cutoff)
    };
    odds.max(0.0)
}

/// Smallest troll mass that carries every type-`x` voter to the sender's
/// preferred posterior. Equals 1 in the limit `x -> 1/2`.
pub fn optimal_mass(model: &SignalModel, x: f64) -> Result<f64> {
    check_type(x)?;
    if (x - 0.5).abs() < SINGULAR_BAND {
        return Ok(1.0);
    }
    let odds = optimal_odds(model, x, model.cutoff(x)?);
    Ok(odds / (1.0 + odds))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// No trolls.
    Empty,
    /// Support `[lo, s*]`, `lo` possibly `-inf`; only for `x < 1/2`.
    Lower { lo: f64 },
    /// Support `[s*, inf)`; only for `x > 1/2`.
    Upper,
}

/// Troll mass and message law aimed at one voter type. Message densities
/// are `scale * kappa'_x` on the support.
#[derive(Debug, Clone)]
pub struct TrollStrategy {
    model: SignalModel,
    x: f64,
    alpha: f64,
    scale: f64,
    cutoff: f64,
    shape: Shape,
    acceptance_threshold: f64,
}

impl TrollStrategy {
    /// No trolls. Types outside `(0, 1)` vote the same way in both states.
    pub fn none(model: &SignalModel, x: f64) -> Result<Self> {
        if x.is_nan() {
            return Err(Error::domain("type x is NaN"));
        }
        let threshold = if x <= 0.0 {
            f64::NEG_INFINITY
        } else if x >= 1.0 {
            f64::INFINITY
        } else {
            model.cutoff(x)?
        };
        Ok(Self {
            model: model.clone(),
            x,
            alpha: 0.0,
            scale: 0.0,
            cutoff: threshold,
            shape: Shape::Empty,
            acceptance_threshold: threshold,
        })
    }

    /// Mass `alpha` with density `scale * kappa'_x` on the region between
    /// `lo` and `s*(x)` (for `x < 1/2`) or above `s*(x)` (for `x > 1/2`,
    /// where `lo` is ignored). The acceptance threshold is the voter's best
    /// response to this law.
    pub fn kappa_shaped(model: &SignalModel, x: f64, alpha: f64, lo: f64) -> Result<Self> {
        check_regular(x)?;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain(format!("troll mass {alpha} outside (0, 1]")));
        }
        let cutoff = model.cutoff(x)?;
        let (shape, mass) = if x < 0.5 {
            if !(lo < cutoff) {
                return Err(Error::domain(format!(
                    "support start {lo} must lie below s*(x) = {cutoff}"
                )));
            }
            (
                Shape::Lower { lo },
                kappa_unchecked(model, x, cutoff) - kappa_unchecked(model, x, lo),
            )
        } else {
            (Shape::Upper, upper_tail_unchecked(model, x, cutoff))
        };
        if !(mass > 0.0) {
            return Err(Error::Convergence(format!(
                "troll support for x = {x} carries no kappa mass"
            )));
        }
        let mut strategy = Self {
            model: model.clone(),
            x,
            alpha,
            scale: 1.0 / mass,
            cutoff,
            shape,
            acceptance_threshold: cutoff,
        };
        strategy.acceptance_threshold = strategy.best_response_threshold();
        Ok(strategy)
    }

    // On the support the posterior sits at, above, or below x uniformly,
    // according to alpha against 1/(1 + scale).
    fn best_response_threshold(&self) -> f64 {
        let pin = 1.0 / (1.0 + self.scale);
        let slack = PIN_TOL * pin;
        match self.shape {
            Shape::Empty => self.cutoff,
            Shape::Lower { lo } => {
                if self.alpha >= pin - slack {
                    lo
                } else {
                    self.cutoff
                }
            }
            Shape::Upper => {
                if self.alpha <= pin + slack {
                    self.cutoff
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Same message law with a different mass.
    pub fn with_mass(&self, alpha: f64) -> Result<Self> {
        match self.shape {
            Shape::Empty => Err(Error::precondition("a strategy without trolls has no message law")),
            Shape::Lower { lo } => Self::kappa_shaped(&self.model, self.x, alpha, lo),
            Shape::Upper => Self::kappa_shaped(&self.model, self.x, alpha, self.cutoff),
        }
    }

    pub fn model(&self) -> &SignalModel {
        &self.model
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Multiplier of `kappa'_x` in the message density.
    pub fn density_scale(&self) -> f64 {
        self.scale
    }

    /// The no-troll cutoff `s*(x)` this strategy is built around.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Closed support, or `None` without trolls.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self.shape {
            Shape::Empty => None,
            Shape::Lower { lo } => Some((lo, self.cutoff)),
            Shape::Upper => Some((self.cutoff, f64::INFINITY)),
        }
    }

    /// Lowest signal after which the targeted voter supports the government.
    pub fn acceptance_threshold(&self) -> f64 {
        self.acceptance_threshold
    }

    fn in_support(&self, s: f64) -> bool {
        match self.support() {
            Some((lo, hi)) => s >= lo && s <= hi,
            None => false,
        }
    }

    pub fn density(&self, s: f64) -> f64 {
        if !self.in_support(s) || !s.is_finite() {
            return 0.0;
        }
        (self.scale * kappa_prime_unchecked(&self.model, self.x, s)).max(0.0)
    }

    /// Closed-form message cdf from `kappa` differences.
    pub fn cdf(&self, s: f64) -> f64 {
        let value = match self.shape {
            Shape::Empty => return 0.0,
            Shape::Lower { lo } => {
                if s <= lo {
                    return 0.0;
                }
                let t = s.min(self.cutoff);
                self.scale * (kappa_unchecked(&self.model, self.x, t) - kappa_unchecked(&self.model, self.x, lo))
            }
            Shape::Upper => {
                if s <= self.cutoff {
                    return 0.0;
                }
                self.scale
                    * (upper_tail_unchecked(&self.model, self.x, self.cutoff)
                        - upper_tail_unchecked(&self.model, self.x, s))
            }
        };
        value.clamp(0.0, 1.0)
    }

    /// Message with `cdf(s) = u`, by bisection on the closed-form cdf.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!("quantile level {u} outside [0, 1]")));
        }
        let (lo, hi) = self
            .support()
            .ok_or_else(|| Error::precondition("a strategy without trolls sends no messages"))?;
        if u == 0.0 {
            return Ok(lo);
        }
        if u == 1.0 {
            return Ok(hi);
        }
        let g = |s: f64| self.cdf(s) - u;
        let mut a = lo;
        let mut b = hi;
        let mut step = 1.0;
        while !a.is_finite() {
            let probe = b.min(self.cutoff) - step;
            if g(probe) <= 0.0 {
                a = probe;
            } else {
                step *= 2.0;
                if step > 1e300 {
                    return Err(Error::Convergence("troll quantile bracket diverged".into()));
                }
            }
        }
        step = 1.0;
        while !b.is_finite() {
            let probe = a.max(self.cutoff) + step;
            if g(probe) >= 0.0 {
                b = probe;
            } else {
                step *= 2.0;
                if step > 1e300 {
                    return Err(Error::Convergence("troll quantile bracket diverged".into()));
                }
            }
        }
        let opts = BisectOptions {
            x_tol: SAMPLING_TOL,
            ..Default::default()
        };
        Ok(bisect(g, a, b, &opts)?.root)
    }

    /// Probability that the targeted voter supports the government in
    /// `state` when she best-responds to this strategy.
    pub fn vote_probability(&self, state: State) -> f64 {
        let t = self.acceptance_threshold;
        let informative = self.model.sf(state, t);
        let troll = 1.0 - self.cdf(t);
        (1.0 - self.alpha) * informative + self.alpha * troll
    }
}

/// Prop-1 optimum for a regular type: mass `optimal_mass`, messages spread
/// so that the posterior equals `x` on the whole support.
pub fn optimal_strategy(model: &SignalModel, x: f64) -> Result<TrollStrategy> {
    check_regular(x)?;
    let alpha = optimal_mass(model, x)?;
    if alpha <= 0.0 {
        // s* so extreme that no kappa mass is left in double precision
        return TrollStrategy::none(model, x);
    }
    TrollStrategy::kappa_shaped(model, x, alpha, f64::NEG_INFINITY)
}

/// Belief in state 1 after signal `s` when a share `alpha` of messages
/// comes from `strategy`.
///
/// Densities are normalized by `f0 + f1` before mixing so that tails where
/// both densities underflow stay finite.
pub fn posterior_with_trolls(model: &SignalModel, strategy: &TrollStrategy, s: f64) -> Result<f64> {
    let w1 = model.posterior_no_trolls(s)?;
    let alpha = strategy.alpha;
    if alpha == 0.0 || !strategy.in_support(s) || !s.is_finite() {
        return Ok(w1);
    }
    let x = strategy.x;
    let troll = (strategy.scale * (x - w1) / (1.0 - 2.0 * x)).max(0.0);
    let num = (1.0 - alpha) * w1 + alpha * troll;
    let den = (1.0 - alpha) + 2.0 * alpha * troll;
    if den <= 0.0 {
        return Ok(w1);
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// Lower end of the capped support: the root of
/// `kappa_x(s*) - kappa_x(s) = cap/(1 - cap)` below `s*`.
pub fn s_hat(model: &SignalModel, x: f64, cap: f64) -> Result<f64> {
    check_regular(x)?;
    if x > 0.5 {
        return Err(Error::domain(format!("s_hat is defined for x < 1/2, got {x}")));
    }
    if !(cap > 0.0) {
        return Err(Error::domain(format!("reach cap must be positive, got {cap}")));
    }
    let alpha_star = optimal_mass(model, x)?;
    if cap >= alpha_star {
        return Err(Error::precondition(format!(
            "cap {cap} is not binding (optimal mass {alpha_star}); use the unconstrained optimal strategy"
        )));
    }
    let cutoff = model.cutoff(x)?;
    let k_star = kappa_unchecked(model, x, cutoff);
    let target = cap / (1.0 - cap);
    let g = |s: f64| k_star - kappa_unchecked(model, x, s) - target;
    let mut step = 1.0;
    let mut lo = cutoff - step;
    let mut doublings = 0;
    while g(lo) < 0.0 {
        step *= 2.0;
        lo = cutoff - step;
        doublings += 1;
        if doublings > crate::numerics::root::MAX_DOUBLINGS {
            return Err(Error::Convergence(format!("s_hat bracket for x = {x} diverged")));
        }
    }
    let opts = BisectOptions {
        f_tol: 1e-12,
        ..Default::default()
    };
    Ok(bisect(g, lo, cutoff, &opts)?.root)
}

/// Optimal strategy when at most `cap` of type `x`'s messages can be trolls.
pub fn constrained_strategy(model: &SignalModel, x: f64, cap: f64) -> Result<TrollStrategy> {
    check_regular(x)?;
    if !(cap > 0.0 && cap <= 1.0) {
        return Err(Error::domain(format!("reach cap {cap} outside (0, 1]")));
    }
    if cap >= optimal_mass(model, x)? {
        return optimal_strategy(model, x);
    }
    if x < 0.5 {
        let lo = s_hat(model, x, cap)?;
        let mut strategy = TrollStrategy::kappa_shaped(model, x, cap, lo)?;
        // the normalization pins the posterior at x on [s_hat, s*]
        strategy.scale = (1.0 - cap) / cap;
        strategy.acceptance_threshold = lo;
        Ok(strategy)
    } else {
        TrollStrategy::kappa_shaped(model, x, cap, f64::NAN)
    }
}

/// Upper bound on the troll mass per type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReachCap {
    Constant { value: f64 },
    /// Piecewise-linear in `x` through the given knots, flat beyond them.
    Table { x: Vec<f64>, cap: Vec<f64> },
    /// A fixed fraction of the unconstrained optimal mass.
    FractionOfOptimal { fraction: f64 },
}

impl ReachCap {
    pub fn constant(value: f64) -> Self {
        ReachCap::Constant { value }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        match self {
            ReachCap::Constant { value } if !in_unit(*value) => {
                Err(Error::domain(format!("reach cap {value} outside [0, 1]")))
            }
            ReachCap::FractionOfOptimal { fraction } if !in_unit(*fraction) => {
                Err(Error::domain(format!("reach cap fraction {fraction} outside [0, 1]")))
            }
            ReachCap::Table { x, cap } => {
                if x.is_empty() || x.len() != cap.len() {
                    return Err(Error::domain("reach cap table needs equally many knots and values"));
                }
                if x.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::domain("reach cap knots must be strictly increasing"));
                }
                if let Some(v) = cap.iter().find(|v| !in_unit(**v)) {
                    return Err(Error::domain(format!("reach cap {v} outside [0, 1]")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, model: &SignalModel, x: f64) -> Result<f64> {
        self.validate()?;
        match self {
            ReachCap::Constant { value } => Ok(*value),
            ReachCap::FractionOfOptimal { fraction } => Ok(fraction * optimal_mass(model, x)?),
            ReachCap::Table { x: knots, cap } => {
                let i = knots.partition_point(|&k| k <= x);
                Ok(if i == 0 {
                    cap[0]
                } else if i == knots.len() {
                    cap[knots.len() - 1]
                } else {
                    let w = (x - knots[i - 1]) / (knots[i] - knots[i - 1]);
                    cap[i - 1] + w * (cap[i] - cap[i - 1])
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate, linspace, QuadOptions};
    use crate::signals::GeneralizedNormalFamily;
    use proptest::prelude::*;
    use statrs::function::erf::erfc;

    fn phi(z: f64) -> f64 {
        0.5 * erfc(-z / std::f64::consts::SQRT_2)
    }

    fn unit() -> SignalModel {
        SignalModel::gaussian(1.0, 1.0).unwrap()
    }

    #[test]
    fn kappa_matches_standard_normal_evaluation() {
        let m = unit();
        let expected = (0.3 * phi(1.0) - 0.7 * phi(-1.0)) / 0.4;
        assert!((kappa(&m, 0.3, 0.0).unwrap() - expected).abs() < 1e-14);
        for x in [0.2, 0.45, 0.55, 0.9] {
            let direct = |s: f64| (x * m.cdf(State::Low, s) - (1.0 - x) * m.cdf(State::High, s)) / (1.0 - 2.0 * x);
            for s in [-3.0, -0.5, 0.0, 1.5] {
                assert!((kappa(&m, x, s).unwrap() - direct(s)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kappa_limits() {
        let m = unit();
        for x in [0.1, 0.4, 0.6, 0.9] {
            assert_eq!(kappa(&m, x, f64::NEG_INFINITY).unwrap(), 0.0);
            assert_eq!(kappa(&m, x, f64::INFINITY).unwrap(), -1.0);
            assert!(kappa(&m, x, -40.0).unwrap().abs() < 1e-12);
            assert!((kappa(&m, x, 40.0).unwrap() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_is_singular_at_half() {
        let m = unit();
        assert!(matches!(kappa(&m, 0.5, 0.0), Err(Error::Singularity { .. })));
        assert!(matches!(kappa(&m, 0.5 + 1e-10, 0.0), Err(Error::Singularity { .. })));
        assert!(kappa(&m, 0.5 + 1e-8, 0.0).is_ok());
    }

    #[test]
    fn kappa_prime_is_derivative() {
        let m = unit();
        for x in [0.3, 0.7] {
            for s in linspace(-3.0, 3.0, 13) {
                let h = 1e-5;
                let numeric = (kappa(&m, x, s + h).unwrap() - kappa(&m, x, s - h).unwrap()) / (2.0 * h);
                assert!((numeric - kappa_prime(&m, x, s).unwrap()).abs() < 1e-8);
            }
            let cutoff = m.cutoff(x).unwrap();
            assert!(kappa_prime(&m, x, cutoff).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn optimal_mass_edges() {
        let m = unit();
        assert_eq!(optimal_mass(&m, 0.5).unwrap(), 1.0);
        assert!(optimal_mass(&m, 1e-6).unwrap() < 1e-3);
        assert!(optimal_mass(&m, 1.0 - 1e-6).unwrap() < 1e-3);
        for k in 2..=5 {
            let d = 10f64.powi(-k);
            assert!(optimal_mass(&m, 0.5 - d).unwrap() > 0.9);
            assert!(optimal_mass(&m, 0.5 + d).unwrap() > 0.9);
        }
        for x in [0.0, 1.0, -0.5, 2.0] {
            assert!(matches!(optimal_mass(&m, x), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn optimal_mass_matches_direct_formula() {
        let m = unit();
        for x in [0.2, 0.4] {
            let k = kappa(&m, x, m.cutoff(x).unwrap()).unwrap();
            assert!((optimal_mass(&m, x).unwrap() - k / (k + 1.0)).abs() < 1e-12);
        }
        for x in [0.6, 0.8] {
            let k = kappa(&m, x, m.cutoff(x).unwrap()).unwrap();
            assert!((optimal_mass(&m, x).unwrap() - (k + 1.0) / k).abs() < 1e-12);
        }
    }

    #[test]
    fn optimal_density_vanishes_at_cutoff() {
        let m = unit();
        let st = optimal_strategy(&m, 0.3).unwrap();
        let cutoff = m.cutoff(0.3).unwrap();
        assert!(st.density(cutoff).abs() < 1e-14);
        assert!(st.density(cutoff - 1e-3) > 0.0);
        assert_eq!(st.density(cutoff + 1e-3), 0.0);
        assert_eq!(st.acceptance_threshold(), f64::NEG_INFINITY);
    }

    #[test]
    fn upper_strategy_cdf_endpoints() {
        let m = unit();
        let st = optimal_strategy(&m, 0.7).unwrap();
        let cutoff = m.cutoff(0.7).unwrap();
        assert_eq!(st.cdf(cutoff), 0.0);
        assert!((st.cdf(f64::INFINITY) - 1.0).abs() < 1e-12);
        assert_eq!(st.acceptance_threshold(), cutoff);
        assert_eq!(st.support(), Some((cutoff, f64::INFINITY)));
    }

    #[test]
    fn densities_integrate_to_one() {
        let opts = QuadOptions::default();
        for model in [unit(), GeneralizedNormalFamily::new(0.8, 1.2, 1.5).unwrap().model()] {
            for x in [0.1, 0.3, 0.45, 0.55, 0.7, 0.9] {
                let st = optimal_strategy(&model, x).unwrap();
                let (lo, hi) = st.support().unwrap();
                let mass = integrate(|s| st.density(s), lo, hi, &opts).unwrap().value;
                assert!((mass - 1.0).abs() < 1e-6, "x = {x}: {mass}");
                // quadrature agrees with the closed-form cdf inside the support
                let mid = if x < 0.5 { hi - 1.0 } else { lo + 1.0 };
                let partial = integrate(|s| st.density(s), lo, mid, &opts).unwrap().value;
                assert!((partial - st.cdf(mid)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn posterior_pinned_on_support() {
        let m = unit();
        for x in [0.1, 0.3, 0.7, 0.9] {
            let st = optimal_strategy(&m, x).unwrap();
            let cutoff = st.cutoff();
            let probes = if x < 0.5 {
                linspace(cutoff - 15.0, cutoff, 200)
            } else {
                linspace(cutoff, cutoff + 15.0, 200)
            };
            for s in probes {
                let p = posterior_with_trolls(&m, &st, s).unwrap();
                assert!((p - x).abs() < 1e-6, "x = {x}, s = {s}: {p}");
            }
        }
    }

    #[test]
    fn posterior_matches_density_mixture() {
        let m = unit();
        let st = optimal_strategy(&m, 0.3).unwrap();
        let a = st.alpha();
        for s in [-2.0, -1.0, 0.5, 2.0] {
            let t = st.density(s);
            let num = (1.0 - a) * m.density(State::High, s) + a * t;
            let den = num + (1.0 - a) * m.density(State::Low, s) + a * t;
            assert!((posterior_with_trolls(&m, &st, s).unwrap() - num / den).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mass_posterior_is_bayesian() {
        let m = unit();
        let st = TrollStrategy::none(&m, 0.3).unwrap();
        for s in [-3.0, 0.0, 2.0] {
            assert_eq!(posterior_with_trolls(&m, &st, s).unwrap(), m.posterior_no_trolls(s).unwrap());
        }
    }

    #[test]
    fn lower_types_always_persuaded() {
        let m = unit();
        for x in [0.05, 0.25, 0.45] {
            let st = optimal_strategy(&m, x).unwrap();
            for s in linspace(-30.0, 30.0, 601) {
                assert!(posterior_with_trolls(&m, &st, s).unwrap() >= x - 1e-9);
            }
            for state in State::BOTH {
                assert_eq!(st.vote_probability(state), 1.0);
            }
        }
    }

    #[test]
    fn upper_types_reject_low_signals() {
        let m = unit();
        for x in [0.55, 0.7, 0.95] {
            let st = optimal_strategy(&m, x).unwrap();
            for s in linspace(st.cutoff() - 20.0, st.cutoff() - 1e-6, 300) {
                assert!(posterior_with_trolls(&m, &st, s).unwrap() < x);
            }
        }
    }

    #[test]
    fn vote_probability_matches_closed_form() {
        let m = unit();
        for x in [0.55, 0.7, 0.9] {
            let st = optimal_strategy(&m, x).unwrap();
            let c = st.cutoff();
            let (f0, f1) = (m.cdf(State::Low, c), m.cdf(State::High, c));
            let n = x * f0 - (1.0 - x) * f1;
            for (state, f) in [(State::Low, f0), (State::High, f1)] {
                let expected = (n - (2.0 * x - 1.0) * f) / n;
                assert!((st.vote_probability(state) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn troll_quantile_inverts_cdf() {
        let m = unit();
        for x in [0.2, 0.7] {
            let st = optimal_strategy(&m, x).unwrap();
            for u in [1e-6, 0.1, 0.5, 0.9, 1.0 - 1e-6] {
                let s = st.quantile(u).unwrap();
                assert!((st.cdf(s) - u).abs() < 1e-8, "x = {x}, u = {u}");
            }
        }
    }

    #[test]
    fn s_hat_residual_and_limits() {
        let m = unit();
        let x = 0.4;
        let a = optimal_mass(&m, x).unwrap();
        let cutoff = m.cutoff(x).unwrap();
        let cap = 0.5 * a;
        let s = s_hat(&m, x, cap).unwrap();
        let residual = kappa(&m, x, cutoff).unwrap() - kappa(&m, x, s).unwrap() - cap / (1.0 - cap);
        assert!(residual.abs() <= 1e-9);
        assert!(s < cutoff);
        assert!(s_hat(&m, x, 1e-9).unwrap() > cutoff - 1e-3);
        assert!(s_hat(&m, x, a * (1.0 - 1e-9)).unwrap() < cutoff - 5.0);
        assert!(matches!(s_hat(&m, x, a), Err(Error::Precondition(_))));
        assert!(matches!(s_hat(&m, x, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn loose_cap_returns_optimum() {
        let m = unit();
        for x in [0.3, 0.7] {
            let free = optimal_strategy(&m, x).unwrap();
            let capped = constrained_strategy(&m, x, 1.0).unwrap();
            assert_eq!(free.alpha(), capped.alpha());
            for s in linspace(-4.0, 4.0, 41) {
                assert!((free.cdf(s) - capped.cdf(s)).abs() < 1e-9);
                assert!((free.density(s) - capped.density(s)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn capped_lower_type_pins_on_reduced_support() {
        let m = unit();
        let x = 0.4;
        let cap = 0.5 * optimal_mass(&m, x).unwrap();
        let st = constrained_strategy(&m, x, cap).unwrap();
        let (lo, hi) = st.support().unwrap();
        assert_eq!(st.acceptance_threshold(), lo);
        assert!((st.cdf(hi) - 1.0).abs() < 1e-9);
        for s in linspace(lo, hi, 100) {
            assert!((posterior_with_trolls(&m, &st, s).unwrap() - x).abs() < 1e-6);
        }
        for s in linspace(lo - 10.0, lo - 1e-6, 100) {
            assert!(posterior_with_trolls(&m, &st, s).unwrap() < x);
        }
    }

    #[test]
    fn capped_upper_type_keeps_acceptance_region() {
        let m = unit();
        let x = 0.7;
        let cap = 0.5 * optimal_mass(&m, x).unwrap();
        let st = constrained_strategy(&m, x, cap).unwrap();
        assert_eq!(st.alpha(), cap);
        assert_eq!(st.acceptance_threshold(), st.cutoff());
        for s in linspace(st.cutoff(), st.cutoff() + 10.0, 200) {
            assert!(posterior_with_trolls(&m, &st, s).unwrap() >= x - 1e-6);
        }
        for state in State::BOTH {
            let expected = cap + (1.0 - cap) * m.sf(state, st.cutoff());
            assert!((st.vote_probability(state) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn halved_mass_loses_low_signals() {
        let m = unit();
        let st = optimal_strategy(&m, 0.3).unwrap();
        let weak = st.with_mass(0.5 * st.alpha()).unwrap();
        assert_eq!(weak.acceptance_threshold(), st.cutoff());
        assert!(weak.vote_probability(State::Low) < 1.0);
    }

    #[test]
    fn reach_cap_values() {
        let m = unit();
        assert_eq!(ReachCap::constant(0.3).value(&m, 0.9).unwrap(), 0.3);
        let table = ReachCap::Table {
            x: vec![0.0, 0.5, 1.0],
            cap: vec![0.0, 1.0, 0.5],
        };
        assert!((table.value(&m, 0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!((table.value(&m, 0.75).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(table.value(&m, 2.0).unwrap(), 0.5);
        let frac = ReachCap::FractionOfOptimal { fraction: 0.5 };
        assert!((frac.value(&m, 0.3).unwrap() - 0.5 * optimal_mass(&m, 0.3).unwrap()).abs() < 1e-15);
        assert!(ReachCap::constant(1.5).validate().is_err());
        let bad = ReachCap::Table {
            x: vec![0.5, 0.2],
            cap: vec![0.1, 0.1],
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn cutoff_kappa_bounds(x in 0.01f64..0.99, mu in 0.2f64..3.0) {
            prop_assume!((x - 0.5).abs() > 1e-3);
            let m = SignalModel::gaussian(mu, 1.0).unwrap();
            let a = optimal_mass(&m, x).unwrap();
            prop_assert!(a > 0.0 && a < 1.0);
        }

        #[test]
        fn pinning_holds_across_models(x in 0.02f64..0.98, mu in 0.3f64..3.0, t in 0.0f64..1.0) {
            prop_assume!((x - 0.5).abs() > 1e-3);
            let m = SignalModel::gaussian(mu, 1.0).unwrap();
            let st = optimal_strategy(&m, x).unwrap();
            let c = st.cutoff();
            let s = if x < 0.5 { c - 10.0 * t } else { c + 10.0 * t };
            prop_assert!((posterior_with_trolls(&m, &st, s).unwrap() - x).abs() < 1e-6);
        }

        #[test]
        fn density_nonnegative(x in 0.02f64..0.98, s in -20.0f64..20.0) {
            prop_assume!((x - 0.5).abs() > 1e-3);
            let st = optimal_strategy(&unit(), x).unwrap();
            prop_assert!(st.density(s) >= 0.0);
            let c = st.cdf(s);
            prop_assert!((0.0..=1.0).contains(&c));
        }
    }
}
