//! Aggregate vote shares in each state, for every model variant, and the
//! resulting election regime.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::electorate::{DistortionFn, Electorate};
use crate::error::{Error, Result};
use crate::numerics::{integrate, Estimate, QuadOptions};
use crate::signals::{SignalModel, State};
use crate::strategy::{optimal_mass, s_hat, ReachCap, SINGULAR_BAND};

/// Absolute quadrature tolerance for vote shares.
pub const SHARE_TOL: f64 = 1e-7;

fn share_options() -> QuadOptions {
    QuadOptions::with_abs_tol(SHARE_TOL)
}

/// Which way the election goes across the two states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    LosesBoth,
    Aggregates,
    WinsBoth,
}

impl Regime {
    pub fn classify(v0: f64, v1: f64) -> Self {
        if v0 >= 0.5 {
            Regime::WinsBoth
        } else if v1 >= 0.5 {
            Regime::Aggregates
        } else {
            Regime::LosesBoth
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::LosesBoth => "LOSES_BOTH",
            Regime::Aggregates => "AGGREGATES",
            Regime::WinsBoth => "WINS_BOTH",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Government vote shares in state 0 and state 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoteShares {
    pub v0: f64,
    pub v1: f64,
    pub regime: Regime,
}

impl VoteShares {
    pub fn new(v0: f64, v1: f64) -> Self {
        Self {
            v0,
            v1,
            regime: Regime::classify(v0, v1),
        }
    }

    pub fn get(&self, state: State) -> f64 {
        match state {
            State::Low => self.v0,
            State::High => self.v1,
        }
    }
}

/// Model variant whose vote shares are requested.
#[derive(Debug, Clone)]
pub enum Variant {
    NoTrolls,
    Optimal,
    Constrained(ReachCap),
    Distorted(DistortionFn),
    Naive(f64),
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::NoTrolls => "no_trolls",
            Variant::Optimal => "optimal",
            Variant::Constrained(_) => "constrained",
            Variant::Distorted(_) => "distorted",
            Variant::Naive(_) => "naive",
        }
    }
}

// H(lo_mass) plus the integral of p * h over each piece of `pieces`.
fn aggregate<P>(electorate: &Electorate, base_mass: f64, pieces: &[(f64, f64)], per_type: P, opts: &QuadOptions) -> Result<Estimate>
where
    P: Fn(f64) -> Result<f64>,
{
    let mut total = Estimate {
        value: base_mass,
        abs_error: 0.0,
        evaluations: 0,
    };
    for &(a, b) in pieces {
        let failure = std::cell::RefCell::new(None);
        let est = integrate(
            |x| {
                let h = electorate.pdf(x);
                if h == 0.0 {
                    return 0.0;
                }
                match per_type(x) {
                    Ok(p) => p * h,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            a,
            b,
            opts,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        let est = est?;
        total.value += est.value;
        total.abs_error += est.abs_error;
        total.evaluations += est.evaluations;
    }
    total.value = total.value.clamp(0.0, 1.0);
    Ok(total)
}

const LOWER: (f64, f64) = (0.0, 0.5);
const UPPER: (f64, f64) = (0.5, 1.0);

/// Probability that a type-`x` voter backs the government without trolls.
pub fn vote_prob_no_trolls(model: &SignalModel, x: f64, state: State) -> Result<f64> {
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x >= 1.0 {
        return Ok(0.0);
    }
    Ok(model.sf(state, model.cutoff(x)?))
}

/// Share voting for the government without trolls: `H(0)` plus the
/// `H`-average of `1 - F_theta(s*(x))` over `(0, 1)`.
pub fn vote_share_no_trolls(model: &SignalModel, electorate: &Electorate, state: State) -> Result<f64> {
    Ok(vote_share_no_trolls_estimate(model, electorate, state, &share_options())?.value)
}

pub fn vote_share_no_trolls_estimate(
    model: &SignalModel,
    electorate: &Electorate,
    state: State,
    opts: &QuadOptions,
) -> Result<Estimate> {
    aggregate(
        electorate,
        electorate.cdf(0.0),
        &[LOWER, UPPER],
        |x| vote_prob_no_trolls(model, x, state),
        opts,
    )
}

// Per-type probability when the voter accepts exactly the signals above
// `b` and trolls carry the optimal mass for that acceptance set. Written
// over D = x (F0 - F1) + (2x - 1) F1 so that no 1 - 2x division remains.
fn upper_type_probability(model: &SignalModel, x: f64, b: f64, state: State) -> f64 {
    let gap = model.cdf_gap(b);
    let d = x * gap + (2.0 * x - 1.0) * model.cdf(State::High, b);
    let weight = match state {
        State::Low => 1.0 - x,
        State::High => x,
    };
    if !(d > 0.0) {
        // b so low that both cdfs underflow; the ratio tends to F1/F0 -> 0
        return match state {
            State::Low => (1.0 - x) / x,
            State::High => 1.0,
        };
    }
    (weight * gap / d).clamp(0.0, 1.0)
}

/// Vote probability of a type `x in (1/2, 1)` under the optimal strategy.
pub fn vote_prob_with_trolls(model: &SignalModel, x: f64, state: State) -> Result<f64> {
    if !(x > 0.5 && x < 1.0) {
        return Err(Error::domain(format!("type x = {x} outside (1/2, 1)")));
    }
    Ok(upper_type_probability(model, x, model.cutoff(x)?, state))
}

/// Share with optimal trolls: every type up to 1/2 is won over; above 1/2
/// the vote probability is the one induced by the optimal strategy.
pub fn vote_share_with_trolls(model: &SignalModel, electorate: &Electorate, state: State) -> Result<f64> {
    Ok(vote_share_with_trolls_estimate(model, electorate, state, &share_options())?.value)
}

pub fn vote_share_with_trolls_estimate(
    model: &SignalModel,
    electorate: &Electorate,
    state: State,
    opts: &QuadOptions,
) -> Result<Estimate> {
    aggregate(
        electorate,
        electorate.cdf(0.5),
        &[UPPER],
        |x| vote_prob_with_trolls(model, x, state),
        opts,
    )
}

/// Vote probability of type `x` when troll mass is capped at `cap`.
pub fn vote_prob_constrained(model: &SignalModel, x: f64, cap: f64, state: State) -> Result<f64> {
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x >= 1.0 {
        return Ok(0.0);
    }
    if !(0.0..=1.0).contains(&cap) {
        return Err(Error::domain(format!("reach cap {cap} outside [0, 1]")));
    }
    if (x - 0.5).abs() < SINGULAR_BAND {
        return Ok(if cap > 0.0 { 1.0 } else { vote_prob_no_trolls(model, x, state)? });
    }
    if cap == 0.0 {
        return vote_prob_no_trolls(model, x, state);
    }
    let alpha_star = optimal_mass(model, x)?;
    if cap >= alpha_star {
        return if x < 0.5 {
            Ok(1.0)
        } else {
            vote_prob_with_trolls(model, x, state)
        };
    }
    let threshold = if x < 0.5 { s_hat(model, x, cap)? } else { model.cutoff(x)? };
    Ok(cap + (1.0 - cap) * model.sf(state, threshold))
}

/// Share under a per-type reach cap.
pub fn vote_share_constrained(model: &SignalModel, electorate: &Electorate, cap: &ReachCap, state: State) -> Result<f64> {
    Ok(vote_share_constrained_estimate(model, electorate, cap, state, &share_options())?.value)
}

pub fn vote_share_constrained_estimate(
    model: &SignalModel,
    electorate: &Electorate,
    cap: &ReachCap,
    state: State,
    opts: &QuadOptions,
) -> Result<Estimate> {
    cap.validate()?;
    aggregate(
        electorate,
        electorate.cdf(0.0),
        &[LOWER, UPPER],
        |x| vote_prob_constrained(model, x, cap.value(model, x)?, state),
        opts,
    )
}

/// Vote probability of a type above 1/2 whose beliefs run through `beta`:
/// the optimal-troll formula with the cutoff moved to `beta^{-1}(s*(x))`.
pub fn vote_prob_distorted(model: &SignalModel, x: f64, distortion: &DistortionFn, state: State) -> Result<f64> {
    if !(x > 0.5 && x < 1.0) {
        return Err(Error::domain(format!("type x = {x} outside (1/2, 1)")));
    }
    let b = distortion.inverse(model.cutoff(x)?);
    Ok(upper_type_probability(model, x, b, state))
}

pub fn vote_share_distorted(
    model: &SignalModel,
    electorate: &Electorate,
    distortion: &DistortionFn,
    state: State,
) -> Result<f64> {
    Ok(vote_share_distorted_estimate(model, electorate, distortion, state, &share_options())?.value)
}

pub fn vote_share_distorted_estimate(
    model: &SignalModel,
    electorate: &Electorate,
    distortion: &DistortionFn,
    state: State,
    opts: &QuadOptions,
) -> Result<Estimate> {
    aggregate(
        electorate,
        electorate.cdf(0.5),
        &[UPPER],
        |x| vote_prob_distorted(model, x, distortion, state),
        opts,
    )
}

/// Share when a fraction `phi` of voters ignores the troll farm: those
/// are all won over, the rest vote as in the optimal-troll equilibrium.
pub fn vote_share_naive(model: &SignalModel, electorate: &Electorate, phi: f64, state: State) -> Result<f64> {
    check_phi(phi)?;
    let base = vote_share_with_trolls(model, electorate, state)?;
    Ok(naive_mixture(phi, base))
}

pub(crate) fn check_phi(phi: f64) -> Result<()> {
    if (0.0..=1.0).contains(&phi) {
        Ok(())
    } else {
        Err(Error::domain(format!("naive fraction {phi} outside [0, 1]")))
    }
}

/// `phi + (1 - phi) * base`.
pub fn naive_mixture(phi: f64, base: f64) -> f64 {
    phi + (1.0 - phi) * base
}

/// Outcome when a second troll farm works for the opposition: each side
/// wins over the types on its half, independent of the state.
pub fn two_sided_outcome(electorate: &Electorate) -> Regime {
    if electorate.cdf(0.5) >= 0.5 {
        Regime::WinsBoth
    } else {
        Regime::LosesBoth
    }
}

/// Vote share in `state` for `variant`.
pub fn vote_share(model: &SignalModel, electorate: &Electorate, variant: &Variant, state: State) -> Result<f64> {
    match variant {
        Variant::NoTrolls => vote_share_no_trolls(model, electorate, state),
        Variant::Optimal => vote_share_with_trolls(model, electorate, state),
        Variant::Constrained(cap) => vote_share_constrained(model, electorate, cap, state),
        Variant::Distorted(beta) => vote_share_distorted(model, electorate, beta, state),
        Variant::Naive(phi) => vote_share_naive(model, electorate, *phi, state),
    }
}

/// Both states' shares for `variant`, with the regime.
pub fn vote_shares(model: &SignalModel, electorate: &Electorate, variant: &Variant) -> Result<VoteShares> {
    Ok(VoteShares::new(
        vote_share(model, electorate, variant, State::Low)?,
        vote_share(model, electorate, variant, State::High)?,
    ))
}
