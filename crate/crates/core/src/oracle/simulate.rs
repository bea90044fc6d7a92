//! Seeded Monte Carlo elections built from the model's primitives: draw a
//! type, route the signal through the troll farm or nature, let the voter
//! compute her posterior, count votes.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::comparative::serialize_extended;
use crate::electorate::Electorate;
use crate::error::{Error, Result};
use crate::outcomes::{check_phi, naive_mixture, vote_share, Variant};
use crate::signals::{SignalModel, State};
use crate::strategy::{
    constrained_strategy, kappa_upper_tail, optimal_strategy, posterior_with_trolls, TrollStrategy, SINGULAR_BAND,
};

/// A voter whose posterior falls short of `x` by less than this is treated
/// as indifferent, and indifferent voters back the government.
pub const INDIFFERENCE_TOL: f64 = 1e-9;

/// Voters handled per parallel work item.
const SHARD: usize = 4096;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_voters: u64,
    pub seed: u64,
    pub state: State,
    pub variant: Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimReport {
    pub n_voters: u64,
    pub government_votes: u64,
    pub empirical_share: f64,
    pub std_error: f64,
    pub analytic_share: f64,
    /// Undefined (serialized as null) when the standard error is zero.
    #[serde(serialize_with = "serialize_extended")]
    pub z_score: f64,
}

/// Share with naive voters when those who prefer the opposition in both
/// states (`x >= 1`) cannot be won over: `phi H(1) + (1 - phi) V`.
pub fn naive_share_bounded(model: &SignalModel, electorate: &Electorate, phi: f64, state: State) -> Result<f64> {
    check_phi(phi)?;
    let base = vote_share(model, electorate, &Variant::Optimal, state)?;
    Ok(phi * electorate.cdf(1.0) + (1.0 - phi) * base)
}

/// Analytic counterpart of a simulation.
pub fn analytic_share(model: &SignalModel, electorate: &Electorate, variant: &Variant, state: State) -> Result<f64> {
    match variant {
        Variant::Naive(phi) => naive_share_bounded(model, electorate, *phi, state),
        other => vote_share(model, electorate, other, state),
    }
}

struct Voter<'a> {
    model: &'a SignalModel,
    state: State,
    rng: ChaCha8Rng,
}

impl Voter<'_> {
    fn uniform(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    fn informative_signal(&mut self) -> Result<f64> {
        let u = self.uniform();
        self.model.quantile(self.state, u)
    }

    // One signal from the mixture of `strategy` (probability alpha) and nature.
    fn mixed_signal(&mut self, strategy: &TrollStrategy) -> Result<f64> {
        if self.uniform() < strategy.alpha() {
            let u = self.uniform();
            strategy.quantile(u)
        } else {
            self.informative_signal()
        }
    }

    fn persuaded(&self, strategy: &TrollStrategy, perceived: f64, x: f64) -> Result<bool> {
        Ok(posterior_with_trolls(self.model, strategy, perceived)? >= x - INDIFFERENCE_TOL)
    }

    fn bayesian_vote(&mut self, x: f64) -> Result<bool> {
        let s = self.informative_signal()?;
        Ok(self.model.posterior_no_trolls(s)? >= x - INDIFFERENCE_TOL)
    }

    fn vote_against(&mut self, strategy: &TrollStrategy, x: f64) -> Result<bool> {
        let s = self.mixed_signal(strategy)?;
        self.persuaded(strategy, s, x)
    }

    fn vote(&mut self, electorate: &Electorate, variant: &Variant) -> Result<bool> {
        let x = electorate.quantile(self.uniform());
        if let Variant::Naive(phi) = variant {
            if self.uniform() < *phi {
                return self.naive_vote(x);
            }
        }
        if x <= 0.0 {
            return Ok(true);
        }
        if x >= 1.0 {
            return Ok(false);
        }
        let singular = (x - 0.5).abs() < SINGULAR_BAND;
        match variant {
            Variant::NoTrolls => self.bayesian_vote(x),
            Variant::Optimal | Variant::Naive(_) => {
                if singular {
                    return Ok(true);
                }
                let strategy = optimal_strategy(self.model, x)?;
                self.vote_against(&strategy, x)
            }
            Variant::Constrained(cap) => {
                let c = cap.value(self.model, x)?;
                if c == 0.0 {
                    return self.bayesian_vote(x);
                }
                if singular {
                    return Ok(true);
                }
                let strategy = constrained_strategy(self.model, x, c)?;
                self.vote_against(&strategy, x)
            }
            Variant::Distorted(beta) => {
                if singular {
                    return Ok(true);
                }
                // The voter reads the troll equilibrium as if undistorted; the
                // sender, knowing beta, targets signals s with beta(s) >= s*.
                let reference = optimal_strategy(self.model, x)?;
                if x < 0.5 {
                    let s = self.mixed_signal(&reference)?;
                    return self.persuaded(&reference, beta.forward(s), x);
                }
                let b = beta.inverse(reference.cutoff());
                let tail = kappa_upper_tail(self.model, x, b)?;
                if !(tail >= 0.0) {
                    return Err(Error::domain(format!(
                        "distorted cutoff {b} for x = {x} leaves no troll mass"
                    )));
                }
                let alpha = tail / (1.0 + tail);
                let s = if self.uniform() < alpha {
                    let u = self.uniform();
                    reference.quantile(u)?.max(b)
                } else {
                    self.informative_signal()?
                };
                self.persuaded(&reference, beta.forward(s), x)
            }
        }
    }

    // Naive voters believe every message is informative; the farm sends one
    // just above their cutoff whenever such a message can move them.
    fn naive_vote(&mut self, x: f64) -> Result<bool> {
        if x <= 0.0 {
            return Ok(true);
        }
        if x >= 1.0 {
            return Ok(false);
        }
        let s = self.model.cutoff(x)? + 1.0;
        Ok(self.model.posterior_no_trolls(s)? >= x - INDIFFERENCE_TOL)
    }
}

/// Runs one election. Voter `i` draws from its own ChaCha8 stream `i` of
/// `seed`, so results do not depend on the thread count.
pub fn simulate_election(model: &SignalModel, electorate: &Electorate, config: &SimConfig) -> Result<SimReport> {
    if config.n_voters == 0 {
        return Err(Error::domain("n_voters must be at least 1"));
    }
    let key = ChaCha8Rng::seed_from_u64(config.seed).get_seed();
    let n = config.n_voters;
    let shards = n.div_ceil(SHARD as u64);
    let votes: u64 = (0..shards)
        .into_par_iter()
        .map(|shard| -> Result<u64> {
            let start = shard * SHARD as u64;
            let end = (start + SHARD as u64).min(n);
            let mut count = 0;
            for i in start..end {
                let mut rng = ChaCha8Rng::from_seed(key);
                rng.set_stream(i);
                let mut voter = Voter {
                    model,
                    state: config.state,
                    rng,
                };
                if voter.vote(electorate, &config.variant)? {
                    count += 1;
                }
            }
            Ok(count)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let p = votes as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    let analytic = analytic_share(model, electorate, &config.variant, config.state)?;
    let z = if se > 0.0 { (p - analytic) / se } else { f64::NAN };
    Ok(SimReport {
        n_voters: n,
        government_votes: votes,
        empirical_share: p,
        std_error: se,
        analytic_share: analytic,
        z_score: z,
    })
}

/// `phi + (1 - phi) V` re-exported for callers comparing both naive forms.
pub fn naive_share_unbounded(phi: f64, base: f64) -> f64 {
    naive_mixture(phi, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electorate::DistortionFn;
    use crate::strategy::ReachCap;

    fn setup() -> (SignalModel, Electorate) {
        (SignalModel::gaussian(1.0, 1.0).unwrap(), Electorate::normal(0.55, 0.2).unwrap())
    }

    fn config(n: u64, seed: u64, state: State, variant: Variant) -> SimConfig {
        SimConfig {
            n_voters: n,
            seed,
            state,
            variant,
        }
    }

    #[test]
    fn single_voter_is_degenerate() {
        let (m, e) = setup();
        let r = simulate_election(&m, &e, &config(1, 7, State::High, Variant::Optimal)).unwrap();
        assert!(r.empirical_share == 0.0 || r.empirical_share == 1.0);
        assert_eq!(r.std_error, 0.0);
        assert!(r.z_score.is_nan());
        assert!(serde_json::to_string(&r).unwrap().contains("\"z_score\":null"));
    }

    #[test]
    fn same_seed_same_report() {
        let (m, e) = setup();
        let c = config(20_000, 42, State::Low, Variant::Optimal);
        let a = simulate_election(&m, &e, &c).unwrap();
        let b = simulate_election(&m, &e, &c).unwrap();
        assert_eq!(a, b);
        let other = simulate_election(&m, &e, &config(20_000, 43, State::Low, Variant::Optimal)).unwrap();
        assert_ne!(a.government_votes, other.government_votes);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let (m, e) = setup();
        let c = config(30_000, 5, State::High, Variant::Optimal);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_election(&m, &e, &c).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn variants_agree_with_analytic_shares() {
        let (m, e) = setup();
        let id = DistortionFn::identity();
        let variants = [
            Variant::NoTrolls,
            Variant::Optimal,
            Variant::Constrained(ReachCap::FractionOfOptimal { fraction: 0.5 }),
            Variant::Distorted(crate::electorate::scale_distortion(&id, 3.0).unwrap()),
            Variant::Naive(0.3),
        ];
        for (k, v) in variants.into_iter().enumerate() {
            for state in State::BOTH {
                let r = simulate_election(&m, &e, &config(100_000, 11 + k as u64, state, v.clone())).unwrap();
                assert!(r.z_score.abs() <= 4.0, "{} state {state}: {r:?}", v.name());
            }
        }
    }

    #[test]
    fn naive_forms_differ_by_unreachable_types() {
        let (m, e) = setup();
        let base = vote_share(&m, &e, &Variant::Optimal, State::Low).unwrap();
        let bounded = naive_share_bounded(&m, &e, 0.4, State::Low).unwrap();
        let unbounded = naive_share_unbounded(0.4, base);
        assert!((unbounded - bounded - 0.4 * (1.0 - e.cdf(1.0))).abs() < 1e-12);
    }
}
