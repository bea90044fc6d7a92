//! Brute-force checks that a troll strategy is not Pareto dominated.
//!
//! Alternatives are piecewise-constant densities on a window of signals cut
//! into equal bins. Against each one the voter best-responds exactly: she
//! votes for the government where
//! `c(s) = (1 - alpha)((1 - x) f1(s) - x f0(s)) + alpha (1 - 2x) d(s) >= 0`,
//! with sign changes inside a bin located by bisection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::root::{bisect, BisectOptions};
use crate::signals::{SignalModel, State};
use crate::strategy::{TrollStrategy, SINGULAR_BAND};

/// Bins used by `dominance_test`.
pub const DOMINANCE_BINS: usize = 64;
/// Dominance must beat the candidate by more than this in some state.
pub const PARETO_TOL: f64 = 1e-7;
/// Probability treated as certain in the fewest-trolls check.
pub const CERTAIN: f64 = 1.0 - 1e-9;
/// Largest bin count `discretized_exhaustive` accepts.
pub const MAX_EXHAUSTIVE_BINS: usize = 24;

// Evaluation points per bin when scanning for sign changes of c(s).
const SUBPOINTS: usize = 32;
// Window for `discretized_exhaustive`: both states' quantiles at this tail.
const WINDOW_TAIL: f64 = 1e-7;

/// A troll strategy with piecewise-constant density on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedStrategy {
    pub alpha: f64,
    pub lo: f64,
    pub hi: f64,
    /// Probability of each bin; sums to one.
    pub pmf: Vec<f64>,
}

impl BinnedStrategy {
    pub fn new(alpha: f64, lo: f64, hi: f64, pmf: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain(format!("alpha {alpha} outside [0, 1]")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || pmf.is_empty() {
            return Err(Error::domain(format!("bad window [{lo}, {hi}] with {} bins", pmf.len())));
        }
        let total: f64 = pmf.iter().sum();
        if pmf.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("bin probabilities sum to {total}")));
        }
        Ok(Self { alpha, lo, hi, pmf })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.pmf.len() as f64
    }

    fn edge(&self, k: usize) -> f64 {
        if k == self.pmf.len() {
            self.hi
        } else {
            self.lo + k as f64 * self.width()
        }
    }

    /// Government vote probabilities `(p0, p1)` of a type-`x` voter who
    /// best-responds to this strategy.
    pub fn vote_probabilities(&self, model: &SignalModel, x: f64) -> Result<(f64, f64)> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::domain(format!("type x = {x} outside (0, 1)")));
        }
        let alpha = self.alpha;
        let mut p = [0.0; 2];
        let mut add = |a: f64, b: f64, troll_density: f64| {
            for state in State::BOTH {
                let nature = model.cdf(state, b) - model.cdf(state, a);
                let trolls = if troll_density > 0.0 { alpha * troll_density * (b - a) } else { 0.0 };
                p[state.index()] += (1.0 - alpha) * nature + trolls;
            }
        };
        // Outside the window only nature speaks, so the voter accepts above s*.
        let cutoff = model.cutoff(x)?;
        if cutoff < self.lo {
            add(cutoff, self.lo, 0.0);
        }
        add(cutoff.max(self.hi), f64::INFINITY, 0.0);

        let width = self.width();
        for (k, mass) in self.pmf.iter().enumerate() {
            let d = mass / width;
            let c = |s: f64| {
                let f0 = model.density(State::Low, s);
                let f1 = model.density(State::High, s);
                (1.0 - alpha) * ((1.0 - x) * f1 - x * f0) + alpha * (1.0 - 2.0 * x) * d
            };
            let (a, b) = (self.edge(k), self.edge(k + 1));
            let step = (b - a) / SUBPOINTS as f64;
            let mut left = a;
            let mut c_left = c(a);
            let mut open = if c_left >= 0.0 { Some(a) } else { None };
            for j in 1..=SUBPOINTS {
                let right = if j == SUBPOINTS { b } else { a + j as f64 * step };
                let c_right = c(right);
                if (c_left >= 0.0) != (c_right >= 0.0) {
                    let root = sign_change(&c, left, right)?;
                    match open.take() {
                        Some(start) => add(start, root, d),
                        None => open = Some(root),
                    }
                }
                left = right;
                c_left = c_right;
            }
            if let Some(start) = open {
                add(start, b, d);
            }
        }
        Ok((p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)))
    }
}

fn sign_change(c: &impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    let opts = BisectOptions {
        f_tol: 0.0,
        x_tol: 1e-13 * (1.0 + a.abs().max(b.abs())),
        max_iter: 200,
    };
    Ok(bisect(c, a, b, &opts)?.root)
}

fn dominates(alt: (f64, f64), candidate: (f64, f64), tol: f64) -> bool {
    let weakly = alt.0 >= candidate.0 - tol && alt.1 >= candidate.1 - tol;
    let strictly = alt.0 > candidate.0 + tol || alt.1 > candidate.1 + tol;
    weakly && strictly
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub alternative: BinnedStrategy,
    pub p0: f64,
    pub p1: f64,
    /// True when the witness wins every vote with fewer trolls rather than
    /// Pareto dominating.
    pub fewer_trolls: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub x: f64,
    pub candidate_alpha: f64,
    pub candidate_p0: f64,
    pub candidate_p1: f64,
    pub random_alternatives: usize,
    pub structured_alternatives: usize,
    pub witnesses: Vec<Witness>,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.witnesses.is_empty()
    }
}

// Random strategy: alpha ~ U(0,1), one to four uniform blocks of bins with
// random weights.
fn random_alternative(rng: &mut ChaCha8Rng, lo: f64, hi: f64, bins: usize) -> Result<BinnedStrategy> {
    let alpha: f64 = rng.random();
    let blocks = rng.random_range(1..=4);
    let mut pmf = vec![0.0; bins];
    for _ in 0..blocks {
        let a = rng.random_range(0..bins);
        let b = rng.random_range(a..bins);
        let weight: f64 = rng.random::<f64>() + 1e-3;
        let per_bin = weight / (b - a + 1) as f64;
        for p in &mut pmf[a..=b] {
            *p += per_bin;
        }
    }
    let total: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= total);
    BinnedStrategy::new(alpha, lo, hi, pmf)
}

// Deterministic probes: every single bin at a ladder of masses, plus the
// candidate's own density averaged over bins.
fn structured_alternatives(candidate: &TrollStrategy, lo: f64, hi: f64, bins: usize) -> Result<Vec<BinnedStrategy>> {
    let mut masses = vec![1e-3, 1e-2, 0.1, 0.5, 0.9];
    if candidate.alpha() > 0.0 {
        masses.push(candidate.alpha());
    }
    let mut out = Vec::with_capacity(masses.len() * bins + 1);
    for &alpha in &masses {
        for k in 0..bins {
            let mut pmf = vec![0.0; bins];
            pmf[k] = 1.0;
            out.push(BinnedStrategy::new(alpha, lo, hi, pmf)?);
        }
    }
    if candidate.alpha() > 0.0 {
        let width = (hi - lo) / bins as f64;
        let pmf: Vec<f64> = (0..bins)
            .map(|k| candidate.cdf(lo + (k + 1) as f64 * width) - candidate.cdf(lo + k as f64 * width))
            .collect();
        let total: f64 = pmf.iter().sum();
        if total > 0.0 {
            let pmf = pmf.into_iter().map(|p| p / total).collect();
            out.push(BinnedStrategy::new(candidate.alpha(), lo, hi, pmf)?);
        }
    }
    Ok(out)
}

/// Searches `n_alternatives` random piecewise-constant strategies, plus a
/// fixed set of structured ones, for one that Pareto dominates `candidate`
/// for the type-`x` voter. For `x <= 1/2` it also looks for an alternative
/// that wins the voter with certainty using fewer trolls.
pub fn dominance_test(
    model: &SignalModel,
    x: f64,
    candidate: &TrollStrategy,
    n_alternatives: usize,
    seed: u64,
) -> Result<DominanceReport> {
    if !(x > 0.0 && x < 1.0) || (x - 0.5).abs() < SINGULAR_BAND {
        return Err(Error::domain(format!("type x = {x} must be regular and inside (0, 1)")));
    }
    if (candidate.x() - x).abs() > 1e-12 {
        return Err(Error::precondition(format!(
            "candidate built for x = {}, tested at x = {x}",
            candidate.x()
        )));
    }
    let (lo, hi) = model.support_probe();
    let bins = DOMINANCE_BINS;
    let cand = (
        candidate.vote_probability(State::Low),
        candidate.vote_probability(State::High),
    );
    let structured = structured_alternatives(candidate, lo, hi, bins)?;
    let key = ChaCha8Rng::seed_from_u64(seed).get_seed();

    let check = |alt: BinnedStrategy| -> Result<Option<Witness>> {
        let (p0, p1) = alt.vote_probabilities(model, x)?;
        let pareto = dominates((p0, p1), cand, PARETO_TOL);
        let fewer = x <= 0.5 && alt.alpha < candidate.alpha() - 1e-12 && p0 >= CERTAIN && p1 >= CERTAIN;
        Ok((pareto || fewer).then(|| Witness {
            alternative: alt,
            p0,
            p1,
            fewer_trolls: fewer && !pareto,
        }))
    };

    let random: Vec<Option<Witness>> = (0..n_alternatives as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::from_seed(key);
            rng.set_stream(i);
            check(random_alternative(&mut rng, lo, hi, bins)?)
        })
        .collect::<Result<_>>()?;
    let fixed: Vec<Option<Witness>> = structured.into_par_iter().map(check).collect::<Result<_>>()?;
    let structured_count = fixed.len();
    let witnesses = fixed.into_iter().chain(random).flatten().collect();
    Ok(DominanceReport {
        x,
        candidate_alpha: candidate.alpha(),
        candidate_p0: cand.0,
        candidate_p1: cand.1,
        random_alternatives: n_alternatives,
        structured_alternatives: structured_count,
        witnesses,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub alpha: f64,
    /// First and last bin (inclusive) of the uniform troll block.
    pub first_bin: usize,
    pub last_bin: usize,
    pub p0: f64,
    pub p1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustiveReport {
    pub x: f64,
    pub bins: usize,
    pub window: (f64, f64),
    pub analytic: (f64, f64),
    pub frontier: Vec<FrontierPoint>,
    /// Chebyshev distance from the analytic point to the nearest frontier point.
    pub distance: f64,
    /// Frontier points that dominate the analytic optimum.
    pub dominating: Vec<FrontierPoint>,
}

impl ExhaustiveReport {
    pub fn tolerance(&self) -> f64 {
        2.0 / self.bins as f64
    }

    pub fn passed(&self) -> bool {
        self.dominating.is_empty() && self.distance <= self.tolerance()
    }

    pub fn bin_edges(&self, k: usize) -> (f64, f64) {
        let width = (self.window.1 - self.window.0) / self.bins as f64;
        (self.window.0 + k as f64 * width, self.window.0 + (k + 1) as f64 * width)
    }
}

/// Enumerates every uniform troll density on a contiguous run of bins,
/// at every mass in `alpha_grid`, and compares the Pareto frontier of the
/// resulting vote probabilities with the optimal strategy for `x`.
pub fn discretized_exhaustive(model: &SignalModel, x: f64, bins: usize, alpha_grid: &[f64]) -> Result<ExhaustiveReport> {
    if bins == 0 || bins > MAX_EXHAUSTIVE_BINS {
        return Err(Error::domain(format!("bins = {bins} outside 1..={MAX_EXHAUSTIVE_BINS}")));
    }
    if alpha_grid.is_empty() || alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::domain("alpha grid must be non-empty and inside [0, 1]"));
    }
    let optimal = crate::strategy::optimal_strategy(model, x)?;
    let analytic = (
        optimal.vote_probability(State::Low),
        optimal.vote_probability(State::High),
    );
    let lo = model
        .quantile(State::Low, WINDOW_TAIL)?
        .min(model.quantile(State::High, WINDOW_TAIL)?);
    let hi = model
        .quantile(State::Low, 1.0 - WINDOW_TAIL)?
        .max(model.quantile(State::High, 1.0 - WINDOW_TAIL)?);

    let mut jobs = Vec::new();
    for &alpha in alpha_grid {
        for a in 0..bins {
            for b in a..bins {
                jobs.push((alpha, a, b));
            }
        }
    }
    let mut points: Vec<FrontierPoint> = jobs
        .into_par_iter()
        .map(|(alpha, a, b)| {
            let mut pmf = vec![0.0; bins];
            let per = 1.0 / (b - a + 1) as f64;
            pmf[a..=b].iter_mut().for_each(|p| *p = per);
            let (p0, p1) = BinnedStrategy::new(alpha, lo, hi, pmf)?.vote_probabilities(model, x)?;
            Ok(FrontierPoint {
                alpha,
                first_bin: a,
                last_bin: b,
                p0,
                p1,
            })
        })
        .collect::<Result<_>>()?;
    // The no-troll point belongs to every frontier search.
    points.push(FrontierPoint {
        alpha: 0.0,
        first_bin: 0,
        last_bin: bins - 1,
        p0: crate::outcomes::vote_prob_no_trolls(model, x, State::Low)?,
        p1: crate::outcomes::vote_prob_no_trolls(model, x, State::High)?,
    });

    let frontier: Vec<FrontierPoint> = points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates((q.p0, q.p1), (p.p0, p.p1), 0.0)))
        .cloned()
        .collect();
    let distance = frontier
        .iter()
        .map(|p| (p.p0 - analytic.0).abs().max((p.p1 - analytic.1).abs()))
        .fold(f64::INFINITY, f64::min);
    let dominating = frontier
        .iter()
        .filter(|p| dominates((p.p0, p.p1), analytic, PARETO_TOL))
        .cloned()
        .collect();
    Ok(ExhaustiveReport {
        x,
        bins,
        window: (lo, hi),
        analytic,
        frontier,
        distance,
        dominating,
    })
}

/// `[0.01, 0.02, ..., 1.0]`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=100).map(|k| k as f64 / 100.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{optimal_mass, optimal_strategy};

    fn model() -> SignalModel {
        SignalModel::gaussian(1.0, 1.0).unwrap()
    }

    #[test]
    fn empty_farm_reproduces_no_troll_probabilities() {
        let m = model();
        let (lo, hi) = m.support_probe();
        let alt = BinnedStrategy::new(0.0, lo, hi, vec![1.0 / 8.0; 8]).unwrap();
        for x in [0.2, 0.7] {
            let (p0, p1) = alt.vote_probabilities(&m, x).unwrap();
            let s = m.cutoff(x).unwrap();
            assert!((p0 - m.sf(State::Low, s)).abs() < 1e-10);
            assert!((p1 - m.sf(State::High, s)).abs() < 1e-10);
        }
    }

    #[test]
    fn heavy_block_below_cutoff_wins_low_types() {
        // With almost all mass from trolls on the window, every message there
        // is persuasive for a type below 1/2.
        let m = model();
        let (lo, hi) = m.support_probe();
        let alt = BinnedStrategy::new(0.999, lo, hi, vec![1.0 / 16.0; 16]).unwrap();
        let (p0, p1) = alt.vote_probabilities(&m, 0.3).unwrap();
        assert!(p0 > 1.0 - 1e-6 && p1 > 1.0 - 1e-6);
    }

    #[test]
    fn optimal_strategies_survive() {
        let m = model();
        for x in [0.3, 0.7] {
            let s = optimal_strategy(&m, x).unwrap();
            let r = dominance_test(&m, x, &s, 2_000, 1).unwrap();
            assert!(r.passed(), "x = {x}: {:?}", r.witnesses.first());
        }
    }

    #[test]
    fn weak_strategies_are_caught() {
        let m = model();
        let none = TrollStrategy::none(&m, 0.7).unwrap();
        assert!(!dominance_test(&m, 0.7, &none, 2_000, 2).unwrap().passed());
        let half = optimal_strategy(&m, 0.3)
            .unwrap()
            .with_mass(0.5 * optimal_mass(&m, 0.3).unwrap())
            .unwrap();
        assert!(!dominance_test(&m, 0.3, &half, 2_000, 3).unwrap().passed());
    }

    #[test]
    fn exhaustive_rejects_bad_input() {
        let m = model();
        assert!(discretized_exhaustive(&m, 0.7, 25, &[0.5]).is_err());
        assert!(discretized_exhaustive(&m, 0.7, 8, &[]).is_err());
        assert!(discretized_exhaustive(&m, 0.7, 8, &[1.5]).is_err());
    }

    #[test]
    fn exhaustive_frontier_near_optimum() {
        let m = model();
        for x in [0.3, 0.7] {
            let r = discretized_exhaustive(&m, x, 12, &default_alpha_grid()).unwrap();
            assert!(r.passed(), "x = {x}: distance {} dominating {:?}", r.distance, r.dominating.first());
        }
    }

    #[test]
    fn exhaustive_frontier_shapes() {
        let m = model();
        let r = discretized_exhaustive(&m, 0.7, 16, &default_alpha_grid()).unwrap();
        let s = m.cutoff(0.7).unwrap();
        assert!(r.frontier.iter().filter(|p| p.alpha > 0.0).all(|p| r.bin_edges(p.first_bin).1 > s));
        let r = discretized_exhaustive(&m, 0.3, 16, &default_alpha_grid()).unwrap();
        assert!(r.frontier.iter().any(|p| p.p0 >= 1.0 - 1e-6 && p.p1 >= 1.0 - 1e-6));
        let tiny = discretized_exhaustive(&m, 0.7, 2, &[0.5]).unwrap();
        assert!(!tiny.frontier.is_empty());
    }
}
