//! Comparative statics: informativeness sweeps, regime thresholds along an
//! informativeness index, and the polarization and conservatism searches.

use rayon::prelude::*;
use serde::Serialize;

use crate::electorate::{scale_distortion, DistortionFn, Electorate};
use crate::error::{Error, Result};
use crate::numerics::{bisect, linspace, type_grid, BisectOptions};
use crate::outcomes::{vote_shares, Regime, Variant, VoteShares};
use crate::signals::{is_more_informative, SignalModel};

/// Slack when checking that shares move in the predicted direction.
pub const MONOTONE_TOL: f64 = 1e-7;

/// Index tolerance for threshold bisections.
pub const INDEX_TOL: f64 = 1e-6;

/// Points used to check monotonicity before threshold searches.
const COARSE_POINTS: usize = 9;

/// Type grid used by sweeps for the informativeness check.
pub fn default_type_grid() -> Vec<f64> {
    type_grid(0.01)
}

/// Verdicts for one adjacent pair of sweep points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCheck {
    pub from: f64,
    pub to: f64,
    /// The higher index passed the informativeness check against the lower.
    pub ordered: bool,
    /// Both troll-regime shares rose (within tolerance).
    pub trolls_rise: bool,
    /// Without trolls V0 fell and V1 rose (within tolerance).
    pub no_trolls_separate: bool,
}

impl PairCheck {
    /// An ordered pair whose troll shares fell.
    pub fn is_violation(&self) -> bool {
        self.ordered && !self.trolls_rise
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub axis_name: String,
    pub axis_values: Vec<f64>,
    pub shares: Vec<VoteShares>,
    pub regimes: Vec<Regime>,
    pub no_trolls: Vec<VoteShares>,
    pub pairs: Vec<PairCheck>,
    pub thresholds: Option<Thresholds>,
}

impl SweepResult {
    pub fn violations(&self) -> Vec<&PairCheck> {
        self.pairs.iter().filter(|p| p.is_violation()).collect()
    }
}

/// Indices at which V1 and V0 cross 1/2; `r_double_prime` is `+inf` when
/// V0 stays below 1/2 across the bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub r_prime: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub r_double_prime: f64,
}

pub(crate) fn serialize_extended<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_none()
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn check_sorted(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::precondition(format!("{what} contains a non-finite value")));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::precondition(format!("{what} must be strictly ascending")));
    }
    Ok(())
}

/// Shares with and without trolls along `index_values`, with a per-pair
/// informativeness verdict.
pub fn informativeness_sweep<F>(family: F, electorate: &Electorate, index_values: &[f64]) -> Result<SweepResult>
where
    F: Fn(f64) -> Result<SignalModel> + Sync,
{
    informativeness_sweep_on(family, electorate, index_values, &default_type_grid())
}

pub fn informativeness_sweep_on<F>(
    family: F,
    electorate: &Electorate,
    index_values: &[f64],
    grid: &[f64],
) -> Result<SweepResult>
where
    F: Fn(f64) -> Result<SignalModel> + Sync,
{
    check_sorted(index_values, "index values")?;
    let points: Vec<(SignalModel, VoteShares, VoteShares)> = index_values
        .par_iter()
        .map(|&r| {
            let model = family(r)?;
            let with = vote_shares(&model, electorate, &Variant::Optimal)?;
            let without = vote_shares(&model, electorate, &Variant::NoTrolls)?;
            Ok((model, with, without))
        })
        .collect::<Result<_>>()?;
    let pairs = (1..points.len())
        .into_par_iter()
        .map(|i| {
            let (lo_model, lo_with, lo_without) = &points[i - 1];
            let (hi_model, hi_with, hi_without) = &points[i];
            let ordered = is_more_informative(hi_model, lo_model, grid)?.holds;
            Ok(PairCheck {
                from: index_values[i - 1],
                to: index_values[i],
                ordered,
                trolls_rise: hi_with.v0 >= lo_with.v0 - MONOTONE_TOL && hi_with.v1 >= lo_with.v1 - MONOTONE_TOL,
                no_trolls_separate: hi_without.v0 <= lo_without.v0 + MONOTONE_TOL
                    && hi_without.v1 >= lo_without.v1 - MONOTONE_TOL,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let shares: Vec<VoteShares> = points.iter().map(|p| p.1).collect();
    Ok(SweepResult {
        axis_name: "r".into(),
        axis_values: index_values.to_vec(),
        regimes: shares.iter().map(|s| s.regime).collect(),
        shares,
        no_trolls: points.iter().map(|p| p.2).collect(),
        pairs,
        thresholds: None,
    })
}

/// Whether regimes never move back towards `LOSES_BOTH` along a sweep.
pub fn regimes_in_order(regimes: &[Regime]) -> bool {
    let rank = |r: &Regime| match r {
        Regime::LosesBoth => 0,
        Regime::Aggregates => 1,
        Regime::WinsBoth => 2,
    };
    regimes.windows(2).all(|w| rank(&w[0]) <= rank(&w[1]))
}

/// Informativeness indices at which the troll equilibrium starts to
/// aggregate information (`r_prime`) and stops doing so (`r_double_prime`).
pub fn regime_thresholds<F>(family: F, electorate: &Electorate, bracket: (f64, f64)) -> Result<Thresholds>
where
    F: Fn(f64) -> Result<SignalModel> + Sync,
{
    let (lo, hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::precondition(format!("bracket [{lo}, {hi}] is not a finite interval")));
    }
    let (h_half, h_one) = (electorate.cdf(0.5), electorate.cdf(1.0));
    if !(h_half < 0.5 && 0.5 <= h_one) {
        return Err(Error::precondition(format!(
            "thresholds need H(1/2) < 1/2 <= H(1); got H(1/2) = {h_half}, H(1) = {h_one}"
        )));
    }
    let shares_at = |r: f64| -> Result<VoteShares> { vote_shares(&family(r)?, electorate, &Variant::Optimal) };

    let coarse = linspace(lo, hi, COARSE_POINTS);
    let profile: Vec<VoteShares> = coarse.par_iter().map(|&r| shares_at(r)).collect::<Result<_>>()?;
    for (w, r) in profile.windows(2).zip(coarse.windows(2)) {
        if w[1].v0 < w[0].v0 - MONOTONE_TOL || w[1].v1 < w[0].v1 - MONOTONE_TOL {
            return Err(Error::precondition(format!(
                "vote shares are not monotone in the index between {} and {}",
                r[0], r[1]
            )));
        }
    }
    let (bottom, top) = (profile[0], profile[COARSE_POINTS - 1]);
    if !(bottom.v1 < 0.5 && top.v1 >= 0.5) {
        return Err(Error::Bracket {
            what: format!("V1 does not cross 1/2 on [{lo}, {hi}]"),
            f_lo: bottom.v1 - 0.5,
            f_hi: top.v1 - 0.5,
        });
    }
    let opts = BisectOptions {
        x_tol: INDEX_TOL,
        ..Default::default()
    };
    let root = |component: fn(&VoteShares) -> f64| -> Result<f64> {
        let failure = std::cell::RefCell::new(None);
        let g = |r: f64| match shares_at(r) {
            Ok(s) => component(&s) - 0.5,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        let found = bisect(g, lo, hi, &opts);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(found?.root)
    };
    let r_prime = root(|s| s.v1)?;
    let r_double_prime = if top.v0 < 0.5 { f64::INFINITY } else { root(|s| s.v0)? };
    Ok(Thresholds { r_prime, r_double_prime })
}

/// Outcome of a one-parameter search.
#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub r: f64,
    pub shares: VoteShares,
    /// Whether `r` was refined by bisection rather than taken from the scan.
    pub refined: bool,
    pub scan: Vec<(f64, VoteShares)>,
}

// Scan ascending `scan`, then refine V0 = 1/2 between the first aggregating
// point and its predecessor. A scan step that jumps from WINS_BOTH straight
// to LOSES_BOTH brackets a window narrower than the step; it is refined the
// same way.
fn scan_then_bisect<S>(start: (f64, VoteShares), scan: &[f64], shares_at: S) -> Result<Option<SearchResult>>
where
    S: Fn(f64) -> Result<VoteShares> + Sync,
{
    let profile: Vec<(f64, VoteShares)> = scan
        .par_iter()
        .map(|&r| Ok((r, shares_at(r)?)))
        .collect::<Result<_>>()?;
    let before = |i: usize| if i == 0 { start } else { profile[i - 1] };
    let first_hit = profile.iter().position(|(_, s)| s.regime == Regime::Aggregates);
    let jump = profile
        .iter()
        .position(|(_, s)| s.regime != Regime::WinsBoth)
        .filter(|&i| profile[i].1.regime == Regime::LosesBoth && before(i).1.regime == Regime::WinsBoth);

    if let Some(j) = jump.filter(|&j| first_hit.is_none_or(|h| j < h)) {
        let (r, shares) = refine(before(j), profile[j], &shares_at)?;
        if shares.regime == Regime::Aggregates {
            return Ok(Some(SearchResult {
                r,
                shares,
                refined: true,
                scan: profile,
            }));
        }
    }
    let Some(i) = first_hit else {
        return Ok(None);
    };
    let (prev_r, prev) = before(i);
    let (hit_r, hit) = profile[i];
    if prev.v0 < 0.5 || prev_r >= hit_r {
        return Ok(Some(SearchResult {
            r: hit_r,
            shares: hit,
            refined: false,
            scan: profile,
        }));
    }
    let (r, shares) = refine((prev_r, prev), (hit_r, hit), &shares_at)?;
    let refined = shares.regime == Regime::Aggregates;
    Ok(Some(SearchResult {
        r: if refined { r } else { hit_r },
        shares: if refined { shares } else { hit },
        refined,
        scan: profile,
    }))
}

// Bisection on V0 = 1/2 with `lo.v0 >= 1/2 > hi.v0`; returns the upper end.
fn refine<S>(lo: (f64, VoteShares), hi: (f64, VoteShares), shares_at: &S) -> Result<(f64, VoteShares)>
where
    S: Fn(f64) -> Result<VoteShares>,
{
    let (mut lo, (mut hi, mut hi_shares)) = (lo.0, hi);
    for _ in 0..200 {
        if hi - lo <= 1e-9 * hi.abs().max(1.0) {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        let s = shares_at(mid)?;
        if s.v0 < 0.5 {
            hi = mid;
            hi_shares = s;
        } else {
            lo = mid;
        }
    }
    Ok((hi, hi_shares))
}

/// Smallest pivot-family index `r` at which the troll equilibrium starts
/// to aggregate information, given an electorate where it wins both states.
pub fn find_polarization(base: &Electorate, model: &SignalModel, scan: &[f64]) -> Result<Option<SearchResult>> {
    check_sorted(scan, "polarization scan")?;
    if scan.iter().any(|r| !(0.0..1.0).contains(r)) {
        return Err(Error::domain("polarization scan values must lie in [0, 1)"));
    }
    let h_half = base.cdf(0.5);
    if !(h_half < 0.5) {
        return Err(Error::precondition(format!("polarization search needs H(1/2) < 1/2, got {h_half}")));
    }
    let start = vote_shares(model, base, &Variant::Optimal)?;
    if start.regime != Regime::WinsBoth {
        return Err(Error::precondition(format!(
            "polarization search needs a WINS_BOTH baseline, got {}",
            start.regime
        )));
    }
    scan_then_bisect((0.0, start), scan, |r| vote_shares(model, &base.polarize(r)?, &Variant::Optimal))
}

/// Smallest scale `r >= 1` such that beliefs distorted by `beta / r` let
/// the election aggregate information.
pub fn find_conservatism(
    base: &DistortionFn,
    model: &SignalModel,
    electorate: &Electorate,
    scan: &[f64],
) -> Result<Option<SearchResult>> {
    check_sorted(scan, "conservatism scan")?;
    if scan.iter().any(|&r| r < 1.0) {
        return Err(Error::domain("conservatism scan values must be at least 1"));
    }
    let h_half = electorate.cdf(0.5);
    if !(h_half < 0.5) {
        return Err(Error::precondition(format!("conservatism search needs H(1/2) < 1/2, got {h_half}")));
    }
    let start = vote_shares(model, electorate, &Variant::Distorted(base.clone()))?;
    if start.regime != Regime::WinsBoth {
        return Err(Error::precondition(format!(
            "conservatism search needs a WINS_BOTH baseline, got {}",
            start.regime
        )));
    }
    scan_then_bisect((1.0, start), scan, |r| {
        vote_shares(model, electorate, &Variant::Distorted(scale_distortion(base, r)?))
    })
}
