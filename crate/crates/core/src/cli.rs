//! Experiment runner behind the `trollfarm-eq` binary. Each command writes
//! CSV tables and a `summary.json` (config echo, version, results) into the
//! output directory, plus `timing.json` with the wall time.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::comparative::{
    find_conservatism, find_polarization, informativeness_sweep, regime_thresholds, regimes_in_order, serialize_extended,
};
use crate::config::{self, ExperimentConfig};
use crate::electorate::{admits_greater_polarization, is_more_conservative, scale_distortion};
use crate::error::{Error, Result};
use crate::numerics::linspace;
use crate::oracle::dominance::{default_alpha_grid, discretized_exhaustive, dominance_test};
use crate::oracle::simulate::{simulate_election, SimConfig};
use crate::outcomes::{two_sided_outcome, vote_shares, Regime, Variant};
use crate::signals::{SignalModel, State};
use crate::strategy::{constrained_strategy, optimal_mass, optimal_strategy, s_hat, TrollStrategy, SINGULAR_BAND};

/// Version string written into every summary.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Strategy,
    Shares,
    Sweep,
    Regimes,
    Polarize,
    Distort,
    Verify,
    Twosided,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Strategy,
        Command::Shares,
        Command::Sweep,
        Command::Regimes,
        Command::Polarize,
        Command::Distort,
        Command::Verify,
        Command::Twosided,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Strategy => "strategy",
            Command::Shares => "shares",
            Command::Sweep => "sweep",
            Command::Regimes => "regimes",
            Command::Polarize => "polarize",
            Command::Distort => "distort",
            Command::Verify => "verify",
            Command::Twosided => "twosided",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config("command", format!("unknown command `{s}`")))
    }
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// False when a `verify` check failed.
    pub passed: bool,
}

/// Loads the config, runs `command`, writes artifacts. `out` overrides the
/// config's output directory.
pub fn run(command: Command, config_path: &Path, overrides: &[String], out: Option<&Path>) -> Result<RunOutcome> {
    let started = Instant::now();
    let config = config::load(config_path, overrides)?;
    let out_dir = out.map(Path::to_path_buf).unwrap_or_else(|| config.output.dir.clone());
    std::fs::create_dir_all(&out_dir).map_err(|e| io_error(&out_dir, e))?;
    let mut writer = Artifacts {
        dir: out_dir.clone(),
        files: Vec::new(),
    };
    let (result, passed) = match command {
        Command::Strategy => (strategy(&config, &mut writer)?, true),
        Command::Shares => (shares(&config, &mut writer)?, true),
        Command::Sweep => (sweep(&config, &mut writer)?, true),
        Command::Regimes => (regimes(&config, &mut writer)?, true),
        Command::Polarize => (polarize(&config, &mut writer)?, true),
        Command::Distort => (distort(&config, &mut writer)?, true),
        Command::Verify => verify(&config, &mut writer)?,
        Command::Twosided => (twosided(&config, &mut writer)?, true),
    };
    let summary = json!({
        "command": command.name(),
        "version": VERSION,
        "config": config,
        "passed": passed,
        "result": result,
    });
    writer.json("summary.json", &summary)?;
    writer.json(
        "timing.json",
        &json!({ "command": command.name(), "wall_seconds": started.elapsed().as_secs_f64() }),
    )?;
    Ok(RunOutcome {
        out_dir,
        files: writer.files,
        passed,
    })
}

fn io_error(path: &Path, e: impl fmt::Display) -> Error {
    Error::config("output.dir", format!("{}: {e}", path.display()))
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Artifacts {
    fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
        for row in rows {
            w.serialize(row).map_err(|e| io_error(&path, e))?;
        }
        w.flush().map_err(|e| io_error(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(&path, e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("result types serialize to JSON")
}

// Infinite support endpoints become "inf"/"-inf" in both CSV and JSON.
#[derive(Debug, Clone, Copy, Serialize)]
struct Extended(#[serde(serialize_with = "serialize_extended")] f64);

#[derive(Serialize)]
struct StrategyRow {
    x: f64,
    alpha_star: f64,
    cutoff: f64,
    cap: Option<f64>,
    alpha: f64,
    s_hat: Option<f64>,
    support_lo: Option<Extended>,
    support_hi: Option<Extended>,
    p0: f64,
    p1: f64,
}

fn strategy_row(model: &SignalModel, variant: &Variant, x: f64) -> Result<StrategyRow> {
    let alpha_star = optimal_mass(model, x)?;
    let cutoff = model.cutoff(x)?;
    if (x - 0.5).abs() < SINGULAR_BAND {
        return Ok(StrategyRow {
            x,
            alpha_star,
            cutoff,
            cap: None,
            alpha: alpha_star,
            s_hat: None,
            support_lo: None,
            support_hi: None,
            p0: 1.0,
            p1: 1.0,
        });
    }
    let (strategy, cap, hat): (TrollStrategy, Option<f64>, Option<f64>) = match variant {
        Variant::Constrained(c) => {
            let cap = c.value(model, x)?;
            let hat = (x < 0.5 && cap > 0.0 && cap < alpha_star).then(|| s_hat(model, x, cap)).transpose()?;
            let strategy = if cap > 0.0 {
                constrained_strategy(model, x, cap)?
            } else {
                TrollStrategy::none(model, x)?
            };
            (strategy, Some(cap), hat)
        }
        Variant::NoTrolls => (TrollStrategy::none(model, x)?, None, None),
        _ => (optimal_strategy(model, x)?, None, None),
    };
    let support = strategy.support();
    Ok(StrategyRow {
        x,
        alpha_star,
        cutoff,
        cap,
        alpha: strategy.alpha(),
        s_hat: hat,
        support_lo: support.map(|s| Extended(s.0)),
        support_hi: support.map(|s| Extended(s.1)),
        p0: strategy.vote_probability(State::Low),
        p1: strategy.vote_probability(State::High),
    })
}

fn strategy(config: &ExperimentConfig, out: &mut Artifacts) -> Result<Value> {
    let model = config.model()?;
    let variant = config.variant()?;
    let rows: Vec<StrategyRow> = config
        .strategy
        .types
        .par_iter()
        .map(|&x| strategy_row(&model, &variant, x))
        .collect::<Result<_>>()?;
    out.csv("strategy.csv", &rows)?;
    let peak = rows
        .iter()
        .fold(&rows[0], |best, r| if r.alpha_star > best.alpha_star { r } else { best });
    Ok(json!({
        "variant": variant.name(),
        "types": rows.len(),
        "peak_alpha_star": peak.alpha_star,
        "peak_x": peak.x,
    }))
}

#[derive(Serialize)]
struct SharesRow {
    state: u8,
    trolls_off: f64,
    trolls_on: f64,
}

fn shares(config: &ExperimentConfig, out: &mut Artifacts) -> Result<Value> {
    let model = config.model()?;
    let electorate = config.electorate()?;
    let variant = config.variant()?;
    let off = vote_shares(&model, &electorate, &Variant::NoTrolls)?;
    let on = vote_shares(&model, &electorate, &variant)?;
    let rows: Vec<SharesRow> = State::BOTH
        .into_iter()
        .map(|s| SharesRow {
            state: s.index() as u8,
            trolls_off: off.get(s),
            trolls_on: on.get(s),
        })
        .collect();
    out.csv("shares.csv", &rows)?;
    Ok(json!({ "variant": variant.name(), "trolls_off": off, "trolls_on": on }))
}

#[derive(Serialize)]
struct SweepRow {
    mu: f64,
    v0: f64,
    v1: f64,
    regime: Regime,
    no_trolls_v0: f64,
    no_trolls_v1: f64,
}

#[derive(Serialize)]
struct PairRow {
    from_mu: f64,
    to_mu: f64,
    ordered: bool,
    trolls_rise: bool,
    no_trolls_separate: bool,
    violation: bool,
}

fn sweep(config: &ExperimentConfig, out: &mut Artifacts) -> Result<Value> {
    let electorate = config.electorate()?;
    let spec = config.signal;
    let mut result = informativeness_sweep(|mu: f64| spec.with_index(mu.ln()), &electorate, &config.sweep.mu)?;
    result.axis_name = "mu".into();
    let rows: Vec<SweepRow> = (0..result.axis_values.len())
        .map(|i| SweepRow {
            mu: result.axis_values[i],
            v0: result.shares[i].v0,
            v1: result.shares[i].v1,
            regime: result.regimes[i],
            no_trolls_v0: result.no_trolls[i].v0,
            no_trolls_v1: result.no_trolls[i].v1,
        })
        .collect();
    let pairs: Vec<PairRow> = result
        .pairs
        .iter()
        .map(|p| PairRow {
            from_mu: p.from,
            to_mu: p.to,
            ordered: p.ordered,
            trolls_rise: p.trolls_rise,
            no_trolls_separate: p.no_trolls_separate,
            violation: p.is_violation(),
        })
        .collect();
    out.csv("sweep.csv", &rows)?;
    out.csv("sweep_pairs.csv", &pairs)?;
    Ok(json!({
        "points": rows.len(),
        "ordered_pairs": pairs.iter().filter(|p| p.ordered).count(),
        "violations": pairs.iter().filter(|p| p.violation).count(),
        "regimes_in_order": regimes_in_order(&result.regimes),
    }))
}

#[derive(Serialize)]
struct RegimeRow {
    r: f64,
    mu: f64,
    v0: f64,
    v1: f64,
    regime: Regime,
}

fn regimes(config: &ExperimentConfig, out: &mut Artifacts) -> Result<Value> {
    let electorate = config.electorate()?;
    let spec = config.signal;
    let [lo, hi] = config.regimes.bracket;
    let rows: Vec<RegimeRow> = linspace(lo, hi, config.regimes.points)
        .par_iter()
        .map(|&r| {
            let s = vote_shares(&spec.with_index(r)?, &electorate, &Variant::Optimal)?;
            Ok(RegimeRow {
                r,
                mu: r.exp(),
                v0: s.v0,
                v1: s.v1,
                regime: s.regime,
            })
        })
        .collect::<Result<_>>()?;
    out.csv("regimes.csv", &rows)?;
    let thresholds = regime_thresholds(|r| spec.with_index(r), &electorate, (lo, hi))?;
    let profile: Vec<Regime> = rows.iter().map(|r| r.regime).collect();
    Ok(json!({
        "thresholds": thresholds,
        "mu_prime": thresholds.r_prime.exp(),
        "mu_double_prime": to_json(&Extended(thresholds.r_double_prime.exp())),
        "terminal_regime": profile.last(),
        "regimes_in_order": regimes_in_order(&profile),
    }))
}

#[derive(Serialize)]
struct ScanRow {
    r: f64,
    v0: f64,
    v1: f64,
    regime: Regime,
}

fn scan_rows(scan: &[(f64, crate::VoteShares)]) -> Vec<ScanRow> {
    scan.iter()
        .map(|(r, s)| ScanRow {
            r: *r,
            v0: s.v0,
            v1: s.v1,
            regime: s.regime,
        })
        .collect()
}

/// Types on which the polarization order is checked.
fn polarization_grid() -> Vec<f64> {
    linspace(-2.0, 3.0, 501)
}

/// Signals on which the conservatism order is checked; excludes zero.
fn conservatism_grid() -> Vec<f64> {
    (1..=20).flat_map(|k| [-0.25 * k as f64, 0.25 * k as f64]).collect()
}

fn polarize(config: &ExperimentConfig, out: &mut Artifacts) -> Result<Value> {
    let model = config.model()?;
    let base = config.electorate()?;
    let found = find_polarization(&base, &model, &config.polarize.scan)?;
    let Some(found) = found else {
        out.csv::<ScanRow>("polarize.csv", &[])?;
        return Ok(json!({ "found": false }));
    };
    out.csv("polarize.csv", &scan_rows(&found.scan))?;
    let order = admits_greater_polarization(&base.polarize(found.r)?, &base, &polarization_grid())?;
    Ok(json!({
        "found": true,
        "r": found.r,
        "refined": found.refined,
        "shares": found.shares,
        "more_polarized": order.holds,
    }))
}

fn distort(config: &ExperimentConfig, out: &mut Artifacts) -> Result<Value> {
    let model = config.model()?;
    let electorate = config.electorate()?;
    let base = config.distort.base.build()?;
    let found = find_conservatism(&base, &model, &electorate, &config.distort.scan)?;
    let Some(found) = found else {
        out.csv::<ScanRow>("distort.csv", &[])?;
        return Ok(json!({ "found": false }));
    };
    out.csv("distort.csv", &scan_rows(&found.scan))?;
    let order = is_more_conservative(&scale_distortion(&base, found.r)?, &base, &conservatism_grid())?;
    Ok(json!({
        "found": true,
        "r": found.r,
        "refined": found.refined,
        "shares": found.shares,
        "more_conservative": order.holds,
    }))
}

#[derive(Serialize)]
struct SimRow {
    variant: &'static str,
    state: u8,
    n_voters: u64,
    government_votes: u64,
    empirical_share: f64,
    std_error: f64,
    analytic_share: f64,
    #[serde(serialize_with = "serialize_extended")]
    z_score: f64,
    passed: bool,
}

#[derive(Serialize)]
struct DominanceRow {
    x: f64,
    candidate_alpha: f64,
    candidate_p0: f64,
    candidate_p1: f64,
    alternatives: usize,
    witnesses: usize,
    passed: bool,
}

#[derive(Serialize)]
struct ExhaustiveRow {
    x: f64,
    bins: usize,
    analytic_p0: f64,
    analytic_p1: f64,
    frontier_points: usize,
    distance: f64,
    tolerance: f64,
    dominating: usize,
    passed: bool,
}

fn verify(config: &ExperimentConfig, out: &mut Artifacts) -> Result<(Value, bool)> {
    let model = config.model()?;
    let electorate = config.electorate()?;
    let params = &config.verify;
    let mut variants = vec![Variant::NoTrolls];
    let configured = config.variant()?;
    if !matches!(configured, Variant::NoTrolls) {
        variants.push(configured);
    }

    let mut sims = Vec::new();
    for (k, variant) in variants.iter().enumerate() {
        for state in State::BOTH {
            let seed = params.seed.wrapping_add(2 * k as u64 + state.index() as u64);
            let report = simulate_election(
                &model,
                &electorate,
                &SimConfig {
                    n_voters: params.n_voters,
                    seed,
                    state,
                    variant: variant.clone(),
                },
            )?;
            sims.push(SimRow {
                variant: variant.name(),
                state: state.index() as u8,
                n_voters: report.n_voters,
                government_votes: report.government_votes,
                empirical_share: report.empirical_share,
                std_error: report.std_error,
                analytic_share: report.analytic_share,
                z_score: report.z_score,
                passed: report.z_score.is_nan() || report.z_score.abs() <= params.z_max,
            });
        }
    }

    let mut dominance = Vec::new();
    let mut witnesses = Vec::new();
    let mut exhaustive = Vec::new();
    for (k, &x) in params.types.iter().enumerate() {
        let candidate = optimal_strategy(&model, x)?;
        let report = dominance_test(&model, x, &candidate, params.n_alternatives, params.seed.wrapping_add(100 + k as u64))?;
        dominance.push(DominanceRow {
            x,
            candidate_alpha: report.candidate_alpha,
            candidate_p0: report.candidate_p0,
            candidate_p1: report.candidate_p1,
            alternatives: report.random_alternatives + report.structured_alternatives,
            witnesses: report.witnesses.len(),
            passed: report.passed(),
        });
        if let Some(w) = report.witnesses.first() {
            witnesses.push(json!({ "x": x, "witness": w }));
        }
        let grid = discretized_exhaustive(&model, x, params.bins, &default_alpha_grid())?;
        exhaustive.push(ExhaustiveRow {
            x,
            bins: grid.bins,
            analytic_p0: grid.analytic.0,
            analytic_p1: grid.analytic.1,
            frontier_points: grid.frontier.len(),
            distance: grid.distance,
            tolerance: grid.tolerance(),
            dominating: grid.dominating.len(),
            passed: grid.passed(),
        });
    }
    out.csv("verify_simulation.csv", &sims)?;
    out.csv("verify_dominance.csv", &dominance)?;
    out.csv("verify_exhaustive.csv", &exhaustive)?;
    let passed = sims.iter().all(|r| r.passed)
        && dominance.iter().all(|r| r.passed)
        && exhaustive.iter().all(|r| r.passed);
    let result = json!({
        "simulation": to_json(&sims),
        "dominance": to_json(&dominance),
        "exhaustive": to_json(&exhaustive),
        "witnesses": witnesses,
    });
    Ok((result, passed))
}

#[derive(Serialize)]
struct TwoSidedRow {
    h_half: f64,
    regime: Regime,
}

fn twosided(config: &ExperimentConfig, out: &mut Artifacts) -> Result<Value> {
    let electorate = config.electorate()?;
    let row = TwoSidedRow {
        h_half: electorate.cdf(0.5),
        regime: two_sided_outcome(&electorate),
    };
    out.csv("twosided.csv", std::slice::from_ref(&row))?;
    Ok(to_json(&row))
}
