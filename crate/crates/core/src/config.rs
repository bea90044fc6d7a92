//! Experiment configuration: a TOML file, optionally patched by `key=value`
//! overrides, deserialized and validated into `ExperimentConfig`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::electorate::{DistortionSpec, ElectorateSpec};
use crate::error::{Error, Result};
use crate::outcomes::Variant;
use crate::signals::{SignalModel, SignalSpec};
use crate::strategy::ReachCap;
use crate::Electorate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub signal: SignalSpec,
    pub electorate: ElectorateSpec,
    #[serde(default)]
    pub variant: VariantSpec,
    #[serde(default)]
    pub strategy: StrategyParams,
    #[serde(default)]
    pub sweep: SweepParams,
    #[serde(default)]
    pub regimes: RegimeParams,
    #[serde(default)]
    pub polarize: PolarizeParams,
    #[serde(default)]
    pub distort: DistortParams,
    #[serde(default)]
    pub verify: VerifyParams,
    #[serde(default)]
    pub output: OutputParams,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VariantSpec {
    NoTrolls,
    #[default]
    Optimal,
    Constrained {
        cap: ReachCap,
    },
    Distorted {
        distortion: DistortionSpec,
    },
    Naive {
        phi: f64,
    },
}

impl VariantSpec {
    pub fn build(&self) -> Result<Variant> {
        Ok(match self {
            VariantSpec::NoTrolls => Variant::NoTrolls,
            VariantSpec::Optimal => Variant::Optimal,
            VariantSpec::Constrained { cap } => {
                cap.validate()?;
                Variant::Constrained(cap.clone())
            }
            VariantSpec::Distorted { distortion } => Variant::Distorted(distortion.build()?),
            VariantSpec::Naive { phi } => {
                crate::outcomes::check_phi(*phi)?;
                Variant::Naive(*phi)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyParams {
    /// Voter types to tabulate.
    pub types: Vec<f64>,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            types: (1..=19).map(|k| k as f64 / 20.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    /// Signal separations to visit, ascending.
    pub mu: Vec<f64>,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            mu: vec![0.25, 0.5, 1.0, 2.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeParams {
    /// Bracket on `r = ln mu`.
    pub bracket: [f64; 2],
    /// Evenly spaced profile points across the bracket.
    pub points: usize,
}

impl Default for RegimeParams {
    fn default() -> Self {
        Self {
            bracket: [-4.0, 3.0],
            points: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolarizeParams {
    /// Pivot-family indices in `[0, 1)`, ascending.
    pub scan: Vec<f64>,
}

impl Default for PolarizeParams {
    fn default() -> Self {
        Self {
            scan: (1..20).map(|k| k as f64 / 20.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistortParams {
    pub base: DistortionSpec,
    /// Scale factors `>= 1`, ascending.
    pub scan: Vec<f64>,
}

impl Default for DistortParams {
    fn default() -> Self {
        Self {
            base: DistortionSpec::Identity,
            scan: (0..=36).map(|k| 1.0 + k as f64 * 0.25).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub seed: u64,
    pub n_voters: u64,
    /// `|z|` above this fails a simulation check.
    pub z_max: f64,
    /// Types probed by the dominance and exhaustive oracles.
    pub types: Vec<f64>,
    pub n_alternatives: usize,
    pub bins: usize,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            n_voters: 200_000,
            z_max: 3.0,
            types: vec![0.3, 0.7],
            n_alternatives: 10_000,
            bins: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputParams {
    pub dir: PathBuf,
}

impl Default for OutputParams {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Reads `path`, applies `overrides` (`dotted.key=value`, value parsed as a
/// TOML literal and falling back to a bare string) and validates.
pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))?;
    parse(&text, overrides)
}

pub fn parse(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        Error::config("<file>", e.message().to_string())
    })?;
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    let config: ExperimentConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let key = e.path().to_string();
        Error::config(if key == "." { "<root>".to_string() } else { key }, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let Some((key, raw)) = item.split_once('=') else {
        return Err(Error::config(item, "override must look like key=value"));
    };
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(key, "empty path segment"));
    }
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v was just written"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut node = table;
    for (depth, part) in parents.iter().enumerate() {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(parts[..=depth].join("."), "not a table"))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn in_unit_open(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

fn ascending(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite()) && values.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn model(&self) -> Result<SignalModel> {
        self.signal.build()
    }

    pub fn electorate(&self) -> Result<Electorate> {
        self.electorate.build()
    }

    pub fn variant(&self) -> Result<Variant> {
        self.variant.build()
    }

    /// Checks every section against the constructors it feeds; errors name
    /// the offending key.
    pub fn validate(&self) -> Result<()> {
        fn wrap(key: &'static str) -> impl Fn(Error) -> Error {
            move |e| Error::config(key, e.to_string())
        }
        self.model().map_err(wrap("signal"))?;
        self.electorate.base().map_err(wrap("electorate"))?;
        self.electorate().map_err(wrap("electorate.polarize"))?;
        self.variant().map_err(wrap("variant"))?;
        self.distort.base.build().map_err(wrap("distort.base"))?;

        let check = |ok: bool, key: &str, message: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(key, message))
            }
        };
        check(
            !self.strategy.types.is_empty() && self.strategy.types.iter().all(|&x| in_unit_open(x)),
            "strategy.types",
            "need at least one type, all inside (0, 1)",
        )?;
        check(
            !self.sweep.mu.is_empty() && ascending(&self.sweep.mu) && self.sweep.mu[0] > 0.0,
            "sweep.mu",
            "need positive, strictly ascending separations",
        )?;
        let [lo, hi] = self.regimes.bracket;
        check(lo.is_finite() && hi.is_finite() && lo < hi, "regimes.bracket", "need finite lo < hi")?;
        check(self.regimes.points >= 2, "regimes.points", "need at least 2 points")?;
        check(
            ascending(&self.polarize.scan) && self.polarize.scan.iter().all(|r| (0.0..1.0).contains(r)),
            "polarize.scan",
            "need strictly ascending values in [0, 1)",
        )?;
        check(
            ascending(&self.distort.scan) && self.distort.scan.iter().all(|&r| r >= 1.0),
            "distort.scan",
            "need strictly ascending values >= 1",
        )?;
        check(self.verify.n_voters >= 1, "verify.n_voters", "need at least one voter")?;
        check(self.verify.z_max > 0.0, "verify.z_max", "must be positive")?;
        check(
            self.verify
                .types
                .iter()
                .all(|&x| in_unit_open(x) && (x - 0.5).abs() >= crate::strategy::SINGULAR_BAND),
            "verify.types",
            "types must lie in (0, 1) away from 1/2",
        )?;
        check(self.verify.n_alternatives >= 1, "verify.n_alternatives", "need at least one alternative")?;
        check(
            (1..=crate::oracle::dominance::MAX_EXHAUSTIVE_BINS).contains(&self.verify.bins),
            "verify.bins",
            "bins must be between 1 and 24",
        )?;
        Ok(())
    }
}
