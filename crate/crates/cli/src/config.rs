//! Run configuration: a JSON file, command-line overrides, and the typed
//! parameter records of each command. The schema is described in `docs/config.md`.

use std::path::{Path, PathBuf};

use ambigil_core::bounds::RateNormalizer;
use ambigil_core::capacity::spec::EventSpec;
use ambigil_core::capacity::Side;
use ambigil_core::expectation::DEFAULT_STATE_CAP;
use ambigil_core::lil::{Center, VerdictRule};
use ambigil_core::model::ModelFile;
use ambigil_core::model::{make_rademacher_interval, SequenceModel};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use crate::error::{config_err, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Eval,
    Capacity,
    BoundsVerify,
    Gnormal,
    Lil,
    Bc,
    Probe,
}

impl CommandKind {
    pub const ALL: [CommandKind; 7] = [
        CommandKind::Eval,
        CommandKind::Capacity,
        CommandKind::BoundsVerify,
        CommandKind::Gnormal,
        CommandKind::Lil,
        CommandKind::Bc,
        CommandKind::Probe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Eval => "eval",
            CommandKind::Capacity => "capacity",
            CommandKind::BoundsVerify => "bounds-verify",
            CommandKind::Gnormal => "gnormal",
            CommandKind::Lil => "lil",
            CommandKind::Bc => "bc",
            CommandKind::Probe => "probe",
        }
    }
}

/// Where the model comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    /// Path to a model file, relative to the config file.
    Path(PathBuf),
    /// Symmetric two-point laws with scale on a grid, see `make_rademacher_interval`.
    Rademacher {
        rademacher: RademacherSpec,
        horizon: usize,
    },
    Inline(ModelFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RademacherSpec {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    #[serde(default = "one")]
    pub grid: usize,
}

fn one() -> usize {
    1
}

/// Contents of a config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<CommandKind>,
    model: Option<ModelRef>,
    seed: Option<u64>,
    workers: Option<usize>,
    state_cap: Option<u64>,
    #[serde(default)]
    params: Map<String, Value>,
}

/// Everything a run depends on, after overrides. Serialized canonically
/// (sorted keys) for the config hash.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub model: Option<ModelRef>,
    pub seed: Option<u64>,
    pub state_cap: u64,
    pub params: Map<String, Value>,
    /// Not part of the hash: results do not depend on it.
    #[serde(skip)]
    pub workers: usize,
}

/// Command-line layer on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub state_cap: Option<u64>,
    pub params: Map<String, Value>,
}

impl RunConfig {
    pub fn resolve(command: CommandKind, file: Option<&Path>, over: Overrides) -> Result<Self, CliError> {
        let (cfg, base) = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
                let cfg: FileConfig =
                    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                (cfg, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        if let Some(c) = cfg.command {
            if c != command {
                return Err(config_err(format!(
                    "config is for `{}` but the command is `{}`",
                    c.name(),
                    command.name()
                )));
            }
        }
        let model = match over.model {
            Some(p) => Some(ModelRef::Path(p)),
            None => cfg.model.map(|m| match m {
                ModelRef::Path(p) if p.is_relative() => ModelRef::Path(base.join(p)),
                other => other,
            }),
        };
        let mut params = cfg.params;
        merge(&mut params, over.params);
        Ok(Self {
            command,
            model,
            seed: over.seed.or(cfg.seed),
            state_cap: over.state_cap.or(cfg.state_cap).unwrap_or(DEFAULT_STATE_CAP),
            params,
            workers: over.workers.or(cfg.workers).unwrap_or(0),
        })
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn params<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(Value::Object(self.params.clone()))
            .map_err(|e| config_err(format!("params for `{}`: {e}", self.command.name())))
    }

    /// Parameters of a command whose record is chosen by a tag field.
    pub fn tagged_params<T: DeserializeOwned>(&self, tag: &str, default: &str) -> Result<T, CliError> {
        let mut p = self.params.clone();
        p.entry(tag.to_string()).or_insert_with(|| Value::String(default.into()));
        serde_json::from_value(Value::Object(p))
            .map_err(|e| config_err(format!("params for `{}`: {e}", self.command.name())))
    }

    pub fn load_model(&self) -> Result<SequenceModel, CliError> {
        match &self.model {
            None => Err(config_err(format!("`{}` needs a model (config `model` or --model)", self.command.name()))),
            Some(ModelRef::Path(p)) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| config_err(format!("cannot read model {}: {e}", p.display())))?;
                Ok(ModelFile::from_json(&text)?)
            }
            Some(ModelRef::Rademacher { rademacher: r, horizon }) => {
                Ok(SequenceModel::iid(make_rademacher_interval(r.sigma_lo, r.sigma_hi, r.grid)?, *horizon)?)
            }
            Some(ModelRef::Inline(m)) => Ok(m.build()?),
        }
    }

    pub fn require_seed(&self, why: &str) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| config_err(format!("{why} needs a seed (config `seed` or --seed)")))
    }
}

/// Overlay `top` onto `base`; nested objects merge key by key.
fn merge(base: &mut Map<String, Value>, top: Map<String, Value>) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Object(b)), Value::Object(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Accept `x` or `[x, ...]`.
pub fn one_or_many<'de, D, T>(d: D) -> Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalParams {
    pub payoff: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McParams {
    pub strategy: String,
    pub replications: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityParams {
    #[serde(deserialize_with = "one_or_many")]
    pub events: Vec<EventSpec>,
    pub mc: Option<McParams>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundsParams {
    Domination {
        #[serde(default = "default_cases")]
        cases: usize,
        #[serde(default = "default_p_range")]
        p_range: (f64, f64),
        #[serde(default = "default_max_horizon")]
        max_horizon: usize,
        #[serde(default = "default_index_range")]
        index_range: i64,
        #[serde(default = "default_max_points")]
        max_points: usize,
        #[serde(default = "default_max_measures")]
        max_measures: usize,
    },
    Converse(RateParams),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateParams {
    pub z: f64,
    pub gamma: f64,
    pub alpha: Option<f64>,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_normalizer")]
    pub normalizer: RateNormalizer,
    #[serde(deserialize_with = "one_or_many")]
    pub n_list: Vec<usize>,
}

fn default_cases() -> usize {
    1000
}
fn default_p_range() -> (f64, f64) {
    (2.0, 4.0)
}
fn default_max_horizon() -> usize {
    10
}
fn default_index_range() -> i64 {
    4
}
fn default_max_points() -> usize {
    5
}
fn default_max_measures() -> usize {
    4
}
fn default_slack() -> f64 {
    0.1
}
fn default_normalizer() -> RateNormalizer {
    RateNormalizer::LogLog
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnormalParams {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    #[serde(deserialize_with = "one_or_many")]
    pub x: Vec<f64>,
    /// Sample sizes for the lattice comparison; empty for closed forms only.
    #[serde(default, deserialize_with = "one_or_many")]
    pub n: Vec<usize>,
    pub h: Option<f64>,
    #[serde(default = "two")]
    pub grid: usize,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LilParams {
    Conditions {
        #[serde(deserialize_with = "one_or_many")]
        checkpoints: Vec<usize>,
        #[serde(default = "three")]
        p: f64,
        #[serde(default = "unit")]
        alpha: f64,
        #[serde(default)]
        d: f64,
        #[serde(default = "half")]
        eps: f64,
        #[serde(default = "half")]
        delta: f64,
        #[serde(default = "three")]
        wittmann_p: f64,
        #[serde(default)]
        rule: Option<RuleParams>,
    },
    Upper {
        /// `[n, N]` pairs.
        windows: Vec<(usize, usize)>,
        #[serde(deserialize_with = "one_or_many")]
        eps: Vec<f64>,
        #[serde(default = "default_center")]
        center: Center,
    },
    Lower {
        #[serde(deserialize_with = "one_or_many")]
        n: Vec<usize>,
        #[serde(rename = "N", deserialize_with = "one_or_many")]
        end: Vec<usize>,
        #[serde(deserialize_with = "one_or_many")]
        eps: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleParams {
    pub increment_tol: f64,
    pub ratio: f64,
    pub floor: f64,
}

impl From<RuleParams> for VerdictRule {
    fn from(r: RuleParams) -> Self {
        VerdictRule { increment_tol: r.increment_tol, ratio: r.ratio, floor: r.floor }
    }
}

fn three() -> f64 {
    3.0
}
fn unit() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn default_center() -> Center {
    Center::UpperMean
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcParams {
    /// One entry per step: `null` for no event, or a threshold predicate.
    pub events: Option<Vec<Option<StepEventSpec>>>,
    #[serde(default = "hundred")]
    pub families: usize,
    #[serde(default = "default_max_horizon")]
    pub max_horizon: usize,
}

fn hundred() -> usize {
    100
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepEventSpec {
    pub side: Side,
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProbeParams {
    Cluster {
        #[serde(rename = "N", deserialize_with = "one_or_many")]
        end: Vec<usize>,
        #[serde(default, deserialize_with = "one_or_many")]
        sigma: Vec<f64>,
    },
    Continuity {
        phi: String,
        m: usize,
        eps: f64,
    },
    Conjecture(RateParams),
}
