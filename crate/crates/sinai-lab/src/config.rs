//! Run configuration: the JSON schema accepted by `sinai-lab run`.
//!
//! The schema is strict. Unknown keys are rejected with an error naming the
//! key (catching typos like `"sedd"` before any compute is spent), and the
//! master seed is mandatory so that no run ever falls back to ambient
//! entropy.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use sinai_core::envgen::{make_env_law, EnvLaw, LawKind};
use sinai_core::experiments::EventParams;

/// Environment law selector as it appears in configs:
/// `{"kind": "two-point", "p": 0.3}` or
/// `{"kind": "logistic-uniform", "c": 1.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind")]
pub enum LawSpec {
    #[serde(rename = "two-point")]
    TwoPoint { p: f64 },
    #[serde(rename = "logistic-uniform")]
    LogisticUniform { c: f64 },
}

impl LawSpec {
    pub fn build(&self) -> anyhow::Result<EnvLaw> {
        let law = match *self {
            LawSpec::TwoPoint { p } => make_env_law(LawKind::TwoPoint, p),
            LawSpec::LogisticUniform { c } => make_env_law(LawKind::LogisticUniform, c),
        };
        law.map_err(|e| anyhow!("config error: {e}"))
    }
}

/// Parameters of the `density` suite (and the `density table` subcommand).
/// Defaults reproduce the standard table: x in [-5, 5], step 0.01,
/// certified truncation error at most 1e-10 per point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityParams {
    #[serde(default = "default_density_from")]
    pub from: f64,
    #[serde(default = "default_density_to")]
    pub to: f64,
    #[serde(default = "default_density_step")]
    pub step: f64,
    #[serde(default = "default_density_tol")]
    pub tol: f64,
}

fn default_density_from() -> f64 {
    -5.0
}
fn default_density_to() -> f64 {
    5.0
}
fn default_density_step() -> f64 {
    0.01
}
fn default_density_tol() -> f64 {
    1e-10
}

impl Default for DensityParams {
    fn default() -> Self {
        DensityParams { from: -5.0, to: 5.0, step: 0.01, tol: 1e-10 }
    }
}

/// The suites a config can name. `all` expands to every suite whose
/// required keys are present in the config (at least `density`, which needs
/// none beyond the seed).
pub const SUITES: &[&str] = &[
    "density", "bh-llt", "renewal", "slopes", "constants", "events", "coupling", "sinai-llt",
    "all",
];

/// A parsed and validated run configuration.
///
/// Required keys: `law`, `suite`, `seed`. The numeric keys are per-suite;
/// a suite missing one of its required keys fails with a message naming it.
/// `threads` and `out` may also be set on the command line, which takes
/// precedence; neither influences any computed number.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Config schema version; only 1 is accepted (optional for brevity).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<u32>,
    pub law: LawSpec,
    pub suite: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_grid: Option<Vec<f64>>,
    /// Walk length for the events / coupling / sinai-llt suites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Monte Carlo replicate count (environments).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_envs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<Vec<i64>>,
    /// Persistence horizons for the constants suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persistence_grid: Option<Vec<u64>>,
    /// Excess-height thresholds for the slopes suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_grid: Option<Vec<i64>>,
    /// Trajectories per environment for the direct LLT method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walks_per_env: Option<u64>,
    /// LLT estimation method: "direct", "dp" or "proxy".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_params: Option<EventParams>,
    /// Environment-classification budget for the coupling suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_attempts: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityParams>,
}

impl RunConfig {
    /// Parse a config file, rejecting unknown keys and checking the
    /// cross-field invariants that serde cannot express.
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow!("config error in {}: {e}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if let Some(s) = self.schema {
            if s != 1 {
                bail!("config error: unsupported schema version {s} (expected 1)");
            }
        }
        if !SUITES.contains(&self.suite.as_str()) {
            bail!(
                "config error: unknown suite '{}' (expected one of {})",
                self.suite,
                SUITES.join(", ")
            );
        }
        if let Some(t) = self.threads {
            if t == 0 {
                bail!("config error: threads must be at least 1");
            }
        }
        if let Some(m) = &self.method {
            if !["direct", "dp", "proxy"].contains(&m.as_str()) {
                bail!("config error: unknown method '{m}' (expected direct, dp or proxy)");
            }
        }
        Ok(())
    }

    /// Fetch a required per-suite key, naming it on failure.
    pub fn require<T: Copy>(&self, suite: &str, key: &str, value: Option<T>) -> anyhow::Result<T> {
        value.ok_or_else(|| anyhow!("config error: suite '{suite}' requires key '{key}'"))
    }
}
