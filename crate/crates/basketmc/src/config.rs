//! Run configuration: a strict TOML schema that maps one-to-one onto a
//! [`SimulationPlan`].
//!
//! Unknown keys are rejected everywhere so a typo like `c_b` under
//! `[intensity]` fails loudly instead of silently pricing a different
//! model. Semantic violations name the offending field by its dotted path.

use serde::{Deserialize, Serialize};

use crate::contagion::{CounterpartyParams, IntensityParams};
use crate::copulas::CopulaSpec;
use crate::driver::{SimulationPlan, Target, DEFAULT_BLOCKS};
use crate::error::Error;
use crate::pricing::{ContractTerms, TrancheSpec};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub copula: CopulaSection,
    pub intensity: IntensitySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterparty: Option<CounterpartySection>,
    pub contract: ContractSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tranches: Option<TranchesSection>,
    pub targets: TargetsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub n_names: usize,
    pub paths: u64,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_blocks")]
    pub blocks: u32,
}

fn default_workers() -> usize {
    1
}

fn default_blocks() -> u32 {
    DEFAULT_BLOCKS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CopulaSection {
    /// One of `product`, `exponential`, `gaussian`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

impl CopulaSection {
    fn to_spec(&self) -> Result<CopulaSpec> {
        let reject_param = |name: &str, value: Option<f64>| -> Result<()> {
            if value.is_some() {
                return Err(Error::invalid(
                    &format!("copula.{name}"),
                    format!("not a parameter of the `{}` copula", self.kind),
                ));
            }
            Ok(())
        };
        let require = |name: &str, value: Option<f64>| -> Result<f64> {
            value.ok_or_else(|| {
                Error::invalid(
                    &format!("copula.{name}"),
                    format!("required by the `{}` copula", self.kind),
                )
            })
        };
        let spec = match self.kind.as_str() {
            "product" => {
                reject_param("c0", self.c0)?;
                reject_param("c1", self.c1)?;
                reject_param("rho", self.rho)?;
                CopulaSpec::Product
            }
            "exponential" => {
                reject_param("rho", self.rho)?;
                CopulaSpec::Exponential {
                    c0: require("c0", self.c0)?,
                    c1: require("c1", self.c1)?,
                }
            }
            "gaussian" => {
                reject_param("c0", self.c0)?;
                reject_param("c1", self.c1)?;
                CopulaSpec::GaussianOneFactor {
                    rho: require("rho", self.rho)?,
                }
            }
            other => {
                return Err(Error::invalid(
                    "copula.kind",
                    format!("unknown copula `{other}` (expected product, exponential, gaussian)"),
                ))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensitySection {
    pub a: f64,
    pub c: f64,
    /// Decay rate; TOML `inf` selects the no-contagion limit.
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterpartySection {
    pub a_b: f64,
    pub c_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractSection {
    pub maturity: f64,
    /// Count of equally spaced payments; exclusive with `payment_dates`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payments: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payment_dates: Option<Vec<f64>>,
    pub recovery: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranchesSection {
    pub attachments: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsSection {
    /// kth-to-default orders to quote.
    #[serde(default)]
    pub cds: Vec<usize>,
    /// Tranche indices to quote; all tranches when omitted and attachments
    /// are present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tranches: Option<Vec<usize>>,
    /// Also quote every requested target gated by counterparty survival.
    #[serde(default)]
    pub with_counterparty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_precision")]
    pub precision: usize,
    #[serde(default)]
    pub loss_given_default_scaling: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

fn default_precision() -> usize {
    4
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            precision: default_precision(),
            loss_given_default_scaling: false,
            csv: None,
        }
    }
}

impl RunConfig {
    /// Parse and fully validate a configuration document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::ConfigSyntax(e.to_string()))?;
        config.to_plan()?;
        Ok(config)
    }

    /// Serialise back to TOML; round-trips losslessly through
    /// [`RunConfig::from_toml_str`].
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::ConfigSyntax(e.to_string()))
    }

    /// Build the validated simulation plan this configuration describes.
    pub fn to_plan(&self) -> Result<SimulationPlan> {
        let copula = self.copula.to_spec()?;
        let intensity = IntensityParams::new(self.intensity.a, self.intensity.c, self.intensity.d)?;
        let counterparty = self
            .counterparty
            .as_ref()
            .map(|cp| CounterpartyParams::new(cp.a_b, cp.c_b))
            .transpose()?;

        let terms = match (&self.contract.payments, &self.contract.payment_dates) {
            (Some(n), None) => ContractTerms::equally_spaced(
                self.contract.maturity,
                *n,
                self.contract.recovery,
                self.contract.rate,
            )?,
            (None, Some(dates)) => ContractTerms::new(
                self.contract.maturity,
                dates.clone(),
                self.contract.recovery,
                self.contract.rate,
            )?,
            (Some(_), Some(_)) => {
                return Err(Error::invalid(
                    "contract.payments",
                    "give either `payments` or `payment_dates`, not both",
                ))
            }
            (None, None) => {
                return Err(Error::invalid(
                    "contract.payments",
                    "one of `payments` or `payment_dates` is required",
                ))
            }
        };
        let terms = terms.with_loss_scaling(self.output.loss_given_default_scaling);

        let tranches = self
            .tranches
            .as_ref()
            .map(|t| TrancheSpec::new(t.attachments.clone()))
            .transpose()?;

        let mut targets = Vec::new();
        let mut cds_orders = self.targets.cds.clone();
        cds_orders.sort_unstable();
        cds_orders.dedup();
        for &k in &cds_orders {
            targets.push(Target::Cds { k });
        }
        let tranche_indices: Vec<usize> = match (&self.targets.tranches, &tranches) {
            (Some(indices), _) => {
                let mut indices = indices.clone();
                indices.sort_unstable();
                indices.dedup();
                indices
            }
            (None, Some(spec)) => (0..spec.count()).collect(),
            (None, None) => Vec::new(),
        };
        for &index in &tranche_indices {
            targets.push(Target::Tranche { index });
        }
        if self.targets.with_counterparty {
            if self.counterparty.is_none() {
                return Err(Error::invalid(
                    "targets.with_counterparty",
                    "requires a [counterparty] section",
                ));
            }
            for &k in &cds_orders {
                targets.push(Target::CdsCounterparty { k });
            }
            for &index in &tranche_indices {
                targets.push(Target::TrancheCounterparty { index });
            }
        }

        let plan = SimulationPlan {
            n_names: self.run.n_names,
            paths: self.run.paths,
            seed: self.run.seed,
            workers: self.run.workers,
            blocks: self.run.blocks,
            copula,
            intensity,
            counterparty,
            terms,
            tranches,
            targets,
        };
        plan.validate()?;
        Ok(plan)
    }
}

/// An evaluation grid `t0:t1:steps` (steps = interval count; the dump has
/// steps + 1 rows including both endpoints).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

/// Largest accepted interval count; keeps a typo from requesting a
/// gigabyte-sized dump.
pub const MAX_GRID_STEPS: usize = 10_000_000;

impl GridSpec {
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let width = self.end - self.start;
        (0..=self.steps).map(move |i| {
            if i == self.steps {
                self.end
            } else {
                self.start + width * (i as f64 / self.steps as f64)
            }
        })
    }
}

/// Parse a `t0:t1:steps` grid description.
pub fn parse_grid(text: &str) -> Result<GridSpec> {
    let bad = |message: &str| Error::invalid("grid", message);
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected `t0:t1:steps`"));
    }
    let start: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| bad("t0 is not a number"))?;
    let end: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| bad("t1 is not a number"))?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| bad("steps is not a positive integer"))?;
    if !(start.is_finite() && start >= 0.0) {
        return Err(bad("t0 must be finite and >= 0"));
    }
    if !(end.is_finite() && end > start) {
        return Err(bad("t1 must be finite and > t0"));
    }
    if steps == 0 {
        return Err(bad("steps must be at least 1"));
    }
    if steps > MAX_GRID_STEPS {
        return Err(bad("steps is unreasonably large"));
    }
    Ok(GridSpec { start, end, steps })
}
