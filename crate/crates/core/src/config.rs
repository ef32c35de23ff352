//! TOML run configuration.
//!
//! ```toml
//! seed = 0
//! deterministic = true
//!
//! [grid]
//! N = 32
//!
//! [scenario]
//! name = "S5"
//! params = { degree = 1 }
//!
//! [group]
//! name = "SL"
//!
//! [flow]
//! dt = "auto"          # a number, "auto" or "adaptive"
//! t_max = 200.0
//! tol_grad = 1e-5
//! integrator = "rk4"   # or "etd-euler"
//! monitor_every = 100
//!
//! [output]
//! dir = "runs/s5"
//! formats = ["json"]
//! ```
//!
//! Optional tables: `[resume]` (`checkpoint`, `step`, `t`) continues a run
//! from a checkpoint, `[sweep]` (`N`, `dt`, `[sweep.params]`) lists values
//! whose Cartesian product `sweep` runs. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::flow::{FlowConfig, Integrator, TimeStep};
use crate::grid::{make_grid, Grid};
use crate::group::GroupName;
use crate::higgs::HiggsPair;
use crate::reduction::LeviReduction;
use crate::scenario::{Scenario, ScenarioName};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub deterministic: bool,
    pub grid: GridSection,
    pub scenario: ScenarioSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSection>,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resume: Option<ResumeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: ScenarioName,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    pub name: GroupName,
}

/// `flow.dt`: a positive number, `"auto"` or `"adaptive"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtSetting {
    Fixed(f64),
    Auto,
    Adaptive,
}

impl Serialize for DtSetting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DtSetting::Fixed(dt) => s.serialize_f64(*dt),
            DtSetting::Auto => s.serialize_str("auto"),
            DtSetting::Adaptive => s.serialize_str("adaptive"),
        }
    }
}

impl fmt::Display for DtSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DtSetting::Fixed(dt) => write!(f, "{dt}"),
            DtSetting::Auto => f.write_str("auto"),
            DtSetting::Adaptive => f.write_str("adaptive"),
        }
    }
}

impl<'de> Deserialize<'de> for DtSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = DtSetting;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive number, \"auto\" or \"adaptive\"")
            }

            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<DtSetting, E> {
                Ok(DtSetting::Fixed(v))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<DtSetting, E> {
                Ok(DtSetting::Fixed(v as f64))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<DtSetting, E> {
                Ok(DtSetting::Fixed(v as f64))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<DtSetting, E> {
                match v {
                    "auto" => Ok(DtSetting::Auto),
                    "adaptive" => Ok(DtSetting::Adaptive),
                    other => Err(E::invalid_value(serde::de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(Visitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(default = "default_dt")]
    pub dt: DtSetting,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_tol_grad")]
    pub tol_grad: f64,
    #[serde(default = "default_integrator")]
    pub integrator: Integrator,
    #[serde(default = "default_monitor_every")]
    pub monitor_every: u64,
    #[serde(default)]
    pub dealias: bool,
    #[serde(default)]
    pub allow_non_higgs: bool,
    /// Restrict bump scenarios to their split reduction.
    #[serde(default = "yes")]
    pub reduce: bool,
    /// Adaptive step: fraction of the inverse stiffness estimate.
    #[serde(default = "default_safety")]
    pub safety: f64,
    /// Adaptive step: upper bound.
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
}

fn default_dt() -> DtSetting {
    DtSetting::Auto
}
fn default_t_max() -> f64 {
    FlowConfig::default().t_max
}
fn default_tol_grad() -> f64 {
    FlowConfig::default().tol_grad
}
fn default_integrator() -> Integrator {
    FlowConfig::default().integrator
}
fn default_monitor_every() -> u64 {
    FlowConfig::default().monitor_every
}
fn default_safety() -> f64 {
    match TimeStep::DEFAULT_ADAPTIVE {
        TimeStep::Adaptive { safety, .. } => safety,
        _ => unreachable!(),
    }
}
fn default_dt_max() -> f64 {
    match TimeStep::DEFAULT_ADAPTIVE {
        TimeStep::Adaptive { dt_max, .. } => dt_max,
        _ => unreachable!(),
    }
}
fn yes() -> bool {
    true
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_max: default_t_max(),
            tol_grad: default_tol_grad(),
            integrator: default_integrator(),
            monitor_every: default_monitor_every(),
            dealias: false,
            allow_non_higgs: false,
            reduce: true,
            safety: default_safety(),
            dt_max: default_dt_max(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryFormat {
    Json,
    Toml,
}

impl SummaryFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            SummaryFormat::Json => "summary.json",
            SummaryFormat::Toml => "summary.toml",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<SummaryFormat>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("ymhflow-out")
}
fn default_formats() -> Vec<SummaryFormat> {
    vec![SummaryFormat::Json]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResumeSection {
    pub checkpoint: PathBuf,
    pub step: u64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, rename = "N", skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dt: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Vec<f64>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(crate::error::io_at(path))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks everything that does not need a grid.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if let Err(e) = make_grid(self.grid.n) {
            return bad(format!("grid.N: {e}"));
        }
        self.scenario()?;
        if let Err(e) = self.flow_config(None).validate() {
            return bad(format!("flow: {e}"));
        }
        if self.output.formats.is_empty() {
            return bad("output.formats must name at least one format".into());
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::with_params(
            self.scenario.name,
            self.group.as_ref().map(|g| g.name),
            &self.scenario.params,
        )
        .map_err(|e| Error::Config(format!("scenario: {e}")))
    }

    pub fn grid(&self) -> Result<Grid> {
        make_grid(self.grid.n)
    }

    pub fn time_step(&self) -> TimeStep {
        match self.flow.dt {
            DtSetting::Fixed(dt) => TimeStep::Fixed(dt),
            DtSetting::Auto => TimeStep::Auto,
            DtSetting::Adaptive => TimeStep::Adaptive {
                safety: self.flow.safety,
                dt_max: self.flow.dt_max,
            },
        }
    }

    pub fn flow_config(&self, reduction: Option<Arc<LeviReduction>>) -> FlowConfig {
        FlowConfig {
            dt: self.time_step(),
            t_max: self.flow.t_max,
            tol_grad: self.flow.tol_grad,
            integrator: self.flow.integrator,
            monitor_every: self.flow.monitor_every,
            dealias: self.flow.dealias,
            allow_non_higgs: self.flow.allow_non_higgs,
            reduction,
        }
    }

    /// Initial pair, its reduction (if enabled and available) and the flow
    /// configuration that uses it.
    pub fn prepare(&self) -> Result<(Scenario, HiggsPair, FlowConfig)> {
        let scenario = self.scenario()?;
        let grid = self.grid()?;
        let pair = scenario.build(&grid)?;
        let reduction = if self.flow.reduce {
            scenario.levi_reduction(&grid, pair.alpha())?.map(Arc::new)
        } else {
            None
        };
        Ok((scenario, pair, self.flow_config(reduction)))
    }

    /// One configuration per point of the `[sweep]` grid, labelled by the
    /// swept values. Errors if the grid is missing or empty.
    pub fn expand_sweep(&self) -> Result<Vec<(String, RunConfig)>> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config("sweep needs a [sweep] table".into()))?;
        let mut axes: Vec<(String, Vec<f64>)> = Vec::new();
        if !sweep.n.is_empty() {
            axes.push(("N".into(), sweep.n.iter().map(|&n| n as f64).collect()));
        }
        if !sweep.dt.is_empty() {
            axes.push(("dt".into(), sweep.dt.clone()));
        }
        for (k, v) in &sweep.params {
            if v.is_empty() {
                return Err(Error::Config(format!("sweep.params.{k} is empty")));
            }
            axes.push((k.clone(), v.clone()));
        }
        if axes.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for (name, values) in &axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push((name.clone(), v));
                        q
                    })
                })
                .collect();
        }
        let mut out = Vec::with_capacity(points.len());
        for point in points {
            let mut cfg = self.clone();
            cfg.sweep = None;
            let mut label = Vec::new();
            for (name, v) in &point {
                match name.as_str() {
                    "N" => cfg.grid.n = *v as usize,
                    "dt" => cfg.flow.dt = DtSetting::Fixed(*v),
                    key => {
                        cfg.scenario.params.insert(key.to_string(), *v);
                    }
                }
                label.push(format!("{name}={v}"));
            }
            let label = label.join(",");
            cfg.output.dir = self.output.dir.join(label.replace(['=', ','], "_"));
            cfg.validate()?;
            out.push((label, cfg));
        }
        Ok(out)
    }
}
