//! JSON run configuration, validation and sweep expansion.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fock::{minimal_thermal_dim, OscillatorSpec, TruncationPolicy};
use crate::herald::{FailPolicy, ProtocolMode, SpinSpec};
use crate::pfunction::GridConfig;
use crate::phys::{spec_from_lab, LabSetup};
use crate::pulse::PulseSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Fock,
    Pfunction,
    CoolingModel,
    Both,
}

/// One sweep axis: a dotted path into the config and the values it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub engine: Engine,
    /// Required unless `lab` is given. `dim: 0` or an omitted `dim` picks
    /// the smallest truncation that passes the thermal-tail rule.
    #[serde(default)]
    pub oscillator: Option<OscillatorSpec>,
    #[serde(default)]
    pub spin: SpinSpec,
    /// Required unless `lab` is given.
    #[serde(default)]
    pub schedule: Option<PulseSchedule>,
    /// Lab numbers; fills `oscillator`, `spin` and `schedule` where those are absent.
    #[serde(default)]
    pub lab: Option<LabSetup>,
    #[serde(default)]
    pub mode: ProtocolMode,
    #[serde(default)]
    pub on_fail: FailPolicy,
    #[serde(default)]
    pub truncation: TruncationPolicy,
    #[serde(default)]
    pub n_trajectories: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Resolved parameter set for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    pub oscillator: OscillatorSpec,
    pub spin: SpinSpec,
    pub schedule: PulseSchedule,
    /// Feasibility notes from the lab conversion.
    pub warnings: Vec<String>,
}

/// Truncation used when none is given.
pub fn auto_dim(n_thermal: f64) -> usize {
    minimal_thermal_dim(n_thermal).max((10.0 * (n_thermal + 1.0)).ceil() as usize)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.oscillator.is_none() && self.lab.is_none() {
            return Err(Error::validation("oscillator", "required unless `lab` is given"));
        }
        if self.schedule.is_none() && self.lab.is_none() {
            return Err(Error::validation("schedule", "required unless `lab` is given"));
        }
        if self.n_trajectories > 0 && self.seed.is_none() {
            return Err(Error::validation("seed", "required when n_trajectories > 0"));
        }
        if self.mode == ProtocolMode::Trajectory && self.seed.is_none() {
            return Err(Error::validation("seed", "required in trajectory mode"));
        }
        if let Some(lab) = &self.lab {
            lab.validate()?;
        }
        let r = self.resolve()?;
        r.oscillator.validate()?;
        r.spin.validate()?;
        r.schedule.validate(r.oscillator.omega)?;
        if self.engine != Engine::Fock && self.engine != Engine::CoolingModel && r.oscillator.n_thermal <= 1e-9 {
            return Err(Error::validation(
                "oscillator.n_thermal",
                "the phase-space engine needs a positive bath occupancy",
            ));
        }
        let template = self.template_value()?;
        for (i, axis) in self.sweep.iter().enumerate() {
            if axis.values.is_empty() {
                return Err(Error::validation(format!("sweep[{i}].values"), "must not be empty"));
            }
            if lookup(&template, &axis.path).is_none() {
                return Err(Error::validation(
                    format!("sweep[{i}].path"),
                    format!("`{}` does not name a config parameter", axis.path),
                ));
            }
        }
        Ok(())
    }

    /// Explicit sections win over values derived from `lab`.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let bundle = match &self.lab {
            Some(lab) => Some(spec_from_lab(lab)?),
            None => None,
        };
        let mut oscillator = match (&self.oscillator, &bundle) {
            (Some(o), _) => *o,
            (None, Some(b)) => b.oscillator,
            (None, None) => return Err(Error::validation("oscillator", "missing")),
        };
        if oscillator.dim == 0 {
            oscillator.dim = auto_dim(oscillator.n_thermal);
        }
        let schedule = match (&self.schedule, &bundle) {
            (Some(s), _) => s.clone(),
            (None, Some(b)) => b.schedule.clone(),
            (None, None) => return Err(Error::validation("schedule", "missing")),
        };
        let spin = match (&bundle, self.spin == SpinSpec::default()) {
            (Some(b), true) => b.spin,
            _ => self.spin,
        };
        Ok(ResolvedRun {
            oscillator,
            spin,
            schedule,
            warnings: bundle.map(|b| b.warnings).unwrap_or_default(),
        })
    }

    /// The config with every default written out, used to check sweep paths.
    fn template_value(&self) -> Result<Value> {
        let mut base = self.clone();
        base.sweep.clear();
        serde_json::to_value(&base).map_err(|e| Error::Numeric(e.to_string()))
    }

    /// Cartesian product of the sweep axes, first axis slowest. Each child
    /// writes to `output_dir/point_NNN`.
    pub fn expand_sweep(&self) -> Result<Vec<RunConfig>> {
        if self.sweep.is_empty() {
            return Ok(vec![self.clone()]);
        }
        let template = self.template_value()?;
        let mut children = Vec::new();
        let total: usize = self.sweep.iter().map(|a| a.values.len()).product();
        for index in 0..total {
            let mut value = template.clone();
            let mut rem = index;
            let mut picks = vec![0; self.sweep.len()];
            for (k, axis) in self.sweep.iter().enumerate().rev() {
                picks[k] = rem % axis.values.len();
                rem /= axis.values.len();
            }
            for (axis, &pick) in self.sweep.iter().zip(&picks) {
                set_path(&mut value, &axis.path, axis.values[pick].clone())?;
            }
            let mut child: RunConfig = serde_json::from_value(value)
                .map_err(|e| Error::validation(format!("sweep point {index}"), e.to_string()))?;
            child.output_dir = self.output_dir.join(format!("point_{index:03}"));
            child.validate()?;
            children.push(child);
        }
        Ok(children)
    }
}

fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(v, |cur, key| match cur {
        Value::Object(map) => map.get(key),
        Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get(i)),
        _ => None,
    })
}

fn set_path(v: &mut Value, path: &str, new: Value) -> Result<()> {
    let mut cur = v;
    for key in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get_mut(key),
            Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| Error::validation(path, "does not name a config parameter"))?;
    }
    *cur = new;
    Ok(())
}

/// Parses and validates a UTF-8 JSON config.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    // Syntax first, so malformed text reports a position rather than a field.
    if let Err(e) = serde_json::from_str::<Value>(text) {
        return Err(Error::ConfigParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        });
    }
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.to_string();
        Error::validation(field_name(&path), msg)
    })?;
    if let Some(osc) = config.oscillator.as_mut() {
        if osc.dim == 0 {
            osc.dim = auto_dim(osc.n_thermal);
        }
    }
    config.validate()?;
    Ok(config)
}

/// Dotted name of the offending field. For unknown keys the path already
/// ends in the key itself.
fn field_name(path: &str) -> String {
    if path == "." {
        "config".to_string()
    } else {
        path.to_string()
    }
}

/// Reads and parses a config file.
pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}
