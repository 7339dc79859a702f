//! Run configuration shared by the subcommands and `run --config`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use quadps::models::{LatticeModelSpec, ModelKind};
use quadps::sweep::{FlowOperator, GridSpec, SweptAxis, DEFAULT_RESOLUTION};
use quadps::{GapKind, ProbePoint};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const ACCURACY_ENV: &str = "QUADPS_ACCURACY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Gap,
    Sweep,
    Flow,
    States,
    Truncate,
    Examples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: LatticeModelSpec,
    pub command: Command,
    /// Probe in unscaled units; for sweeps it fixes the coordinates not swept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    /// `name=min:max[:count]` axes separated by commas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<GapKind>,
    #[serde(default)]
    pub both: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kappas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rhos: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub pruning: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<FlowOperator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Truncation: also compute the full gap for comparison.
    #[serde(default)]
    pub reference: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

impl RunConfig {
    pub fn new(model: LatticeModelSpec, command: Command) -> Self {
        RunConfig {
            model,
            command,
            lambda: None,
            grid: None,
            kind: None,
            both: false,
            kappa: None,
            kappas: Vec::new(),
            rhos: Vec::new(),
            epsilon: None,
            pruning: false,
            operator: None,
            samples: None,
            reference: false,
            output: None,
            accuracy: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))
    }

    /// Accuracy from the config, then `QUADPS_ACCURACY`, then the library default.
    pub fn resolved_accuracy(&self) -> Result<Option<f64>, CliError> {
        let acc = match self.accuracy {
            Some(a) => Some(a),
            None => match std::env::var(ACCURACY_ENV) {
                Ok(s) => Some(
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::validation(format!("{ACCURACY_ENV}: not a number: `{s}`")))?,
                ),
                Err(_) => None,
            },
        };
        if let Some(a) = acc {
            if !(a > 0.0 && a < 1.0) {
                return Err(CliError::validation(format!("accuracy must lie in (0, 1), got {a}")));
            }
        }
        Ok(acc)
    }

    pub fn probe(&self) -> Result<ProbePoint, CliError> {
        let coords = self
            .lambda
            .clone()
            .ok_or_else(|| CliError::validation("this command needs --lambda"))?;
        Ok(ProbePoint::new(coords)?)
    }

    /// Checks everything that can be checked before the model is built.
    pub fn validate(&self) -> Result<(), CliError> {
        self.resolved_accuracy()?;
        for p in &self.model.explicit_matrices {
            if !p.is_file() {
                return Err(CliError::validation(format!("matrix file {} does not exist", p.display())));
            }
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::validation(format!("{name} must be positive, got {v}")))
            }
        };
        if let Some(k) = self.kappa {
            positive("kappa", k)?;
        }
        for &k in &self.kappas {
            positive("kappa", k)?;
        }
        for &r in &self.rhos {
            positive("rho", r)?;
        }
        if let Some(e) = self.epsilon {
            positive("epsilon", e)?;
        }
        match self.command {
            Command::Gap | Command::States | Command::Truncate => {
                self.probe()?;
            }
            Command::Sweep => {
                if self.grid.is_none() {
                    return Err(CliError::validation("sweep needs --grid"));
                }
                if self.pruning && self.epsilon.is_none() {
                    return Err(CliError::validation("pruning needs --epsilon"));
                }
            }
            Command::Flow => {
                self.probe()?;
                if self.model.kind != ModelKind::SshPath {
                    return Err(CliError::validation("flow needs a path model (ssh-path)"));
                }
                if self.samples == Some(0) {
                    return Err(CliError::validation("flow needs at least one sample"));
                }
            }
            Command::Examples => {}
        }
        if self.command == Command::States && self.kappas.is_empty() && self.kappa.is_none() {
            return Err(CliError::validation("states needs --kappa"));
        }
        if self.command == Command::Truncate && self.rhos.is_empty() {
            return Err(CliError::validation("truncate needs --rho"));
        }
        if let Some(dir) = &self.output {
            check_writable_dir(dir)?;
        }
        Ok(())
    }
}

/// Creates `dir` if needed and confirms a file can be created in it.
pub fn check_writable_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::validation(format!("cannot create output directory {}: {e}", dir.display())))?;
    tempfile::NamedTempFile::new_in(dir)
        .map(drop)
        .map_err(|e| CliError::validation(format!("output directory {} is not writable: {e}", dir.display())))
}

/// Probe coordinate named by a grid axis: `x`, `y`, `z` are the leading
/// coordinates, `E`/`energy`/`h` the last, and a bare index works too.
pub fn axis_coord(name: &str, d: usize) -> Result<usize, CliError> {
    let idx = match name {
        "x" => 0,
        "y" => 1,
        "z" => 2,
        "E" | "e" | "energy" | "h" => d - 1,
        other => other
            .parse::<usize>()
            .map_err(|_| CliError::validation(format!("unknown grid axis `{other}`")))?,
    };
    if idx >= d {
        return Err(CliError::validation(format!("grid axis `{name}` exceeds the {d} probe coordinates")));
    }
    Ok(idx)
}

/// Parses `x=0:9:101,E=-3:3:101`; coordinates not swept come from `fixed`
/// (zero when absent). The flag is set when some count took the default.
pub fn parse_grid(text: &str, d: usize, fixed: Option<&[f64]>) -> Result<(GridSpec, bool), CliError> {
    let mut axes = Vec::new();
    let mut defaulted = false;
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, range) = part
            .split_once('=')
            .ok_or_else(|| CliError::validation(format!("grid axis `{part}` needs name=min:max[:count]")))?;
        let fields: Vec<&str> = range.split(':').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(CliError::validation(format!("grid axis `{part}` needs name=min:max[:count]")));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::validation(format!("grid axis `{part}`: bad number `{s}`")))
        };
        let count = match fields.get(2) {
            Some(s) => s
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::validation(format!("grid axis `{part}`: bad count `{s}`")))?,
            None => {
                defaulted = true;
                DEFAULT_RESOLUTION
            }
        };
        let name = name.trim();
        axes.push(SweptAxis::new(axis_coord(name, d)?, name, num(fields[0])?, num(fields[1])?, count));
    }
    if let Some(f) = fixed {
        if f.len() != d {
            return Err(CliError::validation(format!("lambda has {} coordinates, the model {d}", f.len())));
        }
    }
    let mut fixed_coords = BTreeMap::new();
    for j in 0..d {
        if axes.iter().all(|a| a.coord != j) {
            fixed_coords.insert(j, fixed.map_or(0.0, |f| f[j]));
        }
    }
    let spec = GridSpec::new(axes, fixed_coords);
    spec.validate(d)?;
    Ok((spec, defaulted))
}
