use std::path::{Path, PathBuf};

use bsde_core::problems::{ProblemParams, PROBLEM_NAMES};
use bsde_core::solver::{SchemeMode, SolverOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::{Command, CommonArgs};
use crate::error::{config, CliError};

pub const DEFAULT_PATHS: usize = 100_000;
pub const DEFAULT_STEPS: usize = 20;
pub const DEFAULT_ORACLE_STEPS: usize = 3;
pub const DEFAULT_CONTROL_DEGREE: usize = 2;
pub const DEFAULT_CONTROL_GRID: usize = 17;
pub const DEFAULT_N_LIST: [usize; 4] = [8, 16, 32, 64];
pub const DEFAULT_Z_SUBSTEPS: usize = 8;
pub const DEFAULT_N_INNER: usize = 100_000;

/// Contents of a `--config` TOML file. Keys mirror the long flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub problem: Option<String>,
    #[serde(rename = "N")]
    pub n_paths: Option<usize>,
    #[serde(rename = "n")]
    pub n_steps: Option<usize>,
    pub seed: Option<u64>,
    pub basis_degree: Option<DegreeSpec>,
    pub control_grid: Option<usize>,
    pub lambda: Option<f64>,
    pub mode: Option<String>,
    pub refit_sup: Option<bool>,
    pub truncate: Option<f64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub h_const: Option<f64>,
    pub x0: Option<f64>,
    pub horizon: Option<f64>,
    pub n_list: Option<Vec<usize>>,
    pub z_substeps: Option<usize>,
    pub n_inner: Option<usize>,
}

/// `basis-degree = 3` or `basis-degree = "3,2"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DegreeSpec {
    State(usize),
    Text(String),
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| config(e.to_string().trim_end().to_string()))
    }
}

/// Fully resolved settings of one command. Everything except `threads` and
/// `out` enters the config hash.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub command: String,
    pub problem: String,
    #[serde(rename = "N")]
    pub n_paths: usize,
    #[serde(rename = "n")]
    pub n_steps: usize,
    pub seed: u64,
    pub state_degree: usize,
    pub control_degree: usize,
    pub control_grid: usize,
    pub lambda: Option<f64>,
    pub mode: String,
    pub refit_sup: bool,
    pub truncate: Option<f64>,
    pub delta: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub h_const: f64,
    pub x0: Option<f64>,
    pub horizon: Option<f64>,
    pub n_list: Vec<usize>,
    pub z_substeps: usize,
    pub n_inner: usize,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(command: &Command) -> Result<Self, CliError> {
        let args = command.common();
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let (name, n_list, z_substeps, n_inner) = match command {
            Command::Run(_) => ("run", None, None, None),
            Command::Converge { n_list, z_substeps, .. } => {
                let list = n_list.as_deref().map(parse_list).transpose()?;
                ("converge", list, *z_substeps, None)
            }
            Command::Oracle { n_inner, .. } => ("oracle", None, None, *n_inner),
        };
        Self::merge(name, args, file, n_list, z_substeps, n_inner)
    }

    fn merge(
        command: &str,
        args: &CommonArgs,
        file: FileConfig,
        n_list: Option<Vec<usize>>,
        z_substeps: Option<usize>,
        n_inner: Option<usize>,
    ) -> Result<Self, CliError> {
        let problem = args
            .problem
            .clone()
            .or(file.problem)
            .ok_or_else(|| config("missing `problem`"))?;
        if !PROBLEM_NAMES.contains(&problem.as_str()) {
            return Err(config(format!(
                "unknown problem `{problem}` (known: {})",
                PROBLEM_NAMES.join(", ")
            )));
        }
        let default_steps = if command == "oracle" {
            DEFAULT_ORACLE_STEPS
        } else {
            DEFAULT_STEPS
        };
        let default_degree = if problem == "manufactured-sine" { 6 } else { 3 };
        let degree = match (args.basis_degree.clone(), file.basis_degree) {
            (Some(text), _) | (None, Some(DegreeSpec::Text(text))) => Some(parse_degree(&text)?),
            (None, Some(DegreeSpec::State(p))) => Some((p, None)),
            (None, None) => None,
        };
        let (state_degree, control_degree) = match degree {
            Some((p, q)) => (p, q.unwrap_or(DEFAULT_CONTROL_DEGREE)),
            None => (default_degree, DEFAULT_CONTROL_DEGREE),
        };
        let mode: SchemeMode = args
            .mode
            .clone()
            .or(file.mode)
            .map(|m| m.parse().map_err(|e: String| config(format!("`mode`: {e}"))))
            .transpose()?
            .unwrap_or_default();
        let n_list = match command {
            "converge" => n_list.or(file.n_list).unwrap_or_else(|| DEFAULT_N_LIST.to_vec()),
            _ => Vec::new(),
        };
        let resolved = Self {
            command: command.to_string(),
            problem,
            n_paths: args.n_paths.or(file.n_paths).unwrap_or(DEFAULT_PATHS),
            n_steps: args.n_steps.or(file.n_steps).unwrap_or(default_steps),
            seed: args.seed.or(file.seed).unwrap_or(0),
            state_degree,
            control_degree,
            control_grid: args.control_grid.or(file.control_grid).unwrap_or(DEFAULT_CONTROL_GRID),
            lambda: args.lambda.or(file.lambda),
            mode: mode.to_string(),
            refit_sup: args.refit_sup || file.refit_sup.unwrap_or(false),
            truncate: args.truncate.or(file.truncate),
            delta: args.delta.or(file.delta).unwrap_or(ProblemParams::default().delta),
            alpha: args.alpha.or(file.alpha).unwrap_or(ProblemParams::default().alpha),
            gamma: args.gamma.or(file.gamma).unwrap_or(ProblemParams::default().gamma),
            h_const: args
                .h_const
                .or(file.h_const)
                .unwrap_or(ProblemParams::default().h_const),
            x0: args.x0.or(file.x0),
            horizon: args.horizon.or(file.horizon),
            n_list,
            z_substeps: z_substeps.or(file.z_substeps).unwrap_or(DEFAULT_Z_SUBSTEPS),
            n_inner: n_inner.or(file.n_inner).unwrap_or(DEFAULT_N_INNER),
            threads: args.threads.or(file.threads),
            out: args.out.clone().or(file.out),
        };
        resolved.validate()?;
        Ok(resolved)
    }

    fn validate(&self) -> Result<(), CliError> {
        let counts = [
            ("N", self.n_paths),
            ("n", self.n_steps),
            ("control-grid", self.control_grid),
            ("z-substeps", self.z_substeps),
            ("n-inner", self.n_inner),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(config(format!("`{key}` must be positive")));
            }
        }
        if self.threads == Some(0) {
            return Err(config("`threads` must be positive"));
        }
        if let Some(b) = self.truncate {
            if !(b.is_finite() && b > 0.0) {
                return Err(config(format!("`truncate` must be positive, got {b}")));
            }
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l > 0.0) {
                return Err(config(format!("`lambda` must be positive, got {l}")));
            }
        }
        if let Some(t) = self.horizon {
            if !(t.is_finite() && t > 0.0) {
                return Err(config(format!("`horizon` must be positive, got {t}")));
            }
        }
        if self.command == "converge" {
            if self.n_list.is_empty() || self.n_list.contains(&0) {
                return Err(config("`n-list` needs at least one positive entry"));
            }
            if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(config("`n-list` must be strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn problem_params(&self) -> ProblemParams {
        ProblemParams {
            delta: self.delta,
            alpha: self.alpha,
            gamma: self.gamma,
            h_const: self.h_const,
            x0: self.x0,
            horizon: self.horizon,
            lambda: self.lambda,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            mode: self.mode.parse().unwrap_or_default(),
            truncation: self.truncate,
            refit_sup: self.refit_sup,
            ..SolverOptions::default()
        }
    }

    /// SHA-256 of the canonical TOML rendering of the hashed fields.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("resolved config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

fn parse_degree(text: &str) -> Result<(usize, Option<usize>), CliError> {
    let bad = || config(format!("`basis-degree` expects P or P,Q, got `{text}`"));
    let mut parts = text.split(',').map(str::trim);
    let p = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let q = parts.next().map(|q| q.parse().map_err(|_| bad())).transpose()?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((p, q))
}

fn parse_list(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| config(format!("`n-list` expects comma-separated counts, got `{text}`")))
        })
        .collect()
}
