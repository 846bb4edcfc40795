use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bsde", version, about = "Monte-Carlo BSDE and HJB solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write per-step diagnostics.
    Run(CommonArgs),
    /// Rate study over a list of step counts.
    Converge {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated, strictly increasing step counts.
        #[arg(long = "n-list", value_name = "LIST")]
        n_list: Option<String>,
        /// Brownian-bridge substeps for the Z part of the error metric.
        #[arg(long = "z-substeps")]
        z_substeps: Option<usize>,
    },
    /// Reference value from quadrature, a closed form or control enumeration.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        /// Inner Monte-Carlo paths per sequence for brute-force oracles.
        #[arg(long = "n-inner")]
        n_inner: Option<usize>,
    },
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Run(c) => c,
            Command::Converge { common, .. } | Command::Oracle { common, .. } => common,
        }
    }
}

/// Flags shared by every command. Unset flags fall back to the config file,
/// then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub problem: Option<String>,
    /// Number of simulated paths.
    #[arg(long = "N", value_name = "PATHS")]
    pub n_paths: Option<usize>,
    /// Number of time steps.
    #[arg(long = "n", value_name = "STEPS")]
    pub n_steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// State degree `p`, optionally followed by the control degree `q`.
    #[arg(long = "basis-degree", value_name = "P[,Q]")]
    pub basis_degree: Option<String>,
    /// Scan points per control coordinate.
    #[arg(long = "control-grid")]
    pub control_grid: Option<usize>,
    /// Intensity mass of the control randomization.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// `implicit` or `explicit`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Refit the realised values before maximising over the control.
    #[arg(long = "refit-sup")]
    pub refit_sup: bool,
    /// Clamp regression targets to `[-B, B]`.
    #[arg(long, value_name = "B")]
    pub truncate: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads; rayon's default when absent.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Constant terminal value of `linear-bsde`.
    #[arg(long = "h-const", allow_negative_numbers = true)]
    pub h_const: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
}
