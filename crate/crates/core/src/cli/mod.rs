//! Command-line front end.
//!
//! Subcommands regenerate the figure data (dressed-state tables, quadrature
//! autocorrelations, squeezing spectra), compare the closed forms against the
//! master-equation oracle, run the synthetic-trace pipeline, and report the
//! derived metrics. Everything is emitted as CSV or JSON with deterministic
//! bytes for a fixed seed and configuration.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.

mod commands;
mod emit;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::params::{apply_overrides, parse_config_str, preset, ExperimentPreset, PresetName};

pub use emit::{emit_json, emit_named_columns, OutputFormat};

/// Environment variable naming the default output directory.
pub const OUTDIR_ENV: &str = "CAVITY_SQUEEZE_OUTDIR";

#[derive(Debug, Parser)]
#[command(
    name = "cavity-squeeze",
    version,
    about = "Single-atom cavity squeezing: analytic model, Lindblad oracle, homodyne pipeline"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Parameter-selection flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct PresetArgs {
    /// Experimental preset: configA (probe on the cavity) or configB
    /// (probe near the two-photon resonance).
    #[arg(long, default_value = "configA")]
    pub preset: String,

    /// Flat key = value file overriding preset parameters
    /// (keys: g_mhz, kappa_mhz, gamma_mhz, gamma_motion_mhz, delta_c_mhz,
    /// delta_a_mhz, p_in_pw, eta_d, eta_out).
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Inline override, repeatable: --set g_mhz=11.5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl PresetArgs {
    pub fn resolve(&self) -> Result<ExperimentPreset> {
        let name: PresetName = self.preset.parse()?;
        let mut pre = preset(name);
        let mut overrides: BTreeMap<String, f64> = BTreeMap::new();
        if let Some(path) = &self.config {
            let body = std::fs::read_to_string(path)?;
            overrides.extend(parse_config_str(&body)?);
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            let parsed: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("value for '{k}' is not a number")))?;
            overrides.insert(k.trim().to_string(), parsed);
        }
        apply_overrides(&mut pre, &overrides)?;
        pre.params.checked()?;
        Ok(pre)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dressed-manifold table: complex detunings ω̃ₙ± for n = 1..n_max.
    Dressed(commands::DressedArgs),
    /// Quadrature autocorrelations of both labels (time-domain figure data).
    Autocorr(commands::AutocorrArgs),
    /// Squeezing spectra of both labels (frequency-domain figure data).
    Spectrum(commands::SpectrumArgs),
    /// Closed-form vs Lindblad-oracle deviation report.
    OracleCompare(commands::OracleCompareArgs),
    /// Synthesize a homodyne trace file.
    PipelineSynth(commands::PipelineSynthArgs),
    /// Analyze a homodyne trace file into differential estimates.
    PipelineAnalyze(commands::PipelineAnalyzeArgs),
    /// Derived experimental metrics: flux, photon numbers, rη, power budget.
    Metrics(commands::MetricsArgs),
}

/// Run a parsed command. Returns the artifacts' paths.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::Dressed(args) => commands::dressed(args),
        Command::Autocorr(args) => commands::autocorr(args),
        Command::Spectrum(args) => commands::spectrum(args),
        Command::OracleCompare(args) => commands::oracle_compare(args),
        Command::PipelineSynth(args) => commands::pipeline_synth(args),
        Command::PipelineAnalyze(args) => commands::pipeline_analyze(args),
        Command::Metrics(args) => commands::metrics(args),
    }
}

/// Resolve an output path against --out or $CAVITY_SQUEEZE_OUTDIR.
pub fn resolve_output(out: &Option<PathBuf>, default_name: &str) -> PathBuf {
    match out {
        Some(p) => p.clone(),
        None => match std::env::var_os(OUTDIR_ENV) {
            Some(dir) => PathBuf::from(dir).join(default_name),
            None => PathBuf::from(default_name),
        },
    }
}

/// Map an error to the documented exit code: 2 for configuration problems,
/// 3 for numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidParams(_)
        | Error::Domain(_)
        | Error::HilbertSpace(_)
        | Error::Io(_) => 2,
        Error::Singularity(_)
        | Error::ConfluentManifold(_)
        | Error::Numerics(_)
        | Error::Estimator(_) => 3,
    }
}

/// Machine-readable error envelope printed to stderr on failure.
pub fn error_json(err: &Error) -> String {
    let kind = match err {
        Error::InvalidParams(_) => "invalid_params",
        Error::Domain(_) => "domain",
        Error::Singularity(_) => "singularity",
        Error::ConfluentManifold(_) => "confluent_manifold",
        Error::HilbertSpace(_) => "hilbert_space",
        Error::Numerics(_) => "numerics",
        Error::Estimator(_) => "estimator",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
    };
    serde_json::json!({ "error": { "kind": kind, "message": err.to_string() } }).to_string()
}
