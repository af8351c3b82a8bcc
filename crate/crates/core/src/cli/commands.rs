//! Subcommand implementations.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{quadrature_autocorrelation, squeezing_spectrum, steady_state_moments};
use crate::dressed::dressed_detunings;
use crate::error::{Error, Result};
use crate::liouville::{HilbertSpace, MotionMode, OracleCurves};
use crate::metrics::{
    drive_calibration, kerr_equivalent, mean_photon_number, power_budget, DriveConvention,
    PowerBudget,
};
use crate::params::ExperimentPreset;
use crate::pipeline::{
    analyze_acquisitions, build_synth_config, PipelineConfig, RoundTripReport, SynthContext,
    TraceReader, TraceWriter,
};
use crate::series::SpectrumSeries;
use crate::units::{linear_to_mdb, mhz_to_rad_us, photon_flux, rad_us_to_mhz, rad_us_to_rad_s};

use super::{emit_json, emit_named_columns, resolve_output, OutputFormat, PresetArgs};

fn parse_format(s: &str) -> Result<OutputFormat> {
    s.parse()
}

fn parse_convention(s: &str) -> Result<DriveConvention> {
    s.parse()
}

fn parse_motion_mode(s: &str) -> Result<MotionMode> {
    s.parse()
}

/// Parameter metadata echoed into every CSV artifact, so overrides
/// round-trip into the outputs.
fn preset_metadata(pre: &ExperimentPreset) -> Vec<(&'static str, String)> {
    let p = &pre.params;
    vec![
        ("preset", pre.name.clone()),
        ("g_mhz", format!("{:.12}", rad_us_to_mhz(p.g))),
        ("kappa_mhz", format!("{:.12}", rad_us_to_mhz(p.kappa))),
        ("gamma_mhz", format!("{:.12}", rad_us_to_mhz(p.gamma))),
        ("gamma_motion_mhz", format!("{:.12}", rad_us_to_mhz(p.gamma_motion))),
        ("delta_c_mhz", format!("{:.12}", rad_us_to_mhz(p.delta_c))),
        ("delta_a_mhz", format!("{:.12}", rad_us_to_mhz(p.delta_a))),
        ("eta_out", format!("{:.12}", pre.eta_out)),
        ("eta_d", format!("{:.12}", pre.eta_d)),
        ("p_in_pw", format!("{:.12}", pre.p_in * 1e12)),
    ]
}

/// Drive amplitude for a preset under a convention, unless overridden.
fn resolve_epsilon(
    preset: &ExperimentPreset,
    convention: DriveConvention,
    eps_mhz: Option<f64>,
) -> Result<f64> {
    match eps_mhz {
        Some(f) => {
            if f < 0.0 {
                return Err(Error::Config("--eps-mhz must be non-negative".into()));
            }
            Ok(mhz_to_rad_us(f))
        }
        None => drive_calibration(
            preset.p_in,
            preset.params.wavelength,
            preset.params.kappa,
            preset.eta_out,
            convention,
        ),
    }
}

// ---------------------------------------------------------------- dressed

#[derive(Debug, Args)]
pub struct DressedArgs {
    #[command(flatten)]
    pub preset: PresetArgs,
    /// Largest excitation manifold to tabulate.
    #[arg(long, default_value_t = 2)]
    pub n_max: u32,
    /// Fold the motional decoherence rate into ω̃ₐ.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub motion: bool,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct DressedRow {
    n: u32,
    delta_plus_mhz: f64,
    halfwidth_plus_mhz: f64,
    delta_minus_mhz: f64,
    halfwidth_minus_mhz: f64,
}

pub fn dressed(args: DressedArgs) -> Result<Vec<PathBuf>> {
    let pre = args.preset.resolve()?;
    if args.n_max < 1 {
        return Err(Error::Config("--n-max must be ≥ 1".into()));
    }
    let rows: Vec<DressedRow> = (1..=args.n_max)
        .map(|n| {
            dressed_detunings(&pre.params, n, args.motion).map(|m| DressedRow {
                n,
                delta_plus_mhz: rad_us_to_mhz(m.omega_plus.re),
                halfwidth_plus_mhz: rad_us_to_mhz(m.omega_plus.im),
                delta_minus_mhz: rad_us_to_mhz(m.omega_minus.re),
                halfwidth_minus_mhz: rad_us_to_mhz(m.omega_minus.im),
            })
        })
        .collect::<Result<_>>()?;
    let ext = if args.format == OutputFormat::Csv { "csv" } else { "json" };
    let path = resolve_output(&args.out, &format!("dressed_{}.{ext}", pre.name));
    match args.format {
        OutputFormat::Json => emit_json(&path, &rows)?,
        OutputFormat::Csv => {
            let n: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
            let dp: Vec<f64> = rows.iter().map(|r| r.delta_plus_mhz).collect();
            let hp: Vec<f64> = rows.iter().map(|r| r.halfwidth_plus_mhz).collect();
            let dm: Vec<f64> = rows.iter().map(|r| r.delta_minus_mhz).collect();
            let hm: Vec<f64> = rows.iter().map(|r| r.halfwidth_minus_mhz).collect();
            let mut meta = preset_metadata(&pre);
            meta.push(("motion", args.motion.to_string()));
            emit_named_columns(
                &path,
                &meta,
                &[
                    ("n", &n),
                    ("delta_plus_mhz", &dp),
                    ("halfwidth_plus_mhz", &hp),
                    ("delta_minus_mhz", &dm),
                    ("halfwidth_minus_mhz", &hm),
                ],
            )?;
        }
    }
    Ok(vec![path])
}

// --------------------------------------------------------------- autocorr

#[derive(Debug, Args)]
pub struct AutocorrArgs {
    #[command(flatten)]
    pub preset: PresetArgs,
    /// Model phase of the "X" label (rad).
    #[arg(long, default_value_t = FRAC_PI_2)]
    pub theta0: f64,
    #[arg(long, default_value_t = 2.0)]
    pub tau_max_us: f64,
    #[arg(long, default_value_t = 0.01)]
    pub tau_step_us: f64,
    #[arg(long, default_value = "input-coupling", value_parser = parse_convention)]
    pub convention: DriveConvention,
    /// Override the calibrated drive amplitude (linear MHz).
    #[arg(long)]
    pub eps_mhz: Option<f64>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub motion: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn autocorr(args: AutocorrArgs) -> Result<Vec<PathBuf>> {
    let pre = args.preset.resolve()?;
    if !(args.tau_step_us > 0.0 && args.tau_max_us > args.tau_step_us) {
        return Err(Error::Config("τ grid must be positive and bounded".into()));
    }
    let eps = resolve_epsilon(&pre, args.convention, args.eps_mhz)?;
    let params = pre.params.with_epsilon(eps);
    let n = (args.tau_max_us / args.tau_step_us).round() as usize;
    let taus: Vec<f64> = (0..=n).map(|k| k as f64 * args.tau_step_us).collect();
    let x = quadrature_autocorrelation(&params, args.theta0, &taus, args.motion)?;
    let p = quadrature_autocorrelation(&params, args.theta0 + FRAC_PI_2, &taus, args.motion)?;
    let baseline = vec![0.0; taus.len()];
    let path = resolve_output(&args.out, &format!("autocorr_{}.csv", pre.name));
    let mut meta = preset_metadata(&pre);
    meta.push(("theta0_rad", format!("{:.12}", args.theta0)));
    meta.push(("eps_mhz", format!("{:.12}", rad_us_to_mhz(eps))));
    meta.push(("convention", format!("{:?}", args.convention)));
    meta.push(("motion", args.motion.to_string()));
    emit_named_columns(
        &path,
        &meta,
        &[
            ("tau_us", &taus),
            ("acf_x", &x.values),
            ("acf_p", &p.values),
            ("acf_empty_cavity", &baseline),
        ],
    )?;
    Ok(vec![path])
}

// --------------------------------------------------------------- spectrum

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub preset: PresetArgs,
    #[arg(long, default_value_t = FRAC_PI_2)]
    pub theta0: f64,
    #[arg(long, default_value_t = 0.05)]
    pub f_min_mhz: f64,
    #[arg(long, default_value_t = 20.0)]
    pub f_max_mhz: f64,
    #[arg(long, default_value_t = 0.01)]
    pub f_step_mhz: f64,
    /// Efficiency applied to the spectra; defaults to the preset's η_out.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value = "input-coupling", value_parser = parse_convention)]
    pub convention: DriveConvention,
    #[arg(long)]
    pub eps_mhz: Option<f64>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub motion: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn spectrum(args: SpectrumArgs) -> Result<Vec<PathBuf>> {
    let pre = args.preset.resolve()?;
    if !(args.f_step_mhz > 0.0 && args.f_max_mhz > args.f_min_mhz) {
        return Err(Error::Config("frequency grid must be positive and bounded".into()));
    }
    let eta = args.eta.unwrap_or(pre.eta_out);
    let eps = resolve_epsilon(&pre, args.convention, args.eps_mhz)?;
    let params = pre.params.with_epsilon(eps);
    let n = ((args.f_max_mhz - args.f_min_mhz) / args.f_step_mhz).round() as usize;
    let omegas: Vec<f64> = (0..=n)
        .map(|k| mhz_to_rad_us(args.f_min_mhz + k as f64 * args.f_step_mhz))
        .collect();
    let x = squeezing_spectrum(&params, args.theta0, eta, &omegas, args.motion)?;
    let p = squeezing_spectrum(&params, args.theta0 + FRAC_PI_2, eta, &omegas, args.motion)?;
    let freq = x.freq_mhz();
    let x_mdb = x.values_mdb();
    let p_mdb = p.values_mdb();
    let baseline = vec![0.0; freq.len()];
    let path = resolve_output(&args.out, &format!("spectrum_{}.csv", pre.name));
    let mut meta = preset_metadata(&pre);
    meta.push(("theta0_rad", format!("{:.12}", args.theta0)));
    meta.push(("eta", format!("{:.12}", eta)));
    meta.push(("eps_mhz", format!("{:.12}", rad_us_to_mhz(eps))));
    meta.push(("convention", format!("{:?}", args.convention)));
    meta.push(("motion", args.motion.to_string()));
    emit_named_columns(
        &path,
        &meta,
        &[
            ("freq_mhz", &freq),
            ("s_x_linear", &x.values),
            ("s_x_mdb", &x_mdb),
            ("s_p_linear", &p.values),
            ("s_p_mdb", &p_mdb),
            ("baseline_mdb", &baseline),
        ],
    )?;
    Ok(vec![path])
}

// ---------------------------------------------------------- oracle-compare

#[derive(Debug, Args)]
pub struct OracleCompareArgs {
    #[command(flatten)]
    pub preset: PresetArgs,
    /// Fock truncation of the oracle.
    #[arg(long, default_value_t = 6)]
    pub n_max: usize,
    /// Drive amplitude for the comparison (linear MHz).
    #[arg(long, default_value_t = 0.1)]
    pub eps_mhz: f64,
    /// Motional-decoherence realization: none | dephasing | decay.
    #[arg(long, default_value = "decay", value_parser = parse_motion_mode)]
    pub motion_mode: MotionMode,
    #[arg(long, default_value_t = FRAC_PI_2)]
    pub theta0: f64,
    /// Correlation cutoff in units of the slowest dressed lifetime.
    #[arg(long, default_value_t = 12.0)]
    pub cutoff_lifetimes: f64,
    /// Rescale (S − 1) by (ε_ref/ε)² before comparing spectrum minima;
    /// defaults to the input-coupling calibrated drive.
    #[arg(long)]
    pub rescale_to_eps_mhz: Option<f64>,
    /// Also run a truncation convergence scan over these N values.
    #[arg(long, value_delimiter = ',')]
    pub scan: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ComplexPair {
    re: f64,
    im: f64,
}

impl From<Complex64> for ComplexPair {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Serialize)]
struct MomentsJson {
    a_mean: ComplexPair,
    sigma_mean: ComplexPair,
    a2_mean: ComplexPair,
    a_sigma_mean: ComplexPair,
    delta_a2: ComplexPair,
}

#[derive(Serialize)]
pub struct OracleReport {
    preset: String,
    eps_mhz: f64,
    n_max: usize,
    motion_mode: MotionMode,
    theta0: f64,
    eta: f64,
    moments_analytic: MomentsJson,
    moments_numeric: MomentsJson,
    incoherent_photons: f64,
    excited_population: f64,
    max_moment_rel_deviation: f64,
    autocorr_sup_rel_deviation: f64,
    analytic_min_mdb: f64,
    analytic_min_freq_mhz: f64,
    numeric_min_mdb: f64,
    numeric_min_freq_mhz: f64,
    min_diff_mdb: f64,
    rescaled_to_eps_mhz: f64,
    rescaled_analytic_min_mdb: f64,
    rescaled_numeric_min_mdb: f64,
    rescaled_min_diff_mdb: f64,
    convergence: Option<crate::liouville::ConvergenceReport>,
}

/// Rescale S − 1 by a drive-power ratio and return (min freq MHz, min mdB).
fn rescaled_min(series: &SpectrumSeries, power_ratio: f64) -> (f64, f64) {
    let mut best = (0.0, f64::INFINITY);
    for (w, s) in series.omega_rad_us.iter().zip(&series.values) {
        let rescaled = 1.0 + (s - 1.0) * power_ratio;
        if rescaled < best.1 {
            best = (rad_us_to_mhz(*w), rescaled);
        }
    }
    (best.0, linear_to_mdb(best.1))
}

pub fn oracle_compare(args: OracleCompareArgs) -> Result<Vec<PathBuf>> {
    let report = oracle_compare_report(&args)?;
    let path = resolve_output(&args.out, &format!("oracle_compare_{}.json", report.preset));
    emit_json(&path, &report)?;
    Ok(vec![path])
}

pub fn oracle_compare_report(args: &OracleCompareArgs) -> Result<OracleReport> {
    let pre = args.preset.resolve()?;
    let eps = mhz_to_rad_us(args.eps_mhz);
    let params = pre.params.with_epsilon(eps);
    let include_motion = args.motion_mode != MotionMode::None;
    let space = HilbertSpace::new(args.n_max)?;

    let manifold = dressed_detunings(&params, 1, include_motion)?;
    let tau_max = args.cutoff_lifetimes / manifold.omega_plus.im.min(manifold.omega_minus.im);
    let curves = OracleCurves::compute(&params, space, args.motion_mode, tau_max, 8192)?;

    let analytic = steady_state_moments(&params, include_motion)?;
    let numeric = &curves.moments;
    let rel = |a: Complex64, b: Complex64| (a - b).norm() / b.norm().max(1e-300);
    let max_moment_rel_deviation = [
        rel(numeric.a_mean, analytic.a_mean),
        rel(numeric.sigma_mean, analytic.sigma_mean),
        rel(numeric.a2_mean, analytic.a2_mean),
        rel(numeric.a_sigma_mean, analytic.a_sigma_mean),
        rel(numeric.delta_a2, analytic.delta_a2),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);

    let numeric_ac = curves.quadrature_autocorrelation(args.theta0);
    let analytic_ac =
        quadrature_autocorrelation(&params, args.theta0, &curves.tau_us, include_motion)?;
    let scale = analytic_ac.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let autocorr_sup_rel_deviation = numeric_ac
        .values
        .iter()
        .zip(&analytic_ac.values)
        .map(|(n, a)| (n - a).abs())
        .fold(0.0f64, f64::max)
        / scale.max(1e-300);

    let omegas: Vec<f64> = (0..=1200)
        .map(|k| mhz_to_rad_us(2.0 + 0.01 * k as f64))
        .collect();
    let numeric_spec = curves.spectrum(args.theta0, pre.eta_out, &omegas)?;
    let analytic_spec =
        squeezing_spectrum(&params, args.theta0, pre.eta_out, &omegas, include_motion)?;
    let (nf, nm) = numeric_spec.min_bin();
    let (af, am) = analytic_spec.min_bin();

    let eps_ref = match args.rescale_to_eps_mhz {
        Some(f) => mhz_to_rad_us(f),
        None => drive_calibration(
            pre.p_in,
            pre.params.wavelength,
            pre.params.kappa,
            pre.eta_out,
            DriveConvention::InputCoupling,
        )?,
    };
    let power_ratio = (eps_ref / eps) * (eps_ref / eps);
    let (_, ram) = rescaled_min(&analytic_spec, power_ratio);
    let (_, rnm) = rescaled_min(&numeric_spec, power_ratio);

    let convergence = match &args.scan {
        Some(list) => Some(crate::liouville::convergence_scan(
            &params,
            args.theta0,
            pre.eta_out,
            list,
            args.motion_mode,
        )?),
        None => None,
    };

    let to_json = |a: Complex64, s: Complex64, a2: Complex64, asg: Complex64, d: Complex64| {
        MomentsJson {
            a_mean: a.into(),
            sigma_mean: s.into(),
            a2_mean: a2.into(),
            a_sigma_mean: asg.into(),
            delta_a2: d.into(),
        }
    };
    Ok(OracleReport {
        preset: pre.name.clone(),
        eps_mhz: args.eps_mhz,
        n_max: args.n_max,
        motion_mode: args.motion_mode,
        theta0: args.theta0,
        eta: pre.eta_out,
        moments_analytic: to_json(
            analytic.a_mean,
            analytic.sigma_mean,
            analytic.a2_mean,
            analytic.a_sigma_mean,
            analytic.delta_a2,
        ),
        moments_numeric: to_json(
            numeric.a_mean,
            numeric.sigma_mean,
            numeric.a2_mean,
            numeric.a_sigma_mean,
            numeric.delta_a2,
        ),
        incoherent_photons: numeric.incoherent_photons,
        excited_population: numeric.excited_population,
        max_moment_rel_deviation,
        autocorr_sup_rel_deviation,
        analytic_min_mdb: am,
        analytic_min_freq_mhz: af,
        numeric_min_mdb: nm,
        numeric_min_freq_mhz: nf,
        min_diff_mdb: (nm - am).abs(),
        rescaled_to_eps_mhz: rad_us_to_mhz(eps_ref),
        rescaled_analytic_min_mdb: ram,
        rescaled_numeric_min_mdb: rnm,
        rescaled_min_diff_mdb: (rnm - ram).abs(),
        convergence,
    })
}

// ------------------------------------------------------------ pipeline-synth

#[derive(Debug, Args)]
pub struct PipelineSynthArgs {
    #[command(flatten)]
    pub preset: PresetArgs,
    #[arg(long, default_value_t = 0.05)]
    pub scale: f64,
    #[arg(long, default_value_t = 0x5153)]
    pub seed: u64,
    #[arg(long, default_value_t = FRAC_PI_2)]
    pub theta0: f64,
    #[arg(long, default_value = "input-coupling", value_parser = parse_convention)]
    pub convention: DriveConvention,
    /// Shot-noise droop between the coupled and reference epochs.
    #[arg(long, default_value_t = 0.002)]
    pub droop: f64,
    /// Inject a common-mode tone: FREQ_MHZ,REL_POWER.
    #[arg(long, value_name = "MHZ,REL")]
    pub tone: Option<String>,
    /// Add electronic noise this many dB below shot noise.
    #[arg(long)]
    pub electronic_noise_db: Option<f64>,
    /// Synthesize shot noise only (no embedded squeezing model).
    #[arg(long, default_value_t = false)]
    pub no_signal: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[allow(clippy::too_many_arguments)]
fn pipeline_config(
    preset: ExperimentPreset,
    scale: f64,
    seed: u64,
    theta0: f64,
    convention: DriveConvention,
    droop: f64,
    tone: &Option<String>,
    electronic_noise_db: Option<f64>,
    no_signal: bool,
) -> Result<PipelineConfig> {
    let tone = match tone {
        None => None,
        Some(s) => {
            let (f, r) = s
                .split_once(',')
                .ok_or_else(|| Error::Config("--tone expects MHZ,REL".into()))?;
            Some((
                f.trim().parse().map_err(|_| Error::Config("bad tone frequency".into()))?,
                r.trim().parse().map_err(|_| Error::Config("bad tone power".into()))?,
            ))
        }
    };
    let mut cfg = PipelineConfig::new(preset);
    cfg.scale = scale;
    cfg.seed = seed;
    cfg.theta0 = theta0;
    cfg.convention = convention;
    cfg.drift_droop = droop;
    cfg.tone = tone;
    cfg.electronic_noise_db = electronic_noise_db;
    cfg.embed_signal = !no_signal;
    Ok(cfg)
}

pub fn pipeline_synth(args: PipelineSynthArgs) -> Result<Vec<PathBuf>> {
    let pre = args.preset.resolve()?;
    let cfg = pipeline_config(
        pre,
        args.scale,
        args.seed,
        args.theta0,
        args.convention,
        args.droop,
        &args.tone,
        args.electronic_noise_db,
        args.no_signal,
    )?;
    let synth = build_synth_config(&cfg)?;
    let ctx = SynthContext::new(synth)?;
    let meta = ctx.cfg().meta();
    let n = ctx.cfg().n_acquisitions();
    let path = resolve_output(&args.out, &format!("traces_{}.csqt", meta.preset.name));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut writer = TraceWriter::create(&path, &meta, n as u32)?;
    let chunk = rayon::current_num_threads().max(1) * 4;
    let mut base = 0;
    while base < n {
        let hi = (base + chunk).min(n);
        let acqs: Vec<_> = (base..hi)
            .into_par_iter()
            .map(|i| ctx.synthesize_acquisition(i))
            .collect();
        for acq in &acqs {
            writer.write_acquisition(acq)?;
        }
        base = hi;
    }
    writer.finish()?;
    Ok(vec![path])
}

// ---------------------------------------------------------- pipeline-analyze

#[derive(Debug, Args)]
pub struct PipelineAnalyzeArgs {
    /// Trace file produced by pipeline-synth.
    #[arg(long)]
    pub traces: PathBuf,
    /// Prefix of the emitted artifacts (spectrum/autocorr CSVs + report).
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    pub max_lag_us: f64,
    #[arg(long, default_value_t = 1.0)]
    pub smoothing_fwhm_mhz: f64,
}

/// Scalar summary of a round trip, emitted as the analysis report.
#[derive(Serialize)]
pub struct PipelineSummary {
    pub preset: String,
    pub seed: u64,
    pub scale: f64,
    pub zeta_measured: f64,
    pub zeta_true: f64,
    pub n_untrapped_acquisitions: usize,
    pub x_coupled_intervals: usize,
    pub x_reference_intervals: usize,
    pub p_coupled_intervals: usize,
    pub p_reference_intervals: usize,
    pub x_spectrum_chi2_per_bin: f64,
    pub p_spectrum_chi2_per_bin: f64,
    pub x_autocorr_chi2_per_bin: f64,
    pub p_autocorr_chi2_per_bin: f64,
    pub antisymmetry_chi2_per_bin: f64,
    pub high_freq_excess_mdb: f64,
    pub detector_kernel_integral: Option<f64>,
}

impl PipelineSummary {
    pub fn from_report(report: &RoundTripReport) -> Self {
        Self {
            preset: report.preset.clone(),
            seed: report.seed,
            scale: report.scale,
            zeta_measured: report.zeta_measured,
            zeta_true: report.zeta_true,
            n_untrapped_acquisitions: report.drift.n_acquisitions,
            x_coupled_intervals: report.x.n_coupled_intervals,
            x_reference_intervals: report.x.n_reference_intervals,
            p_coupled_intervals: report.p.n_coupled_intervals,
            p_reference_intervals: report.p.n_reference_intervals,
            x_spectrum_chi2_per_bin: report.x.spectrum_chi2_per_bin,
            p_spectrum_chi2_per_bin: report.p.spectrum_chi2_per_bin,
            x_autocorr_chi2_per_bin: report.x.autocorr_chi2_per_bin,
            p_autocorr_chi2_per_bin: report.p.autocorr_chi2_per_bin,
            antisymmetry_chi2_per_bin: report.antisymmetry_chi2_per_bin,
            high_freq_excess_mdb: report.high_freq_excess_mdb,
            detector_kernel_integral: report.detector_kernel.as_ref().map(|k| k.integral()),
        }
    }
}

pub fn write_round_trip_artifacts(
    report: &RoundTripReport,
    prefix: &std::path::Path,
) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    let stem = prefix.to_string_lossy();
    for quad in [&report.x, &report.p] {
        let label = quad.label.to_lowercase();
        let sp = PathBuf::from(format!("{stem}_spectrum_{label}.csv"));
        let s_linear: Vec<f64> = quad
            .spectrum
            .smoothed_mdb
            .iter()
            .map(|m| crate::units::mdb_to_linear(*m))
            .collect();
        emit_named_columns(
            &sp,
            &[
                ("preset", report.preset.clone()),
                ("quadrature", quad.label.clone()),
                ("zeta", format!("{:.12}", report.zeta_measured)),
                ("n_signal_windows", quad.spectrum.n_signal_windows.to_string()),
                ("n_reference_windows", quad.spectrum.n_reference_windows.to_string()),
            ],
            &[
                ("freq_mhz", &quad.spectrum.freq_mhz),
                ("s_linear", &s_linear),
                ("s_mdb", &quad.spectrum.smoothed_mdb),
                ("std_err", &quad.spectrum.smoothed_std_err_mdb),
                ("raw_mdb", &quad.spectrum.raw_mdb),
                ("raw_std_err", &quad.spectrum.raw_std_err_mdb),
                ("model_mdb", &quad.spectrum_model_mdb),
            ],
        )?;
        paths.push(sp);
        let ac = PathBuf::from(format!("{stem}_autocorr_{label}.csv"));
        emit_named_columns(
            &ac,
            &[
                ("preset", report.preset.clone()),
                ("quadrature", quad.label.clone()),
                ("zeta", format!("{:.12}", report.zeta_measured)),
                ("n_intervals", quad.autocorr.n_intervals.to_string()),
            ],
            &[
                ("tau_us", &quad.autocorr.lag_us),
                ("value", &quad.autocorr.values),
                ("std_err", &quad.autocorr.std_err),
                ("expected", &quad.autocorr_expected),
            ],
        )?;
        paths.push(ac);
    }
    let report_path = PathBuf::from(format!("{stem}_report.json"));
    emit_json(&report_path, &PipelineSummary::from_report(report))?;
    paths.push(report_path);
    Ok(paths)
}

pub fn pipeline_analyze(args: PipelineAnalyzeArgs) -> Result<Vec<PathBuf>> {
    let mut reader = TraceReader::open(&args.traces)?;
    let meta = reader.meta().clone();
    let mut cfg = PipelineConfig::from_meta(&meta);
    cfg.max_lag_us = args.max_lag_us;
    cfg.smoothing_fwhm_mhz = args.smoothing_fwhm_mhz;
    let report = analyze_acquisitions(
        &cfg,
        &meta,
        std::iter::from_fn(move || reader.next_acquisition().transpose()),
    )?;
    let prefix = resolve_output(
        &args.out_prefix,
        &format!("pipeline_{}", meta.preset.name),
    );
    write_round_trip_artifacts(&report, &prefix)
}

// ----------------------------------------------------------------- metrics

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub preset: PresetArgs,
    #[arg(long, default_value_t = FRAC_PI_2)]
    pub theta0: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
pub struct MetricsReport {
    pub preset: String,
    pub p_in_w: f64,
    pub wavelength_m: f64,
    pub eta_out: f64,
    pub eta_d: f64,
    pub photon_flux_per_s: f64,
    pub photons_per_cavity_decay: f64,
    pub eps_mhz_input_coupling: f64,
    pub eps_mhz_total_kappa: f64,
    pub mean_photon_input_coupling: f64,
    pub mean_photon_total_kappa: f64,
    /// Squeezed-quadrature spectrum minimum of the analytic model at the
    /// preset (γ_eff, input-coupling drive, η_out).
    pub spectrum_min_freq_mhz: f64,
    pub spectrum_min_mdb: f64,
    /// Same minimum with a perfect (single-ended, lossless) cavity, η = 1.
    pub perfect_cavity_min_mdb: f64,
    pub perfect_cavity_scale: f64,
    /// rη from the model's own spectrum minimum.
    pub kerr_r_eta_per_w: f64,
    /// rη from the measured squeezing depth of −12 mdB.
    pub kerr_r_eta_at_12mdb_per_w: f64,
    pub power_budget_total_kappa: PowerBudget,
}

pub fn metrics_report(pre: &ExperimentPreset, theta0: f64) -> Result<MetricsReport> {
    let flux = photon_flux(pre.p_in, pre.params.wavelength);
    let eps_ic = drive_calibration(
        pre.p_in,
        pre.params.wavelength,
        pre.params.kappa,
        pre.eta_out,
        DriveConvention::InputCoupling,
    )?;
    let eps_tk = drive_calibration(
        pre.p_in,
        pre.params.wavelength,
        pre.params.kappa,
        pre.eta_out,
        DriveConvention::TotalKappa,
    )?;
    let omegas: Vec<f64> = (0..=7000)
        .map(|k| mhz_to_rad_us(1.0 + 0.002 * k as f64))
        .collect();
    let params_ic = pre.params.with_epsilon(eps_ic);
    let spec = squeezing_spectrum(&params_ic, theta0, pre.eta_out, &omegas, true)?;
    let (f_min, s_min_mdb) = spec.min_bin();
    let perfect = squeezing_spectrum(&params_ic, theta0, 1.0, &omegas, true)?;
    let (_, perfect_mdb) = perfect.min_bin();
    let budget = power_budget(&pre.params.with_epsilon(eps_tk), pre.eta_out, pre.p_in)?;
    Ok(MetricsReport {
        preset: pre.name.clone(),
        p_in_w: pre.p_in,
        wavelength_m: pre.params.wavelength,
        eta_out: pre.eta_out,
        eta_d: pre.eta_d,
        photon_flux_per_s: flux,
        photons_per_cavity_decay: flux / rad_us_to_rad_s(2.0 * pre.params.kappa),
        eps_mhz_input_coupling: rad_us_to_mhz(eps_ic),
        eps_mhz_total_kappa: rad_us_to_mhz(eps_tk),
        mean_photon_input_coupling: mean_photon_number(&params_ic)?,
        mean_photon_total_kappa: mean_photon_number(&pre.params.with_epsilon(eps_tk))?,
        spectrum_min_freq_mhz: f_min,
        spectrum_min_mdb: s_min_mdb,
        perfect_cavity_min_mdb: perfect_mdb,
        perfect_cavity_scale: 1.0 / pre.eta_out,
        kerr_r_eta_per_w: kerr_equivalent(crate::units::mdb_to_linear(s_min_mdb), pre.p_in)?,
        kerr_r_eta_at_12mdb_per_w: kerr_equivalent(crate::units::mdb_to_linear(-12.0), pre.p_in)?,
        power_budget_total_kappa: budget,
    })
}

pub fn metrics(args: MetricsArgs) -> Result<Vec<PathBuf>> {
    let pre = args.preset.resolve()?;
    let report = metrics_report(&pre, args.theta0)?;
    let path = resolve_output(&args.out, &format!("metrics_{}.json", pre.name));
    emit_json(&path, &report)?;
    Ok(vec![path])
}
