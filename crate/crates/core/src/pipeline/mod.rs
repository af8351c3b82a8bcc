//! Balanced-homodyne data-analysis chain on synthetic detector traces.
//!
//! Reproduces the measurement pipeline end to end: trace synthesis with a
//! detector model and embedded squeezing spectra, transmission-gated interval
//! selection, autocorrelation and spectrum estimation, shot-noise drift
//! compensation, and differential mdB spectra — then closes the loop by
//! checking the recovered curves against the embedded truth.

pub mod detector;
pub mod drift;
pub mod estimate;
pub mod run;
pub mod synth;
pub mod trace;

pub use detector::{AntiAliasFilter, DetectorModel};
pub use drift::DriftModel;
pub use estimate::{
    classify_intervals, convolve_theory, detector_response_estimate,
    differential_autocorrelation, differential_spectrum, lorentzian_smooth, AutocorrAccum,
    AutocorrEstimate, DetectorKernel, DifferentialSpectrum, DriftAccum, DriftEstimate,
    IntervalLabel, SpectrumAccum, SpectrumEstimate,
};
pub use run::{
    analyze_acquisitions, build_model_pair, build_synth_config, run_round_trip, Accumulators,
    PipelineConfig, QuadResults, RoundTripReport,
};
pub use synth::{desk_scale_counts, EmbeddedModel, QuadLabel, SynthConfig, SynthContext};
pub use trace::{
    read_trace_file, write_trace_file, AcquisitionRecord, TraceMeta, TraceReader, TraceSet,
    TraceWriter,
};
