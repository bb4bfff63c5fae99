//! Measurements on recorded time series: two-time correlations, Fourier spectra
//! and the inherent period, collective jumps, and the coherence time.

mod analysis;
mod coherence;
mod correlation;
mod export;
mod jumps;
mod spectrum;

pub use analysis::{analyze_series, iqr, quantile, AnalysisOptions, SeriesAnalysis};
pub use coherence::{coherence_time, CoherenceReport};
pub use correlation::autocorrelation;
pub use export::{write_analysis_json, write_correlation_csv, write_events_csv, write_spectrum_csv};
pub use jumps::{detect_jumps, stationary_start, Direction, JumpEvent, JumpThresholds};
pub use spectrum::{harmonic_ratio, spectrum, spectrum_with, Peak, PeakRule, Spectrum};
