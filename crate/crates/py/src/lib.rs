//! Python bindings: the experiment runner, offline analysis, the closed
//! form model helpers and the time-tag stream format.
//!
//! Configs cross the boundary as JSON strings (the same documents the CLI
//! reads) and results come back as JSON strings, so the Python surface
//! stays in lockstep with the file formats.

use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use qtt_core::cbg::DesignRules;
use qtt_core::config::{AnalysisOptions, ExperimentConfig, ExperimentKind};
use qtt_core::detection::DetectionRecord;
use qtt_core::source::{predict_visibilities, rho_time_integrated};
use qtt_core::Error;

/// One time-tag record as seen from Python: (channel, timestamp_ps).
type TagRecord = (u8, u64);

fn pyerr(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_config(config_json: &str) -> PyResult<ExperimentConfig> {
    ExperimentConfig::from_json_str(config_json).map_err(pyerr)
}

fn parse_kind(kind: &str) -> PyResult<ExperimentKind> {
    serde_json::from_value(serde_json::Value::String(kind.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown experiment kind {kind:?}")))
}

/// Canonical JSON of the calibrated default configuration for one
/// experiment kind ("rabi_sweep", "hbt", "tomography12", "hom",
/// "calibrate" or "design").
#[pyfunction]
fn default_config(kind: &str) -> PyResult<String> {
    Ok(ExperimentConfig::calibrated(parse_kind(kind)?).canonical_json())
}

/// Runs the experiment a config describes, writing artifacts into
/// `out_dir`, and returns the summary JSON.
#[pyfunction]
fn run(config_json: &str, out_dir: PathBuf) -> PyResult<String> {
    let cfg = parse_config(config_json)?;
    let out = qtt_core::runner::run_experiment(&cfg, &out_dir).map_err(pyerr)?;
    Ok(out.summary.to_string())
}

/// Histogram and estimate from an existing time-tag file; returns the
/// summary JSON.
#[pyfunction]
#[pyo3(signature = (input, out_dir, bin_width_ps=None, max_delay_ps=None, peak_window_ps=None))]
fn analyze(
    input: PathBuf,
    out_dir: PathBuf,
    bin_width_ps: Option<u64>,
    max_delay_ps: Option<u64>,
    peak_window_ps: Option<u64>,
) -> PyResult<String> {
    let mut analysis = AnalysisOptions::default();
    if let Some(b) = bin_width_ps {
        analysis.bin_width_ps = b;
    }
    if let Some(m) = max_delay_ps {
        analysis.max_delay_ps = m;
    }
    if let Some(w) = peak_window_ps {
        analysis.peak_window_ps = w;
    }
    let out = qtt_core::runner::analyze_file(&input, &analysis, &out_dir).map_err(pyerr)?;
    Ok(out.summary.to_string())
}

/// Closed-form photon budget of a configuration (no simulation), as JSON.
#[pyfunction]
fn bookkeeping(config_json: &str) -> PyResult<String> {
    let cfg = parse_config(config_json)?;
    Ok(qtt_core::runner::summarize_bookkeeping(&cfg).to_string())
}

/// Cavity-shortened (XX, X) lifetimes in ps for a configuration.
#[pyfunction]
fn lifetimes(config_json: &str) -> PyResult<(f64, f64)> {
    parse_config(config_json)?.source.lifetimes().map_err(pyerr)
}

/// Model (linear, diagonal, circular) visibilities and the fidelity of the
/// delay-averaged pair state of a configuration.
#[pyfunction]
fn model_visibilities(config_json: &str) -> PyResult<(f64, f64, f64, f64)> {
    let cfg = parse_config(config_json)?;
    let (_, tau_x) = cfg.source.lifetimes().map_err(pyerr)?;
    let rho = rho_time_integrated(&cfg.source.qdot, 1.0 / tau_x).map_err(pyerr)?;
    let v = predict_visibilities(&rho);
    let f = qtt_core::correlation::fidelity_from_visibilities(v.linear, v.diagonal, v.circular)
        .map_err(pyerr)?;
    Ok((v.linear, v.diagonal, v.circular, f))
}

/// Fidelity to the maximally entangled target from three basis
/// visibilities.
#[pyfunction]
fn fidelity_from_visibilities(v_lin: f64, v_diag: f64, v_circ: f64) -> PyResult<f64> {
    qtt_core::correlation::fidelity_from_visibilities(v_lin, v_diag, v_circ).map_err(pyerr)
}

/// Fundamental-mode wavelength (nm) of a bullseye geometry under the
/// calibrated design rules.
#[pyfunction]
fn mode_wavelength(disk_radius_nm: f64, grating_period_nm: f64) -> f64 {
    let geom = qtt_core::cbg::CbgGeometry {
        disk_radius: disk_radius_nm,
        grating_period: grating_period_nm,
        trench_width: qtt_core::cbg::default_trench_width(),
        n_rings: qtt_core::cbg::default_n_rings(),
    };
    qtt_core::cbg::mode_wavelength(&geom, &DesignRules::calibrated())
}

/// Disk radius (nm) placing the fundamental mode at `target_lambda_nm`
/// for a given grating period, under the calibrated design rules.
#[pyfunction]
fn solve_radius(target_lambda_nm: f64, grating_period_nm: f64) -> f64 {
    qtt_core::cbg::solve_radius(
        target_lambda_nm,
        grating_period_nm,
        &DesignRules::calibrated(),
    )
}

/// Reads a time-tag stream: (rep_period_ps, channel_count,
/// [(channel, timestamp_ps), ...]).
#[pyfunction]
fn read_timetags(path: PathBuf) -> PyResult<(u64, u8, Vec<TagRecord>)> {
    let file = qtt_core::timetag::read_timetags(Path::new(&path)).map_err(pyerr)?;
    let records = file
        .records
        .iter()
        .map(|r| (r.channel, r.timestamp_ps))
        .collect();
    Ok((file.rep_period_ps, file.channel_count, records))
}

/// Writes a time-tag stream from (channel, timestamp_ps) pairs.
#[pyfunction]
fn write_timetags(
    path: PathBuf,
    rep_period_ps: u64,
    channel_count: u8,
    records: Vec<TagRecord>,
) -> PyResult<()> {
    let records: Vec<DetectionRecord> = records
        .into_iter()
        .map(|(channel, timestamp_ps)| DetectionRecord {
            channel,
            timestamp_ps,
        })
        .collect();
    qtt_core::timetag::write_timetags(Path::new(&path), rep_period_ps, channel_count, &records)
        .map_err(pyerr)
}

#[pymodule]
fn qtt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", qtt_core::config::VERSION)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(bookkeeping, m)?)?;
    m.add_function(wrap_pyfunction!(lifetimes, m)?)?;
    m.add_function(wrap_pyfunction!(model_visibilities, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_from_visibilities, m)?)?;
    m.add_function(wrap_pyfunction!(mode_wavelength, m)?)?;
    m.add_function(wrap_pyfunction!(solve_radius, m)?)?;
    m.add_function(wrap_pyfunction!(read_timetags, m)?)?;
    m.add_function(wrap_pyfunction!(write_timetags, m)?)?;
    Ok(())
}
