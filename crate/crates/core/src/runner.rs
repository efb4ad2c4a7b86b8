//! Experiment pipelines: Monte-Carlo simulation, detection, analysis and
//! artifact writing for each experiment kind.
//!
//! Every run is deterministic in (config, seed): derived seeds come from a
//! fixed mixing function, summaries carry no timestamps, and files are
//! written in a fixed order. Running the same config twice produces
//! byte-identical artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Once;

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::cascade::{block_rng, simulate_emissions, SimConfig};
use crate::cbg::{detuning_budget, mode_wavelength, solve_radius};
use crate::config::{AnalysisOptions, ExperimentConfig, ExperimentKind, VERSION};
use crate::correlation::{
    blinking_envelope, build_histogram, channel_timestamps, fidelity_from_visibilities, g2_zero,
    integrate_peaks, side_to_center_calibration, tomography_settings, visibilities_from_records,
    CorrelationHistogram, Estimate, PeakAreas, TomographyRecord,
};
use crate::detection::{
    apply_chain, apply_hbt_chain, klyshko, pair_extraction_efficiency, predict_rates,
    DetectionRecord, Species, CHANNEL_X, CHANNEL_XX,
};
use crate::error::{Error, Result};
use crate::hom::{
    center_coincidences, correct_visibility, hom_visibility, predicted_raw_visibility,
    simulate_hom, temporal_filter_visibility, HomPolarization,
};
use crate::source::rabi_preparation_probability;
use crate::timetag::{read_timetags_from, write_timetags};

/// One finished run: the summary document and the files it wrote.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: serde_json::Value,
    pub files: Vec<PathBuf>,
}

static POOL_INIT: Once = Once::new();

/// Caps the global worker pool to QTT_THREADS when the variable is set.
/// Safe to call repeatedly; only the first call configures the pool.
pub fn init_thread_pool() {
    POOL_INIT.call_once(|| {
        if let Some(n) = std::env::var("QTT_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    });
}

/// SplitMix64 finalizer: a bijective mixer with full avalanche.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent sub-seed for one stage of a run.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(seed ^ splitmix64(salt))
}

const SALT_DETECTION: u64 = 0xD7;
const SALT_SETTING_BASE: u64 = 0x70;
const SALT_SWEEP_BASE: u64 = 0x5B0;

fn estimate_json(e: &Estimate) -> serde_json::Value {
    json!({ "value": e.value, "sigma": e.sigma })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn write_summary(out_dir: &Path, summary: &serde_json::Value) -> Result<PathBuf> {
    let path = out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    write_text(&path, &text)?;
    Ok(path)
}

/// Histogram CSV, one row per non-empty bin.
fn histogram_csv(h: &CorrelationHistogram) -> String {
    let mut s = String::from("delay_ps,counts\n");
    for (d, c) in h.rows() {
        if c > 0 {
            s.push_str(&format!("{d},{c}\n"));
        }
    }
    s
}

fn peaks_json(p: &PeakAreas) -> serde_json::Value {
    json!({
        "center": p.center,
        "sides": p.sides.iter().map(|&(d, c)| json!([d, c])).collect::<Vec<_>>(),
    })
}

/// Simulates emission, applies the detection chain and histograms the
/// XX-X cross-correlation. The analyzer is optional.
struct PairRun {
    records: Vec<DetectionRecord>,
    histogram: CorrelationHistogram,
    peaks: PeakAreas,
    singles_xx: u64,
    singles_x: u64,
}

fn run_pair_pipeline(
    cfg: &ExperimentConfig,
    sim: &SimConfig,
    setting: Option<&crate::detection::AnalyzerSetting>,
) -> Result<PairRun> {
    let events = simulate_emissions(sim)?;
    let duration_ps = sim.n_pulses as f64 * cfg.source.excitation.rep_period_ps();
    let mut rng = block_rng(derive_seed(sim.seed, SALT_DETECTION), 0);
    let records = apply_chain(
        &events,
        &cfg.source.qdot,
        &cfg.efficiencies,
        &cfg.detector,
        setting,
        duration_ps,
        &mut rng,
    );
    let a = channel_timestamps(&records, CHANNEL_XX);
    let b = channel_timestamps(&records, CHANNEL_X);
    let histogram = build_histogram(
        &a,
        &b,
        cfg.analysis.bin_width_ps,
        cfg.analysis.max_delay_ps,
        cfg.histogram_period_ps(),
    )?;
    let peaks = integrate_peaks(&histogram, cfg.analysis.peak_window_ps)?;
    Ok(PairRun {
        singles_xx: a.len() as u64,
        singles_x: b.len() as u64,
        records,
        histogram,
        peaks,
    })
}

/// Dispatches a validated configuration and writes its artifacts.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    init_thread_pool();
    cfg.validate()?;
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::Config(format!("{}: {e}", out_dir.display())))?;
    match cfg.kind {
        ExperimentKind::Tomography12 => run_tomography(cfg, out_dir),
        ExperimentKind::Hbt => run_hbt(cfg, out_dir),
        ExperimentKind::RabiSweep => run_rabi_sweep(cfg, out_dir),
        ExperimentKind::Hom => run_hom(cfg, out_dir),
        ExperimentKind::Calibrate => run_calibrate(cfg, out_dir),
        ExperimentKind::Design => run_design(cfg, out_dir),
    }
}

fn run_tomography(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    let settings = tomography_settings();
    let mut files = Vec::new();
    let mut records_out = Vec::with_capacity(12);
    let mut setting_rows = Vec::new();
    let mut csv = String::from("basis_xx,basis_x,zero_peak_counts,side_peak_mean\n");
    for (i, setting) in settings.iter().enumerate() {
        let mut sim = cfg.sim_config();
        sim.seed = derive_seed(cfg.run.seed, SALT_SETTING_BASE + i as u64);
        let run = run_pair_pipeline(cfg, &sim, Some(setting))?;
        let label = format!("{}{}", setting.basis_xx, setting.basis_x);
        let path = out_dir.join(format!("tomo_{label}.qtt"));
        write_timetags(&path, cfg.histogram_period_ps(), 2, &run.records)?;
        files.push(path);
        let sides: Vec<u64> = run.peaks.sides.iter().map(|&(_, c)| c).collect();
        let normalization = if sides.is_empty() {
            0.0
        } else {
            sides.iter().sum::<u64>() as f64 / sides.len() as f64
        };
        csv.push_str(&format!(
            "{},{},{},{normalization}\n",
            setting.basis_xx, setting.basis_x, run.peaks.center
        ));
        setting_rows.push(json!({
            "basis_xx": setting.basis_xx.to_string(),
            "basis_x": setting.basis_x.to_string(),
            "zero_peak_counts": run.peaks.center,
            "side_peak_mean": normalization,
        }));
        records_out.push(TomographyRecord {
            setting: *setting,
            zero_peak_counts: run.peaks.center,
            normalization,
        });
    }
    let csv_path = out_dir.join("tomography.csv");
    write_text(&csv_path, &csv)?;
    files.push(csv_path);

    let vis = visibilities_from_records(&records_out)?;
    let fidelity = fidelity_from_visibilities(vis[0].value, vis[1].value, vis[2].value)?;
    let fidelity_sigma =
        (vis.iter().map(|e| e.sigma * e.sigma).sum::<f64>()).sqrt() / 4.0;
    let summary = json!({
        "kind": "tomography12",
        "provenance": cfg.provenance(),
        "settings": setting_rows,
        "visibilities": {
            "linear": estimate_json(&vis[0]),
            "diagonal": estimate_json(&vis[1]),
            "circular": estimate_json(&vis[2]),
        },
        "fidelity": { "value": fidelity, "sigma": fidelity_sigma },
    });
    files.push(write_summary(out_dir, &summary)?);
    Ok(RunOutput { summary, files })
}

fn run_hbt(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    let sim = cfg.sim_config();
    let events = simulate_emissions(&sim)?;
    let duration_ps = sim.n_pulses as f64 * cfg.source.excitation.rep_period_ps();
    let mut rng = block_rng(derive_seed(sim.seed, SALT_DETECTION), 0);
    let records = apply_hbt_chain(
        &events,
        cfg.analysis.hbt_species,
        &cfg.efficiencies,
        &cfg.detector,
        duration_ps,
        &mut rng,
    );
    let mut files = Vec::new();
    let qtt_path = out_dir.join("hbt.qtt");
    write_timetags(&qtt_path, cfg.histogram_period_ps(), 2, &records)?;
    files.push(qtt_path);

    let a = channel_timestamps(&records, 0);
    let b = channel_timestamps(&records, 1);
    let histogram = build_histogram(
        &a,
        &b,
        cfg.analysis.bin_width_ps,
        cfg.analysis.max_delay_ps,
        cfg.histogram_period_ps(),
    )?;
    let csv_path = out_dir.join("histogram.csv");
    write_text(&csv_path, &histogram_csv(&histogram))?;
    files.push(csv_path);

    let peaks = integrate_peaks(&histogram, cfg.analysis.peak_window_ps)?;
    let g2 = g2_zero(&peaks, cfg.analysis.g2_min_side_delay_ps)?;
    let blinking = blinking_envelope(&peaks).ok();
    let summary = json!({
        "kind": "hbt",
        "provenance": cfg.provenance(),
        "species": cfg.analysis.hbt_species,
        "singles": [a.len(), b.len()],
        "peaks": peaks_json(&peaks),
        "g2_zero": estimate_json(&g2),
        "blinking": blinking.map(|b| json!({
            "on_fraction": b.on_fraction,
            "t_corr_ps": b.t_corr_ps,
        })),
    });
    files.push(write_summary(out_dir, &summary)?);
    Ok(RunOutput { summary, files })
}

fn run_rabi_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    let n = cfg.analysis.rabi_points;
    let s_max = cfg.analysis.rabi_max_power_ratio.sqrt();
    let mut csv = String::from("power_nw,sqrt_power_ratio,singles_xx\n");
    let mut rows = Vec::new();
    let mut peak = (0.0f64, 0u64);
    for k in 0..n {
        let s = s_max * k as f64 / (n - 1) as f64;
        let power = s * s * cfg.source.excitation.p_pi_power;
        let mut point = cfg.clone();
        point.source.excitation.power = power;
        let mut sim = point.sim_config();
        sim.seed = derive_seed(cfg.run.seed, SALT_SWEEP_BASE + k as u64);
        let run = run_pair_pipeline(&point, &sim, None)?;
        csv.push_str(&format!("{power},{s},{}\n", run.singles_xx));
        if run.singles_xx > peak.1 {
            peak = (s, run.singles_xx);
        }
        rows.push(json!({
            "power_nw": power,
            "sqrt_power_ratio": s,
            "singles_xx": run.singles_xx,
        }));
    }
    let csv_path = out_dir.join("rabi.csv");
    write_text(&csv_path, &csv)?;
    let summary = json!({
        "kind": "rabi_sweep",
        "provenance": cfg.provenance(),
        "points": rows,
        "peak_sqrt_power_ratio": peak.0,
    });
    let summary_path = write_summary(out_dir, &summary)?;
    Ok(RunOutput {
        summary,
        files: vec![csv_path, summary_path],
    })
}

/// Pulse areas of the calibration linearity sweep, in units of pi.
const CALIBRATION_AREAS: [f64; 4] = [1.0 / 6.0, 1.0 / 3.0, 0.5, 1.0];

fn run_calibrate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    let mut files = Vec::new();
    let base = run_pair_pipeline(cfg, &cfg.sim_config(), None)?;
    let qtt_path = out_dir.join("calibrate.qtt");
    write_timetags(&qtt_path, cfg.histogram_period_ps(), 2, &base.records)?;
    files.push(qtt_path);
    let hist_path = out_dir.join("histogram.csv");
    write_text(&hist_path, &histogram_csv(&base.histogram))?;
    files.push(hist_path);
    let p_base = side_to_center_calibration(&base.peaks)?;

    let mut csv = String::from(
        "pulse_area_over_pi,power_nw,p_estimate,p_sigma,singles_xx,normalized_singles\n",
    );
    let mut sweep = Vec::new();
    for (k, area) in CALIBRATION_AREAS.iter().enumerate() {
        let power = area * area * cfg.source.excitation.p_pi_power;
        let mut point = cfg.clone();
        point.source.excitation.power = power;
        let mut sim = point.sim_config();
        sim.seed = derive_seed(cfg.run.seed, SALT_SWEEP_BASE + k as u64);
        let run = run_pair_pipeline(&point, &sim, None)?;
        let p = side_to_center_calibration(&run.peaks)?;
        sweep.push((*area, power, p, run.singles_xx));
    }
    let max_singles = sweep.iter().map(|s| s.3).max().unwrap_or(1).max(1) as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut sweep_rows = Vec::new();
    for (area, power, p, singles) in &sweep {
        let normalized = *singles as f64 / max_singles;
        xs.push(normalized);
        ys.push(p.value);
        csv.push_str(&format!(
            "{area},{power},{},{},{singles},{normalized}\n",
            p.value, p.sigma
        ));
        sweep_rows.push(json!({
            "pulse_area_over_pi": area,
            "power_nw": power,
            "p_estimate": estimate_json(p),
            "singles_xx": singles,
            "normalized_singles": normalized,
        }));
    }
    let r2 = r_squared(&xs, &ys);
    let csv_path = out_dir.join("calibration.csv");
    write_text(&csv_path, &csv)?;
    files.push(csv_path);
    let summary = json!({
        "kind": "calibrate",
        "provenance": cfg.provenance(),
        "pair_probability": estimate_json(&p_base),
        "singles": [base.singles_xx, base.singles_x],
        "peaks": peaks_json(&base.peaks),
        "sweep": sweep_rows,
        "sweep_r_squared": r2,
    });
    files.push(write_summary(out_dir, &summary)?);
    Ok(RunOutput { summary, files })
}

/// Coefficient of determination of the least-squares line through (x, y).
pub fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy * sxy) / (sxx * syy)
}

fn run_hom(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    let hom = cfg.hom.as_ref().expect("validated");
    let parallel_cfg = hom.with_polarization(HomPolarization::Parallel);
    let cross_cfg = hom.with_polarization(HomPolarization::Cross);
    let n = cfg.run.n_pulses;
    let seed = cfg.run.seed;
    let par = simulate_hom(&cfg.source, &cfg.detector, &parallel_cfg, n, seed)?;
    let cross = simulate_hom(&cfg.source, &cfg.detector, &cross_cfg, n, seed)?;

    let mut files = Vec::new();
    let period = cfg.histogram_period_ps();
    for (name, recs) in [("hom_parallel.qtt", &par), ("hom_cross.qtt", &cross)] {
        let path = out_dir.join(name);
        write_timetags(&path, period, 2, recs)?;
        files.push(path);
    }

    // Delay structure around zero: the center dip and the first
    // interferometer side peaks.
    let max_delay = {
        let want = (3.0 * hom.pulse_pair_delay) as u64;
        want - want % cfg.analysis.bin_width_ps
    };
    let mut csv = String::from("delay_ps,counts,polarization\n");
    for (pol, recs) in [("parallel", &par), ("cross", &cross)] {
        let a = channel_timestamps(recs, 0);
        let b = channel_timestamps(recs, 1);
        let h = build_histogram(&a, &b, cfg.analysis.bin_width_ps, max_delay, period)?;
        for (d, c) in h.rows() {
            if c > 0 {
                csv.push_str(&format!("{d},{c},{pol}\n"));
            }
        }
    }
    let csv_path = out_dir.join("hom_histogram.csv");
    write_text(&csv_path, &csv)?;
    files.push(csv_path);

    // The zero-delay peak sits pulse_pair_delay away from its neighbors;
    // half that separation cleanly isolates it.
    let center_window = (hom.pulse_pair_delay / 2.0) as u64;
    let c_par = center_coincidences(&par, center_window);
    let c_cross = center_coincidences(&cross, center_window);
    let raw = hom_visibility(c_cross, c_par)?;
    let filtered = temporal_filter_visibility(&par, &cross, cfg.analysis.filter_window_ps)?;
    let corrected = correct_visibility(
        raw.value,
        cfg.analysis.correction_g2,
        hom.bs_reflectivity,
        cfg.analysis.correction_classical_visibility,
    )?;
    let predicted = predicted_raw_visibility(&cfg.source, &parallel_cfg)?;
    let summary = json!({
        "kind": "hom",
        "provenance": cfg.provenance(),
        "species": hom.species,
        "center_coincidences": { "parallel": c_par, "cross": c_cross },
        "raw_visibility": estimate_json(&raw),
        "filtered_visibility": {
            "window_ps": cfg.analysis.filter_window_ps,
            "value": filtered.value,
            "sigma": filtered.sigma,
        },
        "corrected_visibility": { "value": corrected.value, "clamped": corrected.clamped },
        "predicted_raw_visibility": predicted,
    });
    files.push(write_summary(out_dir, &summary)?);
    Ok(RunOutput { summary, files })
}

fn run_design(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    let d = cfg.design.as_ref().expect("validated");
    let geometry = d.geometry.as_ref().map(|g| {
        json!({
            "disk_radius": g.disk_radius,
            "grating_period": g.grating_period,
            "mode_wavelength": mode_wavelength(g, &d.rules),
            "in_characterized_range": g.in_characterized_range(),
        })
    });
    let solved = d.target_lambda.map(|target| {
        let period = d
            .geometry
            .as_ref()
            .map_or(d.rules.reference.grating_period, |g| g.grating_period);
        let radius = solve_radius(target, period, &d.rules);
        let check = crate::cbg::CbgGeometry {
            disk_radius: radius,
            grating_period: period,
            ..d.rules.reference
        };
        json!({
            "target_lambda": target,
            "grating_period": period,
            "disk_radius": radius,
            "in_characterized_range": check.in_characterized_range(),
        })
    });
    let budget = detuning_budget(&d.rules, &cfg.source.cavity)?;
    let summary = json!({
        "kind": "design",
        "provenance": cfg.provenance(),
        "geometry": geometry,
        "solved": solved,
        "detuning_budget": {
            "sigma_lambda": budget.sigma_lambda,
            "sigma_radius_equivalent": budget.sigma_radius_equivalent,
            "fwhm": budget.fwhm,
            "ratio": budget.ratio,
            "purcell_penalty": budget.purcell_penalty,
        },
    });
    let summary_path = write_summary(out_dir, &summary)?;
    Ok(RunOutput {
        summary,
        files: vec![summary_path],
    })
}

/// Closed-form photon budget of a configuration: per-pulse pair numbers,
/// per-arm efficiency products, detected rates and heralding predictions.
pub fn summarize_bookkeeping(cfg: &ExperimentConfig) -> serde_json::Value {
    let q = rabi_preparation_probability(&cfg.source.excitation);
    let beta = cfg.source.blinking.on_fraction;
    let pair_generation = beta * q;
    let pairs_per_pulse = pair_generation * (1.0 + cfg.source.excitation.p_reexcite);
    let eta_xx = cfg.efficiencies.arm_efficiency(Species::Xx);
    let eta_x = cfg.efficiencies.arm_efficiency(Species::X);
    let rates = predict_rates(&cfg.source, &cfg.efficiencies);
    json!({
        "kind": "bookkeeping",
        "provenance": cfg.provenance(),
        "preparation_probability": q,
        "on_fraction": beta,
        "pair_generation_per_pulse": pair_generation,
        "pairs_per_pulse": pairs_per_pulse,
        "pair_extraction_efficiency": pair_extraction_efficiency(&cfg.efficiencies),
        "arm_efficiency": { "xx": eta_xx, "x": eta_x },
        "rates_hz": {
            "singles_xx": rates.singles_xx,
            "singles_x": rates.singles_x,
            "coincidences": rates.coincidences,
        },
        "klyshko": {
            "xx": if rates.singles_x > 0.0 { klyshko(rates.coincidences, rates.singles_x) } else { 0.0 },
            "x": if rates.singles_xx > 0.0 { klyshko(rates.coincidences, rates.singles_xx) } else { 0.0 },
        },
    })
}

pub fn run_bookkeeping(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::Config(format!("{}: {e}", out_dir.display())))?;
    let summary = summarize_bookkeeping(cfg);
    let summary_path = write_summary(out_dir, &summary)?;
    Ok(RunOutput {
        summary,
        files: vec![summary_path],
    })
}

/// Offline analysis of an existing time-tag file: histogram, peak areas,
/// g2(0), side-to-center ratio and blinking envelope where estimable.
pub fn analyze_file(
    input: &Path,
    analysis: &AnalysisOptions,
    out_dir: &Path,
) -> Result<RunOutput> {
    init_thread_pool();
    analysis.validate()?;
    let bytes =
        fs::read(input).map_err(|e| Error::Config(format!("{}: {e}", input.display())))?;
    let file = read_timetags_from(bytes.as_slice())?;
    if file.rep_period_ps == 0 || file.rep_period_ps % analysis.bin_width_ps != 0 {
        return Err(Error::Config(format!(
            "file period {} ps is not a positive multiple of the {} ps bin width",
            file.rep_period_ps, analysis.bin_width_ps
        )));
    }
    let digest = Sha256::digest(&bytes);
    let mut input_sha = String::with_capacity(64);
    use std::fmt::Write as _;
    for b in digest {
        write!(input_sha, "{b:02x}").expect("hex into string");
    }

    let a = channel_timestamps(&file.records, 0);
    let b = channel_timestamps(&file.records, 1);
    let histogram = build_histogram(
        &a,
        &b,
        analysis.bin_width_ps,
        analysis.max_delay_ps,
        file.rep_period_ps,
    )?;
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::Config(format!("{}: {e}", out_dir.display())))?;
    let csv_path = out_dir.join("histogram.csv");
    write_text(&csv_path, &histogram_csv(&histogram))?;

    let peaks = integrate_peaks(&histogram, analysis.peak_window_ps)?;
    let g2 = g2_zero(&peaks, analysis.g2_min_side_delay_ps).ok();
    let side_to_center = side_to_center_calibration(&peaks).ok();
    let blinking = blinking_envelope(&peaks).ok();
    let summary = json!({
        "kind": "analyze",
        "provenance": { "input_sha256": input_sha, "version": VERSION },
        "records": file.records.len(),
        "singles": [a.len(), b.len()],
        "rep_period_ps": file.rep_period_ps,
        "peaks": peaks_json(&peaks),
        "g2_zero": g2.map(|e| estimate_json(&e)),
        "side_to_center": side_to_center.map(|e| estimate_json(&e)),
        "blinking": blinking.map(|b| json!({
            "on_fraction": b.on_fraction,
            "t_corr_ps": b.t_corr_ps,
        })),
    });
    let summary_path = write_summary(out_dir, &summary)?;
    Ok(RunOutput {
        summary,
        files: vec![csv_path, summary_path],
    })
}
