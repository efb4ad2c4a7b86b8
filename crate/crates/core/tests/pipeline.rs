//! Mid-level pipeline tests: consistency between the run orchestrator and
//! the offline analyzer, structural zeros, estimator robustness and the
//! file contract of every experiment kind.

mod common;

use qtt_core::cascade::{simulate_emissions, BlinkingParams, SimConfig, SourceParams};
use qtt_core::config::{ExperimentConfig, ExperimentKind};
use qtt_core::detection::{
    apply_hbt_chain, klyshko, DetectorParams, SetupEfficiencies, Species, NOMINAL_DEAD_TIME_NS,
};
use qtt_core::hom::{center_coincidences, simulate_hom, HomConfig, HomPolarization};
use qtt_core::runner::{analyze_file, run_experiment};

fn small_cfg(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::calibrated(kind);
    cfg.run.n_pulses = 40_000;
    cfg.run.seed = 5;
    cfg.analysis.max_delay_ps = 200_000;
    cfg.analysis.g2_min_side_delay_ps = 100_000;
    cfg
}

#[test]
fn offline_analysis_reproduces_runner_estimates() {
    let cfg = small_cfg(ExperimentKind::Hbt);
    let run_dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&cfg, run_dir.path()).unwrap();

    let analyze_dir = tempfile::tempdir().unwrap();
    let re = analyze_file(
        &run_dir.path().join("hbt.qtt"),
        &cfg.analysis,
        analyze_dir.path(),
    )
    .unwrap();

    // Same records, same estimators: the numbers must agree exactly.
    for field in ["value", "sigma"] {
        assert_eq!(
            out.summary["g2_zero"][field].as_f64().unwrap(),
            re.summary["g2_zero"][field].as_f64().unwrap(),
            "g2 {field} differs between runner and offline analysis"
        );
    }
    assert_eq!(
        out.summary["peaks"]["center"].as_u64().unwrap(),
        re.summary["peaks"]["center"].as_u64().unwrap()
    );
    // The offline histogram CSV matches the runner's byte for byte.
    assert_eq!(
        std::fs::read(run_dir.path().join("histogram.csv")).unwrap(),
        std::fs::read(analyze_dir.path().join("histogram.csv")).unwrap()
    );
}

#[test]
fn center_peak_empty_without_reexcitation() {
    // A cascade emits exactly one XX photon per pulse unless re-excited,
    // so with re-excitation off the autocorrelation zero peak is exactly
    // empty (dark counts disabled to keep the structural zero exact).
    let mut source = SourceParams::calibrated();
    source.excitation.p_reexcite = 0.0;
    let mut det = DetectorParams::calibrated();
    det.dark_rate = 0.0;
    let peaks = common::run_hbt_mc(
        &source,
        &SetupEfficiencies::calibrated(),
        &det,
        Species::Xx,
        1_000_000,
        9,
        200_000,
    );
    assert_eq!(peaks.center, 0, "single photons cannot self-coincide");
    assert!(peaks.sides.iter().all(|&(_, c)| c > 0));
}

#[test]
fn klyshko_ratio_cancels_blinking() {
    let eff = SetupEfficiencies::calibrated();
    let det = DetectorParams::calibrated();
    let eta_xx = eff.arm_efficiency(Species::Xx);
    let mut k = Vec::new();
    for (blinking, seed) in [(BlinkingParams::calibrated(), 13), (BlinkingParams::off(), 14)]
    {
        let mut source = SourceParams::calibrated();
        source.blinking = blinking;
        let run = common::run_cross_mc(&source, &eff, &det, 1_000_000, seed, 4_000);
        let k_hat = klyshko(run.peaks.center as f64, run.singles_x as f64);
        let sigma = (eta_xx * (1.0 - eta_xx) / run.singles_x as f64).sqrt();
        assert!(
            (k_hat - eta_xx).abs() <= 4.0 * sigma,
            "Klyshko {k_hat:.5} should estimate the XX arm efficiency {eta_xx:.5}"
        );
        k.push((k_hat, sigma));
    }
    let (on, off) = (k[0], k[1]);
    assert!(
        (on.0 - off.0).abs() <= 4.0 * (on.1 * on.1 + off.1 * off.1).sqrt(),
        "the heralding ratio must not depend on the blinking duty cycle"
    );
}

#[test]
fn bunching_only_removes_cross_channel_pairs() {
    let source = SourceParams::calibrated();
    let det = DetectorParams::calibrated();
    let cfg = HomConfig::calibrated(Species::Xx);
    let par = simulate_hom(
        &source,
        &det,
        &cfg.with_polarization(HomPolarization::Parallel),
        100_000,
        17,
    )
    .unwrap();
    let cross = simulate_hom(
        &source,
        &det,
        &cfg.with_polarization(HomPolarization::Cross),
        100_000,
        17,
    )
    .unwrap();
    // Same seed, so the two runs share emissions and routing; interference
    // can only convert cross-channel pairs into same-channel pairs.
    assert!(center_coincidences(&par, 1_000) < center_coincidences(&cross, 1_000));
    // Total record count is untouched by the interference thinning.
    assert_eq!(par.len(), cross.len());
}

#[test]
fn every_kind_writes_its_declared_files() {
    for kind in [
        ExperimentKind::Hbt,
        ExperimentKind::Tomography12,
        ExperimentKind::Hom,
        ExperimentKind::RabiSweep,
        ExperimentKind::Calibrate,
        ExperimentKind::Design,
    ] {
        let mut cfg = small_cfg(kind);
        if kind == ExperimentKind::Tomography12 {
            cfg.run.n_pulses = 20_000;
        }
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&cfg, dir.path()).unwrap();
        for f in &out.files {
            assert!(f.exists(), "{kind:?} did not write {}", f.display());
        }
        let prov = &out.summary["provenance"];
        assert_eq!(prov["config_sha256"], serde_json::json!(cfg.sha256_hex()));
        assert_eq!(prov["seed"], serde_json::json!(cfg.run.seed));
        assert!(prov["version"].is_string());
        let summary_on_disk: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap())
                .unwrap();
        assert_eq!(summary_on_disk, out.summary);
    }
}

#[test]
fn emission_simulation_is_deterministic() {
    let cfg = SimConfig {
        source: SourceParams::calibrated(),
        n_pulses: 200_000,
        seed: 23,
        block_size: 4_096,
    };
    let a = simulate_emissions(&cfg).unwrap();
    let b = simulate_emissions(&cfg).unwrap();
    assert_eq!(a, b, "same config and seed must reproduce every emission");
    assert!(a.len() > 100_000);
}

#[test]
fn dead_time_enforces_minimum_channel_gap() {
    let source = SourceParams::calibrated();
    let mut det = DetectorParams::calibrated();
    det.dead_time = NOMINAL_DEAD_TIME_NS;
    let sim = SimConfig {
        source,
        n_pulses: 300_000,
        seed: 29,
        block_size: 65_536,
    };
    let events = simulate_emissions(&sim).unwrap();
    let duration = sim.n_pulses as f64 * source.excitation.rep_period_ps();
    let mut rng = qtt_core::cascade::block_rng(31, 0);
    let records = apply_hbt_chain(
        &events,
        Species::Xx,
        &SetupEfficiencies::calibrated(),
        &det,
        duration,
        &mut rng,
    );
    let gap_ps = (NOMINAL_DEAD_TIME_NS * 1e3) as u64;
    for channel in [0u8, 1] {
        let ts = qtt_core::correlation::channel_timestamps(&records, channel);
        assert!(!ts.is_empty());
        assert!(
            ts.windows(2).all(|w| w[1] - w[0] >= gap_ps),
            "clicks closer than the dead time survived on channel {channel}"
        );
    }
}
