//! Detection chain: polarization analyzers, per-arm loss, detector jitter,
//! dark counts and dead time, producing time-tagged detection records.
//!
//! Randomness discipline: for every emitted photon the chain always draws
//! its survival uniform and its jitter sample, whether or not the photon is
//! kept. Two passes over the same events with the same RNG but different
//! efficiencies therefore see identical randomness, and the detections at
//! the lower efficiency are a subset of those at the higher one.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::cascade::{EmissionEvent, SourceParams};
use crate::error::{Error, Result};
use crate::source::QDotParams;
use crate::state::{Polarization, TwoPhotonState};

/// Detection channel carrying the biexciton photon in pair runs.
pub const CHANNEL_XX: u8 = 0;
/// Detection channel carrying the exciton photon in pair runs.
pub const CHANNEL_X: u8 = 1;

/// Which photon of the cascade an arm collects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Xx,
    X,
}

/// Per-stage collection efficiencies of one arm of the setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupEfficiencies {
    pub eta_det: f64,
    pub eta_path: f64,
    pub eta_fiber: f64,
    /// Chip-to-lens extraction at the XX wavelength.
    pub eta_extr_xx: f64,
    /// Chip-to-lens extraction at the X wavelength.
    pub eta_extr_x: f64,
}

impl SetupEfficiencies {
    pub fn calibrated() -> Self {
        SetupEfficiencies {
            eta_det: 0.76,
            eta_path: 0.25,
            eta_fiber: 0.65,
            eta_extr_xx: 0.795,
            eta_extr_x: 0.782,
        }
    }

    /// Lossless reference chain.
    pub fn ideal() -> Self {
        SetupEfficiencies {
            eta_det: 1.0,
            eta_path: 1.0,
            eta_fiber: 1.0,
            eta_extr_xx: 1.0,
            eta_extr_x: 1.0,
        }
    }

    /// End-to-end detection probability of one photon in its arm.
    pub fn arm_efficiency(&self, species: Species) -> f64 {
        let extr = match species {
            Species::Xx => self.eta_extr_xx,
            Species::X => self.eta_extr_x,
        };
        extr * self.eta_path * self.eta_fiber * self.eta_det
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_det", self.eta_det),
            ("eta_path", self.eta_path),
            ("eta_fiber", self.eta_fiber),
            ("eta_extr_xx", self.eta_extr_xx),
            ("eta_extr_x", self.eta_extr_x),
        ] {
            // Zero is legal: a blocked or switched-off stage still yields a
            // well-defined (zero-rate) budget.
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, "must be in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Timing response and noise of the single-photon detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    /// Gaussian timing jitter, full width at half maximum (ps).
    pub jitter_fwhm: f64,
    /// Dark count rate per channel (1/s).
    pub dark_rate: f64,
    /// Dead time after each registered count (ns).
    pub dead_time: f64,
}

/// Nominal SNSPD dead time (ns) when modelling saturation effects.
pub const NOMINAL_DEAD_TIME_NS: f64 = 40.0;

impl DetectorParams {
    /// Jitter and dark rate of the reference setup. Dead time is zero here:
    /// the calibrated count rates are quoted as saturation-corrected, so
    /// rate comparisons use the dead-time-free chain.
    pub fn calibrated() -> Self {
        DetectorParams {
            jitter_fwhm: 20.0,
            dark_rate: 100.0,
            dead_time: 0.0,
        }
    }

    /// Noiseless, jitter-free, dead-time-free detector.
    pub fn ideal() -> Self {
        DetectorParams {
            jitter_fwhm: 0.0,
            dark_rate: 0.0,
            dead_time: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_fwhm >= 0.0) {
            return Err(Error::invalid("jitter_fwhm", "must be >= 0 ps"));
        }
        if !(self.dark_rate >= 0.0) {
            return Err(Error::invalid("dark_rate", "must be >= 0 /s"));
        }
        if !(self.dead_time >= 0.0) {
            return Err(Error::invalid("dead_time", "must be >= 0 ns"));
        }
        Ok(())
    }

    /// Standard deviation of the Gaussian jitter (ps).
    pub fn jitter_sigma(&self) -> f64 {
        self.jitter_fwhm / (8.0 * std::f64::consts::LN_2).sqrt()
    }
}

/// Polarization analyzer settings in the two arms. The analyzer is
/// destructive: a photon projected onto the orthogonal state is absorbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzerSetting {
    pub basis_xx: Polarization,
    pub basis_x: Polarization,
}

/// One time-tagged detector click.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub channel: u8,
    /// Absolute detection time (ps).
    pub timestamp_ps: u64,
}

fn single_pass_probability(state: &TwoPhotonState, species: Species, basis: Polarization) -> f64 {
    match species {
        Species::Xx => state.marginal_xx(basis),
        Species::X => state.marginal_x(basis),
    }
}

/// Samples the joint analyzer outcome (XX passes, X passes) from the Born
/// probabilities of the two-photon state, using a single uniform draw.
pub fn project_pair<R: Rng + ?Sized>(
    state: &TwoPhotonState,
    setting: &AnalyzerSetting,
    rng: &mut R,
) -> (bool, bool) {
    let p11 = state.joint_probability(setting.basis_xx, setting.basis_x);
    let p1_xx = single_pass_probability(state, Species::Xx, setting.basis_xx);
    let p1_x = single_pass_probability(state, Species::X, setting.basis_x);
    let p10 = (p1_xx - p11).max(0.0);
    let p01 = (p1_x - p11).max(0.0);
    let u = rng.random::<f64>();
    if u < p11 {
        (true, true)
    } else if u < p11 + p10 {
        (true, false)
    } else if u < p11 + p10 + p01 {
        (false, true)
    } else {
        (false, false)
    }
}

fn jitter_and_stamp<R: Rng + ?Sized>(t_ps: f64, sigma: f64, rng: &mut R) -> u64 {
    // Always consume the jitter draw, even for sigma == 0, so that record
    // counts are invariant under the jitter setting for a fixed seed.
    let dt = Normal::new(0.0, 1.0).unwrap().sample(rng) * sigma;
    (t_ps + dt).round().max(0.0) as u64
}

fn append_darks<R: Rng + ?Sized>(
    out: &mut Vec<DetectionRecord>,
    channels: &[u8],
    dark_rate: f64,
    duration_ps: f64,
    rng: &mut R,
) {
    if dark_rate <= 0.0 || duration_ps <= 0.0 {
        return;
    }
    let mean = dark_rate * duration_ps * 1e-12;
    for &channel in channels {
        let n = Poisson::new(mean).expect("positive mean").sample(rng) as u64;
        for _ in 0..n {
            let t = rng.random::<f64>() * duration_ps;
            out.push(DetectionRecord {
                channel,
                timestamp_ps: t.round() as u64,
            });
        }
    }
}

fn apply_dead_time(records: &mut Vec<DetectionRecord>, dead_time_ns: f64) {
    records.sort_by_key(|r| (r.timestamp_ps, r.channel));
    if dead_time_ns <= 0.0 {
        return;
    }
    let dead_ps = dead_time_ns * 1e3;
    let mut last: [Option<u64>; 256] = [None; 256];
    records.retain(|r| {
        let ok = match last[r.channel as usize] {
            Some(prev) => (r.timestamp_ps - prev) as f64 >= dead_ps,
            None => true,
        };
        if ok {
            last[r.channel as usize] = Some(r.timestamp_ps);
        }
        ok
    });
}

/// Runs emitted pairs through analyzers (if any), arm losses, jitter, dark
/// counts and dead time. XX photons land on channel 0, X photons on
/// channel 1; the output is time-sorted.
pub fn apply_chain<R: Rng + ?Sized>(
    events: &[EmissionEvent],
    qd: &QDotParams,
    eff: &SetupEfficiencies,
    det: &DetectorParams,
    setting: Option<&AnalyzerSetting>,
    duration_ps: f64,
    rng: &mut R,
) -> Vec<DetectionRecord> {
    let eta_xx = eff.arm_efficiency(Species::Xx);
    let eta_x = eff.arm_efficiency(Species::X);
    let sigma = det.jitter_sigma();
    let mut out = Vec::new();
    for e in events {
        let (pass_xx, pass_x) = match setting {
            Some(s) => project_pair(&e.pol_state(qd), s, rng),
            None => (true, true),
        };
        let u_xx = rng.random::<f64>();
        let t_xx = jitter_and_stamp(e.t_xx, sigma, rng);
        let u_x = rng.random::<f64>();
        let t_x = jitter_and_stamp(e.t_x, sigma, rng);
        if pass_xx && u_xx < eta_xx {
            out.push(DetectionRecord {
                channel: CHANNEL_XX,
                timestamp_ps: t_xx,
            });
        }
        if pass_x && u_x < eta_x {
            out.push(DetectionRecord {
                channel: CHANNEL_X,
                timestamp_ps: t_x,
            });
        }
    }
    append_darks(&mut out, &[CHANNEL_XX, CHANNEL_X], det.dark_rate, duration_ps, rng);
    apply_dead_time(&mut out, det.dead_time);
    out
}

/// Sends one species through its arm onto a 50/50 beamsplitter with a
/// detector on each output (intensity autocorrelation geometry). Channels
/// 0 and 1 are the two splitter outputs.
pub fn apply_hbt_chain<R: Rng + ?Sized>(
    events: &[EmissionEvent],
    species: Species,
    eff: &SetupEfficiencies,
    det: &DetectorParams,
    duration_ps: f64,
    rng: &mut R,
) -> Vec<DetectionRecord> {
    let eta = eff.arm_efficiency(species);
    let sigma = det.jitter_sigma();
    let mut out = Vec::new();
    for e in events {
        let t = match species {
            Species::Xx => e.t_xx,
            Species::X => e.t_x,
        };
        let u = rng.random::<f64>();
        let stamp = jitter_and_stamp(t, sigma, rng);
        let port = rng.random::<f64>() < 0.5;
        if u < eta {
            out.push(DetectionRecord {
                channel: port as u8,
                timestamp_ps: stamp,
            });
        }
    }
    append_darks(&mut out, &[0, 1], det.dark_rate, duration_ps, rng);
    apply_dead_time(&mut out, det.dead_time);
    out
}

/// Closed-form detected rates (1/s), before dead time and dark counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub singles_xx: f64,
    pub singles_x: f64,
    pub coincidences: f64,
}

/// Expected singles and pair-coincidence rates for a source behind the
/// chain, without analyzers.
pub fn predict_rates(source: &SourceParams, eff: &SetupEfficiencies) -> Rates {
    let pairs_per_pulse = source.blinking.on_fraction
        * rabi_probability(source)
        * (1.0 + source.excitation.p_reexcite);
    let rep_hz = source.excitation.rep_rate * 1e6;
    let eta_xx = eff.arm_efficiency(Species::Xx);
    let eta_x = eff.arm_efficiency(Species::X);
    Rates {
        singles_xx: rep_hz * pairs_per_pulse * eta_xx,
        singles_x: rep_hz * pairs_per_pulse * eta_x,
        coincidences: rep_hz * pairs_per_pulse * eta_xx * eta_x,
    }
}

fn rabi_probability(source: &SourceParams) -> f64 {
    crate::source::rabi_preparation_probability(&source.excitation)
}

/// Heralding (Klyshko) efficiency: coincidences over singles in the
/// heralding arm. Equals the arm efficiency of the heralded photon when
/// noise is negligible.
pub fn klyshko(coincidences: f64, heralding_singles: f64) -> f64 {
    coincidences / heralding_singles
}

/// Probability that both photons of an emitted pair reach the collection
/// lens (product of the two chip extraction efficiencies).
pub fn pair_extraction_efficiency(eff: &SetupEfficiencies) -> f64 {
    eff.eta_extr_xx * eff.eta_extr_x
}
