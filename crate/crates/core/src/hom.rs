//! Two-photon interference at a beam splitter for consecutively emitted
//! photons routed through an unbalanced interferometer: amplitude-level
//! coincidence density, a Monte-Carlo sampler of it, visibility
//! estimators, imperfection corrections and temporal filtering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::cascade::SourceParams;
use crate::correlation::Estimate;
use crate::detection::{DetectionRecord, DetectorParams, Species};
use crate::error::{Error, Result};

/// Classical fringe visibility of the interferometer, calibrated once
/// against the corrected-visibility anchor points. Its square is the net
/// damping of the two-photon interference term (one factor per photon
/// passage through the imperfectly overlapped paths).
pub const MZI_CLASSICAL_VISIBILITY: f64 = 0.9804;

/// Pure-dephasing rate of the XX transition (1/ps), calibrated once so the
/// reference XX run gives its target raw interference visibility.
pub const GAMMA_D_XX: f64 = 8.8596e-4;

/// Default temporal-filter window for |t1 - t2| (ps), of the order of the
/// two-detector timing resolution (a few times the 20 ps jitter FWHM).
pub const DEFAULT_FILTER_WINDOW_PS: u64 = 50;

/// Single-photon wavepacket with exponential envelope: the emitter's decay
/// response starting at t0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wavepacket {
    /// Envelope start time (ps).
    pub t0: f64,
    /// Decay rate (1/ps).
    pub gamma: f64,
    /// Pure dephasing rate (1/ps).
    pub dephase_rate: f64,
}

impl Wavepacket {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::invalid("gamma", "must be > 0 /ps"));
        }
        if !(self.dephase_rate >= 0.0) {
            return Err(Error::invalid("dephase_rate", "must be >= 0 /ps"));
        }
        Ok(())
    }

    /// |psi(t)|, with psi(t) = sqrt(gamma)·exp(-gamma(t-t0)/2) for t >= t0.
    pub fn amplitude(&self, t: f64) -> f64 {
        if t < self.t0 {
            0.0
        } else {
            self.gamma.sqrt() * (-0.5 * self.gamma * (t - self.t0)).exp()
        }
    }
}

/// Relative polarization of the two interfering photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HomPolarization {
    Parallel,
    Cross,
}

/// One interference measurement configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomConfig {
    /// Separation of the two excitation pulses, matched by the long arm of
    /// the interferometer (ps).
    pub pulse_pair_delay: f64,
    pub species: Species,
    pub polarization: HomPolarization,
    /// Intensity reflectivity of the recombining beam splitter.
    pub bs_reflectivity: f64,
    /// Classical interferometer visibility multiplying the interference
    /// term.
    pub classical_visibility: f64,
    /// Pure dephasing rate per photon (1/ps).
    #[serde(default)]
    pub dephase_rate: f64,
}

impl HomConfig {
    /// Reference configuration for one species: 2 ns pulse separation,
    /// balanced splitter, calibrated interferometer overlap and dephasing.
    /// The X photon inherits its timing jitter from the XX decay, which
    /// already saturates its visibility budget, so its dephasing is zero
    /// and its interferometer overlap is ideal.
    pub fn calibrated(species: Species) -> Self {
        let (classical_visibility, dephase_rate) = match species {
            Species::Xx => (MZI_CLASSICAL_VISIBILITY * MZI_CLASSICAL_VISIBILITY, GAMMA_D_XX),
            Species::X => (1.0, 0.0),
        };
        HomConfig {
            pulse_pair_delay: 2_000.0,
            species,
            polarization: HomPolarization::Parallel,
            bs_reflectivity: 0.5,
            classical_visibility,
            dephase_rate,
        }
    }

    pub fn with_polarization(mut self, polarization: HomPolarization) -> Self {
        self.polarization = polarization;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_pair_delay > 0.0) {
            return Err(Error::invalid("pulse_pair_delay", "must be > 0 ps"));
        }
        if !(self.bs_reflectivity > 0.0 && self.bs_reflectivity < 1.0) {
            return Err(Error::invalid("bs_reflectivity", "must be in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.classical_visibility) {
            return Err(Error::invalid("classical_visibility", "must be in [0, 1]"));
        }
        if !(self.dephase_rate >= 0.0) {
            return Err(Error::invalid("dephase_rate", "must be >= 0 /ps"));
        }
        Ok(())
    }
}

/// Joint density (1/ps²) of detecting one photon at t1 on one output and
/// the other at t2 on the other output of the recombining splitter.
///
/// Cross-polarized photons do not interfere: the density is the classical
/// routing term T²f1(t1)f2(t2) + R²f2(t1)f1(t2). Parallel polarization
/// subtracts the interference term 2RT·Re[psi1(t1)psi2(t2)psi1*(t2)
/// psi2*(t1)], damped by dephasing and the classical interferometer
/// visibility.
pub fn coincidence_density(
    p1: &Wavepacket,
    p2: &Wavepacket,
    t1: f64,
    t2: f64,
    parallel: bool,
    bs_reflectivity: f64,
    classical_visibility: f64,
) -> f64 {
    let r = bs_reflectivity;
    let t = 1.0 - r;
    let a11 = p1.amplitude(t1);
    let a22 = p2.amplitude(t2);
    let a12 = p1.amplitude(t2);
    let a21 = p2.amplitude(t1);
    let direct = t * t * (a11 * a22).powi(2) + r * r * (a21 * a12).powi(2);
    if !parallel {
        return direct;
    }
    let damp = (-(p1.dephase_rate + p2.dephase_rate) * (t1 - t2).abs()).exp();
    let interference = 2.0 * r * t * classical_visibility * a11 * a22 * a12 * a21 * damp;
    (direct - interference).max(0.0)
}

/// Closed-form raw center-peak visibility of the sampler below, for a
/// source with the given lifetimes. Derivation: coincidences of the
/// delay-matched pulse pair are suppressed by a·V_c·E[exp(-2γ_d|Δt|)] on
/// the common support of the two wavepackets, with a = 2RT/(T²+R²); the
/// detection-time difference on common support is Laplace(gamma), giving
/// the factor gamma/(gamma + 2γ_d), and the common-support probability for
/// X photons is tau_x/(tau_x + tau_xx) from the inherited start times.
pub fn predicted_raw_visibility(source: &SourceParams, hom: &HomConfig) -> Result<f64> {
    let (tau_xx, tau_x) = source.lifetimes()?;
    let r = hom.bs_reflectivity;
    let t = 1.0 - r;
    let a = 2.0 * r * t / (t * t + r * r);
    let (gamma, herald) = match hom.species {
        Species::Xx => (1.0 / tau_xx, 1.0),
        Species::X => (1.0 / tau_x, tau_x / (tau_x + tau_xx)),
    };
    Ok(a * hom.classical_visibility * herald * gamma / (gamma + 2.0 * hom.dephase_rate))
}

/// Simulates interference of consecutively emitted photons in the
/// delay-matched interferometer. Each trial excites the emitter twice,
/// pulse_pair_delay apart; each photon picks an interferometer arm at
/// random; the quarter of trials with matched arms interfere at the
/// recombining splitter. Detection records land on channels 0 and 1.
///
/// The random draw sequence per trial is fixed, so a parallel and a cross
/// run with the same seed see identical emission times, routing and jitter
/// and differ only in the interference thinning.
pub fn simulate_hom(
    source: &SourceParams,
    det: &DetectorParams,
    hom: &HomConfig,
    n_pulse_pairs: u64,
    seed: u64,
) -> Result<Vec<DetectionRecord>> {
    source.validate()?;
    det.validate()?;
    hom.validate()?;
    let (tau_xx, tau_x) = source.lifetimes()?;
    let (tau_sp, inherit) = match hom.species {
        Species::Xx => (tau_xx, None),
        Species::X => (tau_x, Some(Exp::new(1.0 / tau_xx).expect("positive rate"))),
    };
    let decay = Exp::new(1.0 / tau_sp).expect("positive rate");
    let jitter = Normal::new(0.0, 1.0).expect("unit normal");
    let sigma = det.jitter_sigma();
    let parallel = hom.polarization == HomPolarization::Parallel;
    let r = hom.bs_reflectivity;
    let t_coef = 1.0 - r;
    let a = 2.0 * r * t_coef / (t_coef * t_coef + r * r);
    let dp = hom.pulse_pair_delay;
    let period = source.excitation.rep_period_ps();
    let trial_period = if period > 2.0 * dp + 1.0 { period } else { 4.0 * dp };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * n_pulse_pairs as usize);
    for trial in 0..n_pulse_pairs {
        let base = trial as f64 * trial_period;
        let s1 = inherit.map_or(0.0, |e| e.sample(&mut rng));
        let e1 = s1 + decay.sample(&mut rng);
        let s2 = inherit.map_or(0.0, |e| e.sample(&mut rng));
        let e2 = s2 + decay.sample(&mut rng);
        let arm1_long = rng.random::<f64>() < 0.5;
        let arm2_long = rng.random::<f64>() < 0.5;
        let mut out1 = if rng.random::<f64>() < t_coef { 0u8 } else { 1 };
        let mut out2 = if rng.random::<f64>() < t_coef { 1u8 } else { 0 };
        let u_thin = rng.random::<f64>();
        let u_bunch = rng.random::<f64>();
        let g1 = jitter.sample(&mut rng) * sigma;
        let g2 = jitter.sample(&mut rng) * sigma;

        let t1 = base + e1 + if arm1_long { dp } else { 0.0 };
        let t2 = base + dp + e2 + if arm2_long { dp } else { 0.0 };
        let matched = arm1_long && !arm2_long;
        if matched && parallel && out1 != out2 {
            // On common support of the two wavepackets the interference
            // magnitude equals the direct term (equal decay rates), so the
            // coincidence survives with probability 1 - a·V_c·damp.
            let common = e1 >= s1.max(s2) && e2 >= s1.max(s2);
            if common {
                let damp = (-2.0 * hom.dephase_rate * (e2 - e1).abs()).exp();
                if u_thin < a * hom.classical_visibility * damp {
                    let port = (u_bunch < 0.5) as u8;
                    out1 = port;
                    out2 = port;
                }
            }
        }
        out.push(DetectionRecord {
            channel: out1,
            timestamp_ps: (t1 + g1).round().max(0.0) as u64,
        });
        out.push(DetectionRecord {
            channel: out2,
            timestamp_ps: (t2 + g2).round().max(0.0) as u64,
        });
    }
    out.sort_by_key(|r| (r.timestamp_ps, r.channel));
    Ok(out)
}

/// Counts cross-channel coincidences with |t1 - t2| ≤ window.
pub fn center_coincidences(records: &[DetectionRecord], window_ps: u64) -> u64 {
    let a = crate::correlation::channel_timestamps(records, 0);
    let b = crate::correlation::channel_timestamps(records, 1);
    let mut lo = 0usize;
    let mut n = 0u64;
    for &ta in &a {
        while lo < b.len() && b[lo] + window_ps < ta {
            lo += 1;
        }
        let mut j = lo;
        while j < b.len() && b[j] <= ta + window_ps {
            n += 1;
            j += 1;
        }
    }
    n
}

/// Raw interference visibility from the zero-delay coincidence areas of a
/// cross-polarized and a parallel-polarized run.
pub fn hom_visibility(center_cross: u64, center_parallel: u64) -> Result<Estimate> {
    if center_cross == 0 {
        return Err(Error::EstimatorInput(
            "cross-polarized center area is zero".into(),
        ));
    }
    let c = center_cross as f64;
    let p = center_parallel as f64;
    let value = (c - p) / c;
    let sigma = ((p.max(1.0) + p * p / c) / (c * c)).sqrt();
    Ok(Estimate { value, sigma })
}

/// Visibility corrected for residual double emission and calibrated
/// optical imperfections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectedVisibility {
    pub value: f64,
    /// True when the correction exceeded 1 and was clamped.
    pub clamped: bool,
}

/// Inverts the imperfection model v_raw = a·V_classical²·M - g2: the
/// residual double-photon probability adds coincidences to the parallel
/// run, and the splitter imbalance a = 2RT/(R²+T²) together with the
/// squared classical interferometer visibility scales the interference
/// dip. classical_visibility here is the fringe visibility itself.
pub fn correct_visibility(
    v_raw: f64,
    g2_zero: f64,
    bs_reflectivity: f64,
    classical_visibility: f64,
) -> Result<CorrectedVisibility> {
    if !(-1.0..=1.0).contains(&v_raw) {
        return Err(Error::invalid("v_raw", "must be in [-1, 1]"));
    }
    if !(0.0..1.0).contains(&g2_zero) {
        return Err(Error::invalid("g2_zero", "must be in [0, 1)"));
    }
    if !(bs_reflectivity > 0.0 && bs_reflectivity < 1.0) {
        return Err(Error::invalid("bs_reflectivity", "must be in (0, 1)"));
    }
    if !(classical_visibility > 0.0 && classical_visibility <= 1.0) {
        return Err(Error::invalid("classical_visibility", "must be in (0, 1]"));
    }
    let r = bs_reflectivity;
    let t = 1.0 - r;
    let a = 2.0 * r * t / (r * r + t * t);
    let v = (v_raw + g2_zero) / (a * classical_visibility * classical_visibility);
    Ok(CorrectedVisibility {
        value: v.min(1.0),
        clamped: v > 1.0,
    })
}

/// Raw visibility recomputed from coincidences with |t1 - t2| ≤ window in
/// both runs.
pub fn temporal_filter_visibility(
    parallel: &[DetectionRecord],
    cross: &[DetectionRecord],
    window_ps: u64,
) -> Result<Estimate> {
    if window_ps == 0 {
        return Err(Error::invalid("window_ps", "must be > 0"));
    }
    let c = center_coincidences(cross, window_ps);
    if c == 0 {
        return Err(Error::EstimatorInput(
            "no coincidences survive the temporal filter".into(),
        ));
    }
    hom_visibility(c, center_coincidences(parallel, window_ps))
}
