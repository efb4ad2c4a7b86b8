//! Shared helpers for the integration suites: independent numerical
//! oracles (Simpson quadrature of the closed-form densities) and compact
//! Monte-Carlo pipelines built from the public API.

#![allow(dead_code)]

use qtt_core::cascade::{block_rng, simulate_emissions, SimConfig, SourceParams};
use qtt_core::correlation::{
    build_histogram, channel_timestamps, fidelity_from_visibilities, integrate_peaks,
    tomography_settings, visibilities_from_records, Estimate, PeakAreas, TomographyRecord,
};
use qtt_core::detection::{
    apply_chain, apply_hbt_chain, DetectorParams, SetupEfficiencies, Species, CHANNEL_X,
    CHANNEL_XX,
};
use qtt_core::hom::{coincidence_density, Wavepacket};
use qtt_core::runner::derive_seed;
use qtt_core::source::{rho_at_delay, QDotParams};
use qtt_core::state::{C64, TwoPhotonState};

/// Composite Simpson rule; `n` is rounded up to an even panel count.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn rho_entries(rho: &TwoPhotonState) -> [[C64; 4]; 4] {
    let m = rho.matrix();
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, e) in row.iter_mut().enumerate() {
            *e = m[(r, c)];
        }
    }
    out
}

/// Entrywise Simpson quadrature of the exponential-weighted delay average
/// of the pair state: an oracle independent of the closed-form average.
pub fn quadrature_time_integrated(qd: &QDotParams, gamma_x: f64, n: usize) -> [[C64; 4]; 4] {
    let span = 60.0 / gamma_x;
    let n = n + n % 2;
    let h = span / n as f64;
    let mut acc = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..=n {
        let tau = i as f64 * h;
        let panel = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let weight = panel * gamma_x * (-gamma_x * tau).exp();
        let rho = rho_at_delay(qd, tau).unwrap();
        let m = rho.matrix();
        for (r, row) in acc.iter_mut().enumerate() {
            for (c, e) in row.iter_mut().enumerate() {
                *e += m[(r, c)] * C64::new(weight, 0.0);
            }
        }
    }
    for row in &mut acc {
        for e in row.iter_mut() {
            *e *= C64::new(h / 3.0, 0.0);
        }
    }
    acc
}

pub fn max_entry_distance(a: &[[C64; 4]; 4], rho: &TwoPhotonState) -> f64 {
    let b = rho_entries(rho);
    let mut worst: f64 = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            worst = worst.max((a[r][c] - b[r][c]).norm());
        }
    }
    worst
}

/// Two-dimensional quadrature of the interference coincidence density for
/// two identical wavepackets, optionally restricted to |t1 - t2| <= window.
/// The inner integral is split at t2 = t1 where the density has a kink.
pub fn hom_quadrature_counts(
    gamma: f64,
    dephase: f64,
    classical_visibility: f64,
    bs_reflectivity: f64,
    window: Option<f64>,
) -> (f64, f64) {
    let p = Wavepacket {
        t0: 0.0,
        gamma,
        dephase_rate: dephase,
    };
    let l = 25.0 / gamma;
    let n_outer = 1200;
    let n_inner = 500;
    let count = |parallel: bool| -> f64 {
        simpson(
            |t1| {
                let f = |t2: f64| {
                    coincidence_density(
                        &p,
                        &p,
                        t1,
                        t2,
                        parallel,
                        bs_reflectivity,
                        classical_visibility,
                    )
                };
                let (lo, hi) = match window {
                    None => (0.0, l),
                    Some(w) => ((t1 - w).max(0.0), (t1 + w).min(l)),
                };
                simpson(f, lo, t1.clamp(lo, hi), n_inner)
                    + simpson(f, t1.clamp(lo, hi), hi, n_inner)
            },
            0.0,
            l,
            n_outer,
        )
    };
    (count(true), count(false))
}

pub fn hom_quadrature_visibility(
    gamma: f64,
    dephase: f64,
    classical_visibility: f64,
    bs_reflectivity: f64,
    window: Option<f64>,
) -> f64 {
    let (c_par, c_cross) =
        hom_quadrature_counts(gamma, dephase, classical_visibility, bs_reflectivity, window);
    1.0 - c_par / c_cross
}

/// Excitation period rounded to the 2 ps analysis bin grid.
pub fn period_ps(source: &SourceParams) -> u64 {
    let p = source.excitation.rep_period_ps();
    2 * (p / 2.0).round() as u64
}

pub struct TomoOutcome {
    pub vis: [Estimate; 3],
    pub fidelity: f64,
    pub fidelity_sigma: f64,
}

/// Complete twelve-setting polarization measurement over fresh Monte-Carlo
/// runs, one independent acquisition per analyzer setting.
pub fn run_tomography_mc(
    source: &SourceParams,
    eff: &SetupEfficiencies,
    det: &DetectorParams,
    n_pulses: u64,
    seed: u64,
) -> TomoOutcome {
    let mut recs = Vec::with_capacity(12);
    for (i, setting) in tomography_settings().iter().enumerate() {
        let sim = SimConfig {
            source: *source,
            n_pulses,
            seed: derive_seed(seed, 0x70 + i as u64),
            block_size: 65_536,
        };
        let events = simulate_emissions(&sim).unwrap();
        let duration = n_pulses as f64 * source.excitation.rep_period_ps();
        let mut rng = block_rng(derive_seed(sim.seed, 0xD7), 0);
        let records = apply_chain(
            &events,
            &source.qdot,
            eff,
            det,
            Some(setting),
            duration,
            &mut rng,
        );
        let a = channel_timestamps(&records, CHANNEL_XX);
        let b = channel_timestamps(&records, CHANNEL_X);
        let h = build_histogram(&a, &b, 2, 40_000, period_ps(source)).unwrap();
        let peaks = integrate_peaks(&h, 2_000).unwrap();
        let normalization = if peaks.sides.is_empty() {
            0.0
        } else {
            peaks.sides.iter().map(|&(_, c)| c).sum::<u64>() as f64 / peaks.sides.len() as f64
        };
        recs.push(TomographyRecord {
            setting: *setting,
            zero_peak_counts: peaks.center,
            normalization,
        });
    }
    let vis = visibilities_from_records(&recs).unwrap();
    let fidelity = fidelity_from_visibilities(vis[0].value, vis[1].value, vis[2].value).unwrap();
    let fidelity_sigma = vis.iter().map(|e| e.sigma * e.sigma).sum::<f64>().sqrt() / 4.0;
    TomoOutcome {
        vis,
        fidelity,
        fidelity_sigma,
    }
}

pub struct CrossRun {
    pub peaks: PeakAreas,
    pub singles_xx: u64,
    pub singles_x: u64,
}

/// Analyzer-free pair pipeline: emission, detection chain, XX-X histogram
/// and peak integration.
pub fn run_cross_mc(
    source: &SourceParams,
    eff: &SetupEfficiencies,
    det: &DetectorParams,
    n_pulses: u64,
    seed: u64,
    max_delay: u64,
) -> CrossRun {
    let sim = SimConfig {
        source: *source,
        n_pulses,
        seed,
        block_size: 65_536,
    };
    let events = simulate_emissions(&sim).unwrap();
    let duration = n_pulses as f64 * source.excitation.rep_period_ps();
    let mut rng = block_rng(derive_seed(seed, 0xD7), 0);
    let records = apply_chain(&events, &source.qdot, eff, det, None, duration, &mut rng);
    let a = channel_timestamps(&records, CHANNEL_XX);
    let b = channel_timestamps(&records, CHANNEL_X);
    let h = build_histogram(&a, &b, 2, max_delay, period_ps(source)).unwrap();
    let peaks = integrate_peaks(&h, 2_000).unwrap();
    CrossRun {
        singles_xx: a.len() as u64,
        singles_x: b.len() as u64,
        peaks,
    }
}

/// Single-arm autocorrelation pipeline through a balanced splitter.
pub fn run_hbt_mc(
    source: &SourceParams,
    eff: &SetupEfficiencies,
    det: &DetectorParams,
    species: Species,
    n_pulses: u64,
    seed: u64,
    max_delay: u64,
) -> PeakAreas {
    let sim = SimConfig {
        source: *source,
        n_pulses,
        seed,
        block_size: 65_536,
    };
    let events = simulate_emissions(&sim).unwrap();
    let duration = n_pulses as f64 * source.excitation.rep_period_ps();
    let mut rng = block_rng(derive_seed(seed, 0xD7), 0);
    let records = apply_hbt_chain(&events, species, eff, det, duration, &mut rng);
    let a = channel_timestamps(&records, 0);
    let b = channel_timestamps(&records, 1);
    let h = build_histogram(&a, &b, 2, max_delay, period_ps(source)).unwrap();
    integrate_peaks(&h, 2_000).unwrap()
}

/// Maximum-likelihood exponential lifetime: the sample mean.
pub fn fit_exponential_lifetime(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}
