//! Cross-correlation histograms and the estimators built on them: pulsed
//! g²(0), basis visibilities and entanglement fidelity, side-to-center
//! absolute calibration, blinking envelope.

use serde::{Deserialize, Serialize};

use crate::detection::{AnalyzerSetting, DetectionRecord};
use crate::error::{Error, Result};

/// Default peak integration window (full width), 2 ns.
pub const DEFAULT_PEAK_WINDOW_PS: u64 = 2_000;

/// Default minimum side-peak delay used to normalize g²(0): far enough from
/// zero delay that blinking bunching has decayed (5 correlation times at
/// the 100 ns reference blinking).
pub const DEFAULT_G2_MIN_SIDE_DELAY_PS: u64 = 500_000;

/// A value with a 1-sigma statistical uncertainty from Poisson counting,
/// propagated to first order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

/// Histogram of pairwise delays t_b - t_a, with bins centered on integer
/// multiples of the bin width so that mirror symmetry is bin-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHistogram {
    bin_width: u64,
    /// Delay at the center of counts[0] (ps).
    origin: i64,
    rep_period: u64,
    counts: Vec<u64>,
}

impl CorrelationHistogram {
    /// Empty histogram covering bins whose centers lie in [-max_delay,
    /// +max_delay]. The excitation period must be a positive multiple of
    /// the bin width so that side peaks fall exactly on bin centers.
    pub fn new(bin_width: u64, max_delay: u64, rep_period: u64) -> Result<Self> {
        if bin_width == 0 {
            return Err(Error::invalid("bin_width", "must be > 0 ps"));
        }
        if rep_period == 0 || rep_period % bin_width != 0 {
            return Err(Error::invalid(
                "rep_period",
                "must be a positive multiple of bin_width",
            ));
        }
        let n_half = (max_delay / bin_width) as usize;
        Ok(CorrelationHistogram {
            bin_width,
            origin: -(n_half as i64) * bin_width as i64,
            rep_period,
            counts: vec![0; 2 * n_half + 1],
        })
    }

    pub fn bin_width(&self) -> u64 {
        self.bin_width
    }

    pub fn rep_period(&self) -> u64 {
        self.rep_period
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Delay at the center of bin `i` (ps).
    pub fn delay_of(&self, i: usize) -> i64 {
        self.origin + i as i64 * self.bin_width as i64
    }

    fn n_half(&self) -> i64 {
        (self.counts.len() / 2) as i64
    }

    /// Signed bin index of a delay, rounding half away from zero so that
    /// negated delays land in the mirrored bin exactly.
    fn bin_index(&self, delay: i64) -> i64 {
        let w = self.bin_width as i64;
        let k = (2 * delay.abs() + w) / (2 * w);
        if delay < 0 {
            -k
        } else {
            k
        }
    }

    /// Adds every pairwise delay t_b - t_a within range. Inputs are sorted
    /// timestamp lists (ps).
    pub fn accumulate(&mut self, a: &[u64], b: &[u64]) {
        let n_half = self.n_half();
        // Largest delay that can still round into the outermost bin.
        let reach = n_half * self.bin_width as i64 + self.bin_width as i64 / 2;
        let mut lo = 0usize;
        for &ta in a {
            let ta = ta as i64;
            while lo < b.len() && (b[lo] as i64) < ta - reach {
                lo += 1;
            }
            let mut j = lo;
            while j < b.len() && (b[j] as i64) <= ta + reach {
                let k = self.bin_index(b[j] as i64 - ta);
                if k.abs() <= n_half {
                    self.counts[(k + n_half) as usize] += 1;
                }
                j += 1;
            }
        }
    }

    /// Elementwise addition of a histogram with identical shape.
    pub fn merge(&mut self, other: &CorrelationHistogram) -> Result<()> {
        if self.bin_width != other.bin_width
            || self.origin != other.origin
            || self.rep_period != other.rep_period
            || self.counts.len() != other.counts.len()
        {
            return Err(Error::invalid("histogram", "shape mismatch in merge"));
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        Ok(())
    }

    /// (delay_ps, counts) rows.
    pub fn rows(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (self.delay_of(i), c))
    }
}

/// Timestamps of one channel, in ascending order.
pub fn channel_timestamps(records: &[DetectionRecord], channel: u8) -> Vec<u64> {
    let mut ts: Vec<u64> = records
        .iter()
        .filter(|r| r.channel == channel)
        .map(|r| r.timestamp_ps)
        .collect();
    ts.sort_unstable();
    ts
}

/// Histogram of all pairwise delays t_b - t_a within ±max_delay.
pub fn build_histogram(
    a: &[u64],
    b: &[u64],
    bin_width: u64,
    max_delay: u64,
    rep_period: u64,
) -> Result<CorrelationHistogram> {
    let mut h = CorrelationHistogram::new(bin_width, max_delay, rep_period)?;
    h.accumulate(a, b);
    Ok(h)
}

/// Integrated counts of the zero-delay peak and of each side peak at a
/// nonzero multiple of the excitation period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakAreas {
    pub center: u64,
    /// (signed peak delay in ps, integrated counts), ascending in delay.
    pub sides: Vec<(i64, u64)>,
}

/// Sums counts within ±window/2 of zero delay and of every multiple of the
/// excitation period whose full window fits in the histogram.
pub fn integrate_peaks(h: &CorrelationHistogram, window: u64) -> Result<PeakAreas> {
    if window == 0 {
        return Err(Error::invalid("window", "must be > 0 ps"));
    }
    if window > h.rep_period / 2 {
        return Err(Error::invalid(
            "window",
            "peak window must not exceed half the excitation period",
        ));
    }
    let half = (window / 2) as i64;
    let lo_edge = h.delay_of(0);
    let hi_edge = h.delay_of(h.counts.len() - 1);
    let area_at = |peak: i64| -> Option<u64> {
        if peak - half < lo_edge || peak + half > hi_edge {
            return None;
        }
        let mut sum = 0;
        for (i, &c) in h.counts.iter().enumerate() {
            let d = h.delay_of(i);
            if (d - peak).abs() <= half {
                sum += c;
            }
        }
        Some(sum)
    };
    let center = area_at(0).ok_or_else(|| {
        Error::invalid("window", "histogram narrower than the center window")
    })?;
    let period = h.rep_period as i64;
    let mut sides = Vec::new();
    let max_m = (hi_edge / period) + 1;
    for m in -max_m..=max_m {
        if m == 0 {
            continue;
        }
        if let Some(area) = area_at(m * period) {
            sides.push((m * period, area));
        }
    }
    sides.sort_by_key(|&(d, _)| d);
    Ok(PeakAreas { center, sides })
}

/// Pulsed g²(0): center area over the mean side-peak area, using only side
/// peaks at |delay| ≥ min_side_delay so that blinking bunching near zero
/// delay does not bias the normalization.
pub fn g2_zero(p: &PeakAreas, min_side_delay: u64) -> Result<Estimate> {
    let far: Vec<f64> = p
        .sides
        .iter()
        .filter(|&&(d, _)| d.unsigned_abs() >= min_side_delay)
        .map(|&(_, c)| c as f64)
        .collect();
    if far.is_empty() {
        return Err(Error::EstimatorInput(
            "no side peaks beyond the normalization delay".into(),
        ));
    }
    let total: f64 = far.iter().sum();
    if total <= 0.0 {
        return Err(Error::EstimatorInput("side-peak area is zero".into()));
    }
    let k = far.len() as f64;
    let mean = total / k;
    let c = p.center as f64;
    let g = c / mean;
    let sigma = (c.max(1.0) / mean.powi(2) + g * g / total).sqrt();
    Ok(Estimate { value: g, sigma })
}

/// Correlation visibility of one basis from its four analyzer settings:
/// two co-polarized counts and two cross-polarized counts.
pub fn basis_visibility(co1: u64, cross1: u64, cross2: u64, co2: u64) -> Result<Estimate> {
    let co = (co1 + co2) as f64;
    let cross = (cross1 + cross2) as f64;
    let total = co + cross;
    if total <= 0.0 {
        return Err(Error::EstimatorInput("all four settings have zero counts".into()));
    }
    let v = (co - cross) / total;
    let sigma = 2.0 * (co * cross / total.powi(3)).sqrt();
    Ok(Estimate { value: v, sigma })
}

/// Fidelity to the maximally entangled target state from the three basis
/// visibilities.
pub fn fidelity_from_visibilities(v_lin: f64, v_diag: f64, v_circ: f64) -> Result<f64> {
    for (name, v) in [("v_lin", v_lin), ("v_diag", v_diag), ("v_circ", v_circ)] {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::invalid(name, "visibility must be in [-1, 1]"));
        }
    }
    Ok((1.0 + v_lin + v_diag - v_circ) / 4.0)
}

/// The twelve analyzer settings of a complete visibility measurement:
/// four per basis (co1, cross1, cross2, co2), linear then diagonal then
/// circular.
pub fn tomography_settings() -> [AnalyzerSetting; 12] {
    use crate::state::Polarization::{A, D, H, L, R, V};
    let s = |basis_xx, basis_x| AnalyzerSetting { basis_xx, basis_x };
    [
        s(H, H),
        s(H, V),
        s(V, H),
        s(V, V),
        s(D, D),
        s(D, A),
        s(A, D),
        s(A, A),
        s(R, R),
        s(R, L),
        s(L, R),
        s(L, L),
    ]
}

/// Zero-delay coincidence counts of one analyzer setting, with the mean
/// side-peak area retained for normalization checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographyRecord {
    pub setting: AnalyzerSetting,
    pub zero_peak_counts: u64,
    pub normalization: f64,
}

/// Basis visibilities from a complete 12-setting run, in the order given
/// by `tomography_settings`.
pub fn visibilities_from_records(records: &[TomographyRecord]) -> Result<[Estimate; 3]> {
    if records.len() != 12 {
        return Err(Error::EstimatorInput(format!(
            "a complete set has 12 records, got {}",
            records.len()
        )));
    }
    let mut out = [Estimate { value: 0.0, sigma: 0.0 }; 3];
    for basis in 0..3 {
        let c = |i: usize| records[4 * basis + i].zero_peak_counts;
        out[basis] = basis_visibility(c(0), c(1), c(2), c(3))?;
    }
    Ok(out)
}

/// Side-to-center ratio p = A_S/A_C from the nearest side-peak pair and
/// the zero-delay peak counted in both time orderings: the absolute
/// preparation-and-emission calibration of the source.
pub fn side_to_center_calibration(p: &PeakAreas) -> Result<Estimate> {
    if p.center == 0 {
        return Err(Error::EstimatorInput("zero-delay peak is empty".into()));
    }
    let nearest: Vec<u64> = {
        let min_abs = p
            .sides
            .iter()
            .map(|&(d, _)| d.unsigned_abs())
            .min()
            .ok_or_else(|| Error::EstimatorInput("no side peaks".into()))?;
        p.sides
            .iter()
            .filter(|&&(d, _)| d.unsigned_abs() == min_abs)
            .map(|&(_, c)| c)
            .collect()
    };
    let a_s: f64 = nearest.iter().sum::<u64>() as f64;
    let a_c = 2.0 * p.center as f64;
    let value = a_s / a_c;
    let sigma = value * (1.0 / a_s.max(1.0) + 1.0 / p.center as f64).sqrt();
    Ok(Estimate { value, sigma })
}

/// Blinking envelope fit of side-peak areas vs |delay|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlinkingFit {
    /// Asymptote over near-peak amplitude: the emissive-state fraction.
    pub on_fraction: f64,
    /// Fitted envelope decay time (ps).
    pub t_corr_ps: f64,
}

/// Fits side-peak areas to c·(β + (1-β)·exp(-|delay|/t_corr)) and returns
/// the on-fraction β and the envelope time. Needs at least 4 distinct
/// absolute delays to constrain the three parameters.
pub fn blinking_envelope(p: &PeakAreas) -> Result<BlinkingFit> {
    let mut pts: Vec<(f64, f64)> = p
        .sides
        .iter()
        .map(|&(d, c)| (d.abs() as f64, c as f64))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut distinct = 0;
    let mut last = f64::NAN;
    for &(d, _) in &pts {
        if d != last {
            distinct += 1;
            last = d;
        }
    }
    if distinct < 4 {
        return Err(Error::EstimatorInput(format!(
            "need side peaks at >= 4 distinct delays, got {distinct}"
        )));
    }
    // Linear least squares for (A, B) in A + B·exp(-d/tc) at fixed tc.
    let sse_at = |tc: f64| -> (f64, f64, f64) {
        let (mut s1, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(d, y) in &pts {
            let x = (-d / tc).exp();
            s1 += 1.0;
            sx += x;
            sxx += x * x;
            sy += y;
            sxy += x * y;
        }
        let det = s1 * sxx - sx * sx;
        if det.abs() < 1e-12 {
            return (f64::INFINITY, 0.0, 0.0);
        }
        let a = (sy * sxx - sx * sxy) / det;
        let b = (s1 * sxy - sx * sy) / det;
        let sse: f64 = pts
            .iter()
            .map(|&(d, y)| (y - a - b * (-d / tc).exp()).powi(2))
            .sum();
        (sse, a, b)
    };
    // Golden-section search over ln(tc).
    let mut lo = 1e3f64.ln();
    let mut hi = 1e9f64.ln();
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = sse_at(x1.exp()).0;
    let mut f2 = sse_at(x2.exp()).0;
    for _ in 0..200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = sse_at(x1.exp()).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = sse_at(x2.exp()).0;
        }
    }
    let tc = ((lo + hi) / 2.0).exp();
    let (_, a, b) = sse_at(tc);
    let denom = a + b;
    if !(denom > 0.0) {
        return Err(Error::EstimatorInput(
            "degenerate envelope fit: non-positive near-peak amplitude".into(),
        ));
    }
    Ok(BlinkingFit {
        on_fraction: (a / denom).clamp(0.0, 1.0),
        t_corr_ps: tc,
    })
}
