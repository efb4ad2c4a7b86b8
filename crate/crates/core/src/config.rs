//! Experiment configuration: one JSON document drives a full run.
//!
//! Parsing is strict (unknown fields are rejected) and the canonical
//! serialization is stable, so a config can be hashed for provenance and
//! round-trips losslessly.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cascade::{default_block_size, SimConfig, SourceParams};
use crate::cbg::{CbgGeometry, DesignRules};
use crate::correlation::{DEFAULT_G2_MIN_SIDE_DELAY_PS, DEFAULT_PEAK_WINDOW_PS};
use crate::detection::{DetectorParams, SetupEfficiencies, Species};
use crate::error::{Error, Result};
use crate::hom::{HomConfig, DEFAULT_FILTER_WINDOW_PS, MZI_CLASSICAL_VISIBILITY};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Detected counts vs excitation pulse area.
    RabiSweep,
    /// Single-arm autocorrelation through a 50/50 splitter.
    Hbt,
    /// Twelve-setting polarization visibility measurement.
    Tomography12,
    /// Two-photon interference of consecutive emissions.
    Hom,
    /// Side-to-center pair calibration with a pulse-area linearity sweep.
    Calibrate,
    /// Cavity mode placement and tolerance report; no Monte Carlo.
    Design,
}

/// Monte-Carlo run length and seeding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub n_pulses: u64,
    pub seed: u64,
    #[serde(default = "default_block_size")]
    pub block_size: u64,
}

impl Default for RunBlock {
    fn default() -> Self {
        RunBlock {
            n_pulses: 1_000_000,
            seed: 1,
            block_size: default_block_size(),
        }
    }
}

impl RunBlock {
    pub fn validate(&self) -> Result<()> {
        if self.n_pulses == 0 {
            return Err(Error::invalid("n_pulses", "must be > 0"));
        }
        if self.block_size == 0 {
            return Err(Error::invalid("block_size", "must be > 0"));
        }
        Ok(())
    }
}

/// Histogramming and estimator windows. All values in ps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    pub bin_width_ps: u64,
    pub max_delay_ps: u64,
    /// Full width of the window integrating each correlation peak.
    pub peak_window_ps: u64,
    /// Side peaks closer than this to zero delay are excluded from the
    /// g2 normalization (blinking bunches nearby peaks).
    pub g2_min_side_delay_ps: u64,
    /// Half-width of the temporal post-selection filter on interference
    /// coincidences.
    pub filter_window_ps: u64,
    /// Which photon the autocorrelation run collects.
    pub hbt_species: Species,
    /// Residual double-emission probability subtracted by the visibility
    /// correction.
    pub correction_g2: f64,
    /// Classical interferometer fringe visibility used by the correction.
    pub correction_classical_visibility: f64,
    /// Grid points of the pulse-area sweep.
    pub rabi_points: u32,
    /// Sweep end in units of the pi-pulse power.
    pub rabi_max_power_ratio: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            bin_width_ps: 2,
            max_delay_ps: 1_000_000,
            peak_window_ps: DEFAULT_PEAK_WINDOW_PS,
            g2_min_side_delay_ps: DEFAULT_G2_MIN_SIDE_DELAY_PS,
            filter_window_ps: DEFAULT_FILTER_WINDOW_PS,
            hbt_species: Species::Xx,
            correction_g2: 0.014,
            correction_classical_visibility: MZI_CLASSICAL_VISIBILITY,
            rabi_points: 41,
            rabi_max_power_ratio: 4.0,
        }
    }
}

impl AnalysisOptions {
    pub fn validate(&self) -> Result<()> {
        if self.bin_width_ps == 0 {
            return Err(Error::invalid("bin_width_ps", "must be > 0"));
        }
        if self.max_delay_ps < self.bin_width_ps {
            return Err(Error::invalid(
                "max_delay_ps",
                "must cover at least one bin",
            ));
        }
        if self.peak_window_ps == 0 {
            return Err(Error::invalid("peak_window_ps", "must be > 0"));
        }
        if self.filter_window_ps == 0 {
            return Err(Error::invalid("filter_window_ps", "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.correction_g2) {
            return Err(Error::invalid("correction_g2", "must be in [0, 1)"));
        }
        if !(self.correction_classical_visibility > 0.0
            && self.correction_classical_visibility <= 1.0)
        {
            return Err(Error::invalid(
                "correction_classical_visibility",
                "must be in (0, 1]",
            ));
        }
        if self.rabi_points < 2 {
            return Err(Error::invalid("rabi_points", "need at least 2 points"));
        }
        if !(self.rabi_max_power_ratio > 0.0) {
            return Err(Error::invalid("rabi_max_power_ratio", "must be > 0"));
        }
        Ok(())
    }
}

/// Cavity design task: report the mode placement of a geometry and/or
/// solve for the radius hitting a target wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignBlock {
    #[serde(default = "DesignRules::calibrated")]
    pub rules: DesignRules,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<CbgGeometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_lambda: Option<f64>,
}

impl DesignBlock {
    pub fn validate(&self) -> Result<()> {
        self.rules.validate()?;
        if let Some(g) = &self.geometry {
            g.validate()?;
        }
        if let Some(t) = self.target_lambda {
            if !(t > 0.0) {
                return Err(Error::invalid("target_lambda", "must be > 0 nm"));
            }
        }
        Ok(())
    }
}

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub source: SourceParams,
    #[serde(default = "SetupEfficiencies::calibrated")]
    pub efficiencies: SetupEfficiencies,
    #[serde(default = "DetectorParams::calibrated")]
    pub detector: DetectorParams,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hom: Option<HomConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignBlock>,
    #[serde(default)]
    pub analysis: AnalysisOptions,
}

impl ExperimentConfig {
    /// Calibrated reference configuration for a given task.
    pub fn calibrated(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            source: SourceParams::calibrated(),
            efficiencies: SetupEfficiencies::calibrated(),
            detector: DetectorParams::calibrated(),
            run: RunBlock::default(),
            hom: match kind {
                ExperimentKind::Hom => Some(HomConfig::calibrated(Species::Xx)),
                _ => None,
            },
            design: match kind {
                ExperimentKind::Design => Some(DesignBlock {
                    rules: DesignRules::calibrated(),
                    geometry: Some(DesignRules::calibrated().reference),
                    target_lambda: None,
                }),
                _ => None,
            },
            analysis: AnalysisOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.efficiencies.validate()?;
        self.detector.validate()?;
        self.run.validate()?;
        self.analysis.validate()?;
        if let Some(h) = &self.hom {
            h.validate()?;
        }
        if let Some(d) = &self.design {
            d.validate()?;
        }
        match self.kind {
            ExperimentKind::Hom if self.hom.is_none() => Err(Error::Config(
                "kind \"hom\" requires a \"hom\" block".into(),
            )),
            ExperimentKind::Design if self.design.is_none() => Err(Error::Config(
                "kind \"design\" requires a \"design\" block".into(),
            )),
            _ => Ok(()),
        }
    }

    /// The Monte-Carlo slice of this configuration.
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            source: self.source,
            n_pulses: self.run.n_pulses,
            seed: self.run.seed,
            block_size: self.run.block_size,
        }
    }

    /// Parses and validates a config from JSON text.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Stable serialization: field order is fixed by the type definitions.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hash of the canonical serialization, identifying the effective
    /// configuration (after any command-line overrides).
    pub fn sha256_hex(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        let mut s = String::with_capacity(64);
        for b in digest {
            write!(s, "{b:02x}").expect("hex into string");
        }
        s
    }

    /// The provenance block embedded in every summary.
    pub fn provenance(&self) -> serde_json::Value {
        serde_json::json!({
            "config_sha256": self.sha256_hex(),
            "seed": self.run.seed,
            "version": VERSION,
        })
    }

    /// Excitation period rounded to the nearest multiple of the analysis
    /// bin width, as required by the correlation histogram.
    pub fn histogram_period_ps(&self) -> u64 {
        let w = self.analysis.bin_width_ps;
        let p = self.source.excitation.rep_period_ps();
        let k = (p / w as f64).round().max(1.0) as u64;
        k * w
    }
}
