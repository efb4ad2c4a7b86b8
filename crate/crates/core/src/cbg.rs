//! Circular-Bragg-grating design rules: linear mode-placement model from
//! the characterization sweep, its inversion, and the fabrication-spread
//! detuning budget against the cavity linewidth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::source::{purcell_factor, CavityParams};

/// Bullseye cavity geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CbgGeometry {
    pub disk_radius: f64,
    pub grating_period: f64,
    #[serde(default = "default_trench_width")]
    pub trench_width: f64,
    #[serde(default = "default_n_rings")]
    pub n_rings: u32,
}

pub fn default_trench_width() -> f64 {
    100.0
}

pub fn default_n_rings() -> u32 {
    4
}

/// Characterized geometry window of the linear model (nm).
pub const CHARACTERIZED_RADIUS_NM: (f64, f64) = (360.0, 395.0);
pub const CHARACTERIZED_PERIOD_NM: (f64, f64) = (360.0, 395.0);

impl CbgGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("disk_radius", self.disk_radius),
            ("grating_period", self.grating_period),
            ("trench_width", self.trench_width),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(name, "must be > 0 nm"));
            }
        }
        if self.n_rings == 0 {
            return Err(Error::invalid("n_rings", "must be >= 1"));
        }
        Ok(())
    }

    /// Whether the linear design rules are interpolating here; outside the
    /// sweep window the prediction is an extrapolation and is flagged (but
    /// not refused) by the report.
    pub fn in_characterized_range(&self) -> bool {
        let (r_lo, r_hi) = CHARACTERIZED_RADIUS_NM;
        let (p_lo, p_hi) = CHARACTERIZED_PERIOD_NM;
        (r_lo..=r_hi).contains(&self.disk_radius)
            && (p_lo..=p_hi).contains(&self.grating_period)
    }
}

/// Linear mode-placement rules around a reference geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignRules {
    /// Mode shift per nm of disk radius (nm/nm).
    pub slope_radius: f64,
    /// Mode shift per nm of grating period (nm/nm).
    pub slope_period: f64,
    pub reference: CbgGeometry,
    /// Mode wavelength at the reference geometry (nm).
    pub reference_lambda: f64,
    /// Fabrication spread of the mode wavelength across nominally
    /// identical cavities (nm, 1 sigma).
    pub fab_sigma: f64,
}

impl DesignRules {
    pub fn calibrated() -> Self {
        DesignRules {
            slope_radius: 1.14,
            slope_period: 0.25,
            reference: CbgGeometry {
                disk_radius: 375.0,
                grating_period: 365.0,
                trench_width: default_trench_width(),
                n_rings: default_n_rings(),
            },
            reference_lambda: 890.0,
            fab_sigma: 0.87,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.reference.validate()?;
        if !(self.slope_radius > 0.0) {
            return Err(Error::invalid("slope_radius", "must be > 0"));
        }
        if !(self.slope_period > 0.0) {
            return Err(Error::invalid("slope_period", "must be > 0"));
        }
        if !(self.reference_lambda > 0.0) {
            return Err(Error::invalid("reference_lambda", "must be > 0 nm"));
        }
        if !(self.fab_sigma >= 0.0) {
            return Err(Error::invalid("fab_sigma", "must be >= 0 nm"));
        }
        Ok(())
    }
}

/// Predicted cavity mode wavelength (nm): affine in radius and period.
pub fn mode_wavelength(geom: &CbgGeometry, rules: &DesignRules) -> f64 {
    rules.reference_lambda
        + rules.slope_radius * (geom.disk_radius - rules.reference.disk_radius)
        + rules.slope_period * (geom.grating_period - rules.reference.grating_period)
}

/// Disk radius placing the mode at target_lambda for a fixed period:
/// algebraic inversion of mode_wavelength.
pub fn solve_radius(target_lambda: f64, period: f64, rules: &DesignRules) -> f64 {
    rules.reference.disk_radius
        + (target_lambda
            - rules.reference_lambda
            - rules.slope_period * (period - rules.reference.grating_period))
            / rules.slope_radius
}

/// Fabrication-tolerance budget of the mode placement against the cavity
/// linewidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetuningBudget {
    /// Mode-wavelength placement spread (nm, 1 sigma).
    pub sigma_lambda: f64,
    /// Radius spread producing the same mode spread (nm).
    pub sigma_radius_equivalent: f64,
    /// Cavity linewidth (nm).
    pub fwhm: f64,
    /// sigma_lambda / fwhm.
    pub ratio: f64,
    /// On-resonance Purcell factor over the Purcell factor at a
    /// sigma_lambda detuning: 1 + (2·Q·sigma/lambda_c)², i.e. 1 when the
    /// spread is zero and 2 when it reaches half the linewidth.
    pub purcell_penalty: f64,
}

/// How much of the cavity linewidth the fabrication spread consumes, and
/// the worst-case Purcell cost of a 1-sigma placement error.
pub fn detuning_budget(rules: &DesignRules, cav: &CavityParams) -> Result<DetuningBudget> {
    rules.validate()?;
    cav.validate()?;
    let sigma = rules.fab_sigma;
    let fwhm = cav.fwhm();
    let on_resonance = purcell_factor(cav.lambda_c, cav);
    let detuned = purcell_factor(cav.lambda_c + sigma, cav);
    Ok(DetuningBudget {
        sigma_lambda: sigma,
        sigma_radius_equivalent: sigma / rules.slope_radius,
        fwhm,
        ratio: sigma / fwhm,
        purcell_penalty: on_resonance / detuned,
    })
}
