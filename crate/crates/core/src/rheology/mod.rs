//! Hematocrit-dependent power-law blood rheology.
//!
//! The apparent viscosity of shear-thinning blood is modeled as
//!
//! ```text
//! mu(gamma) = m * gamma^(n - 1)
//! ```
//!
//! with consistency index `m` (Pa·s^n) and power-law index `n` (`n = 1` is
//! Newtonian, `n < 1` shear-thinning). Curves are fitted per hematocrit by
//! weighted least squares, intermediate hematocrits are obtained by
//! interpolating synthetic measurements between the two bracketing curves and
//! refitting, and a Newtonian viscosity preserving the mean shear stress over a
//! shear-rate interval can be derived from any curve.

mod catalog;
mod fit;
pub mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use catalog::{base_curves, default_shear_grid, CatalogRow, CFD_CURVES, IN_VIVO_CURVES, LITERATURE_NEWTONIAN};
pub use fit::{fit_power_law, spacing_weights, FitOptions};

/// Default lower bound on the shear rate used when evaluating the apparent
/// viscosity, in 1/s.
pub const DEFAULT_SHEAR_FLOOR: f64 = 0.1;

/// One viscometry measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViscositySample {
    /// 1/s
    pub shear_rate: f64,
    /// Pa·s
    pub viscosity: f64,
    /// percent
    pub hct: f64,
}

impl ViscositySample {
    pub fn new(shear_rate: f64, viscosity: f64, hct: f64) -> Self {
        Self {
            shear_rate,
            viscosity,
            hct,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shear_rate.is_finite() && self.shear_rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "shear rate must be positive, got {}",
                self.shear_rate
            )));
        }
        if !(self.viscosity.is_finite() && self.viscosity > 0.0) {
            return Err(Error::InvalidInput(format!(
                "viscosity must be positive, got {}",
                self.viscosity
            )));
        }
        if !(self.hct > 0.0 && self.hct < 100.0) {
            return Err(Error::InvalidInput(format!(
                "hematocrit must lie in (0, 100), got {}",
                self.hct
            )));
        }
        Ok(())
    }
}

/// Power-law rheology of one blood sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawParams {
    /// Consistency index, Pa·s^n.
    pub m: f64,
    /// Power-law index.
    pub n: f64,
    /// Hematocrit, percent.
    pub hct: f64,
    /// Coefficient of determination of the fit, linear viscosity space.
    pub fit_r2: f64,
    /// Root-mean-squared fit error, Pa·s.
    pub fit_rmse: f64,
}

impl PowerLawParams {
    /// Parameters that did not come out of a fit (exact curve).
    pub fn new(m: f64, n: f64, hct: f64) -> Self {
        Self {
            m,
            n,
            hct,
            fit_r2: 1.0,
            fit_rmse: 0.0,
        }
    }

    /// `m * gamma^(n-1)` without flooring; `shear_rate` must be positive.
    pub fn viscosity(&self, shear_rate: f64) -> f64 {
        self.m * shear_rate.powf(self.n - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::InvalidInput(format!(
                "consistency index must be positive, got {}",
                self.m
            )));
        }
        if !(self.n.is_finite() && self.n > 0.0) {
            return Err(Error::InvalidInput(format!(
                "power-law index must be positive, got {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Newtonian viscosity preserving the mean shear stress of a power-law curve
/// over `[gamma0, gamma1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonianFit {
    /// Pa·s
    pub mu: f64,
    pub hct: f64,
    pub gamma0: f64,
    pub gamma1: f64,
}

/// Apparent viscosity with the default shear-rate floor.
pub fn apparent_viscosity(pl: &PowerLawParams, shear_rate: f64) -> f64 {
    apparent_viscosity_floored(pl, shear_rate, DEFAULT_SHEAR_FLOOR)
}

/// `m * max(gamma, floor)^(n-1)`.
///
/// The floor keeps the viscosity finite at vanishing shear for `n < 1`.
pub fn apparent_viscosity_floored(pl: &PowerLawParams, shear_rate: f64, floor: f64) -> f64 {
    pl.m * shear_rate.max(floor).powf(pl.n - 1.0)
}

/// Mean of the power-law viscosity over `[gamma0, gamma1]`, in closed form:
/// `m (gamma1^n - gamma0^n) / (n (gamma1 - gamma0))`.
pub fn newtonian_equivalent(pl: &PowerLawParams, gamma0: f64, gamma1: f64) -> Result<NewtonianFit> {
    if !(gamma0.is_finite() && gamma1.is_finite() && gamma0 >= 0.0 && gamma1 > gamma0) {
        return Err(Error::InvalidRange { gamma0, gamma1 });
    }
    pl.validate()?;
    let mu = if pl.n == 1.0 {
        pl.m
    } else {
        let ratio = (gamma1.powf(pl.n) - gamma0.powf(pl.n)) / (pl.n * (gamma1 - gamma0));
        pl.m * ratio
    };
    Ok(NewtonianFit {
        mu,
        hct: pl.hct,
        gamma0,
        gamma1,
    })
}

fn validate_curves(curves: &[PowerLawParams]) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::InsufficientData("no base curves supplied".into()));
    }
    for c in curves {
        c.validate()?;
    }
    for pair in curves.windows(2) {
        if !(pair[1].hct > pair[0].hct) {
            return Err(Error::InvalidInput(format!(
                "base curves must be sorted by strictly increasing hematocrit ({} then {})",
                pair[0].hct, pair[1].hct
            )));
        }
    }
    Ok(())
}

/// Synthetic measurements at `target_hct`, linearly interpolated in
/// hematocrit between the two bracketing curves at each shear rate.
pub fn interpolate_hct(
    curves: &[PowerLawParams],
    target_hct: f64,
    shear_rates: &[f64],
) -> Result<Vec<ViscositySample>> {
    validate_curves(curves)?;
    let min = curves[0].hct;
    let max = curves[curves.len() - 1].hct;
    if !(target_hct >= min && target_hct <= max) {
        return Err(Error::Extrapolation {
            target: target_hct,
            min,
            max,
        });
    }
    if let Some(&bad) = shear_rates.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::InvalidInput(format!("shear rates must be positive, got {bad}")));
    }

    // Exact knot hits bypass the blend so the samples lie on the curve.
    let (lo, hi, t) = match curves.iter().position(|c| c.hct == target_hct) {
        Some(i) => (i, i, 0.0),
        None => {
            let hi = curves.iter().position(|c| c.hct > target_hct).unwrap();
            let lo = hi - 1;
            let t = (target_hct - curves[lo].hct) / (curves[hi].hct - curves[lo].hct);
            (lo, hi, t)
        }
    };

    Ok(shear_rates
        .iter()
        .map(|&g| {
            let mu = if lo == hi {
                curves[lo].viscosity(g)
            } else {
                (1.0 - t) * curves[lo].viscosity(g) + t * curves[hi].viscosity(g)
            };
            ViscositySample::new(g, mu, target_hct)
        })
        .collect())
}

/// Power-law parameters at an arbitrary hematocrit: interpolated synthetic
/// measurements refitted with the default spacing weights.
pub fn fit_for_hct(base_curves: &[PowerLawParams], target_hct: f64, shear_rates: &[f64]) -> Result<PowerLawParams> {
    let samples = interpolate_hct(base_curves, target_hct, shear_rates)?;
    fit_power_law(&samples, None)
}

/// Hematocrit-to-viscosity lookup for externally sourced Newtonian models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonianLookup {
    /// `(hct, mu)` pairs sorted by hematocrit.
    pub points: Vec<(f64, f64)>,
}

impl NewtonianLookup {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientData("empty Newtonian lookup table".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidInput(
                "duplicate hematocrit in Newtonian lookup table".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn viscosity_at(&self, hct: f64) -> Result<f64> {
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if !(hct >= first.0 && hct <= last.0) {
            return Err(Error::Extrapolation {
                target: hct,
                min: first.0,
                max: last.0,
            });
        }
        if let Some(p) = self.points.iter().find(|p| p.0 == hct) {
            return Ok(p.1);
        }
        let hi = self.points.iter().position(|p| p.0 > hct).unwrap();
        let (h0, m0) = self.points[hi - 1];
        let (h1, m1) = self.points[hi];
        let t = (hct - h0) / (h1 - h0);
        Ok((1.0 - t) * m0 + t * m1)
    }
}
