//! Reference power-law fits of whole-blood viscometry at 37 °C and their
//! Newtonian equivalents.

use super::PowerLawParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogRow {
    pub hct: f64,
    /// Pa·s^n
    pub m: f64,
    pub n: f64,
    /// Mean-stress Newtonian viscosity over 12–123 1/s, Pa·s.
    pub newtonian_narrow: Option<f64>,
    /// Mean-stress Newtonian viscosity over 0–2800 1/s, Pa·s.
    pub newtonian_wide: Option<f64>,
    /// Hematocrit polynomial model from external measurements, Pa·s.
    pub newtonian_polynomial: Option<f64>,
}

const fn row(hct: f64, m: f64, n: f64, narrow: f64, wide: f64, poly: f64) -> CatalogRow {
    CatalogRow {
        hct,
        m,
        n,
        newtonian_narrow: Some(narrow),
        newtonian_wide: Some(wide),
        newtonian_polynomial: Some(poly),
    }
}

const fn bare(hct: f64, m: f64, n: f64) -> CatalogRow {
    CatalogRow {
        hct,
        m,
        n,
        newtonian_narrow: None,
        newtonian_wide: None,
        newtonian_polynomial: None,
    }
}

/// Curves used for the simulation experiments, rounded to three significant
/// digits on `m` and two decimals on `n`.
pub const CFD_CURVES: [CatalogRow; 5] = [
    row(20.0, 0.69e-2, 0.71, 2.15e-3, 0.97e-3, 2.24e-3),
    row(32.5, 1.73e-2, 0.63, 4.00e-3, 1.49e-3, 3.26e-3),
    row(45.0, 2.42e-2, 0.72, 7.71e-3, 3.52e-3, 4.46e-3),
    row(57.5, 4.19e-2, 0.64, 9.75e-3, 3.64e-3, 6.15e-3),
    row(70.0, 5.40e-2, 0.63, 12.38e-3, 4.58e-3, 9.87e-3),
];

/// Curves for the patient hematocrits.
pub const IN_VIVO_CURVES: [CatalogRow; 5] = [
    bare(28.2, 1.36e-2, 0.65),
    bare(35.2, 1.83e-2, 0.67),
    bare(40.2, 2.03e-2, 0.71),
    bare(46.6, 2.64e-2, 0.70),
    bare(50.1, 3.12e-2, 0.68),
];

/// Constant viscosities commonly assumed for blood, Pa·s.
pub const LITERATURE_NEWTONIAN: [f64; 4] = [3.0e-3, 3.5e-3, 4.0e-3, 4.5e-3];

impl CatalogRow {
    pub fn params(&self) -> PowerLawParams {
        PowerLawParams::new(self.m, self.n, self.hct)
    }
}

/// The simulation-experiment curves as base curves for interpolation.
pub fn base_curves() -> Vec<PowerLawParams> {
    CFD_CURVES.iter().map(CatalogRow::params).collect()
}

/// Twelve evenly spaced shear rates spanning the 12–123 1/s measurement range.
pub fn default_shear_grid() -> Vec<f64> {
    let (lo, hi, n) = (12.0, 123.0, 12);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
