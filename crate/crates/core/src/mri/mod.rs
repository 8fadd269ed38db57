//! Phase-contrast MR simulation: k-space synthesis from a finite-element
//! velocity field, noise, Cartesian reconstruction and phase decoding.
//!
//! Grid axes follow the world axes: readout along x, phase encoding along y,
//! partitions along z. Positions are taken relative to `fov_center`.

mod decode;
mod io;
mod noise;
mod recon;
mod sequence;
mod signal;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use decode::{phase_to_velocity, ReconstructedVelocity};
pub use io::{load_image, load_kspace, save_image, save_kspace};
pub use noise::{add_noise, magnitude_snr, predicted_snr, NoiseInfo, DEFAULT_SIGMA_FRACTION};
pub use recon::{reconstruct, ImageVolume};
pub use sequence::{sequence_timings, SequenceTimings, GYROMAGNETIC_RATIO};
pub use signal::{synthesize_phases, synthesize_signal, KSpaceData};

/// Acquisition parameters. Defaults reproduce the reference 4D flow protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceParams {
    /// m/s
    pub venc: f64,
    /// Voxels along x (readout), y (phase), z (partition).
    pub matrix: [usize; 3],
    /// mm
    pub voxel: [f64; 3],
    /// Readout oversampling factor.
    pub oversampling: usize,
    pub cardiac_phases: usize,
    /// ms
    pub time_spacing: f64,
    /// ms
    pub t2_star: f64,
    /// kHz
    pub adc_bandwidth: f64,
    /// mT/m per ms, i.e. T/m/s.
    pub slew_rate: f64,
    /// mT/m
    pub max_gradient: f64,
    /// m
    pub fov_center: [f64; 3],
}

impl Default for SequenceParams {
    fn default() -> Self {
        SequenceParams {
            venc: 2.5,
            matrix: [56, 30, 113],
            voxel: [2.0, 2.0, 2.0],
            oversampling: 2,
            cardiac_phases: 30,
            time_spacing: 32.0,
            t2_star: 254.0,
            adc_bandwidth: 128.0,
            slew_rate: 195.0,
            max_gradient: 30.0,
            fov_center: [0.0; 3],
        }
    }
}

impl SequenceParams {
    pub fn validate(&self) -> Result<()> {
        let scalars = [
            ("venc", self.venc),
            ("time_spacing", self.time_spacing),
            ("t2_star", self.t2_star),
            ("adc_bandwidth", self.adc_bandwidth),
            ("slew_rate", self.slew_rate),
            ("max_gradient", self.max_gradient),
        ];
        for (name, v) in scalars {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if self.voxel.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "voxel sizes must be positive: {:?}",
                self.voxel
            )));
        }
        if self.matrix.contains(&0) || self.oversampling == 0 || self.cardiac_phases == 0 {
            return Err(Error::InvalidInput(
                "matrix, oversampling and cardiac_phases must be positive".into(),
            ));
        }
        if self.fov_center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("fov_center must be finite".into()));
        }
        Ok(())
    }

    /// Voxel size in metres.
    pub fn voxel_m(&self) -> [f64; 3] {
        self.voxel.map(|v| v * 1e-3)
    }

    pub fn voxel_volume(&self) -> f64 {
        self.voxel_m().iter().product()
    }

    /// Sampled grid: oversampled readout, phase, partition.
    pub fn grid_dims(&self) -> [usize; 3] {
        [self.matrix[0] * self.oversampling, self.matrix[1], self.matrix[2]]
    }

    /// Field of view of the sampled grid, m.
    pub fn grid_fov(&self) -> [f64; 3] {
        let d = self.grid_dims();
        let v = self.voxel_m();
        [d[0] as f64 * v[0], d[1] as f64 * v[1], d[2] as f64 * v[2]]
    }

    /// Acquisition time of cardiac phase `p`, s.
    pub fn phase_time(&self, p: usize) -> f64 {
        p as f64 * self.time_spacing * 1e-3
    }

    /// SHA-256 of the JSON encoding, for provenance in sidecars.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("parameters serialize");
        hex::encode(Sha256::digest(json))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encode {
    /// Velocity-compensated reference.
    Reference,
    X,
    Y,
    Z,
}

pub const ALL_ENCODES: [Encode; 4] = [Encode::Reference, Encode::X, Encode::Y, Encode::Z];

impl Encode {
    pub fn axis(self) -> Option<usize> {
        match self {
            Encode::Reference => None,
            Encode::X => Some(0),
            Encode::Y => Some(1),
            Encode::Z => Some(2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = SequenceParams::default();
        p.validate().unwrap();
        assert_eq!(p.grid_dims(), [112, 30, 113]);
        assert!((p.voxel_volume() - 8e-9).abs() < 1e-22);
        assert!((p.phase_time(29) - 0.928).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive() {
        let p = SequenceParams {
            venc: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = SequenceParams {
            matrix: [4, 0, 4],
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn config_keys_are_checked() {
        let p: SequenceParams = toml::from_str("venc = 1.5\nmatrix = [28, 16, 56]").unwrap();
        assert_eq!(p.venc, 1.5);
        assert_eq!(p.oversampling, 2);
        assert!(toml::from_str::<SequenceParams>("vnec = 1.5").is_err());
    }
}
