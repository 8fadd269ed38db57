use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Encode, ImageVolume, KSpaceData, SequenceParams};
use crate::error::{Error, Result};
use crate::numeric::mean_std;

/// Noise level relative to the largest k-space magnitude.
pub const DEFAULT_SIGMA_FRACTION: f64 = 0.052;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseInfo {
    pub sigma_fraction: f64,
    pub sigma: f64,
    pub seed: u64,
}

/// Adds independent Gaussian noise to the real and imaginary part of every
/// sample, with `σ = sigma_fraction · max |s|` over all encodes. Draws run
/// encode by encode in storage order from a ChaCha8 stream seeded by `seed`.
pub fn add_noise(k: &KSpaceData, sigma_fraction: f64, seed: u64) -> Result<KSpaceData> {
    if !(sigma_fraction >= 0.0 && sigma_fraction.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sigma_fraction must be non-negative, got {sigma_fraction}"
        )));
    }
    let sigma = sigma_fraction * k.max_abs();
    let mut out = k.clone();
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in out.samples.iter_mut().flatten() {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            *s += Complex64::new(re, im);
        }
    }
    out.noise = Some(NoiseInfo {
        sigma_fraction,
        sigma,
        seed,
    });
    Ok(out)
}

/// Mean reference magnitude of the clean image over `mask` divided by the
/// standard deviation of the noise (real and imaginary parts pooled).
pub fn magnitude_snr(noisy: &ImageVolume, clean: &ImageVolume, mask: &[bool]) -> Result<f64> {
    let (Some(a), Some(b)) = (
        noisy.encode_data(Encode::Reference),
        clean.encode_data(Encode::Reference),
    ) else {
        return Err(Error::InvalidInput("both images need a reference encode".into()));
    };
    if a.len() != b.len() || mask.len() != a.len() {
        return Err(Error::InvalidInput("image and mask sizes differ".into()));
    }
    let noise: Vec<f64> = a.iter().zip(b).flat_map(|(x, y)| [(x - y).re, (x - y).im]).collect();
    let inside: Vec<f64> = b.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v.norm()).collect();
    let (Some((signal, _)), Some((_, sd))) = (mean_std(&inside), mean_std(&noise)) else {
        return Err(Error::InvalidInput("empty mask".into()));
    };
    Ok(signal / sd)
}

/// SNR expected for a uniform object of volume `object_volume` (m³) whose
/// largest k-space magnitude is its DC sample.
pub fn predicted_snr(params: &SequenceParams, object_volume: f64, sigma_fraction: f64) -> f64 {
    let n: usize = params.grid_dims().iter().product();
    (n as f64).sqrt() * params.voxel_volume() / (sigma_fraction * object_volume)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> KSpaceData {
        let params = SequenceParams {
            matrix: [4, 4, 4],
            oversampling: 1,
            ..Default::default()
        };
        KSpaceData {
            dims: [4, 4, 4],
            encodes: vec![Encode::Reference],
            samples: vec![(0..64).map(|i| Complex64::new(i as f64, -1.0)).collect()],
            sample_times: vec![1e-3; 4],
            echo_time: 1e-3,
            phase_time: 0.0,
            noise: None,
            params,
        }
    }

    #[test]
    fn same_seed_same_noise() {
        let k = fixture();
        let a = add_noise(&k, 0.05, 7).unwrap();
        let b = add_noise(&k, 0.05, 7).unwrap();
        let c = add_noise(&k, 0.05, 8).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_ne!(a.samples, c.samples);
        assert_eq!(a.noise.unwrap().sigma, 0.05 * k.max_abs());
    }

    #[test]
    fn zero_fraction_is_identity() {
        let k = fixture();
        assert_eq!(add_noise(&k, 0.0, 1).unwrap().samples, k.samples);
        assert!(add_noise(&k, -0.1, 1).is_err());
    }
}
