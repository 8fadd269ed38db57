use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::noise::NoiseInfo;
use super::{Encode, KSpaceData, SequenceParams};
use crate::error::{Error, Result};
use crate::mesh::Point;

/// Complex images of one cardiac phase on the `matrix` grid. Voxel
/// `(x, y, z)` sits at flat index `(z * ny + y) * nx + x` and is centred at
/// `fov_center + (idx - matrix / 2) * voxel`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageVolume {
    pub dims: [usize; 3],
    pub encodes: Vec<Encode>,
    #[serde(skip)]
    pub data: Vec<Vec<Complex64>>,
    pub phase_time: f64,
    pub noise: Option<NoiseInfo>,
    pub params: SequenceParams,
}

impl ImageVolume {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.dims[1] + y) * self.dims[0] + x
    }

    pub fn voxel_center(&self, flat: usize) -> Point {
        let [nx, ny, _] = self.dims;
        let idx = [flat % nx, (flat / nx) % ny, flat / (nx * ny)];
        let v = self.params.voxel_m();
        Point::from(std::array::from_fn::<f64, 3, _>(|a| {
            self.params.fov_center[a] + (idx[a] as f64 - (self.dims[a] / 2) as f64) * v[a]
        }))
    }

    pub fn encode_data(&self, encode: Encode) -> Option<&[Complex64]> {
        let e = self.encodes.iter().position(|&x| x == encode)?;
        Some(&self.data[e])
    }
}

/// In-place centred inverse DFT along one axis of a 3D array stored with
/// axis 0 fastest, normalised by `1/n`.
fn centred_idft_axis(data: &mut [Complex64], dims: [usize; 3], axis: usize, planner: &mut FftPlanner<f64>) {
    let n = dims[axis];
    let c = (n / 2) as f64;
    let nf = n as f64;
    let fft = planner.plan_fft_inverse(n);
    let pre: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(1.0, -2.0 * PI * c * i as f64 / nf))
        .collect();
    let post: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(1.0 / nf, 2.0 * PI * c * (c - j as f64) / nf))
        .collect();
    let stride: usize = dims[..axis].iter().product();
    let outer: usize = dims[axis + 1..].iter().product();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for o in 0..outer {
        for s in 0..stride {
            let base = o * stride * n + s;
            for i in 0..n {
                line[i] = data[base + i * stride] * pre[i];
            }
            fft.process(&mut line);
            for j in 0..n {
                data[base + j * stride] = line[j] * post[j];
            }
        }
    }
}

fn centred_idft_3d(samples: &[Complex64], dims: [usize; 3]) -> Vec<Complex64> {
    let mut data = samples.to_vec();
    let mut planner = FftPlanner::new();
    for axis in 0..3 {
        centred_idft_axis(&mut data, dims, axis, &mut planner);
    }
    data
}

/// Centred inverse 3D DFT of every encode, then the oversampled readout is
/// cropped to the central `matrix[0]` voxels.
pub fn reconstruct(k: &KSpaceData) -> Result<ImageVolume> {
    let dims = k.dims;
    if k.samples.len() != k.encodes.len() || k.samples.iter().any(|s| s.len() != k.len()) {
        return Err(Error::InvalidInput("k-space is not a full Cartesian grid".into()));
    }
    let matrix = k.params.matrix;
    if dims != k.params.grid_dims() {
        return Err(Error::InvalidInput(format!(
            "k-space grid {dims:?} does not match the sequence grid {:?}",
            k.params.grid_dims()
        )));
    }
    let offset = dims[0] / 2 - matrix[0] / 2;
    let data = k
        .samples
        .iter()
        .map(|s| {
            let full = centred_idft_3d(s, dims);
            full.chunks_exact(dims[0])
                .flat_map(|row| row[offset..offset + matrix[0]].iter().copied())
                .collect()
        })
        .collect();
    Ok(ImageVolume {
        dims: matrix,
        encodes: k.encodes.clone(),
        data,
        phase_time: k.phase_time,
        noise: k.noise,
        params: k.params.clone(),
    })
}
