use std::f64::consts::PI;

use super::{Encode, ImageVolume, SequenceParams};
use crate::error::{Error, Result};
use crate::mesh::Point;

/// Voxel velocities of one cardiac phase, m/s, on the image grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedVelocity {
    pub dims: [usize; 3],
    pub phase_time: f64,
    pub params: SequenceParams,
    pub velocity: Vec<Point>,
    /// Reference-encode magnitude.
    pub magnitude: Vec<f64>,
    /// Voxels where some component sits on the wrap boundary `-VENC`.
    pub at_wrap_boundary: Vec<bool>,
}

impl ReconstructedVelocity {
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.dims[1] + y) * self.dims[0] + x
    }

    /// Centre of voxel `idx`, m.
    pub fn voxel_center(&self, idx: [usize; 3]) -> Point {
        let v = self.params.voxel_m();
        Point::from(std::array::from_fn::<f64, 3, _>(|a| {
            self.params.fov_center[a] + (idx[a] as f64 - (self.dims[a] / 2) as f64) * v[a]
        }))
    }
}

/// Reference-subtracted phase decoding: `u_a = -VENC Δφ_a / π` with
/// `Δφ_a = arg(img_a conj(img_ref))` in `(-π, π]`, so decoded components lie
/// in `[-VENC, VENC)`.
pub fn phase_to_velocity(img: &ImageVolume, venc: f64) -> Result<ReconstructedVelocity> {
    if !(venc > 0.0 && venc.is_finite()) {
        return Err(Error::InvalidInput(format!("VENC must be positive, got {venc}")));
    }
    let get = |e: Encode| {
        img.encode_data(e)
            .ok_or_else(|| Error::InvalidInput(format!("image has no {e:?} encode")))
    };
    let reference = get(Encode::Reference)?;
    let encoded = [get(Encode::X)?, get(Encode::Y)?, get(Encode::Z)?];
    let n = img.len();
    let mut velocity = vec![Point::zeros(); n];
    let mut at_wrap_boundary = vec![false; n];
    for (i, r) in reference.iter().enumerate() {
        for (a, e) in encoded.iter().enumerate() {
            let mut dphi = (e[i] * r.conj()).arg();
            if dphi <= -PI {
                dphi = PI;
            }
            if dphi >= PI - 1e-12 {
                at_wrap_boundary[i] = true;
            }
            velocity[i][a] = -venc * dphi / PI;
        }
    }
    Ok(ReconstructedVelocity {
        dims: img.dims,
        phase_time: img.phase_time,
        params: img.params.clone(),
        velocity,
        magnitude: reference.iter().map(|r| r.norm()).collect(),
        at_wrap_boundary,
    })
}
