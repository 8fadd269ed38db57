use crate::error::{Error, Result};
use crate::flowfields::VelocityField;
use crate::mesh::{Point, TetMesh};
use crate::mri::ReconstructedVelocity;

/// Trilinear weights of `p` on the voxel-centre lattice, or `None` outside
/// the grid. Points in the outer half voxel take the nearest centre plane.
fn trilinear(vox: &ReconstructedVelocity, p: &Point) -> Option<[(usize, f64); 8]> {
    let h = vox.params.voxel_m();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let n = vox.dims[a];
        let g = (p[a] - vox.params.fov_center[a]) / h[a] + (n / 2) as f64;
        if !(g >= -0.5 && g <= n as f64 - 0.5) {
            return None;
        }
        let g = g.clamp(0.0, (n - 1) as f64);
        let i = (g.floor() as usize).min(n.saturating_sub(2));
        base[a] = i;
        frac[a] = if n > 1 { g - i as f64 } else { 0.0 };
    }
    let clamp = |a: usize, off: usize| (base[a] + off).min(vox.dims[a] - 1);
    Some(std::array::from_fn(|c| {
        let (ox, oy, oz) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
        let w = [ox, oy, oz]
            .iter()
            .enumerate()
            .map(|(a, &o)| if o == 1 { frac[a] } else { 1.0 - frac[a] })
            .product();
        (vox.index(clamp(0, ox), clamp(1, oy), clamp(2, oz)), w)
    }))
}

/// Trilinear interpolation of voxel velocities at every mesh vertex, one
/// frame per cardiac phase at the phase time. Nothing is smoothed.
pub fn interpolate_to_mesh(phases: &[ReconstructedVelocity], mesh: &TetMesh, period: f64) -> Result<VelocityField> {
    if phases.is_empty() {
        return Err(Error::Series("no reconstructed phases".into()));
    }
    let mut frames = Vec::with_capacity(phases.len());
    for vox in phases {
        let mut frame = Vec::with_capacity(mesh.num_vertices());
        for (i, p) in mesh.vertices.iter().enumerate() {
            let weights = trilinear(vox, p).ok_or(Error::OutOfBounds {
                vertex: i,
                position: [p.x, p.y, p.z],
            })?;
            frame.push(weights.iter().map(|&(k, w)| vox.velocity[k] * w).sum::<Point>());
        }
        frames.push(frame);
    }
    VelocityField::new(frames, phases.iter().map(|v| v.phase_time).collect(), period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_box_mesh;
    use crate::mri::SequenceParams;

    fn grid(f: impl Fn(Point) -> Point) -> ReconstructedVelocity {
        let params = SequenceParams {
            matrix: [6, 5, 4],
            fov_center: [0.001, 0.0, -0.002],
            ..Default::default()
        };
        let mut vox = ReconstructedVelocity {
            dims: params.matrix,
            phase_time: 0.0,
            params,
            velocity: vec![],
            magnitude: vec![1.0; 120],
            at_wrap_boundary: vec![false; 120],
        };
        for z in 0..4 {
            for y in 0..5 {
                for x in 0..6 {
                    vox.velocity.push(f(vox.voxel_center([x, y, z])));
                }
            }
        }
        vox
    }

    fn mesh() -> TetMesh {
        generate_box_mesh(
            Point::new(-0.004, -0.004, -0.005),
            Point::new(0.003, 0.003, 0.0),
            [3, 3, 3],
        )
        .unwrap()
    }

    #[test]
    fn constant_and_linear_fields_are_reproduced() {
        let c = Point::new(0.1, -0.2, 0.3);
        let field = interpolate_to_mesh(&[grid(|_| c)], &mesh(), 1.0).unwrap();
        assert!(field.frames[0].iter().all(|v| (v - c).amax() < 1e-15));

        let lin = |p: Point| Point::new(3.0 * p.x - p.z, 2.0 * p.y, p.x + p.y + p.z);
        let m = mesh();
        let field = interpolate_to_mesh(&[grid(lin)], &m, 1.0).unwrap();
        for (v, p) in field.frames[0].iter().zip(&m.vertices) {
            assert!((v - lin(*p)).amax() < 1e-14);
        }
    }

    #[test]
    fn outside_vertex_is_reported() {
        let m = generate_box_mesh(Point::new(0.0, 0.0, 0.0), Point::new(0.01, 0.002, 0.002), [1, 1, 1]).unwrap();
        let err = interpolate_to_mesh(&[grid(|_| Point::zeros())], &m, 1.0).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { .. }));
    }
}
