#![allow(dead_code)]

use hemoflow::flowfields::VelocityField;
use hemoflow::mesh::{generate_box_mesh, Point, TetMesh};
use hemoflow::mri::{ImageVolume, SequenceParams};

/// 8 × 8 × 40 mm block whose faces lie on voxel boundaries of the reduced
/// 28 × 16 × 56 grid at 2 mm.
pub const PHANTOM_MIN: [f64; 3] = [-0.005, -0.005, -0.021];
pub const PHANTOM_MAX: [f64; 3] = [0.003, 0.003, 0.019];

pub fn phantom_mesh() -> TetMesh {
    generate_box_mesh(Point::from(PHANTOM_MIN), Point::from(PHANTOM_MAX), [4, 4, 20]).unwrap()
}

pub fn phantom_volume() -> f64 {
    (0..3).map(|a| PHANTOM_MAX[a] - PHANTOM_MIN[a]).product()
}

pub fn reduced_params() -> SequenceParams {
    SequenceParams {
        matrix: [28, 16, 56],
        cardiac_phases: 1,
        ..Default::default()
    }
}

pub fn uniform_field(mesh: &TetMesh, u: Point) -> VelocityField {
    VelocityField::steady(vec![u; mesh.num_vertices()], 1.0).unwrap()
}

/// Voxels whose centres lie inside the box shrunk by `margin` on each side.
pub fn box_mask(img: &ImageVolume, min: [f64; 3], max: [f64; 3], margin: f64) -> Vec<bool> {
    (0..img.len())
        .map(|i| {
            let c = img.voxel_center(i);
            (0..3).all(|a| c[a] > min[a] + margin && c[a] < max[a] - margin)
        })
        .collect()
}
