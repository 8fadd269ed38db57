//! Generators for simple fluid domains: straight pipes, boxes and balls.

use std::collections::HashMap;

use super::{signed_volume, BoundaryTri, FaceLabel, Point, TetMesh};
use crate::error::{Error, Result};

/// Refinement level of the generated pipe used by the accuracy checks.
pub const DEFAULT_PIPE_LEVEL: u32 = 1;

/// Cross-section and axial resolution of a generated pipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeMeshOptions {
    /// Uniform rings in the core region; ring `k` carries `6k` nodes.
    pub core_rings: usize,
    /// Graded rings between the core and the wall, each with `6 * core_rings` nodes.
    pub boundary_layers: usize,
    /// Fraction of the radius covered by the graded rings.
    pub boundary_fraction: f64,
    /// Ratio between successive graded-layer thicknesses, wall to core.
    pub growth: f64,
    pub axial_layers: usize,
}

impl PipeMeshOptions {
    /// Options for refinement level `level` (0 is coarsest).
    pub fn for_level(radius: f64, length: f64, level: u32) -> Self {
        let core_rings = 3usize << level;
        let axial = (length / radius * core_rings as f64 / 2.0).round().max(2.0) as usize;
        PipeMeshOptions {
            core_rings,
            boundary_layers: 2usize << level,
            boundary_fraction: 0.2,
            growth: 1.4,
            axial_layers: axial,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.core_rings == 0 || self.axial_layers == 0 {
            return Err(Error::InvalidInput("pipe needs at least one ring and one layer".into()));
        }
        if self.boundary_layers > 0 && !(self.boundary_fraction > 0.0 && self.boundary_fraction < 1.0) {
            return Err(Error::InvalidInput("boundary fraction must lie in (0, 1)".into()));
        }
        if !(self.growth >= 1.0) || !self.growth.is_finite() {
            return Err(Error::InvalidInput("boundary-layer growth must be >= 1".into()));
        }
        Ok(())
    }
}

/// Straight pipe along +z from `z = 0` (inlet) to `z = length` (outlet 1).
pub fn generate_pipe_mesh(radius: f64, length: f64, resolution: u32) -> Result<TetMesh> {
    generate_pipe_mesh_with(radius, length, &PipeMeshOptions::for_level(radius, length, resolution))
}

pub fn generate_pipe_mesh_with(radius: f64, length: f64, opts: &PipeMeshOptions) -> Result<TetMesh> {
    if !(radius > 0.0 && length > 0.0) || !radius.is_finite() || !length.is_finite() {
        return Err(Error::InvalidInput(format!(
            "pipe radius and length must be positive (got {radius}, {length})"
        )));
    }
    opts.validate()?;
    let (disc, tris) = disc(radius, opts);
    let nd = disc.len();
    let nz = opts.axial_layers;
    let mut vertices = Vec::with_capacity(nd * (nz + 1));
    for l in 0..=nz {
        let z = if l == nz { length } else { length * l as f64 / nz as f64 };
        vertices.extend(disc.iter().map(|&(x, y)| Point::new(x, y, z)));
    }
    let mut tets = Vec::with_capacity(tris.len() * nz * 3);
    for l in 0..nz {
        for tri in &tris {
            let mut b = tri.map(|i| i + l * nd);
            b.sort_unstable();
            let t = b.map(|i| i + nd);
            tets.push([b[0], b[1], b[2], t[2]]);
            tets.push([b[0], b[1], t[1], t[2]]);
            tets.push([b[0], t[0], t[1], t[2]]);
        }
    }
    orient(&vertices, &mut tets);
    let boundary = exterior_faces(&tets, |f| {
        let z = f.map(|i| vertices[i].z);
        if z.iter().all(|&z| z == 0.0) {
            FaceLabel::Inlet
        } else if z.iter().all(|&z| z == length) {
            FaceLabel::Outlet(1)
        } else {
            FaceLabel::Wall
        }
    });
    Ok(TetMesh::validated(vertices, tets, boundary)?.0)
}

fn ring_angles(n: usize) -> impl Fn(usize) -> f64 {
    move |j| std::f64::consts::TAU * j as f64 / n as f64
}

fn disc(radius: f64, opts: &PipeMeshOptions) -> (Vec<(f64, f64)>, Vec<[usize; 3]>) {
    let kc = opts.core_rings;
    let core_radius = if opts.boundary_layers > 0 {
        radius * (1.0 - opts.boundary_fraction)
    } else {
        radius
    };
    let mut radii: Vec<f64> = (1..=kc).map(|k| core_radius * k as f64 / kc as f64).collect();
    let mut counts: Vec<usize> = (1..=kc).map(|k| 6 * k).collect();
    if opts.boundary_layers > 0 {
        let nb = opts.boundary_layers;
        let thickness = radius - core_radius;
        // layer i (from the wall) has thickness d * growth^i
        let weights: Vec<f64> = (0..nb).map(|i| opts.growth.powi(i as i32)).collect();
        let total: f64 = weights.iter().sum();
        let mut r = radius;
        let mut outer = Vec::with_capacity(nb);
        for w in &weights[..nb - 1] {
            outer.push(r);
            r -= thickness * w / total;
        }
        outer.push(r);
        outer.reverse();
        // the last entry is the wall itself
        *outer.last_mut().unwrap() = radius;
        radii.extend(outer);
        counts.extend(std::iter::repeat(6 * kc).take(nb));
    }

    let mut points = vec![(0.0, 0.0)];
    let mut starts = Vec::with_capacity(radii.len());
    for (r, &n) in radii.iter().zip(&counts) {
        starts.push(points.len());
        let angle = ring_angles(n);
        points.extend((0..n).map(|j| (r * angle(j).cos(), r * angle(j).sin())));
    }

    let mut tris = Vec::new();
    for j in 0..6 {
        tris.push([0, starts[0] + j, starts[0] + (j + 1) % 6]);
    }
    for k in 0..radii.len() - 1 {
        let (na, nb) = (counts[k], counts[k + 1]);
        let (sa, sb) = (starts[k], starts[k + 1]);
        let (ta, tb) = (ring_angles(na), ring_angles(nb));
        let (mut i, mut j) = (0, 0);
        while i < na || j < nb {
            let advance_a = j == nb || (i < na && ta(i + 1) < tb(j + 1));
            if advance_a {
                tris.push([sa + i, sa + (i + 1) % na, sb + j % nb]);
                i += 1;
            } else {
                tris.push([sa + i % na, sb + j, sb + (j + 1) % nb]);
                j += 1;
            }
        }
    }
    (points, tris)
}

fn orient(vertices: &[Point], tets: &mut [[usize; 4]]) {
    for tet in tets {
        let v = tet.map(|i| vertices[i]);
        if signed_volume(&v[0], &v[1], &v[2], &v[3]) < 0.0 {
            tet.swap(2, 3);
        }
    }
}

fn exterior_faces(tets: &[[usize; 4]], label: impl Fn([usize; 3]) -> FaceLabel) -> Vec<BoundaryTri> {
    let mut count: HashMap<[usize; 3], (u32, usize, usize)> = HashMap::new();
    for (t, tet) in tets.iter().enumerate() {
        for (k, f) in [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]].into_iter().enumerate() {
            let mut key = f.map(|i| tet[i]);
            key.sort_unstable();
            count.entry(key).and_modify(|e| e.0 += 1).or_insert((1, t, k));
        }
    }
    let mut faces: Vec<(usize, usize, [usize; 3])> = count
        .into_iter()
        .filter(|(_, e)| e.0 == 1)
        .map(|(key, e)| (e.1, e.2, key))
        .collect();
    faces.sort_unstable();
    faces
        .into_iter()
        .map(|(_, _, key)| BoundaryTri {
            vertices: key,
            label: label(key),
        })
        .collect()
}

/// Axis-aligned box split into `6 * nx * ny * nz` tets. The `z = min` face is
/// the inlet, `z = max` outlet 1, all others wall.
pub fn generate_box_mesh(min: Point, max: Point, divisions: [usize; 3]) -> Result<TetMesh> {
    if divisions.iter().any(|&d| d == 0) || (0..3).any(|a| !(max[a] > min[a])) {
        return Err(Error::InvalidInput("box needs positive extent and divisions".into()));
    }
    let [nx, ny, nz] = divisions;
    let coord = |a: usize, i: usize, n: usize| {
        if i == n {
            max[a]
        } else {
            min[a] + (max[a] - min[a]) * i as f64 / n as f64
        }
    };
    let id = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Point::new(coord(0, i, nx), coord(1, j, ny), coord(2, k, nz)));
            }
        }
    }
    // Kuhn subdivision: every tet follows a monotone path from corner 000 to 111
    const PATHS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for path in PATHS {
                    let mut c = [i, j, k];
                    let mut tet = [id(c[0], c[1], c[2]); 4];
                    for (s, &axis) in path.iter().enumerate() {
                        c[axis] += 1;
                        tet[s + 1] = id(c[0], c[1], c[2]);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    orient(&vertices, &mut tets);
    let boundary = exterior_faces(&tets, |f| {
        let z = f.map(|i| vertices[i].z);
        if z.iter().all(|&z| z == min.z) {
            FaceLabel::Inlet
        } else if z.iter().all(|&z| z == max.z) {
            FaceLabel::Outlet(1)
        } else {
            FaceLabel::Wall
        }
    });
    Ok(TetMesh::validated(vertices, tets, boundary)?.0)
}

/// Ball of the given radius centred at the origin: an icosphere with
/// `subdivisions` refinements, coned to the centre and split into shells.
/// The whole boundary is wall.
pub fn generate_ball_mesh(radius: f64, subdivisions: u32, shells: usize) -> Result<TetMesh> {
    if !(radius > 0.0) || shells == 0 {
        return Err(Error::InvalidInput("ball needs a positive radius and shells".into()));
    }
    let (sphere, faces) = icosphere(subdivisions);
    let ns = sphere.len();
    let mut vertices = vec![Point::zeros()];
    for s in 1..=shells {
        let r = radius * s as f64 / shells as f64;
        vertices.extend(sphere.iter().map(|p| p * r));
    }
    let shell = |s: usize, i: usize| 1 + (s - 1) * ns + i;
    let mut tets = Vec::new();
    for f in &faces {
        tets.push([0, shell(1, f[0]), shell(1, f[1]), shell(1, f[2])]);
        for s in 1..shells {
            // prism between shells s and s+1, split with the sorted-index rule
            let mut b = *f;
            b.sort_unstable();
            let lo = b.map(|i| shell(s, i));
            let hi = b.map(|i| shell(s + 1, i));
            tets.push([lo[0], lo[1], lo[2], hi[2]]);
            tets.push([lo[0], lo[1], hi[1], hi[2]]);
            tets.push([lo[0], hi[0], hi[1], hi[2]]);
        }
    }
    orient(&vertices, &mut tets);
    let boundary = exterior_faces(&tets, |_| FaceLabel::Wall);
    Ok(TetMesh::validated(vertices, tets, boundary)?.0)
}

fn icosphere(subdivisions: u32) -> (Vec<Point>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts: Vec<Point> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, pts: &mut Vec<Point>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                pts.push(((pts[a] + pts[b]) / 2.0).normalize());
                pts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut pts);
            let bc = midpoint(b, c, &mut pts);
            let ca = midpoint(c, a, &mut pts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (pts, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{nodal_volumes, wall_normals};
    use std::f64::consts::PI;

    #[test]
    fn pipe_volume_converges_to_cylinder() {
        let (r, l) = (0.01, 0.1);
        let exact = PI * r * r * l;
        let mut last = f64::INFINITY;
        for level in 0..3 {
            let mesh = generate_pipe_mesh(r, l, level).unwrap();
            let err = (mesh.total_volume() - exact).abs() / exact;
            assert!(err < last);
            last = err;
        }
        assert!(last < 5e-3);
    }

    #[test]
    fn default_pipe_volume_within_one_percent() {
        let (r, l) = (0.01, 0.1);
        let mesh = generate_pipe_mesh(r, l, 1).unwrap();
        let exact = PI * r * r * l;
        assert!((nodal_volumes(&mesh).total() - exact).abs() / exact < 0.01);
    }

    #[test]
    fn pipe_volume_second_order() {
        let (r, l) = (0.01, 0.1);
        let v: Vec<f64> = (0..3)
            .map(|k| generate_pipe_mesh(r, l, k).unwrap().total_volume())
            .collect();
        // Richardson ratio of successive differences
        let order = ((v[1] - v[0]) / (v[2] - v[1])).log2();
        assert!((order * 10.0).round() / 10.0 >= 2.0, "order {order}");
    }

    #[test]
    fn boundary_is_a_topological_sphere() {
        for level in 0..2 {
            let mesh = generate_pipe_mesh(0.01, 0.05, level).unwrap();
            let mut edges: Vec<(usize, usize)> = mesh
                .boundary
                .iter()
                .flat_map(|t| {
                    let v = t.vertices;
                    [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])]
                })
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect();
            edges.sort_unstable();
            edges.dedup();
            let mut verts: Vec<usize> = mesh.boundary.iter().flat_map(|t| t.vertices).collect();
            verts.sort_unstable();
            verts.dedup();
            let chi = verts.len() as i64 - edges.len() as i64 + mesh.boundary.len() as i64;
            assert_eq!(chi, 2);
        }
    }

    #[test]
    fn cylinder_normals_point_to_axis() {
        let (r, l) = (0.01, 0.1);
        let mesh = generate_pipe_mesh(r, l, 1).unwrap();
        let normals = wall_normals(&mesh).unwrap();
        for (&v, n) in normals.vertices.iter().zip(&normals.normals) {
            assert!((n.norm() - 1.0).abs() < 1e-12);
            let p = mesh.vertices[v];
            if p.z == 0.0 || p.z == l {
                continue;
            }
            assert!(n.z.abs() < 0.05);
            let radial = Point::new(-p.x, -p.y, 0.0).normalize();
            assert!(n.dot(&radial) > 0.99);
        }
    }

    #[test]
    fn pipe_labels() {
        let mesh = generate_pipe_mesh(0.01, 0.05, 0).unwrap();
        for tri in &mesh.boundary {
            let z = tri.vertices.map(|i| mesh.vertices[i].z);
            match tri.label {
                FaceLabel::Inlet => assert!(z.iter().all(|&z| z == 0.0)),
                FaceLabel::Outlet(1) => assert!(z.iter().all(|&z| z == 0.05)),
                FaceLabel::Wall => {
                    for i in tri.vertices {
                        let p = mesh.vertices[i];
                        assert!((p.x.hypot(p.y) - 0.01).abs() < 1e-15);
                    }
                }
                other => panic!("unexpected label {other:?}"),
            }
        }
    }

    #[test]
    fn box_volume_exact() {
        let mesh = generate_box_mesh(Point::new(-1.0, 0.0, 2.0), Point::new(1.0, 3.0, 2.5), [2, 3, 4]).unwrap();
        assert_eq!(mesh.tets.len(), 6 * 24);
        assert!((nodal_volumes(&mesh).total() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ball_normals_point_to_centre() {
        let mesh = generate_ball_mesh(2.0, 3, 2).unwrap();
        let normals = wall_normals(&mesh).unwrap();
        let worst = normals
            .vertices
            .iter()
            .zip(&normals.normals)
            .map(|(&v, n)| {
                let inward = -mesh.vertices[v].normalize();
                n.dot(&inward).clamp(-1.0, 1.0).acos()
            })
            .fold(0.0, f64::max);
        assert!(worst.to_degrees() < 2.0, "worst angle {}", worst.to_degrees());
    }
}
