//! Tetrahedral meshes with labeled boundary triangles.
//!
//! Boundary triangles are stored with their vertices ordered so that the
//! right-hand normal `(b - a) x (c - a)` points into the fluid domain.

mod io;
mod segments;
mod shapes;

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};

pub use io::{load_grid, load_mesh, save_mesh, save_mesh_with_point_data, PointField, LABEL_ARRAY};
pub use segments::{segment_labels, CutPlane, Exclusion, SegmentLabel, SegmentLabels, SEGMENTS};
pub use shapes::{
    generate_ball_mesh, generate_box_mesh, generate_pipe_mesh, generate_pipe_mesh_with, PipeMeshOptions,
    DEFAULT_PIPE_LEVEL,
};

pub type Point = Vector3<f64>;

/// Role of a boundary triangle. Serialized as `0` wall, `1` inlet,
/// `k + 1` for outlet `k` (k ≥ 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceLabel {
    Wall,
    Inlet,
    Outlet(u32),
}

impl FaceLabel {
    pub fn code(self) -> i32 {
        match self {
            FaceLabel::Wall => 0,
            FaceLabel::Inlet => 1,
            FaceLabel::Outlet(k) => k as i32 + 1,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            0 => Some(FaceLabel::Wall),
            1 => Some(FaceLabel::Inlet),
            k if k >= 2 && k <= u32::MAX as i64 => Some(FaceLabel::Outlet((k - 1) as u32)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTri {
    pub vertices: [usize; 3],
    pub label: FaceLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    pub vertices: Vec<Point>,
    pub tets: Vec<[usize; 4]>,
    pub boundary: Vec<BoundaryTri>,
}

/// Repairs applied while validating a mesh.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeshRepairs {
    /// Tets whose vertex order was swapped to make the signed volume positive.
    pub flipped_tets: Vec<usize>,
    /// Boundary triangles re-oriented to an inward normal.
    pub reoriented_faces: usize,
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

pub(crate) fn signed_volume(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

const TET_FACES: [([usize; 3], usize); 4] = [([1, 2, 3], 0), ([0, 2, 3], 1), ([0, 1, 3], 2), ([0, 1, 2], 3)];

impl TetMesh {
    /// Validates the mesh, repairing inverted tets and boundary orientation.
    pub fn validated(
        vertices: Vec<Point>,
        mut tets: Vec<[usize; 4]>,
        mut boundary: Vec<BoundaryTri>,
    ) -> Result<(Self, MeshRepairs)> {
        let nv = vertices.len();
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Mesh(format!("vertex {i} has non-finite coordinates")));
        }
        if tets.is_empty() {
            return Err(Error::Mesh("mesh has no tetrahedra".into()));
        }
        for (t, tet) in tets.iter().enumerate() {
            if tet.iter().any(|&i| i >= nv) {
                return Err(Error::Mesh(format!("tet {t} references a vertex out of range")));
            }
            let mut s = *tet;
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Mesh(format!("tet {t} repeats a vertex")));
            }
        }
        for (f, tri) in boundary.iter().enumerate() {
            if tri.vertices.iter().any(|&i| i >= nv) {
                return Err(Error::Mesh(format!(
                    "boundary triangle {f} references a vertex out of range"
                )));
            }
        }

        let (lo, hi) = bounding_box(&vertices);
        let scale = (hi - lo).norm().max(f64::MIN_POSITIVE);
        let mut repairs = MeshRepairs::default();
        for (t, tet) in tets.iter_mut().enumerate() {
            let v = |k: usize| &vertices[tet[k]];
            let vol = signed_volume(v(0), v(1), v(2), v(3));
            if vol.abs() <= 1e-14 * scale.powi(3) {
                return Err(Error::Mesh(format!("tet {t} is degenerate (volume {vol:e})")));
            }
            if vol < 0.0 {
                tet.swap(2, 3);
                repairs.flipped_tets.push(t);
            }
        }
        if !repairs.flipped_tets.is_empty() {
            log::warn!(
                "repaired {} inverted tetrahedra by swapping vertex order",
                repairs.flipped_tets.len()
            );
        }

        // face -> (count, owning tet, opposite vertex)
        let mut faces: HashMap<[usize; 3], (u32, usize)> = HashMap::with_capacity(tets.len() * 3);
        for tet in &tets {
            for (f, opp) in TET_FACES {
                let key = sorted3([tet[f[0]], tet[f[1]], tet[f[2]]]);
                faces.entry(key).and_modify(|e| e.0 += 1).or_insert((1, tet[opp]));
            }
        }
        if let Some((face, _)) = faces.iter().find(|(_, e)| e.0 > 2) {
            return Err(Error::Mesh(format!("face {face:?} is shared by more than two tets")));
        }

        let mut covered: HashMap<[usize; 3], usize> = HashMap::with_capacity(boundary.len());
        for (f, tri) in boundary.iter_mut().enumerate() {
            let key = sorted3(tri.vertices);
            match faces.get(&key) {
                Some(&(1, opposite)) => {
                    let [a, b, c] = tri.vertices.map(|i| vertices[i]);
                    let n = (b - a).cross(&(c - a));
                    if n.dot(&(vertices[opposite] - a)) < 0.0 {
                        tri.vertices.swap(1, 2);
                        repairs.reoriented_faces += 1;
                    }
                }
                Some(_) => return Err(Error::Mesh(format!("boundary triangle {f} is an interior face"))),
                None => return Err(Error::Mesh(format!("boundary triangle {f} is not a face of any tet"))),
            }
            if covered.insert(key, f).is_some() {
                return Err(Error::Mesh(format!("boundary triangle {f} is duplicated")));
            }
        }
        let exterior = faces.values().filter(|e| e.0 == 1).count();
        if exterior != boundary.len() {
            return Err(Error::Mesh(format!(
                "open boundary surface: {} exterior faces but {} labeled boundary triangles",
                exterior,
                boundary.len()
            )));
        }

        // closed and consistently oriented: every directed edge appears once
        let mut directed: HashMap<(usize, usize), u32> = HashMap::with_capacity(boundary.len() * 3);
        for tri in &boundary {
            let v = tri.vertices;
            for k in 0..3 {
                *directed.entry((v[k], v[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count != 1 || directed.get(&(b, a)) != Some(&1) {
                return Err(Error::Mesh(format!(
                    "boundary surface is not closed and orientable at edge ({a}, {b})"
                )));
            }
        }

        Ok((
            TetMesh {
                vertices,
                tets,
                boundary,
            },
            repairs,
        ))
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn tet_points(&self, t: usize) -> [Point; 4] {
        self.tets[t].map(|i| self.vertices[i])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tet_points(t);
        signed_volume(&a, &b, &c, &d)
    }

    pub fn total_volume(&self) -> f64 {
        compensated_sum((0..self.tets.len()).map(|t| self.tet_volume(t)))
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        bounding_box(&self.vertices)
    }

    /// Sorted, deduplicated vertex indices of faces with the given label.
    pub fn label_vertices(&self, label: FaceLabel) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary
            .iter()
            .filter(|t| t.label == label)
            .flat_map(|t| t.vertices)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn wall_vertices(&self) -> Vec<usize> {
        self.label_vertices(FaceLabel::Wall)
    }

    /// Unique undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = Vec::with_capacity(self.tets.len() * 6);
        for tet in &self.tets {
            for i in 0..4 {
                for j in i + 1..4 {
                    let (a, b) = (tet[i].min(tet[j]), tet[i].max(tet[j]));
                    e.push((a, b));
                }
            }
        }
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Gradients of the four linear shape functions of tet `t`.
    pub fn shape_gradients(&self, t: usize) -> [Point; 4] {
        let [p0, p1, p2, p3] = self.tet_points(t);
        let edges = Matrix3::from_columns(&[p1 - p0, p2 - p0, p3 - p0]);
        // rows of the inverse are the gradients of the barycentrics 1..3
        let inv = edges.try_inverse().expect("validated tets have non-zero volume");
        let g1 = inv.row(0).transpose();
        let g2 = inv.row(1).transpose();
        let g3 = inv.row(2).transpose();
        [-(g1 + g2 + g3), g1, g2, g3]
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        save_mesh(path, self)
    }
}

pub(crate) fn bounding_box(points: &[Point]) -> (Point, Point) {
    let mut lo = Point::repeat(f64::INFINITY);
    let mut hi = Point::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Lumped nodal volumes: each tet contributes a quarter of its volume to each
/// of its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalVolumes {
    /// m³ per vertex
    pub volume: Vec<f64>,
}

impl NodalVolumes {
    pub fn total(&self) -> f64 {
        compensated_sum(self.volume.iter().copied())
    }
}

pub fn nodal_volumes(mesh: &TetMesh) -> NodalVolumes {
    let mut acc = vec![CompensatedSum::default(); mesh.num_vertices()];
    for (t, tet) in mesh.tets.iter().enumerate() {
        let quarter = mesh.tet_volume(t) / 4.0;
        for &v in tet {
            acc[v].add(quarter);
        }
    }
    NodalVolumes {
        volume: acc.iter().map(CompensatedSum::value).collect(),
    }
}

/// Unit inward normals at wall vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct WallNormals {
    /// Sorted wall vertex indices.
    pub vertices: Vec<usize>,
    pub normals: Vec<Point>,
}

impl WallNormals {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Position of a mesh vertex in the wall list.
    pub fn index_of(&self, vertex: usize) -> Option<usize> {
        self.vertices.binary_search(&vertex).ok()
    }
}

/// Area-weighted average of the adjacent wall-face inward normals.
pub fn wall_normals(mesh: &TetMesh) -> Result<WallNormals> {
    let vertices = mesh.wall_vertices();
    if vertices.is_empty() {
        return Err(Error::Mesh("mesh has no wall faces".into()));
    }
    let mut acc = vec![Point::zeros(); vertices.len()];
    for tri in mesh.boundary.iter().filter(|t| t.label == FaceLabel::Wall) {
        let [a, b, c] = tri.vertices.map(|i| mesh.vertices[i]);
        // |cross| is twice the area, so this is already area weighted
        let n = (b - a).cross(&(c - a));
        for v in tri.vertices {
            let k = vertices.binary_search(&v).unwrap();
            acc[k] += n;
        }
    }
    let mut normals = Vec::with_capacity(acc.len());
    for (k, n) in acc.into_iter().enumerate() {
        let len = n.norm();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::DegenerateGeometry(format!(
                "wall vertex {} has a vanishing accumulated normal",
                vertices[k]
            )));
        }
        normals.push(n / len);
    }
    Ok(WallNormals { vertices, normals })
}
