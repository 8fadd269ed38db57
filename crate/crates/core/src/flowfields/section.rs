use rayon::prelude::*;

use super::{FlowWaveform, VelocityField, WaveformKind};
use crate::error::{Error, Result};
use crate::mesh::{CutPlane, Point, TetMesh};
use crate::numeric::compensated_sum;

/// A point of the cut, linear in two mesh vertices.
#[derive(Debug, Clone, Copy)]
struct EdgePoint {
    a: usize,
    b: usize,
    t: f64,
}

impl EdgePoint {
    fn eval(&self, values: &[Point]) -> Point {
        values[self.a] * (1.0 - self.t) + values[self.b] * self.t
    }
}

struct Section {
    normal: Point,
    /// Triangles with their areas.
    triangles: Vec<([EdgePoint; 3], f64)>,
}

const EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn build_section(mesh: &TetMesh, plane: &CutPlane) -> Result<Section> {
    let n = Point::from(plane.normal);
    if !(n.norm() > 0.0) {
        return Err(Error::InvalidInput("section normal must be non-zero".into()));
    }
    let n = n.normalize();
    let q = Point::from(plane.point);
    let dist: Vec<f64> = mesh.vertices.iter().map(|p| (p - q).dot(&n)).collect();
    // in-plane basis for ordering polygon corners
    let e1 = if n.x.abs() < 0.9 { Point::x() } else { Point::y() };
    let e1 = (e1 - n * n.dot(&e1)).normalize();
    let e2 = n.cross(&e1);

    let mut triangles = Vec::new();
    for tet in &mesh.tets {
        let d = tet.map(|v| dist[v]);
        let above = d.map(|x| x > 0.0);
        if above.iter().all(|&s| s) || above.iter().all(|&s| !s) {
            continue;
        }
        let mut corners: Vec<EdgePoint> = EDGES
            .iter()
            .filter(|&&(i, j)| above[i] != above[j])
            .map(|&(i, j)| EdgePoint {
                a: tet[i],
                b: tet[j],
                t: d[i] / (d[i] - d[j]),
            })
            .collect();
        let pos: Vec<Point> = corners.iter().map(|c| c.eval(&mesh.vertices)).collect();
        let centre = pos.iter().sum::<Point>() / pos.len() as f64;
        if let Some(r) = plane.radius {
            if (centre - q).norm() > r {
                continue;
            }
        }
        if corners.len() == 4 {
            let angle = |p: &Point| {
                let v = p - centre;
                v.dot(&e2).atan2(v.dot(&e1))
            };
            let mut order: Vec<usize> = (0..4).collect();
            order.sort_by(|&i, &j| angle(&pos[i]).total_cmp(&angle(&pos[j])));
            corners = order.iter().map(|&i| corners[i]).collect();
        }
        for k in 1..corners.len() - 1 {
            let tri = [corners[0], corners[k], corners[k + 1]];
            let [a, b, c] = tri.map(|p| p.eval(&mesh.vertices));
            let area = (b - a).cross(&(c - a)).norm() / 2.0;
            triangles.push((tri, area));
        }
    }
    if triangles.is_empty() {
        return Err(Error::EmptySection(format!(
            "plane through {:?} with normal {:?} does not cut the mesh",
            plane.point, plane.normal
        )));
    }
    Ok(Section { normal: n, triangles })
}

impl Section {
    /// Edge-midpoint rule on each triangle.
    fn flux(&self, velocity: &[Point]) -> f64 {
        compensated_sum(self.triangles.iter().map(|(tri, area)| {
            let u = tri.map(|p| p.eval(velocity).dot(&self.normal));
            area * (u[0] + u[1] + u[2]) / 3.0
        }))
    }
}

/// Flux of one velocity frame through a plane section, m³/s, positive along
/// the plane normal.
pub fn section_flux(mesh: &TetMesh, velocity: &[Point], plane: &CutPlane) -> Result<f64> {
    if velocity.len() != mesh.num_vertices() {
        return Err(Error::Series("velocity does not match the mesh vertex count".into()));
    }
    Ok(build_section(mesh, plane)?.flux(velocity))
}

/// Volumetric flow rate through the plane at every frame, closed
/// periodically at `t = period`.
pub fn flow_rate(field: &VelocityField, mesh: &TetMesh, plane: &CutPlane) -> Result<FlowWaveform> {
    field.check_mesh(mesh)?;
    let section = build_section(mesh, plane)?;
    let mut values: Vec<f64> = field.frames.par_iter().map(|f| section.flux(f)).collect();
    let mut times = field.frame_times.clone();
    times.push(field.frame_times[0] + field.period);
    values.push(values[0]);
    FlowWaveform::new(WaveformKind::Volumetric, times, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowfields::parabolic_profile;
    use crate::mesh::generate_pipe_mesh;
    use std::f64::consts::PI;

    fn mid_plane(z: f64) -> CutPlane {
        CutPlane {
            point: [0.0, 0.0, z],
            normal: [0.0, 0.0, 1.0],
            radius: None,
        }
    }

    #[test]
    fn uniform_flow_through_disc() {
        let (r, u) = (0.01, 0.3);
        let mesh = generate_pipe_mesh(r, 0.1, 1).unwrap();
        let field = vec![Point::new(0.0, 0.0, u); mesh.num_vertices()];
        for z in [0.0371, 0.05] {
            let q = section_flux(&mesh, &field, &mid_plane(z)).unwrap();
            let exact = u * PI * r * r;
            assert!((q - exact).abs() / exact < 0.01, "{q} vs {exact}");
        }
    }

    #[test]
    fn zero_field_zero_flux() {
        let mesh = generate_pipe_mesh(0.01, 0.1, 0).unwrap();
        let field = vec![Point::zeros(); mesh.num_vertices()];
        assert_eq!(section_flux(&mesh, &field, &mid_plane(0.0433)).unwrap(), 0.0);
    }

    #[test]
    fn parabolic_flow_is_half_peak_area() {
        let (r, uc) = (0.01, 0.8);
        let mesh = generate_pipe_mesh(r, 0.1, 2).unwrap();
        let s = parabolic_profile(&mesh).unwrap();
        let field: Vec<Point> = s.iter().map(|s| Point::z() * (uc * s)).collect();
        let q = section_flux(&mesh, &field, &mid_plane(0.0517)).unwrap();
        let exact = uc * PI * r * r / 2.0;
        assert!((q - exact).abs() / exact < 0.01, "{q} vs {exact}");
    }

    #[test]
    fn oblique_plane_sees_same_flux() {
        let mesh = generate_pipe_mesh(0.01, 0.1, 1).unwrap();
        let field = vec![Point::new(0.0, 0.0, 1.0); mesh.num_vertices()];
        let straight = section_flux(&mesh, &field, &mid_plane(0.05)).unwrap();
        let oblique = CutPlane {
            point: [0.0, 0.0, 0.05],
            normal: [0.3, 0.0, 1.0],
            radius: None,
        };
        let q = section_flux(&mesh, &field, &oblique).unwrap();
        // divergence-free field: flux is independent of the section
        assert!((q - straight).abs() / straight < 1e-9);
    }

    #[test]
    fn missing_plane_is_empty_section() {
        let mesh = generate_pipe_mesh(0.01, 0.1, 0).unwrap();
        let field = vec![Point::zeros(); mesh.num_vertices()];
        assert!(matches!(
            section_flux(&mesh, &field, &mid_plane(0.5)),
            Err(Error::EmptySection(_))
        ));
    }

    #[test]
    fn linear_in_field_and_frames() {
        let mesh = generate_pipe_mesh(0.01, 0.1, 0).unwrap();
        let s = parabolic_profile(&mesh).unwrap();
        let w = FlowWaveform::new(WaveformKind::PeakVelocity, vec![0.0, 0.4, 0.8], vec![1.0, 0.5, 1.0]).unwrap();
        let field = crate::flowfields::pulsatile_scale(&s, &w, Point::z()).unwrap();
        let q = flow_rate(&field, &mesh, &mid_plane(0.05)).unwrap();
        assert_eq!(q.kind, WaveformKind::Volumetric);
        assert!((q.values[0] - 2.0 * q.values[1]).abs() < 1e-15);
        assert_eq!(q.values[0], q.values[2]);
    }
}
