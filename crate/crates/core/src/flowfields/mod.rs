//! Velocity fields on tetrahedral meshes: analytic pipe flows, pulsatile
//! scaling of a spatial profile, and cross-section flow rates.

pub mod io;
mod section;
mod waveform;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{FaceLabel, Point, TetMesh};
use crate::rheology::PowerLawParams;

pub use section::{flow_rate, section_flux};
pub use waveform::{inlet_peak_velocity, FlowWaveform, WaveformKind, INLET_PERIOD};

/// Per-vertex velocities over one cardiac cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    /// m/s, indexed `[frame][vertex]`
    pub frames: Vec<Vec<Point>>,
    /// s, strictly increasing within `[0, period)`
    pub frame_times: Vec<f64>,
    /// s
    pub period: f64,
}

impl VelocityField {
    pub fn new(frames: Vec<Vec<Point>>, frame_times: Vec<f64>, period: f64) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Series("a velocity field needs at least one frame".into()));
        }
        if frames.len() != frame_times.len() {
            return Err(Error::Series(format!(
                "{} frames but {} frame times",
                frames.len(),
                frame_times.len()
            )));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Series(format!("period must be positive, got {period}")));
        }
        if frame_times.iter().any(|&t| !(0.0..period).contains(&t)) {
            return Err(Error::Series("frame times must lie within [0, period)".into()));
        }
        if frame_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Series("frame times must be strictly increasing".into()));
        }
        let nv = frames[0].len();
        if frames.iter().any(|f| f.len() != nv) {
            return Err(Error::Series("frames have different vertex counts".into()));
        }
        if frames.iter().flatten().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Series("velocity contains non-finite values".into()));
        }
        Ok(VelocityField {
            frames,
            frame_times,
            period,
        })
    }

    /// Single-frame field at `t = 0`.
    pub fn steady(velocity: Vec<Point>, period: f64) -> Result<Self> {
        Self::new(vec![velocity], vec![0.0], period)
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.frames[0].len()
    }

    pub fn check_mesh(&self, mesh: &TetMesh) -> Result<()> {
        if self.num_vertices() != mesh.num_vertices() {
            return Err(Error::Series(format!(
                "field has {} vertices, mesh has {}",
                self.num_vertices(),
                mesh.num_vertices()
            )));
        }
        Ok(())
    }

    /// Index of the frame closest to `t` on the periodic time axis.
    pub fn nearest_frame(&self, t: f64) -> usize {
        let t = t.rem_euclid(self.period);
        let dist = |ft: f64| {
            let d = (ft - t).abs();
            d.min(self.period - d)
        };
        (0..self.num_frames())
            .min_by(|&a, &b| dist(self.frame_times[a]).total_cmp(&dist(self.frame_times[b])))
            .unwrap()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        VelocityField {
            frames: self
                .frames
                .iter()
                .map(|f| f.iter().map(|v| v * factor).collect())
                .collect(),
            frame_times: self.frame_times.clone(),
            period: self.period,
        }
    }
}

/// Axis, radius and length of a straight circular pipe mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeGeometry {
    pub inlet_center: Point,
    /// Unit vector from inlet to outlet.
    pub axis: Point,
    pub radius: f64,
    pub length: f64,
}

impl PipeGeometry {
    /// Detects the pipe from the inlet and outlet cap centroids; fails when
    /// the mesh has several outlets or its wall is not a circular cylinder.
    pub fn detect(mesh: &TetMesh) -> Result<Self> {
        let mut outlets: Vec<FaceLabel> = mesh
            .boundary
            .iter()
            .map(|t| t.label)
            .filter(|l| matches!(l, FaceLabel::Outlet(_)))
            .collect();
        outlets.sort_unstable();
        outlets.dedup();
        if outlets.len() != 1 {
            return Err(Error::Geometry(format!(
                "a pipe needs exactly one outlet, found {}",
                outlets.len()
            )));
        }
        let inlet = cap_centroid(mesh, FaceLabel::Inlet)?;
        let outlet = cap_centroid(mesh, outlets[0])?;
        let length = (outlet - inlet).norm();
        if !(length > 0.0) {
            return Err(Error::Geometry("inlet and outlet caps coincide".into()));
        }
        let axis = (outlet - inlet) / length;
        let wall = mesh.wall_vertices();
        let geometry = PipeGeometry {
            inlet_center: inlet,
            axis,
            radius: 0.0,
            length,
        };
        let radii: Vec<f64> = wall.iter().map(|&v| geometry.radial(&mesh.vertices[v])).collect();
        let radius = radii.iter().copied().fold(0.0, f64::max);
        let min = radii.iter().copied().fold(f64::INFINITY, f64::min);
        if !(radius > 0.0) || (radius - min) > 0.02 * radius {
            return Err(Error::Geometry(
                "wall vertices do not lie on a circular cylinder about the cap axis".into(),
            ));
        }
        Ok(PipeGeometry { radius, ..geometry })
    }

    pub fn axial(&self, p: &Point) -> f64 {
        (p - self.inlet_center).dot(&self.axis)
    }

    pub fn radial(&self, p: &Point) -> f64 {
        let d = p - self.inlet_center;
        (d - self.axis * d.dot(&self.axis)).norm()
    }
}

fn cap_centroid(mesh: &TetMesh, label: FaceLabel) -> Result<Point> {
    let mut area = 0.0;
    let mut moment = Point::zeros();
    for tri in mesh.boundary.iter().filter(|t| t.label == label) {
        let [a, b, c] = tri.vertices.map(|i| mesh.vertices[i]);
        let w = (b - a).cross(&(c - a)).norm() / 2.0;
        area += w;
        moment += (a + b + c) * (w / 3.0);
    }
    if !(area > 0.0) {
        return Err(Error::Geometry(format!("mesh has no {label:?} faces")));
    }
    Ok(moment / area)
}

/// Axial velocity of fully developed power-law flow at radius `r`.
pub fn power_law_pipe_velocity(r: f64, radius: f64, pressure_gradient: f64, m: f64, n: f64) -> f64 {
    let e = (n + 1.0) / n;
    let r = r.min(radius);
    n / (n + 1.0) * (pressure_gradient / (2.0 * m)).powf(1.0 / n) * (radius.powf(e) - r.powf(e))
}

/// Cross-section mean of [`power_law_pipe_velocity`].
pub fn power_law_mean_velocity(radius: f64, pressure_gradient: f64, m: f64, n: f64) -> f64 {
    n / (3.0 * n + 1.0) * (pressure_gradient / (2.0 * m)).powf(1.0 / n) * radius.powf((n + 1.0) / n)
}

/// Magnitude of `du/dr` at the wall.
pub fn power_law_wall_shear_rate(radius: f64, pressure_gradient: f64, m: f64, n: f64) -> f64 {
    (pressure_gradient * radius / (2.0 * m)).powf(1.0 / n)
}

/// Steady power-law flow in a straight pipe driven by `pressure_drop` (Pa)
/// over the pipe length. The field has one frame at `t = 0` and period 1 s.
pub fn poiseuille_power_law(mesh: &TetMesh, pressure_drop: f64, pl: &PowerLawParams) -> Result<VelocityField> {
    if !(pressure_drop > 0.0) || !pressure_drop.is_finite() {
        return Err(Error::InvalidInput(format!(
            "pressure drop must be positive, got {pressure_drop}"
        )));
    }
    if !(pl.m > 0.0) || !(pl.n > 0.0 && pl.n <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "power-law parameters out of range (m = {}, n = {})",
            pl.m, pl.n
        )));
    }
    let pipe = PipeGeometry::detect(mesh)?;
    let g = pressure_drop / pipe.length;
    let mut velocity: Vec<Point> = mesh
        .vertices
        .par_iter()
        .map(|p| {
            let u = power_law_pipe_velocity(pipe.radial(p), pipe.radius, g, pl.m, pl.n);
            pipe.axis * u
        })
        .collect();
    for v in mesh.wall_vertices() {
        velocity[v] = Point::zeros();
    }
    VelocityField::steady(velocity, 1.0)
}

/// Normalized parabolic profile `1 - (r/R)²` on a pipe mesh.
pub fn parabolic_profile(mesh: &TetMesh) -> Result<Vec<f64>> {
    let pipe = PipeGeometry::detect(mesh)?;
    Ok(mesh
        .vertices
        .iter()
        .map(|p| (1.0 - (pipe.radial(p) / pipe.radius).powi(2)).max(0.0))
        .collect())
}

/// `u(x, t_f) = w(t_f) S(x) d` at every waveform sample except the closing
/// periodic duplicate.
pub fn pulsatile_scale(profile: &[f64], waveform: &FlowWaveform, direction: Point) -> Result<VelocityField> {
    if profile.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::InvalidInput("profile values must lie in [0, 1]".into()));
    }
    let norm = direction.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidInput("direction must be a non-zero vector".into()));
    }
    let d = direction / norm;
    let t0 = waveform.times[0];
    let nf = waveform.times.len() - 1;
    let frames = (0..nf)
        .map(|f| {
            let w = waveform.values[f];
            profile.iter().map(|&s| d * (w * s)).collect()
        })
        .collect();
    let times = waveform.times[..nf].iter().map(|t| t - t0).collect();
    VelocityField::new(frames, times, waveform.period())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_pipe_mesh;

    /// Finite-volume Picard solve of `(1/r)(r μ u')' = -G` on `[0, R]` with
    /// `u(R) = 0` and `μ = m |u'|^(n-1)`.
    fn radial_oracle(radius: f64, g: f64, m: f64, n: f64, cells: usize) -> f64 {
        let h = radius / cells as f64;
        let mut u: Vec<f64> = (0..=cells)
            .map(|i| g / (4.0 * m) * (radius * radius - (i as f64 * h).powi(2)))
            .collect();
        for _ in 0..500 {
            let mu: Vec<f64> = (0..cells)
                .map(|i| m * ((u[i + 1] - u[i]).abs() / h).max(1e-12).powf(n - 1.0))
                .collect();
            // tridiagonal system for nodes 0..cells-1, u[cells] = 0
            let k: Vec<f64> = (0..cells).map(|i| (i as f64 + 0.5) * h * mu[i] / h).collect();
            let nn = cells;
            let (mut a, mut b, mut c, mut rhs) = (vec![0.0; nn], vec![0.0; nn], vec![0.0; nn], vec![0.0; nn]);
            for i in 0..nn {
                let west = if i == 0 { 0.0 } else { k[i - 1] };
                let east = k[i];
                a[i] = -west;
                b[i] = west + east;
                c[i] = -east;
                let vol = if i == 0 { h * h / 8.0 } else { i as f64 * h * h };
                rhs[i] = g * vol;
            }
            // Thomas algorithm
            for i in 1..nn {
                let w = a[i] / b[i - 1];
                b[i] -= w * c[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            let mut next = vec![0.0; cells + 1];
            next[nn - 1] = rhs[nn - 1] / b[nn - 1];
            for i in (0..nn - 1).rev() {
                next[i] = (rhs[i] - c[i] * next[i + 1]) / b[i];
            }
            let change = (next[0] - u[0]).abs() / next[0].abs();
            u = next;
            if change < 1e-13 {
                break;
            }
        }
        u[0]
    }

    #[test]
    fn centerline_matches_radial_oracle() {
        let (m, n, radius, length, dp) = (2.42e-2, 0.72, 0.01, 0.1, 100.0);
        let analytic = power_law_pipe_velocity(0.0, radius, dp / length, m, n);
        let oracle = radial_oracle(radius, dp / length, m, n, 4000);
        assert!((analytic - oracle).abs() / oracle < 1e-3, "{analytic} vs {oracle}");
    }

    #[test]
    fn newtonian_limit_is_parabolic() {
        let (m, radius, g) = (3.5e-3, 0.01, 1000.0);
        for r in [0.0, 0.003, 0.007, 0.01] {
            let u = power_law_pipe_velocity(r, radius, g, m, 1.0);
            let exact = g * (radius * radius - r * r) / (4.0 * m);
            assert!((u - exact).abs() <= 1e-12 * exact.abs().max(1e-30));
        }
    }

    #[test]
    fn wall_force_balance() {
        for (m, n) in [(2.42e-2, 0.72), (5.4e-2, 0.63), (3.5e-3, 1.0)] {
            let (radius, g) = (0.01, 1000.0);
            let tau = m * power_law_wall_shear_rate(radius, g, m, n).powf(n);
            assert!((tau - g * radius / 2.0).abs() < 1e-10 * g * radius);
        }
    }

    #[test]
    fn mesh_field_no_slip_and_axial() {
        let mesh = generate_pipe_mesh(0.01, 0.1, 0).unwrap();
        let pl = PowerLawParams::new(2.42e-2, 0.72, 45.0);
        let field = poiseuille_power_law(&mesh, 100.0, &pl).unwrap();
        for v in mesh.wall_vertices() {
            assert_eq!(field.frames[0][v].norm(), 0.0);
        }
        for u in &field.frames[0] {
            assert!(u.x.abs() < 1e-12 * u.norm().max(1.0) && u.y.abs() < 1e-12 * u.norm().max(1.0));
            assert!(u.z >= 0.0);
        }
    }

    #[test]
    fn box_is_not_a_pipe() {
        let mesh = crate::mesh::generate_box_mesh(Point::zeros(), Point::new(1.0, 1.0, 2.0), [2, 2, 2]).unwrap();
        let pl = PowerLawParams::new(2.42e-2, 0.72, 45.0);
        assert!(matches!(poiseuille_power_law(&mesh, 1.0, &pl), Err(Error::Geometry(_))));
    }

    #[test]
    fn pulsatile_frames() {
        let profile = vec![0.0, 0.5, 1.0];
        let constant = FlowWaveform::new(WaveformKind::PeakVelocity, vec![0.0, 0.5, 1.0], vec![1.0; 3]).unwrap();
        let field = pulsatile_scale(&profile, &constant, Point::z()).unwrap();
        assert_eq!(field.num_frames(), 2);
        for f in &field.frames {
            for (u, s) in f.iter().zip(&profile) {
                assert_eq!(*u, Point::z() * *s);
            }
        }
        let w = FlowWaveform::new(WaveformKind::PeakVelocity, vec![0.0, 0.5, 1.0], vec![2.0, 0.0, 2.0]).unwrap();
        let field = pulsatile_scale(&profile, &w, Point::x()).unwrap();
        assert!(field.frames[1].iter().all(|u| u.norm() == 0.0));
        assert!(pulsatile_scale(&[1.5], &w, Point::x()).is_err());
    }

    #[test]
    fn nearest_frame_is_periodic() {
        let field = VelocityField::new(vec![vec![Point::zeros()]; 3], vec![0.0, 0.3, 0.6], 0.9).unwrap();
        assert_eq!(field.nearest_frame(0.85), 0);
        assert_eq!(field.nearest_frame(0.4), 1);
        assert_eq!(field.nearest_frame(1.5), 2);
    }

    #[test]
    fn invalid_series_rejected() {
        let f = vec![vec![Point::zeros()]; 2];
        assert!(VelocityField::new(f.clone(), vec![0.3, 0.1], 1.0).is_err());
        assert!(VelocityField::new(f.clone(), vec![0.0, 1.0], 1.0).is_err());
        assert!(VelocityField::new(f, vec![0.0], 1.0).is_err());
    }
}
