//! Wall shear stress, oscillatory shear index and viscous energy loss from
//! nodal velocity fields, with per-segment aggregation.

mod interp;
mod io;
mod stats;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowfields::VelocityField;
use crate::mesh::{nodal_volumes, wall_normals, NodalVolumes, Point, TetMesh, WallNormals};
use crate::rheology::{apparent_viscosity_floored, PowerLawParams, DEFAULT_SHEAR_FLOOR};

pub use interp::interpolate_to_mesh;
pub use io::{read_comparison_csv, read_stats_csv, save_result_vtk, write_comparison_csv, write_stats_csv};
pub use stats::{compare_models, segment_stats, Comparison, ComparisonRow, Param, SegmentStats, StatRow, ALL_SEGMENTS};

/// Deviatoric coefficient of the dissipation term as commonly printed for
/// the energy loss rate; `1/3` gives the textbook viscous dissipation.
pub const DEFAULT_DEVIATORIC_COEFFICIENT: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ViscosityModel {
    /// Constant viscosity, Pa·s.
    Newtonian { mu: f64 },
    /// `m max(γ̇, floor)^(n-1)`.
    PowerLaw {
        m: f64,
        n: f64,
        #[serde(default = "default_floor")]
        shear_floor: f64,
    },
}

fn default_floor() -> f64 {
    DEFAULT_SHEAR_FLOOR
}

impl ViscosityModel {
    pub fn power_law(params: &PowerLawParams) -> Self {
        ViscosityModel::PowerLaw {
            m: params.m,
            n: params.n,
            shear_floor: DEFAULT_SHEAR_FLOOR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ViscosityModel::Newtonian { mu } => mu > 0.0 && mu.is_finite(),
            ViscosityModel::PowerLaw { m, n, shear_floor } => {
                m > 0.0 && m.is_finite() && n > 0.0 && n.is_finite() && shear_floor > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid viscosity model {self:?}")))
        }
    }

    /// Pa·s at shear rate `gamma`, 1/s.
    pub fn viscosity(&self, gamma: f64) -> f64 {
        match *self {
            ViscosityModel::Newtonian { mu } => mu,
            ViscosityModel::PowerLaw { m, n, shear_floor } => {
                apparent_viscosity_floored(&PowerLawParams::new(m, n, 0.0), gamma, shear_floor)
            }
        }
    }
}

/// Nodal velocity gradients `∂u_a/∂x_b` per frame, 1/s.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub frames: Vec<Vec<Matrix3<f64>>>,
}

/// Lumped-mass L2 projection of the element-wise constant gradients onto
/// the linear nodal basis: each vertex gets the volume-weighted mean of the
/// gradients of its elements.
pub fn recover_gradients(mesh: &TetMesh, velocity: &[Point]) -> Result<Vec<Matrix3<f64>>> {
    if velocity.len() != mesh.num_vertices() {
        return Err(Error::Series("velocity does not match the mesh vertex count".into()));
    }
    let mut sum = vec![Matrix3::zeros(); mesh.num_vertices()];
    let mut mass = vec![0.0; mesh.num_vertices()];
    for (t, tet) in mesh.tets.iter().enumerate() {
        let grads = mesh.shape_gradients(t);
        let g: Matrix3<f64> = tet
            .iter()
            .zip(&grads)
            .map(|(&v, dphi)| velocity[v] * dphi.transpose())
            .sum();
        let w = mesh.tet_volume(t) / 4.0;
        for &v in tet {
            sum[v] += g * w;
            mass[v] += w;
        }
    }
    Ok(sum.into_iter().zip(mass).map(|(g, m)| g / m).collect())
}

pub fn recover_gradient_field(mesh: &TetMesh, field: &VelocityField) -> Result<GradientField> {
    field.check_mesh(mesh)?;
    let frames = field
        .frames
        .par_iter()
        .map(|f| recover_gradients(mesh, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientField { frames })
}

pub fn strain_rate(grad: &Matrix3<f64>) -> Matrix3<f64> {
    (grad + grad.transpose()) / 2.0
}

/// `sqrt(2 ε̇:ε̇)`, 1/s.
pub fn shear_rate(grad: &Matrix3<f64>) -> f64 {
    let e = strain_rate(grad);
    (2.0 * e.component_mul(&e).sum()).sqrt()
}

/// Traction `2 µ ε̇ l` at each wall vertex, listed in `normals.vertices`
/// order, with µ evaluated from the local shear rate.
pub fn wss(grads: &[Matrix3<f64>], normals: &WallNormals, model: &ViscosityModel) -> Vec<Point> {
    normals
        .vertices
        .iter()
        .zip(&normals.normals)
        .map(|(&v, l)| {
            let g = &grads[v];
            let mu = model.viscosity(shear_rate(g));
            strain_rate(g) * l * (2.0 * mu)
        })
        .collect()
}

/// `½ (1 − |∫t dt| / ∫|t| dt)` per vertex with the trapezoidal rule over
/// the cycle closed at `t0 + period`. Vertices without shear get 0.
pub fn osi(series: &[Vec<Point>], frame_times: &[f64], period: f64) -> Result<Vec<f64>> {
    if series.len() < 2 || series.len() != frame_times.len() {
        return Err(Error::Series("OSI needs at least two frames with one time each".into()));
    }
    let t0 = frame_times[0];
    if !(period > frame_times[frame_times.len() - 1] - t0) || frame_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Series("frame times must increase within one period".into()));
    }
    let n = series[0].len();
    if series.iter().any(|s| s.len() != n) {
        return Err(Error::Series("frames have different vertex counts".into()));
    }
    let mut times = frame_times.to_vec();
    times.push(t0 + period);
    let frames = series.len();
    Ok((0..n)
        .map(|v| {
            let mut vec_int = Point::zeros();
            let mut mag_int = 0.0;
            for k in 0..frames {
                let (a, b) = (series[k][v], series[(k + 1) % frames][v]);
                let dt = times[k + 1] - times[k];
                vec_int += (a + b) * (dt / 2.0);
                mag_int += (a.norm() + b.norm()) * (dt / 2.0);
            }
            if mag_int > 0.0 {
                (0.5 * (1.0 - vec_int.norm() / mag_int)).clamp(0.0, 0.5)
            } else {
                0.0
            }
        })
        .collect())
}

/// `2 µ D:D V` per vertex in µW, `D = ε̇ − c (∇·u) I`.
pub fn energy_loss_rate(
    grads: &[Matrix3<f64>],
    model: &ViscosityModel,
    volumes: &NodalVolumes,
    deviatoric_coefficient: f64,
) -> Vec<f64> {
    grads
        .iter()
        .zip(&volumes.volume)
        .map(|(g, vol)| {
            let mu = model.viscosity(shear_rate(g));
            let d = strain_rate(g) - Matrix3::identity() * (deviatoric_coefficient * g.trace());
            2.0 * mu * d.component_mul(&d).sum() * vol * 1e6
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateOptions {
    pub deviatoric_coefficient: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            deviatoric_coefficient: DEFAULT_DEVIATORIC_COEFFICIENT,
        }
    }
}

/// Everything estimated from one velocity field under one viscosity model.
#[derive(Debug, Clone, PartialEq)]
pub struct HemoResult {
    pub model: ViscosityModel,
    pub frame_times: Vec<f64>,
    pub period: f64,
    /// Sorted wall vertex ids; the per-wall arrays follow this order.
    pub wall_vertices: Vec<usize>,
    /// Pa, per frame per wall vertex.
    pub wss: Vec<Vec<Point>>,
    pub wss_mag: Vec<Vec<f64>>,
    /// Per wall vertex.
    pub osi: Vec<f64>,
    /// µW, per frame per vertex.
    pub el_rate: Vec<Vec<f64>>,
    /// Pa·s, per frame per vertex.
    pub mu_apparent: Vec<Vec<f64>>,
}

/// Mesh quantities shared by every estimate on the same mesh.
#[derive(Debug, Clone)]
pub struct MeshGeometry {
    pub normals: WallNormals,
    pub volumes: NodalVolumes,
}

impl MeshGeometry {
    pub fn new(mesh: &TetMesh) -> Result<Self> {
        Ok(MeshGeometry {
            normals: wall_normals(mesh)?,
            volumes: nodal_volumes(mesh),
        })
    }
}

/// Hemodynamic parameters from precomputed gradients, so that several
/// viscosity models can share them.
pub fn estimate_from_gradients(
    geometry: &MeshGeometry,
    grads: &GradientField,
    field: &VelocityField,
    model: &ViscosityModel,
    options: &EstimateOptions,
) -> Result<HemoResult> {
    model.validate()?;
    let wss_frames: Vec<Vec<Point>> = grads
        .frames
        .par_iter()
        .map(|g| wss(g, &geometry.normals, model))
        .collect();
    let osi = if wss_frames.len() >= 2 {
        osi(&wss_frames, &field.frame_times, field.period)?
    } else {
        vec![0.0; geometry.normals.len()]
    };
    let el_rate = grads
        .frames
        .par_iter()
        .map(|g| energy_loss_rate(g, model, &geometry.volumes, options.deviatoric_coefficient))
        .collect();
    let mu_apparent = grads
        .frames
        .iter()
        .map(|f| f.iter().map(|g| model.viscosity(shear_rate(g))).collect())
        .collect();
    Ok(HemoResult {
        model: *model,
        frame_times: field.frame_times.clone(),
        period: field.period,
        wall_vertices: geometry.normals.vertices.clone(),
        wss_mag: wss_frames
            .iter()
            .map(|f| f.iter().map(|t| t.norm()).collect())
            .collect(),
        wss: wss_frames,
        osi,
        el_rate,
        mu_apparent,
    })
}

pub fn estimate(
    mesh: &TetMesh,
    field: &VelocityField,
    model: &ViscosityModel,
    options: &EstimateOptions,
) -> Result<HemoResult> {
    let geometry = MeshGeometry::new(mesh)?;
    let grads = recover_gradient_field(mesh, field)?;
    estimate_from_gradients(&geometry, &grads, field, model, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_ball_mesh, generate_box_mesh};
    use proptest::prelude::*;

    fn cube() -> TetMesh {
        generate_box_mesh(Point::new(-1.0, -1.0, -1.0), Point::new(1.0, 1.0, 1.0), [4, 4, 4]).unwrap()
    }

    fn interior(mesh: &TetMesh) -> Vec<usize> {
        let wall: std::collections::HashSet<usize> = mesh.boundary.iter().flat_map(|b| b.vertices).collect();
        (0..mesh.num_vertices()).filter(|v| !wall.contains(v)).collect()
    }

    #[test]
    fn linear_fields_have_exact_gradients() {
        let mesh = generate_ball_mesh(1.0, 2, 3).unwrap();
        let a = Matrix3::new(0.3, -1.2, 0.5, 2.0, 0.1, -0.7, -0.4, 0.9, 1.5);
        let u: Vec<Point> = mesh
            .vertices
            .iter()
            .map(|x| a * x + Point::new(1.0, 2.0, 3.0))
            .collect();
        let g = recover_gradients(&mesh, &u).unwrap();
        // a linear field has the same gradient in every element, so even
        // boundary vertices reproduce it
        for gv in &g {
            assert!((gv - a).amax() < 1e-10);
        }
    }

    #[test]
    fn rigid_rotation_has_no_shear() {
        let mesh = cube();
        let w = Point::new(0.2, -0.5, 1.0);
        let u: Vec<Point> = mesh.vertices.iter().map(|x| w.cross(x)).collect();
        let g = recover_gradients(&mesh, &u).unwrap();
        for v in interior(&mesh) {
            assert!(shear_rate(&g[v]) < 1e-12);
        }
        let field = VelocityField::new(vec![u.clone(), u], vec![0.0, 0.5], 1.0).unwrap();
        let model = ViscosityModel::Newtonian { mu: 3.5e-3 };
        let r = estimate(&mesh, &field, &model, &EstimateOptions::default()).unwrap();
        assert!(r.wss_mag.iter().flatten().all(|m| *m < 1e-12));
        assert!(r.el_rate.iter().flatten().all(|e| *e < 1e-18));
        assert!(r.osi.iter().all(|o| *o == 0.0 || *o < 1e-6));
    }

    #[test]
    fn simple_shear_dissipation() {
        let mesh = cube();
        let gamma = 4.0;
        let u: Vec<Point> = mesh
            .vertices
            .iter()
            .map(|x| Point::new(gamma * x.y, 0.0, 0.0))
            .collect();
        let g = recover_gradients(&mesh, &u).unwrap();
        let vols = nodal_volumes(&mesh);
        let mu = 3.5e-3;
        let el = energy_loss_rate(&g, &ViscosityModel::Newtonian { mu }, &vols, 2.0 / 3.0);
        for (e, v) in el.iter().zip(&vols.volume) {
            let exact = mu * gamma * gamma * v * 1e6;
            assert!((e - exact).abs() <= 1e-12 * exact);
        }
        assert!((shear_rate(&g[0]) - gamma).abs() < 1e-12);
    }

    #[test]
    fn osi_limits() {
        let times = vec![0.0, 0.25, 0.5, 0.75];
        let v = Point::new(1.0, -2.0, 0.5);
        let steady = vec![vec![v]; 4];
        assert_eq!(osi(&steady, &times, 1.0).unwrap()[0], 0.0);
        let reversing = vec![vec![v], vec![v], vec![-v], vec![-v]];
        let o = osi(&reversing, &times, 1.0).unwrap()[0];
        assert!((o - 0.5).abs() < 1e-12);
        let zero = vec![vec![Point::zeros()]; 4];
        assert_eq!(osi(&zero, &times, 1.0).unwrap()[0], 0.0);
        assert!(osi(&steady[..1], &times[..1], 1.0).is_err());
        assert!(osi(&steady, &times, 0.75).is_err());
    }

    #[test]
    fn viscosity_scaling() {
        let mesh = cube();
        let u: Vec<Point> = mesh
            .vertices
            .iter()
            .map(|x| Point::new(x.y * x.y, x.z, -x.x * x.y))
            .collect();
        let u2: Vec<Point> = u.iter().map(|v| -v * 0.5).collect();
        let field = VelocityField::new(vec![u, u2], vec![0.0, 0.4], 1.0).unwrap();
        let opts = EstimateOptions::default();
        let a = estimate(&mesh, &field, &ViscosityModel::Newtonian { mu: 3e-3 }, &opts).unwrap();
        let b = estimate(&mesh, &field, &ViscosityModel::Newtonian { mu: 6e-3 }, &opts).unwrap();
        for (x, y) in a.wss_mag.iter().flatten().zip(b.wss_mag.iter().flatten()) {
            assert!((2.0 * x - y).abs() <= 1e-12 * y.abs());
        }
        for (x, y) in a.el_rate.iter().flatten().zip(b.el_rate.iter().flatten()) {
            assert!((2.0 * x - y).abs() <= 1e-12 * y.abs());
        }
        assert_eq!(a.osi, b.osi);
    }

    #[test]
    fn power_law_floor() {
        let model = ViscosityModel::PowerLaw {
            m: 0.02,
            n: 0.7,
            shear_floor: 0.1,
        };
        assert_eq!(model.viscosity(0.0), model.viscosity(0.1));
        assert!((model.viscosity(10.0) - 0.02 * 10f64.powf(-0.3)).abs() < 1e-15);
        let parsed: ViscosityModel = toml::from_str("kind = \"power_law\"\nm = 0.02\nn = 0.7").unwrap();
        assert_eq!(parsed, model);
    }

    fn smooth_series(coeffs: &[(f64, f64, f64)], times: &[f64], period: f64) -> Vec<Vec<Point>> {
        let w = 2.0 * std::f64::consts::PI / period;
        times
            .iter()
            .map(|&t| {
                let mut p = Point::zeros();
                for (a, &(c0, c1, c2)) in coeffs.iter().enumerate() {
                    p[a % 3] += c0 + c1 * (w * t).cos() + c2 * (2.0 * w * t).sin();
                }
                vec![p]
            })
            .collect()
    }

    proptest! {
        #[test]
        fn osi_in_range_and_matches_dense_quadrature(
            coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 3),
        ) {
            let period = 0.9;
            let frames = 40;
            let times: Vec<f64> = (0..frames).map(|k| k as f64 * period / frames as f64).collect();
            let o = osi(&smooth_series(&coeffs, &times, period), &times, period).unwrap()[0];
            prop_assert!((0.0..=0.5).contains(&o));
            let dense: Vec<f64> = (0..frames * 8).map(|k| k as f64 * period / (frames * 8) as f64).collect();
            let od = osi(&smooth_series(&coeffs, &dense, period), &dense, period).unwrap()[0];
            prop_assert!((o - od).abs() < 1e-3, "{} vs {}", o, od);
        }
    }
}
