use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::NoiseInfo;
use super::{sequence_timings, Encode, SequenceParams};
use crate::error::{Error, Result};
use crate::flowfields::VelocityField;
use crate::mesh::{Point, TetMesh};

/// Complex samples on the full Cartesian grid for one cardiac phase.
///
/// Sample `(i, j, l)` (readout, phase, partition) of an encode sits at flat
/// index `(l * ny + j) * nro + i` and was acquired `sample_times[i]` after
/// excitation; its wave vector is `(idx - dims / 2) / grid_fov`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSpaceData {
    pub dims: [usize; 3],
    pub encodes: Vec<Encode>,
    #[serde(skip)]
    pub samples: Vec<Vec<Complex64>>,
    pub sample_times: Vec<f64>,
    pub echo_time: f64,
    pub phase_time: f64,
    pub noise: Option<NoiseInfo>,
    pub params: SequenceParams,
}

impl KSpaceData {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        (l * self.dims[1] + j) * self.dims[0] + i
    }

    /// Signed grid offsets of a flat index from the k-space centre.
    pub fn k_index(&self, flat: usize) -> [i64; 3] {
        let [n0, n1, n2] = self.dims;
        let i = flat % n0;
        let j = (flat / n0) % n1;
        let l = flat / (n0 * n1);
        [
            i as i64 - (n0 / 2) as i64,
            j as i64 - (n1 / 2) as i64,
            l as i64 - (n2 / 2) as i64,
        ]
    }

    /// Wave vector of a flat index, 1/m.
    pub fn k_vector(&self, flat: usize) -> [f64; 3] {
        let fov = self.params.grid_fov();
        let k = self.k_index(flat);
        [0, 1, 2].map(|a| k[a] as f64 / fov[a])
    }

    pub fn encode_samples(&self, encode: Encode) -> Option<&[Complex64]> {
        let e = self.encodes.iter().position(|&x| x == encode)?;
        Some(&self.samples[e])
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().flatten().map(|s| s.norm()).fold(0.0, f64::max)
    }
}

// degree-2 Gauss rule on the tetrahedron
const GAUSS_A: f64 = 0.585_410_196_624_968_5;
const GAUSS_B: f64 = 0.138_196_601_125_010_5;

struct QuadPoint {
    position: Point,
    velocity: Point,
    weight: f64,
}

fn quadrature_points(mesh: &TetMesh, m0: &[f64], velocity: &[Point], centre: Point) -> Vec<QuadPoint> {
    let mut points = Vec::with_capacity(mesh.tets.len() * 4);
    for (t, tet) in mesh.tets.iter().enumerate() {
        let w = mesh.tet_volume(t) / 4.0;
        for q in 0..4 {
            let lambda: [f64; 4] = std::array::from_fn(|i| if i == q { GAUSS_A } else { GAUSS_B });
            let mut position = Point::zeros();
            let mut vel = Point::zeros();
            let mut m = 0.0;
            for (l, &v) in lambda.iter().zip(tet) {
                position += mesh.vertices[v] * *l;
                vel += velocity[v] * *l;
                m += m0[v] * l;
            }
            if m > 0.0 {
                points.push(QuadPoint {
                    position: position - centre,
                    velocity: vel,
                    weight: w * m,
                });
            }
        }
    }
    points
}

fn validate_inputs(mesh: &TetMesh, m0: &[f64], field: &VelocityField, frame: usize) -> Result<()> {
    field.check_mesh(mesh)?;
    if m0.len() != mesh.num_vertices() {
        return Err(Error::InvalidInput(format!(
            "M0 has {} values, mesh has {} vertices",
            m0.len(),
            mesh.num_vertices()
        )));
    }
    if m0.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
        return Err(Error::InvalidInput("M0 must be non-negative and finite".into()));
    }
    if frame >= field.num_frames() {
        return Err(Error::InvalidInput(format!(
            "frame {frame} out of range for {} frames",
            field.num_frames()
        )));
    }
    Ok(())
}

/// Evaluates the signal equation for each requested encode on the full grid
/// using velocity frame `frame`.
///
/// Each spin moves on a straight line during the readout,
/// `r(t) = r + u (t - t_k)`, with `t` the sample time after excitation at
/// `t_k`. Encoded velocity components add a phase `-π u_a / VENC`; the
/// reference encode carries none.
pub fn synthesize_signal(
    mesh: &TetMesh,
    m0: &[f64],
    field: &VelocityField,
    params: &SequenceParams,
    encodes: &[Encode],
    frame: usize,
) -> Result<KSpaceData> {
    validate_inputs(mesh, m0, field, frame)?;
    if encodes.is_empty() {
        return Err(Error::InvalidInput("no encodes requested".into()));
    }
    let timings = sequence_timings(params)?;
    let points = quadrature_points(mesh, m0, &field.frames[frame], Point::from(params.fov_center));

    let dims = params.grid_dims();
    let fov = params.grid_fov();
    let [nro, ny, nz] = dims;
    let te = timings.echo_time;
    let dt = timings.dwell;
    let dk = 1.0 / fov[0];
    let i0 = -((nro / 2) as f64);

    let amplitudes: Vec<Vec<Complex64>> = points
        .iter()
        .map(|p| {
            encodes
                .iter()
                .map(|e| match e.axis() {
                    None => Complex64::new(p.weight, 0.0),
                    Some(a) => Complex64::from_polar(p.weight, -PI * p.velocity[a] / params.venc),
                })
                .collect()
        })
        .collect();
    let decay: Vec<f64> = timings
        .sample_times
        .iter()
        .map(|t| (-t * 1e3 / params.t2_star).exp())
        .collect();

    let lines: Vec<Vec<Vec<Complex64>>> = (0..ny * nz)
        .into_par_iter()
        .map(|line| {
            let ky = (line % ny) as f64 - (ny / 2) as f64;
            let kz = (line / ny) as f64 - (nz / 2) as f64;
            let (ky, kz) = (ky / fov[1], kz / fov[2]);
            let mut acc = vec![vec![Complex64::new(0.0, 0.0); nro]; encodes.len()];
            for (p, amp) in points.iter().zip(&amplitudes) {
                let (r, u) = (p.position, p.velocity);
                // phase(i') = a + b i' + c i'^2 with i' the offset from the echo
                let a = -2.0 * PI * (ky * (r.y + u.y * te) + kz * (r.z + u.z * te));
                let b = -2.0 * PI * (dk * (r.x + u.x * te) + dt * (ky * u.y + kz * u.z));
                let c = -2.0 * PI * dk * u.x * dt;
                let mut z = Complex64::from_polar(1.0, a + b * i0 + c * i0 * i0);
                let mut step = Complex64::from_polar(1.0, b + c * (2.0 * i0 + 1.0));
                let turn = Complex64::from_polar(1.0, 2.0 * c);
                for i in 0..nro {
                    for (e, w) in amp.iter().enumerate() {
                        acc[e][i] += w * z;
                    }
                    z *= step;
                    step *= turn;
                }
            }
            for row in &mut acc {
                for (s, d) in row.iter_mut().zip(&decay) {
                    *s *= d;
                }
            }
            acc
        })
        .collect();

    let mut samples = vec![Vec::with_capacity(nro * ny * nz); encodes.len()];
    for line in lines {
        for (e, row) in line.into_iter().enumerate() {
            samples[e].extend(row);
        }
    }
    Ok(KSpaceData {
        dims,
        encodes: encodes.to_vec(),
        samples,
        sample_times: timings.sample_times,
        echo_time: te,
        phase_time: field.frame_times[frame],
        noise: None,
        params: params.clone(),
    })
}

/// One k-space per cardiac phase, each using the velocity frame nearest to
/// the phase time.
pub fn synthesize_phases(
    mesh: &TetMesh,
    m0: &[f64],
    field: &VelocityField,
    params: &SequenceParams,
    encodes: &[Encode],
) -> Result<Vec<KSpaceData>> {
    (0..params.cardiac_phases)
        .map(|p| {
            let t = params.phase_time(p);
            let mut k = synthesize_signal(mesh, m0, field, params, encodes, field.nearest_frame(t))?;
            k.phase_time = t;
            Ok(k)
        })
        .collect()
}
