//! C ABI over the hemoflow library.
//!
//! Every function returns an [`HfStatus`]. On failure a message is kept per
//! thread and can be read with [`hf_last_error_message`]. Arrays are passed
//! as pointer plus length; vectors are packed `x y z` triples. Meshes are
//! opaque handles owned by the caller and released with [`hf_mesh_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hemoflow::flowfields::{FlowWaveform, VelocityField, WaveformKind};
use hemoflow::hemodynamics::{estimate, osi, EstimateOptions, ViscosityModel};
use hemoflow::mesh::{generate_pipe_mesh, load_mesh, wall_normals, Point, TetMesh};
use hemoflow::rheology::{
    base_curves, fit_for_hct, fit_power_law, newtonian_equivalent, PowerLawParams, ViscositySample,
};
use hemoflow::windkessel::{simulate_windkessel, WindkesselParams, AORTIC_OUTLETS};
use hemoflow::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numerical = 3,
    Io = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HfPowerLaw {
    /// Pa·s^n
    pub m: f64,
    pub n: f64,
    /// percent
    pub hct: f64,
    pub r2: f64,
    /// Pa·s
    pub rmse: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfViscosityKind {
    Newtonian = 0,
    PowerLaw = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HfViscosity {
    pub kind: HfViscosityKind,
    /// Pa·s, Newtonian only.
    pub mu: f64,
    /// Power law only.
    pub m: f64,
    pub n: f64,
    /// 1/s
    pub shear_floor: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HfWindkessel {
    pub rp: f64,
    pub rd: f64,
    pub c: f64,
    pub pd0: f64,
}

/// Opaque tetrahedral mesh.
pub struct HfMesh {
    mesh: TetMesh,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure {
    status: HfStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_numerical() {
            HfStatus::Numerical
        } else if matches!(e, Error::Io { .. }) {
            HfStatus::Io
        } else {
            HfStatus::InvalidInput
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn fail(status: HfStatus, message: impl Into<String>) -> Failure {
    Failure {
        status,
        message: message.into(),
    }
}

fn null(name: &str) -> Failure {
    fail(HfStatus::NullPointer, format!("{name} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HfStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err(fail(HfStatus::Panic, "internal panic")));
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| e.borrow_mut().clear());
            HfStatus::Ok
        }
        Err(f) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = f.message);
            f.status
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(p: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    p.write(value);
    Ok(())
}

fn points(packed: &[f64]) -> Vec<Point> {
    packed.chunks_exact(3).map(|c| Point::new(c[0], c[1], c[2])).collect()
}

impl From<PowerLawParams> for HfPowerLaw {
    fn from(p: PowerLawParams) -> Self {
        HfPowerLaw {
            m: p.m,
            n: p.n,
            hct: p.hct,
            r2: p.fit_r2,
            rmse: p.fit_rmse,
        }
    }
}

impl HfViscosity {
    fn model(&self) -> ViscosityModel {
        match self.kind {
            HfViscosityKind::Newtonian => ViscosityModel::Newtonian { mu: self.mu },
            HfViscosityKind::PowerLaw => ViscosityModel::PowerLaw {
                m: self.m,
                n: self.n,
                shear_floor: self.shear_floor,
            },
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes of the calling thread's last error message, without the
/// terminating NUL; 0 after a successful call.
#[no_mangle]
pub extern "C" fn hf_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `len - 1` bytes).
///
/// # Safety
/// `buf` must be valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn hf_last_error_message(buf: *mut c_char, len: usize) -> HfStatus {
    if buf.is_null() || len == 0 {
        return HfStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let n = msg.len().min(len - 1);
        ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
        *buf.add(n) = 0;
    });
    HfStatus::Ok
}

/// Weighted least-squares power-law fit of `count` viscosity samples taken
/// at hematocrit `hct`.
///
/// # Safety
/// `shear_rate` and `viscosity` must hold `count` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hf_fit_power_law(
    shear_rate: *const f64,
    viscosity: *const f64,
    count: usize,
    hct: f64,
    out: *mut HfPowerLaw,
) -> HfStatus {
    guard(|| {
        let g = slice(shear_rate, count, "shear_rate")?;
        let mu = slice(viscosity, count, "viscosity")?;
        let samples: Vec<ViscositySample> = g
            .iter()
            .zip(mu)
            .map(|(&g, &m)| ViscositySample::new(g, m, hct))
            .collect();
        let fit = fit_power_law(&samples, None)?;
        write(out, fit.into(), "out")
    })
}

/// Power law at any hematocrit between the bundled base curves.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hf_fit_for_hct(hct: f64, out: *mut HfPowerLaw) -> HfStatus {
    guard(|| {
        let grid = hemoflow::rheology::default_shear_grid();
        let fit = fit_for_hct(&base_curves(), hct, &grid)?;
        write(out, fit.into(), "out")
    })
}

/// Mean power-law viscosity over `[gamma0, gamma1]`, Pa·s.
///
/// # Safety
/// `out_mu` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hf_newtonian_equivalent(
    m: f64,
    n: f64,
    gamma0: f64,
    gamma1: f64,
    out_mu: *mut f64,
) -> HfStatus {
    guard(|| {
        let fit = newtonian_equivalent(&PowerLawParams::new(m, n, f64::NAN), gamma0, gamma1)?;
        write(out_mu, fit.mu, "out_mu")
    })
}

/// Bundled outlet parameters (CGS), `index` 0 to 3.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hf_windkessel_outlet(index: usize, out: *mut HfWindkessel) -> HfStatus {
    guard(|| {
        let p = AORTIC_OUTLETS
            .get(index)
            .ok_or_else(|| fail(HfStatus::InvalidInput, format!("outlet index {index} out of range")))?;
        write(
            out,
            HfWindkessel {
                rp: p.rp,
                rd: p.rd,
                c: p.c,
                pd0: p.pd0,
            },
            "out",
        )
    })
}

/// Outlet pressure over the last of `cycles` periods of the flow waveform
/// `(times, flow)`, whose last sample closes the cycle. Writes the number of
/// samples to `out_len`; with `out_p_wk` null only the length is reported.
///
/// # Safety
/// `times` and `flow` must hold `count` values; `out_p_wk` must hold
/// `capacity` values when non-null.
#[no_mangle]
pub unsafe extern "C" fn hf_windkessel_simulate(
    params: *const HfWindkessel,
    times: *const f64,
    flow: *const f64,
    count: usize,
    dt: f64,
    cycles: usize,
    out_p_wk: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> HfStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let q = FlowWaveform::new(
            WaveformKind::Volumetric,
            slice(times, count, "times")?.to_vec(),
            slice(flow, count, "flow")?.to_vec(),
        )?;
        let params = WindkesselParams {
            rp: p.rp,
            rd: p.rd,
            c: p.c,
            pd0: p.pd0,
        };
        let trace = simulate_windkessel(&params, &q, dt, cycles)?;
        write(out_len, trace.len(), "out_len")?;
        if out_p_wk.is_null() {
            return Ok(());
        }
        if capacity < trace.len() {
            return Err(fail(
                HfStatus::BufferTooSmall,
                format!("{} samples do not fit a buffer of {capacity}", trace.len()),
            ));
        }
        slice_mut(out_p_wk, trace.len(), "out_p_wk")?.copy_from_slice(&trace.p_wk);
        Ok(())
    })
}

/// Oscillatory shear index of `points` WSS vectors over `frames` frames
/// (frame-major packed triples) sampled at `times` within `period`.
///
/// # Safety
/// `wss` must hold `frames * points * 3` values, `times` `frames` values and
/// `out` `points` values.
#[no_mangle]
pub unsafe extern "C" fn hf_osi(
    wss: *const f64,
    frames: usize,
    points_per_frame: usize,
    times: *const f64,
    period: f64,
    out: *mut f64,
) -> HfStatus {
    guard(|| {
        let data = slice(wss, frames * points_per_frame * 3, "wss")?;
        let series: Vec<Vec<Point>> = data.chunks_exact(points_per_frame * 3).map(points).collect();
        let values = osi(&series, slice(times, frames, "times")?, period)?;
        slice_mut(out, points_per_frame, "out")?.copy_from_slice(&values);
        Ok(())
    })
}

/// Loads a legacy VTK tetrahedral mesh.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hf_mesh_load(path: *const c_char, out: *mut *mut HfMesh) -> HfStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(HfStatus::InvalidInput, "path is not UTF-8"))?;
        let mesh = load_mesh(Path::new(path))?;
        write(out, Box::into_raw(Box::new(HfMesh { mesh })), "out")
    })
}

/// Straight pipe along +z with the inlet at z = 0; `level` refines it.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hf_mesh_pipe(radius: f64, length: f64, level: u32, out: *mut *mut HfMesh) -> HfStatus {
    guard(|| {
        let mesh = generate_pipe_mesh(radius, length, level)?;
        write(out, Box::into_raw(Box::new(HfMesh { mesh })), "out")
    })
}

/// # Safety
/// `mesh` must come from this library and not be used afterwards; null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn hf_mesh_free(mesh: *mut HfMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Vertex and wall-vertex counts.
///
/// # Safety
/// `mesh` must be a live handle; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn hf_mesh_counts(
    mesh: *const HfMesh,
    out_vertices: *mut usize,
    out_wall_vertices: *mut usize,
) -> HfStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        if !out_vertices.is_null() {
            out_vertices.write(m.num_vertices());
        }
        if !out_wall_vertices.is_null() {
            out_wall_vertices.write(m.wall_vertices().len());
        }
        Ok(())
    })
}

/// Mesh coordinates as packed triples.
///
/// # Safety
/// `out` must hold `3 * vertices` values.
#[no_mangle]
pub unsafe extern "C" fn hf_mesh_vertices(mesh: *const HfMesh, out: *mut f64) -> HfStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        let dst = slice_mut(out, 3 * m.num_vertices(), "out")?;
        for (d, p) in dst.chunks_exact_mut(3).zip(&m.vertices) {
            d.copy_from_slice(&[p.x, p.y, p.z]);
        }
        Ok(())
    })
}

/// Sorted wall vertex ids; per-wall outputs follow this order.
///
/// # Safety
/// `out` must hold one value per wall vertex.
#[no_mangle]
pub unsafe extern "C" fn hf_mesh_wall_vertices(mesh: *const HfMesh, out: *mut usize) -> HfStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        let wall = wall_normals(m)?.vertices;
        slice_mut(out, wall.len(), "out")?.copy_from_slice(&wall);
        Ok(())
    })
}

/// WSS magnitude (Pa) at every wall vertex and the total viscous energy loss
/// rate (µW) of one steady velocity field.
///
/// # Safety
/// `velocity` must hold `3 * vertices` values and `out_wss` one value per
/// wall vertex; `out_el_total` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hf_estimate_steady(
    mesh: *const HfMesh,
    velocity: *const f64,
    viscosity: HfViscosity,
    out_wss: *mut f64,
    out_el_total: *mut f64,
) -> HfStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        let u = points(slice(velocity, 3 * m.num_vertices(), "velocity")?);
        let field = VelocityField::steady(u, 1.0)?;
        let result = estimate(m, &field, &viscosity.model(), &EstimateOptions::default())?;
        let wss = &result.wss_mag[0];
        slice_mut(out_wss, wss.len(), "out_wss")?.copy_from_slice(wss);
        write(out_el_total, result.el_rate[0].iter().sum(), "out_el_total")
    })
}
