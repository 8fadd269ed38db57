//! Velocity frame files and waveform CSVs.
//!
//! A frame is either a VTK grid with a `velocity` point-vector array and
//! `time=<s> period=<s>` in its title line, or a flat little-endian f64 file
//! (vertex-major `x y z`) with a JSON sidecar `<name>.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FlowWaveform, VelocityField, WaveformKind};
use crate::error::{Error, Result};
use crate::mesh::{load_grid, save_mesh_with_point_data, Point, PointField, TetMesh};

pub const VELOCITY_ARRAY: &str = "velocity";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub time: f64,
    #[serde(default)]
    pub period: Option<f64>,
    pub num_vertices: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

pub fn frame_title(time: f64, period: f64) -> String {
    format!("time={time} period={period}")
}

fn parse_title(title: &str) -> (Option<f64>, Option<f64>) {
    let mut time = None;
    let mut period = None;
    for token in title.split_whitespace() {
        if let Some(v) = token.strip_prefix("time=") {
            time = v.parse().ok();
        } else if let Some(v) = token.strip_prefix("period=") {
            period = v.parse().ok();
        }
    }
    (time, period)
}

pub fn save_frame_vtk(path: &Path, mesh: &TetMesh, velocity: &[Point], time: f64, period: f64) -> Result<()> {
    save_mesh_with_point_data(
        path,
        mesh,
        &frame_title(time, period),
        &[PointField::vectors(VELOCITY_ARRAY, velocity)],
    )
}

pub fn save_frame_bin(path: &Path, velocity: &[Point], time: f64, period: f64) -> Result<()> {
    let bytes: Vec<u8> = velocity
        .iter()
        .flat_map(|v| [v.x, v.y, v.z])
        .flat_map(f64::to_le_bytes)
        .collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let meta = FrameMeta {
        time,
        period: Some(period),
        num_vertices: velocity.len(),
    };
    write_json(&sidecar_path(path), &meta)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

/// Writes every frame of a field as `frame_<k>.vtk` in `dir`.
pub fn save_velocity_series(dir: &Path, mesh: &TetMesh, field: &VelocityField) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::with_capacity(field.num_frames());
    for (k, (frame, &t)) in field.frames.iter().zip(&field.frame_times).enumerate() {
        let path = dir.join(format!("frame_{k:04}.vtk"));
        save_frame_vtk(&path, mesh, frame, t, field.period)?;
        paths.push(path);
    }
    Ok(paths)
}

fn read_frame(path: &Path, num_vertices: usize) -> Result<(Vec<Point>, Option<f64>, Option<f64>)> {
    let is_bin = path.extension().is_some_and(|e| e == "bin" || e == "f64");
    if is_bin {
        let meta: FrameMeta = read_json(&sidecar_path(path))?;
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() != meta.num_vertices * 24 {
            return Err(Error::parse(path, "file size does not match the sidecar vertex count"));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let v: Vec<Point> = values.chunks_exact(3).map(|c| Point::new(c[0], c[1], c[2])).collect();
        check_count(path, v.len(), num_vertices)?;
        Ok((v, Some(meta.time), meta.period))
    } else {
        let (_, title, fields) = load_grid(path)?;
        let field = fields
            .iter()
            .find(|f| f.name == VELOCITY_ARRAY)
            .and_then(PointField::as_vectors)
            .ok_or_else(|| Error::parse(path, "no 'velocity' vector array"))?;
        check_count(path, field.len(), num_vertices)?;
        let (time, period) = parse_title(&title);
        Ok((field, time, period))
    }
}

fn check_count(path: &Path, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Series(format!(
            "{}: {} vertices, mesh has {}",
            path.display(),
            got,
            expected
        )));
    }
    Ok(())
}

/// Assembles a time-sorted field from one file per frame. Frames without an
/// embedded time are only accepted alone (at `t = 0`); the period falls back
/// to `default_period` when no file declares one.
pub fn load_velocity_series(paths: &[PathBuf], mesh: &TetMesh, default_period: Option<f64>) -> Result<VelocityField> {
    if paths.is_empty() {
        return Err(Error::Series("no velocity frames given".into()));
    }
    let mut frames = Vec::with_capacity(paths.len());
    let mut period: Option<f64> = None;
    for path in paths {
        let (v, time, p) = read_frame(path, mesh.num_vertices())?;
        let time = match (time, paths.len()) {
            (Some(t), _) => t,
            (None, 1) => 0.0,
            (None, _) => return Err(Error::Series(format!("{}: frame has no embedded time", path.display()))),
        };
        if let Some(p) = p {
            match period {
                Some(q) if (q - p).abs() > 1e-12 * q => {
                    return Err(Error::Series(format!(
                        "{}: period {p} disagrees with {q}",
                        path.display()
                    )))
                }
                _ => period = Some(p),
            }
        }
        frames.push((time, v));
    }
    frames.sort_by(|a, b| a.0.total_cmp(&b.0));
    let period = period
        .or(default_period)
        .ok_or_else(|| Error::Series("no period declared in the frames or the configuration".into()))?;
    let (times, frames): (Vec<f64>, Vec<Vec<Point>>) = frames.into_iter().unzip();
    VelocityField::new(frames, times, period)
}

#[derive(Serialize, Deserialize)]
struct WaveformRow {
    t: f64,
    value: f64,
}

/// CSV `t,value`; the last row must close the cycle.
pub fn read_waveform(path: &Path, kind: WaveformKind) -> Result<FlowWaveform> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    let rows = reader
        .deserialize::<WaveformRow>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::parse(path, e))?;
    FlowWaveform::new(
        kind,
        rows.iter().map(|r| r.t).collect(),
        rows.iter().map(|r| r.value).collect(),
    )
}

pub fn write_waveform(path: &Path, waveform: &FlowWaveform) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    for (&t, &value) in waveform.times.iter().zip(&waveform.values) {
        writer
            .serialize(WaveformRow { t, value })
            .map_err(|e| Error::parse(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
