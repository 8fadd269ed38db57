//! K-space and image containers: a flat file of little-endian `f32`
//! (re, im) pairs, encode after encode in storage order, plus a JSON sidecar
//! `<name>.json` with the grid, encodes, timing and sequence parameters.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ImageVolume, KSpaceData};
use crate::error::{Error, Result};
use crate::flowfields::io::{read_json, sidecar_path, write_json};

#[derive(Serialize, Deserialize)]
struct Sidecar<T> {
    format: String,
    params_hash: String,
    #[serde(flatten)]
    meta: T,
}

const FORMAT: &str = "complex64-le";

fn write_samples(path: &Path, samples: &[Vec<Complex64>]) -> Result<()> {
    let bytes: Vec<u8> = samples
        .iter()
        .flatten()
        .flat_map(|c| [c.re as f32, c.im as f32])
        .flat_map(f32::to_le_bytes)
        .collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_samples(path: &Path, encodes: usize, len: usize) -> Result<Vec<Vec<Complex64>>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != encodes * len * 8 {
        return Err(Error::parse(path, "file size does not match the sidecar grid"));
    }
    let values: Vec<Complex64> = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..].try_into().unwrap());
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    Ok(values.chunks_exact(len.max(1)).map(<[_]>::to_vec).collect())
}

fn check_sidecar<T>(path: &Path, sidecar: &Sidecar<T>, hash: String) -> Result<()> {
    if sidecar.format != FORMAT {
        return Err(Error::parse(
            path,
            format!("unsupported sample format '{}'", sidecar.format),
        ));
    }
    if sidecar.params_hash != hash {
        return Err(Error::parse(
            path,
            "sequence parameters do not match their recorded hash",
        ));
    }
    Ok(())
}

pub fn save_kspace(path: &Path, k: &KSpaceData) -> Result<()> {
    write_samples(path, &k.samples)?;
    let sidecar = Sidecar {
        format: FORMAT.into(),
        params_hash: k.params.hash(),
        meta: k,
    };
    write_json(&sidecar_path(path), &sidecar)
}

pub fn load_kspace(path: &Path) -> Result<KSpaceData> {
    let sidecar: Sidecar<KSpaceData> = read_json(&sidecar_path(path))?;
    check_sidecar(path, &sidecar, sidecar.meta.params.hash())?;
    let mut k = sidecar.meta;
    if k.dims != k.params.grid_dims() || k.sample_times.len() != k.dims[0] {
        return Err(Error::parse(path, "grid does not match the sequence parameters"));
    }
    k.samples = read_samples(path, k.encodes.len(), k.len())?;
    Ok(k)
}

pub fn save_image(path: &Path, img: &ImageVolume) -> Result<()> {
    write_samples(path, &img.data)?;
    let sidecar = Sidecar {
        format: FORMAT.into(),
        params_hash: img.params.hash(),
        meta: img,
    };
    write_json(&sidecar_path(path), &sidecar)
}

pub fn load_image(path: &Path) -> Result<ImageVolume> {
    let sidecar: Sidecar<ImageVolume> = read_json(&sidecar_path(path))?;
    check_sidecar(path, &sidecar, sidecar.meta.params.hash())?;
    let mut img = sidecar.meta;
    if img.dims != img.params.matrix {
        return Err(Error::parse(path, "image grid does not match the sequence matrix"));
    }
    img.data = read_samples(path, img.encodes.len(), img.len())?;
    Ok(img)
}
