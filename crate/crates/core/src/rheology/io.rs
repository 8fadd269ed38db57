//! CSV exchange formats: measurements `shear_rate,viscosity,hct` and fitted
//! parameters `hct,m,n,r2,rmse`. SI units throughout.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PowerLawParams, ViscositySample};
use crate::error::{Error, Result};

pub fn read_measurements(path: &Path) -> Result<Vec<ViscositySample>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    let samples = reader
        .deserialize::<ViscositySample>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::parse(path, e))?;
    for s in &samples {
        s.validate().map_err(|e| Error::parse(path, e))?;
    }
    Ok(samples)
}

pub fn write_measurements(path: &Path, samples: &[ViscositySample]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    for s in samples {
        writer.serialize(s).map_err(|e| Error::parse(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Groups measurements by hematocrit, sorted ascending.
pub fn group_by_hct(samples: &[ViscositySample]) -> Vec<(f64, Vec<ViscositySample>)> {
    let mut groups: Vec<(f64, Vec<ViscositySample>)> = Vec::new();
    for s in samples {
        match groups.iter_mut().find(|(h, _)| *h == s.hct) {
            Some((_, g)) => g.push(*s),
            None => groups.push((s.hct, vec![*s])),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    groups
}

#[derive(Serialize, Deserialize)]
struct ParamsRow {
    hct: f64,
    m: f64,
    n: f64,
    r2: f64,
    rmse: f64,
}

pub fn write_params(path: &Path, params: &[PowerLawParams]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    for p in params {
        writer
            .serialize(ParamsRow {
                hct: p.hct,
                m: p.m,
                n: p.n,
                r2: p.fit_r2,
                rmse: p.fit_rmse,
            })
            .map_err(|e| Error::parse(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_params(path: &Path) -> Result<Vec<PowerLawParams>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    let mut out = Vec::new();
    for row in reader.deserialize::<ParamsRow>() {
        let row = row.map_err(|e| Error::parse(path, e))?;
        out.push(PowerLawParams {
            m: row.m,
            n: row.n,
            hct: row.hct,
            fit_r2: row.r2,
            fit_rmse: row.rmse,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measurement_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let samples = vec![
            ViscositySample::new(12.0, 0.012, 45.0),
            ViscositySample::new(23.0, 0.0098, 45.0),
            ViscositySample::new(12.0, 0.02, 70.0),
        ];
        write_measurements(&path, &samples).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("shear_rate,viscosity,hct\n"));
        let back = read_measurements(&path).unwrap();
        assert_eq!(back, samples);
        let groups = group_by_hct(&back);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].1.len(), 2);
    }

    #[test]
    fn params_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_params(&path, &[PowerLawParams::new(0.0242, 0.72, 45.0)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("hct,m,n,r2,rmse\n"));
        assert_eq!(read_params(&path).unwrap()[0].m, 0.0242);
    }

    #[test]
    fn invalid_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "shear_rate,viscosity,hct\n-1,0.01,45\n").unwrap();
        assert!(read_measurements(&path).is_err());
    }
}
