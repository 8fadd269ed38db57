use std::path::Path;

use serde::{de::DeserializeOwned, Serialize};

use super::{Comparison, HemoResult, SegmentStats};
use crate::error::{Error, Result};
use crate::flowfields::io::frame_title;
use crate::mesh::{save_mesh_with_point_data, Point, PointField, TetMesh};

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::parse(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::parse(path, e))
}

/// CSV `segment,frame,param,mean,std`; missing values are empty fields.
pub fn write_stats_csv(path: &Path, stats: &SegmentStats) -> Result<()> {
    write_rows(path, &stats.rows)
}

pub fn read_stats_csv(path: &Path) -> Result<SegmentStats> {
    Ok(SegmentStats { rows: read_rows(path)? })
}

pub fn write_comparison_csv(path: &Path, cmp: &Comparison) -> Result<()> {
    write_rows(path, &cmp.rows)
}

pub fn read_comparison_csv(path: &Path) -> Result<Comparison> {
    Ok(Comparison { rows: read_rows(path)? })
}

/// Point data of one frame: `wss_vector`, `wss_mag` and `osi` (zero away
/// from the wall), `el_rate` and `mu_apparent`.
pub fn save_result_vtk(path: &Path, mesh: &TetMesh, result: &HemoResult, frame: usize) -> Result<()> {
    if frame >= result.wss.len() {
        return Err(Error::InvalidInput(format!("frame {frame} out of range")));
    }
    let n = mesh.num_vertices();
    if result.el_rate[frame].len() != n {
        return Err(Error::InvalidInput("result does not match the mesh".into()));
    }
    let mut wss = vec![Point::zeros(); n];
    let mut mag = vec![0.0; n];
    let mut osi = vec![0.0; n];
    for (i, &v) in result.wall_vertices.iter().enumerate() {
        wss[v] = result.wss[frame][i];
        mag[v] = result.wss_mag[frame][i];
        osi[v] = result.osi[i];
    }
    save_mesh_with_point_data(
        path,
        mesh,
        &frame_title(result.frame_times[frame], result.period),
        &[
            PointField::vectors("wss_vector", &wss),
            PointField::scalars("wss_mag", mag),
            PointField::scalars("osi", osi),
            PointField::scalars("el_rate", result.el_rate[frame].clone()),
            PointField::scalars("mu_apparent", result.mu_apparent[frame].clone()),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowfields::{parabolic_profile, VelocityField};
    use crate::hemodynamics::{estimate, segment_stats, EstimateOptions, Param, StatRow, ViscosityModel};
    use crate::mesh::{generate_pipe_mesh, load_grid, SegmentLabel, SegmentLabels};

    #[test]
    fn stats_csv_round_trip_with_missing_values() {
        let stats = SegmentStats {
            rows: vec![
                StatRow {
                    segment: "AAo".into(),
                    frame: Some(3),
                    param: Param::Wss,
                    mean: Some(1.0 / 3.0),
                    std: Some(0.1),
                },
                StatRow {
                    segment: "AArch".into(),
                    frame: None,
                    param: Param::Osi,
                    mean: None,
                    std: None,
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_stats_csv(&p, &stats).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("segment,frame,param,mean,std\n"));
        assert!(text.contains("AArch,,osi,,\n"));
        assert_eq!(read_stats_csv(&p).unwrap(), stats);
    }

    #[test]
    fn vtk_export_has_all_arrays() {
        let mesh = generate_pipe_mesh(0.01, 0.05, 0).unwrap();
        let s = parabolic_profile(&mesh).unwrap();
        let u: Vec<Point> = s.iter().map(|s| Point::z() * *s).collect();
        let field = VelocityField::steady(u, 1.0).unwrap();
        let r = estimate(
            &mesh,
            &field,
            &ViscosityModel::Newtonian { mu: 3.5e-3 },
            &EstimateOptions::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.vtk");
        save_result_vtk(&p, &mesh, &r, 0).unwrap();
        let (_, _, fields) = load_grid(&p).unwrap();
        let names: Vec<&str> = fields.iter().map(|f| f.name.as_str()).collect();
        for n in ["wss_vector", "wss_mag", "osi", "el_rate", "mu_apparent"] {
            assert!(names.contains(&n), "{names:?}");
        }
        let labels = SegmentLabels {
            labels: vec![SegmentLabel::AscendingAorta; mesh.num_vertices()],
        };
        let st = segment_stats(&r, &labels).unwrap();
        assert!(st.get("AAo", Some(0), Param::Wss).unwrap().mean.unwrap() > 0.0);
    }
}
