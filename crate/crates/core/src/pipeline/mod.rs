//! File-based pipeline: rheology fit, flow field, MR synthesis,
//! reconstruction, hemodynamic estimation, model comparison and report.
//!
//! Every stage reads its inputs from and writes its outputs to one output
//! directory, so stages can run one at a time or chained by [`Pipeline::run`].
//!
//! ```text
//! rheology/params.csv, rheology/newtonian.json
//! mesh.vtk, fields/frame_NNNN.vtk
//! windkessel/flow.csv, windkessel/pressure.csv
//! kspace/phase_NN.bin (+ .json), images/phase_NN.bin (+ .json)
//! fields_mri/frame_NNNN.vtk
//! hemo/<model>.vtk, stats/<model>.csv, compare/<model>.csv
//! report/report.md, report/<param>.svg
//! manifest.json
//! ```

mod config;
mod manifest;
mod report;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowfields::io::{
    load_velocity_series, read_json, read_waveform, save_velocity_series, write_json, write_waveform,
};
use crate::flowfields::{
    flow_rate, inlet_peak_velocity, parabolic_profile, pulsatile_scale, PipeGeometry, VelocityField, WaveformKind,
};
use crate::hemodynamics::{
    compare_models, estimate_from_gradients, interpolate_to_mesh, read_stats_csv, recover_gradient_field,
    save_result_vtk, segment_stats, write_comparison_csv, write_stats_csv, MeshGeometry, Param, ViscosityModel,
    ALL_SEGMENTS,
};
use crate::mesh::{generate_pipe_mesh, load_mesh, save_mesh, segment_labels, CutPlane, SegmentLabels, TetMesh};
use crate::mri::{
    add_noise, load_image, load_kspace, phase_to_velocity, reconstruct, save_image, save_kspace, synthesize_signal,
    SequenceParams, ALL_ENCODES,
};
use crate::rheology::{
    base_curves, fit_for_hct, io::read_params, io::write_params, newtonian_equivalent, PowerLawParams,
};
use crate::windkessel::simulate_windkessel;

pub use config::{
    FlowConfig, MeshConfig, ModelsConfig, MriConfig, PipeConfig, RheologyConfig, RunConfig, SegmentConfig,
    WindkesselConfig,
};
pub use manifest::{write_manifest, Manifest};
pub use report::{render_report, svg_bar_chart};

/// Name of the fitted power-law model, the reference of every comparison.
pub const REFERENCE_MODEL: &str = "power_law";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RheologyOutcome {
    pub power_law: PowerLawParams,
    /// Pa·s
    pub newtonian_fit: f64,
    pub range: [f64; 2],
}

pub struct Pipeline {
    pub config: RunConfig,
    pub out: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Files in `dir` with the given extension, sorted by name.
fn list_files(dir: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == extension))
        .collect();
    files.sort();
    Ok(files)
}

impl Pipeline {
    pub fn new(config: RunConfig, out: PathBuf) -> Self {
        Pipeline { config, out }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    /// Fitted curve at the configured hematocrit and its Newtonian
    /// equivalent; writes `rheology/`.
    pub fn fit_rheology(&self) -> Result<RheologyOutcome> {
        let run = || -> Result<RheologyOutcome> {
            let cfg = &self.config.rheology;
            let curves = match &cfg.base_curves {
                Some(p) => read_params(p)?,
                None => base_curves(),
            };
            let power_law = fit_for_hct(&curves, cfg.hct, &cfg.shear_grid)?;
            let [g0, g1] = cfg.newtonian_range;
            let nf = newtonian_equivalent(&power_law, g0, g1)?;
            let outcome = RheologyOutcome {
                power_law,
                newtonian_fit: nf.mu,
                range: cfg.newtonian_range,
            };
            create_dir(&self.path("rheology"))?;
            write_params(&self.path("rheology/params.csv"), &[power_law])?;
            write_json(&self.path("rheology/newtonian.json"), &outcome)?;
            Ok(outcome)
        };
        run().map_err(|e| e.in_stage("fit-rheology"))
    }

    fn load_rheology(&self) -> Result<RheologyOutcome> {
        let p = self.path("rheology/newtonian.json");
        if p.is_file() {
            read_json(&p)
        } else {
            self.fit_rheology()
        }
    }

    /// Mesh and ground-truth velocity; writes `mesh.vtk` and `fields/`.
    pub fn prepare_flow(&self) -> Result<(TetMesh, VelocityField)> {
        let run = || -> Result<(TetMesh, VelocityField)> {
            let cfg = &self.config;
            let mesh = match &cfg.mesh.path {
                Some(p) => load_mesh(p)?,
                None => generate_pipe_mesh(cfg.mesh.pipe.radius, cfg.mesh.pipe.length, cfg.mesh.pipe.level)?,
            };
            let field = if cfg.flow.frames.is_empty() {
                let waveform = match &cfg.flow.waveform {
                    Some(p) => read_waveform(p, WaveformKind::PeakVelocity)?,
                    None => inlet_peak_velocity(),
                };
                let scale = cfg.flow.peak_velocity / waveform.max();
                let waveform = waveform.scaled(scale, WaveformKind::PeakVelocity);
                let pipe = PipeGeometry::detect(&mesh)?;
                pulsatile_scale(&parabolic_profile(&mesh)?, &waveform, pipe.axis)?
            } else {
                load_velocity_series(&cfg.flow.frames, &mesh, cfg.flow.period)?
            };
            create_dir(&self.out)?;
            save_mesh(&self.path("mesh.vtk"), &mesh)?;
            save_velocity_series(&self.path("fields"), &mesh, &field)?;
            Ok((mesh, field))
        };
        run().map_err(|e| e.in_stage("flow"))
    }

    fn load_mesh_output(&self) -> Result<TetMesh> {
        load_mesh(&self.path("mesh.vtk"))
    }

    fn sequence(&self, mesh: &TetMesh) -> SequenceParams {
        let mut seq = self.config.sequence.clone();
        if self.config.mri.center_on_mesh {
            let (lo, hi) = mesh.bounding_box();
            let c = (lo + hi) / 2.0;
            seq.fov_center = [c.x, c.y, c.z];
        }
        seq
    }

    /// Noisy k-space of every cardiac phase; writes `kspace/`. Phase `p`
    /// draws its noise from seed `seed + p`.
    pub fn synth_mri(&self) -> Result<()> {
        let (mesh, field) = self.prepare_flow()?;
        let run = || -> Result<()> {
            let seq = self.sequence(&mesh);
            let m0 = vec![1.0; mesh.num_vertices()];
            create_dir(&self.path("kspace"))?;
            for p in 0..seq.cardiac_phases {
                let t = seq.phase_time(p);
                let frame = field.nearest_frame(t);
                let mut k = synthesize_signal(&mesh, &m0, &field, &seq, &ALL_ENCODES, frame)?;
                k.phase_time = t;
                let noisy = add_noise(
                    &k,
                    self.config.mri.sigma_fraction,
                    self.config.seed.wrapping_add(p as u64),
                )?;
                save_kspace(&self.path(&format!("kspace/phase_{p:02}.bin")), &noisy)?;
                log::info!("synthesized phase {p} (frame {frame})");
            }
            Ok(())
        };
        run().map_err(|e| e.in_stage("synth-mri"))
    }

    /// Images of every stored k-space; writes `images/`.
    pub fn reconstruct(&self) -> Result<()> {
        let run = || -> Result<()> {
            create_dir(&self.path("images"))?;
            let files = list_files(&self.path("kspace"), "bin")?;
            if files.is_empty() {
                return Err(Error::InvalidInput("no k-space files to reconstruct".into()));
            }
            for f in files {
                let img = reconstruct(&load_kspace(&f)?)?;
                save_image(&self.path("images").join(f.file_name().unwrap()), &img)?;
            }
            Ok(())
        };
        run().map_err(|e| e.in_stage("reconstruct"))
    }

    fn labels(&self, mesh: &TetMesh) -> Result<SegmentLabels> {
        let seg = &self.config.segments;
        let cuts = if seg.cuts.is_empty() {
            let pipe = PipeGeometry::detect(mesh).map_err(|e| {
                Error::Config(format!(
                    "no segment cuts configured and the mesh is not a straight pipe: {e}"
                ))
            })?;
            [0.25, 0.5, 0.75]
                .iter()
                .map(|f| {
                    let p = pipe.inlet_center + pipe.axis * (f * pipe.length);
                    CutPlane {
                        point: [p.x, p.y, p.z],
                        normal: [pipe.axis.x, pipe.axis.y, pipe.axis.z],
                        radius: None,
                    }
                })
                .collect()
        } else {
            seg.cuts.clone()
        };
        segment_labels(mesh, &cuts, &seg.exclusions)
    }

    /// The reference power law followed by the compared models.
    pub fn models(&self, rheology: &RheologyOutcome) -> Vec<(String, ViscosityModel)> {
        let pl = rheology.power_law;
        let mut models = vec![(
            REFERENCE_MODEL.to_string(),
            ViscosityModel::PowerLaw {
                m: pl.m,
                n: pl.n,
                shear_floor: self.config.rheology.shear_floor,
            },
        )];
        if self.config.models.newtonian_fit {
            models.push((
                "newtonian_fit".into(),
                ViscosityModel::Newtonian {
                    mu: rheology.newtonian_fit,
                },
            ));
        }
        for &mu in &self.config.models.literature {
            models.push((format!("newtonian_{mu}"), ViscosityModel::Newtonian { mu }));
        }
        models
    }

    /// Decodes the images, interpolates them onto the mesh and evaluates
    /// every model; writes `fields_mri/`, `hemo/` and `stats/`.
    pub fn estimate(&self) -> Result<()> {
        let rheology = self.load_rheology()?;
        let run = || -> Result<()> {
            let mesh = self.load_mesh_output()?;
            let files = list_files(&self.path("images"), "bin")?;
            if files.is_empty() {
                return Err(Error::InvalidInput("no images to estimate from".into()));
            }
            let period = self
                .ground_truth_period()
                .ok_or_else(|| Error::Series("cannot read the cardiac period from the ground-truth frames".into()))?;
            let phases = files
                .iter()
                .map(|f| {
                    let img = load_image(f)?;
                    phase_to_velocity(&img, img.params.venc)
                })
                .collect::<Result<Vec<_>>>()?;
            let field = interpolate_to_mesh(&phases, &mesh, period)?;
            save_velocity_series(&self.path("fields_mri"), &mesh, &field)?;

            let labels = self.labels(&mesh)?;
            let geometry = MeshGeometry::new(&mesh)?;
            let grads = recover_gradient_field(&mesh, &field)?;
            create_dir(&self.path("hemo"))?;
            create_dir(&self.path("stats"))?;
            let mut peak = 0;
            for (name, model) in self.models(&rheology) {
                let result = estimate_from_gradients(&geometry, &grads, &field, &model, &self.config.estimate)?;
                let stats = segment_stats(&result, &labels)?;
                if name == REFERENCE_MODEL {
                    peak = systolic_frame(&stats);
                }
                save_result_vtk(&self.path(&format!("hemo/{name}.vtk")), &mesh, &result, peak)?;
                write_stats_csv(&self.path(&format!("stats/{name}.csv")), &stats)?;
            }
            Ok(())
        };
        run().map_err(|e| e.in_stage("estimate"))
    }

    fn ground_truth_period(&self) -> Option<f64> {
        let mesh = self.load_mesh_output().ok()?;
        let files = list_files(&self.path("fields"), "vtk").ok()?;
        load_velocity_series(&files, &mesh, self.config.flow.period)
            .ok()
            .map(|f| f.period)
    }

    /// Outlet pressure driven by the ground-truth flow through the
    /// configured section; writes `windkessel/`.
    pub fn windkessel(&self) -> Result<()> {
        let run = || -> Result<()> {
            let wk = &self.config.windkessel;
            let mesh = self.load_mesh_output()?;
            let files = list_files(&self.path("fields"), "vtk")?;
            let field = load_velocity_series(&files, &mesh, self.config.flow.period)?;
            let plane = match wk.plane {
                Some(p) => p,
                None => {
                    let pipe = PipeGeometry::detect(&mesh)?;
                    let p = pipe.inlet_center + pipe.axis * (pipe.length / 2.0);
                    CutPlane {
                        point: [p.x, p.y, p.z],
                        normal: [pipe.axis.x, pipe.axis.y, pipe.axis.z],
                        radius: None,
                    }
                }
            };
            // m³/s to cm³/s for the CGS outlet parameters
            let q = flow_rate(&field, &mesh, &plane)?.scaled(1e6, WaveformKind::Volumetric);
            let trace = simulate_windkessel(&wk.params, &q, wk.dt, wk.cycles)?;
            create_dir(&self.path("windkessel"))?;
            write_waveform(&self.path("windkessel/flow.csv"), &q)?;
            trace.write_csv(&self.path("windkessel/pressure.csv"))
        };
        run().map_err(|e| e.in_stage("windkessel"))
    }

    /// Every model against the reference; writes `compare/`.
    pub fn compare(&self) -> Result<()> {
        let run = || -> Result<()> {
            let stats_dir = self.path("stats");
            let reference = read_stats_csv(&stats_dir.join(format!("{REFERENCE_MODEL}.csv")))?;
            create_dir(&self.path("compare"))?;
            for f in list_files(&stats_dir, "csv")? {
                let name = f.file_stem().unwrap().to_string_lossy().to_string();
                if name == REFERENCE_MODEL {
                    continue;
                }
                let cmp = compare_models(&reference, &read_stats_csv(&f)?)?;
                write_comparison_csv(&self.path(&format!("compare/{name}.csv")), &cmp)?;
            }
            Ok(())
        };
        run().map_err(|e| e.in_stage("compare"))
    }

    pub fn report(&self) -> Result<()> {
        render_report(&self.out).map(|_| ()).map_err(|e| e.in_stage("report"))
    }

    pub fn write_manifest(&self, stages: &[&str]) -> Result<Manifest> {
        write_manifest(&self.out, &self.config, stages).map_err(|e| e.in_stage("manifest"))
    }

    /// All stages in order, then the manifest.
    pub fn run(&self) -> Result<Manifest> {
        self.fit_rheology()?;
        self.synth_mri()?;
        if self.config.windkessel.enabled {
            self.windkessel()?;
        }
        self.reconstruct()?;
        self.estimate()?;
        self.compare()?;
        self.report()?;
        let mut stages = vec!["fit-rheology", "flow", "synth-mri"];
        if self.config.windkessel.enabled {
            stages.push("windkessel");
        }
        stages.extend(["reconstruct", "estimate", "compare", "report"]);
        self.write_manifest(&stages)
    }
}

/// Frame with the largest cross-segment mean WSS.
pub fn systolic_frame(stats: &crate::hemodynamics::SegmentStats) -> usize {
    stats
        .rows
        .iter()
        .filter(|r| r.segment == ALL_SEGMENTS && r.param == Param::Wss)
        .filter_map(|r| Some((r.frame?, r.mean?)))
        .fold(
            (0, f64::NEG_INFINITY),
            |best, (f, m)| if m > best.1 { (f, m) } else { best },
        )
        .0
}

/// Frame with the smallest cross-segment mean WSS.
pub fn diastolic_frame(stats: &crate::hemodynamics::SegmentStats) -> usize {
    stats
        .rows
        .iter()
        .filter(|r| r.segment == ALL_SEGMENTS && r.param == Param::Wss)
        .filter_map(|r| Some((r.frame?, r.mean?)))
        .fold(
            (0, f64::INFINITY),
            |best, (f, m)| if m < best.1 { (f, m) } else { best },
        )
        .0
}
