use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hemodynamics::EstimateOptions;
use crate::mesh::{CutPlane, Exclusion};
use crate::mri::{SequenceParams, DEFAULT_SIGMA_FRACTION};
use crate::rheology::{default_shear_grid, DEFAULT_SHEAR_FLOOR, LITERATURE_NEWTONIAN};
use crate::windkessel::{WindkesselParams, AORTIC_OUTLETS};

/// Everything a pipeline run needs. Every key has a default, so an empty
/// file runs the generated pipe phantom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Relative to the working directory.
    pub output: PathBuf,
    pub mesh: MeshConfig,
    pub flow: FlowConfig,
    pub rheology: RheologyConfig,
    pub sequence: SequenceParams,
    pub mri: MriConfig,
    pub segments: SegmentConfig,
    pub models: ModelsConfig,
    pub estimate: EstimateOptions,
    pub windkessel: WindkesselConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            output: PathBuf::from("hemoflow-out"),
            mesh: MeshConfig::default(),
            flow: FlowConfig::default(),
            rheology: RheologyConfig::default(),
            sequence: SequenceParams::default(),
            mri: MriConfig::default(),
            segments: SegmentConfig::default(),
            models: ModelsConfig::default(),
            estimate: EstimateOptions::default(),
            windkessel: WindkesselConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    /// VTK tetrahedral mesh; a straight pipe is generated when absent.
    pub path: Option<PathBuf>,
    pub pipe: PipeConfig,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            path: None,
            pipe: PipeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipeConfig {
    /// m
    pub radius: f64,
    /// m
    pub length: f64,
    pub level: u32,
}

impl Default for PipeConfig {
    fn default() -> Self {
        PipeConfig {
            radius: 0.008,
            length: 0.04,
            level: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Velocity frame files (VTK or `.bin` with sidecar). When empty, a
    /// parabolic profile is driven by the inlet waveform.
    pub frames: Vec<PathBuf>,
    /// s; used when the frames carry no period.
    pub period: Option<f64>,
    /// Peak-velocity waveform CSV `t,value`; the bundled one when absent.
    pub waveform: Option<PathBuf>,
    /// Scale applied to the waveform, so the bundled one peaks here, m/s.
    pub peak_velocity: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            frames: Vec::new(),
            period: None,
            waveform: None,
            peak_velocity: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RheologyConfig {
    /// Percent.
    pub hct: f64,
    /// Parameter CSV `hct,m,n,r2,rmse`; the bundled curves when absent.
    pub base_curves: Option<PathBuf>,
    /// 1/s
    pub shear_grid: Vec<f64>,
    /// Shear-rate interval of the Newtonian equivalent, 1/s.
    pub newtonian_range: [f64; 2],
    /// 1/s
    pub shear_floor: f64,
}

impl Default for RheologyConfig {
    fn default() -> Self {
        RheologyConfig {
            hct: 45.0,
            base_curves: None,
            shear_grid: default_shear_grid(),
            newtonian_range: [12.0, 123.0],
            shear_floor: DEFAULT_SHEAR_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MriConfig {
    pub sigma_fraction: f64,
    /// Replace `sequence.fov_center` by the centre of the mesh bounding box.
    pub center_on_mesh: bool,
}

impl Default for MriConfig {
    fn default() -> Self {
        MriConfig {
            sigma_fraction: DEFAULT_SIGMA_FRACTION,
            center_on_mesh: true,
        }
    }
}

/// Cut planes in segment order. With no cuts, a straight pipe is split into
/// four equal bands along its axis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    pub cuts: Vec<CutPlane>,
    pub exclusions: Vec<Exclusion>,
}

/// Models compared against the fitted power law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    /// Include the mean-stress Newtonian equivalent of the fitted curve.
    pub newtonian_fit: bool,
    /// Constant viscosities, Pa·s.
    pub literature: Vec<f64>,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        ModelsConfig {
            newtonian_fit: true,
            literature: LITERATURE_NEWTONIAN.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindkesselConfig {
    pub enabled: bool,
    /// CGS units.
    pub params: WindkesselParams,
    pub cycles: usize,
    /// s
    pub dt: f64,
    /// Section whose flow drives the outlet; the pipe mid-plane by default.
    pub plane: Option<CutPlane>,
}

impl Default for WindkesselConfig {
    fn default() -> Self {
        WindkesselConfig {
            enabled: true,
            params: AORTIC_OUTLETS[3],
            cycles: 5,
            dt: 1e-3,
            plane: None,
        }
    }
}

impl RunConfig {
    /// Parses a TOML file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.mesh.path.as_mut() {
            fix(p);
        }
        self.flow.frames.iter_mut().for_each(fix);
        if let Some(p) = self.flow.waveform.as_mut() {
            fix(p);
        }
        if let Some(p) = self.rheology.base_curves.as_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut files: Vec<&PathBuf> = self.flow.frames.iter().collect();
        files.extend(self.mesh.path.iter());
        files.extend(self.flow.waveform.iter());
        files.extend(self.rheology.base_curves.iter());
        for f in files {
            if !f.is_file() {
                return Err(Error::Config(format!("referenced file {} does not exist", f.display())));
            }
        }
        if !self.flow.frames.is_empty() && self.mesh.path.is_none() {
            return Err(Error::Config(
                "velocity frames need the mesh they were computed on".into(),
            ));
        }
        self.sequence
            .validate()
            .map_err(|e| Error::Config(format!("sequence: {e}")))?;
        let checks = [
            ("mri.sigma_fraction", self.mri.sigma_fraction >= 0.0),
            ("rheology.shear_floor", self.rheology.shear_floor > 0.0),
            (
                "rheology.newtonian_range",
                self.rheology.newtonian_range[1] > self.rheology.newtonian_range[0],
            ),
            ("rheology.shear_grid", self.rheology.shear_grid.len() >= 2),
            ("flow.peak_velocity", self.flow.peak_velocity > 0.0),
            ("models.literature", self.models.literature.iter().all(|m| *m > 0.0)),
            ("windkessel.cycles", self.windkessel.cycles > 0),
            ("windkessel.dt", self.windkessel.dt > 0.0),
        ];
        for (key, ok) in checks {
            if !ok {
                return Err(Error::Config(format!("invalid value for {key}")));
            }
        }
        if self.segments.cuts.len() > 3 {
            return Err(Error::Config("at most three cut planes separate four segments".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, leaving out the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = PathBuf::new();
        hex::encode(Sha256::digest(
            serde_json::to_vec(&canonical).expect("config serializes"),
        ))
    }
}
