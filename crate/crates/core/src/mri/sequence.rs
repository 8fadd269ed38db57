//! Echo time of a gradient-echo phase-contrast readout built from shortest
//! trapezoids under amplitude and slew limits.
//!
//! Gradient train after excitation: velocity-encoding bipolar, then the
//! readout prewinder played together with the phase encodes, then the
//! readout ramp and flat top. When the trailing bipolar lobe and the
//! following block are both full-amplitude trapezoids they share one ramp.

use serde::{Deserialize, Serialize};

use super::SequenceParams;
use crate::error::{Error, Result};

/// Proton gyromagnetic ratio over 2π, Hz/T.
pub const GYROMAGNETIC_RATIO: f64 = 42.577478e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTimings {
    /// s
    pub echo_time: f64,
    /// Time of every readout sample after excitation, s.
    pub sample_times: Vec<f64>,
    /// s
    pub dwell: f64,
    /// Duration of one bipolar lobe, s.
    pub bipolar_lobe: f64,
    /// Prewinder / phase-encode block, s.
    pub encode_block: f64,
    /// T/m
    pub readout_gradient: f64,
}

/// Shortest trapezoid (or triangle) with the given area; returns the
/// duration and whether it reaches the amplitude limit.
fn shortest_lobe(area: f64, g_max: f64, slew: f64) -> (f64, bool) {
    if area <= g_max * g_max / slew {
        (2.0 * (area / slew).sqrt(), false)
    } else {
        (area / g_max + g_max / slew, true)
    }
}

/// Shortest bipolar pair of opposite lobes with first moment `m1`; returns
/// the duration of one lobe and whether it is a full-amplitude trapezoid.
fn bipolar_lobe(m1: f64, g_max: f64, slew: f64) -> (f64, bool) {
    let r = g_max / slew;
    if 2.0 * g_max.powi(3) / (slew * slew) >= m1 {
        let peak = (m1 * slew * slew / 2.0).cbrt();
        (2.0 * peak / slew, false)
    } else {
        // G (f + r)(f + 2r) = m1
        let flat = (-3.0 * r + (r * r + 4.0 * m1 / g_max).sqrt()) / 2.0;
        (flat + 2.0 * r, true)
    }
}

pub fn sequence_timings(params: &SequenceParams) -> Result<SequenceTimings> {
    params.validate()?;
    let g_max = params.max_gradient * 1e-3;
    let slew = params.slew_rate;
    let f_adc = params.adc_bandwidth * 1e3;
    let dwell = 1.0 / f_adc;
    let n_ro = params.grid_dims()[0];
    let fov_ro = params.grid_fov()[0];

    let m1 = 1.0 / (2.0 * GYROMAGNETIC_RATIO * params.venc);
    let (lobe, lobe_full) = bipolar_lobe(m1, g_max, slew);

    let g_ro = 1.0 / (GYROMAGNETIC_RATIO * fov_ro * dwell);
    if g_ro > g_max {
        return Err(Error::InfeasibleSequence(format!(
            "readout needs {:.2} mT/m, limit is {:.2} mT/m",
            g_ro * 1e3,
            params.max_gradient
        )));
    }
    let ramp_ro = g_ro / slew;
    let t_ro = n_ro as f64 * dwell;

    let prewinder = shortest_lobe(g_ro * (ramp_ro + t_ro) / 2.0, g_max, slew);
    let voxel = params.voxel_m();
    let k_max = 1.0 / (2.0 * voxel[1].min(voxel[2]));
    let phase = shortest_lobe(k_max / GYROMAGNETIC_RATIO, g_max, slew);
    let block = if prewinder.0 >= phase.0 { prewinder } else { phase };
    let overlap = if lobe_full && block.1 { g_max / slew } else { 0.0 };

    let echo_time = 2.0 * lobe + block.0 - overlap + ramp_ro + t_ro / 2.0;
    if !(echo_time.is_finite() && echo_time > 0.0) {
        return Err(Error::InfeasibleSequence(format!(
            "echo time {echo_time} is not realizable"
        )));
    }
    let centre = (n_ro / 2) as f64;
    let sample_times = (0..n_ro).map(|i| echo_time + (i as f64 - centre) * dwell).collect();
    Ok(SequenceTimings {
        echo_time,
        sample_times,
        dwell,
        bipolar_lobe: lobe,
        encode_block: block.0,
        readout_gradient: g_ro,
    })
}
