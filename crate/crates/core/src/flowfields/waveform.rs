use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::interp_linear;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveformKind {
    /// Peak (centreline) velocity, m/s.
    PeakVelocity,
    /// Volumetric flow rate, m³/s.
    Volumetric,
}

/// Periodic sampled waveform over one cycle; the last sample closes the
/// cycle and repeats the first value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowWaveform {
    pub kind: WaveformKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl FlowWaveform {
    pub fn new(kind: WaveformKind, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::Series(
                "a waveform needs at least two samples and one value per time".into(),
            ));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Series("waveform contains non-finite values".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Series("waveform times must be strictly increasing".into()));
        }
        let (first, last) = (values[0], values[values.len() - 1]);
        if (first - last).abs() > 1e-9 * first.abs().max(last.abs()).max(1.0) {
            return Err(Error::Series(format!(
                "waveform is not periodic: first value {first}, last value {last}"
            )));
        }
        Ok(FlowWaveform { kind, times, values })
    }

    /// Builds a waveform from one cycle of samples by appending the first
    /// value at `t0 + period`.
    pub fn from_cycle(kind: WaveformKind, times: Vec<f64>, values: Vec<f64>, period: f64) -> Result<Self> {
        let (mut times, mut values) = (times, values);
        if times.is_empty() {
            return Err(Error::Series("empty waveform".into()));
        }
        times.push(times[0] + period);
        values.push(values[0]);
        Self::new(kind, times, values)
    }

    pub fn constant(kind: WaveformKind, value: f64, period: f64) -> Result<Self> {
        Self::new(kind, vec![0.0, period], vec![value, value])
    }

    pub fn period(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Periodic linear interpolation.
    pub fn value_at(&self, t: f64) -> f64 {
        let t0 = self.times[0];
        let t = t0 + (t - t0).rem_euclid(self.period());
        interp_linear(&self.times, &self.values, t)
    }

    /// Cycle average by the trapezoidal rule.
    pub fn mean(&self) -> f64 {
        let area: f64 = self
            .times
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| (t[1] - t[0]) * (v[0] + v[1]) / 2.0)
            .sum();
        area / self.period()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, factor: f64, kind: WaveformKind) -> Self {
        FlowWaveform {
            kind,
            times: self.times.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Cardiac cycle of the bundled inlet waveform, s.
pub const INLET_PERIOD: f64 = 0.937;

/// Approximate centreline inlet velocity over one cardiac cycle, digitized
/// by hand from a typical ascending-aorta phase-contrast curve. It carries
/// the systolic peak, brief end-systolic backflow and a quiet diastole;
/// treat the numbers as illustrative.
pub fn inlet_peak_velocity() -> FlowWaveform {
    const SAMPLES: [(f64, f64); 25] = [
        (0.000, 0.05),
        (0.030, 0.12),
        (0.060, 0.45),
        (0.090, 0.85),
        (0.120, 1.00),
        (0.150, 0.95),
        (0.180, 0.80),
        (0.210, 0.60),
        (0.240, 0.38),
        (0.270, 0.18),
        (0.300, 0.02),
        (0.330, -0.08),
        (0.360, -0.05),
        (0.390, 0.03),
        (0.420, 0.07),
        (0.460, 0.08),
        (0.500, 0.07),
        (0.550, 0.06),
        (0.600, 0.06),
        (0.650, 0.05),
        (0.700, 0.05),
        (0.760, 0.05),
        (0.820, 0.05),
        (0.880, 0.05),
        (INLET_PERIOD, 0.05),
    ];
    FlowWaveform::new(
        WaveformKind::PeakVelocity,
        SAMPLES.iter().map(|s| s.0).collect(),
        SAMPLES.iter().map(|s| s.1).collect(),
    )
    .expect("bundled waveform is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodicity_enforced() {
        assert!(FlowWaveform::new(WaveformKind::Volumetric, vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(FlowWaveform::new(WaveformKind::Volumetric, vec![0.0, 1.0], vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn interpolation_wraps() {
        let w = FlowWaveform::new(WaveformKind::Volumetric, vec![0.0, 0.5, 1.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(w.value_at(0.25), 1.0);
        assert_eq!(w.value_at(1.25), 1.0);
        assert_eq!(w.value_at(-0.75), 1.0);
        assert_eq!(w.mean(), 1.0);
    }

    #[test]
    fn bundled_inlet_waveform() {
        let w = inlet_peak_velocity();
        assert!((w.period() - INLET_PERIOD).abs() < 1e-15);
        assert_eq!(w.max(), 1.0);
        assert!(w.values.iter().any(|&v| v < 0.0));
    }
}
