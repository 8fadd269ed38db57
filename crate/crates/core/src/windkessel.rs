//! Three-element Windkessel outlet model driven by a prescribed flow:
//! `C dp_d/dt + p_d/R_d = Q`, `p_wk = R_p Q + p_d`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowfields::{FlowWaveform, WaveformKind};

/// Parameters in any consistent unit system; the bundled outlet values are
/// CGS (dyn·s/cm⁵, cm⁵/dyn, dyn/cm²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindkesselParams {
    pub rp: f64,
    pub rd: f64,
    pub c: f64,
    pub pd0: f64,
}

impl WindkesselParams {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.rp, self.rd, self.c].iter().all(|v| *v > 0.0 && v.is_finite());
        if !ok || !self.pd0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Windkessel parameters must be positive and finite: {self:?}"
            )));
        }
        Ok(())
    }

    /// Distal time constant `R_d C`.
    pub fn tau(&self) -> f64 {
        self.rd * self.c
    }

    /// Mean flow that holds the distal pressure at `pd0`.
    pub fn equilibrium_flow(&self) -> f64 {
        self.pd0 / self.rd
    }
}

/// The four aortic outlets of the reference simulation: brachiocephalic,
/// left carotid, left subclavian, descending aorta.
pub const AORTIC_OUTLETS: [WindkesselParams; 4] = [
    WindkesselParams {
        rp: 274.0,
        rd: 5675.0,
        c: 5.08e-4,
        pd0: 107325.0,
    },
    WindkesselParams {
        rp: 1300.0,
        rd: 19663.0,
        c: 1.4416e-4,
        pd0: 107325.0,
    },
    WindkesselParams {
        rp: 791.0,
        rd: 10048.0,
        c: 2.788e-4,
        pd0: 107325.0,
    },
    WindkesselParams {
        rp: 141.0,
        rd: 2066.0,
        c: 13.6904e-4,
        pd0: 107325.0,
    },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureTrace {
    /// Relative to the start of the returned cycle.
    pub times: Vec<f64>,
    pub p_wk: Vec<f64>,
    pub p_d: Vec<f64>,
}

impl PressureTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest pointwise `|p_wk|` difference relative to the largest `|p_wk|`.
    pub fn relative_drift(&self, other: &PressureTrace) -> f64 {
        let scale = self.p_wk.iter().map(|p| p.abs()).fold(0.0, f64::max);
        let diff = self
            .p_wk
            .iter()
            .zip(&other.p_wk)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        diff / scale
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
        w.write_record(["t", "p_wk", "p_d"])
            .map_err(|e| Error::parse(path, e))?;
        for i in 0..self.len() {
            w.write_record([
                self.times[i].to_string(),
                self.p_wk[i].to_string(),
                self.p_d[i].to_string(),
            ])
            .map_err(|e| Error::parse(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Integrates `cycles` periods with classic RK4 and returns every cycle.
/// The step is shrunk if needed so that a whole number of steps fits a period.
pub fn simulate_windkessel_cycles(
    params: &WindkesselParams,
    q: &FlowWaveform,
    dt: f64,
    cycles: usize,
) -> Result<Vec<PressureTrace>> {
    params.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    if cycles == 0 {
        return Err(Error::InvalidInput("at least one cycle is required".into()));
    }
    let period = q.period();
    let steps = (period / dt - 1e-9).ceil().max(1.0) as usize;
    let h = period / steps as f64;
    if (h - dt).abs() > 1e-12 * dt {
        log::info!("Windkessel step adjusted from {dt} to {h} to fit the period");
    }
    let t0 = q.times[0];
    let WindkesselParams { rp, rd, c, pd0 } = *params;
    let rhs = |t: f64, p: f64| (q.value_at(t) - p / rd) / c;

    let mut out = Vec::with_capacity(cycles);
    let mut p = pd0;
    for cycle in 0..cycles {
        let start = t0 + cycle as f64 * period;
        let mut trace = PressureTrace {
            times: Vec::with_capacity(steps + 1),
            p_wk: Vec::with_capacity(steps + 1),
            p_d: Vec::with_capacity(steps + 1),
        };
        for i in 0..=steps {
            let t = start + i as f64 * h;
            trace.times.push(i as f64 * h);
            trace.p_d.push(p);
            trace.p_wk.push(rp * q.value_at(t) + p);
            if i == steps {
                break;
            }
            let k1 = rhs(t, p);
            let k2 = rhs(t + h / 2.0, p + h / 2.0 * k1);
            let k3 = rhs(t + h / 2.0, p + h / 2.0 * k2);
            let k4 = rhs(t + h, p + h * k3);
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if trace.p_d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Series(
                "Windkessel integration produced non-finite values".into(),
            ));
        }
        out.push(trace);
    }
    Ok(out)
}

/// Final cycle of [`simulate_windkessel_cycles`].
pub fn simulate_windkessel(
    params: &WindkesselParams,
    q: &FlowWaveform,
    dt: f64,
    cycles: usize,
) -> Result<PressureTrace> {
    Ok(simulate_windkessel_cycles(params, q, dt, cycles)?.pop().unwrap())
}

/// Flow for one outlet with the shape of `shape` and the mean flow that keeps
/// the outlet at its distal equilibrium pressure.
pub fn outlet_flow(shape: &FlowWaveform, params: &WindkesselParams) -> Result<FlowWaveform> {
    let mean = shape.mean();
    if !(mean.abs() > 0.0) {
        return Err(Error::Series("waveform has zero mean and cannot be rescaled".into()));
    }
    Ok(shape.scaled(params.equilibrium_flow() / mean, WaveformKind::Volumetric))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_flow(period: f64) -> FlowWaveform {
        FlowWaveform::constant(WaveformKind::Volumetric, 0.0, period).unwrap()
    }

    #[test]
    fn constant_flow_steady_state() {
        let params = WindkesselParams {
            rp: 2.0,
            rd: 10.0,
            c: 0.1,
            pd0: 0.0,
        };
        let q = FlowWaveform::constant(WaveformKind::Volumetric, 3.0, params.tau()).unwrap();
        let trace = simulate_windkessel(&params, &q, params.tau() / 200.0, 5).unwrap();
        let last = trace.len() - 1;
        assert!((trace.p_d[last] - 30.0).abs() / 30.0 < 0.01);
        assert!((trace.p_wk[last] - 36.0).abs() / 36.0 < 0.01);
    }

    #[test]
    fn exponential_decay() {
        let params = WindkesselParams {
            rp: 1.0,
            rd: 2.0,
            c: 0.5,
            pd0: 100.0,
        };
        let tau = params.tau();
        let trace = simulate_windkessel(&params, &zero_flow(tau), tau / 1000.0, 1).unwrap();
        let exact = 100.0 * (-1.0f64).exp();
        let got = *trace.p_d.last().unwrap();
        assert!((got - exact).abs() / exact < 1e-8);
    }

    #[test]
    fn linear_in_flow() {
        let params = WindkesselParams {
            pd0: 0.0,
            ..AORTIC_OUTLETS[0]
        };
        let shape = crate::flowfields::inlet_peak_velocity();
        let q = shape.scaled(20.0, WaveformKind::Volumetric);
        let q2 = shape.scaled(40.0, WaveformKind::Volumetric);
        let a = simulate_windkessel(&params, &q, 1e-3, 2).unwrap();
        let b = simulate_windkessel(&params, &q2, 1e-3, 2).unwrap();
        for (x, y) in a.p_wk.iter().zip(&b.p_wk) {
            assert!((2.0 * x - y).abs() <= 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn periodic_state_independent_of_start() {
        let shape = crate::flowfields::inlet_peak_velocity();
        // time constant a third of the period: ten cycles decay the start-up
        // mismatch by e^-30
        let params = WindkesselParams {
            rp: 0.1,
            rd: 1.0,
            c: shape.period() / 3.0,
            pd0: 1.0,
        };
        let q = outlet_flow(&shape, &params).unwrap();
        let a = simulate_windkessel(&params, &q, 1e-3, 10).unwrap();
        let b = simulate_windkessel(&WindkesselParams { pd0: 0.2, ..params }, &q, 1e-3, 10).unwrap();
        assert!(a.relative_drift(&b) < 1e-3);
    }

    #[test]
    fn start_up_mismatch_decays_with_time_constant() {
        let shape = crate::flowfields::inlet_peak_velocity();
        let params = AORTIC_OUTLETS[0];
        let q = outlet_flow(&shape, &params).unwrap();
        let a = simulate_windkessel_cycles(&params, &q, 1e-3, 3).unwrap();
        let b = simulate_windkessel_cycles(
            &WindkesselParams {
                pd0: 0.9 * params.pd0,
                ..params
            },
            &q,
            1e-3,
            3,
        )
        .unwrap();
        let t = 3.0 * shape.period();
        let expected = 0.1 * params.pd0 * (-t / params.tau()).exp();
        let got = a[2].p_d.last().unwrap() - b[2].p_d.last().unwrap();
        assert!((got - expected).abs() / expected < 1e-6);
    }

    #[test]
    fn outlet_flows_add_to_cardiac_output() {
        let total: f64 = AORTIC_OUTLETS.iter().map(|p| p.equilibrium_flow()).sum();
        // cm³/s, about 5.2 L/min
        assert!((total - 87.0).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_parameters() {
        let q = zero_flow(1.0);
        let bad = WindkesselParams {
            rp: 0.0,
            ..AORTIC_OUTLETS[0]
        };
        assert!(simulate_windkessel(&bad, &q, 1e-3, 1).is_err());
        assert!(simulate_windkessel(&AORTIC_OUTLETS[0], &q, 0.0, 1).is_err());
    }

    #[test]
    fn csv_header() {
        let params = AORTIC_OUTLETS[0];
        let trace = simulate_windkessel(&params, &zero_flow(0.1), 0.05, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wk.csv");
        trace.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("t,p_wk,p_d\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
