use super::{PowerLawParams, ViscositySample};
use crate::error::{Error, Result};

/// Controls for the damped Gauss-Newton refinement.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative parameter-step tolerance.
    pub step_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            step_tolerance: 1e-14,
        }
    }
}

/// Trapezoidal spacing weights, normalized to sum 1.
///
/// Each distinct shear rate receives half the distance to its neighbours, so
/// densely sampled regions do not dominate the objective. Repeated shear
/// rates split their share equally.
pub fn spacing_weights(shear_rates: &[f64]) -> Vec<f64> {
    let mut distinct: Vec<f64> = shear_rates.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let k = distinct.len();
    if k < 2 {
        return vec![1.0 / shear_rates.len() as f64; shear_rates.len()];
    }
    let share: Vec<f64> = (0..k)
        .map(|i| {
            let left = if i == 0 { distinct[0] } else { distinct[i - 1] };
            let right = if i + 1 == k { distinct[k - 1] } else { distinct[i + 1] };
            0.5 * (right - left)
        })
        .collect();

    let lookup = |g: f64| distinct.binary_search_by(|d| d.total_cmp(&g)).unwrap();
    let mut multiplicity = vec![0usize; k];
    for &g in shear_rates {
        multiplicity[lookup(g)] += 1;
    }
    let mut weights: Vec<f64> = shear_rates
        .iter()
        .map(|&g| {
            let i = lookup(g);
            share[i] / multiplicity[i] as f64
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    weights
}

fn validate_samples(samples: &[ViscositySample]) -> Result<()> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let hct = samples[0].hct;
    for s in samples {
        s.validate()?;
        if (s.hct - hct).abs() > 1e-9 * hct.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "samples mix hematocrits {} and {}",
                hct, s.hct
            )));
        }
    }
    let g0 = samples[0].shear_rate;
    if samples.iter().all(|s| s.shear_rate == g0) {
        return Err(Error::InvalidInput(
            "all samples share one shear rate; the power-law index is unidentifiable".into(),
        ));
    }
    Ok(())
}

fn resolve_weights(samples: &[ViscositySample], weights: Option<&[f64]>) -> Result<Vec<f64>> {
    match weights {
        None => Ok(spacing_weights(
            &samples.iter().map(|s| s.shear_rate).collect::<Vec<_>>(),
        )),
        Some(w) => {
            if w.len() != samples.len() {
                return Err(Error::InvalidInput(format!(
                    "{} weights for {} samples",
                    w.len(),
                    samples.len()
                )));
            }
            if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::InvalidInput("weights must be finite and non-negative".into()));
            }
            let total: f64 = w.iter().sum();
            if !(total > 0.0) {
                return Err(Error::InvalidInput("weights sum to zero".into()));
            }
            Ok(w.iter().map(|x| x / total).collect())
        }
    }
}

/// Weighted least-squares fit of `mu = m * gamma^(n-1)` in linear viscosity
/// space.
///
/// Starts from a weighted log-log regression and refines with a
/// Levenberg-damped Gauss-Newton iteration over `(ln m, n)`.
pub fn fit_power_law(samples: &[ViscositySample], weights: Option<&[f64]>) -> Result<PowerLawParams> {
    fit_power_law_with(samples, weights, FitOptions::default())
}

pub(crate) fn fit_power_law_with(
    samples: &[ViscositySample],
    weights: Option<&[f64]>,
    options: FitOptions,
) -> Result<PowerLawParams> {
    validate_samples(samples)?;
    let w = resolve_weights(samples, weights)?;
    let x: Vec<f64> = samples.iter().map(|s| s.shear_rate.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.viscosity).collect();

    // log-log start
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let xm: f64 = w.iter().zip(&x).map(|(w, x)| w * x).sum();
    let ym: f64 = w.iter().zip(&ly).map(|(w, y)| w * y).sum();
    let sxy: f64 = (0..x.len()).map(|i| w[i] * (x[i] - xm) * (ly[i] - ym)).sum();
    let sxx: f64 = (0..x.len()).map(|i| w[i] * (x[i] - xm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidInput(
            "shear rates carry no weight spread; the power-law index is unidentifiable".into(),
        ));
    }
    let slope = sxy / sxx;
    let mut p = [ym - slope * xm, slope + 1.0];

    let cost = |p: &[f64; 2]| -> f64 {
        (0..x.len())
            .map(|i| w[i] * (y[i] - (p[0] + (p[1] - 1.0) * x[i]).exp()).powi(2))
            .sum()
    };

    let mut current = cost(&p);
    let mut lambda = 1e-3;
    let mut last_step = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        // J^T J and J^T r for r_i = sqrt(w_i) (y_i - f_i)
        let (mut a00, mut a01, mut a11, mut g0, mut g1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..x.len() {
            let f = (p[0] + (p[1] - 1.0) * x[i]).exp();
            let r = y[i] - f;
            let j0 = f;
            let j1 = f * x[i];
            a00 += w[i] * j0 * j0;
            a01 += w[i] * j0 * j1;
            a11 += w[i] * j1 * j1;
            g0 += w[i] * j0 * r;
            g1 += w[i] * j1 * r;
        }
        let scale = a00.max(a11);
        if (g0.abs() + g1.abs()) <= 1e-30 * scale.max(f64::MIN_POSITIVE) || current == 0.0 {
            converged = true;
            break;
        }
        let d00 = a00 * (1.0 + lambda);
        let d11 = a11 * (1.0 + lambda);
        let det = d00 * d11 - a01 * a01;
        if !(det.is_finite() && det > 0.0) {
            break;
        }
        let step = [(d11 * g0 - a01 * g1) / det, (d00 * g1 - a01 * g0) / det];
        let trial = [p[0] + step[0], p[1] + step[1]];
        let trial_cost = cost(&trial);
        last_step = (step[0].abs() + step[1].abs()) / (1.0 + p[0].abs() + p[1].abs());

        if trial_cost.is_finite() && trial_cost <= current {
            p = trial;
            current = trial_cost;
            lambda = (lambda * 0.1).max(1e-12);
        } else {
            lambda *= 10.0;
        }
        if last_step < options.step_tolerance {
            converged = true;
            break;
        }
        if lambda > 1e20 {
            // no descent direction remains at working precision
            converged = true;
            break;
        }
    }

    let m = p[0].exp();
    let n = p[1];
    if !converged || !(m.is_finite() && n.is_finite()) {
        return Err(Error::FitFailure {
            iterations,
            rmse: current.sqrt(),
            last_step,
        });
    }

    let params = PowerLawParams::new(m, n, samples[0].hct);
    let (r2, rmse) = goodness_of_fit(samples, &params);
    Ok(PowerLawParams {
        fit_r2: r2,
        fit_rmse: rmse,
        ..params
    })
}

/// Unweighted R² and RMSE in linear viscosity space.
fn goodness_of_fit(samples: &[ViscositySample], params: &PowerLawParams) -> (f64, f64) {
    let count = samples.len() as f64;
    let mean = samples.iter().map(|s| s.viscosity).sum::<f64>() / count;
    let ss_res: f64 = samples
        .iter()
        .map(|s| (s.viscosity - params.viscosity(s.shear_rate)).powi(2))
        .sum();
    let ss_tot: f64 = samples.iter().map(|s| (s.viscosity - mean).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res <= f64::EPSILON * mean * mean * count {
        1.0
    } else {
        0.0
    };
    (r2, (ss_res / count).sqrt())
}
