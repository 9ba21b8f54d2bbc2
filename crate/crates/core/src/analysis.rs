//! Post-processing: pointer-state scale estimates in physical units,
//! chaos margins, ensemble momentum-diffusion fits, and localization-time
//! fits on trajectory records.

use crate::localization::{LocalizationParams, TrajectoryRecord};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

pub const HBAR_SI: f64 = 1.0546e-34;

/// Physical inputs for the scale estimator. `inertia` is a mass in kg (or a
/// moment of inertia in kg m^2 for angular systems); `lambda` is the
/// localization coupling in m^-2 s^-1 (or its angular analogue).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScaleInput {
    pub inertia: f64,
    pub lambda: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

fn default_hbar() -> f64 {
    HBAR_SI
}

impl ScaleInput {
    pub fn new(inertia: f64, lambda: f64) -> Result<Self> {
        let s = Self {
            inertia,
            lambda,
            hbar: HBAR_SI,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inertia > 0.0 && self.lambda > 0.0 && self.hbar > 0.0) {
            return Err(Error::InvalidParameter(
                "scale inputs must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Pointer-state spreads and the localization time.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PointerScales {
    /// (hbar / (M lambda))^(1/4)
    pub dx: f64,
    /// (hbar^3 M lambda)^(1/4)
    pub dp: f64,
    /// sqrt(M / (hbar lambda))
    pub t_loc: f64,
}

pub fn pointer_scales(s: &ScaleInput) -> Result<PointerScales> {
    s.validate()?;
    Ok(PointerScales {
        dx: (s.hbar / (s.inertia * s.lambda)).powf(0.25),
        dp: (s.hbar.powi(3) * s.inertia * s.lambda).powf(0.25),
        t_loc: (s.inertia / (s.hbar * s.lambda)).sqrt(),
    })
}

/// Ratio lambda_lyapunov * t_loc and the localization verdict
/// (instabilities slower than the localization rate cannot delocalize the
/// conditioned state).
pub fn chaos_margin(s: &ScaleInput, lyapunov: f64) -> Result<(f64, bool)> {
    if lyapunov < 0.0 {
        return Err(Error::InvalidParameter("negative instability rate".into()));
    }
    let t_loc = pointer_scales(s)?.t_loc;
    let ratio = lyapunov * t_loc;
    Ok((ratio, ratio < 1.0))
}

/// Least-squares slope of y = m x through the origin, with the coefficient
/// of determination against the mean.
fn fit_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let slope = sxy / sxx;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (slope, r2)
}

/// Ordinary least squares y = a + b x; returns (a, b, r^2).
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(xv, yv)| (yv - a - b * xv).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (a, b, r2)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LangevinFit {
    /// Diffusion amplitude: Var[<p>](t) ~ sigma_p^2 t.
    pub sigma_p: f64,
    pub r_squared: f64,
}

/// Fit the ensemble variance of `<p>` against time. Requires at least 500
/// trajectories recorded on a common time grid (free potential).
pub fn langevin_fit(records: &[TrajectoryRecord]) -> Result<LangevinFit> {
    if records.len() < 500 {
        return Err(Error::InsufficientData(format!(
            "{} trajectories; momentum-diffusion fit needs at least 500",
            records.len()
        )));
    }
    let n_times = records[0].times.len();
    if records.iter().any(|r| r.times.len() != n_times) {
        return Err(Error::ShapeMismatch(
            "trajectories recorded on different time grids".into(),
        ));
    }
    let n = records.len() as f64;
    let mut times = Vec::with_capacity(n_times);
    let mut variances = Vec::with_capacity(n_times);
    for k in 0..n_times {
        let mean: f64 = records.iter().map(|r| r.mean_p[k]).sum::<f64>() / n;
        let var: f64 = records
            .iter()
            .map(|r| (r.mean_p[k] - mean).powi(2))
            .sum::<f64>()
            / n;
        times.push(records[0].times[k]);
        variances.push(var);
    }
    let (slope, r2) = fit_through_origin(&times, &variances);
    Ok(LangevinFit {
        sigma_p: slope.max(0.0).sqrt(),
        r_squared: r2,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LocalizationFit {
    pub t_loc_measured: f64,
    pub r_squared: f64,
}

/// Fit the exponential approach of var_x to the pointer value over the
/// first jump-free window of the record: log|var_x(t) - var_ps| against t.
///
/// The approach is underdamped (the residual oscillates through zero while
/// its envelope decays), so for oscillatory records the fit runs over the
/// residual's local maxima above the converged noise floor; a raw log fit
/// would mostly measure the dive into the first zero crossing. Monotone
/// records (and the synthetic self-test) fall back to a plain log fit.
pub fn localization_fit(
    record: &TrajectoryRecord,
    params: &LocalizationParams,
) -> Result<LocalizationFit> {
    let var_ps = params.pointer_var_x();
    let window_end = record
        .jumped
        .iter()
        .position(|&j| j)
        .unwrap_or(record.times.len());
    fit_exponential_window(
        &record.times[..window_end],
        &record.var_x[..window_end],
        var_ps,
    )
}

fn fit_exponential_window(times: &[f64], var_x: &[f64], var_ps: f64) -> Result<LocalizationFit> {
    if times.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "jump-free window of {} samples is too short to fit",
            times.len()
        )));
    }
    let resid: Vec<f64> = var_x.iter().map(|v| (v - var_ps).abs()).collect();
    let initial_gap = resid[0];
    let floor = resid.last().copied().unwrap_or(0.0).max(1e-300);

    // envelope: strict local maxima above the converged floor
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 1..resid.len() - 1 {
        if resid[i] > resid[i - 1] && resid[i] >= resid[i + 1] && resid[i] > 20.0 * floor {
            xs.push(times[i]);
            ys.push(resid[i].ln());
        }
    }
    if xs.len() < 3 {
        // monotone (or nearly converged) record: raw log fit down to the
        // noise floor
        xs.clear();
        ys.clear();
        for (t, r) in times.iter().zip(&resid) {
            if *r < 1e-3 * initial_gap.max(var_ps) {
                break;
            }
            xs.push(*t);
            ys.push(r.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} usable samples above the noise floor",
            xs.len()
        )));
    }
    let (_, slope, r2) = fit_line(&xs, &ys);
    if slope >= 0.0 {
        return Err(Error::InsufficientData(
            "variance residual is not decaying in the fit window".into(),
        ));
    }
    Ok(LocalizationFit {
        t_loc_measured: -1.0 / slope,
        r_squared: r2,
    })
}
