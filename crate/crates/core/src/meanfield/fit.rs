use nalgebra::Vector3;

use super::{dephasing_rate, ModelKind, Trajectory};
use crate::{Error, Result};

/// Number of samples used by [`fit_exponential_rate`].
pub const FIT_SAMPLES: usize = 200;
/// The fit window spans this many predicted e-folding times.
pub const FIT_WINDOW_RATES: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn pick(self, v: &Vector3<f64>) -> f64 {
        match self {
            Axis::X => v.x,
            Axis::Y => v.y,
            Axis::Z => v.z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    /// `−d/dt log|u_k(t) − u_k(∞)|` from a least-squares line.
    pub fitted_rate: f64,
    /// Instantaneous rate of the model at the start of the window, when the
    /// trajectory carries a model with a nonzero rate on this axis.
    pub predicted_rate: Option<f64>,
    /// Largest absolute deviation of `log|·|` from the fitted line.
    pub residual: f64,
}

fn predicted_rate(traj: &Trajectory, axis: Axis) -> Option<f64> {
    let model = traj.model()?;
    let u = traj.states()[0];
    let gamma = model.gamma();
    let rate = match (model.kind(), axis) {
        (ModelKind::PairDecay, Axis::X | Axis::Y) => gamma * (1.0 - u.z()) / 4.0,
        (ModelKind::PairDecay, Axis::Z) => gamma * (1.0 - u.z()) / 2.0,
        (ModelKind::PairDephasing { theta }, Axis::X | Axis::Y) => {
            dephasing_rate(theta, gamma, u.z())
        }
        (ModelKind::SingletPurification, Axis::Z) => {
            let g = (1.0 - u.x() * u.x() - u.y() * u.y()).max(0.0).sqrt();
            gamma * (g + u.z()) / 4.0
        }
        _ => return None,
    };
    Some(rate)
}

/// Fits an exponential rate to the selected component's distance from the
/// trajectory's fixed point (from the origin when the trajectory has no
/// model). The window covers `5 / predicted_rate` time units from the start
/// (the whole trajectory if no positive prediction exists), subsampled to
/// at most [`FIT_SAMPLES`] stored points.
pub fn fit_exponential_rate(traj: &Trajectory, axis: Axis) -> Result<RateReport> {
    let predicted = predicted_rate(traj, axis);
    let fixed = match traj.model() {
        Some(m) => axis.pick(&m.fixed_point(&traj.states()[0])),
        None => 0.0,
    };
    let t0 = traj.times()[0];
    let t_stop = match predicted {
        Some(r) if r > 0.0 => t0 + FIT_WINDOW_RATES / r,
        _ => f64::INFINITY,
    };
    let in_window = traj
        .times()
        .iter()
        .take_while(|&&t| t <= t_stop * (1.0 + 1e-12))
        .count();
    if in_window < 2 {
        return Err(Error::DegenerateFit(format!(
            "only {in_window} sample(s) inside the fit window"
        )));
    }
    let picks: Vec<usize> = if in_window <= FIT_SAMPLES {
        (0..in_window).collect()
    } else {
        let last = (in_window - 1) as f64;
        (0..FIT_SAMPLES)
            .map(|i| (i as f64 * last / (FIT_SAMPLES - 1) as f64).round() as usize)
            .collect()
    };

    let mut ts = Vec::with_capacity(picks.len());
    let mut ys = Vec::with_capacity(picks.len());
    let mut sign = 0.0;
    for &i in &picks {
        let dev = axis.pick(&traj.states()[i].vector()) - fixed;
        if dev == 0.0 || !dev.is_finite() {
            return Err(Error::DegenerateFit(format!(
                "component is zero at t = {}",
                traj.times()[i]
            )));
        }
        if sign == 0.0 {
            sign = dev.signum();
        } else if dev.signum() != sign {
            return Err(Error::DegenerateFit(format!(
                "component changes sign at t = {}",
                traj.times()[i]
            )));
        }
        ts.push(traj.times()[i]);
        ys.push(dev.abs().ln());
    }

    let n = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in ts.iter().zip(&ys) {
        sxy += (t - t_mean) * (y - y_mean);
        sxx += (t - t_mean) * (t - t_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;
    let residual = ts
        .iter()
        .zip(&ys)
        .map(|(t, y)| (y - (intercept + slope * t)).abs())
        .fold(0.0, f64::max);

    Ok(RateReport {
        fitted_rate: -slope,
        predicted_rate: predicted,
        residual,
    })
}
