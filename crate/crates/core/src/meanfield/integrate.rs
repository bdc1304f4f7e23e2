use nalgebra::Vector3;

use super::ModelSpec;
use crate::qcore::{bloch_derivative, BlochVector, PairGenerator};
use crate::{Error, Result};

/// Default step in units of `1/γ`.
pub const DEFAULT_DT: f64 = 1e-3;
/// A step that leaves the ball by more than this is rejected.
pub const BALL_OVERSHOOT_REJECT: f64 = 1e-6;

/// Time-ordered Bloch vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<BlochVector>,
    model: Option<ModelSpec>,
}

impl Trajectory {
    /// Builds a trajectory from samples. Times must be strictly increasing
    /// and states within `1 + 1e-8` of the ball.
    pub fn new(times: Vec<f64>, states: Vec<BlochVector>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(Error::param(
                "states",
                format!("{} times but {} states", times.len(), states.len()),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("times", "must be strictly increasing"));
        }
        if let Some(s) = states.iter().find(|s| s.norm() > 1.0 + 1e-8) {
            return Err(Error::OutsideBlochBall { norm: s.norm() });
        }
        Ok(Trajectory {
            times,
            states,
            model: None,
        })
    }

    pub fn with_model(mut self, model: ModelSpec) -> Self {
        self.model = Some(model);
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[BlochVector] {
        &self.states
    }

    pub fn model(&self) -> Option<&ModelSpec> {
        self.model.as_ref()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> (f64, BlochVector) {
        let i = self.len() - 1;
        (self.times[i], self.states[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &BlochVector)> {
        self.times.iter().copied().zip(self.states.iter())
    }

    pub fn max_norm(&self) -> f64 {
        self.states.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }
}

fn rk4_step<F>(f: &F, u: &Vector3<f64>, h: f64) -> Vector3<f64>
where
    F: Fn(&Vector3<f64>) -> Vector3<f64>,
{
    let k1 = f(u);
    let k2 = f(&(u + k1 * (h / 2.0)));
    let k3 = f(&(u + k2 * (h / 2.0)));
    let k4 = f(&(u + k3 * h));
    u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Number of steps to cover `span` with steps of `dt`, the last one
/// truncated. A span within round-off of a multiple of `dt` does not get an
/// extra sliver step.
fn step_count(span: f64, dt: f64) -> usize {
    if span <= 0.0 {
        return 0;
    }
    let ratio = span / dt;
    ((ratio * (1.0 - 1e-12)).ceil() as usize).max(1)
}

fn check_args(u0: &BlochVector, t_end: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::param("t_end", format!("must be >= 0, got {t_end}")));
    }
    if u0.norm() > 1.0 + crate::qcore::BLOCH_NORM_TOL {
        return Err(Error::OutsideBlochBall { norm: u0.norm() });
    }
    Ok(())
}

/// Integrates from `t0` to `t1`, pushing every step onto the output.
fn advance<F>(
    f: &F,
    u: &mut Vector3<f64>,
    t0: f64,
    t1: f64,
    dt: f64,
    mut record: impl FnMut(f64, Vector3<f64>),
) -> Result<()>
where
    F: Fn(&Vector3<f64>) -> Vector3<f64>,
{
    let n = step_count(t1 - t0, dt);
    for k in 1..=n {
        let t_prev = if k == 1 { t0 } else { t0 + (k - 1) as f64 * dt };
        let t_next = if k == n { t1 } else { t0 + k as f64 * dt };
        *u = rk4_step(f, u, t_next - t_prev);
        let norm = u.norm();
        if !norm.is_finite() || norm > 1.0 + BALL_OVERSHOOT_REJECT {
            return Err(Error::StepRejected { time: t_next, norm });
        }
        record(t_next, *u);
    }
    Ok(())
}

fn integrate_field<F>(f: F, u0: &BlochVector, t_end: f64, dt: f64) -> Result<Trajectory>
where
    F: Fn(&Vector3<f64>) -> Vector3<f64>,
{
    check_args(u0, t_end, dt)?;
    let n = step_count(t_end, dt);
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(0.0);
    states.push(*u0);
    let mut u = u0.vector();
    advance(&f, &mut u, 0.0, t_end, dt, |t, v| {
        times.push(t);
        states.push(BlochVector::from_vector_unchecked(v));
    })?;
    Ok(Trajectory {
        times,
        states,
        model: None,
    })
}

/// Classical RK4 with fixed step `dt`; the final step is shortened to land
/// on `t_end`. Every step is stored.
pub fn integrate(model: &ModelSpec, u0: &BlochVector, t_end: f64, dt: f64) -> Result<Trajectory> {
    let traj = integrate_field(|u| model.field(u), u0, t_end, dt)?;
    Ok(traj.with_model(*model))
}

/// Same integrator driven by the generic partial-trace right-hand side of
/// an arbitrary pair generator.
pub fn integrate_generator(
    gen: &PairGenerator,
    u0: &BlochVector,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_field(
        |u| bloch_derivative(gen, &BlochVector::from_vector_unchecked(*u)),
        u0,
        t_end,
        dt,
    )
}

/// Integrates through ascending `sample_times` (all `>= 0`) and keeps only
/// the states at those times. Each interval is covered with steps of `dt`
/// and a shortened final step.
pub fn integrate_sampled(
    model: &ModelSpec,
    u0: &BlochVector,
    sample_times: &[f64],
    dt: f64,
) -> Result<Trajectory> {
    let t_end = sample_times.last().copied().unwrap_or(0.0);
    check_args(u0, t_end, dt)?;
    if sample_times.is_empty() {
        return Err(Error::param("sample_times", "must not be empty"));
    }
    if sample_times[0] < 0.0 || sample_times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param(
            "sample_times",
            "must be >= 0 and strictly increasing",
        ));
    }
    let f = |u: &Vector3<f64>| model.field(u);
    let mut states = Vec::with_capacity(sample_times.len());
    let mut u = u0.vector();
    let mut t = 0.0;
    for &target in sample_times {
        advance(&f, &mut u, t, target, dt, |_, _| {})?;
        t = target;
        states.push(BlochVector::from_vector_unchecked(u));
    }
    Ok(Trajectory {
        times: sample_times.to_vec(),
        states,
        model: Some(*model),
    })
}

/// Richardson estimate of the global error of the `dt` solution at
/// `t_end`: `16/15 · |u_dt − u_{dt/2}|_∞`.
pub fn richardson_error(model: &ModelSpec, u0: &BlochVector, t_end: f64, dt: f64) -> Result<f64> {
    let coarse = integrate(model, u0, t_end, dt)?.last().1;
    let fine = integrate(model, u0, t_end, dt / 2.0)?.last().1;
    Ok((coarse.vector() - fine.vector()).amax() * 16.0 / 15.0)
}

#[cfg(test)]
mod tests {
    use super::super::{decay_uz_exact, ModelKind};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn bv(x: f64, y: f64, z: f64) -> BlochVector {
        BlochVector::new(x, y, z).unwrap()
    }

    #[test]
    fn zero_duration_is_single_point() {
        let m = ModelSpec::pair_decay(1.0).unwrap();
        let u0 = bv(0.1, 0.2, 0.3);
        let traj = integrate(&m, &u0, 0.0, 1e-3).unwrap();
        assert_eq!(traj.times(), &[0.0]);
        assert_eq!(traj.states(), &[u0]);
    }

    #[test]
    fn decay_from_excited_state() {
        let m = ModelSpec::pair_decay(1.0).unwrap();
        let traj = integrate(&m, &BlochVector::SOUTH, 2.0, 1e-3).unwrap();
        let (t, u) = traj.last();
        assert_eq!(t, 2.0);
        assert_eq!(traj.len(), 2001);
        assert!((u.z() - 1.0 / 3.0).abs() <= 1e-8);
        assert!((decay_uz_exact(-1.0, 1.0, 2.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hemisphere_from_origin() {
        let m = ModelSpec::singlet_purification();
        let traj = integrate(&m, &BlochVector::ORIGIN, 4.0, 1e-3).unwrap();
        assert!((traj.last().1.z() - 1f64.tanh()).abs() <= 1e-8);
    }

    #[test]
    fn last_step_is_truncated() {
        let m = ModelSpec::pair_decay(1.0).unwrap();
        let traj = integrate(&m, &BlochVector::SOUTH, 0.0105, 1e-3).unwrap();
        assert_eq!(traj.len(), 12);
        assert_eq!(traj.last().0, 0.0105);
        assert!(traj.times().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_bad_arguments() {
        let m = ModelSpec::pair_decay(1.0).unwrap();
        assert!(integrate(&m, &BlochVector::SOUTH, 1.0, 0.0).is_err());
        assert!(integrate(&m, &BlochVector::SOUTH, 1.0, -1.0).is_err());
        assert!(integrate(&m, &BlochVector::SOUTH, -1.0, 1e-3).is_err());
        assert!(integrate(&m, &BlochVector::SOUTH, f64::NAN, 1e-3).is_err());
    }

    #[test]
    fn huge_steps_are_rejected() {
        // Transverse decay at rate 50 with dt = 1 overshoots the ball.
        let m = ModelSpec::new(ModelKind::PairDephasing { theta: 1.0 }, 50.0).unwrap();
        let err = integrate(&m, &bv(0.9, 0.0, 0.1), 5.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::StepRejected { .. }));
    }

    #[test]
    fn generic_route_matches_model_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let models = [
            ModelSpec::pair_decay(1.0).unwrap(),
            ModelSpec::pair_dephasing(FRAC_PI_4, 1.0).unwrap(),
            ModelSpec::singlet_purification(),
        ];
        for m in &models {
            let u0 = BlochVector::sample_ball(&mut rng);
            let a = integrate(m, &u0, 1.0, 1e-2).unwrap();
            let b = integrate_generator(&m.pair_generator(), &u0, 1.0, 1e-2).unwrap();
            for (sa, sb) in a.states().iter().zip(b.states()) {
                assert!((sa.vector() - sb.vector()).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn sampled_matches_exact() {
        let m = ModelSpec::pair_decay(1.0).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let traj = integrate_sampled(&m, &BlochVector::SOUTH, &times, 1e-3).unwrap();
        assert_eq!(traj.len(), 11);
        for (t, u) in traj.iter() {
            assert!((u.z() - decay_uz_exact(-1.0, 1.0, t)).abs() < 1e-8);
        }
        assert!(integrate_sampled(&m, &BlochVector::SOUTH, &[1.0, 0.5], 1e-3).is_err());
    }

    #[test]
    fn richardson_estimate_tracks_actual_error() {
        let m = ModelSpec::pair_decay(1.0).unwrap();
        let est = richardson_error(&m, &BlochVector::SOUTH, 2.0, 0.05).unwrap();
        let actual = (integrate(&m, &BlochVector::SOUTH, 2.0, 0.05)
            .unwrap()
            .last()
            .1
            .z()
            - 1.0 / 3.0)
            .abs();
        assert!(est > 0.0);
        assert!(
            actual / est > 0.5 && actual / est < 2.0,
            "est {est} actual {actual}"
        );
    }

    #[test]
    fn trajectory_constructor_validates() {
        let s = BlochVector::ORIGIN;
        assert!(Trajectory::new(vec![0.0, 0.0], vec![s, s]).is_err());
        assert!(Trajectory::new(vec![0.0], vec![s, s]).is_err());
        assert!(Trajectory::new(vec![], vec![]).is_err());
        assert!(Trajectory::new(vec![0.0, 1.0], vec![s, s]).is_ok());
    }
}
