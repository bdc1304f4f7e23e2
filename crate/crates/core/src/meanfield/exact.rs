//! Closed-form solutions used as oracles for the integrator.

use nalgebra::Vector3;

use crate::qcore::BlochVector;

/// Pair-decay population: `1 − u_z(t) = (1/(1 − u_z(0)) + γt/2)⁻¹`.
///
/// The ground state `u_z(0) = 1` is stationary.
pub fn decay_uz_exact(uz0: f64, gamma: f64, t: f64) -> f64 {
    if uz0 >= 1.0 {
        return 1.0;
    }
    1.0 - 1.0 / (1.0 / (1.0 - uz0) + gamma * t / 2.0)
}

/// Pair-decay trajectory. Transverse components follow the parabola
/// `u_x² / (1 − u_z) = const`.
pub fn decay_transverse_exact(u0: &BlochVector, gamma: f64, t: f64) -> BlochVector {
    let gap0 = 1.0 - u0.z();
    if gap0 <= 0.0 {
        return *u0;
    }
    let uz = decay_uz_exact(u0.z(), gamma, t);
    let scale = ((1.0 - uz) / gap0).sqrt();
    BlochVector::from_vector_unchecked(Vector3::new(u0.x() * scale, u0.y() * scale, uz))
}

/// Dephasing rate `g = γ sin²θ (1 + u_z sin 2θ)`.
pub fn dephasing_rate(theta: f64, gamma: f64, uz: f64) -> f64 {
    gamma * theta.sin().powi(2) * (1.0 + uz * (2.0 * theta).sin())
}

/// Pair-dephasing trajectory: `u_z` fixed, transverse part decays as
/// `e^{−g t}`.
pub fn dephasing_exact(u0: &BlochVector, theta: f64, gamma: f64, t: f64) -> BlochVector {
    let decay = (-dephasing_rate(theta, gamma, u0.z()) * t).exp();
    BlochVector::from_vector_unchecked(Vector3::new(u0.x() * decay, u0.y() * decay, u0.z()))
}

/// Singlet-purification trajectory at unit rate:
/// `u_z(t) = g tanh(g t/4 + atanh(u_z(0)/g))` with `g² = 1 − u_x² − u_y²`.
///
/// Pure states (`|u_z(0)| = g`) and the axis-free case `g = 0` are fixed
/// points and returned unchanged.
pub fn hemisphere_exact(u0: &BlochVector, t: f64) -> BlochVector {
    let g2 = 1.0 - u0.x() * u0.x() - u0.y() * u0.y();
    if g2 <= 0.0 {
        return *u0;
    }
    let g = g2.sqrt();
    if u0.z().abs() >= g {
        return *u0;
    }
    let uz = g * (g * t / 4.0 + (u0.z() / g).atanh()).tanh();
    BlochVector::from_vector_unchecked(Vector3::new(u0.x(), u0.y(), uz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn bv(x: f64, y: f64, z: f64) -> BlochVector {
        BlochVector::new(x, y, z).unwrap()
    }

    #[test]
    fn decay_uz_examples() {
        assert_eq!(decay_uz_exact(1.0, 1.0, 7.0), 1.0);
        assert!((decay_uz_exact(-1.0, 1.0, 2.0) - 1.0 / 3.0).abs() < 1e-15);
        // 1 − u_z ~ 2/(γt) for large t.
        for t in [1e3, 1e4, 1e5] {
            let gap = 1.0 - decay_uz_exact(-1.0, 1.0, t);
            assert!((gap - 2.0 / t).abs() <= 4.0 / (t * t) + 1e-15, "t={t}");
        }
    }

    #[test]
    fn decay_uz_solves_its_ode() {
        // Central difference of the closed form against γ(1 − u_z)²/2.
        let gamma = 1.4;
        for uz0 in [-1.0, -0.3, 0.5] {
            for t in [0.1, 1.0, 4.0] {
                let h = 1e-5;
                let d = (decay_uz_exact(uz0, gamma, t + h) - decay_uz_exact(uz0, gamma, t - h))
                    / (2.0 * h);
                let uz = decay_uz_exact(uz0, gamma, t);
                assert!((d - gamma * (1.0 - uz).powi(2) / 2.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn transverse_examples() {
        let u = decay_transverse_exact(&bv(0.0, 0.3, -0.2), 1.0, 3.0);
        assert_eq!(u.x(), 0.0);

        let u0 = bv(0.5, 0.0, -0.5);
        for t in [0.0, 1.0, 5.0, 50.0] {
            let u = decay_transverse_exact(&u0, 1.0, t);
            assert!((u.x() * u.x() / (1.0 - u.z()) - 1.0 / 6.0).abs() < 1e-15);
        }
        let far = decay_transverse_exact(&u0, 1.0, 1e12);
        assert!((far.vector() - Vector3::new(0.0, 0.0, 1.0)).amax() < 1e-5);

        assert_eq!(
            decay_transverse_exact(&BlochVector::NORTH, 1.0, 2.0),
            BlochVector::NORTH
        );
    }

    #[test]
    fn dephasing_rate_interval_endpoints() {
        for uz in [-1.0, -0.3, 0.0, 0.8, 1.0] {
            assert!((dephasing_rate(FRAC_PI_2, 2.0, uz) - 2.0).abs() < 1e-15);
        }
        assert!(dephasing_rate(FRAC_PI_4, 1.0, -1.0).abs() < 1e-15);
        assert!((dephasing_rate(FRAC_PI_4, 1.0, 1.0) - 1.0).abs() < 1e-15);

        let u = dephasing_exact(&bv(0.0, 0.0, -1.0), FRAC_PI_4, 1.0, 10.0);
        assert_eq!(u.z(), -1.0);
        let u0 = bv(0.3, 0.0, -0.9);
        let u = dephasing_exact(&u0, FRAC_PI_4, 1.0, 10.0);
        assert!((u.x() - 0.3 * (-0.05f64 * 10.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn hemisphere_examples() {
        let u = hemisphere_exact(&BlochVector::ORIGIN, 4.0);
        assert!((u.z() - 1f64.tanh()).abs() < 1e-15);

        let pure = bv(0.6, 0.0, 0.8);
        assert_eq!(hemisphere_exact(&pure, 100.0), pure);

        let u = hemisphere_exact(&bv(0.6, 0.0, 0.0), 200.0);
        assert!((u.z() - 0.8).abs() < 1e-14);
        assert_eq!(u.x(), 0.6);

        // Lower pure state is an (unstable) fixed point.
        let low = bv(0.6, 0.0, -0.8);
        assert_eq!(hemisphere_exact(&low, 5.0), low);
    }

    #[test]
    fn hemisphere_solves_its_ode() {
        let u0 = bv(0.3, 0.4, -0.5);
        for t in [0.5, 2.0, 9.0] {
            let h = 1e-5;
            let d =
                (hemisphere_exact(&u0, t + h).z() - hemisphere_exact(&u0, t - h).z()) / (2.0 * h);
            let u = hemisphere_exact(&u0, t);
            assert!((d - (1.0 - u.vector().norm_squared()) / 4.0).abs() < 1e-9);
        }
    }
}
