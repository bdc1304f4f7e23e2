//! The N → ∞ limit of the pair-decay master equation: the excited fraction
//! `x = 2n/N` carries a distribution obeying `∂ₜp = ∂ₓ(x²p)` on `[0, 1]`.
//!
//! Characteristics are `x(t) = x₀/(1 + x₀t)` and never cross, so the exact
//! solution is the pull-back `p(x, t) = (1 − xt)⁻² p₀(x/(1 − xt))`, zero
//! wherever `x/(1 − xt) > 1`. Point masses ride the characteristics with
//! fixed weight. Time is in units of `1/γ`.

use crate::{Error, Result};

/// Default number of uniform grid points on `[0, 1]`.
pub const DEFAULT_GRID_POINTS: usize = 2048;
/// Allowed deviation of the trapezoid mass of a density from 1.
pub const DENSITY_MASS_TOL: f64 = 1e-6;
/// Allowed deviation of the total point-mass weight from 1.
pub const POINT_MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    /// Nodal values on an ascending grid inside `[0, 1]`; linear in between.
    Density { grid: Vec<f64>, values: Vec<f64> },
    /// `(position, weight)` pairs.
    PointMasses(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumDistribution {
    repr: Representation,
    time: f64,
}

/// `n` uniform points from 0 to 1 inclusive.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2, "a grid needs at least two points");
    let last = (n - 1) as f64;
    (0..n).map(|i| i as f64 / last).collect()
}

/// Trapezoid rule for nodal values on an ascending grid.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
        .sum()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidDistribution(
            "grid needs at least two points".into(),
        ));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidDistribution(
            "grid must be strictly ascending".into(),
        ));
    }
    if grid[0] < 0.0 || grid[grid.len() - 1] > 1.0 {
        return Err(Error::InvalidDistribution(
            "grid must lie inside [0, 1]".into(),
        ));
    }
    Ok(())
}

impl ContinuumDistribution {
    /// Validates a density at time 0: nonnegative values whose trapezoid
    /// mass is `1 ± 1e-6`.
    pub fn density(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&grid)?;
        if grid.len() != values.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDistribution(
                "density values must be finite and nonnegative".into(),
            ));
        }
        let mass = trapezoid(&grid, &values);
        if (mass - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(Error::InvalidDistribution(format!(
                "density mass is {mass}, expected 1"
            )));
        }
        Ok(ContinuumDistribution {
            repr: Representation::Density { grid, values },
            time: 0.0,
        })
    }

    /// Samples `f` on the grid and rescales so the trapezoid mass is one.
    pub fn density_from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(&grid)?;
        let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let mass = trapezoid(&grid, &values);
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "cannot normalise mass {mass}"
            )));
        }
        Self::density(grid, values.into_iter().map(|v| v / mass).collect())
    }

    pub fn point_masses(masses: Vec<(f64, f64)>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidDistribution("no point masses".into()));
        }
        if masses
            .iter()
            .any(|&(x, w)| !(0.0..=1.0).contains(&x) || !w.is_finite() || w < 0.0)
        {
            return Err(Error::InvalidDistribution(
                "positions must lie in [0, 1] and weights be nonnegative".into(),
            ));
        }
        let total: f64 = masses.iter().map(|m| m.1).sum();
        if (total - 1.0).abs() > POINT_MASS_TOL {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(ContinuumDistribution {
            repr: Representation::PointMasses(masses),
            time: 0.0,
        })
    }

    /// Unit mass at `x0`.
    pub fn point_mass(x0: f64) -> Result<Self> {
        Self::point_masses(vec![(x0, 1.0)])
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Trapezoid mass for densities, total weight for point masses.
    pub fn mass(&self) -> f64 {
        match &self.repr {
            Representation::Density { grid, values } => trapezoid(grid, values),
            Representation::PointMasses(m) => m.iter().map(|p| p.1).sum(),
        }
    }

    /// Density value at `x`, by linear interpolation; zero outside the grid.
    fn density_at(grid: &[f64], values: &[f64], x: f64) -> f64 {
        if x < grid[0] || x > grid[grid.len() - 1] {
            return 0.0;
        }
        let i = grid.partition_point(|&g| g <= x);
        if i == grid.len() {
            return values[grid.len() - 1];
        }
        let (x0, x1) = (grid[i - 1], grid[i]);
        let w = (x - x0) / (x1 - x0);
        values[i - 1] * (1.0 - w) + values[i] * w
    }
}

/// Position at time `t` of the characteristic starting at `x0`:
/// `x₀ / (1 + x₀t)`.
pub fn characteristic(x0: f64, t: f64) -> f64 {
    x0 / (1.0 + x0 * t)
}

/// Advances `p` by `t` time units. Densities are re-evaluated on their own
/// grid through the pull-back formula; point masses move along
/// characteristics.
pub fn evolve_density(p: &ContinuumDistribution, t: f64) -> Result<ContinuumDistribution> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param(
            "t",
            format!("must be finite and >= 0, got {t}"),
        ));
    }
    let repr = match &p.repr {
        Representation::Density { grid, values } => {
            let evolved = grid
                .iter()
                .map(|&x| {
                    let jac = 1.0 - x * t;
                    if jac <= 0.0 {
                        return 0.0;
                    }
                    let x0 = x / jac;
                    // Short-circuit above the support edge to avoid 0·∞.
                    if x0 > 1.0 {
                        return 0.0;
                    }
                    ContinuumDistribution::density_at(grid, values, x0) / (jac * jac)
                })
                .collect();
            Representation::Density {
                grid: grid.clone(),
                values: evolved,
            }
        }
        Representation::PointMasses(m) => {
            Representation::PointMasses(m.iter().map(|&(x, w)| (characteristic(x, t), w)).collect())
        }
    };
    Ok(ContinuumDistribution {
        repr,
        time: p.time + t,
    })
}

/// Mean excited fraction `∫ x p(x) dx` (trapezoid) or `Σ wᵢ xᵢ`.
pub fn mean_excited(p: &ContinuumDistribution) -> f64 {
    match &p.repr {
        Representation::Density { grid, values } => {
            let moments: Vec<f64> = grid.iter().zip(values).map(|(x, v)| x * v).collect();
            trapezoid(grid, &moments)
        }
        Representation::PointMasses(m) => m.iter().map(|&(x, w)| x * w).sum(),
    }
}

/// Mean excited fraction at time `t` for an initially fully excited gas,
/// `1/(1 + t)`.
pub fn fully_excited_mean(t: f64) -> f64 {
    characteristic(1.0, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn beta44(x: f64) -> f64 {
        140.0 * x.powi(3) * (1.0 - x).powi(3)
    }

    #[test]
    fn zero_time_is_identity() {
        let p = ContinuumDistribution::density_from_fn(uniform_grid(257), beta44).unwrap();
        let q = evolve_density(&p, 0.0).unwrap();
        assert_eq!(p, q);
        let m = ContinuumDistribution::point_mass(0.4).unwrap();
        assert_eq!(evolve_density(&m, 0.0).unwrap(), m);
    }

    #[test]
    fn point_mass_follows_hyperbola() {
        let p = evolve_density(&ContinuumDistribution::point_mass(1.0).unwrap(), 3.0).unwrap();
        assert_eq!(
            p.representation(),
            &Representation::PointMasses(vec![(0.25, 1.0)])
        );
        assert_eq!(p.time(), 3.0);
        assert_eq!(mean_excited(&p), 0.25);
    }

    #[test]
    fn uniform_density_after_unit_time() {
        let grid = uniform_grid(DEFAULT_GRID_POINTS);
        let p0 = ContinuumDistribution::density(grid.clone(), vec![1.0; grid.len()]).unwrap();
        let p = evolve_density(&p0, 1.0).unwrap();
        let Representation::Density { values, .. } = p.representation() else {
            panic!("density expected")
        };
        for (x, v) in grid.iter().zip(values) {
            if *x <= 0.5 {
                assert!((v - (1.0 - x).powi(-2)).abs() <= 1e-12 * (1.0 - x).powi(-2));
            } else {
                assert_eq!(*v, 0.0);
            }
        }
        // The exact mass is 1; the jump at x = 1/2 costs O(h) in the
        // trapezoid rule.
        let h = 1.0 / (DEFAULT_GRID_POINTS - 1) as f64;
        assert!((p.mass() - 1.0).abs() <= 4.0 * h);
    }

    #[test]
    fn mass_is_conserved_for_smooth_data() {
        let p0 = ContinuumDistribution::density_from_fn(uniform_grid(DEFAULT_GRID_POINTS), beta44)
            .unwrap();
        for t in [0.0, 1.0, 5.0] {
            let p = evolve_density(&p0, t).unwrap();
            assert!((p.mass() - 1.0).abs() <= 1e-6, "t={t}: {}", p.mass());
        }
    }

    #[test]
    fn support_stays_below_edge() {
        let grid = uniform_grid(1025);
        let p0 = ContinuumDistribution::density(grid.clone(), vec![1.0; grid.len()]).unwrap();
        for t in [0.5, 2.0, 9.0] {
            let p = evolve_density(&p0, t).unwrap();
            let Representation::Density { values, .. } = p.representation() else {
                unreachable!()
            };
            for (x, v) in grid.iter().zip(values) {
                if *x > 1.0 / (1.0 + t) {
                    assert_eq!(*v, 0.0);
                }
            }
        }
    }

    #[test]
    fn characteristic_examples() {
        assert_eq!(characteristic(0.0, 100.0), 0.0);
        assert_eq!(characteristic(1.0, 1.0), 0.5);
        assert_eq!(characteristic(0.5, 2.0), 0.25);
    }

    #[test]
    fn fully_excited_mean_has_one_over_t_tail() {
        // Twice the mean plays the role of 1 − u_z, which tends to 2/(γt).
        for t in [1e3, 1e5] {
            let two_x = 2.0 * fully_excited_mean(t);
            assert!((two_x - 2.0 / t).abs() <= 2.0 / (t * t));
        }
    }

    #[test]
    fn mean_of_point_mass_is_its_position() {
        let p = ContinuumDistribution::point_masses(vec![(0.3, 1.0)]).unwrap();
        assert_eq!(mean_excited(&p), 0.3);
        let p = ContinuumDistribution::point_masses(vec![(0.2, 0.25), (0.6, 0.75)]).unwrap();
        assert!((mean_excited(&p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn point_mass_at_one_matches_hyperbola() {
        let p0 = ContinuumDistribution::point_mass(1.0).unwrap();
        for t in [1.0, 3.0, 10.0] {
            let x = mean_excited(&evolve_density(&p0, t).unwrap());
            assert!((x - 1.0 / (1.0 + t)).abs() <= 1e-14);
        }
    }

    proptest! {
        #[test]
        fn pushforward_is_a_semigroup(
            x0 in 0.0..=1.0f64,
            t1 in 0.0..20.0f64,
            t2 in 0.0..20.0f64,
        ) {
            let p0 = ContinuumDistribution::point_masses(vec![(x0, 0.5), (x0 / 3.0, 0.5)]).unwrap();
            let two = evolve_density(&evolve_density(&p0, t1).unwrap(), t2).unwrap();
            let one = evolve_density(&p0, t1 + t2).unwrap();
            let (Representation::PointMasses(a), Representation::PointMasses(b)) =
                (two.representation(), one.representation())
            else {
                unreachable!()
            };
            for (pa, pb) in a.iter().zip(b) {
                prop_assert!((pa.0 - pb.0).abs() <= 1e-14);
                prop_assert_eq!(pa.1, pb.1);
            }
            prop_assert!((two.time() - one.time()).abs() <= 1e-14);
        }

        #[test]
        fn characteristics_never_cross(
            a in 0.0..=1.0f64,
            b in 0.0..=1.0f64,
            t in 0.0..100.0f64,
        ) {
            prop_assume!(a < b);
            prop_assert!(characteristic(a, t) < characteristic(b, t));
            prop_assert!(characteristic(b, t) <= b);
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(ContinuumDistribution::point_mass(1.5).is_err());
        assert!(ContinuumDistribution::point_masses(vec![(0.5, 0.5)]).is_err());
        assert!(ContinuumDistribution::density(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(ContinuumDistribution::density(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(ContinuumDistribution::density(vec![0.0, 1.0], vec![-1.0, 3.0]).is_err());
        assert!(ContinuumDistribution::density(vec![0.0, 2.0], vec![0.5, 0.5]).is_err());
        let p = ContinuumDistribution::point_mass(1.0).unwrap();
        assert!(evolve_density(&p, -1.0).is_err());
    }
}
