use nalgebra::{DMatrix, Vector3};
use rand::Rng;

use super::{hermiticity_error, pauli, BLOCH_NORM_TOL, EXACT_TOL, ONE, POSITIVITY_TOL};
use crate::{Error, Result, C64};

/// Hermitian, unit-trace, positive semidefinite matrix on `dim` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
}

/// Deviations of a matrix from being a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physicality {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl Physicality {
    pub fn of(m: &DMatrix<C64>) -> Self {
        let trace_error = (m.trace() - ONE).norm();
        let herm = hermiticity_error(m);
        // Eigenvalues of the Hermitian part; the anti-Hermitian part is
        // reported separately.
        let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let min_eigenvalue = h
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Physicality {
            trace_error,
            hermiticity_error: herm,
            min_eigenvalue,
        }
    }

    /// Checks against explicit tolerances.
    pub fn within(&self, trace_tol: f64, herm_tol: f64, eig_tol: f64) -> bool {
        self.trace_error <= trace_tol
            && self.hermiticity_error <= herm_tol
            && self.min_eigenvalue >= -eig_tol
    }
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace to `1e-12` and positivity to
    /// `-1e-10`.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        let herm = hermiticity_error(&m);
        if herm > EXACT_TOL {
            return Err(Error::NotHermitian { deviation: herm });
        }
        let tr = m.trace();
        if (tr - ONE).norm() > EXACT_TOL {
            return Err(Error::NotNormalized { trace: tr.re });
        }
        let p = Physicality::of(&m);
        if p.min_eigenvalue < -POSITIVITY_TOL {
            return Err(Error::NotPositive {
                min_eigenvalue: p.min_eigenvalue,
            });
        }
        Ok(DensityMatrix { m })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        DensityMatrix { m }
    }

    /// `|ψ⟩⟨ψ|` after normalising `ψ`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 || !norm2.is_finite() {
            return Err(Error::param(
                "psi",
                "state vector must be nonzero and finite",
            ));
        }
        let s = 1.0 / norm2.sqrt();
        let v: Vec<C64> = psi.iter().map(|z| z * s).collect();
        Ok(DensityMatrix {
            m: super::outer(&v, &v),
        })
    }

    /// Computational basis state `|k⟩⟨k|`.
    pub fn basis(dim: usize, k: usize) -> Self {
        DensityMatrix {
            m: super::projector(dim, k),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            m: DMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        // Tr(ρ ρ) = Σ |ρ_ij|² for Hermitian ρ.
        self.m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Determinant of a qubit state. Panics for `dim != 2`.
    pub fn det(&self) -> f64 {
        assert_eq!(self.dim(), 2, "det is only defined here for qubits");
        (self.m[(0, 0)] * self.m[(1, 1)] - self.m[(0, 1)] * self.m[(1, 0)]).re
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            m: self.m.kronecker(&other.m),
        }
    }

    /// `ρ^{⊗n}`.
    pub fn tensor_power(&self, n: usize) -> DensityMatrix {
        assert!(n >= 1);
        let mut acc = self.m.clone();
        for _ in 1..n {
            acc = acc.kronecker(&self.m);
        }
        DensityMatrix { m: acc }
    }

    pub fn physicality(&self) -> Physicality {
        Physicality::of(&self.m)
    }

    /// `‖ρ − σ‖₁`, the full trace norm (twice the trace distance).
    pub fn trace_norm_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(trace_norm(&(&self.m - &other.m)))
    }
}

/// Trace norm of a Hermitian matrix, the sum of absolute eigenvalues.
pub fn trace_norm(h: &DMatrix<C64>) -> f64 {
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    sym.symmetric_eigenvalues().iter().map(|e| e.abs()).sum()
}

/// Real 3-vector in the closed unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector(Vector3<f64>);

impl BlochVector {
    /// Rejects `|u| > 1 + 1e-10` and non-finite components.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Vector3::new(x, y, z);
        let norm = v.norm();
        if !norm.is_finite() || norm > 1.0 + BLOCH_NORM_TOL {
            return Err(Error::OutsideBlochBall { norm });
        }
        Ok(BlochVector(v))
    }

    pub fn from_array(u: [f64; 3]) -> Result<Self> {
        Self::new(u[0], u[1], u[2])
    }

    /// Skips the ball check. Numerical trajectories may overshoot the unit
    /// sphere by round-off; callers bound the overshoot themselves.
    pub(crate) fn from_vector_unchecked(v: Vector3<f64>) -> Self {
        BlochVector(v)
    }

    pub const NORTH: BlochVector = BlochVector(Vector3::new(0.0, 0.0, 1.0));
    pub const SOUTH: BlochVector = BlochVector(Vector3::new(0.0, 0.0, -1.0));
    pub const ORIGIN: BlochVector = BlochVector(Vector3::new(0.0, 0.0, 0.0));

    pub fn x(&self) -> f64 {
        self.0.x
    }
    pub fn y(&self) -> f64 {
        self.0.y
    }
    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.0
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `Tr ρ² = (1 + |u|²)/2`.
    pub fn purity(&self) -> f64 {
        0.5 * (1.0 + self.0.norm_squared())
    }

    /// Uniform sample from the solid unit ball by rejection.
    pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = Vector3::new(
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
            );
            if v.norm_squared() <= 1.0 {
                return BlochVector(v);
            }
        }
    }
}

/// `ρ = (1 + u·σ)/2`.
pub fn bloch_to_density(u: &BlochVector) -> DensityMatrix {
    let [sx, sy, sz] = pauli();
    let m = (DMatrix::identity(2, 2)
        + sx * C64::from(u.x())
        + sy * C64::from(u.y())
        + sz * C64::from(u.z()))
        * C64::new(0.5, 0.0);
    DensityMatrix::from_matrix_unchecked(m)
}

/// `u_k = Tr(ρ σ_k)`.
pub fn density_to_bloch(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: rho.dim(),
        });
    }
    let m = rho.matrix();
    let off = m[(1, 0)];
    // Tr(ρσ_x) = 2 Re ρ₁₀, Tr(ρσ_y) = 2 Im ρ₁₀, Tr(ρσ_z) = ρ₀₀ − ρ₁₁.
    let v = Vector3::new(2.0 * off.re, 2.0 * off.im, (m[(0, 0)] - m[(1, 1)]).re);
    let norm = v.norm();
    if norm > 1.0 + BLOCH_NORM_TOL {
        return Err(Error::OutsideBlochBall { norm });
    }
    Ok(BlochVector(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
        super::super::max_abs(&(a - b)) <= tol
    }

    #[test]
    fn bloch_to_density_examples() {
        let north = bloch_to_density(&BlochVector::NORTH);
        assert!(close(north.matrix(), &super::super::projector(2, 0), 0.0));

        let mixed = bloch_to_density(&BlochVector::ORIGIN);
        assert!(close(
            mixed.matrix(),
            DensityMatrix::maximally_mixed(2).matrix(),
            0.0
        ));

        let plus = bloch_to_density(&BlochVector::new(1.0, 0.0, 0.0).unwrap());
        let expected = DMatrix::from_element(2, 2, c(0.5, 0.0));
        assert!(close(plus.matrix(), &expected, 0.0));
    }

    #[test]
    fn rejects_outside_ball() {
        assert!(matches!(
            BlochVector::new(1.0, 1.0, 0.0),
            Err(Error::OutsideBlochBall { .. })
        ));
        assert!(BlochVector::new(0.0, 0.0, 1.0 + 5e-11).is_ok());
        assert!(BlochVector::new(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn density_to_bloch_examples() {
        let excited = DensityMatrix::basis(2, 1);
        assert_eq!(
            density_to_bloch(&excited).unwrap().to_array(),
            [0.0, 0.0, -1.0]
        );

        let mixed = DensityMatrix::maximally_mixed(2);
        assert_eq!(
            density_to_bloch(&mixed).unwrap().to_array(),
            [0.0, 0.0, 0.0]
        );

        let y_plus = DensityMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.5, 0.0)],
        ))
        .unwrap();
        assert_eq!(
            density_to_bloch(&y_plus).unwrap().to_array(),
            [0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn density_to_bloch_rejects_pairs() {
        let pair = DensityMatrix::maximally_mixed(4);
        assert_eq!(
            density_to_bloch(&pair),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 4
            })
        );
    }

    #[test]
    fn round_trip_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let u = BlochVector::sample_ball(&mut rng);
            let rho = bloch_to_density(&u);
            let p = rho.physicality();
            assert!(p.within(1e-12, 1e-12, 1e-10));
            let back = density_to_bloch(&rho).unwrap();
            assert!((back.vector() - u.vector()).amax() <= 1e-14);
            assert!((rho.purity() - u.purity()).abs() <= 1e-14);
            assert!((rho.det() - (1.0 - u.vector().norm_squared()) / 4.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn validation_catches_each_violation() {
        let non_herm =
            DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(non_herm),
            Err(Error::NotHermitian { .. })
        ));

        let bad_trace = DMatrix::from_diagonal_element(2, 2, c(0.6, 0.0));
        assert!(matches!(
            DensityMatrix::new(bad_trace),
            Err(Error::NotNormalized { .. })
        ));

        let negative =
            DMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(negative),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn trace_norm_of_orthogonal_pure_states_is_two() {
        let a = DensityMatrix::basis(2, 0);
        let b = DensityMatrix::basis(2, 1);
        assert!((a.trace_norm_distance(&b).unwrap() - 2.0).abs() < 1e-14);
    }
}
