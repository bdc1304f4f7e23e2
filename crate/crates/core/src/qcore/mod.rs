//! Linear-algebra substrate for qubit mean-field dynamics.
//!
//! Superoperators act on column-major vectorised matrices:
//! `vec(X)[i + j·d] = X[i, j]`, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`. With this
//! convention a [`PairGenerator`] is a reproducible 16×16 complex matrix.
//!
//! Two-site tensor products put the first factor on the most significant
//! index: `(ρ ⊗ σ)[(2i + k, 2j + l)] = ρ[i, j] σ[k, l]`.

mod channel;
mod generator;
mod state;

pub use channel::{apply_channel, KrausChannel};
pub use generator::{
    bloch_derivative, generator_from_channel, generator_from_jump, meanfield_rhs,
    partial_trace_second, trace_out_tail, PairGenerator,
};
pub use state::{
    bloch_to_density, density_to_bloch, trace_norm, BlochVector, DensityMatrix, Physicality,
};

use crate::C64;
use nalgebra::DMatrix;

/// Tolerance on Hermiticity, unit trace and channel completeness.
pub const EXACT_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Largest accepted Bloch-vector norm.
pub const BLOCH_NORM_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// The Pauli matrices `[σ_x, σ_y, σ_z]` with `σ_z = diag(1, −1)`, so that
/// `|0⟩` (ground) sits at the north pole `u = (0, 0, 1)`.
pub fn pauli() -> [DMatrix<C64>; 3] {
    [
        DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

/// Qubit lowering operator `a = |0⟩⟨1|`.
pub fn lowering() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

/// Projector `|k⟩⟨k|` on a `dim`-dimensional space.
pub fn projector(dim: usize, k: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, dim);
    m[(k, k)] = ONE;
    m
}

/// `|ψ⟩⟨φ|` for column vectors given as slices.
pub fn outer(psi: &[C64], phi: &[C64]) -> DMatrix<C64> {
    DMatrix::from_fn(psi.len(), phi.len(), |i, j| psi[i] * phi[j].conj())
}

/// Two-qubit singlet `(|01⟩ − |10⟩)/√2`.
pub fn singlet() -> [C64; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO]
}

/// Two-qubit ground state `|00⟩`.
pub fn pair_ground() -> [C64; 4] {
    [ONE, ZERO, ZERO, ZERO]
}

/// Largest entrywise modulus of `a − b†`.
pub(crate) fn hermiticity_error(a: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn max_abs(a: &DMatrix<C64>) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Swap of two qubits as a permutation of the 4-dim pair basis.
pub(crate) fn swap_index(r: usize) -> usize {
    ((r & 1) << 1) | (r >> 1)
}
