use nalgebra::{DMatrix, DVector, Vector3};

use super::{
    channel::completeness_deviation, lowering, swap_index, BlochVector, DensityMatrix,
    KrausChannel, EXACT_TOL, ZERO,
};
use crate::{Error, Result, C64};

const PAIR_DIM: usize = 4;

/// Pair Lindbladian `ℒ₁₂` as a 16×16 superoperator (column-major
/// vectorisation) together with the collision rate `γ`. The rate is kept
/// separate: [`PairGenerator::apply`] acts with `ℒ₁₂` alone.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGenerator {
    superop: DMatrix<C64>,
    gamma: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::param(
            "gamma",
            format!("must be finite and >= 0, got {gamma}"),
        ));
    }
    Ok(())
}

impl PairGenerator {
    /// Wraps a raw 16×16 superoperator. It must annihilate the trace.
    pub fn from_superoperator(superop: DMatrix<C64>, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let n = PAIR_DIM * PAIR_DIM;
        if superop.nrows() != n || superop.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: superop.nrows(),
            });
        }
        let g = PairGenerator { superop, gamma };
        let err = g.trace_annihilation_error();
        if err > EXACT_TOL {
            return Err(Error::InvalidChannel(format!(
                "superoperator does not annihilate the trace (error {err:e})"
            )));
        }
        Ok(g)
    }

    /// Pair decay `|11⟩ → |00⟩` with jump operator `a ⊗ a`.
    pub fn pair_decay(gamma: f64) -> Result<Self> {
        let a = lowering();
        generator_from_jump(&a.kronecker(&a), gamma)
    }

    /// Pair dephasing `ℒ₁₂X = −[J, [J, X]]` with `J = K ⊗ K` and
    /// `√2 K = cos θ 1 + sin θ σ_z`. Written in GKSL form with the single
    /// jump operator `√2 J`.
    pub fn pair_dephasing(theta: f64, gamma: f64) -> Result<Self> {
        let (s, c) = theta.sin_cos();
        let k = DMatrix::from_row_slice(2, 2, &[C64::from(c + s), ZERO, ZERO, C64::from(c - s)])
            * C64::from(std::f64::consts::FRAC_1_SQRT_2);
        let j = k.kronecker(&k) * C64::from(std::f64::consts::SQRT_2);
        generator_from_jump(&j, gamma)
    }

    /// `𝒦 − 1` for [`KrausChannel::singlet_decay`].
    pub fn singlet_purification(gamma: f64) -> Result<Self> {
        generator_from_channel(&KrausChannel::singlet_decay(), gamma)
    }

    pub fn zero(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(PairGenerator {
            superop: DMatrix::zeros(16, 16),
            gamma,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        self.gamma = gamma;
        Ok(self)
    }

    pub fn superoperator(&self) -> &DMatrix<C64> {
        &self.superop
    }

    /// `ℒ₁₂ X` for a 4×4 matrix `X` (rate not included).
    pub fn apply(&self, x: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        if x.nrows() != PAIR_DIM || x.ncols() != PAIR_DIM {
            return Err(Error::DimensionMismatch {
                expected: PAIR_DIM,
                actual: x.nrows(),
            });
        }
        let v = &self.superop * DVector::from_column_slice(x.as_slice());
        Ok(DMatrix::from_column_slice(PAIR_DIM, PAIR_DIM, v.as_slice()))
    }

    /// Largest `|Tr(ℒ E_ij)|` over matrix units `E_ij`; zero for any
    /// trace-preserving generator.
    pub fn trace_annihilation_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for col in 0..self.superop.ncols() {
            let mut tr = ZERO;
            for i in 0..PAIR_DIM {
                tr += self.superop[(i + i * PAIR_DIM, col)];
            }
            worst = worst.max(tr.norm());
        }
        worst
    }

    /// Whether `ℒ(S X S) = S ℒ(X) S` for the qubit swap `S`.
    pub fn is_swap_symmetric(&self, tol: f64) -> bool {
        let idx = |r: usize, c: usize| r + c * PAIR_DIM;
        for out_c in 0..PAIR_DIM {
            for out_r in 0..PAIR_DIM {
                for in_c in 0..PAIR_DIM {
                    for in_r in 0..PAIR_DIM {
                        let a = self.superop[(idx(out_r, out_c), idx(in_r, in_c))];
                        let b = self.superop[(
                            idx(swap_index(out_r), swap_index(out_c)),
                            idx(swap_index(in_r), swap_index(in_c)),
                        )];
                        if (a - b).norm() > tol {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Nonzero superoperator entries as `(out_row, out_col, in_row, in_col,
    /// value)` over pair-basis indices.
    pub(crate) fn sparse_entries(&self) -> Vec<(usize, usize, usize, usize, C64)> {
        let mut entries = Vec::new();
        for (col, column) in self.superop.column_iter().enumerate() {
            for (row, &v) in column.iter().enumerate() {
                if v != ZERO {
                    entries.push((
                        row % PAIR_DIM,
                        row / PAIR_DIM,
                        col % PAIR_DIM,
                        col / PAIR_DIM,
                        v,
                    ));
                }
            }
        }
        entries
    }
}

/// `ℒ = 𝒦 − 1` for a complete pair channel.
pub fn generator_from_channel(chan: &KrausChannel, gamma: f64) -> Result<PairGenerator> {
    check_gamma(gamma)?;
    if chan.dim() != PAIR_DIM {
        return Err(Error::DimensionMismatch {
            expected: PAIR_DIM,
            actual: chan.dim(),
        });
    }
    let deviation = completeness_deviation(chan.operators());
    if deviation > EXACT_TOL {
        return Err(Error::IncompleteChannel { deviation });
    }
    let n = PAIR_DIM * PAIR_DIM;
    Ok(PairGenerator {
        superop: chan.superoperator() - DMatrix::identity(n, n),
        gamma,
    })
}

/// GKSL generator `A X A† − ½{A†A, X}` for a single 4×4 jump operator.
pub fn generator_from_jump(a: &DMatrix<C64>, gamma: f64) -> Result<PairGenerator> {
    check_gamma(gamma)?;
    if a.nrows() != PAIR_DIM || a.ncols() != PAIR_DIM {
        return Err(Error::DimensionMismatch {
            expected: PAIR_DIM,
            actual: a.nrows(),
        });
    }
    let id = DMatrix::<C64>::identity(PAIR_DIM, PAIR_DIM);
    let ada = a.adjoint() * a;
    // vec(A X A†) = (Ā ⊗ A) vec X; vec(M X) = (1 ⊗ M) vec X; vec(X M) = (Mᵀ ⊗ 1) vec X.
    let superop = a.conjugate().kronecker(a)
        - (id.kronecker(&ada) + ada.transpose().kronecker(&id)) * C64::from(0.5);
    Ok(PairGenerator { superop, gamma })
}

/// Keeps the first `keep` of `n_sites` qubits, tracing out the rest.
pub fn trace_out_tail(m: &DMatrix<C64>, n_sites: usize, keep: usize) -> Result<DMatrix<C64>> {
    let dim = 1usize << n_sites;
    if keep > n_sites || m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: m.nrows(),
        });
    }
    let d_keep = 1usize << keep;
    let d_rest = dim / d_keep;
    Ok(DMatrix::from_fn(d_keep, d_keep, |i, j| {
        (0..d_rest)
            .map(|k| m[(i * d_rest + k, j * d_rest + k)])
            .sum()
    }))
}

/// `Tr₂ σ` for a two-qubit state.
pub fn partial_trace_second(sigma: &DensityMatrix) -> Result<DensityMatrix> {
    if sigma.dim() != PAIR_DIM {
        return Err(Error::DimensionMismatch {
            expected: PAIR_DIM,
            actual: sigma.dim(),
        });
    }
    Ok(DensityMatrix::from_matrix_unchecked(trace_out_tail(
        sigma.matrix(),
        2,
        1,
    )?))
}

/// Quadratic mean-field right-hand side `γ Tr₂(ℒ₁₂ ρ⊗ρ)`.
pub fn meanfield_rhs(gen: &PairGenerator, rho: &DensityMatrix) -> Result<DMatrix<C64>> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: rho.dim(),
        });
    }
    let m = rho.matrix();
    let lx = gen.apply(&m.kronecker(m))?;
    Ok(trace_out_tail(&lx, 2, 1)? * C64::from(gen.gamma))
}

/// Bloch-vector velocity `Tr(σ_k ρ̇)` of [`meanfield_rhs`].
pub fn bloch_derivative(gen: &PairGenerator, u: &BlochVector) -> Vector3<f64> {
    let rho = super::bloch_to_density(u);
    let d = meanfield_rhs(gen, &rho).expect("qubit state has dimension 2");
    Vector3::new(
        2.0 * d[(1, 0)].re,
        2.0 * d[(1, 0)].im,
        (d[(0, 0)] - d[(1, 1)]).re,
    )
}
