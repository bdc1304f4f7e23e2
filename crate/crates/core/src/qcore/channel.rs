use nalgebra::DMatrix;

use super::{max_abs, outer, pair_ground, singlet, DensityMatrix, EXACT_TOL};
use crate::{Error, Result, C64};

/// Maximum number of Kraus operators accepted by [`KrausChannel::new`].
pub const MAX_KRAUS_OPERATORS: usize = 8;

/// Completely positive trace-preserving map `ρ ↦ Σ_j K_j ρ K_j†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<DMatrix<C64>>,
}

impl KrausChannel {
    /// Checks shapes and completeness `Σ K_j†K_j = 1` to `1e-12`.
    pub fn new(ops: Vec<DMatrix<C64>>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::InvalidChannel("no Kraus operators".into()));
        };
        if ops.len() > MAX_KRAUS_OPERATORS {
            return Err(Error::InvalidChannel(format!(
                "{} Kraus operators (at most {MAX_KRAUS_OPERATORS} supported)",
                ops.len()
            )));
        }
        let dim = first.nrows();
        for k in &ops {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: if k.nrows() != dim {
                        k.nrows()
                    } else {
                        k.ncols()
                    },
                });
            }
        }
        let deviation = completeness_deviation(&ops);
        if deviation > EXACT_TOL {
            return Err(Error::IncompleteChannel { deviation });
        }
        Ok(KrausChannel { ops })
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel {
            ops: vec![DMatrix::identity(dim, dim)],
        }
    }

    /// Pair channel in which a singlet collapses to `|00⟩`:
    /// `K₁ = |g⟩⟨s|`, `K₂ = 1 − |s⟩⟨s|`.
    pub fn singlet_decay() -> Self {
        let s = singlet();
        let g = pair_ground();
        let k1 = outer(&g, &s);
        let k2 = DMatrix::identity(4, 4) - outer(&s, &s);
        KrausChannel { ops: vec![k1, k2] }
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn operators(&self) -> &[DMatrix<C64>] {
        &self.ops
    }

    /// `Σ_j K_j X K_j†` on an arbitrary (not necessarily physical) matrix.
    pub fn apply_matrix(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for k in &self.ops {
            out += k * x * k.adjoint();
        }
        out
    }

    /// Superoperator matrix `Σ_j K̄_j ⊗ K_j` in the column-major basis.
    pub fn superoperator(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut s = DMatrix::zeros(d * d, d * d);
        for k in &self.ops {
            s += k.conjugate().kronecker(k);
        }
        s
    }
}

pub(crate) fn completeness_deviation(ops: &[DMatrix<C64>]) -> f64 {
    let dim = ops[0].nrows();
    let mut sum = DMatrix::<C64>::zeros(dim, dim);
    for k in ops {
        sum += k.adjoint() * k;
    }
    max_abs(&(sum - DMatrix::identity(dim, dim)))
}

/// `Σ_j K_j ρ K_j†`.
pub fn apply_channel(chan: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if chan.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: chan.dim(),
            actual: rho.dim(),
        });
    }
    let deviation = completeness_deviation(&chan.ops);
    if deviation > EXACT_TOL {
        return Err(Error::IncompleteChannel { deviation });
    }
    Ok(DensityMatrix::from_matrix_unchecked(
        chan.apply_matrix(rho.matrix()),
    ))
}
