//! Exact small-N Liouville solver for `dρ/dt = (γ/N) Σ_{j<k} ℒ_jk ρ`.
//!
//! Site 0 is the most significant qubit of the 2ᴺ-dimensional basis, so
//! `ρ₀^{⊗N}` is the ordinary Kronecker power. The pair superoperator is
//! applied sparsely on each site pair; the density matrix is never
//! vectorised into a 4ᴺ superoperator.

use nalgebra::DMatrix;

use crate::qcore::{trace_norm, trace_out_tail, DensityMatrix, PairGenerator};
use crate::{Error, Result, C64};

/// Largest ensemble handled by the exact solver.
pub const MAX_EXACT_ATOMS: usize = 8;

struct Embedded {
    n_sites: usize,
    dim: usize,
    prefactor: f64,
    entries: Vec<(usize, usize, usize, usize, C64)>,
    /// For each pair `(j, k)`: bit masks and the indices with both bits clear.
    pairs: Vec<(usize, usize, Vec<usize>)>,
}

impl Embedded {
    fn new(n_sites: usize, gen: &PairGenerator) -> Self {
        let dim = 1usize << n_sites;
        let mut pairs = Vec::new();
        for j in 0..n_sites {
            for k in j + 1..n_sites {
                let bj = 1usize << (n_sites - 1 - j);
                let bk = 1usize << (n_sites - 1 - k);
                let rest = (0..dim).filter(|i| i & (bj | bk) == 0).collect();
                pairs.push((bj, bk, rest));
            }
        }
        Embedded {
            n_sites,
            dim,
            prefactor: gen.gamma() / n_sites as f64,
            entries: gen.sparse_entries(),
            pairs,
        }
    }

    /// Column-major `out = (γ/N) Σ ℒ_jk x`.
    fn apply(&self, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        let dim = self.dim;
        for (bj, bk, rest) in &self.pairs {
            let place =
                |p: usize| (if p & 2 != 0 { *bj } else { 0 }) | (if p & 1 != 0 { *bk } else { 0 });
            for &(or, oc, ir, ic, v) in &self.entries {
                let v = v * self.prefactor;
                let (or, oc, ir, ic) = (place(or), place(oc), place(ir), place(ic));
                for &rc in rest {
                    let in_col = (rc | ic) * dim;
                    let out_col = (rc | oc) * dim;
                    for &rr in rest {
                        out[out_col + (rr | or)] += v * x[in_col + (rr | ir)];
                    }
                }
            }
        }
    }
}

fn check_inputs(n_atoms: usize, gen: &PairGenerator, t: f64, dt: f64) -> Result<()> {
    if !(2..=MAX_EXACT_ATOMS).contains(&n_atoms) {
        return Err(Error::param(
            "n_atoms",
            format!("exact solver supports 2..={MAX_EXACT_ATOMS} atoms, got {n_atoms}"),
        ));
    }
    if !gen.is_swap_symmetric(1e-12) {
        return Err(Error::NotSwapSymmetric);
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param(
            "t",
            format!("must be finite and >= 0, got {t}"),
        ));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    Ok(())
}

/// Evolves an arbitrary N-qubit state with fixed-step RK4 (final step
/// shortened to land on `t`).
pub fn exact_nbody_evolve_state(
    gen: &PairGenerator,
    rho0: &DensityMatrix,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    let dim = rho0.dim();
    if !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch {
            expected: dim.next_power_of_two(),
            actual: dim,
        });
    }
    let n_atoms = dim.trailing_zeros() as usize;
    check_inputs(n_atoms, gen, t, dt)?;
    let op = Embedded::new(n_atoms, gen);
    debug_assert_eq!(op.n_sites, n_atoms);

    let mut x: Vec<C64> = rho0.matrix().as_slice().to_vec();
    let len = x.len();
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![C64::default(); len],
        vec![C64::default(); len],
        vec![C64::default(); len],
        vec![C64::default(); len],
    );
    let mut tmp = vec![C64::default(); len];

    let steps = if t == 0.0 {
        0
    } else {
        (((t / dt) * (1.0 - 1e-12)).ceil() as usize).max(1)
    };
    for s in 0..steps {
        let t_prev = s as f64 * dt;
        let t_next = if s + 1 == steps {
            t
        } else {
            (s + 1) as f64 * dt
        };
        let h = t_next - t_prev;
        op.apply(&x, &mut k1);
        for i in 0..len {
            tmp[i] = x[i] + k1[i] * (h / 2.0);
        }
        op.apply(&tmp, &mut k2);
        for i in 0..len {
            tmp[i] = x[i] + k2[i] * (h / 2.0);
        }
        op.apply(&tmp, &mut k3);
        for i in 0..len {
            tmp[i] = x[i] + k3[i] * h;
        }
        op.apply(&tmp, &mut k4);
        for i in 0..len {
            x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(DMatrix::from_vec(
        dim, dim, x,
    )))
}

/// Evolves `ρ₀^{⊗N}` under the full N-body equation.
pub fn exact_nbody_evolve(
    n_atoms: usize,
    gen: &PairGenerator,
    rho0_single: &DensityMatrix,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    if rho0_single.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: rho0_single.dim(),
        });
    }
    check_inputs(n_atoms, gen, t, dt)?;
    exact_nbody_evolve_state(gen, &rho0_single.tensor_power(n_atoms), t, dt)
}

/// Diagonal populations grouped by the number of excited (`|1⟩`) atoms.
pub fn excitation_populations(rho: &DensityMatrix) -> Vec<f64> {
    let dim = rho.dim();
    let n_sites = dim.trailing_zeros() as usize;
    let mut pops = vec![0.0; n_sites + 1];
    for i in 0..dim {
        pops[i.count_ones() as usize] += rho.matrix()[(i, i)].re;
    }
    pops
}

/// Trace distance `½‖Tr_{3..N} ρ_N − ρ_mf ⊗ ρ_mf‖₁`.
pub fn factorization_defect(rho_n: &DensityMatrix, rho_mf: &DensityMatrix) -> Result<f64> {
    let dim = rho_n.dim();
    if !dim.is_power_of_two() || dim < 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: dim,
        });
    }
    if rho_mf.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: rho_mf.dim(),
        });
    }
    let n_sites = dim.trailing_zeros() as usize;
    let pair = trace_out_tail(rho_n.matrix(), n_sites, 2)?;
    let product = rho_mf.kron(rho_mf);
    Ok(0.5 * trace_norm(&(pair - product.matrix())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{build_generator, EnsembleState, MasterSolution};
    use crate::qcore::{bloch_to_density, generator_from_jump, lowering, BlochVector};

    fn decay() -> PairGenerator {
        PairGenerator::pair_decay(1.0).unwrap()
    }

    #[test]
    fn two_atoms_decay_exponentially() {
        let rho0 = DensityMatrix::basis(2, 1);
        for t in [0.5, 1.0, 3.0] {
            let rho = exact_nbody_evolve(2, &decay(), &rho0, t, 1e-3).unwrap();
            let p11 = rho.matrix()[(3, 3)].re;
            assert!((p11 - (-t / 2.0f64).exp()).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn ground_state_is_stationary() {
        let rho0 = DensityMatrix::basis(2, 0);
        for n in [2, 3, 5] {
            let rho = exact_nbody_evolve(n, &decay(), &rho0, 2.0, 1e-2).unwrap();
            assert_eq!(rho, rho0.tensor_power(n));
        }
    }

    #[test]
    fn populations_match_master_equation() {
        let n = 4;
        let rho0 = DensityMatrix::basis(2, 1);
        let master = MasterSolution::new(
            &build_generator(n, 1.0).unwrap(),
            &EnsembleState::fully_excited(n).unwrap(),
        )
        .unwrap();
        for t in [0.5, 2.0] {
            let rho = exact_nbody_evolve(n, &decay(), &rho0, t, 1e-3).unwrap();
            let pops = excitation_populations(&rho);
            let p = master.state_at(t);
            for (k, pk) in p.probs().iter().enumerate() {
                assert!((pops[2 * k] - pk).abs() < 1e-10, "t={t} n={k}");
            }
            assert!(pops[1].abs() < 1e-15 && pops[3].abs() < 1e-15);
        }
    }

    #[test]
    fn mixed_symmetric_start_matches_master_equation() {
        // ρ = ½ R_1 + ½ R_2 on 4 atoms, built from basis projectors.
        let n = 4;
        let dim = 1 << n;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        let r1: Vec<usize> = (0..dim).filter(|i: &usize| i.count_ones() == 2).collect();
        for &i in &r1 {
            m[(i, i)] = C64::from(0.5 / r1.len() as f64);
        }
        m[(dim - 1, dim - 1)] = C64::from(0.5);
        let rho0 = DensityMatrix::new(m).unwrap();
        let master = MasterSolution::new(
            &build_generator(n, 1.0).unwrap(),
            &EnsembleState::new(n, vec![0.0, 0.5, 0.5]).unwrap(),
        )
        .unwrap();
        let rho = exact_nbody_evolve_state(&decay(), &rho0, 1.5, 1e-3).unwrap();
        let pops = excitation_populations(&rho);
        let p = master.state_at(1.5);
        for (k, pk) in p.probs().iter().enumerate() {
            assert!((pops[2 * k] - pk).abs() < 1e-10);
        }
    }

    #[test]
    fn trace_and_hermiticity_are_conserved() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(41);
        let rho0 = bloch_to_density(&BlochVector::sample_ball(&mut rng));
        for gen in [
            decay(),
            PairGenerator::pair_dephasing(0.5, 1.0).unwrap(),
            PairGenerator::singlet_purification(1.0).unwrap(),
        ] {
            let rho = exact_nbody_evolve(5, &gen, &rho0, 1.0, 1e-2).unwrap();
            let p = rho.physicality();
            assert!(p.trace_error <= 1e-8);
            assert!(p.hermiticity_error <= 1e-8);
            assert!(p.min_eigenvalue >= -1e-10);
        }
    }

    #[test]
    fn defect_of_product_is_zero() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(42);
        let rho = bloch_to_density(&BlochVector::sample_ball(&mut rng));
        let d = factorization_defect(&rho.tensor_power(4), &rho).unwrap();
        assert!(d < 1e-14);
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        let rho0 = DensityMatrix::basis(2, 1);
        assert!(exact_nbody_evolve(9, &decay(), &rho0, 1.0, 1e-2).is_err());
        assert!(exact_nbody_evolve(1, &decay(), &rho0, 1.0, 1e-2).is_err());
        assert!(exact_nbody_evolve(3, &decay(), &rho0, 1.0, 0.0).is_err());
        let lopsided =
            generator_from_jump(&lowering().kronecker(&DMatrix::identity(2, 2)), 1.0).unwrap();
        assert_eq!(
            exact_nbody_evolve(3, &lopsided, &rho0, 1.0, 1e-2),
            Err(Error::NotSwapSymmetric)
        );
        assert!(factorization_defect(&rho0, &rho0).is_err());
    }
}
