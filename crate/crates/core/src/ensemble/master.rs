//! Master equation `ṗ = −(1/N) G p` over symmetric mixtures `R_n` (2n
//! excited atoms out of N).

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Probability vector `(p_0, …, p_{N/2})` over symmetric mixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    n_atoms: usize,
    probs: Vec<f64>,
}

fn check_even(n_atoms: usize) -> Result<()> {
    if n_atoms < 2 || n_atoms % 2 != 0 {
        return Err(Error::param(
            "n_atoms",
            format!("must be even and >= 2, got {n_atoms}"),
        ));
    }
    Ok(())
}

impl EnsembleState {
    /// Entries must be `>= -1e-12` and sum to `1 ± 1e-10`.
    pub fn new(n_atoms: usize, probs: Vec<f64>) -> Result<Self> {
        check_even(n_atoms)?;
        if probs.len() != n_atoms / 2 + 1 {
            return Err(Error::DimensionMismatch {
                expected: n_atoms / 2 + 1,
                actual: probs.len(),
            });
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < -1e-12) {
            return Err(Error::param(
                "probs",
                format!("entry {p} is negative or not finite"),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::param("probs", format!("sum to {total}, expected 1")));
        }
        Ok(EnsembleState { n_atoms, probs })
    }

    /// All atoms excited: `p = (0, …, 0, 1)`.
    pub fn fully_excited(n_atoms: usize) -> Result<Self> {
        check_even(n_atoms)?;
        let mut probs = vec![0.0; n_atoms / 2 + 1];
        probs[n_atoms / 2] = 1.0;
        Ok(EnsembleState { n_atoms, probs })
    }

    pub fn ground(n_atoms: usize) -> Result<Self> {
        check_even(n_atoms)?;
        let mut probs = vec![0.0; n_atoms / 2 + 1];
        probs[0] = 1.0;
        Ok(EnsembleState { n_atoms, probs })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// `Σ_n (2n/N) p_n`.
pub fn excited_fraction(p: &EnsembleState) -> f64 {
    let n = p.n_atoms as f64;
    p.probs
        .iter()
        .enumerate()
        .map(|(k, pk)| 2.0 * k as f64 / n * pk)
        .sum()
}

/// Upper bidiagonal generator with `G_nn = −G_{n−1,n} = γ n (2n − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayGenerator {
    n_atoms: usize,
    gamma: f64,
    diag: Vec<f64>,
}

pub fn build_generator(n_atoms: usize, gamma: f64) -> Result<DecayGenerator> {
    check_even(n_atoms)?;
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::param(
            "gamma",
            format!("must be finite and > 0, got {gamma}"),
        ));
    }
    let diag = (0..=n_atoms / 2)
        .map(|n| gamma * (n * (2 * n).saturating_sub(1)) as f64)
        .collect();
    Ok(DecayGenerator {
        n_atoms,
        gamma,
        diag,
    })
}

impl DecayGenerator {
    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `G_nn`, which are also the eigenvalues of `G`.
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if row == col {
            self.diag[col]
        } else if row + 1 == col {
            -self.diag[col]
        } else {
            0.0
        }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let size = self.diag.len();
        DMatrix::from_fn(size, size, |i, j| self.entry(i, j))
    }

    /// Decay rates `G_nn / N` of `ṗ = −G p / N`.
    pub fn rates(&self) -> Vec<f64> {
        let n = self.n_atoms as f64;
        self.diag.iter().map(|g| g / n).collect()
    }
}

/// Which solver produced a master-equation result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MasterMethod {
    /// Closed-form expansion over the distinct diagonal rates.
    EigenExpansion,
    /// Poisson-weighted powers of the uniformized jump chain; used when the
    /// eigen-expansion coefficients are badly conditioned.
    Uniformization,
}

/// Eigen-expansion coefficients are accepted while
/// `max_n Σ_k |c_nk| · ε` stays below this.
pub const EXPANSION_ERROR_BUDGET: f64 = 1e-12;
/// Rates closer than this (relative to the largest) count as degenerate.
pub const DEGENERATE_GAP: f64 = 1e-12;

/// Reusable solution of the master equation for one initial state.
#[derive(Debug, Clone)]
pub struct MasterSolution {
    gen: DecayGenerator,
    p0: EnsembleState,
    method: MasterMethod,
    rates: Vec<f64>,
    /// `coeffs[n][k - n]` multiplies `exp(−rate_k t)` in `p_n(t)`.
    coeffs: Vec<Vec<f64>>,
    /// `Σ_n (2n/N) coeffs[n][k - n]`, indexed by `k`.
    fraction_coeffs: Vec<f64>,
}

impl MasterSolution {
    pub fn new(gen: &DecayGenerator, p0: &EnsembleState) -> Result<Self> {
        if gen.n_atoms != p0.n_atoms {
            return Err(Error::DimensionMismatch {
                expected: gen.n_atoms,
                actual: p0.n_atoms,
            });
        }
        let rates = gen.rates();
        let top = rates.len() - 1;
        let scale = rates[top].max(f64::MIN_POSITIVE);
        let degenerate = rates
            .windows(2)
            .any(|w| (w[1] - w[0]).abs() <= DEGENERATE_GAP * scale);

        let mut coeffs: Vec<Vec<f64>> = vec![Vec::new(); top + 1];
        coeffs[top] = vec![p0.probs[top]];
        if !degenerate {
            for n in (0..top).rev() {
                let mut row = vec![0.0; top - n + 1];
                let mut tail = 0.0;
                for k in n + 1..=top {
                    let c = rates[n + 1] * coeffs[n + 1][k - n - 1] / (rates[n] - rates[k]);
                    row[k - n] = c;
                    tail += c;
                }
                row[0] = p0.probs[n] - tail;
                coeffs[n] = row;
            }
        }
        let conditioning = coeffs
            .iter()
            .map(|row| row.iter().map(|c| c.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let method = if degenerate || conditioning * f64::EPSILON > EXPANSION_ERROR_BUDGET {
            MasterMethod::Uniformization
        } else {
            MasterMethod::EigenExpansion
        };

        let n_atoms = gen.n_atoms as f64;
        let mut fraction_coeffs = vec![0.0; top + 1];
        if method == MasterMethod::EigenExpansion {
            for (n, row) in coeffs.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    fraction_coeffs[n + j] += 2.0 * n as f64 / n_atoms * c;
                }
            }
        }
        Ok(MasterSolution {
            gen: gen.clone(),
            p0: p0.clone(),
            method,
            rates,
            coeffs,
            fraction_coeffs,
        })
    }

    pub fn method(&self) -> MasterMethod {
        self.method
    }

    pub fn state_at(&self, t: f64) -> EnsembleState {
        if t == 0.0 {
            return self.p0.clone();
        }
        match self.method {
            MasterMethod::EigenExpansion => {
                let decay: Vec<f64> = self.rates.iter().map(|r| (-r * t).exp()).collect();
                let probs = self
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(n, row)| row.iter().enumerate().map(|(j, c)| c * decay[n + j]).sum())
                    .collect();
                EnsembleState {
                    n_atoms: self.gen.n_atoms,
                    probs,
                }
            }
            MasterMethod::Uniformization => evolve_uniformized(&self.gen, &self.p0, t),
        }
    }

    pub fn excited_fraction_at(&self, t: f64) -> f64 {
        if t == 0.0 {
            return excited_fraction(&self.p0);
        }
        match self.method {
            MasterMethod::EigenExpansion => self
                .fraction_coeffs
                .iter()
                .zip(&self.rates)
                .map(|(c, r)| c * (-r * t).exp())
                .sum(),
            MasterMethod::Uniformization => excited_fraction(&self.state_at(t)),
        }
    }
}

/// Result of [`evolve_master`], tagged with the solver that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterEvolution {
    pub state: EnsembleState,
    pub method: MasterMethod,
}

/// `p(t) = exp(−G t / N) p(0)`.
pub fn evolve_master(gen: &DecayGenerator, p0: &EnsembleState, t: f64) -> Result<MasterEvolution> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param(
            "t",
            format!("must be finite and >= 0, got {t}"),
        ));
    }
    let sol = MasterSolution::new(gen, p0)?;
    Ok(MasterEvolution {
        state: sol.state_at(t),
        method: sol.method(),
    })
}

/// Uniformization: with `Λ = max rate` and the jump chain
/// `P = 1 − G/(NΛ)`, `p(t) = Σ_k Poisson(k; Λt) P^k p(0)`. All terms are
/// nonnegative, so the sum is stable for any `N`.
pub fn evolve_uniformized(gen: &DecayGenerator, p0: &EnsembleState, t: f64) -> EnsembleState {
    let rates = gen.rates();
    let lambda = rates.iter().copied().fold(0.0, f64::max);
    let mean = lambda * t;
    if mean == 0.0 {
        return p0.clone();
    }
    let k_max = (mean + 12.0 * mean.sqrt() + 40.0).ceil() as usize;
    let mut v = p0.probs.clone();
    let mut next = vec![0.0; v.len()];
    let mut out = vec![0.0; v.len()];
    let mut log_fact = 0.0;
    for k in 0..=k_max {
        if k > 0 {
            log_fact += (k as f64).ln();
            let top = v.len() - 1;
            for n in 0..=top {
                let stay = v[n] * (1.0 - rates[n] / lambda);
                let inflow = if n < top {
                    v[n + 1] * rates[n + 1] / lambda
                } else {
                    0.0
                };
                next[n] = stay + inflow;
            }
            std::mem::swap(&mut v, &mut next);
        }
        let w = (-mean + k as f64 * mean.ln() - log_fact).exp();
        if w > 0.0 {
            for (o, x) in out.iter_mut().zip(&v) {
                *o += w * x;
            }
        }
    }
    EnsembleState {
        n_atoms: gen.n_atoms,
        probs: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense RK4 reference, independent of both production solvers.
    fn rk4_reference(gen: &DecayGenerator, p0: &[f64], t: f64, steps: usize) -> Vec<f64> {
        let g = gen.dense() / (-(gen.n_atoms() as f64));
        let mut p = nalgebra::DVector::from_column_slice(p0);
        let h = t / steps as f64;
        for _ in 0..steps {
            let k1 = &g * &p;
            let k2 = &g * (&p + &k1 * (h / 2.0));
            let k3 = &g * (&p + &k2 * (h / 2.0));
            let k4 = &g * (&p + &k3 * h);
            p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        p.as_slice().to_vec()
    }

    #[test]
    fn generator_examples() {
        let g = build_generator(2, 1.0).unwrap();
        assert_eq!(
            g.dense(),
            DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 0.0, 1.0])
        );

        let g = build_generator(4, 1.0).unwrap();
        assert_eq!(g.diagonal(), &[0.0, 1.0, 6.0]);
        assert_eq!(g.entry(0, 1), -1.0);
        assert_eq!(g.entry(1, 2), -6.0);
        assert_eq!(g.entry(0, 2), 0.0);
        assert_eq!(g.entry(2, 1), 0.0);
    }

    #[test]
    fn columns_sum_to_zero() {
        for n in [2, 4, 10, 100, 256] {
            let g = build_generator(n, 0.7).unwrap().dense();
            for col in g.column_iter() {
                assert_eq!(col.sum(), 0.0);
            }
        }
    }

    #[test]
    fn rate_span() {
        for n in [4usize, 10, 100] {
            let rates = build_generator(n, 2.0).unwrap().rates();
            assert_eq!(rates[1], 2.0 / n as f64);
            assert_eq!(*rates.last().unwrap(), 2.0 * (n as f64 - 1.0) / 2.0);
        }
    }

    #[test]
    fn rejects_odd_or_tiny_ensembles() {
        assert!(build_generator(3, 1.0).is_err());
        assert!(build_generator(0, 1.0).is_err());
        assert!(build_generator(4, 0.0).is_err());
        assert!(EnsembleState::new(4, vec![0.5, 0.5]).is_err());
        assert!(EnsembleState::new(4, vec![0.5, 0.6, -0.1]).is_err());
        assert!(EnsembleState::new(4, vec![0.5, 0.6, 0.0]).is_err());
    }

    #[test]
    fn evolve_examples() {
        let g = build_generator(2, 1.0).unwrap();
        let p0 = EnsembleState::fully_excited(2).unwrap();
        assert_eq!(evolve_master(&g, &p0, 0.0).unwrap().state, p0);
        for t in [0.3, 1.0, 2.0, 7.0] {
            let out = evolve_master(&g, &p0, t).unwrap();
            assert_eq!(out.method, MasterMethod::EigenExpansion);
            assert!((out.state.probs()[1] - (-t / 2.0).exp()).abs() < 1e-15);
        }
        let frac = excited_fraction(&evolve_master(&g, &p0, 2.0).unwrap().state);
        assert!((frac - (-1.0f64).exp()).abs() < 1e-15);

        let g = build_generator(16, 1.0).unwrap();
        let late = evolve_master(&g, &EnsembleState::fully_excited(16).unwrap(), 1e6).unwrap();
        assert!((late.state.probs()[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn excited_fraction_examples() {
        assert_eq!(excited_fraction(&EnsembleState::ground(10).unwrap()), 0.0);
        assert_eq!(
            excited_fraction(&EnsembleState::fully_excited(10).unwrap()),
            1.0
        );
    }

    #[test]
    fn both_routes_agree_with_rk4() {
        for n in [4usize, 10, 16, 64] {
            let g = build_generator(n, 1.0).unwrap();
            let m = n / 2 + 1;
            let raw: Vec<f64> = (0..m).map(|k| 1.0 + (k as f64 * 0.7).sin()).collect();
            let total: f64 = raw.iter().sum();
            let p0 = EnsembleState::new(n, raw.iter().map(|x| x / total).collect()).unwrap();
            let sol = MasterSolution::new(&g, &p0).unwrap();
            for t in [0.5, 2.0, 10.0] {
                let reference = rk4_reference(&g, p0.probs(), t, 20_000);
                let a = sol.state_at(t);
                let b = evolve_uniformized(&g, &p0, t);
                for (k, r) in reference.iter().enumerate() {
                    assert!((a.probs()[k] - r).abs() < 1e-10, "N={n} t={t}");
                    assert!((b.probs()[k] - r).abs() < 1e-10, "N={n} t={t}");
                }
                assert!((sol.excited_fraction_at(t) - excited_fraction(&a)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn probability_is_preserved() {
        for n in [16usize, 64, 256] {
            let g = build_generator(n, 1.0).unwrap();
            let sol = MasterSolution::new(&g, &EnsembleState::fully_excited(n).unwrap()).unwrap();
            for k in 0..=100 {
                let t = k as f64 * 0.1;
                let s = sol.state_at(t);
                assert!((s.total() - 1.0).abs() <= 1e-10);
                assert!(s.probs().iter().all(|p| *p >= -1e-12), "N={n} t={t}");
            }
        }
    }

    #[test]
    fn uniformization_handles_large_ensembles() {
        let g = build_generator(1000, 1.0).unwrap();
        let p0 = EnsembleState::fully_excited(1000).unwrap();
        let s = evolve_uniformized(&g, &p0, 5.0);
        assert!((s.total() - 1.0).abs() < 1e-10);
        let frac = excited_fraction(&s);
        // Close to the continuum value 1/(1+t).
        assert!((frac - 1.0 / 6.0).abs() < 5e-3);
    }
}
