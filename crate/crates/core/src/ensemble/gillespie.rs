//! Event-driven Monte Carlo of pair decay.
//!
//! Only the number `m` of excited atoms is tracked: pair decay maps
//! diagonal states to diagonal states. With `m` excited atoms the next decay
//! fires after an exponential wait with total rate `(γ/N)·m(m−1)/2` and
//! sets `m → m − 2`.
//!
//! Run `r` draws from the ChaCha8 stream `r` keyed by the master seed, so
//! results do not depend on how runs are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n_atoms: usize,
    pub gamma: f64,
    pub runs: usize,
    pub seed: u64,
    /// Ascending, nonnegative.
    pub sample_times: Vec<f64>,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::param("n_atoms", "must be positive"));
        }
        if !self.gamma.is_finite() || self.gamma <= 0.0 {
            return Err(Error::param(
                "gamma",
                format!("must be > 0, got {}", self.gamma),
            ));
        }
        if self.runs == 0 {
            return Err(Error::param("runs", "must be >= 1"));
        }
        if self.sample_times.is_empty() {
            return Err(Error::param("sample_times", "must not be empty"));
        }
        let bad_order = self.sample_times.windows(2).any(|w| !(w[1] >= w[0]));
        let bad_value = self.sample_times.iter().any(|t| !t.is_finite() || *t < 0.0);
        if bad_order || bad_value {
            return Err(Error::param(
                "sample_times",
                "must be finite, >= 0 and ascending",
            ));
        }
        Ok(())
    }
}

/// Excited fractions, one row per run and one column per sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct McSamples {
    sample_times: Vec<f64>,
    runs: usize,
    data: Vec<f64>,
}

impl McSamples {
    pub fn sample_times(&self) -> &[f64] {
        &self.sample_times
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn run(&self, r: usize) -> &[f64] {
        let w = self.sample_times.len();
        &self.data[r * w..(r + 1) * w]
    }

    /// Per-time mean over runs, summed in run order.
    pub fn mean(&self) -> Vec<f64> {
        let w = self.sample_times.len();
        let mut acc = vec![0.0; w];
        for row in self.data.chunks(w) {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        }
        acc.iter().map(|a| a / self.runs as f64).collect()
    }

    /// Standard error of the mean, `s / √runs`, with the unbiased sample
    /// variance. Zero for a single run.
    pub fn std_error(&self) -> Vec<f64> {
        let w = self.sample_times.len();
        if self.runs < 2 {
            return vec![0.0; w];
        }
        let mean = self.mean();
        let mut acc = vec![0.0; w];
        for row in self.data.chunks(w) {
            for ((a, x), m) in acc.iter_mut().zip(row).zip(&mean) {
                *a += (x - m) * (x - m);
            }
        }
        let r = self.runs as f64;
        acc.iter()
            .map(|s| (s / (r - 1.0)).sqrt() / r.sqrt())
            .collect()
    }
}

fn run_once(cfg: &McConfig, m0: usize, run: usize, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(run as u64);
    let n = cfg.n_atoms as f64;
    let pair_rate = cfg.gamma / n;
    let mut m = m0;
    let mut t = 0.0;
    let mut idx = 0;
    let times = &cfg.sample_times;
    while idx < times.len() {
        let total = pair_rate * (m * m.saturating_sub(1)) as f64 / 2.0;
        let next = if total > 0.0 {
            let wait: f64 = rng.sample(Exp1);
            t + wait / total
        } else {
            f64::INFINITY
        };
        while idx < times.len() && times[idx] < next {
            out[idx] = m as f64 / n;
            idx += 1;
        }
        m -= 2.min(m);
        t = next;
    }
}

/// Simulates `cfg.runs` independent runs starting from `m0` excited atoms.
pub fn gillespie_decay(cfg: &McConfig, m0: usize) -> Result<McSamples> {
    cfg.validate()?;
    if m0 > cfg.n_atoms {
        return Err(Error::param(
            "m0",
            format!("{m0} excited atoms exceed N = {}", cfg.n_atoms),
        ));
    }
    let w = cfg.sample_times.len();
    let mut data = vec![0.0; cfg.runs * w];
    data.par_chunks_mut(w)
        .enumerate()
        .for_each(|(run, row)| run_once(cfg, m0, run, row));
    Ok(McSamples {
        sample_times: cfg.sample_times.clone(),
        runs: cfg.runs,
        data,
    })
}
