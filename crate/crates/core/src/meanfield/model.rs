use nalgebra::Vector3;

use crate::qcore::{BlochVector, PairGenerator};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    PairDecay,
    /// `θ` in radians; `sin θ` must not vanish.
    PairDephasing {
        theta: f64,
    },
    SingletPurification,
}

/// A model together with its collision rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    kind: ModelKind,
    gamma: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::param(
                "gamma",
                format!("must be finite and > 0, got {gamma}"),
            ));
        }
        if let ModelKind::PairDephasing { theta } = kind {
            if !theta.is_finite() || theta.sin().abs() < 1e-12 {
                return Err(Error::param(
                    "theta",
                    format!("sin(theta) must be nonzero, got theta = {theta}"),
                ));
            }
        }
        Ok(ModelSpec { kind, gamma })
    }

    pub fn pair_decay(gamma: f64) -> Result<Self> {
        Self::new(ModelKind::PairDecay, gamma)
    }

    pub fn pair_dephasing(theta: f64, gamma: f64) -> Result<Self> {
        Self::new(ModelKind::PairDephasing { theta }, gamma)
    }

    /// Singlet purification at unit rate.
    pub fn singlet_purification() -> Self {
        ModelSpec {
            kind: ModelKind::SingletPurification,
            gamma: 1.0,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Pair generator whose partial-trace reduction gives this model.
    pub fn pair_generator(&self) -> PairGenerator {
        let g = match self.kind {
            ModelKind::PairDecay => PairGenerator::pair_decay(self.gamma),
            ModelKind::PairDephasing { theta } => PairGenerator::pair_dephasing(theta, self.gamma),
            ModelKind::SingletPurification => PairGenerator::singlet_purification(self.gamma),
        };
        g.expect("validated model parameters")
    }

    pub(crate) fn field(&self, u: &Vector3<f64>) -> Vector3<f64> {
        let gamma = self.gamma;
        match self.kind {
            ModelKind::PairDecay => {
                let eff = gamma * (1.0 - u.z) / 2.0;
                -eff / 2.0 * Vector3::new(u.x, u.y, 2.0 * (u.z - 1.0))
            }
            ModelKind::PairDephasing { theta } => {
                let g = super::dephasing_rate(theta, gamma, u.z);
                -g * Vector3::new(u.x, u.y, 0.0)
            }
            ModelKind::SingletPurification => {
                Vector3::new(0.0, 0.0, gamma * (1.0 - u.norm_squared()) / 4.0)
            }
        }
    }

    /// Closed-form state at time `t` from `u0`.
    pub fn exact(&self, u0: &BlochVector, t: f64) -> BlochVector {
        match self.kind {
            ModelKind::PairDecay => super::decay_transverse_exact(u0, self.gamma, t),
            ModelKind::PairDephasing { theta } => super::dephasing_exact(u0, theta, self.gamma, t),
            ModelKind::SingletPurification => super::hemisphere_exact(u0, self.gamma * t),
        }
    }

    /// Limit of the trajectory from `u0` as `t → ∞`.
    pub fn fixed_point(&self, u0: &BlochVector) -> Vector3<f64> {
        match self.kind {
            ModelKind::PairDecay => {
                if u0.z() >= 1.0 {
                    u0.vector()
                } else {
                    Vector3::new(0.0, 0.0, 1.0)
                }
            }
            ModelKind::PairDephasing { .. } => Vector3::new(0.0, 0.0, u0.z()),
            ModelKind::SingletPurification => {
                let g = (1.0 - u0.x() * u0.x() - u0.y() * u0.y()).max(0.0).sqrt();
                if u0.z() <= -g {
                    u0.vector()
                } else {
                    Vector3::new(u0.x(), u0.y(), g)
                }
            }
        }
    }
}

/// Closed-form Bloch vector field of `model` at `u`.
pub fn model_rhs(model: &ModelSpec, u: &BlochVector) -> Vector3<f64> {
    model.field(&u.vector())
}
