//! The three exactly solvable qubit models, their closed-form solutions,
//! a fixed-step RK4 integrator and exponential-rate extraction.
//!
//! Bloch fields (`γ` is the collision rate):
//!
//! | model | `u̇` |
//! |---|---|
//! | pair decay | `−(γ̃/2)(u_x, u_y, 2(u_z − 1))`, `γ̃ = γ(1 − u_z)/2` |
//! | pair dephasing | `−g (u_x, u_y, 0)`, `g = γ sin²θ (1 + u_z sin 2θ)` |
//! | singlet purification | `γ (0, 0, 1 − u·u)/4` |
//!
//! The singlet model is usually quoted with `γ = 1`; other values rescale
//! time.

mod exact;
mod fit;
mod integrate;
mod model;

pub use exact::{
    decay_transverse_exact, decay_uz_exact, dephasing_exact, dephasing_rate, hemisphere_exact,
};
pub use fit::{fit_exponential_rate, Axis, RateReport, FIT_SAMPLES, FIT_WINDOW_RATES};
pub use integrate::{
    integrate, integrate_generator, integrate_sampled, richardson_error, Trajectory,
    BALL_OVERSHOOT_REJECT, DEFAULT_DT,
};
pub use model::{model_rhs, ModelKind, ModelSpec};
