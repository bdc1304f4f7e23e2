//! Finite-N physics of pair decay: the symmetric-mixture master equation,
//! a Gillespie pair-collision simulator, and an exact small-N Liouville
//! solver for measuring how far the pair reduction is from a product state.

mod gillespie;
mod master;
mod nbody;

pub use gillespie::{gillespie_decay, McConfig, McSamples};
pub use master::{
    build_generator, evolve_master, evolve_uniformized, excited_fraction, DecayGenerator,
    EnsembleState, MasterEvolution, MasterMethod, MasterSolution, DEGENERATE_GAP,
    EXPANSION_ERROR_BUDGET,
};
pub use nbody::{
    exact_nbody_evolve, exact_nbody_evolve_state, excitation_populations, factorization_defect,
    MAX_EXACT_ATOMS,
};
