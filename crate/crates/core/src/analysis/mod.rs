//! Events, geometric constructions, bound calculators and estimators used
//! in the existence and phase-transition arguments.

mod entropy;
mod events;
mod np;
mod shield;
mod tilted;

pub use entropy::{mono_lower_bound, phi_y, psi, psi_derivative, psi_root, wr_entropy_upper};
pub use events::{crossing_components, event_aij, event_wij, localization_check};
pub use np::estimate_np;
pub use shield::{
    build_shield, covering_test, locality_trials, shield_event_wk, shield_locality_check, CoveringReport,
    ShieldGeometry,
};
pub use tilted::{np_bound, tilted_law, TiltedLaw};
