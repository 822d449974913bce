//! Configurations, radius laws and the Poisson Boolean reference model.

pub mod boolean;
pub mod config;
pub mod law;
pub mod params;

pub use boolean::{
    expected_hits, sample_boolean_with_halo, sample_poisson_boolean, CoverageProbe, HaloSample,
};
pub use config::Configuration;
pub use law::RadiusLaw;
pub use params::ModelParams;
