pub mod cli;
pub mod conserved;
pub mod numerics;
pub mod params;
pub mod profile;
pub mod real;
pub mod specfun;
pub mod stability;
pub mod variational;

pub use real::Real;

/// `f64` instantiations of the generic types.
pub type Params = params::ModelParams<f64>;
pub type Profile = profile::CompactonProfile<f64>;
pub type Exponents = params::ScalingExponents<f64>;
pub type Conserved = conserved::ConservedSet<f64>;
pub type ConservedReport = conserved::ConservedReport<f64>;
pub type StabilityReport = stability::StabilityReport<f64>;
pub type Constants = variational::CConstants<f64>;
pub type Trial = variational::TrialFunction<f64>;
