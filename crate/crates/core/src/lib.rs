//! Kinetics of first-photon emission for two-atom systems.
//!
//! The crate covers four views of the same physics:
//!
//! * [`analytic`]: closed-form rates, cumulative distributions and the
//!   post-selected product-state law with its normalization.
//! * [`kinetics`]: fixed-step RK4 integration of the population rate
//!   equations, checked against the closed forms.
//! * [`montecarlo`]: seeded, worker-count independent sampling of pair
//!   histories plus coincidence-window post-selection.
//! * [`estimation`]: exponential MLE, Kolmogorov-Smirnov distance and
//!   likelihood-based discrimination between the entangled and product laws.
//!
//! [`wavefunction`] holds the two-particle amplitude checks for identical
//! fermions (antisymmetrization, swap overlap, free spectral propagation).

pub mod analytic;
pub mod error;
pub mod estimation;
pub mod kinetics;
pub mod montecarlo;
pub mod quadrature;
pub mod series;
pub mod wavefunction;

pub use analytic::{
    Channel, NormalizedWindowModel, RatePair, WindowConfig, WindowMode, WindowVariant,
};
pub use error::{Error, Result};
pub use estimation::{FitResult, ModelComparison, PreferredModel};
pub use kinetics::{IntegratorConfig, KineticsState};
pub use montecarlo::{EmissionRecord, PairKind, PostSelectionSummary, SimConfig};
pub use series::BinnedSeries;
pub use wavefunction::{Grid1D, TwoParticleAmplitude};
