//! Physics-compliant channel matrices for dipole-modeled, RIS-parametrized
//! radio environments, with fast realization updates.
//!
//! The end-to-end channel is the RT block of the inverse interaction matrix
//! `W`. Static scatterers are eliminated into a reduced system `R` over the
//! primary dipoles (antennas, RIS elements, mobile scatterers), and new
//! realizations are obtained from cached inverses through low-rank and
//! diagonal-shift updates instead of fresh `O(N^3)` solves.

pub mod error;
pub mod interaction;
pub mod linalg;
pub mod oracle;
pub mod physics;
pub mod reduction;
pub mod scenario;
pub mod specfun;
pub mod updates;

pub use error::{Error, Result};
pub use interaction::InteractionMatrix;
pub use oracle::{channel_full, compare_channels, ChannelDiff, ChannelMatrix};
pub use physics::{DipoleParams, Position, Wavenumber};
pub use reduction::{channel_from_reduced, EigenBasis, EigenPrecompute, ReducedSystem, TrajectoryCache};
pub use updates::{combined_update, one_bit_plan, woodbury_full, woodbury_reduced_channel, DisplacementDelta, OneBitEngine, RisDelta};
pub use scenario::{FreqGrid, Group, IndexMap, RisConfiguration, RisElement, Scenario};
