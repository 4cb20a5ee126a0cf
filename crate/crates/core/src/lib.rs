//! Simulator for MIMO-NOMA downlink transmission with signal-alignment
//! precoding, seen from a passive multi-antenna eavesdropper.
//!
//! The modules build on each other bottom-up:
//!
//! - [`channel`]: configuration, path loss and Rayleigh fading draws.
//! - [`alignment`]: per-pair detection vectors and the precoder `P = G^{-1} F`.
//! - [`sinr`]: detector SINR, the optimal detector, legitimate-user SINRs.
//! - [`bounds`]: eavesdropper SINR bounds and secrecy capacity.
//! - [`experiments`]: seeded Monte Carlo sweeps and antenna scaling.
//! - [`cli`]: the `noma-shield` command-line front end.

pub mod alignment;
pub mod bounds;
pub mod channel;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod sinr;
pub mod verify;

pub use alignment::{alignment_vectors, build_precoder, AlignedPrecoder, PairAlignment};
pub use bounds::{eve_sinr_bounds, secrecy_capacity, BoundReport};
pub use channel::{path_loss, sample_fading_matrix, sample_population, DistancePins, EveChannel, SystemConfig, UserPopulation};
pub use error::{Error, Result};
pub use sinr::{legit_sinr_opt, legit_sinr_zf, optimal_eve_sinr, sinr_with_detector, EffectiveChannel, LinkParams};
