//! Vertical carbody vibration under track excitation.
//!
//! Two models are provided: a quarter-car style two-mass system with a closed
//! form transfer function ([`two_dof`]) and a flexible Euler-Bernoulli beam
//! carbody on two pitching bogies ([`multi_dof`]). Passenger load enters both as
//! added carbody mass. [`spectrum`] combines the multi-DOF response with the
//! track irregularity PSD ([`track`]) and inverts load -> PSD.

pub mod beam;
pub mod multi_dof;
pub mod params;
pub mod spectrum;
pub mod track;
pub mod two_dof;

pub use beam::{beam_mode_roots, modal_frequencies, ModalBasis};
pub use multi_dof::{assemble_system, frequency_response, SystemMatrices, WheelInput};
pub use params::{MultiDofParams, TwoDofParams};
pub use spectrum::{
    carbody_accel_psd, estimate_passenger_count, FrequencyGrid, LoadEstimate, Spectrum,
};
pub use track::{track_psd, TrackModel};
pub use two_dof::{two_dof_transfer, two_dof_transfer_at};
