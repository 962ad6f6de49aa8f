//! Transmit power allocation for communication-assisted sensing (CAS).
//!
//! A base station estimates a target response matrix (TRM) with an MMSE
//! estimator and forwards the estimate to a user over a MIMO link. The
//! user-side distortion splits into the sensing MMSE `D_s` and the
//! rate-limited recovery distortion `D_c`; both depend only on the
//! eigenvalues of the transmit sample covariance. This crate provides:
//!
//! - [`model`]: the closed forms (`f_s`, `g`, eigen-form capacity, report assembly),
//! - [`waterfilling`]: forward water-filling for capacity and reverse
//!   water-filling for the Gaussian rate-distortion function,
//! - [`separated`]: the refine-on-grid power split search for separated waveforms,
//! - [`dual`]: the projected gradient search for a shared dual-functional waveform,
//! - [`channel`]: seeded Rayleigh channels, waveform reconstruction and
//!   matrix / Monte Carlo oracles for the closed forms.
//!
//! All logarithms are natural; rates are in nats per block.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dual;
pub mod error;
pub mod model;
pub mod separated;
pub mod waterfilling;

pub use channel::{CommChannel, WaveformCovariance};
pub use dual::{DualOptions, DualSolution, InitKind};
pub use error::{CasError, Result};
pub use model::{DistortionReport, PowerAllocation, SystemConfig};
pub use separated::{SeparatedOptions, SeparatedSolution};
pub use waterfilling::{ReverseWaterfillResult, WaterfillResult};
