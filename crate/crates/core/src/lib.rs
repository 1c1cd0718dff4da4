//! Numerical laboratory for measuring entanglement directly from moments.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense complex linear algebra and subsystem index machinery.
//! * [`states`]: fixtures, seeded random states and the antilinear transforms.
//! * [`oracle`]: ground-truth concurrence, moments, negativity and CCNR.
//! * [`schemes`]: maximally-entangled-state identities, moment circuits and
//!   the moment-to-spectrum inversion.
//! * [`sampling`]: finite-shot emulation, bootstrap intervals and the
//!   sequential one-pair-at-a-time protocol.

pub mod error;
pub mod oracle;
pub mod rng;
pub mod sampling;
pub mod schemes;
pub mod states;
pub mod tensor;

pub use error::{Error, Result};
