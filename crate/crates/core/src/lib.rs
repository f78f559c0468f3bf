//! Stabilization of continuous-time linear plants over MIMO transceivers
//! whose subchannel capacities are fixed in advance.
//!
//! The pipeline is: decompose the plant into cyclic single-input blocks
//! ([`cyclic`]), compare the subchannel capacities against the block
//! entropies under strict weak majorization ([`majorize`]), and when the
//! comparison succeeds synthesize a feedback gain together with an
//! encoder/decoder pair ([`codesign`]) whose closed loop is then verified
//! numerically ([`analysis`]).

pub mod analysis;
pub mod codesign;
pub mod cyclic;
pub mod error;
pub mod majorize;
pub mod numerics;
pub mod plantmodel;

pub use error::{Error, Result};
