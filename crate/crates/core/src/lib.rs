//! Analysis and simulation of self-interference in multi-hop wireless chains.
//!
//! Layers, bottom-up:
//! - [`rf`]: two-ray path loss, SINR, channel-state thresholds, shadowed ETX.
//! - [`classify`]: MAC-level interaction categories (SC / HT / HTC) for link
//!   pairs and chain signatures.
//! - [`topology`], [`routing`], [`census`]: uniform deployments, ETX-weighted
//!   greedy geographic forwarding and signature censuses.
//! - [`sim`]: discrete-event CSMA/CA (DCF basic access) over an SINR/capture
//!   reception model.
//! - [`experiments`]: scenario builders and study drivers.
//! - [`config`]: sectioned `key = value` scenario files.

pub mod census;
pub mod chain;
pub mod classify;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geom;
pub mod rf;
pub mod routing;
pub mod sim;
pub mod topology;

pub use chain::{Chain, Link};
pub use error::{Error, Result};
pub use geom::{NodeId, Point};
pub use rf::RadioConfig;
