//! Discrete-event simulation of a mobility-on-demand fleet that carries
//! passengers and same-day parcels ("cargo-hitching").
//!
//! The crate is organised bottom-up:
//!
//! * [`network`] — road graph, congestible travel-time field, time-dependent
//!   routing and the within-day learning update.
//! * [`demand`] — synthetic and file-based passenger/parcel requests.
//! * [`dispatch`] — the fleet controller: schedules, insertion heuristic and
//!   the parcel strategy gates.
//! * [`engine`] — the event loop, replications and learning passes.
//! * [`freight`] — conventional carrier depot tours.
//! * [`metrics`] — traveler, shipper, operator and network indicators.

pub mod demand;
pub mod dispatch;
pub mod engine;
mod error;
pub mod freight;
pub(crate) mod io;
pub mod metrics;
pub mod network;
pub mod time;

pub use error::{Error, Result};
