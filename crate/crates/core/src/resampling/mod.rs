//! Reservoirs, resampling and MIS weights, shift mappings, and the temporal and
//! spatial reservoir combination procedures.

mod combine;
pub mod mis;
mod reservoir;
mod shift;

pub use combine::{combine_spatial, combine_temporal, ResamplingDomain};
pub use mis::{MisContext, TemporalRole};
pub use reservoir::Reservoir;
pub use shift::ShiftResult;
