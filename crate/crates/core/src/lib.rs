//! Four-group decodable differential space-time block codes built from
//! scaled-unitary codewords.
//!
//! * [`numerics`]: small dense complex and Gaussian-integer matrices.
//! * [`design`]: ABBA/doubling designs for `2^lambda` antennas and the exact
//!   cross-group decodability check.
//! * [`signalset`]: axis and circle/hyperbola signal sets.
//! * [`codebook`]: codewords, scaled-unitarity, diversity and coding gain.
//! * [`diffcodec`]: differential encoder, block Rayleigh channel, exhaustive
//!   and per-group decoders.
//! * [`sim`]: seeded Monte Carlo error-rate sweeps.

pub mod codebook;
pub mod design;
pub mod diffcodec;
pub mod error;
pub mod numerics;
pub mod signalset;
pub mod sim;

pub use error::{Error, Result};
