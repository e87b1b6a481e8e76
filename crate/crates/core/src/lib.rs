//! Exact symbolic dynamics on the binary shift space.
//!
//! The crate is organised bottom-up:
//!
//! * [`bitseq`]: finite words, rule-backed infinite binary sequences, the
//!   shift map and the exact dyadic metric.
//! * [`tau`]: the factorial block construction of a scrambled set and a
//!   random-access indexer that never materialises the sequence.
//! * [`witness`]: distance series, the scheduled-time checks, constructive
//!   witnesses and the witness search for the chaos definition.
//! * [`interval`]: exact rational dynamics of piecewise-linear interval maps
//!   and the logistic family.
//! * [`turbulence`]: lap decomposition, fixed points and turbulence
//!   certificates.
//! * [`cli`]: the `symchaos` command-line surface.

pub mod bitseq;
pub mod cli;
pub mod error;
pub mod interval;
pub mod rational;
pub mod tau;
pub mod turbulence;
pub mod witness;

pub use bitseq::{truncated_distance, BitStream, DyadicDistance, Word};
pub use error::{Error, Result};
pub use interval::{PwlMap, RationalInterval};
pub use tau::{SegmentRef, TauLayout, TauParams};
pub use turbulence::{TurbulenceCertificate, TurbulenceOutcome};
pub use witness::{DistanceSeries, DynSystem, ScanMode, ShiftSpace, WitnessReport};
