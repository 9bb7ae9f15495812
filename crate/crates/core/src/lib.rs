//! Desk-scale simulation of a randomness pipeline that turns a partially
//! secret message into certified random bits, and then into a
//! device-independent QKD session that needs no trusted random number
//! generator.
//!
//! The pipeline has two regimes which are never silently mixed:
//!
//! * **full-scale calculators** evaluate the security-parameter formulas at
//!   their true magnitudes (errors like `2^-12000` are carried as base-2
//!   logarithms), and
//! * **toy structural runs** actually move bits through the extractor, the
//!   GHZ-game devices and the session event loop, at parameters small enough
//!   to enumerate and test exhaustively.
//!
//! Module map:
//!
//! * [`bitcore`]: bit strings, explicit classical sources, and brute-force
//!   oracles for guessing probability, min-entropy and distance to uniform.
//! * [`trevisan`]: weak-design construction, the concatenated-code one-bit
//!   extractor, multi-bit extraction and the seed-length/error calculators.
//! * [`ghz`]: three-component untrusted devices playing the GHZ game
//!   (honest quantum, noisy, deterministic and scripted models).
//! * [`expansion`]: the one-shot and two-device unbounded expansion
//!   protocols plus their error calculator.
//! * [`processing`]: the full extract-all-seeds / expand / XOR-fold pipeline
//!   and the composed security-parameter calculators.
//! * [`qkd`]: the event-ordered key-distribution session with an
//!   eavesdropper-operated pair source.

pub mod bitcore;
pub mod error;
pub mod expansion;
pub mod ghz;
pub mod processing;
pub mod qkd;
pub mod simrng;
pub mod trevisan;

pub use bitcore::{BitString, CqSource, EntropyEstimate, ExplicitDist};
pub use error::{CoreError, Result};
pub use expansion::{ExpansionConfig, ExpansionOutcome, ExpansionStatus, MsErrorParams};
pub use ghz::{Device, DeviceModel, GhzInput, GhzOutput, Strategy};
pub use processing::{ProcessingConfig, ProcessingOutcome, SecurityReport};
pub use qkd::{EveModel, KeyPair, SessionConfig, SessionTranscript};
pub use trevisan::{ExtractorParams, WeakDesign};
