//! Design and evaluation of binary linear block codes for belief propagation.
//!
//! The crate is organised bottom-up:
//!
//! * [`gf2`]: dense GF(2) linear algebra (rank, systematic form, generator
//!   derivation, syndromes, encoding).
//! * [`code`]: parity-check matrices: alist/dense I/O, random systematic
//!   initialisation and structural statistics (density, girth, sparsity).
//! * [`channel`]: BPSK, AWGN / Rayleigh fading / bursty noise, LLRs.
//! * [`decoder`]: tensor (complete-graph) belief propagation, the sparse
//!   edge-based reference decoder and the min-sum variant.
//! * [`grad`]: decoding loss and its hand-written adjoint with respect to the
//!   parity-check matrix, chained through a straight-through estimator.
//! * [`optimizer`]: the sign-flip line-search code optimiser and the
//!   hyperparameter sweep.
//! * [`eval`]: Monte Carlo BER/FER measurement, report I/O and dB-gain
//!   statistics.

pub mod channel;
pub mod code;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod gf2;
pub mod grad;
pub mod optimizer;
mod reduce;
pub mod rng;

pub use channel::{ChannelFamily, ChannelSpec};
pub use code::{CodeStats, Girth, ParityCheck};
pub use decoder::{BpConfig, BpVariant, DecodeResult};
pub use error::{Error, Result};
pub use eval::{EvalMode, EvalReport, GainStats, StopRule};
pub use gf2::BitMatrix;
pub use grad::{LossConfig, LossMode};
pub use optimizer::{TrainConfig, TrainTrace};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
