//! Bit-level processing around the tracker: max-log demapping, LDPC min-sum
//! decoding over alist-specified parity-check matrices, decoder-to-demapper
//! prior conversion with LLR damping, and the GMI diagnostic.
//!
//! LLR sign convention, fixed once for the whole crate: a positive LLR means
//! the bit is more likely `1` (`llr = log P(c=1)/P(c=0)`). The min-sum core
//! flips signs internally where convenient.

mod alist;
mod demap;
mod gmi;
mod ldpc;

pub use alist::{parse_alist, AlistMatrix};
pub use demap::{llr_from_logprobs, symbol_priors_from_llrs};
pub use gmi::gmi;
pub use ldpc::{minsum_decode, DecodeOutcome, DecoderState, LdpcCode};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FecError {
    #[error("alist line {line}: {message}")]
    AlistParse { line: usize, message: String },
    #[error("expected {want} values, got {got}")]
    LengthMismatch { want: usize, got: usize },
    #[error("check-node scale must lie in (0, 1], got {0}")]
    InvalidScale(f64),
    #[error("LLR damping factor must lie in [0, 1], got {0}")]
    InvalidDamping(f64),
    #[error("decoder state holds {got} edge messages, code has {want}")]
    StateMismatch { want: usize, got: usize },
    #[error("could not read {path}: {message}")]
    Io { path: String, message: String },
}
