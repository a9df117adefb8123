//! Parametric Bayesian phase tracking for single-carrier links under Wiener
//! phase noise, with the surrounding BICM chain and a Monte-Carlo PER
//! harness.
//!
//! The crate is organized around the simulated receiver pipeline:
//!
//! * [`circmath`] — Tikhonov algebra, Bessel-ratio approximations, circular
//!   moment matching, and the wrapped-Gaussian convolution rule.
//! * [`sigmodel`] — Gray-mapped QAM, pilot framing, the Wiener phase walk and
//!   the AWGN observation model.
//! * [`trackers`] — the phase-tracking algorithms: the discretized oracle
//!   (DMP), CBC with Gaussian or moment-matching projection, SKR, their EP
//!   refinements, and the CBC+SKR hybrid.
//! * [`fec`] — max-log demapping, LDPC min-sum decoding over alist-specified
//!   codes, decoder-to-demapper prior conversion, and the GMI diagnostic.
//! * [`harness`] — deterministic per-frame pipelines, the PER sweep engine
//!   with its stop rule, and CSV emission.
//! * [`selftest`] — the acceptance checks behind `phasetrack selftest`.
//!
//! Frame-level parallelism is provided by rayon behind the `parallel`
//! feature (enabled by default); results are identical for any worker count.

pub mod circmath;
pub mod fec;
pub mod harness;
pub mod seed;
pub mod selftest;
pub mod sigmodel;
pub mod trackers;
