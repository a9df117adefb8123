//! Monte-Carlo experiment engine: deterministic per-frame pipelines
//! (one-shot and iterative scheduling), PER estimation with the
//! frames-or-errors stop rule, reference modes, and CSV emission.
//!
//! Determinism contract: every frame is a pure function of
//! `(config, frame_index)` through the derived seed streams, so a sweep with
//! a fixed base seed produces identical CSV bytes for any worker count.

mod sweep;

pub use sweep::{run_sweep, SweepResult, SweepRow};

use crate::fec::{
    gmi, llr_from_logprobs, minsum_decode, symbol_priors_from_llrs, DecoderState, FecError,
    LdpcCode,
};
use crate::seed::{stream_seed, Stream};
use crate::sigmodel::{
    apply_channel, n0_from_snr_db, wiener_phase, ChannelRealization, Constellation, Frame,
    SigModelError,
};
use crate::trackers::{
    all_pilots_track, dmp_track, kl_to_reference, track, Algorithm, SymbolBeliefs,
    TrackerConfig, TrackerError, TrackerOutput, BELIEF_FLOOR,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    SigModel(#[from] SigModelError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error(transparent)]
    Fec(#[from] FecError),
}

/// Receiver scheduling: track once then decode, or alternate one tracking
/// pass with one decoder iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiverMode {
    OneShot,
    Iterative,
}

impl ReceiverMode {
    pub fn name(&self) -> &'static str {
        match self {
            ReceiverMode::OneShot => "one_shot",
            ReceiverMode::Iterative => "iterative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "one_shot" | "oneshot" => Some(ReceiverMode::OneShot),
            "iterative" => Some(ReceiverMode::Iterative),
            _ => None,
        }
    }
}

/// Reference bounds replacing the tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMode {
    /// Run the configured tracking algorithm.
    None,
    /// Every symbol acts as a pilot in the recursion (joint-decoding bound).
    AllPilots,
    /// No phase noise and ideal phase knowledge (channel bound).
    Awgn,
}

impl ReferenceMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(ReferenceMode::None),
            "all_pilots" => Some(ReferenceMode::AllPilots),
            "awgn" => Some(ReferenceMode::Awgn),
            _ => None,
        }
    }
}

/// Full experiment description.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub modulation_order: usize,
    pub snr_db: Vec<f64>,
    /// Phase-noise step deviation in radians (sigma_w, not squared).
    pub sigma_w: f64,
    pub pilot_spacing: usize,
    pub tracker: TrackerConfig,
    pub receiver: ReceiverMode,
    /// Total decoder iterations `I_dec`.
    pub dec_iterations: usize,
    /// LLR damping `psi` applied to decoder feedback.
    pub llr_damping: f64,
    /// Min-sum check-node scale `rho`.
    pub min_sum_scale: f64,
    pub code_path: PathBuf,
    pub max_frames: u64,
    pub max_frame_errors: u64,
    pub base_seed: u64,
    pub reference: ReferenceMode,
    /// Worker threads for the sweep; 0 picks the library default.
    pub workers: usize,
    /// Report wall-clock time in sweep rows (off for byte-reproducible CSV).
    pub timing: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            modulation_order: 16,
            snr_db: vec![16.0],
            sigma_w: 0.1,
            pilot_spacing: 25,
            tracker: TrackerConfig::new(Algorithm::CbcCmm),
            receiver: ReceiverMode::OneShot,
            dec_iterations: 10,
            llr_damping: 0.7,
            min_sum_scale: 0.7,
            code_path: PathBuf::from("codes/regular_3_6_n1008.alist"),
            max_frames: 100_000,
            max_frame_errors: 100,
            base_seed: 1,
            reference: ReferenceMode::None,
            workers: 0,
            timing: true,
        }
    }
}

impl SimConfig {
    /// Name appearing in the `algorithm` CSV column.
    pub fn algorithm_label(&self) -> &'static str {
        match self.reference {
            ReferenceMode::None => self.tracker.algorithm.name(),
            ReferenceMode::AllPilots => "all_pilots",
            ReferenceMode::Awgn => "awgn",
        }
    }
}

/// Outcome of one simulated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub error: bool,
    /// Decoder iterations actually executed.
    pub dec_iterations: usize,
    /// GMI of the final demapper LLR stream against the coded bits.
    pub gmi: f64,
}

/// One diagnostic row (per payload position, final iteration).
#[derive(Debug, Clone)]
pub struct DiagnosticRow {
    pub frame: u64,
    pub n: usize,
    pub algorithm: String,
    pub iter: usize,
    pub delta_kl: f64,
    pub re_zab: f64,
    pub im_zab: f64,
}

/// Message-dump row (per payload position and EP iteration).
#[derive(Debug, Clone)]
pub struct MessageDumpRow {
    pub n: usize,
    pub algo: String,
    pub iter: usize,
    pub re_z_alpha: f64,
    pub im_z_alpha: f64,
    pub re_z_beta: f64,
    pub im_z_beta: f64,
    pub kl_to_dmp: f64,
}

/// Everything `run_diagnostics` produces for one frame.
#[derive(Debug, Clone)]
pub struct DiagnosticBundle {
    pub rows: Vec<DiagnosticRow>,
    pub message_dump: Vec<MessageDumpRow>,
    /// Mean KL distance to the DMP reference over payload positions.
    pub mean_delta_kl: f64,
    /// DMP posterior densities: `(n, theta, pdf)` samples.
    pub phase_pdfs: Vec<(usize, f64, f64)>,
}

/// Validated simulator holding the loaded code and constellation.
#[derive(Debug)]
pub struct Simulator {
    cfg: SimConfig,
    code: LdpcCode,
    constellation: Constellation,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self, HarnessError> {
        if cfg.snr_db.is_empty() {
            return Err(HarnessError::Config("snr_db list must not be empty".into()));
        }
        if cfg.max_frame_errors < 1 {
            return Err(HarnessError::Config("max_frame_errors must be at least 1".into()));
        }
        if cfg.max_frames < 1 {
            return Err(HarnessError::Config("max_frames must be at least 1".into()));
        }
        if !(cfg.sigma_w > 0.0) && cfg.reference != ReferenceMode::Awgn {
            return Err(HarnessError::Config("sigma_w must be positive".into()));
        }
        if !(0.0..=1.0).contains(&cfg.llr_damping) {
            return Err(HarnessError::Config(format!(
                "llr_damping must lie in [0, 1], got {}",
                cfg.llr_damping
            )));
        }
        if !(cfg.min_sum_scale > 0.0 && cfg.min_sum_scale <= 1.0) {
            return Err(HarnessError::Config(format!(
                "min_sum_scale must lie in (0, 1], got {}",
                cfg.min_sum_scale
            )));
        }
        cfg.tracker.validate()?;
        let constellation = Constellation::build(cfg.modulation_order)?;
        let code = LdpcCode::from_alist_file(&cfg.code_path)?;
        let m = constellation.bits_per_symbol();
        if code.n() % m != 0 {
            return Err(HarnessError::Config(format!(
                "code length {} is not a multiple of {} bits per symbol",
                code.n(),
                m
            )));
        }
        let payload_len = code.n() / m;
        if cfg.pilot_spacing < 2 || payload_len % (cfg.pilot_spacing - 1) != 0 {
            return Err(HarnessError::Config(format!(
                "payload of {payload_len} symbols does not fill pilot spacing {}: \
                 need a multiple of {} (valid spacings: {})",
                cfg.pilot_spacing,
                cfg.pilot_spacing - 1,
                valid_spacings(payload_len)
            )));
        }
        Ok(Self { cfg, code, constellation })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn code(&self) -> &LdpcCode {
        &self.code
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    /// Transmit side plus channel for one frame index, fully seed-determined.
    fn realize(
        &self,
        snr_db: f64,
        frame_index: u64,
    ) -> Result<(Vec<u8>, Vec<u8>, Frame, ChannelRealization), HarnessError> {
        let cfg = &self.cfg;
        let mut data_rng =
            ChaCha8Rng::seed_from_u64(stream_seed(cfg.base_seed, frame_index, Stream::Data));
        let info: Vec<u8> = (0..self.code.k()).map(|_| data_rng.random_range(0..2u8)).collect();
        let codeword = self.code.encode(&info)?;
        let payload = self.constellation.map_bits(&codeword)?;
        let frame = Frame::build(
            &payload,
            cfg.pilot_spacing,
            stream_seed(cfg.base_seed, frame_index, Stream::Pilot),
        )?;
        let n0 = n0_from_snr_db(snr_db);
        let phases = if cfg.reference == ReferenceMode::Awgn {
            vec![0.0; frame.last_index() + 1]
        } else {
            wiener_phase(
                frame.last_index(),
                cfg.sigma_w * cfg.sigma_w,
                stream_seed(cfg.base_seed, frame_index, Stream::Phase),
            )?
        };
        let observations = apply_channel(
            frame.symbols(),
            &phases,
            n0,
            stream_seed(cfg.base_seed, frame_index, Stream::Noise),
        )?;
        let realization = ChannelRealization {
            phases,
            observations,
            noise_variance: n0,
            phase_step_variance: cfg.sigma_w * cfg.sigma_w,
        };
        Ok((info, codeword, frame, realization))
    }

    fn run_tracker(
        &self,
        y: &[num_complex::Complex64],
        frame: &Frame,
        priors: Option<&[Vec<f64>]>,
        snr: f64,
        keep_snapshots: bool,
    ) -> Result<TrackerOutput, HarnessError> {
        let cfg = &self.cfg;
        let sigma_w2 = cfg.sigma_w * cfg.sigma_w;
        match cfg.reference {
            ReferenceMode::None => Ok(track(
                y,
                frame,
                &self.constellation,
                priors,
                sigma_w2,
                snr,
                &cfg.tracker,
                keep_snapshots,
            )?),
            ReferenceMode::AllPilots => {
                Ok(all_pilots_track(y, frame, &self.constellation, sigma_w2, snr))
            }
            ReferenceMode::Awgn => Ok(TrackerOutput {
                beliefs: ideal_phase_beliefs(y, frame, &self.constellation, snr),
                ..TrackerOutput::default()
            }),
        }
    }

    /// Simulates one frame end to end.
    pub fn run_frame(&self, snr_db: f64, frame_index: u64) -> Result<FrameRecord, HarnessError> {
        let cfg = &self.cfg;
        let (info, codeword, frame, channel) = self.realize(snr_db, frame_index)?;
        let snr = 1.0 / channel.noise_variance;
        let y = &channel.observations;

        let mut state = DecoderState::new(&self.code);
        let mut dec_iterations = 0usize;
        let (final_llr, hard_bits) = match cfg.receiver {
            ReceiverMode::OneShot => {
                let out = self.run_tracker(y, &frame, None, snr, false)?;
                let llr = llr_from_logprobs(&out.beliefs, &self.constellation);
                let dec = minsum_decode(
                    &llr,
                    &self.code,
                    cfg.dec_iterations,
                    cfg.min_sum_scale,
                    &mut state,
                )?;
                dec_iterations = dec.iterations;
                (llr, dec.hard_bits)
            }
            ReceiverMode::Iterative => {
                let mut priors: Option<Vec<Vec<f64>>> = None;
                let mut llr = Vec::new();
                let mut hard = Vec::new();
                for _pass in 0..cfg.dec_iterations {
                    let out = self.run_tracker(y, &frame, priors.as_deref(), snr, false)?;
                    llr = llr_from_logprobs(&out.beliefs, &self.constellation);
                    let dec =
                        minsum_decode(&llr, &self.code, 1, cfg.min_sum_scale, &mut state)?;
                    dec_iterations += dec.iterations;
                    hard = dec.hard_bits;
                    if dec.converged {
                        break;
                    }
                    if cfg.reference == ReferenceMode::None {
                        priors = Some(symbol_priors_from_llrs(
                            &dec.extrinsic,
                            cfg.llr_damping,
                            &self.constellation,
                            frame.payload_len(),
                        )?);
                    }
                }
                (llr, hard)
            }
        };

        let frame_gmi = gmi(&final_llr, &codeword)?;
        let error = self.code.extract_info(&hard_bits) != info;
        Ok(FrameRecord { frame_index, error, dec_iterations, gmi: frame_gmi })
    }

    /// Sweeps every configured SNR point; see [`run_sweep`].
    pub fn run_sweep(&self) -> Result<SweepResult, HarnessError> {
        sweep::sweep(self)
    }

    /// Runs the configured algorithm next to the DMP reference on one frame
    /// and reports per-position KL distances and message parameters.
    pub fn run_diagnostics(&self, frame_index: u64) -> Result<DiagnosticBundle, HarnessError> {
        let cfg = &self.cfg;
        let snr_db = cfg.snr_db[0];
        let (_, _, frame, channel) = self.realize(snr_db, frame_index)?;
        let snr = 1.0 / channel.noise_variance;
        let y = &channel.observations;
        let sigma_w2 = cfg.sigma_w * cfg.sigma_w;

        let reference =
            dmp_track(y, &frame, &self.constellation, None, cfg.tracker.n_theta, sigma_w2, snr)?;
        let grids = reference.posterior_grids.as_ref().expect("DMP always returns grids");

        let algo = cfg.tracker.algorithm;
        let label = algo.name().to_string();
        let mut rows = Vec::new();
        let mut message_dump = Vec::new();
        let mut sum_kl = 0.0;

        if algo == Algorithm::Dmp {
            for &n in frame.payload_indices() {
                rows.push(DiagnosticRow {
                    frame: frame_index,
                    n,
                    algorithm: label.clone(),
                    iter: 1,
                    delta_kl: 0.0,
                    re_zab: 0.0,
                    im_zab: 0.0,
                });
            }
        } else {
            let out = self.run_tracker(y, &frame, None, snr, true)?;
            let snapshots: Vec<&crate::trackers::MessageSet> = match &out.snapshots {
                Some(s) if !s.is_empty() => s.iter().collect(),
                _ => vec![&out.messages],
            };
            for (i, ms) in snapshots.iter().enumerate() {
                let last = i + 1 == snapshots.len();
                for &n in frame.payload_indices() {
                    let combined = ms.combined(n);
                    let kl = kl_to_reference(&grids[n], combined);
                    message_dump.push(MessageDumpRow {
                        n,
                        algo: label.clone(),
                        iter: i + 1,
                        re_z_alpha: ms.z_alpha[n].z.re,
                        im_z_alpha: ms.z_alpha[n].z.im,
                        re_z_beta: ms.z_beta[n].z.re,
                        im_z_beta: ms.z_beta[n].z.im,
                        kl_to_dmp: kl,
                    });
                    if last {
                        sum_kl += kl;
                        rows.push(DiagnosticRow {
                            frame: frame_index,
                            n,
                            algorithm: label.clone(),
                            iter: i + 1,
                            delta_kl: kl,
                            re_zab: combined.z.re,
                            im_zab: combined.z.im,
                        });
                    }
                }
            }
        }

        let mut phase_pdfs = Vec::new();
        for &n in frame.payload_indices() {
            let grid = &grids[n];
            for k in 0..grid.len() {
                phase_pdfs.push((n, grid.theta(k), grid.samples()[k]));
            }
        }

        let mean_delta_kl = sum_kl / frame.payload_len() as f64;
        Ok(DiagnosticBundle { rows, message_dump, mean_delta_kl, phase_pdfs })
    }
}

/// Beliefs under ideal phase knowledge: `P(a) = -snr |y - a|^2`,
/// max-normalized and floored like every other tracker output.
fn ideal_phase_beliefs(
    y: &[num_complex::Complex64],
    frame: &Frame,
    constellation: &Constellation,
    snr: f64,
) -> SymbolBeliefs {
    let mut log_probs = Vec::with_capacity(frame.payload_len());
    for &n in frame.payload_indices() {
        let mut lp: Vec<f64> =
            constellation.points().iter().map(|&a| -snr * (y[n] - a).norm_sqr()).collect();
        let best = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in &mut lp {
            *v = (*v - best).max(-BELIEF_FLOOR);
        }
        log_probs.push(lp);
    }
    SymbolBeliefs { log_probs, z_sigma: Vec::new() }
}

fn valid_spacings(payload_len: usize) -> String {
    let mut out: Vec<String> = (2..=payload_len + 1)
        .filter(|l| payload_len % (l - 1) == 0)
        .take(12)
        .map(|l| l.to_string())
        .collect();
    if out.len() == 12 {
        out.push("...".into());
    }
    out.join(", ")
}

/// Convenience wrapper: validate `cfg` and sweep every SNR point.
pub fn run_sweep_config(cfg: SimConfig) -> Result<SweepResult, HarnessError> {
    Simulator::new(cfg)?.run_sweep()
}

#[cfg(test)]
mod tests;
