//! The sweep runner: batched frame dispatch with a deterministic stop rule
//! and the CSV emitter.
//!
//! Frames are computed in fixed-size batches (a pure function of how many
//! frames have been counted, never of the worker count); the stop rule then
//! scans the batch in frame order and cuts at the first frame that reaches
//! the error budget. The counted prefix is identical for one worker or many.

use super::{FrameRecord, HarnessError, Simulator};
use std::fmt::Write as _;
use std::time::Instant;

/// One CSV row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub algorithm: String,
    pub modulation_order: usize,
    pub pilot_spacing: usize,
    pub sigma_w: f64,
    pub mode: String,
    pub frames: u64,
    pub frame_errors: u64,
    pub per: f64,
    pub mean_dec_iters: f64,
    pub mean_gmi: f64,
    pub wall_seconds: f64,
}

/// Sweep outcome; one row per SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str =
    "snr_db,algorithm,M,L,sigma_w,mode,frames,frame_errors,per,mean_dec_iters,mean_gmi,wall_seconds";

impl SweepResult {
    /// Serializes with the fixed header; bytes are reproducible whenever the
    /// row values are.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{:.3}",
                r.snr_db,
                r.algorithm,
                r.modulation_order,
                r.pilot_spacing,
                r.sigma_w,
                r.mode,
                r.frames,
                r.frame_errors,
                r.per,
                r.mean_dec_iters,
                r.mean_gmi,
                r.wall_seconds
            )
            .expect("writing to String cannot fail");
        }
        out
    }
}

/// Batch sizes ramp up so tiny runs stay tiny; the schedule depends only on
/// the number of frames already counted.
fn batch_size(done: u64) -> u64 {
    match done {
        0..=31 => 32,
        32..=95 => 64,
        96..=223 => 128,
        _ => 256,
    }
}

fn compute_batch(
    sim: &Simulator,
    snr_db: f64,
    start: u64,
    count: u64,
) -> Result<Vec<FrameRecord>, HarnessError> {
    #[cfg(feature = "parallel")]
    {
        if sim.config().workers != 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(sim.config().workers)
                .build()
                .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
            return pool.install(|| {
                (start..start + count)
                    .into_par_iter()
                    .map(|idx| sim.run_frame(snr_db, idx))
                    .collect()
            });
        }
    }
    (start..start + count).map(|idx| sim.run_frame(snr_db, idx)).collect()
}

pub(super) fn sweep(sim: &Simulator) -> Result<SweepResult, HarnessError> {
    let cfg = sim.config();
    let mut rows = Vec::with_capacity(cfg.snr_db.len());
    for &snr_db in &cfg.snr_db {
        let start_time = Instant::now();
        let mut counted: Vec<FrameRecord> = Vec::new();
        let mut errors = 0u64;
        'point: while (counted.len() as u64) < cfg.max_frames {
            let start = counted.len() as u64;
            let count = batch_size(start).min(cfg.max_frames - start);
            let batch = compute_batch(sim, snr_db, start, count)?;
            for record in batch {
                if record.error {
                    errors += 1;
                }
                counted.push(record);
                if errors >= cfg.max_frame_errors {
                    break 'point;
                }
            }
        }
        let frames = counted.len() as u64;
        let mean_dec_iters =
            counted.iter().map(|r| r.dec_iterations as f64).sum::<f64>() / frames as f64;
        let mean_gmi = counted.iter().map(|r| r.gmi).sum::<f64>() / frames as f64;
        let wall_seconds =
            if cfg.timing { start_time.elapsed().as_secs_f64() } else { 0.0 };
        rows.push(SweepRow {
            snr_db,
            algorithm: cfg.algorithm_label().to_string(),
            modulation_order: cfg.modulation_order,
            pilot_spacing: cfg.pilot_spacing,
            sigma_w: cfg.sigma_w,
            mode: cfg.receiver.name().to_string(),
            frames,
            frame_errors: errors,
            per: errors as f64 / frames as f64,
            mean_dec_iters,
            mean_gmi,
            wall_seconds,
        });
    }
    Ok(SweepResult { rows })
}

/// Validates the configuration and runs the sweep.
pub fn run_sweep(sim: &Simulator) -> Result<SweepResult, HarnessError> {
    sweep(sim)
}
