use phasetrack_core::harness::*;
use phasetrack_core::trackers::{Algorithm, TrackerConfig};
use std::path::PathBuf;

fn run(l: usize, sw: f64, snr: f64, psi: f64, frames: u64) -> (u64, u64) {
    let c = SimConfig {
        modulation_order: 16,
        snr_db: vec![snr],
        sigma_w: sw,
        pilot_spacing: l,
        tracker: TrackerConfig::new(Algorithm::CbcCmm),
        receiver: ReceiverMode::Iterative,
        llr_damping: psi,
        code_path: PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../codes/regular_3_6_n1008.alist")),
        max_frames: frames,
        max_frame_errors: frames,
        base_seed: 2024,
        timing: false,
        ..SimConfig::default()
    };
    let r = Simulator::new(c).unwrap().run_sweep().unwrap();
    (r.rows[0].frame_errors, r.rows[0].frames)
}

fn main() {
    for (l, sw) in [(29usize, 0.1f64), (29, 0.15), (37, 0.1)] {
        println!("--- L={l} sigma_w={sw}");
        for snr in [10.0, 11.0, 12.0, 14.0, 16.0, 18.0] {
            let (e1, f1) = run(l, sw, snr, 1.0, 400);
            let (e7, f7) = run(l, sw, snr, 0.7, 400);
            println!("snr={snr:5}: psi1.0 {e1}/{f1}  psi0.7 {e7}/{f7}");
        }
    }
}
