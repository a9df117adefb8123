// Calibration scratch for acceptance operating points (not part of the suite).
use phasetrack_core::harness::*;
use phasetrack_core::trackers::{Algorithm, TrackerConfig};
use std::path::PathBuf;

fn cfg(algo: Algorithm, snr: f64) -> SimConfig {
    SimConfig {
        modulation_order: 16,
        snr_db: vec![snr],
        sigma_w: 0.1,
        pilot_spacing: 22,
        tracker: TrackerConfig::new(algo),
        code_path: PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../codes/regular_3_6_n1008.alist")),
        max_frames: 200,
        max_frame_errors: 200,
        base_seed: 2024,
        timing: false,
        ..SimConfig::default()
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("scan");
    match which {
        "scan" => {
            // One-shot CBC PER vs SNR
            for snr in [8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0] {
                let sim = Simulator::new(cfg(Algorithm::CbcCmm, snr)).unwrap();
                let r = sim.run_sweep().unwrap();
                println!("CBC one-shot snr={snr}: frames={} per={:.3} gmi={:.3}", r.rows[0].frames, r.rows[0].per, r.rows[0].mean_gmi);
            }
        }
        "order" => {
            let snr: f64 = args[2].parse().unwrap();
            let frames: u64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(300);
            for algo in [Algorithm::Dmp, Algorithm::CbcEp, Algorithm::CbcCmm, Algorithm::Skr, Algorithm::CbcSkr] {
                let mut c = cfg(algo, snr);
                c.max_frames = frames;
                c.max_frame_errors = frames;
                let sim = Simulator::new(c).unwrap();
                let r = sim.run_sweep().unwrap();
                println!("{:8} snr={snr}: errors={}/{} per={:.3}", format!("{algo:?}"), r.rows[0].frame_errors, r.rows[0].frames, r.rows[0].per);
            }
        }
        "iter" => {
            // Iterative CBC with psi 1.0 vs 0.7 at higher SNR
            for snr in [10.0, 11.0, 12.0, 13.0, 14.0, 16.0] {
                for psi in [1.0, 0.7] {
                    let mut c = cfg(Algorithm::CbcCmm, snr);
                    c.receiver = ReceiverMode::Iterative;
                    c.llr_damping = psi;
                    c.max_frames = 300;
                    c.max_frame_errors = 300;
                    let sim = Simulator::new(c).unwrap();
                    let r = sim.run_sweep().unwrap();
                    println!("iter CBC psi={psi} snr={snr}: errors={}/{} per={:.3} iters={:.1}", r.rows[0].frame_errors, r.rows[0].frames, r.rows[0].per, r.rows[0].mean_dec_iters);
                }
            }
        }
        _ => eprintln!("unknown mode"),
    }
}
