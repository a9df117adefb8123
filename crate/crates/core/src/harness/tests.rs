use super::*;
use crate::trackers::Algorithm;
use std::path::PathBuf;

fn code_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../codes").join(name)
}

fn small_config() -> SimConfig {
    SimConfig {
        modulation_order: 16,
        snr_db: vec![14.0],
        sigma_w: 0.1,
        pilot_spacing: 5,
        tracker: TrackerConfig::new(Algorithm::CbcCmm),
        code_path: code_path("regular_3_6_n96.alist"),
        max_frames: 64,
        max_frame_errors: 100,
        base_seed: 11,
        timing: false,
        ..SimConfig::default()
    }
}

#[test]
fn config_validation_catches_layout_problems() {
    let mut cfg = small_config();
    cfg.pilot_spacing = 24; // payload of 24 symbols needs (L-1) | 24
    let err = Simulator::new(cfg).unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)), "{err}");

    let mut cfg = small_config();
    cfg.snr_db.clear();
    assert!(Simulator::new(cfg).is_err());

    let mut cfg = small_config();
    cfg.max_frame_errors = 0;
    assert!(Simulator::new(cfg).is_err());

    let mut cfg = small_config();
    cfg.llr_damping = 1.2;
    assert!(Simulator::new(cfg).is_err());
}

#[test]
fn quasi_clean_channel_produces_no_errors() {
    let cfg = SimConfig {
        snr_db: vec![60.0],
        sigma_w: 1e-6,
        pilot_spacing: 2,
        ..small_config()
    };
    let sim = Simulator::new(cfg).unwrap();
    for idx in 0..8 {
        let rec = sim.run_frame(60.0, idx).unwrap();
        assert!(!rec.error, "frame {idx} errored on a quasi-clean channel");
        assert!(rec.gmi > 0.99, "gmi = {}", rec.gmi);
    }
}

#[test]
fn frame_records_are_deterministic() {
    let sim = Simulator::new(small_config()).unwrap();
    let a = sim.run_frame(14.0, 3).unwrap();
    let b = sim.run_frame(14.0, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn channel_realization_is_algorithm_independent() {
    let cbc = Simulator::new(small_config()).unwrap();
    let skr = Simulator::new(SimConfig {
        tracker: TrackerConfig::new(Algorithm::Skr),
        ..small_config()
    })
    .unwrap();
    // Identical seeds must expose identical observations to both trackers.
    let (_, _, frame_a, chan_a) = cbc.realize(14.0, 5).unwrap();
    let (_, _, frame_b, chan_b) = skr.realize(14.0, 5).unwrap();
    assert_eq!(frame_a.symbols(), frame_b.symbols());
    assert_eq!(chan_a.observations, chan_b.observations);
    assert_eq!(chan_a.phases, chan_b.phases);
}

#[test]
fn stop_rule_frame_cap() {
    // A hopeless SNR errors every frame; the frame cap binds first because
    // 10 < 100 errors.
    let cfg = SimConfig { snr_db: vec![-20.0], max_frames: 10, ..small_config() };
    let result = Simulator::new(cfg).unwrap().run_sweep().unwrap();
    assert_eq!(result.rows[0].frames, 10);
    assert_eq!(result.rows[0].per, 1.0);
}

#[test]
fn stop_rule_error_cap() {
    let cfg = SimConfig {
        snr_db: vec![-20.0],
        max_frames: 1000,
        max_frame_errors: 3,
        ..small_config()
    };
    let result = Simulator::new(cfg).unwrap().run_sweep().unwrap();
    assert_eq!(result.rows[0].frames, 3);
    assert_eq!(result.rows[0].frame_errors, 3);
}

#[test]
fn sweep_csv_is_reproducible_across_runs_and_workers() {
    let mut cfg = small_config();
    cfg.snr_db = vec![10.0, 14.0];
    cfg.max_frames = 40;
    cfg.workers = 1;
    let one = Simulator::new(cfg.clone()).unwrap().run_sweep().unwrap().to_csv();
    let again = Simulator::new(cfg.clone()).unwrap().run_sweep().unwrap().to_csv();
    assert_eq!(one, again);
    cfg.workers = 4;
    let four = Simulator::new(cfg).unwrap().run_sweep().unwrap().to_csv();
    assert_eq!(one, four);
    assert!(one.starts_with(sweep::CSV_HEADER));
}

#[test]
fn reference_modes_bound_the_tracker() {
    // At a mid-range SNR over paired seeds: all-pilots and AWGN references
    // should not err more often than plain CBC.
    let base = SimConfig { snr_db: vec![11.0], max_frames: 60, ..small_config() };
    let count_errors = |reference: ReferenceMode| -> u64 {
        let cfg = SimConfig { reference, ..base.clone() };
        let sim = Simulator::new(cfg).unwrap();
        (0..60).filter(|&i| sim.run_frame(11.0, i).unwrap().error).count() as u64
    };
    let tracked = count_errors(ReferenceMode::None);
    let all_pilots = count_errors(ReferenceMode::AllPilots);
    let awgn = count_errors(ReferenceMode::Awgn);
    assert!(all_pilots <= tracked, "all-pilots {all_pilots} vs tracked {tracked}");
    assert!(awgn <= tracked, "awgn {awgn} vs tracked {tracked}");
}

#[test]
fn iterative_mode_runs_and_counts_iterations() {
    let cfg = SimConfig {
        receiver: ReceiverMode::Iterative,
        snr_db: vec![12.0],
        ..small_config()
    };
    let sim = Simulator::new(cfg).unwrap();
    let rec = sim.run_frame(12.0, 2).unwrap();
    assert!(rec.dec_iterations <= 10);
}

#[test]
fn diagnostics_dmp_self_distance_is_zero() {
    let cfg = SimConfig {
        tracker: TrackerConfig::new(Algorithm::Dmp),
        snr_db: vec![16.0],
        ..small_config()
    };
    let bundle = Simulator::new(cfg).unwrap().run_diagnostics(0).unwrap();
    assert!(bundle.rows.iter().all(|r| r.delta_kl <= 1e-9));
    assert!(bundle.mean_delta_kl >= 0.0);
    assert!(!bundle.phase_pdfs.is_empty());
}

#[test]
fn diagnostics_cbc_distance_is_positive() {
    let cfg = SimConfig {
        snr_db: vec![16.0],
        pilot_spacing: 25,
        code_path: code_path("regular_3_6_n96.alist"),
        ..small_config()
    };
    let bundle = Simulator::new(cfg).unwrap().run_diagnostics(1).unwrap();
    assert!(bundle.mean_delta_kl > 0.0, "mean KL = {}", bundle.mean_delta_kl);
    assert!(bundle.rows.iter().all(|r| r.delta_kl >= 0.0));
    assert_eq!(bundle.rows.len(), 24);
    assert!(!bundle.message_dump.is_empty());
}
