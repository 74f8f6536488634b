use genmud_core::baselines::{bpdn_recover, omp_per_slot, oracle_ls, somp_detect, RecoverySettings};
use genmud_core::genmud::{genmud_detect, Architecture, GeneratorModel, Selection};
use genmud_core::metrics::evaluate;
use genmud_core::rng::SimRng;
use genmud_core::sparsity::estimate_sparsity;
use genmud_core::system::{Frame, Scenario, SpreadingMatrix, SystemConfig};
use proptest::prelude::*;
use rand::SeedableRng;

fn config(users: usize, subcarriers: usize, slots: usize, active: usize, snr_db: f64, seed: u64) -> SystemConfig {
    SystemConfig { users, subcarriers, slots, active, snr_db, seed }
}

fn check_frame(f: &Frame, users: usize, slots: usize, sparsity: usize) -> Result<(), TestCaseError> {
    prop_assert_eq!((f.users(), f.slots()), (users, slots));
    prop_assert!(f.is_jointly_sparse_qpsk());
    prop_assert!(f.sparsity() <= sparsity);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_detector_returns_a_valid_frame(
        users in 4usize..16,
        slots in 1usize..4,
        active in 1usize..4,
        snr_db in 0.0f64..20.0,
        seed in any::<u64>(),
    ) {
        let subcarriers = users / 2 + 1;
        let cfg = config(users, subcarriers, slots, active, snr_db, seed);
        let sc = Scenario::generate(&cfg, &SpreadingMatrix::for_config(&cfg), 0).unwrap();
        let (y, h) = (&sc.received.y, sc.channel.effective());
        let settings = RecoverySettings::new(active);

        let s = somp_detect(y, h, &settings).unwrap();
        check_frame(&s.frame, users, slots, active)?;
        prop_assert_eq!(s.frame.sparsity(), active);

        let per_slot = omp_per_slot(y, h, &settings).unwrap();
        prop_assert_eq!(per_slot.frame.users(), users);
        check_frame(&bpdn_recover(y, h, &settings).unwrap().frame, users, slots, active)?;

        let model = GeneratorModel::init(
            Architecture::new(users, slots).with_hidden(8, 8),
            0.01,
            &mut SimRng::seed_from_u64(seed),
        ).unwrap();
        let g = genmud_detect(&model, y, h, active, 3, Selection::Joint, &mut SimRng::seed_from_u64(seed)).unwrap();
        check_frame(&g, users, slots, active)?;
        prop_assert_eq!(g.sparsity(), active);
    }
}

#[test]
fn oracle_is_exact_without_noise() {
    let cfg = config(40, 20, 5, 8, 0.0, 7);
    let spreading = SpreadingMatrix::for_config(&cfg);
    for t in 0..20 {
        let sc = Scenario::generate_with_noise(&cfg, &spreading, t, 0.0).unwrap();
        let est = oracle_ls(&sc.received.y, sc.channel.effective(), sc.frame.support()).unwrap();
        let r = evaluate(&sc.frame, &est).unwrap();
        assert_eq!((r.ser, r.pd, r.pfa), (0.0, 1.0, 0.0));
    }
}

#[test]
fn sparsity_estimate_tracks_truth_over_long_frames() {
    let cfg = config(200, 100, 50, 40, 10.0, 9);
    let sc = Scenario::generate(&cfg, &SpreadingMatrix::for_config(&cfg), 0).unwrap();
    let est = estimate_sparsity(&sc.received.y, cfg.tau()).unwrap();
    assert!((est.s_hat - 40.0).abs() < 4.0, "s_hat {}", est.s_hat);
}
