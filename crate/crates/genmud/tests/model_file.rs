use genmud::model_file::{decode_model, encode_model, load_model, load_model_for, save_model};
use genmud::Error;
use genmud_core::genmud::{Architecture, GeneratorModel};
use genmud_core::rng::SimRng;
use rand::{Rng, SeedableRng};

fn model(users: usize, seed: u64) -> GeneratorModel {
    let arch = Architecture::new(users, 3).with_hidden(5, 6);
    let mut rng = SimRng::seed_from_u64(seed);
    let mut m = GeneratorModel::init(arch, 0.0123, &mut rng).unwrap();
    for v in m.running.mean1.iter_mut().chain(&mut m.running.mean2) {
        *v = rng.random_range(-1.0..1.0);
    }
    for v in m.running.var1.iter_mut().chain(&mut m.running.var2) {
        *v = rng.random_range(0.1..3.0);
    }
    m
}

#[test]
fn round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.gmud");
    let m = model(4, 1);
    save_model(&m, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, m);
    assert_eq!(loaded.alpha.to_bits(), m.alpha.to_bits());
    let again = dir.path().join("again.gmud");
    save_model(&loaded, &again).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn truncated_or_flipped_files_are_corrupt() {
    let bytes = encode_model(&model(4, 2));
    for cut in [0, 3, 20, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(decode_model(&bytes[..cut]), Err(Error::CorruptFile(_))), "cut at {cut}");
    }
    let mut flipped = bytes.clone();
    flipped[100] ^= 1;
    assert!(matches!(decode_model(&flipped), Err(Error::CorruptFile(_))));
}

#[test]
fn other_format_version_is_rejected() {
    let mut bytes = encode_model(&model(4, 3));
    bytes[4] = 9;
    assert!(matches!(decode_model(&bytes), Err(Error::VersionMismatch(_))));
}

#[test]
fn different_user_count_names_both_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.gmud");
    save_model(&model(4, 4), &path).unwrap();
    match load_model_for(&path, 6, 3) {
        Err(Error::VersionMismatch(msg)) => {
            assert!(msg.contains("K=4") && msg.contains("K=6"), "{msg}");
        }
        other => panic!("expected a version mismatch, got {other:?}"),
    }
    assert!(load_model_for(&path, 4, 3).is_ok());
}
