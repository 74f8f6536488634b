use std::path::Path;

use genmud::config::{load_experiment, parse_toml, ExperimentSpec};
use genmud::plot::{emit_plot_data, plot_series};
use genmud::sweep::{read_csv, run_sweep, write_csv, write_csv_file, CSV_HEADER};
use genmud::Error;

const BASE: &str = r#"
users = 24
detectors = ["oracle_ls", "somp", "bpdn"]
trials = 30
seed = 5
output = "out.csv"

[grid]
snr_db = [0.0, 10.0]
active = [3]
subcarriers = [12]
slots = [4]
"#;

fn spec(extra: &str) -> ExperimentSpec {
    let text = format!("{extra}\n{BASE}");
    parse_toml(&text, Path::new("test.toml")).unwrap()
}

fn csv_bytes(spec: &ExperimentSpec) -> Vec<u8> {
    let rows = run_sweep(spec, None).unwrap();
    let mut out = Vec::new();
    write_csv(&rows, &mut out).unwrap();
    out
}

#[test]
fn header_is_stable() {
    let text = String::from_utf8(csv_bytes(&spec(""))).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(text.lines().count(), 1 + 2 * 3);
    assert!(!text.contains('\r'));
}

#[test]
fn identical_seed_gives_identical_bytes() {
    let s = spec("sparsity = \"estimated\"");
    assert_eq!(csv_bytes(&s), csv_bytes(&s));
    let mut other = s.clone();
    other.seed = 6;
    assert_ne!(csv_bytes(&s), csv_bytes(&other));
}

#[test]
fn noiseless_oracle_is_exact() {
    let rows = run_sweep(&spec("noiseless = true"), None).unwrap();
    for r in rows.iter().filter(|r| r.detector.name() == "oracle_ls") {
        let c = r.csv();
        assert_eq!((c.ser, c.pd, c.pfa), (0.0, 1.0, 0.0));
    }
}

#[test]
fn estimated_sparsity_fills_en() {
    let rows = run_sweep(&spec("sparsity = \"estimated\""), None).unwrap();
    assert!(rows.iter().all(|r| r.en.is_some_and(|e| e >= 0.0)));
    let rows = run_sweep(&spec(""), None).unwrap();
    assert!(rows.iter().all(|r| r.en.is_none()));
}

#[test]
fn csv_and_plot_data_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rows = run_sweep(&spec(""), None).unwrap();
    let path = dir.path().join("r.csv");
    write_csv_file(&rows, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back, rows.iter().map(|r| r.csv()).collect::<Vec<_>>());

    let series = plot_series(&back, "fig7").unwrap();
    assert_eq!(series.len(), 3 * 2);
    assert!(series.iter().all(|s| s.points.windows(2).all(|w| w[0].0 <= w[1].0)));
    let files = emit_plot_data(&back, "fig2", &dir.path().join("plots")).unwrap();
    assert_eq!(files.len(), 3);
    let text = std::fs::read_to_string(&files[0]).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(matches!(plot_series(&back, "fig9"), Err(Error::UnknownFigure(_))));
    assert!(plot_series(&[], "fig2").is_err());
}

#[test]
fn invalid_specs_are_rejected_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let typo = write("typo.toml", &BASE.replace("trials = 30", "trails = 30"));
    let msg = load_experiment(&typo).unwrap_err().to_string();
    assert!(msg.contains("trails") && msg.contains("line"), "{msg}");

    let zero = write("zero.toml", &BASE.replace("trials = 30", "trials = 0"));
    assert_eq!(load_experiment(&zero).unwrap_err().exit_code(), 2);

    let genmud = write("g.toml", &BASE.replace("\"bpdn\"]", "\"genmud\"]"));
    assert!(load_experiment(&genmud).unwrap_err().to_string().contains("model"));

    let empty = write("e.toml", &BASE.replace("snr_db = [0.0, 10.0]", "snr_db = []"));
    assert!(load_experiment(&empty).is_err());
}
