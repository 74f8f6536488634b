use std::process::Command;

fn genmud() -> Command {
    Command::new(env!("CARGO_BIN_EXE_genmud"))
}

#[test]
fn train_sweep_plot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("train.toml"),
        r#"
users = 8
subcarriers = 4
slots = 2
active = 2
snr_db = 15.0
seed = 1
inner_steps = 2
batch_size = 2
max_steps = 12
hidden1 = 6
hidden2 = 6
learning_rate = 1e-3
model = "m.gmud"
log = "loss.csv"
"#,
    )
    .unwrap();
    let st = genmud().arg("train").arg(d.join("train.toml")).env("GENMUD_OUT_DIR", d).status().unwrap();
    assert!(st.success());
    let log = std::fs::read_to_string(d.join("loss.csv")).unwrap();
    assert_eq!(log.lines().count(), 13);
    assert_eq!(log.lines().next().unwrap(), "step,l_g,l_h,alpha");

    let model = d.join("m.gmud");
    std::fs::write(
        d.join("sweep.toml"),
        format!(
            r#"
users = 8
detectors = ["genmud", "somp"]
trials = 5
seed = 2
model = "{}"
output = "sweep.csv"
inner_steps = 2

[grid]
snr_db = [5.0, 10.0]
active = [2]
subcarriers = [4]
slots = [2]
"#,
            model.display()
        ),
    )
    .unwrap();
    let st = genmud().arg("sweep").arg(d.join("sweep.toml")).env("GENMUD_OUT_DIR", d).status().unwrap();
    assert!(st.success());
    let csv = std::fs::read_to_string(d.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let st = genmud()
        .args(["plotdata", "--figure", "fig2", "--out", "plots"])
        .arg(d.join("sweep.csv"))
        .env("GENMUD_OUT_DIR", d)
        .status()
        .unwrap();
    assert!(st.success());
    assert!(d.join("plots/fig2_genmud_ser.tsv").exists());

    let st = genmud()
        .args(["plotdata", "--figure", "nope"])
        .arg(d.join("sweep.csv"))
        .env("GENMUD_OUT_DIR", d)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));

    // Same model, wrong K.
    let wrong = std::fs::read_to_string(d.join("sweep.toml")).unwrap().replace("users = 8", "users = 9");
    std::fs::write(d.join("wrong.toml"), wrong).unwrap();
    let out = genmud().arg("sweep").arg(d.join("wrong.toml")).env("GENMUD_OUT_DIR", d).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("K=8"));
}

#[test]
fn estimate_verb_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("est.toml"),
        r#"
users = 50
active = 10
subcarriers = [25]
slots = [1, 7]
snr_db = [0.0, 10.0]
trials = 200
seed = 3
output = "est.csv"
"#,
    )
    .unwrap();
    let st = genmud().arg("estimate").arg(d.join("est.toml")).env("GENMUD_OUT_DIR", d).status().unwrap();
    assert!(st.success());
    assert_eq!(std::fs::read_to_string(d.join("est.csv")).unwrap().lines().count(), 5);
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "users = \"many\"").unwrap();
    let out = genmud().arg("sweep").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
    assert_eq!(genmud().arg("train").arg(dir.path().join("missing.toml")).status().unwrap().code(), Some(2));
}

#[test]
fn diverging_training_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("train.toml"),
        r#"
users = 8
subcarriers = 4
slots = 2
active = 2
snr_db = 15.0
seed = 1
inner_steps = 3
batch_size = 2
max_steps = 5
hidden1 = 6
hidden2 = 6
learning_rate = 1e300
model = "m.gmud"
log = "loss.csv"
"#,
    )
    .unwrap();
    let st = genmud().arg("train").arg(d.join("train.toml")).env("GENMUD_OUT_DIR", d).status().unwrap();
    assert_eq!(st.code(), Some(3));
    assert!(d.join("loss.csv").exists());
}
