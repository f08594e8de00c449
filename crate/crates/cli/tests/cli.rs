use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use holo_core::fourier::{write_signals, SphericalSignal};
use holo_core::steerable::TensorDataset;

fn holo(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holo")).args(args).arg("-q").current_dir(cwd).output().expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) {
    let o = holo(args, cwd);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
}

fn fails(args: &[&str], cwd: &Path, code: i32) -> String {
    let o = holo(args, cwd);
    assert_eq!(o.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const ZFT: &str = r#"{"l_max":4,"n_max":8,"r_max":10.0,"labels":["A","B"]}"#;

fn model_json(variational: bool, epochs: usize) -> String {
    format!(
        r#"{{"input_signature":[[0,10],[1,8],[2,8],[3,6],[4,6]],"blocks":6,"degrees_list":[4,4,4,4,2,1],
        "channels_list":[6,6,6,6,6,6],"z":2,"c_init":6,"variational":{variational},"alpha":400,"beta":0.2,
        "e_rec":1,"e_warmup":2,"lr":0.005,"lr_decay_orders":1,"lr_decay_epochs":25,"batch_size":10,
        "epochs":{epochs},"seed":3}}"#
    )
}

/// Synthetic corpus transformed into `data.bin`.
fn corpus(dir: &Path, n: usize) {
    ok(&["synth", "-n", &n.to_string(), "--seed", "4", "--out", "syn"], dir);
    fs::write(dir.join("zft.json"), ZFT).unwrap();
    ok(&["transform", "--mode", "zft", "--config", "zft.json", "--in", "syn/clouds.txt", "--out", "data.bin"], dir);
}

fn manifests(dir: &Path) -> usize {
    fs::read_dir(dir).unwrap().filter(|e| e.as_ref().unwrap().file_name() == "manifest.json").count()
}

#[test]
fn transform_is_deterministic_and_strict() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    corpus(d, 10);
    ok(&["transform", "--mode", "zft", "--config", "zft.json", "--in", "syn/clouds.txt", "--out", "again.bin"], d);
    assert_eq!(fs::read(d.join("data.bin")).unwrap(), fs::read(d.join("again.bin")).unwrap());
    assert!(d.join("data.bin.manifest.json").exists());
    let ds = TensorDataset::load(&d.join("data.bin")).unwrap();
    assert_eq!(ds.len(), 10);

    fs::write(d.join("empty.txt"), "").unwrap();
    fails(&["transform", "--mode", "zft", "--config", "zft.json", "--in", "empty.txt", "--out", "e.bin"], d, 2);
    fs::write(d.join("bad.txt"), "0 0 0 A\n1 2 three A\n").unwrap();
    let msg = fails(&["transform", "--mode", "zft", "--config", "zft.json", "--in", "bad.txt", "--out", "e.bin"], d, 2);
    assert!(msg.contains("line 2"), "{msg}");
    fs::write(d.join("far.txt"), "> c1\n0 0 0 A\n> c2\n0 0 1 B\n30 0 0 A\n").unwrap();
    let msg = fails(&["transform", "--mode", "zft", "--config", "zft.json", "--in", "far.txt", "--out", "e.bin"], d, 3);
    assert!(msg.contains("c2") && msg.contains("point 1"), "{msg}");
}

#[test]
fn amino_acid_style_signature_has_940_coefficients() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    fs::write(d.join("aa.txt"), "> res1\n1 0 0 C\n0 1 0 N\n0 0 1 O\n1 1 1 S\n").unwrap();
    fs::write(d.join("aa.json"), r#"{"l_max":4,"n_max":20,"r_max":10.0,"labels":["C","N","O","S"]}"#).unwrap();
    ok(&["transform", "--mode", "zft", "--config", "aa.json", "--in", "aa.txt", "--out", "aa.json.bin"], d);
    let ds = TensorDataset::load(&d.join("aa.json.bin")).unwrap();
    assert_eq!(ds.signature.total_len(), 940);
    assert_eq!(ds.signature.to_string(), "44x0 + 40x1 + 40x2 + 36x3 + 36x4");
}

#[test]
fn sft_transform_gives_121_coefficients() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let sigs: Vec<_> = (0..3).map(|k| SphericalSignal::from_fn(12, 1, |_, th: f64, ph: f64| th.cos() + k as f64 * ph.sin())).collect();
    write_signals(fs::File::create(d.join("s.sphg")).unwrap(), &sigs).unwrap();
    fs::write(d.join("sft.json"), r#"{"l_max":10}"#).unwrap();
    ok(&["transform", "--mode", "sft", "--config", "sft.json", "--in", "s.sphg", "--out", "s.json"], d);
    let ds = TensorDataset::load(&d.join("s.json")).unwrap();
    assert_eq!(ds.signature.total_len(), 121);
    fs::write(d.join("alias.json"), r#"{"l_max":12}"#).unwrap();
    fails(&["transform", "--mode", "sft", "--config", "alias.json", "--in", "s.sphg", "--out", "a.json"], d, 3);
}

#[test]
fn unreachable_decoder_is_rejected() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let parts: Vec<String> = (0..=10).map(|l| format!("[{l},1]")).collect();
    let cfg = format!(
        r#"{{"input_signature":[{}],"blocks":3,"degrees_list":[8,4,1],"channels_list":[4,4,4],"z":2}}"#,
        parts.join(",")
    );
    fs::write(d.join("bad.json"), cfg).unwrap();
    let msg = fails(&["params", "--config", "bad.json"], d, 3);
    assert!(msg.contains("l_max,B >= L"), "{msg}");
    fs::write(d.join("x.bin"), "").unwrap();
    let msg = fails(&["train", "--config", "bad.json", "--train", "x.bin", "--val", "x.bin", "--out", "o"], d, 3);
    assert!(msg.contains("B >= log2(L)"), "{msg}");
    assert!(!d.join("o").exists());
}

#[test]
fn smoke_run_end_to_end() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    let start = Instant::now();
    corpus(d, 30);
    fs::write(d.join("vae.json"), model_json(true, 5)).unwrap();
    ok(&["train", "--config", "vae.json", "--train", "data.bin", "--val", "data.bin", "--out", "run"], d);
    assert!(start.elapsed().as_secs() < 120);
    for f in ["best.ckpt", "last.ckpt", "history.csv", "manifest.json"] {
        assert!(d.join("run").join(f).exists(), "{f}");
    }
    assert_eq!(fs::read_to_string(d.join("run/history.csv")).unwrap().lines().count(), 6);

    ok(
        &["evaluate", "--ckpt", "run/best.ckpt", "--data", "data.bin", "--labels", "syn/labels.csv", "--audit", "--out", "ev"],
        d,
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("ev/report.json")).unwrap()).unwrap();
    for key in ["cosine_mean", "cosine_sd", "mse", "knn_accuracy", "linear_accuracy", "purity", "v_measure"] {
        assert!(report[key].as_f64().unwrap().is_finite(), "{key}");
    }
    assert_eq!(report["audit"]["passed"], serde_json::Value::Bool(true));
    assert_eq!(manifests(&d.join("ev")), 1);
    let emb = fs::read_to_string(d.join("ev/embeddings.csv")).unwrap();
    assert_eq!(emb.lines().count(), 31);

    fails(&["evaluate", "--ckpt", "run/best.ckpt", "--data", "data.bin", "--classify", "--out", "ev2"], d, 3);
    fails(
        &["evaluate", "--ckpt", "run/best.ckpt", "--data", "data.bin", "--labels", "missing.csv", "--out", "ev3"],
        d,
        3,
    );

    ok(&["sample", "--ckpt", "run/best.ckpt", "-n", "0", "--out", "s0"], d);
    assert!(TensorDataset::load(&d.join("s0/samples.json")).unwrap().is_empty());
    ok(&["sample", "--ckpt", "run/best.ckpt", "-n", "4", "--seed", "9", "--out", "s1"], d);
    ok(&["sample", "--ckpt", "run/best.ckpt", "-n", "4", "--seed", "9", "--out", "s2"], d);
    assert_eq!(fs::read(d.join("s1/samples.json")).unwrap(), fs::read(d.join("s2/samples.json")).unwrap());

    ok(
        &["interpolate", "--ckpt", "run/best.ckpt", "--data", "data.bin", "--a", "helix_0000", "--b", "ring_0001", "--steps", "3", "--out", "ip"],
        d,
    );
    let path = TensorDataset::load(&d.join("ip/interpolation.json")).unwrap();
    let rec = TensorDataset::load(&d.join("ev/reconstructions.json")).unwrap();
    assert_eq!(path.len(), 5);
    let close = |a: &holo_core::Tensor, b: &holo_core::Tensor| a.max_abs_diff(b).unwrap() <= 1e-6 * (1.0 + b.max_abs());
    assert!(close(&path.tensors[0], rec.get("helix_0000").unwrap()));
    assert!(close(&path.tensors[4], rec.get("ring_0001").unwrap()));
}

#[test]
fn resume_reproduces_uninterrupted_run_and_ae_cannot_sample() {
    let t = tempfile::tempdir().unwrap();
    let d = t.path();
    corpus(d, 20);
    fs::write(d.join("a3.json"), model_json(false, 3)).unwrap();
    fs::write(d.join("a5.json"), model_json(false, 5)).unwrap();
    ok(&["train", "--config", "a5.json", "--train", "data.bin", "--val", "data.bin", "--out", "full"], d);
    ok(&["train", "--config", "a3.json", "--train", "data.bin", "--val", "data.bin", "--out", "part"], d);
    ok(
        &["train", "--config", "a5.json", "--train", "data.bin", "--val", "data.bin", "--out", "part", "--resume", "part/last.ckpt"],
        d,
    );
    let rd = |p: &str| -> Vec<u8> { fs::read(PathBuf::from(d).join(p)).unwrap() };
    assert_eq!(rd("full/last.ckpt"), rd("part/last.ckpt"));
    assert_eq!(rd("full/best.ckpt"), rd("part/best.ckpt"));
    assert_eq!(rd("full/history.csv"), rd("part/history.csv"));
    assert_eq!(manifests(&d.join("part")), 1);

    let mut other = model_json(false, 5);
    other = other.replace("\"seed\":3", "\"seed\":4");
    fs::write(d.join("other.json"), other).unwrap();
    fails(
        &["train", "--config", "other.json", "--train", "data.bin", "--val", "data.bin", "--out", "x", "--resume", "part/last.ckpt"],
        d,
        3,
    );
    let msg = fails(&["sample", "--ckpt", "full/best.ckpt", "-n", "2", "--out", "s"], d, 3);
    assert!(msg.contains("variational"), "{msg}");
}
