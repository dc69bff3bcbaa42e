use std::path::Path;
use std::process::{Command, Output};

fn hdmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdmm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// synth -> extract -> train, returning (data, images, models) directories.
fn prepared(root: &Path) -> (std::path::PathBuf, std::path::PathBuf, std::path::PathBuf) {
    let (data, img, models) = (root.join("data"), root.join("img"), root.join("models"));
    let cfg = root.join("cfg.toml");
    std::fs::write(&cfg, "depth-bins = 32\ncanvas = 64\ncrop = 56\nfeature-side = 16\n").unwrap();

    let out = hdmm(&["synth", "--out", s(&data), "--subjects", "4", "--frames", "8", "--seed", "4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = hdmm(&["extract", "--input", s(&data), "--out", s(&img), "--scales", "1,2", "--config", s(&cfg)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = img.join("manifest.csv");
    let out = hdmm(&[
        "train", "--images", s(&img), "--manifest", s(&manifest), "--split", "odd-train",
        "--out", s(&models), "--seed", "1", "--epochs", "40",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (data, img, models)
}

#[test]
fn full_pipeline_writes_consistent_report() {
    let root = tempfile::tempdir().unwrap();
    let (data, img, models) = prepared(root.path());

    // 24 samples x 2 scales x 3 planes
    let pngs = std::fs::read_dir(&img)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count();
    assert_eq!(pngs, 24 * 2 * 3);
    for plane in ["f", "s", "t"] {
        assert!(models.join(format!("plane_{plane}.model")).is_file());
    }

    let report = root.path().join("report.json");
    let out = hdmm(&[
        "eval", "--input", s(&data), "--models", s(&models), "--split", "odd-train",
        "--report", s(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["schema"], "hdmm-eval-report/1");
    assert_eq!(r["evaluated"], 12);
    assert_eq!(r["settings"]["scales"], serde_json::json!([1, 2]));
    let counts = r["confusion"]["counts"].as_array().unwrap();
    let total: u64 = counts.iter().flat_map(|row| row.as_array().unwrap()).map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 12);
    let trace: u64 = (0..3).map(|i| counts[i][i].as_u64().unwrap()).sum();
    assert_eq!(r["correct"].as_u64().unwrap(), trace);
    assert_eq!(r["accuracy"].as_f64().unwrap(), trace as f64 / 12.0);

    // same models, same data: byte-identical report on stdout
    let again = hdmm(&["eval", "--input", s(&data), "--models", s(&models), "--split", "odd-train"]);
    assert_eq!(code(&again), 0);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), std::fs::read_to_string(&report).unwrap());
}

#[test]
fn eval_refuses_shifted_labels() {
    let root = tempfile::tempdir().unwrap();
    let (data, _, models) = prepared(root.path());
    // without action 1 the identity mapping would renumber actions 2 and 3
    let partial = root.path().join("partial");
    std::fs::create_dir(&partial).unwrap();
    for e in std::fs::read_dir(&data).unwrap() {
        let p = e.unwrap().path();
        let name = p.file_name().unwrap().to_str().unwrap().to_owned();
        if !name.starts_with("a001") {
            std::fs::copy(&p, partial.join(name)).unwrap();
        }
    }
    let out = hdmm(&["eval", "--input", s(&partial), "--models", s(&models)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn info_describes_each_file_kind() {
    let root = tempfile::tempdir().unwrap();
    let (data, img, models) = prepared(root.path());
    let json = |p: &Path| -> serde_json::Value {
        let out = hdmm(&["info", s(p)]);
        assert_eq!(code(&out), 0);
        serde_json::from_slice(&out.stdout).unwrap()
    };
    let d = json(&data.join("a002_s003_e001_depth.bin"));
    assert_eq!((d["kind"].as_str(), d["frames"].as_u64(), d["width"].as_u64()), (Some("depth"), Some(8), Some(32)));
    assert_eq!(d["sample"]["subject"], 3);
    let m = json(&models.join("plane_s.model"));
    assert_eq!((m["classes"].as_u64(), m["feature_dim"].as_u64()), (Some(3), Some(3 * 16 * 16)));
    let i = json(&img.join("a002_s003_e001_t_n02_th+00_be+00.png"));
    assert_eq!((i["width"].as_u64(), i["provenance"]["plane"].as_str()), (Some(64), Some("t")));

    let cut = root.path().join("a001_s001_e001_depth.bin");
    let bytes = std::fs::read(data.join("a001_s001_e001_depth.bin")).unwrap();
    std::fs::write(&cut, &bytes[..bytes.len() - 4]).unwrap();
    assert_eq!(code(&hdmm(&["info", s(&cut)])), 2);
}

#[test]
fn exit_codes() {
    let root = tempfile::tempdir().unwrap();
    let r = root.path();
    assert_eq!(code(&hdmm(&["--help"])), 0);
    assert_eq!(code(&hdmm(&["extract", "--bogus"])), 1);
    assert_eq!(code(&hdmm(&["extract", "--input", "x", "--out", "y", "--theta", "-30:15:30"])), 1);
    assert_eq!(code(&hdmm(&["extract", "--input", "x", "--out", "y", "--scales", "0"])), 1);
    assert_eq!(code(&hdmm(&["extract", "--input", "x", "--out", "y", "--rotate", "--theta", "-30:7:30"])), 1);
    assert_eq!(code(&hdmm(&["train", "--images", "x", "--manifest", "m", "--out", "o", "--split", "train=1;test=1"])), 1);
    assert_eq!(code(&hdmm(&["extract", "--input", s(&r.join("missing")), "--out", s(&r.join("o"))])), 2);

    let (_, img, _) = prepared(r);
    let out = hdmm(&[
        "train", "--images", s(&img), "--manifest", s(&img.join("manifest.csv")),
        "--out", s(&r.join("m2")), "--learning-rate", "1e300",
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}
