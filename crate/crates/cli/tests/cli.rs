use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use based_core::bench::{write_features_csv, FeatureRow};
use based_core::forest::{self, TrainConfig};
use based_core::imgcore::save_png;
use based_core::rng::DetRng;
use based_core::synth::{blur_rgb, scene};
use based_core::FeatureVector;

fn based(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_based"))
        .args(args)
        .env("BASED_LOG", "error")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Two crops, two methods each; "sharp" is the original, "same" the input.
fn small_manifest(dir: &Path) -> PathBuf {
    let mut text = String::from("crop_id,scene_id,blurred_path,deblurred_path,method,subjective\n");
    for c in 0..2 {
        let sharp = scene(80, 72, c).unwrap();
        let blurred = blur_rgb(&sharp, 3.0).unwrap();
        save_png(dir.join(format!("c{c}_in.png")), &blurred).unwrap();
        save_png(dir.join(format!("c{c}_sharp.png")), &sharp).unwrap();
        text.push_str(&format!("c{c},s{c},c{c}_in.png,c{c}_sharp.png,sharp,1\n"));
        text.push_str(&format!("c{c},s{c},c{c}_in.png,c{c}_in.png,same,0\n"));
    }
    let path = dir.join("manifest.csv");
    fs::write(&path, text).unwrap();
    path
}

/// Random features with the target equal to the laplacian column.
fn learnable_features(dir: &Path, n: usize) -> PathBuf {
    let mut rng = DetRng::new(17);
    let rows: Vec<FeatureRow> = (0..n)
        .map(|i| {
            let mut a = [0.0; 9];
            a.iter_mut().for_each(|v| *v = rng.normal());
            FeatureRow {
                crop_id: format!("c{}", i / 4),
                method: format!("m{}", i % 4),
                features: FeatureVector::from_array(a),
                subjective: Some(a[0]),
            }
        })
        .collect();
    let path = dir.join("features.csv");
    write_features_csv(&path, &rows).unwrap();
    path
}

#[test]
fn help_and_usage_errors() {
    let o = based(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("crossval"));
    for sub in ["extract", "train", "predict", "crossval", "btfit", "benchmark"] {
        assert_eq!(code(&based(&[sub, "--help"])), 0, "{sub}");
    }
    assert_eq!(code(&based(&["train", "--bogus"])), 64);
    assert_eq!(code(&based(&[])), 64);
    assert_eq!(code(&based(&["crossval", "--features", "x.csv", "--folds", "1"])), 64);
    assert_eq!(code(&based(&["crossval", "--features", "x.csv", "--group-by", "scene_id"])), 64);
}

#[test]
fn extract_writes_rows_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_manifest(dir.path());
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let o = based(&["extract", "--manifest", p(&manifest), "--out", p(&a)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = based(&["--jobs", "1", "extract", "--manifest", p(&manifest), "--out", p(&b)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let mut broken = fs::read_to_string(&manifest).unwrap();
    broken.push_str("c9,s9,nope.png,nope.png,ghost,\n");
    fs::write(&manifest, broken).unwrap();
    let o = based(&["extract", "--manifest", p(&manifest), "--out", p(&a)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("ghost"));
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 5);

    let o = based(&["extract", "--manifest", p(&dir.path().join("missing.csv")), "--out", p(&a)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn train_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let features = learnable_features(dir.path(), 40);
    let (m1, m2) = (dir.path().join("m1.json"), dir.path().join("m2.json"));
    assert_eq!(code(&based(&["train", "--features", p(&features), "--out", p(&m1)])), 0);
    assert_eq!(code(&based(&["train", "--features", p(&features), "--out", p(&m2)])), 0);
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());
    let model = forest::load(&m1).unwrap();
    assert_eq!(model.config(), &TrainConfig::default());
    assert_eq!(model.trees().len(), 220);

    let m3 = dir.path().join("m3.json");
    let o = based(&["train", "--features", p(&features), "--out", p(&m3), "--trees", "7", "--seed", "3", "--no-bootstrap"]);
    assert_eq!(code(&o), 0);
    let small = forest::load(&m3).unwrap();
    assert_eq!(small.trees().len(), 7);
    assert!(!small.config().bootstrap);

    let img = dir.path().join("img.png");
    save_png(&img, &scene(72, 72, 1).unwrap()).unwrap();
    let o = based(&["predict", "--model", p(&m1), "--blurred", p(&img), "--deblurred", p(&img)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let value: f64 = stdout(&o).trim().parse().unwrap();
    assert_eq!(value, model.predict(&FeatureVector::IDENTITY));

    let other = dir.path().join("other.png");
    save_png(&other, &scene(72, 80, 1).unwrap()).unwrap();
    let o = based(&["predict", "--model", p(&m1), "--blurred", p(&img), "--deblurred", p(&other)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn train_needs_subjective_scores() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    fs::write(&f, "crop_id,method,laplacian,fft,gabor,hough,hog,ssim_m,sobel,lbp,reblur\n").unwrap();
    let o = based(&["train", "--features", p(&f), "--out", p(&dir.path().join("m.json"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("subjective"), "{}", stderr(&o));
}

#[test]
fn crossval_learnable_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let features = learnable_features(dir.path(), 200);
    let report = dir.path().join("cv.json");
    let o = based(&["crossval", "--features", p(&features), "--trees", "60", "--out", p(&report)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(json["srcc"].as_f64().unwrap() >= 0.99, "{json}");
    assert_eq!(json["folds"].as_array().unwrap().len(), 5);
    assert_eq!(json["n"], 200);

    let o = based(&["crossval", "--features", p(&features), "--trees", "10,20,30", "--group-by", "none"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("10\t") && lines[3].starts_with("30\t"));

    let o = based(&["crossval", "--features", p(&features), "--trees", "10", "--per-group"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn btfit_scores() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.csv");
    let out = dir.path().join("scores.csv");
    fs::write(&pairs, "a,b,wins_a,wins_b,ties\nB,A,1,3,0\n").unwrap();
    assert_eq!(code(&based(&["btfit", "--pairs", p(&pairs), "--out", p(&out)])), 0);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,score");
    assert!(lines[1].starts_with("A,"));
    let gap: f64 = lines[1][2..].parse().unwrap();
    assert!((gap - 3f64.ln()).abs() < 1e-6);
    assert_eq!(lines[2], "B,0");

    fs::write(&pairs, "a,b,wins_a,wins_b,ties\nA,B,1,1,0\nC,D,2,1,1\n").unwrap();
    let o = based(&["btfit", "--pairs", p(&pairs), "--out", p(&out)]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("{A, B}") && err.contains("{C, D}"), "{err}");
}

#[test]
fn benchmark_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_manifest(dir.path());
    let features = learnable_features(dir.path(), 40);
    let model = dir.path().join("model.json");
    assert_eq!(code(&based(&["train", "--features", p(&features), "--out", p(&model), "--trees", "20"])), 0);

    let (a, b) = (dir.path().join("run_a"), dir.path().join("run_b"));
    for out in [&a, &b] {
        let o = based(&["benchmark", "--manifest", p(&manifest), "--model", p(&model), "--out-dir", p(out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).contains("| Method |"));
    }
    for name in ["features.csv", "leaderboard.md", "correlations.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }

    let o = based(&[
        "benchmark",
        "--manifest",
        p(&manifest),
        "--model",
        p(&dir.path().join("none.json")),
        "--out-dir",
        p(&a),
    ]);
    assert_eq!(code(&o), 1);
}
