//! Acceptance suite. Runs every required criterion, prints one PASS/FAIL
//! line each, and exits non-zero if any failed. Criterion 8 needs external
//! data: set `BASED_EXTERNAL_MANIFEST` (and optionally
//! `BASED_EXTERNAL_PLCC` / `BASED_EXTERNAL_SRCC`) to run it.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use based_core::bench::{correlation_report, ingest, leaderboard, run_benchmark, training_rows, FeatureRow, RowRecord};
use based_core::eval::{kendall_tau_b, kfold_cv, spearman};
use based_core::features::{reblur_feature, sobel_feature};
use based_core::forest::{fit, r2_score, RandomForestModel, TrainConfig, TrainRow};
use based_core::imgcore::{gaussian_blur, Plane};
use based_core::rng::DetRng;
use based_core::subjective::{bt_fit, bt_fit_traced, PairwiseTally, DEFAULT_MAX_ITER, DEFAULT_TOL};
use based_core::synth::{noise_rgb, scene};
use based_core::{extract_all, FeatureParams, FeatureVector, NUM_FEATURES};
use common::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn identity_suite() -> Outcome {
    let p = FeatureParams::default();
    let want = FeatureVector::IDENTITY.to_array();
    let mut worst = 0.0f64;
    for i in 0..24u64 {
        let size = 64 + 32 * (i as usize % 3);
        let img = if i % 2 == 0 {
            noise_rgb(size, size + 16, i).unwrap()
        } else {
            scene(size + 16, size, i).unwrap()
        };
        let got = extract_all(&img, &img, &p).map_err(|e| e.to_string())?.to_array();
        for k in 0..NUM_FEATURES {
            worst = worst.max((got[k] - want[k]).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    Ok(format!("24 images, max deviation {worst:e}"))
}

fn correlation_oracles() -> Outcome {
    let mut rng = DetRng::new(2024);
    let mut checked = 0;
    for trial in 0..1000 {
        let n = 3 + rng.below(48);
        let levels = 2 + rng.below(6);
        let draw = |rng: &mut DetRng| -> f64 {
            if rng.below(3) == 0 {
                rng.below(levels) as f64
            } else {
                rng.uniform(-10.0, 10.0)
            }
        };
        let x: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
        if constant(&x) || constant(&y) {
            continue;
        }
        let tau = kendall_tau_b(&x, &y).map_err(|e| e.to_string())?;
        let oracle = brute_tau_b(&x, &y);
        ensure(tau.to_bits() == oracle.to_bits(), || {
            format!("trial {trial}: tau-b {tau} vs exhaustive {oracle}")
        })?;
        let rho = spearman(&x, &y).map_err(|e| e.to_string())?;
        let composed = two_pass_pearson(&count_ranks(&x), &count_ranks(&y));
        ensure((rho - composed).abs() <= 1e-12, || {
            format!("trial {trial}: spearman {rho} vs composed {composed}")
        })?;
        checked += 1;
    }
    ensure(checked >= 990, || format!("only {checked} usable trials"))?;
    Ok(format!("{checked} random pairs"))
}

fn convolution_oracles() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = DetRng::new(seed);
        let a = Plane::from_fn(64, 64, |_, _| rng.uniform(0.0, 255.0)).unwrap();
        let b = if seed % 2 == 0 {
            gaussian_blur(&a, 1.0 + (seed % 5) as f64).unwrap()
        } else {
            Plane::from_fn(64, 64, |_, _| rng.uniform(0.0, 255.0)).unwrap()
        };
        let s = sobel_feature(&b, &a, 13).map_err(|e| e.to_string())?;
        let r = reblur_feature(&b, &a, 17, 2.9).map_err(|e| e.to_string())?;
        worst = worst
            .max((s - sobel_oracle(&b, &a, 13)).abs())
            .max((r - reblur_oracle(&b, &a, 17, 2.9)).abs());
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    Ok(format!("20 pairs, max deviation {worst:e}"))
}

fn bradley_terry() -> Outcome {
    let two = bt_fit(&[PairwiseTally::new("A", "B", 3, 1, 0)], DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
    let gap = two.get("A").unwrap() - two.get("B").unwrap();
    ensure((gap - 3f64.ln()).abs() <= 1e-6, || format!("3:1 gap {gap}"))?;

    let abilities = [("m1", 1.0), ("m2", 2.0), ("m3", 3.5), ("m4", 6.0), ("m5", 10.0)];
    let mut rng = DetRng::new(5);
    let mut tallies = Vec::new();
    for (i, &(a, pa)) in abilities.iter().enumerate() {
        for &(b, pb) in &abilities[i + 1..] {
            let wa = (0..10_000).filter(|_| rng.unit() < pa / (pa + pb)).count() as u64;
            tallies.push(PairwiseTally::new(a, b, wa, 10_000 - wa, 0));
        }
    }
    let (scores, trace) = bt_fit_traced(&tallies, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
    let truth: Vec<f64> = abilities.iter().map(|a| a.1.ln()).collect();
    let fitted: Vec<f64> = abilities.iter().map(|a| scores.get(a.0).unwrap()).collect();
    let srcc = spearman(&fitted, &truth).map_err(|e| e.to_string())?;
    ensure(srcc == 1.0, || format!("5-player SRCC {srcc}"))?;
    let drops = trace.windows(2).filter(|w| w[1] < w[0]).count();
    ensure(drops == 0, || format!("log-likelihood decreased in {drops} sweeps"))?;
    Ok(format!("gap {gap:.9}, SRCC {srcc}, {} monotone sweeps", trace.len() - 1))
}

fn forest_correctness() -> Outcome {
    let mut rng = DetRng::new(50);
    let rows: Vec<TrainRow> = (0..50)
        .map(|_| {
            let mut a = [0.0; NUM_FEATURES];
            a.iter_mut().for_each(|v| *v = rng.uniform(-1.0, 1.0));
            TrainRow::new(FeatureVector::from_array(a), rng.normal())
        })
        .collect();
    let single = TrainConfig {
        n_estimators: 1,
        bootstrap: false,
        ..Default::default()
    };
    let tree = fit(&rows, &single).map_err(|e| e.to_string())?;
    let targets: Vec<f64> = rows.iter().map(|r| r.target).collect();
    let preds: Vec<f64> = rows.iter().map(|r| tree.predict(&r.features)).collect();
    let r2 = r2_score(&targets, &preds);
    ensure(r2 == 1.0, || format!("single-tree R2 {r2}"))?;

    let cfg = TrainConfig {
        n_estimators: 30,
        ..Default::default()
    };
    let forest = fit(&rows, &cfg).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for r in &rows {
        let each = forest.predict_each(&r.features);
        let mean = each.iter().sum::<f64>() / each.len() as f64;
        worst = worst.max((forest.predict(&r.features) - mean).abs());
    }
    ensure(worst <= 1e-12, || format!("forest vs tree mean {worst:e}"))?;
    let again = fit(&rows, &cfg).map_err(|e| e.to_string())?;
    ensure(forest.to_json() == again.to_json(), || "retrained model JSON differs".into())?;
    Ok(format!("R2 {r2}, mean deviation {worst:e}, identical JSON"))
}

struct Ladder {
    _dir: tempfile::TempDir,
    records: Vec<RowRecord>,
}

fn build_ladder() -> Result<Ladder, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = ingest(write_ladder(dir.path(), 40, 128, 1000)).map_err(|e| e.to_string())?;
    let out = run_benchmark(&manifest, None, &FeatureParams::default(), None).map_err(|e| e.to_string())?;
    ensure(out.failures.is_empty(), || format!("{:?}", out.failures))?;
    Ok(Ladder {
        _dir: dir,
        records: out.records,
    })
}

fn scene_index(r: &RowRecord) -> usize {
    r.scene_id.trim_start_matches("scene").parse().unwrap()
}

fn end_to_end(ladder: &Ladder) -> Outcome {
    let (train, test): (Vec<&RowRecord>, Vec<&RowRecord>) = ladder.records.iter().partition(|r| scene_index(r) < 30);
    let rows: Vec<FeatureRow> = train.iter().map(|r| FeatureRow::from(*r)).collect();
    let model: RandomForestModel = fit(&training_rows(&rows).map_err(|e| e.to_string())?, &TrainConfig::default())
        .map_err(|e| e.to_string())?;
    let scored: Vec<RowRecord> = test
        .iter()
        .map(|r| RowRecord {
            predicted: Some(model.predict(&r.features)),
            ..(*r).clone()
        })
        .collect();
    let pred: Vec<f64> = scored.iter().map(|r| r.predicted.unwrap()).collect();
    let truth: Vec<f64> = scored.iter().map(|r| r.subjective.unwrap()).collect();
    let srcc = spearman(&pred, &truth).map_err(|e| e.to_string())?;
    let board = leaderboard(&scored);
    let top = &board[0].method;
    let report = correlation_report(&scored).map_err(|e| e.to_string())?;
    let per_scene = report
        .metrics
        .iter()
        .find(|m| m.metric == "predicted")
        .and_then(|m| m.per_group)
        .map_or(f64::NAN, |c| c.srcc);
    ensure(srcc >= 0.9, || format!("held-out SRCC {srcc:.4}"))?;
    ensure(*top == ladder_method(0.0), || format!("leaderboard top is {top}"))?;
    Ok(format!(
        "held-out SRCC {srcc:.4} (per-scene {per_scene:.4}), top method {top}, {} trees",
        model.trees().len()
    ))
}

fn tree_sweep(ladder: &Ladder) -> Outcome {
    let rows: Vec<FeatureRow> = ladder.records.iter().map(FeatureRow::from).collect();
    let train = training_rows(&rows).map_err(|e| e.to_string())?;
    let groups: Vec<String> = ladder.records.iter().map(|r| r.scene_id.clone()).collect();
    let mut means = BTreeMap::new();
    for trees in [50, 100, 220, 400] {
        let cfg = TrainConfig {
            n_estimators: trees,
            ..Default::default()
        };
        let cv = kfold_cv(&train, 5, &cfg, Some(&groups), 42).map_err(|e| e.to_string())?;
        means.insert(trees, cv.srcc);
    }
    let lo = means.values().copied().fold(f64::INFINITY, f64::min);
    let hi = means.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let profile: Vec<String> = means.iter().map(|(t, s)| format!("{t}:{s:.4}")).collect();
    ensure(hi - lo < 0.1, || format!("spread {:.4} ({})", hi - lo, profile.join(" ")))?;
    Ok(format!("mean SRCC {} spread {:.4}", profile.join(" "), hi - lo))
}

fn external_data() -> Option<Outcome> {
    let path = std::env::var("BASED_EXTERNAL_MANIFEST").ok()?;
    let target = |name: &str, default: f64| {
        std::env::var(name)
            .ok()
            .and_then(|v| v.parse::<f64>().ok())
            .unwrap_or(default)
    };
    let run = || -> Outcome {
        let manifest = ingest(&path).map_err(|e| e.to_string())?;
        let out = run_benchmark(&manifest, None, &FeatureParams::default(), None).map_err(|e| e.to_string())?;
        let rows: Vec<FeatureRow> = out.records.iter().map(FeatureRow::from).collect();
        let train = training_rows(&rows).map_err(|e| e.to_string())?;
        let groups: Vec<String> = out.records.iter().map(|r| r.scene_id.clone()).collect();
        let cv = kfold_cv(&train, 5, &TrainConfig::default(), Some(&groups), 42).map_err(|e| e.to_string())?;
        let (plcc_t, srcc_t) = (target("BASED_EXTERNAL_PLCC", 0.9531), target("BASED_EXTERNAL_SRCC", 0.9053));
        let msg = format!(
            "PLCC {:.4} (target {plcc_t}), SRCC {:.4} (target {srcc_t}), {} rows",
            cv.plcc,
            cv.srcc,
            train.len()
        );
        ensure((cv.plcc - plcc_t).abs() <= 0.05 && (cv.srcc - srcc_t).abs() <= 0.05, || msg.clone())?;
        Ok(msg)
    };
    Some(run())
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: &str, name: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} PASS {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} FAIL {name} [{secs:.1}s]: {detail}");
            }
        }
    };

    let t = Instant::now();
    report("1", "identity vector", t, identity_suite());
    let t = Instant::now();
    report("2", "correlation oracles", t, correlation_oracles());
    let t = Instant::now();
    report("3", "convolution oracles", t, convolution_oracles());
    let t = Instant::now();
    report("4", "Bradley-Terry", t, bradley_terry());
    let t = Instant::now();
    report("5", "forest correctness", t, forest_correctness());

    let t = Instant::now();
    match build_ladder() {
        Ok(ladder) => {
            report("6", "blur ladder end to end", t, end_to_end(&ladder));
            let t = Instant::now();
            report("7", "tree-count sweep", t, tree_sweep(&ladder));
        }
        Err(e) => {
            report("6", "blur ladder end to end", t, Err(format!("ladder build failed: {e}")));
            report("7", "tree-count sweep", t, Err("ladder unavailable".into()));
        }
    }

    // Out-of-tolerance results on external data are reported, not fatal.
    match external_data() {
        Some(Ok(detail)) => println!("criterion 8 PASS external data (optional): {detail}"),
        Some(Err(detail)) => println!("criterion 8 DEVIATION external data (optional): {detail}"),
        None => println!("criterion 8 SKIP external data (optional): BASED_EXTERNAL_MANIFEST not set"),
    }

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
