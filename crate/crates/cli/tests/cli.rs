use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hxai_core::hierarchy_tools::{axis_aligned_hierarchy, COUNTEREXAMPLE_SIZE};
use hxai_core::raster::write_image;
use hxai_core::Image;

fn hxai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hxai")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn counterexample_image(dir: &Path) -> PathBuf {
    let image = Image::gray_from_fn(COUNTEREXAMPLE_SIZE, COUNTEREXAMPLE_SIZE, |x, y| {
        if (9..15).contains(&x) && (9..15).contains(&y) {
            240.0
        } else {
            40.0
        }
    })
    .unwrap();
    let path = dir.join("object.pgm");
    write_image(&path, &image).unwrap();
    path
}

fn small_image(dir: &Path, size: usize) -> PathBuf {
    let image = Image::gray_from_fn(
        size,
        size,
        |x, y| if x >= size / 2 && y >= size / 2 { 220.0 } else { 30.0 },
    )
    .unwrap();
    let path = dir.join(format!("small{size}.pgm"));
    write_image(&path, &image).unwrap();
    path
}

#[test]
fn segment_writes_hierarchy_and_label_maps() {
    let dir = tempfile::tempdir().unwrap();
    let input = counterexample_image(dir.path());
    let out = dir.path().join("seg");
    let res = hxai(&["segment", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["hierarchy.json", "edges.pgm", "level_1.pgm"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("hierarchy.json")).unwrap()).unwrap();
    assert_eq!(doc["n_features"], 1024);
    assert_eq!(doc["metadata"]["canny"]["pct_upper"], 90.0);
}

#[test]
fn check_t_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = counterexample_image(dir.path());
    let base = ["--input", s(&input), "--scorer", "retained-mean", "--tau", "140"];

    let built = hxai(&[&["check-t"][..], &base, &["--out", s(&dir.path().join("a"))]].concat());
    assert_eq!(code(&built), 0, "{}", String::from_utf8_lossy(&built.stderr));

    let axis = dir.path().join("axis.json");
    axis_aligned_hierarchy(32, 32, &[2, 2, 2])
        .unwrap()
        .to_document()
        .save(&axis)
        .unwrap();
    let failing = hxai(
        &[
            &["check-t"][..],
            &base,
            &["--hierarchy", s(&axis), "--out", s(&dir.path().join("b"))],
        ]
        .concat(),
    );
    assert_eq!(code(&failing), 3);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b/t_property.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
    assert!(!report["violations"].as_array().unwrap().is_empty());

    let trivial = hxai(&[
        "check-t",
        "--input",
        s(&input),
        "--scorer",
        "retained-mean",
        "--tau",
        "-inf",
        "--hierarchy",
        s(&axis),
        "--out",
        s(&dir.path().join("c")),
    ]);
    assert_eq!(code(&trivial), 0);
    assert!(String::from_utf8_lossy(&trivial.stdout).contains("\"-inf\""));
}

#[test]
fn explain_outputs_and_shapley_limits() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_image(dir.path(), 4);
    let out = dir.path().join("shap");
    let res = hxai(&[
        "explain",
        "--input",
        s(&input),
        "--method",
        "shapley",
        "--scorer",
        "mean",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(out.join("attribution.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().all(|l| l.split(',').count() == 4));
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["distinct_evals"], 65536);
    assert!(stats["efficiency_gap"].as_f64().unwrap().abs() < 1e-9);
    assert!(std::fs::read(out.join("heatmap.pgm"))
        .unwrap()
        .starts_with(b"P5\n4 4\n255\n"));

    let big = small_image(dir.path(), 8);
    let too_big = hxai(&["explain", "--input", s(&big), "--method", "shapley", "--out", s(&out)]);
    assert_eq!(code(&too_big), 2);
    let mc = hxai(&[
        "explain",
        "--input",
        s(&big),
        "--method",
        "shapley",
        "--mc",
        "50",
        "--seed",
        "3",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&mc), 0);
}

#[test]
fn invalid_arguments_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_image(dir.path(), 8);
    let out = dir.path().join("x");
    for extra in [
        &["--pct-lower", "95"][..],
        &["--epsilon", "-1"],
        &["--scorer", "template:0,0,99,99"],
        &["--pixel-split", "bisect:0"],
        &["--baseline", "blur"],
    ] {
        let res = hxai(&[&["explain", "--input", s(&input), "--out", s(&out)][..], extra].concat());
        assert_eq!(code(&res), 2, "{extra:?}: {}", String::from_utf8_lossy(&res.stderr));
    }
    assert_eq!(code(&hxai(&["explain", "--input", s(&dir.path().join("none.pgm"))])), 1);
}

#[test]
fn metrics_reads_explain_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_image(dir.path(), 8);
    let mask = dir.path().join("mask.pgm");
    let m = Image::gray_from_fn(8, 8, |x, y| if x >= 4 && y >= 4 { 255.0 } else { 0.0 }).unwrap();
    write_image(&mask, &m).unwrap();
    let ex = dir.path().join("ex");
    let scorer = ["--scorer", "template:4,4,7,7"];
    let res = hxai(&[&["explain", "--input", s(&input), "--out", s(&ex)][..], &scorer].concat());
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let out = dir.path().join("m");
    let res = hxai(
        &[
            &[
                "metrics",
                "--attr",
                s(&ex.join("attribution.csv")),
                "--mask",
                s(&mask),
                "--bbox",
                "4,4,7,7",
            ][..],
            &["--input", s(&input), "--out", s(&out)],
            &scorer,
        ]
        .concat(),
    );
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(report["miou"], 1.0);
    assert_eq!(report["bbox"], 1.0);
    assert!(report["aopc"].as_f64().unwrap() > 0.0);
    assert_eq!(
        std::fs::read_to_string(out.join("metrics.csv"))
            .unwrap()
            .lines()
            .count(),
        2
    );
}

#[test]
fn compare_cost_reports_both_counts() {
    let res = hxai(&["compare-cost", "--n-features", "50", "--fanout", "2,5,5"]);
    assert_eq!(code(&res), 0);
    let text = String::from_utf8_lossy(&res.stdout);
    let owen = text.lines().find(|l| l.starts_with("owen")).unwrap();
    assert_eq!(owen, "owen,50,2x5x5,4096,4.096e3,1024,9724");
    assert_eq!(
        code(&hxai(&["compare-cost", "--n-features", "49", "--fanout", "2,5,5"])),
        2
    );
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let res = hxai(&["bench", "--sizes", "4,8", "--out", s(&out)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(out.join("bench.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("4,16,"));
    assert!(rows[2].ends_with("infeasible,infeasible"));
}

fn read_csv(path: &Path) -> Vec<f64> {
    hxai_cli::read_attribution_csv(path).unwrap().into_vec()
}

#[test]
fn owen_and_shapley_agree_on_an_additive_scorer() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_image(dir.path(), 4);
    let mut scores = Vec::new();
    for method in ["owen", "shapley"] {
        let out = dir.path().join(method);
        let res = hxai(&[
            "explain",
            "--input",
            s(&input),
            "--scorer",
            "mean",
            "--method",
            method,
            "--out",
            s(&out),
        ]);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
        scores.push(read_csv(&out.join("attribution.csv")));
        let heat = std::fs::read(out.join("heatmap.pgm")).unwrap();
        let pixels = &heat[heat.len() - 16..];
        assert_eq!((pixels.iter().min(), pixels.iter().max()), (Some(&0), Some(&255)));
        let stats: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
        assert!(stats["distinct_evals"].as_u64().unwrap() <= stats["predicted_eval_count"].as_u64().unwrap());
    }
    for (a, b) in scores[0].iter().zip(&scores[1]) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn outputs_round_trip_and_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let input = counterexample_image(dir.path());
    let run = |tag: &str| {
        let out = dir.path().join(tag);
        let config = hxai_cli::RunConfig {
            input: input.clone(),
            scorer: "retained-mean".into(),
            baseline: hxai_cli::Baseline::Mean,
            pct_lower: 75.0,
            pct_upper: 90.0,
            dilate: 2,
            fanout: 5,
            max_depth: 6,
            epsilon: "median".into(),
            tau: 0.0,
            seed: 0,
            pixel_split: Some("bisect:2".into()),
            out: out.clone(),
        };
        let built = hxai_cli::cmd_segment(&config).unwrap();
        let reloaded = hxai_core::PartitionHierarchy::load(out.join("hierarchy.json")).unwrap();
        assert_eq!(reloaded.to_document().root, built.hierarchy.to_document().root);
        let args = hxai_cli::ExplainArgs {
            config,
            method: hxai_cli::ExplainMethod::Owen,
            mc: None,
            hierarchy: Some(out.join("hierarchy.json")),
        };
        let explained = hxai_cli::cmd_explain(&args).unwrap();
        assert_eq!(read_csv(&out.join("attribution.csv")), explained.attribution.scores);
        [
            "hierarchy.json",
            "attribution.csv",
            "heatmap.pgm",
            "edges.pgm",
            "level_1.pgm",
        ]
        .iter()
        .map(|f| std::fs::read(out.join(f)).unwrap())
        .collect::<Vec<_>>()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn singleton_hierarchies_cost_as_much_as_shapley() {
    let res = hxai(&["compare-cost", "--fanout", "6"]);
    assert_eq!(code(&res), 0);
    let text = String::from_utf8_lossy(&res.stdout);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0][3], "64");
    assert_eq!(rows[1][3], "64");
    assert_eq!(rows[0][6], rows[1][6]);
}

#[test]
fn bench_counts_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let args = |tag: &str| hxai_cli::BenchArgs {
        sizes: vec![4, 8, 12],
        scorer: "template".into(),
        pixel_split: "bisect:4".into(),
        fanout: 5,
        seed: 1,
        out: dir.path().join(tag),
    };
    let a = hxai_cli::cmd_bench(&args("a")).unwrap();
    let b = hxai_cli::cmd_bench(&args("b")).unwrap();
    let counts = |rows: &[hxai_cli::BenchRow]| rows.iter().map(|r| r.owen_distinct_evals).collect::<Vec<_>>();
    assert_eq!(counts(&a), counts(&b));
    assert_eq!(a[0].shapley_evals, Some(65536));
}
