use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gevnet::GevParams;

fn gevnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gevnet"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_model(dir: &Path, name: &str) -> PathBuf {
    let model = dir.join(name);
    let out = gevnet(&[
        "train",
        "--n-train",
        "300",
        "--n-valid",
        "60",
        "--sample-size",
        "200",
        "--max-epochs",
        "3",
        "--hidden",
        "8,8",
        "--seed",
        "7",
        "--model-out",
        p(&model),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    model
}

#[test]
fn simulate_writes_replayable_values() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    for f in [&a, &b] {
        let out = gevnet(&[
            "simulate",
            "--mu",
            "10",
            "--sigma",
            "2",
            "--xi",
            "-0.1",
            "--n",
            "5",
            "--seed",
            "3",
            "--out",
            p(f),
        ]);
        assert!(out.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);
    assert!(text.starts_with("# gev mu=10 sigma=2 xi=-0.1 n=5 seed=3"));
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn invalid_parameters_exit_with_validation_status() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.txt");
    let out = gevnet(&[
        "simulate",
        "--mu",
        "0",
        "--sigma",
        "-1",
        "--xi",
        "0",
        "--n",
        "5",
        "--out",
        p(&f),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!f.exists());
    assert_eq!(
        gevnet(&["benchmark", "--model", "m.json", "--study", "nonsense"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(gevnet(&["--help"]).status.code(), Some(0));
}

#[test]
fn training_is_reproducible_and_writes_history() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_model(dir.path(), "a.json");
    let b = small_model(dir.path(), "b.json");
    let (ma, mb) = (gevnet::nn::load(&a).unwrap(), gevnet::nn::load(&b).unwrap());
    assert_eq!(ma.layers(), mb.layers());
    let history = std::fs::read_to_string(dir.path().join("a.json.history.csv")).unwrap();
    assert_eq!(history.lines().count() - 1, ma.metadata.epochs);
    assert_eq!(ma.metadata.scenario.as_deref(), Some("fixed:200"));
}

#[test]
fn divergence_exits_with_numerical_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = gevnet(&[
        "train",
        "--n-train",
        "100",
        "--n-valid",
        "20",
        "--sample-size",
        "100",
        "--hidden",
        "4",
        "--lr",
        "1e308",
        "--max-epochs",
        "3",
        "--model-out",
        p(&dir.path().join("m.json")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn dataset_file_can_feed_training() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("d.csv");
    let out = gevnet(&[
        "build-dataset",
        "--scenario",
        "varying",
        "--n-train",
        "50",
        "--n-valid",
        "10",
        "--out",
        p(&ds),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&ds).unwrap();
    assert_eq!(text.lines().count(), 61);
    let model = dir.path().join("m.json");
    let out = gevnet(&[
        "train",
        "--dataset-file",
        p(&ds),
        "--hidden",
        "4",
        "--max-epochs",
        "1",
        "--model-out",
        p(&model),
        "--history-out",
        p(&dir.path().join("h.csv")),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("h.csv").exists());
}

#[test]
fn estimate_and_bootstrap_read_simulated_values() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_model(dir.path(), "m.json");
    let data = dir.path().join("y.txt");
    gevnet(&[
        "simulate",
        "--mu",
        "5",
        "--sigma",
        "1",
        "--xi",
        "0.1",
        "--n",
        "300",
        "--seed",
        "1",
        "--out",
        p(&data),
    ]);
    let out = gevnet(&["estimate", "--model", p(&model), "--data", p(&data)]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "mu,sigma,xi");
    let est: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
    assert!(GevParams::new(est[0], est[1], est[2]).is_ok());

    let reps = dir.path().join("reps.csv");
    let out = gevnet(&[
        "bootstrap",
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--b",
        "40",
        "--replicates-out",
        p(&reps),
    ]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);
    assert_eq!(std::fs::read_to_string(&reps).unwrap().lines().count(), 41);

    let missing = gevnet(&[
        "estimate",
        "--model",
        p(&dir.path().join("none.json")),
        "--data",
        p(&data),
    ]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn fit_reports_one_row_per_site_and_method() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_model(dir.path(), "m.json");
    let theta = GevParams::new(20.0, 4.0, 0.1).unwrap();
    let big = theta.sample(1000, 5).unwrap();
    let mut csv = String::from("site_id,year,value\n");
    for (i, v) in big.values().iter().enumerate() {
        csv.push_str(&format!("alpha,{},{v}\n", 1000 + i));
    }
    for i in 0..10 {
        csv.push_str(&format!("beta,{},{}\n", 2000 + i, i as f64));
    }
    let data = dir.path().join("sites.csv");
    std::fs::write(&data, csv).unwrap();
    let out_path = dir.path().join("fit.csv");
    let out = gevnet(&[
        "fit",
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--method",
        "both",
        "--bootstrap",
        "30",
        "--out",
        p(&out_path),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&out_path).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 4);
    assert_eq!((rows[0][0], rows[0][1], rows[0][3]), ("alpha", "nn", "ok"));
    assert!(!rows[0][7].is_empty(), "nn interval columns populated");
    assert_eq!((rows[1][0], rows[1][1], rows[1][3]), ("alpha", "mle", "ok"));
    let xi_mle: f64 = rows[1][6].parse().unwrap();
    assert!((xi_mle - 0.1).abs() < 0.1);
    assert_eq!(rows[2][3], "too_few_values");
    assert_eq!(rows[3][3], "too_few_values");

    let only_nn = gevnet(&[
        "fit",
        "--data",
        p(&data),
        "--method",
        "nn",
        "--out",
        p(&out_path),
    ]);
    assert_eq!(only_nn.status.code(), Some(1));
}

#[test]
fn benchmark_tables() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_model(dir.path(), "m.json");
    let out_dir = dir.path().join("reports");
    let run = |study: &str, extra: &[&str]| {
        let mut args = vec![
            "benchmark",
            "--model",
            p(&model),
            "--study",
            study,
            "--out-dir",
            p(&out_dir),
        ];
        args.extend_from_slice(extra);
        let out = gevnet(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    run("deviations", &["--n", "4", "--seed", "1"]);
    let fig2 = std::fs::read_to_string(out_dir.join("fig2_deviations.csv")).unwrap();
    assert!(fig2.starts_with("case,estimator,parameter,truth,estimate,deviation,scaled_deviation"));
    run(
        "grid",
        &[
            "--sizes",
            "72,416",
            "--grid-points",
            "2",
            "--replications",
            "2",
        ],
    );
    assert!(
        out_dir.join("fig3_mse_n72.csv").exists() && out_dir.join("fig3_mse_n416.csv").exists()
    );
    run("ratios", &["--n", "2", "--b", "20"]);
    assert!(out_dir.join("fig4_ratios.csv").exists());
    run("timing", &["--n", "3"]);
    let timing = std::fs::read_to_string(out_dir.join("timing.csv")).unwrap();
    assert!(timing.lines().next().unwrap().contains("speedup"));
}
