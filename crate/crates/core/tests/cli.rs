use std::collections::HashMap;
use std::path::Path;
use std::process::Command;

use subspace_infer::linalg::projection_distance2;
use subspace_infer::model::io::{read_dataset, read_matrix, write_matrix};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn fields(&self) -> HashMap<String, String> {
        self.stdout
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    fn num(&self, key: &str) -> f64 {
        self.fields()[key].parse().unwrap()
    }
}

fn run(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_subspace-infer"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn gen(dir: &Path, out: &str, seed: &str, dims: [&str; 4], sigma: &str) -> Run {
    let [m1, m2, r, n] = dims;
    let res = run(
        dir,
        &[
            "--seed",
            seed,
            "--out",
            out,
            "gen-data",
            "--m1",
            m1,
            "--m2",
            m2,
            "--r",
            r,
            "--n",
            n,
            "--sigma",
            sigma,
            "--with-truth",
        ],
    );
    assert_eq!(res.code, 0, "{}", res.stderr);
    res
}

#[test]
fn gen_data_writes_two_n_records_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let res = gen(dir.path(), "a.trds", "7", ["50", "50", "4", "100"], "0.5");
    assert_eq!(res.fields()["records"], "200");
    gen(dir.path(), "b.trds", "7", ["50", "50", "4", "100"], "0.5");
    gen(dir.path(), "c.trds", "8", ["50", "50", "4", "100"], "0.5");
    let bytes = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(bytes("a.trds"), bytes("b.trds"));
    assert_ne!(bytes("a.trds"), bytes("c.trds"));
    assert_eq!(bytes("a.trds.truth.json"), bytes("b.trds.truth.json"));
    assert_eq!(read_dataset(&dir.path().join("a.trds")).unwrap().len(), 200);
}

#[test]
fn gen_data_rejects_rank_at_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(
        dir.path(),
        &[
            "--out", "x.trds", "gen-data", "--m1", "50", "--m2", "50", "--r", "50", "--n", "10",
            "--sigma", "0.5",
        ],
    );
    assert_eq!(res.code, 2);
    assert!(res.stderr.contains("rank"), "{}", res.stderr);
    assert!(!dir.path().join("x.trds").exists());
}

#[test]
fn noiseless_inference_from_the_exact_fit_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    gen(p, "d.trds", "3", ["9", "7", "2", "120"], "0");
    let u = read_matrix(&p.join("d.trds.truth.u.trmx")).unwrap();
    let v = read_matrix(&p.join("d.trds.truth.v.trmx")).unwrap();
    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("d.trds.truth.json")).unwrap())
            .unwrap();
    let lambdas: Vec<f64> = serde_json::from_value(truth["lambdas"].clone()).unwrap();
    write_matrix(&u.scale_columns(&lambdas).matmul_t(&v), &p.join("m.trmx")).unwrap();

    let res = run(
        p,
        &[
            "--out", "est", "infer", "--data", "d.trds", "--fit", "m.trmx", "--rank", "2",
        ],
    );
    assert_eq!(res.code, 0, "{}", res.stderr);
    assert_eq!(res.num("sigma2_hat"), 0.0);
    let uh = read_matrix(&p.join("est/u_hat.trmx")).unwrap();
    let vh = read_matrix(&p.join("est/v_hat.trmx")).unwrap();
    assert!(projection_distance2(&u, &v, &uh, &vh).unwrap() <= 1e-8);

    let check = run(
        p,
        &[
            "check",
            "--estimate",
            "est",
            "--u",
            "d.trds.truth.u.trmx",
            "--v",
            "d.trds.truth.v.trmx",
        ],
    );
    assert!(check.num("dist2") <= 1e-8, "{}", check.stdout);
}

#[test]
fn check_exit_status_mirrors_containment() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    gen(p, "d.trds", "4", ["10", "8", "2", "200"], "0.2");
    let res = run(
        p,
        &[
            "--out", "est", "infer", "--data", "d.trds", "--rank", "2", "--sigma", "0.2",
        ],
    );
    assert_eq!(res.code, 0, "{}", res.stderr);
    let mut seen = Vec::new();
    for (u, v) in [
        ("d.trds.truth.u.trmx", "d.trds.truth.v.trmx"),
        ("est/u_hat.trmx", "est/v_hat.trmx"),
    ] {
        let check = run(p, &["check", "--estimate", "est", "--u", u, "--v", v]);
        let contained: bool = check.fields()["contained"].parse().unwrap();
        assert_eq!(
            check.code,
            if contained { 0 } else { 1 },
            "{}",
            check.stdout
        );
        let inside = (check.num("dist2") - check.num("center")).abs() <= check.num("half_width");
        assert_eq!(contained, inside);
        seen.push(contained);
    }
    // the estimate itself sits at distance zero, inside only if the band reaches it
    let self_check = run(
        p,
        &[
            "check",
            "--estimate",
            "est",
            "--u",
            "est/u_hat.trmx",
            "--v",
            "est/v_hat.trmx",
        ],
    );
    assert_eq!(
        seen[1],
        self_check.num("center") <= self_check.num("half_width")
    );
}

#[test]
fn simulation_scale_inference_is_finite_and_unclamped() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    gen(p, "d.trds", "11", ["50", "50", "4", "2500"], "0.5");
    let res = run(
        p,
        &[
            "--out", "est", "infer", "--data", "d.trds", "--rank", "4", "--sigma", "0.5",
        ],
    );
    assert_eq!(res.code, 0, "{}", res.stderr);
    let f = res.fields();
    assert_eq!(f["clamp_fired"], "false");
    assert_eq!(f["converged"], "true");
    for key in [
        "sigma2_hat",
        "b_n",
        "v_n",
        "center",
        "half_width",
        "beta_diag",
    ] {
        assert!(
            res.num(key).is_finite() && res.num(key) > 0.0,
            "{key}={}",
            f[key]
        );
    }
    for list in ["lambda_hat", "lambda_tilde2"] {
        let values: Vec<f64> = f[list].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(values.len(), 4);
        assert!(values.iter().all(|v| v.is_finite() && *v > 0.0));
    }
}

#[test]
fn fit_reports_non_convergence_with_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    gen(p, "d.trds", "5", ["8", "8", "2", "100"], "0.2");
    let res = run(
        p,
        &[
            "--out",
            "m.trmx",
            "fit",
            "--data",
            "d.trds",
            "--sigma",
            "0.2",
            "--max-iter",
            "2",
        ],
    );
    assert_eq!(res.code, 3);
    assert_eq!(res.fields()["converged"], "false");
    assert!(p.join("m.trmx").exists());
    let both = run(
        p,
        &[
            "--out", "m.trmx", "fit", "--data", "d.trds", "--sigma", "0.2", "--lambda", "0.1",
        ],
    );
    assert_eq!(both.code, 2);
}

#[test]
fn estimate_rank_finds_the_planted_rank() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    gen(p, "d.trds", "6", ["20", "20", "3", "800"], "0.1");
    let res = run(p, &["estimate-rank", "--data", "d.trds", "--sigma", "0.1"]);
    assert_eq!(res.code, 0, "{}", res.stderr);
    assert_eq!(res.fields()["rank"], "3");
}

#[test]
fn sim_runs_solver_free_and_single_replication_configs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("e1.json"),
        r#"{"dims": {"m1": 30, "m2": 30, "r": 2}, "sigma": 0.1, "n_grid": [500, 1000], "reps": 500, "mode": "e1_oracle"}"#,
    )
    .unwrap();
    let res = run(p, &["--config", "e1.json", "--out", "e1", "sim"]);
    assert_eq!(res.code, 0, "{}", res.stderr);
    assert_eq!(
        res.stdout.lines().filter(|l| l.starts_with("n=")).count(),
        2
    );
    let csv = std::fs::read_to_string(p.join("e1/records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1001);

    std::fs::write(
        p.join("one.json"),
        r#"{"dims": {"m1": 10, "m2": 8, "r": 2}, "sigma": 0.1, "n_grid": [200], "reps": 1, "mode": "coverage"}"#,
    )
    .unwrap();
    let res = run(
        p,
        &[
            "--config",
            "one.json",
            "--out",
            "one",
            "--seed",
            "9",
            "sim",
            "--no-histograms",
        ],
    );
    assert_eq!(res.code, 0, "{}", res.stderr);
    let csv = std::fs::read_to_string(p.join("one/records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(!p.join("one/hist_oracle_n200.svg").exists());
    assert!(res.stdout.contains("master_seed=9"));
}

#[test]
fn config_errors_name_the_offending_key() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let cases = [
        (
            r#"{"dims": {"m1": 10, "m2": 10, "r": 2}, "sigma": 0.1, "reps": 1, "mode": "loss", "solver": {"max_iter": "x"}}"#,
            "solver.max_iter",
        ),
        (
            r#"{"dims": {"m1": 10, "m2": 10, "r": 2}, "sigma": 0.1, "reps": 1, "mode": "loss", "bogus": 1}"#,
            "bogus",
        ),
        (
            r#"{"dims": {"m1": 10, "m2": 10, "r": 2}, "sigma": 0.1, "reps": 1, "mode": "loss", "alpha": 1.5}"#,
            "alpha",
        ),
    ];
    for (text, key) in cases {
        std::fs::write(p.join("c.json"), text).unwrap();
        let res = run(p, &["--config", "c.json", "sim"]);
        assert_eq!(res.code, 2);
        assert!(res.stderr.contains(&format!("`{key}`")), "{}", res.stderr);
    }
}
