use std::path::Path;
use std::process::{Command, Output};

const MINIMAL: &str = "[instance]\nyoung_modulus = 2e11\nvolume_budget = 0.1\nx_min = 1e-8\n";

fn sapg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sapg"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn describe_reports_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "g.toml", &format!("{MINIMAL}cols = 2\nrows = 2\nlevel = 1\n"));
    let o = sapg(&["describe", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("bars (m): 6"), "{text}");
    assert!(text.contains("free dofs (d): 4"), "{text}");
    assert!(text.contains("nodes: 4"), "{text}");

    let o = sapg(&["describe"], tmp.path());
    let text = stdout(&o);
    assert!(text.contains("bars (m): 73") && text.contains("load columns (n): 2"), "{text}");
}

#[test]
fn describe_warns_on_infeasible_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "b.toml", &MINIMAL.replace("x_min = 1e-8", "x_min = 0.01"));
    let o = sapg(&["describe", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("budget feasible: no"));
    assert!(stdout(&o).contains("warning"));
}

#[test]
fn missing_budget_exits_2_naming_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "m.toml", "[instance]\nyoung_modulus = 2e11\nx_min = 1e-8\n");
    let o = sapg(&["solve", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("volume_budget"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(sapg(&["check", "--suite", "nope"], tmp.path()).status.code(), Some(2));
    assert_eq!(sapg(&["solve", "--algo", "newton"], tmp.path()).status.code(), Some(2));
    assert_eq!(sapg(&["frobnicate"], tmp.path()).status.code(), Some(2));
    let o = sapg(&["solve", "--config", "does-not-exist.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_writes_strided_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sapg(&["solve", "--out", "o", "--iters", "400", "--stride", "10"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let path = tmp.path().join("o/trace_sapg.csv");
    let mut r = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "k",
            "f_x",
            "f_mu_x",
            "mu_k",
            "L_k",
            "a_k",
            "feas_residual_box",
            "feas_residual_budget",
            "step_norm",
            "time_s"
        ]
    );
    let rows = rows(&path);
    assert_eq!(rows.len(), 400 / 10 + 1);
    for row in &rows {
        assert!(row[6].parse::<f64>().unwrap() <= 1e-10);
        assert!(row[7].parse::<f64>().unwrap() <= 1e-10);
        assert!(row[9].is_empty());
    }
    assert_eq!(&rows.last().unwrap()[0], "400");
}

#[test]
fn solve_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for (alg, dir) in [("spg", "a"), ("spg", "b"), ("subgrad", "c"), ("subgrad", "d")] {
        let o = sapg(&["solve", "--algo", alg, "--out", dir, "--iters", "300"], tmp.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |d: &str, f: &str| std::fs::read(tmp.path().join(d).join(f)).unwrap();
    assert_eq!(read("a", "trace_spg.csv"), read("b", "trace_spg.csv"));
    assert_eq!(read("c", "trace_subgrad.csv"), read("d", "trace_subgrad.csv"));
}

#[test]
fn breakdown_exits_3_with_partial_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "t.toml",
        &format!("{}\n[sapg]\nl = 1e-3\n", MINIMAL.replace("x_min = 1e-8", "x_min = 1e-300")),
    );
    let o = sapg(&["solve", "--config", &cfg, "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("numerical breakdown"));
    let rows = rows(&tmp.path().join("o/trace_sapg.csv"));
    assert!(!rows.is_empty() && rows.len() < 4001);
}

#[test]
fn compare_writes_aligned_gaps() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", &format!("{MINIMAL}[run]\niters = 500\nsurrogate_iters = 2000\n"));
    let o = sapg(&["compare", "--config", &cfg, "--out", "o", "--svg"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = tmp.path().join("o");
    let mut r = csv::Reader::from_path(out.join("gaps.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["k", "gap_sapg", "gap_spg", "gap_subgrad"]);
    let gaps = rows(&out.join("gaps.csv"));
    assert_eq!(gaps.len(), 501);
    for row in &gaps {
        for v in row.iter().skip(1) {
            assert!(v.parse::<f64>().unwrap() >= -1e-12);
        }
    }
    let summary = rows(&out.join("summary.csv"));
    assert_eq!(summary.len(), 3);
    let svg = std::fs::read_to_string(out.join("gaps.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(stdout(&o).contains("reference optimum"));
}

#[test]
fn lyapunov_columns_when_requested() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "l.toml",
        &format!("{MINIMAL}[run]\niters = 50\nlyapunov = true\nsurrogate_iters = 500\n"),
    );
    let o = sapg(&["solve", "--config", &cfg, "--out", "o"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(tmp.path().join("o/trace_sapg.csv")).unwrap();
    let header = r.headers().unwrap().clone();
    assert_eq!(&header[10], "e_k");
    assert_eq!(&header[11], "etilde_k");
    assert_eq!(&header[12], "bound_rhs");
    assert!(stdout(&o).contains("Lemma 1 violations"));

    let strided = write(
        tmp.path(),
        "s.toml",
        &format!("{MINIMAL}[run]\niters = 50\nstride = 5\nlyapunov = true\n"),
    );
    assert_eq!(sapg(&["solve", "--config", &strided], tmp.path()).status.code(), Some(2));
}

#[test]
fn check_reports_seed_and_results() {
    let tmp = tempfile::tempdir().unwrap();
    for suite in ["grad", "project", "smoothing"] {
        let o = sapg(&["check", "--suite", suite, "--seed", "7"], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{suite}: {}", stdout(&o));
        let text = stdout(&o);
        assert!(text.starts_with(&format!("# check suite={suite} seed=7")), "{text}");
        assert!(text.contains("PASS"));
        assert!(!text.contains("FAIL"));
    }
}

#[test]
fn check_lyapunov_flags_paper_constant_on_truss() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", &format!("{MINIMAL}[run]\nsurrogate_iters = 4000\n"));
    let o = sapg(&["check", "--config", &cfg, "--suite", "lyapunov"], tmp.path());
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(1), "{text}");
    assert!(text.contains("PASS box quadratic: Lemma 1 inequality"));
    assert!(text.contains("FAIL truss: Lemma 1 inequality"));

    let cfg = write(tmp.path(), "v.toml", &format!("{MINIMAL}[sapg]\nl = 1e8\n[run]\nsurrogate_iters = 4000\n"));
    let o = sapg(&["check", "--config", &cfg, "--suite", "lyapunov"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
