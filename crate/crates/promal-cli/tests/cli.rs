//! End-to-end tests of the `promal` binary: every subcommand, the exit-code
//! contract, and the STATUS trailer.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_promal"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn status_trailer(out: &Output) -> String {
    stderr_of(out)
        .lines()
        .rev()
        .find(|l| l.starts_with("STATUS:"))
        .unwrap_or_default()
        .to_string()
}

fn simulate_n(dir: &Path, count: &str, extra: &[&str]) -> Output {
    let out_dir = dir.to_str().unwrap();
    let mut args = vec![
        "simulate", "--n", "8", "--m", "10", "--N", count, "--seed", "5", "--out", out_dir,
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn simulate(dir: &Path, extra: &[&str]) -> Output {
    simulate_n(dir, "6", extra)
}

/// Success or converged-with-warnings; both write full results.
fn ok_or_warn(out: &Output) {
    assert!(
        matches!(out.status.code(), Some(0) | Some(2)),
        "unexpected exit {:?}: {}",
        out.status.code(),
        stderr_of(out)
    );
}

fn read_dir_recursive(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn simulate_is_deterministic_and_writes_truth() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(simulate(&a, &["--noise", "0.4"]).status.success());
    assert!(simulate(&b, &["--noise", "0.4"]).status.success());
    assert_eq!(read_dir_recursive(&a), read_dir_recursive(&b));

    let rotations: Vec<_> = std::fs::read_dir(a.join("truth/rotations"))
        .unwrap()
        .collect();
    assert_eq!(rotations.len(), 6);
}

#[test]
fn align_zero_noise_reaches_machine_zero() {
    let tmp = TempDir::new().unwrap();
    let ds = tmp.path().join("ds");
    assert!(simulate(&ds, &[]).status.success());
    let out = run(&[
        "align",
        ds.join("manifest.txt").to_str().unwrap(),
        "--method",
        "gpa",
        "--out",
        tmp.path().join("alig").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert_eq!(status_trailer(&out), "STATUS: ok");

    let history = std::fs::read_to_string(tmp.path().join("alig/objective_history.csv")).unwrap();
    let last = history.lines().last().unwrap();
    let objective: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!(objective < 1e-12, "final objective {objective}");
}

#[test]
fn opp_with_three_matrices_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let ds = tmp.path().join("ds");
    assert!(simulate_n(&ds, "3", &[]).status.success());
    let out = run(&[
        "align",
        ds.join("manifest.txt").to_str().unwrap(),
        "--method",
        "opp",
        "--out",
        tmp.path().join("alig").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("exactly 2"), "stderr: {err}");
    assert!(status_trailer(&out).starts_with("STATUS: error"));
}

#[test]
fn neutral_prior_matches_plain_solver_bitwise() {
    let tmp = TempDir::new().unwrap();
    let ds = tmp.path().join("ds");
    assert!(simulate(&ds, &["--noise", "0.3"]).status.success());
    let manifest = ds.join("manifest.txt");
    for (method, dir) in [("gpa", "a_gpa"), ("promises", "a_pro")] {
        let out = run(&[
            "align",
            manifest.to_str().unwrap(),
            "--method",
            method,
            "--k",
            "0",
            "--no-scaling",
            "--out",
            tmp.path().join(dir).to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    }
    for entry in std::fs::read_dir(tmp.path().join("a_gpa/rotations")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap();
        let a = std::fs::read(&path).unwrap();
        let b = std::fs::read(tmp.path().join("a_pro/rotations").join(name)).unwrap();
        assert_eq!(a, b, "rotation files differ for {name:?}");
    }
}

#[test]
fn residual_distances_of_identical_matrices_are_zero_and_compare_is_one() {
    let tmp = TempDir::new().unwrap();
    let ds = tmp.path().join("ds");
    // zero noise + identity scheme: all matrices identical
    assert!(simulate(&ds, &["--scheme", "identity"]).status.success());
    let alig = tmp.path().join("alig");
    assert!(run(&[
        "align",
        ds.join("manifest.txt").to_str().unwrap(),
        "--out",
        alig.to_str().unwrap(),
    ])
    .status
    .success());

    let dre = tmp.path().join("dre.csv");
    let out = run(&[
        "dist",
        alig.to_str().unwrap(),
        "--kind",
        "residual",
        "--out",
        dre.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&dre).unwrap();
    for line in text.lines().skip(1) {
        for field in line.split(',').skip(1) {
            let v: f64 = field.parse().unwrap();
            assert!(v.abs() < 1e-20, "nonzero residual {v}");
        }
    }

    // comparing a matrix against itself: correlation undefined only if all
    // values are equal, so compare raw distances instead
    let draw = tmp.path().join("draw.csv");
    assert!(run(&[
        "dist",
        ds.join("manifest.txt").to_str().unwrap(),
        "--kind",
        "raw",
        "--out",
        draw.to_str().unwrap(),
    ])
    .status
    .success());
    let ds2 = tmp.path().join("ds2");
    assert!(simulate(&ds2, &["--noise", "0.5"]).status.success());
    let alig2 = tmp.path().join("alig2");
    assert!(run(&[
        "align",
        ds2.join("manifest.txt").to_str().unwrap(),
        "--no-scaling",
        "--out",
        alig2.to_str().unwrap(),
    ])
    .status
    .success());
    let dre2 = tmp.path().join("dre2.csv");
    let first = run(&[
        "dist",
        alig2.to_str().unwrap(),
        "--kind",
        "residual",
        "--out",
        dre2.to_str().unwrap(),
    ]);
    assert!(first.status.success());
    let out = run(&[
        "dist",
        alig2.to_str().unwrap(),
        "--kind",
        "residual",
        "--out",
        tmp.path().join("dre2b.csv").to_str().unwrap(),
        "--compare",
        dre2.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = stdout_of(&out);
    assert!(
        stdout.contains("= 1.000000"),
        "self-correlation line missing: {stdout}"
    );
}

#[test]
fn mds_scan_is_monotone_and_svg_is_well_formed() {
    let tmp = TempDir::new().unwrap();
    let ds = tmp.path().join("ds");
    assert!(simulate_n(&ds, "9", &["--noise", "0.4"]).status.success());
    let alig = tmp.path().join("alig");
    ok_or_warn(&run(&[
        "align",
        ds.join("manifest.txt").to_str().unwrap(),
        "--no-scaling",
        "--out",
        alig.to_str().unwrap(),
    ]));
    let dro = tmp.path().join("dro.csv");
    assert!(run(&[
        "dist",
        alig.to_str().unwrap(),
        "--kind",
        "rotational",
        "--out",
        dro.to_str().unwrap(),
    ])
    .status
    .success());

    let prefix = tmp.path().join("mds/out");
    let out = run(&[
        "mds",
        dro.to_str().unwrap(),
        "--dims",
        "2",
        "--scan",
        "4",
        "--plot-dims",
        "1,2",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(
        out.status.code() == Some(0) || out.status.code() == Some(2),
        "stderr: {}",
        stderr_of(&out)
    );

    let scan = std::fs::read_to_string(tmp.path().join("mds/out.scan.csv")).unwrap();
    let stresses: Vec<f64> = scan
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(stresses.len(), 4);
    for w in stresses.windows(2) {
        assert!(w[1] <= w[0] + 1e-6, "scan not monotone: {stresses:?}");
    }

    let svg = std::fs::read_to_string(tmp.path().join("mds/out.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<circle").count(), 9);
    // every tag closes
    assert_eq!(svg.matches('<').count(), svg.matches('>').count());

    let embedding = std::fs::read_to_string(tmp.path().join("mds/out.embedding.csv")).unwrap();
    assert!(embedding.starts_with("label,dim1,dim2"));
    assert_eq!(embedding.lines().count(), 10);
}

#[test]
fn cluster_recovers_planted_groups() {
    let tmp = TempDir::new().unwrap();
    let ds = tmp.path().join("ds");
    let out = run(&[
        "simulate", "--n", "12", "--m", "16", "--N", "8",
        "--noise", "0.3", "--scheme", "grouped", "--groups", "4,4",
        "--jitter", "0.05", "--seed", "21",
        "--out", ds.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let alig = tmp.path().join("alig");
    ok_or_warn(&run(&[
        "align",
        ds.join("manifest.txt").to_str().unwrap(),
        "--method", "promises", "--k", "1", "--no-scaling",
        "--out", alig.to_str().unwrap(),
    ]));
    let dro = tmp.path().join("dro.csv");
    assert!(run(&[
        "dist", alig.to_str().unwrap(),
        "--kind", "rotational",
        "--out", dro.to_str().unwrap(),
    ])
    .status
    .success());
    let out = run(&[
        "cluster", dro.to_str().unwrap(),
        "--linkage", "average", "--k", "2",
        "--out", tmp.path().join("cl").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let text = std::fs::read_to_string(tmp.path().join("cl.clusters.csv")).unwrap();
    let mut assignment = Vec::new();
    for line in text.lines().skip(1) {
        let c: usize = line.split(',').nth(1).unwrap().parse().unwrap();
        assignment.push(c);
    }
    // labels m1..m4 were drawn from group 0, m5..m8 from group 1
    assert_eq!(assignment.len(), 8);
    assert!(assignment[..4].iter().all(|&c| c == assignment[0]));
    assert!(assignment[4..].iter().all(|&c| c == assignment[4]));
    assert_ne!(assignment[0], assignment[4]);

    // k=1 puts everything in one cluster
    let out = run(&[
        "cluster", dro.to_str().unwrap(),
        "--k", "1",
        "--out", tmp.path().join("cl1").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(tmp.path().join("cl1.clusters.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0")));
}

#[test]
fn unreadable_input_exits_one_with_path() {
    let out = run(&[
        "cluster",
        "/nonexistent/matrix.csv",
        "--k",
        "2",
        "--out",
        "/tmp/never",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("/nonexistent/matrix.csv"), "stderr: {err}");
    assert!(status_trailer(&out).starts_with("STATUS: error"));
}

#[test]
fn pipeline_runs_every_stage_from_one_config() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("run");
    let config = tmp.path().join("pipeline.conf");
    std::fs::write(
        &config,
        format!(
            "# desk-scale smoke pipeline\n\
             out = {}\n\
             seed = 3\n\
             n = 10\nm = 14\nN = 8\n\
             noise = 0.3\n\
             scheme = grouped\ngroups = 4,4\njitter = 0.05\n\
             method = promises\nk = 1\nscaling = false\n\
             dist_kind = rotational\n\
             mds_dims = 2\n\
             cluster_k = 2\n",
            out_dir.display()
        ),
    )
    .unwrap();
    let out = run(&["pipeline", config.to_str().unwrap()]);
    assert!(
        out.status.code() == Some(0) || out.status.code() == Some(2),
        "stderr: {}",
        stderr_of(&out)
    );
    for artifact in [
        "dataset/manifest.txt",
        "alignment/run.json",
        "dist_rotational.csv",
        "mds.embedding.csv",
        "mds.svg",
        "cluster.merges.csv",
        "cluster.clusters.csv",
    ] {
        assert!(
            out_dir.join(artifact).exists(),
            "missing pipeline artifact {artifact}"
        );
    }
}

#[test]
fn scale_and_translation_flags_reach_the_generator() {
    let tmp = TempDir::new().unwrap();
    let ds = tmp.path().join("ds");
    let out = simulate(&ds, &["--scales", "0.5,2.0", "--translation-sd", "1.0"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let scales = std::fs::read_to_string(ds.join("truth/scales.csv")).unwrap();
    let any_scaled = scales
        .lines()
        .skip(1)
        .any(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() != 1.0);
    assert!(any_scaled, "scales not drawn: {scales}");
    let translations = std::fs::read_to_string(ds.join("truth/translations.csv")).unwrap();
    let any_shifted = translations
        .lines()
        .skip(1)
        .any(|l| l.split(',').skip(1).any(|v| v.parse::<f64>().unwrap() != 0.0));
    assert!(any_shifted, "translations not drawn: {translations}");
}

#[test]
fn coordinates_in_the_manifest_activate_the_kernel_prior() {
    let tmp = TempDir::new().unwrap();
    let ds = tmp.path().join("ds");
    assert!(simulate(&ds, &["--noise", "0.2"]).status.success());
    // attach a coordinate table: one 3-D row per matrix column (m = 10)
    let mut coords = String::new();
    for i in 0..10 {
        coords.push_str(&format!("{}.0,{}.5,0.25\n", i, (i * 3) % 7));
    }
    std::fs::write(ds.join("coords.csv"), coords).unwrap();
    let manifest = std::fs::read_to_string(ds.join("manifest.txt")).unwrap();
    std::fs::write(
        ds.join("manifest.txt"),
        format!("coords coords.csv\n{manifest}"),
    )
    .unwrap();

    let alig = tmp.path().join("alig");
    let out = run(&[
        "align",
        ds.join("manifest.txt").to_str().unwrap(),
        "--method",
        "promises",
        "--k",
        "1",
        "--no-scaling",
        "--out",
        alig.to_str().unwrap(),
    ]);
    ok_or_warn(&out);
    let meta = std::fs::read_to_string(alig.join("run.json")).unwrap();
    assert!(
        meta.contains("similarity_gaussian"),
        "kernel prior not recorded: {meta}"
    );
    // no fallback warning about missing coordinates
    assert!(!stderr_of(&out).contains("identity location matrix"));
}

#[test]
fn thread_cap_flag_and_env_are_accepted() {
    let tmp = TempDir::new().unwrap();
    let ds = tmp.path().join("ds");
    let out = bin()
        .args(["simulate", "--n", "4", "--m", "5", "--N", "3", "--seed", "1", "--out"])
        .arg(&ds)
        .args(["--threads", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let ds2 = tmp.path().join("ds2");
    let out = bin()
        .args(["simulate", "--n", "4", "--m", "5", "--N", "3", "--seed", "1", "--out"])
        .arg(&ds2)
        .env("PROMAL_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert_eq!(read_dir_recursive(&ds), read_dir_recursive(&ds2));
}
