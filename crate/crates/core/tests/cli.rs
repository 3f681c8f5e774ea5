use std::path::Path;
use std::process::Command;

use sweepstakes::experiment::{read_csv, EstimateRecord, ExactRecord, ScalingRecord};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sweepstakes"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn exact_sfs_kingman_four() {
    let (code, stdout, _) = run(&["exact-sfs", "--set", "model=kingman", "--set", "n=4"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "i,E_Li,phi_i");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,2.0,0.5454545454545"));
}

#[test]
fn rates_dump_has_header_and_pair_rate() {
    let (code, stdout, _) = run(&["rates", "--set", "model=delta0-pd", "--set", "alpha=0.3", "--set", "n=5"]);
    assert_eq!(code, 0);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("b,config,total_rate"));
    assert_eq!(lines.next(), Some("2,2,1.0"));
    assert_eq!(stdout.lines().filter(|l| l.starts_with("5,")).count(), 6);
}

#[test]
fn simulation_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<_> = ["1", "1", "4"]
        .iter()
        .enumerate()
        .map(|(k, threads)| {
            let path = dir.path().join(format!("s{k}.csv"));
            let (code, _, err) = run(&[
                "sim-ancestral",
                "--set",
                "n=5",
                "--set",
                "N=80",
                "--set",
                "alpha=1.5",
                "--set",
                "zeta=sqrtN",
                "--reps",
                "300",
                "--seed",
                "17",
                "--threads",
                threads,
                "--out",
                path.to_str().unwrap(),
            ]);
            assert_eq!(code, 0, "{err}");
            std::fs::read(path).unwrap()
        })
        .collect();
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn config_file_with_overrides_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("k.conf");
    std::fs::write(&cfg, "# Kingman\nmodel = kingman\nn = 6\nreps = 2000\nestimator = ratio-of-means\n").unwrap();
    let sim = dir.path().join("sim.csv");
    let exact = dir.path().join("exact.csv");
    let cmp = dir.path().join("cmp.csv");
    let c = cfg.to_str().unwrap();
    assert_eq!(run(&["sim-coalescent", "--config", c, "--out", sim.to_str().unwrap()]).0, 0);
    assert_eq!(run(&["exact-sfs", "--config", c, "--out", exact.to_str().unwrap()]).0, 0);
    let rows: Vec<EstimateRecord> = read_csv(&sim).unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.reps == 2000));
    let ex: Vec<ExactRecord> = read_csv(&exact).unwrap();
    assert_eq!(ex.len(), 5);
    let (code, _, _) = run(&["compare", sim.to_str().unwrap(), exact.to_str().unwrap(), "--out", cmp.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&cmp).unwrap();
    assert!(text.starts_with("i,mean_a,stderr_a,mean_b,stderr_b,diff,z\n"));
}

#[test]
fn cn_scaling_one_row_per_population_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cn.csv");
    let (code, _, err) = run(&[
        "cn-scaling",
        "--set",
        "N_list=30,60,90",
        "--set",
        "zeta=fixed:1",
        "--set",
        "regime=fixed",
        "--reps",
        "1000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let rows: Vec<ScalingRecord> = read_csv(&out).unwrap();
    assert_eq!(rows.iter().map(|r| r.pop_size).collect::<Vec<_>>(), [30, 60, 90]);
    assert!(rows.iter().all(|r| r.c_hat == 0.0));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["rates", "--set", "nonsense=1"]).0, 2);
    assert_eq!(run(&["sim-coalescent", "--reps", "0"]).0, 2);
    assert_eq!(run(&["exact-sfs", "--set", "n=101"]).0, 2);
    assert_eq!(run(&["rates", "--set", "alpha=2.5"]).0, 2);
    let (code, _, err) = run(&[
        "sim-quenched",
        "--set",
        "n=3",
        "--set",
        "N=20",
        "--set",
        "zeta=fixed:1",
        "--set",
        "regime=fixed",
        "--set",
        "max_generations=20",
        "--reps",
        "4",
    ]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("aborted"));
    assert!(!Path::new("nonexistent").exists());
}
