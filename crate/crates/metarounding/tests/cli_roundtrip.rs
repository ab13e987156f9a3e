//! End-to-end checks of the command layer: files written by one command
//! feed the next, reruns replay byte-for-byte modulo wall-clock columns,
//! and the `meta` binary maps outcomes to its documented exit codes.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use metarounding::cli::{
    cmd_gen, cmd_online, cmd_solve, cmd_sweep, GenArgs, OnlineArgs, OnlineMode, ProjectionChoice,
    SolveArgs, SweepArgs,
};
use metarounding::SetCoverInstance;

const LEDGER_MS_COLUMN: usize = 7;
const SWEEP_MS_COLUMN: usize = 3;

fn write_instance(dir: &Path, instance: &SetCoverInstance) -> PathBuf {
    let path = dir.join("instance.json");
    let text = serde_json::to_string_pretty(instance).expect("serialize instance");
    fs::write(&path, text).expect("write instance");
    path
}

fn gen_args(m: usize, n: usize, density: f64, seed: u64, out: Option<PathBuf>) -> GenArgs {
    GenArgs {
        m,
        n,
        density,
        seed,
        out_path: out,
        force: false,
    }
}

fn solve_args(instance: &Path, epsilon: f64, seed: u64, dir: &Path, tag: &str) -> SolveArgs {
    SolveArgs {
        instance_path: instance.to_path_buf(),
        epsilon,
        eta: None,
        seed,
        trace_out: Some(dir.join(format!("trace-{tag}.csv"))),
        summary_out: Some(dir.join(format!("summary-{tag}.json"))),
        force: false,
    }
}

fn online_args(instance: &Path, t: usize, seed: u64, out: PathBuf) -> OnlineArgs {
    OnlineArgs {
        instance_path: instance.to_path_buf(),
        t,
        epsilon: 0.1,
        mode: OnlineMode::Metaround,
        seed,
        step0: None,
        projection: ProjectionChoice::Relaxed,
        losses: None,
        out,
        force: false,
    }
}

fn sweep_args(n_list: Vec<usize>, repeats: usize, seed: u64, out: PathBuf) -> SweepArgs {
    SweepArgs {
        m: 6,
        n_list,
        epsilon: 0.1,
        repeats,
        density: 0.3,
        seed,
        jobs: Some(2),
        out,
        force: false,
    }
}

#[test]
fn generated_instances_reload_identically() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = dir.path().join("instance.json");
    cmd_gen(&gen_args(8, 15, 0.3, 9, Some(out.clone()))).expect("gen");

    let text = fs::read_to_string(&out).expect("read back");
    let reloaded: SetCoverInstance = serde_json::from_str(&text).expect("parse");
    let direct = SetCoverInstance::generate(8, 15, 0.3, 9).expect("generate");
    assert_eq!(reloaded, direct, "file round trip must lose nothing");
}

#[test]
fn dense_one_element_instances_generate() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = dir.path().join("tiny.json");
    cmd_gen(&gen_args(1, 4, 0.999, 1, Some(out.clone()))).expect("gen");

    let instance: SetCoverInstance =
        serde_json::from_str(&fs::read_to_string(&out).expect("read")).expect("parse");
    instance.validate().expect("generated instances validate");
    assert_eq!(instance.m, 1);
    assert!(
        instance.coverage.iter().any(|&c| c == 1),
        "the lone element must be coverable"
    );
}

#[test]
fn solve_emits_consistent_certificate_and_trace() {
    let dir = tempfile::tempdir().expect("tempdir");
    let instance = write_instance(dir.path(), &common::triangle());
    let args = solve_args(&instance, 0.1, 4, dir.path(), "tri");
    let summary = cmd_solve(&args).expect("solve");

    assert!(summary.gap <= 0.05 + 1e-12, "gap {} too wide", summary.gap);
    assert!(
        summary.certified_value <= summary.certificate_bound + 1e-6,
        "certificate {} exceeds its bound {}",
        summary.certified_value,
        summary.certificate_bound
    );
    assert_eq!(summary.expectation.len(), 3);
    assert_eq!(summary.weights.len(), summary.columns.len());
    let mass: f64 = summary.weights.iter().sum();
    assert!((mass - 1.0).abs() <= 1e-9, "weights sum to {mass}");

    let trace = fs::read_to_string(args.trace_out.as_ref().unwrap()).expect("trace");
    let mut lines = trace.lines();
    assert_eq!(
        lines.next(),
        Some("k,eps_k,hstar,best_oracle,alpha_emp,ms"),
        "trace header changed"
    );
    assert_eq!(lines.count(), summary.iterations, "one trace row per round");
}

#[test]
fn looser_targets_never_need_more_rounds() {
    let dir = tempfile::tempdir().expect("tempdir");
    let instance = write_instance(dir.path(), &common::triangle());
    let loose = cmd_solve(&solve_args(&instance, 0.5, 4, dir.path(), "loose")).expect("solve");
    let tight = cmd_solve(&solve_args(&instance, 0.05, 4, dir.path(), "tight")).expect("solve");
    assert!(
        loose.iterations <= tight.iterations,
        "loose target took {} rounds, tight took {}",
        loose.iterations,
        tight.iterations
    );
}

#[test]
fn online_ledger_replays_modulo_timings() {
    let dir = tempfile::tempdir().expect("tempdir");
    let instance = write_instance(dir.path(), &common::triangle());
    let first_out = dir.path().join("first.csv");
    let second_out = dir.path().join("second.csv");
    cmd_online(&online_args(&instance, 10, 4, first_out.clone())).expect("first run");
    cmd_online(&online_args(&instance, 10, 4, second_out.clone())).expect("second run");

    let first = fs::read_to_string(&first_out).expect("first csv");
    let second = fs::read_to_string(&second_out).expect("second csv");
    assert_eq!(first.lines().count(), 11, "header plus one row per round");
    assert_eq!(
        common::mask_columns(&first, &[LEDGER_MS_COLUMN]),
        common::mask_columns(&second, &[LEDGER_MS_COLUMN]),
        "ledger reruns must agree outside the timing column"
    );
}

#[test]
fn sweep_reports_one_row_per_cell() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = dir.path().join("sweep.csv");
    let report = cmd_sweep(&sweep_args(vec![10], 1, 0, out.clone())).expect("sweep");
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.failures, 0);
    let text = fs::read_to_string(&out).expect("csv");
    assert_eq!(text.lines().count(), 2, "header plus the single cell");
    assert!(text.lines().nth(1).unwrap().ends_with(",ok"));
}

#[test]
fn sweep_replays_modulo_timings() {
    let dir = tempfile::tempdir().expect("tempdir");
    let first_out = dir.path().join("first.csv");
    let second_out = dir.path().join("second.csv");
    cmd_sweep(&sweep_args(vec![10, 20], 3, 11, first_out.clone())).expect("first sweep");
    cmd_sweep(&sweep_args(vec![10, 20], 3, 11, second_out.clone())).expect("second sweep");

    let first = fs::read_to_string(&first_out).expect("first csv");
    let second = fs::read_to_string(&second_out).expect("second csv");
    assert_eq!(first.lines().count(), 7, "header plus two sizes times three repeats");
    assert_eq!(
        common::mask_columns(&first, &[SWEEP_MS_COLUMN]),
        common::mask_columns(&second, &[SWEEP_MS_COLUMN]),
        "sweep reruns must agree outside the timing column"
    );
}

fn meta() -> Command {
    Command::new(env!("CARGO_BIN_EXE_meta"))
}

#[test]
fn binary_prints_help() {
    let output = meta().arg("--help").output().expect("run meta --help");
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    for subcommand in ["gen", "solve", "online", "sweep"] {
        assert!(text.contains(subcommand), "help omits `{subcommand}`");
    }
}

#[test]
fn binary_refuses_overwrites_without_force() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = dir.path().join("instance.json");
    fs::write(&out, "sentinel").expect("pre-existing file");

    let refused = meta()
        .args(["gen", "--m", "3", "--n", "5", "--out-path"])
        .arg(&out)
        .output()
        .expect("run gen");
    assert_eq!(refused.status.code(), Some(1), "overwrite must be refused");
    assert_eq!(fs::read_to_string(&out).expect("read"), "sentinel");

    let forced = meta()
        .args(["gen", "--m", "3", "--n", "5", "--force", "--out-path"])
        .arg(&out)
        .output()
        .expect("run gen --force");
    assert_eq!(forced.status.code(), Some(0));
    assert_ne!(fs::read_to_string(&out).expect("read"), "sentinel");
}

#[test]
fn binary_seed_env_fallback_matches_flag() {
    let by_flag = meta()
        .args(["gen", "--m", "5", "--n", "8", "--seed", "5"])
        .env_remove("META_SEED")
        .output()
        .expect("gen --seed 5");
    let by_env = meta()
        .args(["gen", "--m", "5", "--n", "8"])
        .env("META_SEED", "5")
        .output()
        .expect("gen with META_SEED=5");
    let default_seed = meta()
        .args(["gen", "--m", "5", "--n", "8"])
        .env_remove("META_SEED")
        .output()
        .expect("gen with default seed");

    assert!(by_flag.status.success());
    assert!(by_env.status.success());
    assert!(default_seed.status.success());
    assert_eq!(
        by_flag.stdout, by_env.stdout,
        "environment seed must act exactly like the flag"
    );
    assert_ne!(
        by_flag.stdout, default_seed.stdout,
        "seed 5 must not collide with the default"
    );
}

#[test]
fn binary_flags_failed_sweep_cells() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = dir.path().join("sweep.csv");
    let output = meta()
        .args(["sweep", "--n-list", "10,0", "--repeats", "1", "--out"])
        .arg(&out)
        .output()
        .expect("run sweep");
    assert_eq!(
        output.status.code(),
        Some(2),
        "failed cells must surface in the exit code"
    );
    let text = fs::read_to_string(&out).expect("sweep csv is still written");
    let bad_row = text
        .lines()
        .find(|line| line.starts_with("0,"))
        .expect("the n=0 cell has a row");
    assert!(!bad_row.ends_with(",ok"), "the n=0 cell cannot succeed");
}
