#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub const CONFIG48: &str = r#"
hidden_states = 4
symbols = 6
base_cycles = 2
base_step_sizes = 1
base_directions = 2
families = 1
groups_per_family = 2
family_directions = 1
family_step_sizes = 1
emission_groups = 1
emissions_per_group = 3
shifts = 2
emission_smoothing = 0.1
seed = 0
"#;

pub fn metahmm(dir: &Path, args: &[&str], workers: usize) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metahmm"))
        .current_dir(dir)
        .args(args)
        .env("METAHMM_WORKERS", workers.to_string())
        .output()
        .expect("binary runs")
}

/// Runs the binary and panics with its stderr unless it succeeds.
pub fn ok(dir: &Path, args: &[&str], workers: usize) -> String {
    let out = metahmm(dir, args, workers);
    assert!(
        out.status.success(),
        "metahmm {} failed ({:?}): {}",
        args.join(" "),
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every pipeline stage on the given config; returns the produced files.
pub fn full_pipeline(dir: &Path, config: &[&str], workers: usize) -> Vec<(&'static str, Vec<u8>)> {
    let run = |args: &[&str]| {
        let mut all: Vec<&str> = config.to_vec();
        all.extend_from_slice(args);
        ok(dir, &all, workers)
    };
    let dump = run(&["env", "dump"]);
    run(&["split", "--holdout", "8", "--sample-seed", "3", "--out", "split.json"]);
    run(&[
        "gen",
        "--subset",
        "train",
        "--split",
        "split.json",
        "--total",
        "30",
        "--length",
        "25",
        "--out",
        "train.jsonl",
    ]);
    run(&[
        "gen",
        "--subset",
        "validation",
        "--split",
        "split.json",
        "--per-task",
        "2",
        "--lengths",
        "uniform",
        "--length",
        "40",
        "--sample-seed",
        "1",
        "--out",
        "val.jsonl",
    ]);
    run(&["oracle", "--sequences", "val.jsonl", "--out", "oracle.bin", "--entropy", "entropy.csv"]);
    run(&[
        "oracle",
        "--sequences",
        "val.jsonl",
        "--subset",
        "validation",
        "--split",
        "split.json",
        "--format",
        "jsonl",
        "--out",
        "oracle-val.jsonl",
    ]);
    run(&["mc", "--sequences", "val.jsonl", "--samples", "5", "--sample-seed", "2", "--out", "mc.bin"]);
    run(&["baseline", "--train", "train.jsonl", "--sequences", "val.jsonl", "--out", "unigram.bin"]);
    run(&[
        "eval",
        "--predictions",
        "mc.bin",
        "--reference",
        "oracle.bin",
        "--out",
        "mc.csv",
        "--summary",
        "mc.json",
        "--window",
        "5..30",
    ]);
    run(&[
        "eval",
        "--predictions",
        "unigram.bin",
        "--reference",
        "oracle.bin",
        "--out",
        "unigram.csv",
        "--summary",
        "unigram.json",
    ]);
    run(&["plot", "--input", "mc=mc.csv", "--input", "unigram.csv", "--title", "divergence", "--out", "div.svg"]);
    run(&["plot", "--input", "entropy.csv", "--out", "entropy.png"]);

    let mut files = vec![("env-dump", dump.into_bytes())];
    for name in [
        "split.json",
        "train.jsonl",
        "train.jsonl.manifest.json",
        "val.jsonl",
        "val.jsonl.manifest.json",
        "oracle.bin",
        "oracle-val.jsonl",
        "entropy.csv",
        "mc.bin",
        "unigram.bin",
        "mc.csv",
        "mc.json",
        "unigram.csv",
        "unigram.json",
        "div.svg",
        "entropy.png",
    ] {
        files.push((name, read(dir, name)));
    }
    files
}
