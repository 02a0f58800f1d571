use std::collections::BTreeSet;
use std::process::Command;

use clap::CommandFactory;
use metahmm_cli::{Cli, FLAG_REGISTRY};

const BUILTIN: &[&str] = &["help", "version"];

fn leaf_commands(cmd: &clap::Command, prefix: &str, out: &mut Vec<(String, clap::Command)>) {
    for sub in cmd.get_subcommands().filter(|s| s.get_name() != "help") {
        let name = if prefix.is_empty() { sub.get_name().to_string() } else { format!("{prefix} {}", sub.get_name()) };
        if sub.has_subcommands() {
            leaf_commands(sub, &name, out);
        } else {
            out.push((name, sub.clone()));
        }
    }
}

fn registry(name: &str) -> BTreeSet<String> {
    let (_, flags) = FLAG_REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("subcommand '{name}' missing from the flag registry"));
    flags.iter().map(|f| f.to_string()).collect()
}

fn help_text(name: &str) -> String {
    let mut args: Vec<&str> = name.split(' ').collect();
    args.push("--help");
    let out = Command::new(env!("CARGO_BIN_EXE_metahmm")).args(&args).output().unwrap();
    assert!(out.status.success(), "{name} --help failed");
    String::from_utf8(out.stdout).unwrap()
}

fn flags_in(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
        .filter_map(|w| w.strip_prefix("--"))
        .filter(|w| !w.is_empty() && !BUILTIN.contains(w))
        .map(str::to_string)
        .collect()
}

#[test]
fn registry_matches_clap_definitions() {
    let mut root = Cli::command();
    root.build();
    let mut leaves = Vec::new();
    leaf_commands(&root, "", &mut leaves);
    let names: BTreeSet<&str> = leaves.iter().map(|(n, _)| n.as_str()).collect();
    let registered: BTreeSet<&str> = FLAG_REGISTRY.iter().map(|(n, _)| *n).collect();
    assert_eq!(names, registered);

    for (name, cmd) in &leaves {
        let defined: BTreeSet<String> = cmd
            .get_arguments()
            .filter_map(|a| a.get_long())
            .filter(|l| !BUILTIN.contains(l))
            .map(str::to_string)
            .collect();
        assert_eq!(defined, registry(name), "flags of '{name}'");
    }
}

#[test]
fn help_text_lists_exactly_the_registered_flags() {
    for (name, _) in FLAG_REGISTRY {
        let text = help_text(name);
        assert_eq!(flags_in(&text), registry(name), "help of '{name}':\n{text}");
    }
}

#[test]
fn every_flag_has_a_description() {
    let mut root = Cli::command();
    root.build();
    let mut leaves = Vec::new();
    leaf_commands(&root, "", &mut leaves);
    for (name, cmd) in &leaves {
        for arg in cmd.get_arguments() {
            if arg.get_long().is_some() {
                assert!(arg.get_help().is_some(), "{name} --{} has no help", arg.get_long().unwrap());
            }
        }
    }
}

#[test]
fn workers_default_comes_from_environment() {
    let text = Command::new(env!("CARGO_BIN_EXE_metahmm"))
        .args(["env", "size", "--help"])
        .env("METAHMM_WORKERS", "3")
        .output()
        .unwrap();
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.contains("METAHMM_WORKERS"), "{text}");
}
