//! CLI smoke tests: exit codes, file formats, config plumbing.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sorani-speech"))
}

#[test]
fn g2p_on_one_word_file_emits_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("words.txt");
    let output = dir.path().join("prons.tsv");
    fs::write(&input, "دل\n").unwrap();
    let status = bin()
        .args(["g2p", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(&output)
        .status()
        .unwrap();
    assert!(status.success());
    let rendered = fs::read_to_string(&output).unwrap();
    assert_eq!(rendered, "دل\td ix l\n");
    // sidecar metadata carries version + config hash
    let meta = fs::read_to_string(dir.path().join("prons.tsv.meta")).unwrap();
    assert!(meta.starts_with("# sorani-speech"));
}

#[test]
fn usage_error_exits_2() {
    let status = bin().args(["g2p", "--no-such-flag"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bin().args(["frobnicate"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn data_error_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("manifest.tsv");
    let output = dir.path().join("data");
    fs::write(&input, "/audio/x.wav\tX00123045\tدڵ\n").unwrap();
    let status = bin()
        .args(["kaldi-prep", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(&output)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    // missing input file is also a data error
    let status = bin()
        .args(["g2p", "--input"])
        .arg(dir.path().join("absent.txt"))
        .arg("--output")
        .arg(dir.path().join("out.tsv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn normalize_standardizes_and_keeps_punctuation() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    let output = dir.path().join("out.txt");
    // Arabic kaf + spelling variant ووشە, with a question mark
    fs::write(&input, "كورد ووشە؟\n").unwrap();
    let status = bin()
        .args(["normalize", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(&output)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(fs::read_to_string(&output).unwrap(), "کورد وشە؟\n");
}

#[test]
fn config_file_and_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    let input = dir.path().join("words.txt");
    fs::write(&config, "merge_ix=true\n").unwrap();
    fs::write(&input, "دل\n").unwrap();

    let with_config = dir.path().join("a.tsv");
    let status = bin()
        .args(["--config"])
        .arg(&config)
        .args(["g2p", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(&with_config)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(fs::read_to_string(&with_config).unwrap(), "دل\td i l\n");

    // environment variable overrides the file value
    let with_env = dir.path().join("b.tsv");
    let status = bin()
        .env("SORANI_MERGE_IX", "false")
        .args(["--config"])
        .arg(&config)
        .args(["g2p", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(&with_env)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(fs::read_to_string(&with_env).unwrap(), "دل\td ix l\n");
}

#[test]
fn score_reports_pooled_rates() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("scored.tsv");
    let output = dir.path().join("report.tsv");
    fs::write(
        &input,
        "u1\tSport\tمن بۆ شار دەچم\tمن بۆ شار دەچم\nu2\tSport\tئاو سارد بوو\tئاو گەرم بوو\n",
    )
    .unwrap();
    let status = bin()
        .args(["score", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(&output)
        .status()
        .unwrap();
    assert!(status.success());
    let report = fs::read_to_string(&output).unwrap();
    // 1 substitution over 7 reference words, pooled: 14.3% WER
    let sport = report
        .lines()
        .find(|l| l.starts_with("Sport\t"))
        .expect("sport row");
    assert!(sport.starts_with("Sport\t2\t14.3\t"), "row: {sport}");
}
