//! Runs `conelab verify` twice with the default configuration and reports one
//! verdict per acceptance criterion.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};

fn verify(dir: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_conelab"))
        .args(["verify", "--seed", "0", "--output"])
        .arg(dir)
        .output()
        .expect("run conelab");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn main() -> ExitCode {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (code_a, stdout_a) = verify(a.path());
    let (code_b, _) = verify(b.path());

    let mut verdicts = BTreeMap::new();
    for line in stdout_a.lines().filter(|l| l.starts_with("criterion ")) {
        let mut words = line.split_whitespace().skip(1);
        let id: usize = words.next().unwrap().parse().unwrap();
        verdicts.insert(id, (words.next() == Some("PASS"), line.to_string()));
    }
    let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
    let identical = !fa.is_empty() && fa == fb;
    let internal = verdicts.get(&9).map(|v| v.0).unwrap_or(false);
    verdicts.insert(
        9,
        (
            identical && internal,
            format!(
                "criterion 9 {} determinism: {} CSV files, identical across runs: {identical}; in-run check: {internal}",
                if identical && internal { "PASS" } else { "FAIL" },
                fa.len()
            ),
        ),
    );

    let mut failed = Vec::new();
    for id in 1..=9 {
        match verdicts.get(&id) {
            Some((pass, line)) => {
                println!("{line}");
                if !pass {
                    failed.push(id);
                }
            }
            None => {
                println!("criterion {id} FAIL: no verdict reported");
                failed.push(id);
            }
        }
    }
    if failed.is_empty() && (code_a, code_b) == (0, 0) {
        println!("acceptance: all 9 criteria PASS");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}; exit codes {code_a}, {code_b}");
        ExitCode::FAILURE
    }
}
