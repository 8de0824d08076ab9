//! Acceptance: every command is reproducible byte for byte across runs and
//! worker counts. Prints one `PASS`/`FAIL` line.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

fn run(args: &[&str], threads: Option<usize>) -> Vec<u8> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_liestat"));
    cmd.current_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures"));
    if let Some(t) = threads {
        cmd.arg("--threads").arg(t.to_string());
    }
    let out = cmd.args(args).output().expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

#[test]
fn criterion_10_determinism() {
    let start = Instant::now();
    let commands: Vec<Vec<&str>> = vec![
        vec!["mean", "se3_a.json"],
        vec!["test", "se3_a.json", "se3_b.json", "--permutations", "2000", "--seed", "17"],
        vec!["test", "se3_a.json", "se3_b.json", "--permutations", "2000", "--seed", "17", "--statistic", "hellinger"],
        vec!["localtest", "gl3x5_a.json", "gl3x5_b.json", "--permutations", "1000", "--seed", "17"],
        vec!["globaltest", "gl3x5_a.json", "gl3x5_b.json", "--permutations", "1000", "--seed", "17"],
        vec!["synth", "--group", "power:glplus:3:5", "--cov", "cov_0.01.json", "--n", "20", "--seed", "17"],
        vec!["synth", "--group", "se3", "--cov", "cov_0.01.json", "--n", "20", "--seed", "17", "--jsonl"],
        vec!["pose", "octa.off", "octa_rot.off", "octa.off", "octa_stretch.off"],
        vec!["diffcoords", "octa.off", "octa.off", "octa_rot.off", "octa_stretch.off", "--align"],
    ];
    let mut mismatches = Vec::new();
    for args in &commands {
        let reference = run(args, None);
        for threads in [Some(1), Some(4), None] {
            if run(args, threads) != reference {
                mismatches.push(format!("{} with {threads:?} threads", args[0]));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = mismatches.is_empty();
    let detail = if pass {
        format!("{} commands identical over 4 runs with 1, 4 and default workers, {elapsed:.1} s", commands.len())
    } else {
        format!("differences: {}", mismatches.join(", "))
    };
    // written past the harness's output capture
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stdout().lock(), "criterion 10 {verdict} determinism: {detail}");
    assert!(pass);
}
