//! End-to-end checks of the command-line surface: encode/decode/verify
//! round trips, merge equivalence, exit codes on bad input and budget
//! violations, and the oracle report format.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cutsketch")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn cutsketch")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture {
            dir: tempfile::tempdir().expect("tempdir"),
        }
    }

    fn write(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn config_toml() -> String {
    let seed = "07".repeat(32);
    format!(
        r#"
n = 6
m_max = 16
r_max = 3
eps = "1/2"
master_seed = "{seed}"
rep_cap = 32
"#
    )
}

fn stream_text() -> &'static str {
    // two triangles joined by a bridge, with one insert/delete churn pair
    "n 6 r 3\n\
     + 0,1\n+ 1,2\n+ 0,2\n+ 3,4\n+ 4,5\n+ 3,5\n+ 2,3\n\
     + 0,1,2\n- 0,1,2\n"
}

fn hypergraph_text() -> &'static str {
    "n 6 r 3\n+ 0,1\n+ 1,2\n+ 0,2\n+ 3,4\n+ 4,5\n+ 3,5\n+ 2,3\n"
}

fn str_path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn encode_decode_verify_roundtrip() {
    let fx = Fixture::new();
    let cfg = fx.write("cfg.toml", &config_toml());
    let stream = fx.write("stream.txt", stream_text());
    let hyper = fx.write("h.txt", hypergraph_text());
    let bank = fx.path("bank.bin");
    let sp = fx.path("sp.txt");

    let out = run(&[
        "encode",
        "--config",
        str_path(&cfg),
        "--stream",
        str_path(&stream),
        "--out",
        str_path(&bank),
    ]);
    assert!(out.status.success(), "{out:?}");

    let out = run(&[
        "decode",
        "--config",
        str_path(&cfg),
        "--bank",
        str_path(&bank),
        "--out",
        str_path(&sp),
    ]);
    assert!(out.status.success(), "{out:?}");

    let out = run(&[
        "verify",
        "--hypergraph",
        str_path(&hyper),
        "--sparsifier",
        str_path(&sp),
        "--eps",
        "1/2",
        "--kcuts",
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("ok true"));

    // exact verification also passes: stage-0 recovery is exact here
    let out = run(&[
        "verify",
        "--hypergraph",
        str_path(&hyper),
        "--sparsifier",
        str_path(&sp),
        "--eps",
        "0/1",
    ]);
    assert!(out.status.success(), "{out:?}");
}

#[test]
fn merge_of_split_streams_matches_whole_encode() {
    let fx = Fixture::new();
    let cfg = fx.write("cfg.toml", &config_toml());
    let s1 = fx.write("s1.txt", "n 6 r 3\n+ 0,1\n+ 1,2\n+ 0,2\n");
    let s2 = fx.write("s2.txt", "n 6 r 3\n+ 3,4\n+ 4,5\n+ 3,5\n+ 2,3\n");
    let whole = fx.write(
        "whole.txt",
        "n 6 r 3\n+ 0,1\n+ 1,2\n+ 0,2\n+ 3,4\n+ 4,5\n+ 3,5\n+ 2,3\n",
    );
    for (stream, out) in [(&s1, "b1.bin"), (&s2, "b2.bin"), (&whole, "bw.bin")] {
        let out_path = fx.path(out);
        let res = run(&[
            "encode",
            "--config",
            str_path(&cfg),
            "--stream",
            str_path(stream),
            "--out",
            str_path(&out_path),
        ]);
        assert!(res.status.success(), "{res:?}");
    }
    let merged = fx.path("merged.bin");
    let res = run(&[
        "merge",
        "--config",
        str_path(&cfg),
        "--out",
        str_path(&merged),
        str_path(&fx.path("b1.bin")),
        str_path(&fx.path("b2.bin")),
    ]);
    assert!(res.status.success(), "{res:?}");
    let merged_bytes = std::fs::read(&merged).unwrap();
    let whole_bytes = std::fs::read(fx.path("bw.bin")).unwrap();
    assert_eq!(merged_bytes, whole_bytes);
}

#[test]
fn verify_rejects_tampered_sparsifier_at_eps_zero() {
    let fx = Fixture::new();
    let cfg = fx.write("cfg.toml", &config_toml());
    let stream = fx.write("stream.txt", stream_text());
    let hyper = fx.write("h.txt", hypergraph_text());
    let bank = fx.path("bank.bin");
    let sp = fx.path("sp.txt");
    run(&[
        "encode",
        "--config",
        str_path(&cfg),
        "--stream",
        str_path(&stream),
        "--out",
        str_path(&bank),
    ]);
    run(&[
        "decode",
        "--config",
        str_path(&cfg),
        "--bank",
        str_path(&bank),
        "--out",
        str_path(&sp),
    ]);
    // drop one edge line from the sparsifier
    let text = std::fs::read_to_string(&sp).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let e_idx = lines.iter().rposition(|l| l.starts_with("e ")).unwrap();
    lines.remove(e_idx);
    let tampered = fx.write("tampered.txt", &(lines.join("\n") + "\n"));
    let out = run(&[
        "verify",
        "--hypergraph",
        str_path(&hyper),
        "--sparsifier",
        str_path(&tampered),
        "--eps",
        "0/1",
        "--kcuts",
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    assert!(stdout(&out).contains("ok false"));
}

#[test]
fn oracle_reports_phi_and_strengths() {
    let fx = Fixture::new();
    let tri = fx.write("tri.txt", "n 3 r 2\n+ 0,1\n+ 1,2\n+ 0,2\n");
    let out = run(&["oracle", "--hypergraph", str_path(&tri), "--census", "2"]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("phi 3/2"), "{text}");
    assert!(text.contains("witness {0} {1} {2}"), "{text}");
    assert!(text.contains("strength 0,1 3/2"), "{text}");
    assert!(text.contains("census t 2 count 4"), "{text}");
}

#[test]
fn malformed_inputs_exit_2_with_line_diagnostics() {
    let fx = Fixture::new();
    let cfg = fx.write("cfg.toml", &config_toml());
    let bad = fx.write("bad.txt", "n 6 r 3\n+ 0,0\n");
    let out = run(&[
        "encode",
        "--config",
        str_path(&cfg),
        "--stream",
        str_path(&bad),
        "--out",
        str_path(&fx.path("x.bin")),
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn mpc_sim_runs_and_budget_violations_exit_3() {
    let fx = Fixture::new();
    let cfg = fx.write("cfg.toml", &config_toml());
    let stream = fx.write("stream.txt", stream_text());
    let sp = fx.path("mpc-sp.txt");
    let out = run(&[
        "mpc-sim",
        "--config",
        str_path(&cfg),
        "--stream",
        str_path(&stream),
        "--shards",
        "3",
        "--budget",
        "1073741824",
        "--out",
        str_path(&sp),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("rounds 2"), "{}", stdout(&out));

    let out = run(&[
        "mpc-sim",
        "--config",
        str_path(&cfg),
        "--stream",
        str_path(&stream),
        "--shards",
        "3",
        "--budget",
        "128",
        "--out",
        str_path(&sp),
    ]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn selftest_quick_passes() {
    let out = run(&["selftest", "--quick"]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("PASS linearity"));
}
