use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn anvil_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anvil")).current_dir(dir).args(args).output().expect("run anvil")
}

fn anvil(args: &[&str]) -> Output {
    anvil_in(&corpus(), args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_reports_child_send() {
    let o = anvil(&["check", "Top.anvil"]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.starts_with("Value not live long enough in message send!\nTop.anvil:29:4:\n"), "{err}");
    assert!(stdout(&o).is_empty());
}

#[test]
fn check_accepts_safe_programs() {
    for f in ["top_safe.anvil", "counter.anvil", "mem.anvil"] {
        let o = anvil(&["check", f]);
        assert_eq!(code(&o), 0, "{f}: {}", stderr(&o));
    }
}

#[test]
fn build_writes_verilog() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.sv");
    let out_s = out.to_str().unwrap();
    let o = anvil(&["build", "top_safe.anvil", "--top", "Top_Safe", "-o", out_s]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let first = std::fs::read(&out).unwrap();
    assert!(first.starts_with(b"// Generated by anvil "));
    assert_eq!(anvil(&["build", "top_safe.anvil", "--top", "Top_Safe", "-o", out_s]).status.code(), Some(0));
    assert_eq!(std::fs::read(&out).unwrap(), first);

    // Standard output carries the same text.
    let o = anvil(&["build", "top_safe.anvil", "--top", "Top_Safe"]);
    assert_eq!(o.stdout, first);
}

#[test]
fn build_refuses_unsafe_programs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.sv");
    let o = anvil(&["build", "top_unsafe.anvil", "--top", "Top_Unsafe", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["build", "top_safe.anvil"],
        vec!["build", "top_safe.anvil", "--top", "Nope"],
        vec!["check"],
        vec!["check", "missing.anvil"],
        vec!["check", "Top.anvil", "--iters", "1"],
        vec!["build", "top_safe.anvil", "--top", "Top_Safe", "--opt-level", "5"],
        vec!["graph", "Top.anvil", "--dump-graph", "middle"],
        vec!["frobnicate"],
        vec!["verify", "Top.anvil", "--composed", "--top", "Nope"],
    ] {
        let o = anvil(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn version_flag() {
    let o = anvil(&["--version"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), format!("anvil {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn verify_finds_witness() {
    let o = anvil(&["verify", "top_unsafe.anvil", "--slack", "3", "--iters", "2"]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.starts_with("unsafe log in Top_Unsafe"), "{err}");
    assert!(err.contains("address") && err.contains("cycle 0:"));

    let o = anvil(&["verify", "top_safe.anvil", "--slack", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("are safe"));
}

#[test]
fn verify_json_report() {
    let o = anvil(&["verify", "encrypt.anvil", "--format", "json"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["mode"], "local");
    assert_eq!(v["bounds"]["slack"], 3);
    assert!(v["witness"]["scope"].as_str().unwrap().starts_with("Encrypt"));
}

#[test]
fn json_diagnostics() {
    let o = anvil(&["check", "encrypt.anvil", "--format", "json"]);
    assert_eq!(code(&o), 1);
    assert!(o.stderr.is_empty());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], "anvil-diagnostics/1");
    let ds = v["diagnostics"].as_array().unwrap();
    assert!(!ds.is_empty());
    for d in ds {
        assert_eq!(d["severity"], "error");
        assert_eq!(d["span"]["file"], "encrypt.anvil");
        assert!(d["span"]["line_start"].as_u64().unwrap() >= 1);
    }
    let codes: Vec<&str> = ds.iter().map(|d| d["code"].as_str().unwrap()).collect();
    assert!(codes.contains(&"reg-mutation") && codes.contains(&"send-overlap"));

    let o = anvil(&["check", "counter.anvil", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["diagnostics"].as_array().unwrap().len(), 0);
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec!["check", "encrypt.anvil"],
        vec!["check", "Top.anvil", "--format", "json"],
        vec!["graph", "Top.anvil"],
        vec!["verify", "top_unsafe.anvil"],
    ] {
        let (a, b) = (anvil(&args), anvil(&args));
        assert_eq!((a.stdout, a.stderr), (b.stdout, b.stderr), "{args:?}");
    }
}

#[test]
fn graph_before_and_after_optimization() {
    let count = |args: &[&str]| {
        let o = anvil(args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        stdout(&o).lines().filter(|l| l.trim_start().starts_with('e') && l.contains("[label=\"e")).count()
    };
    let pre = count(&["graph", "encrypt.anvil", "--dump-graph", "pre"]);
    let post = count(&["graph", "encrypt.anvil", "--dump-graph", "post"]);
    let off = count(&["graph", "encrypt.anvil", "--opt-level", "0"]);
    assert!(post < pre, "{post} vs {pre}");
    assert_eq!(off, pre);

    let o = anvil(&["graph", "Top.anvil", "--top", "child", "--emit", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let procs: Vec<&str> = v["graphs"].as_array().unwrap().iter().map(|g| g["process"].as_str().unwrap()).collect();
    assert_eq!(procs, ["grandchild", "grandchild", "child"]);
    assert_eq!(v["graphs"][0]["graph"]["schema"], "anvil-event-graph/1");
}

#[test]
fn files_share_one_namespace() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("chan.anvil"), "chan ch { right d : (logic[8]@#1) }\n").unwrap();
    std::fs::write(
        dir.path().join("procs.anvil"),
        "proc Src(ep : left ch) { loop { send ep.d(8'd1) >> cycle 1 } }\n\
         proc Top() { chan a -- b : ch; spawn Src(a); loop { let x = recv b.d >> cycle 1 } }\n",
    )
    .unwrap();
    let o = anvil_in(dir.path(), &["check", "chan.anvil", "procs.anvil"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = anvil_in(dir.path(), &["build", "chan.anvil", "procs.anvil", "--top", "Top"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("module Src (") && stdout(&o).contains("module Top ("));

    // Alone, the second file names an unknown channel.
    let o = anvil_in(dir.path(), &["check", "procs.anvil"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("procs.anvil:1:"), "{}", stderr(&o));
}

#[test]
fn syntax_errors_are_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.anvil"), "proc P( {\n").unwrap();
    let o = anvil_in(dir.path(), &["check", "bad.anvil"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bad.anvil:1:"), "{}", stderr(&o));
}
