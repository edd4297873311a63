use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/toy")
}

fn tagflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tagflow"))
        .args(args)
        .env_remove("LLM_ENDPOINT")
        .output()
        .unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

/// Config file in `dir` for the toy graph with extra TOML appended.
fn config_with(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("tagflow.toml");
    let body = format!(
        "seed = 7\n[[graphs]]\nid = \"toy\"\ndomain = \"computer-science\"\ndir = \"{}\"\n[gnn]\nlayers = 2\nlayer_budget_tokens = [60, 30]\n{extra}",
        toy_dir().display()
    );
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn full_run_then_cached_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy_dir().join("toy.toml");
    let out = dir.path().to_str().unwrap();
    let run = tagflow(&["run", "--config", config.to_str().unwrap(), "--out", out, "--backend", "mock"]);
    assert!(run.status.success(), "{}", text(&run));
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("vocabulary: 12 entries"), "{stdout}");
    assert!(stdout.contains("report -> "), "{stdout}");
    let reports: Vec<_> = std::fs::read_dir(dir.path().join("reports")).unwrap().collect();
    assert_eq!(reports.len(), 2, "json and text report");

    let again = tagflow(&["understand", "--config", config.to_str().unwrap(), "--out", out]);
    assert_eq!(again.status.code(), Some(0), "{}", text(&again));
    assert!(String::from_utf8_lossy(&again.stdout).contains("new backend calls: 0"));
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = tagflow(&["understand", "--config", dir.path().join("none.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1), "{}", text(&missing));

    let config = config_with(dir.path(), "");
    let decode = tagflow(&["decode", "--config", config.to_str().unwrap()]);
    assert_eq!(decode.status.code(), Some(1));
    assert!(text(&decode).contains("run `tagflow vocab` first"), "{}", text(&decode));

    let remote = tagflow(&["understand", "--config", config.to_str().unwrap(), "--backend", "remote"]);
    assert_eq!(remote.status.code(), Some(1));
    assert!(text(&remote).contains("LLM_ENDPOINT"));
}

#[test]
fn exhausted_budget_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_with(dir.path(), "[backend]\ntoken_budget = 150\n");
    let o = tagflow(&["understand", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", text(&o));
    assert!(dir.path().join("out/failures/toy.json").exists());
}

/// Serves every request with `status` and `body` until the test ends.
fn serve(status: &'static str, body: &'static str) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut buf = vec![0; length];
                reader.read_exact(&mut buf).unwrap();
                let mut stream = stream;
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
            });
        }
    });
    url
}

fn remote_understand(dir: &Path, url: &str) -> Output {
    let config = config_with(dir, "[backend]\nkind = \"remote\"\nmax_attempts = 1\n");
    Command::new(env!("CARGO_BIN_EXE_tagflow"))
        .args(["understand", "--config", config.to_str().unwrap(), "--max-in-flight", "2"])
        .env("LLM_ENDPOINT", url)
        .env_remove("LLM_API_KEY")
        .env("LLM_MODEL", "test-model")
        .output()
        .unwrap()
}

#[test]
fn remote_backend_round_trip() {
    let url = serve("200 OK", r#"{"choices":[{"message":{"content":"graph node summary"}}]}"#);
    let dir = tempfile::tempdir().unwrap();
    let o = remote_understand(dir.path(), &url);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let trace = std::fs::read_to_string(dir.path().join("out/traces/toy.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 36);
    assert!(trace.lines().all(|l| l.contains("\"text\":\"graph node summary\"")));
}

#[test]
fn failing_backend_exits_with_two() {
    let url = serve("500 Internal Server Error", "{}");
    let dir = tempfile::tempdir().unwrap();
    let o = remote_understand(dir.path(), &url);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(text(&o).contains("failure manifest"));
}
