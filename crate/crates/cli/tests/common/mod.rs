#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, Command, Output, Stdio};

pub fn kb_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/kb").join(name)
}

pub fn evshell() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_evshell"));
    c.env_remove("EVSHELL_THRESHOLD");
    c
}

pub fn run(args: &[&str]) -> Output {
    evshell().args(args).output().expect("evshell runs")
}

pub fn run_with_input(args: &[&str], input: &str) -> Output {
    let mut child = evshell()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("evshell runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Masses of the XX table, combined by hand: setting01's mass with rule03's
/// 0.8 on {shelf, margin}. Only craton against {shelf, margin} conflicts.
pub fn table_oracle() -> [(&'static [&'static str], f64); 5] {
    let (sm, m, s, c, t) = (0.45, 0.25, 0.1, 0.1, 0.1);
    let (r, rt) = (0.8, 0.2);
    let k = c * r;
    let norm = 1.0 - k;
    [
        (&["shelf", "margin"], (sm * r + sm * rt + t * r) / norm),
        (&["margin"], (m * r + m * rt) / norm),
        (&["shelf"], (s * r + s * rt) / norm),
        (&["craton"], (c * rt) / norm),
        (&[], (t * rt) / norm),
    ]
}

/// A running `evshell serve`, killed on drop.
pub struct Server {
    child: Child,
    pub base: String,
}

impl Server {
    pub fn start(kb: &str) -> Server {
        let mut child = evshell()
            .args(["serve", kb_path(kb).to_str().unwrap(), "--listen", "127.0.0.1:0"])
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("server starts");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .unwrap();
        let base = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
            .to_string();
        Server { child, base }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.child.kill().ok();
        self.child.wait().ok();
    }
}
