mod common;

use std::net::TcpListener;
use std::thread;

use common::{kb_path, run, table_oracle, Server};
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

fn messages(body: &str) -> Vec<Value> {
    body.lines()
        .map(|l| serde_json::from_str(l).expect("one JSON object per line"))
        .collect()
}

fn post(client: &Client, url: &str, body: Value) -> (StatusCode, Vec<Value>) {
    let r = client.post(url).json(&body).send().unwrap();
    let status = r.status();
    (status, messages(&r.text().unwrap()))
}

fn get(client: &Client, url: &str) -> (StatusCode, Vec<Value>) {
    let r = client.get(url).send().unwrap();
    let status = r.status();
    (status, messages(&r.text().unwrap()))
}

fn open(client: &Client, server: &Server, evidence: Value) -> (String, Vec<Value>) {
    let (status, msgs) = post(client, &server.url("/sessions"), json!({ "evidence": evidence }));
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(msgs[0]["type"], "session");
    (msgs[0]["id"].as_str().unwrap().to_string(), msgs)
}

fn site_of_play(beliefs: &Value) -> &Value {
    beliefs["frames"]
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["frame"] == "site_of_play")
        .unwrap()
}

#[test]
fn answering_reproduces_the_combination_table() {
    let server = Server::start("xx.kb");
    let client = Client::new();
    let (id, msgs) = open(
        &client,
        &server,
        json!([{ "attribute": "basin_setting", "value": "passive_margin" }]),
    );
    assert!(msgs.iter().all(|m| m["schema"] == 1));
    assert!(msgs.iter().any(|m| m["type"] == "fired" && m["rule"] == "setting01"));
    let question = msgs.last().unwrap();
    assert_eq!(question["type"], "question");
    assert_eq!(question["attribute"], "dist");
    assert_eq!(question["values"], json!(["less_equal_200", "greater_200"]));

    let (status, msgs) = post(
        &client,
        &server.url(&format!("/sessions/{id}/answer")),
        json!({ "attribute": "dist", "value": "less_equal_200" }),
    );
    assert_eq!(status, StatusCode::OK);
    assert_eq!(msgs[0]["type"], "answer");
    assert_eq!(msgs[0]["confidence"], 1.0);
    assert!(msgs.iter().any(|m| m["type"] == "fired" && m["rule"] == "rule03"));

    let (status, msgs) = get(&client, &server.url(&format!("/sessions/{id}/beliefs")));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(msgs.len(), 1);
    let frame = site_of_play(&msgs[0]);
    let rows = frame["masses"].as_array().unwrap();
    for (row, (_, mass)) in rows.iter().zip(table_oracle()) {
        assert!((row["mass"].as_f64().unwrap() - mass).abs() < 1e-9, "{row}");
    }

    let (status, trace) = get(&client, &server.url(&format!("/sessions/{id}/trace")));
    assert_eq!(status, StatusCode::OK);
    let seq: Vec<u64> = trace.iter().map(|e| e["seq"].as_u64().unwrap()).collect();
    assert_eq!(seq, (1..=trace.len() as u64).collect::<Vec<_>>());
    assert_eq!(trace[0]["event"], "started");
}

#[test]
fn served_beliefs_match_the_batch_report() {
    let server = Server::start("xx.kb");
    let client = Client::new();
    let (id, _) = open(
        &client,
        &server,
        json!([{ "attribute": "basin_setting", "value": "passive_margin" }]),
    );
    post(
        &client,
        &server.url(&format!("/sessions/{id}/answer")),
        json!({ "attribute": "dist", "value": "less_equal_200" }),
    );
    let (_, msgs) = get(&client, &server.url(&format!("/sessions/{id}/beliefs")));

    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("two.script");
    std::fs::write(
        &script,
        "volunteer basin_setting passive_margin\nanswer dist less_equal_200\n",
    )
    .unwrap();
    let o = run(&[
        "batch",
        "--format",
        "json",
        kb_path("xx.kb").to_str().unwrap(),
        script.to_str().unwrap(),
    ]);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(site_of_play(&msgs[0]), site_of_play(&report));
}

#[test]
fn unknown_sessions_and_endpoints_are_not_found() {
    let server = Server::start("xx.kb");
    let client = Client::new();
    let (status, msgs) = get(&client, &server.url("/sessions/99/next"));
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(msgs[0]["type"], "error");
    assert!(msgs[0]["message"].as_str().unwrap().contains("99"));
    let (status, _) = get(&client, &server.url("/elsewhere"));
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn bad_answers_are_rejected_without_changing_the_session() {
    let server = Server::start("xx.kb");
    let client = Client::new();
    let (id, _) = open(
        &client,
        &server,
        json!([{ "attribute": "basin_setting", "value": "passive_margin" }]),
    );
    let url = server.url(&format!("/sessions/{id}/answer"));
    for body in [
        json!({ "attribute": "move", "value": "seaward" }),
        json!({ "attribute": "dist", "value": "nowhere" }),
        json!({ "attribute": "dist", "value": "greater_200", "confidence": 1.5 }),
        json!({ "attribute": "dist" }),
    ] {
        let (status, msgs) = post(&client, &url, body.clone());
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
        assert_eq!(msgs[0]["type"], "error");
    }
    let (_, msgs) = get(&client, &server.url(&format!("/sessions/{id}/next")));
    assert_eq!(msgs[0]["attribute"], "dist");
}

#[test]
fn volunteering_moves_the_session_on() {
    let server = Server::start("xx.kb");
    let client = Client::new();
    let (id, msgs) = open(&client, &server, json!([]));
    assert_eq!(msgs.last().unwrap()["type"], "volunteer");
    let (status, msgs) = post(
        &client,
        &server.url(&format!("/sessions/{id}/volunteer")),
        json!({ "evidence": [{ "attribute": "basin_setting", "value": "passive_margin" }] }),
    );
    assert_eq!(status, StatusCode::OK);
    assert_eq!(msgs.last().unwrap()["attribute"], "dist");

    // Declining every question runs the session to its end.
    let mut last = msgs.last().unwrap().clone();
    while last["type"] == "question" {
        let (_, msgs) = post(
            &client,
            &server.url(&format!("/sessions/{id}/answer")),
            json!({ "attribute": last["attribute"], "response": "unknown" }),
        );
        last = msgs.last().unwrap().clone();
    }
    assert_eq!(last["type"], "done");
    assert_eq!(last["conclusions"][0]["frame"], "site_of_play");
}

#[test]
fn concurrent_sessions_are_isolated() {
    let server = Server::start("xx.kb");
    let answers = ["less_equal_200", "greater_200"];
    let results: Vec<Value> = thread::scope(|scope| {
        let handles: Vec<_> = answers
            .iter()
            .map(|answer| {
                let server = &server;
                scope.spawn(move || {
                    let client = Client::new();
                    let (id, _) = open(
                        &client,
                        server,
                        json!([{ "attribute": "basin_setting", "value": "passive_margin" }]),
                    );
                    post(
                        &client,
                        &server.url(&format!("/sessions/{id}/answer")),
                        json!({ "attribute": "dist", "value": answer }),
                    );
                    let (_, msgs) = get(&client, &server.url(&format!("/sessions/{id}/beliefs")));
                    site_of_play(&msgs[0]).clone()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let craton = |f: &Value| f["hypotheses"][0]["belief"].as_f64().unwrap();
    assert!((craton(&results[0]) - table_oracle()[3].1).abs() < 1e-9);
    // rule04 puts 0.6 on craton; everything but craton and Θ in setting01 conflicts.
    let (c, r) = (0.1, 0.6);
    let norm = 1.0 - (0.45 + 0.25 + 0.1) * r;
    let expected = (c * r + c * (1.0 - r) + 0.1 * r) / norm;
    assert!((craton(&results[1]) - expected).abs() < 1e-9, "{}", results[1]);
}

#[test]
fn a_busy_port_is_an_environment_error() {
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let o = run(&["serve", kb_path("xx.kb").to_str().unwrap(), "--listen", &addr]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot listen"));
}
