mod common;

use std::fs;

use common::{kb_path, run, run_with_input, stderr, stdout, table_oracle};
use serde_json::Value;

fn xx() -> String {
    kb_path("xx.kb").display().to_string()
}

fn script(name: &str) -> String {
    kb_path(name).display().to_string()
}

#[test]
fn validate_accepts_the_bundled_kbs() {
    for kb in ["xx.kb", "oases.kb"] {
        let o = run(&["validate", kb_path(kb).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(stdout(&o).ends_with(": 0 error(s), 0 warning(s)\n"), "{}", stdout(&o));
    }
}

#[test]
fn validate_reports_duplicate_rule_ids_with_both_locations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.kb");
    let text = fs::read_to_string(kb_path("xx.kb")).unwrap()
        + "(rule rule03 :partition level1 :lhs ((dist greater_200)) :rhs-mass (((site_of_play craton) 0.5)))\n";
    fs::write(&path, &text).unwrap();
    let o = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    let last = text.lines().count();
    assert!(
        err.contains(&format!("duplicate rule id `rule03` at {last}:1")),
        "{err}"
    );
    assert!(err.contains("first defined at"), "{err}");
}

#[test]
fn missing_files_are_environment_errors() {
    let o = run(&["validate", "/nonexistent/kb.kb"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("evshell: cannot read"), "{}", stderr(&o));
    let o = run(&["batch", &xx(), "/nonexistent/script"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_json_lists_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("unused.kb");
    let text = fs::read_to_string(kb_path("xx.kb")).unwrap() + "(attribute lonely askable \"Unused?\" (yes no))\n";
    fs::write(&path, text).unwrap();
    let o = run(&["validate", "--format", "json", path.to_str().unwrap()]);
    let diagnostics: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let list = diagnostics.as_array().unwrap();
    assert!(!list.is_empty());
    assert_eq!(o.status.code(), Some(0), "warnings alone do not fail validation");
}

#[test]
fn compile_writes_deterministic_graphs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = run(&["compile", &xx(), "--out-dir", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let dot = fs::read_to_string(a.path().join("level1.dot")).unwrap();
    assert_eq!(dot, fs::read_to_string(b.path().join("level1.dot")).unwrap());
    assert!(dot.starts_with("digraph \"level1\""), "{dot}");
    assert!(dot.contains("beds_deepen"));
    assert_eq!(
        dot.matches("hexagon").count(),
        2,
        "one level node each for beds_dip and beds_deepen"
    );

    let o = run(&[
        "compile",
        "--format",
        "json",
        &xx(),
        "--out-dir",
        a.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let graph: Value = serde_json::from_str(&fs::read_to_string(a.path().join("level1.json")).unwrap()).unwrap();
    assert!(graph.is_object());
}

#[test]
fn compile_refuses_invalid_kbs_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("bad.kb");
    fs::write(
        &kb,
        "(frame f (a b))\n(attribute q askable \"Q?\" (y n))\n(partition p)\n\
         (rule r1 :partition p :lhs ((q y)) :rhs-mass (((f a) 0.7) ((f b) 0.6)))\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&["compile", kb.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn batch_table_script_reproduces_the_combination() {
    let o = run(&["batch", "--format", "json", &xx(), &script("xx_table.script")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["schema"], 1);
    let frame = &report["frames"][0];
    assert_eq!(frame["frame"], "site_of_play");
    let rows = frame["masses"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for (row, (subset, mass)) in rows.iter().zip(table_oracle()) {
        let got: Vec<&str> = row["subset"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap())
            .collect();
        if subset.is_empty() {
            assert_eq!(row["theta"], true);
        } else {
            assert_eq!(got, subset);
        }
        assert!((row["mass"].as_f64().unwrap() - mass).abs() < 1e-9, "{row}");
    }

    let text = stdout(&run(&["batch", &xx(), &script("xx_table.script")]));
    assert!(text.contains("m({shelf,margin})  0.576"), "{text}");
    assert!(text.contains("m({margin})        0.272"), "{text}");
}

#[test]
fn batch_full_script_concludes_margin() {
    let o = run(&["batch", "--format", "json", &xx(), &script("xx_full.script")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["status"], "concluded");
    assert_eq!(report["conclusions"][0]["value"], "margin");
    let fired: Vec<&str> = report["fired"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(fired.contains(&"rule06"), "{fired:?}");
}

#[test]
fn batch_of_an_empty_script_is_exhausted_and_vacuous() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.script");
    fs::write(&empty, "# nothing to say\n").unwrap();
    let o = run(&["batch", &xx(), empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("status: exhausted\n"), "{text}");
    assert!(text.contains("frame site_of_play\n  m(Θ)  1.000\n"), "{text}");
}

#[test]
fn batch_reports_the_offending_script_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.script");
    fs::write(
        &bad,
        "volunteer basin_setting passive_margin\n# next one is out of turn\nanswer move seaward\n",
    )
    .unwrap();
    let o = run(&["batch", &xx(), bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());

    fs::write(&bad, "answer dist far_away\n").unwrap();
    let o = run(&["batch", &xx(), bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn threshold_comes_from_the_environment_or_the_flag() {
    let args = ["batch", &xx(), &script("xx_table.script")];
    let o = common::evshell()
        .args(args)
        .env("EVSHELL_THRESHOLD", "0.5")
        .output()
        .unwrap();
    let text = stdout(&o);
    assert!(text.contains("exit threshold: 0.500"), "{text}");
    assert!(
        text.contains("site_of_play = margin  Bel 0.272  (below threshold)"),
        "{text}"
    );

    let o = run(&["batch", "--threshold", "0.26", &xx(), &script("xx_table.script")]);
    let text = stdout(&o);
    assert!(text.contains("exit threshold: 0.260"), "{text}");
    assert!(!text.contains("below threshold"), "{text}");

    let o = run(&["batch", "--threshold", "1.5", &xx(), &script("xx_table.script")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn consult_with_piped_answers_matches_batch() {
    let script_text = fs::read_to_string(kb_path("xx_full.script")).unwrap();
    let consult = run_with_input(&["consult", &xx()], &script_text);
    assert_eq!(consult.status.code(), Some(0), "{}", stderr(&consult));
    let batch = run(&["batch", &xx(), &script("xx_full.script")]);
    let (c, b) = (stdout(&consult), stdout(&batch));
    assert!(c.ends_with(&b), "consult output:\n{c}\nbatch output:\n{b}");
    assert!(c.contains("How far is the play from the margin (miles)?"));
}

#[test]
fn consult_shorthand_show_and_quit() {
    let o = run_with_input(&["consult", &xx()], "basin_setting passive_margin\nshow\n1\nquit\n");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("status: awaiting-input"), "{out}");
    assert!(out.contains("m({shelf,margin})  0.576"), "{out}");
    assert!(out.contains("margin"), "{out}");
}

#[test]
fn consult_rejects_bad_input_and_keeps_going() {
    let o = run_with_input(
        &["consult", &xx()],
        "basin_setting nowhere\nbasin_setting passive_margin\n9\nquit\n",
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.matches("  ! ").count() >= 2, "{out}");
    assert!(out.contains("site_of_play"), "{out}");
}

#[test]
fn edit_appends_a_ranked_rule() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("xx.kb");
    fs::copy(kb_path("xx.kb"), &path).unwrap();
    let o = run_with_input(
        &["edit", path.to_str().unwrap()],
        "dist, greater 200\n\nsite of play, craton, shelf\n\n7\n6\nrule99\n",
    );
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).ends_with(&format!("added rule99 to {}\n", path.display())));
    let o = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(fs::read_to_string(&path).unwrap().contains("rule99"));
}
