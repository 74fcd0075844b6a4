use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn fx(name: &str) -> String {
    fixture(name).to_str().unwrap().to_owned()
}

struct Out {
    stdout: String,
    stderr: String,
    code: i32,
}

fn fld(args: &[&str], stdin: Option<&str>) -> Out {
    let mut child = Command::new(env!("CARGO_BIN_EXE_fld"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(pipe);
    let out = child.wait_with_output().unwrap();
    Out {
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
        code: out.status.code().unwrap(),
    }
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[filter]\nbox_confidence_threshold = 2.0\n").unwrap();
    let out = fld(&["filter", "-i", &fx("corpus.jsonl"), "--config", cfg.to_str().unwrap()], None);
    assert_eq!(out.code, 2, "{}", out.stderr);
    assert!(out.stdout.is_empty());

    std::fs::write(&cfg, "jobz = 1\n").unwrap();
    assert_eq!(fld(&["stats", "-i", &fx("corpus.jsonl"), "--config", cfg.to_str().unwrap()], None).code, 2);
    assert_eq!(fld(&["filter", "--nms-threshold", "-0.5"], Some("")).code, 2);
    assert_eq!(fld(&["frobnicate"], None).code, 2);
}

#[test]
fn strict_decode_stops_at_bad_line() {
    let encoded = std::fs::read_to_string(fixture("tasks.encoded.jsonl")).unwrap();
    let mut lines: Vec<&str> = encoded.lines().collect();
    lines.insert(2, "{\"not\": \"a task\"}");
    let input = lines.join("\n") + "\n";

    let strict = fld(&["decode"], Some(&input));
    assert_eq!(strict.code, 1);
    assert!(strict.stdout.is_empty());
    assert!(strict.stderr.contains("line 3"), "{}", strict.stderr);

    let lenient = fld(&["decode", "--lenient"], Some(&input));
    assert_eq!(lenient.code, 0, "{}", lenient.stderr);
    assert_eq!(lenient.stdout, std::fs::read_to_string(fixture("tasks.jsonl")).unwrap());
    assert!(lenient.stderr.contains("line 3"));
}

#[test]
fn sidecar_is_required_for_parse_refs() {
    let missing = fld(&["filter", "-i", &fx("sidecar.jsonl")], None);
    assert_eq!(missing.code, 2, "{}", missing.stderr);

    let ok = fld(&["filter", "-i", &fx("sidecar.jsonl"), "--conllu", &fx("sidecar.conllu")], None);
    assert_eq!(ok.code, 0, "{}", ok.stderr);
    assert_eq!(ok.stdout.lines().count(), 1);

    let skipped = fld(&["filter", "-i", &fx("sidecar.jsonl"), "--no-text-filters"], None);
    assert_eq!(skipped.code, 0, "{}", skipped.stderr);

    let unreadable = fld(&["filter", "-i", &fx("sidecar.jsonl"), "--conllu", "/nonexistent/x.conllu"], None);
    assert_eq!(unreadable.code, 1);
}

#[test]
fn stdin_and_output_file() {
    let corpus = std::fs::read_to_string(fixture("corpus.jsonl")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("out.jsonl");
    let out = fld(
        &["filter", "--config", &fx("blacklist.toml"), "-o", out_path.to_str().unwrap()],
        Some(&corpus),
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.is_empty());
    assert_eq!(
        std::fs::read_to_string(&out_path).unwrap(),
        std::fs::read_to_string(fixture("corpus.filtered.jsonl")).unwrap()
    );
    let summary: serde_json::Value = serde_json::from_str(&out.stderr).unwrap();
    assert_eq!(summary["input_records"], 3);
}

#[test]
fn filter_output_is_a_fixed_point() {
    let first = std::fs::read_to_string(fixture("corpus.filtered.jsonl")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    let out = fld(
        &["filter", "--config", &fx("blacklist.toml"), "--summary", summary.to_str().unwrap()],
        Some(&first),
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout, first);
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(s["dropped_records"], 0);
    assert!(s["drops"].as_object().unwrap().values().all(|v| v == 0));
}

#[test]
fn permissive_filter_keeps_the_corpus() {
    let corpus = std::fs::read_to_string(fixture("corpus.jsonl")).unwrap();
    let out = fld(&["filter", "--permissive", "-i", &fx("corpus.jsonl")], None);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout, corpus);
}

#[test]
fn stats_writes_csv_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = fld(
        &["stats", "-i", &fx("corpus.jsonl"), "--csv-dir", dir.path().to_str().unwrap(), "--resolution", "8"],
        None,
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let doc: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(doc["records"], 3);
    for name in [
        "annotation.csv",
        "semantic.csv",
        "region_text_area.csv",
        "region_text_aspect.csv",
        "region_text_center_heatmap.csv",
        "triplets_area.csv",
        "triplets_aspect.csv",
        "triplets_center_heatmap.csv",
    ] {
        let body = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(body.lines().count() > 1, "{name} is empty");
        assert!(!body.contains("NaN"), "{name}");
    }
    let heat = std::fs::read_to_string(dir.path().join("region_text_center_heatmap.csv")).unwrap();
    assert_eq!(heat.lines().count(), 8);
    assert!(heat.lines().all(|l| l.split(',').count() == 8));
    let annotation = std::fs::read_to_string(dir.path().join("annotation.csv")).unwrap();
    assert!(annotation.lines().all(|l| l.split(',').count() == 7));
}

#[test]
fn validate_reports_invalid_records() {
    let good = fld(&["validate", "-i", &fx("corpus.jsonl")], None);
    assert_eq!(good.code, 0, "{}", good.stderr);

    let mut corpus = std::fs::read_to_string(fixture("corpus.jsonl")).unwrap();
    corpus.push_str("{\"fld_schema\":1,\"id\":\"bad\",\"size\":{\"width\":0.0,\"height\":10.0},\"texts\":[],\"region_texts\":[],\"triplets\":[]}\n");
    let bad = fld(&["validate"], Some(&corpus));
    assert_eq!(bad.code, 1);
    assert!(bad.stderr.contains("line 4"), "{}", bad.stderr);

    let future = corpus.replace("\"fld_schema\":1", "\"fld_schema\":9");
    let strict = fld(&["filter", "--strict"], Some(&future));
    assert_eq!(strict.code, 1);
    assert!(strict.stderr.contains("schema version"), "{}", strict.stderr);
}

#[test]
fn encode_with_task_override() {
    let rec = "{\"id\":\"c1\",\"size\":{\"width\":10.0,\"height\":10.0},\"output\":{\"text\":\"a cat\"}}\n";
    let out = fld(&["encode", "--task", "detailed_caption"], Some(rec));
    assert_eq!(out.code, 0, "{}", out.stderr);
    let line: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(line["task"], "detailed_caption");
    assert_eq!(line["response"], "a cat");
    assert_eq!(fld(&["encode", "--task", "nonsense"], Some(rec)).code, 2);
}
