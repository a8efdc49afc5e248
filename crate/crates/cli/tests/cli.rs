//! End-to-end runs of the `envlab` binary: golden outputs, determinism,
//! exit codes and the CSV contract of every scenario.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn envlab(args: &[&str]) -> Output {
    envlab_env(args, &[])
}

fn envlab_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_envlab"));
    cmd.args(args).env_remove("ENVLAB_DIM_GUARD");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("run envlab")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_doc(o: &Output, code: i32) -> Value {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_slice(&o.stderr).expect("stderr is a JSON document");
    assert_eq!(doc["error"]["exit_code"], code);
    doc
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

/// `(name, header, rows)` of every table in a CSV stream.
fn tables(csv: &str) -> Vec<(String, String, Vec<Vec<String>>)> {
    csv.split("# table: ")
        .filter(|b| !b.trim().is_empty())
        .map(|block| {
            let mut lines = block.lines().filter(|l| !l.is_empty());
            let name = lines.next().unwrap().to_string();
            let header = lines.next().unwrap().to_string();
            let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
            (name, header, rows)
        })
        .collect()
}

fn table(csv: &str, name: &str) -> (String, Vec<Vec<String>>) {
    let (_, h, r) = tables(csv).into_iter().find(|t| t.0 == name).unwrap_or_else(|| panic!("no table {name}"));
    (h, r)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s}"))
}

#[test]
fn golden_outputs() {
    for (args, file) in [
        (vec!["born", "--amplitudes", "sqrt(2/3),sqrt(1/3)"], "born_two_thirds.csv"),
        (vec!["born", "--amplitudes", "cos(1),sin(1)"], "born_cos_one.csv"),
        (vec!["redundancy"], "redundancy_default.csv"),
        (vec!["einselect", "--amplitudes", "0.6,0.8", "--env-count", "3"], "einselect_06_08.csv"),
        (vec!["envariance", "--amplitudes", "0.6,0.8"], "envariance_06_08.csv"),
        (vec!["cascade", "--env-count", "3", "--overlap", "0.5"], "cascade_overlap.csv"),
    ] {
        assert_eq!(stdout(&envlab(&args)), golden(file), "{args:?}");
    }
}

#[test]
fn born_two_thirds() {
    let out = stdout(&envlab(&["born", "--amplitudes", "sqrt(2/3),sqrt(1/3)"]));
    let (header, rows) = table(&out, "born");
    assert_eq!(header, "outcome_index,p_counting,p_amplitude_squared,abs_gap");
    assert_eq!(rows[0][1], "0.666666667");
    assert_eq!(rows[1][1], "0.333333333");
}

#[test]
fn counting_agrees_with_squared_amplitudes() {
    for amps in ["0.6,0.8", "sqrt(3/8),sqrt(1/8),sqrt(4/8)", "0.5,0.5,0.5,0.5", "cos(1),sin(1)", "sqrt(0.3),sqrt(0.7)i"] {
        let out = stdout(&envlab(&["born", "--amplitudes", amps]));
        let (_, counting) = table(&out, "counting");
        let m = num(&counting[0][1]);
        for row in table(&out, "born").1 {
            assert!((num(&row[1]) - num(&row[2])).abs() <= 1e-10 + 1.0 / m, "{amps}: {row:?}");
        }
        let (header, conv) = table(&out, "convergence");
        assert_eq!(header, "m,max_width,width_bound,all_contain");
        assert_eq!(conv.len(), 3);
        for row in conv {
            assert!(num(&row[1]) <= 2.0 / num(&row[0]));
            assert_eq!(row[3], "true");
        }
    }
}

#[test]
fn redundancy_ratio_equals_record_count() {
    let out = stdout(&envlab(&["redundancy"]));
    let (header, rows) = table(&out, "redundancy");
    assert_eq!(header, "fragment_index,mi_bits,cumulative_bits,ratio");
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[3] == "8.0"));
}

#[test]
fn single_branch_einselection_is_trivial() {
    let out = stdout(&envlab(&["einselect", "--amplitudes", "1,0", "--env-count", "2"]));
    let (header, rows) = table(&out, "stages");
    assert_eq!(header, "stage,offdiag_norm,mi_s_a,mi_sa_e,purity");
    for r in rows {
        assert_eq!(&r[1..4], ["0.0", "0.0", "0.0"]);
    }
}

#[test]
fn imperfect_records_carry_partial_information() {
    // one record with overlap c: reading it in the pointer basis leaves
    // H(S | 0) with probability 1/2 + c²/2 and certainty otherwise
    let c: f64 = 0.5;
    let p0 = 0.5 + 0.5 * c * c;
    let post = 0.5 / p0;
    let h = |x: f64| -x * x.log2() - (1.0 - x) * (1.0 - x).log2();
    let expected = 1.0 - p0 * h(post);
    let out = stdout(&envlab(&["cascade", "--env-count", "2", "--overlap", "0.5"]));
    for r in table(&out, "cascade").1 {
        assert!((num(&r[1]) - expected).abs() < 1e-8, "{r:?}");
        assert!((num(&r[2]) - expected).abs() < 1e-8, "{r:?}");
        assert_eq!(r[3], "0.0");
    }
}

#[test]
fn every_scenario_emits_documented_columns() {
    let expected: &[(&str, &[(&str, &str)])] = &[
        (
            "einselect",
            &[
                ("stages", "stage,offdiag_norm,mi_s_a,mi_sa_e,purity"),
                ("pointer_diagonal", "outcome_index,amplitude_squared,rho_sa_diagonal"),
            ],
        ),
        ("redundancy", &[("redundancy", "fragment_index,mi_bits,cumulative_bits,ratio")]),
        (
            "born",
            &[
                ("born", "outcome_index,p_counting,p_amplitude_squared,abs_gap"),
                ("counting", "method,m_used"),
                ("convergence", "m,max_width,width_bound,all_contain"),
            ],
        ),
        (
            "envariance",
            &[
                ("certificates", "certificate,envariant,residual,reduced_change"),
                ("phase_witness", "observable,expectation_gap,post_record_gap"),
            ],
        ),
        (
            "cascade",
            &[("cascade", "fragment_index,immediate_pointer_bits,distant_pointer_bits,distant_conjugate_bits")],
        ),
    ];
    for (scenario, want) in expected {
        let out = stdout(&envlab(&[scenario, "--env-count", "3"]));
        let got = tables(&out);
        let names: Vec<&str> = got.iter().map(|t| t.0.as_str()).collect();
        let mut want_names: Vec<&str> = want.iter().map(|w| w.0).collect();
        want_names.push("tolerance");
        assert_eq!(names, want_names, "{scenario}");
        for (name, header) in *want {
            assert_eq!(table(&out, name).0, *header, "{scenario}/{name}");
        }
        let (header, rows) = table(&out, "tolerance");
        assert_eq!(header, "invariant,max_residual,limit,ok");
        assert!(rows.iter().all(|r| r[3] == "true"), "{scenario}: {rows:?}");
    }
}

fn without_duration(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("duration_seconds").expect("duration field");
    v
}

#[test]
fn reruns_are_identical() {
    for scenario in ["einselect", "redundancy", "born", "envariance", "cascade"] {
        let args = [scenario, "--env-count", "4", "--overlap", "0.25", "--format", "json"];
        let args: &[&str] = if scenario == "born" { &["born", "--amplitudes", "0.6,0.8", "--format", "json"] } else { &args };
        let a: Value = serde_json::from_str(&stdout(&envlab(args))).unwrap();
        let b: Value = serde_json::from_str(&stdout(&envlab(args))).unwrap();
        assert_eq!(without_duration(a), without_duration(b), "{scenario}");

        let dir = tempfile::tempdir().unwrap();
        let d1 = dir.path().join("one");
        let d2 = dir.path().join("two");
        let csv_args = |d: &Path| {
            let mut v: Vec<String> = args.iter().take_while(|a| **a != "--format").map(|s| s.to_string()).collect();
            v.extend(["--out".into(), d.display().to_string()]);
            v
        };
        for d in [&d1, &d2] {
            let a = csv_args(d);
            let a: Vec<&str> = a.iter().map(String::as_str).collect();
            assert!(envlab(&a).status.success());
        }
        let mut files: Vec<_> = std::fs::read_dir(&d1).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        assert!(!files.is_empty());
        for f in files {
            assert!(f.to_string_lossy().starts_with(&format!("{scenario}_")));
            assert_eq!(std::fs::read(d1.join(&f)).unwrap(), std::fs::read(d2.join(&f)).unwrap(), "{f:?}");
        }
    }
}

#[test]
fn json_report_mirrors_csv() {
    let json: Value = serde_json::from_str(&stdout(&envlab(&["born", "--amplitudes", "sqrt(2/3),sqrt(1/3)", "--format", "json"])))
        .unwrap();
    assert_eq!(json["scenario"]["scenario"], "born");
    assert_eq!(json["scenario"]["m_cap"], 10000);
    let born = json["tables"].as_array().unwrap().iter().find(|t| t["name"] == "born").unwrap();
    assert_eq!(born["columns"][1], "p_counting");
    assert_eq!(born["rows"][0][1].to_string(), "0.666666667");
    assert!(json["tolerance_report"].as_array().unwrap().iter().all(|e| e["ok"] == true));
    assert!(json["duration_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn config_document_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"scenario": "redundancy", "amplitudes": ["sqrt(1/3)", 0.816496580927726], "env_count": 3}"#)
        .unwrap();
    let out = stdout(&envlab(&["redundancy", "--config", cfg.to_str().unwrap()]));
    assert_eq!(table(&out, "redundancy").1.len(), 3);
    let out = stdout(&envlab(&["redundancy", "--config", cfg.to_str().unwrap(), "--env-count", "5"]));
    let rows = table(&out, "redundancy").1;
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][3], "5.0");

    let out = envlab(&["born", "--config", cfg.to_str().unwrap()]);
    let doc = error_doc(&out, 2);
    assert_eq!(doc["error"]["fields"][0]["field"], "scenario");

    std::fs::write(&cfg, r#"{"amplitudes": [0.6, 0.8], "colour": "blue"}"#).unwrap();
    let doc = error_doc(&envlab(&["redundancy", "--config", cfg.to_str().unwrap()]), 2);
    assert_eq!(doc["error"]["fields"][0]["field"], "config");
}

#[test]
fn born_reads_state_documents() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    // (√2|0⟩|+⟩ + |2⟩|2⟩)/√3 on qutrits
    let s = 1.0 / 3f64.sqrt();
    let amps: Vec<[f64; 2]> = (0..9).map(|i| if [0, 1, 8].contains(&i) { [s, 0.0] } else { [0.0, 0.0] }).collect();
    let doc = serde_json::json!({
        "layout": [{"label": "Q", "dim": 3}, {"label": "R", "dim": 3}],
        "amplitudes": amps,
    });
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = stdout(&envlab(&["born", "--state", path.to_str().unwrap(), "--system", "Q"]));
    let rows = table(&out, "born").1;
    assert_eq!((rows[0][1].as_str(), rows[1][1].as_str()), ("0.666666667", "0.333333333"));
    assert_eq!(table(&out, "counting").1[0], ["counting", "3"]);

    let doc = error_doc(&envlab(&["born", "--state", path.to_str().unwrap()]), 2);
    assert_eq!(doc["error"]["fields"][0]["field"], "system");
    error_doc(&envlab(&["born", "--state", path.to_str().unwrap(), "--system", "Q,R"]), 2);
    let doc = error_doc(&envlab_env(&["born", "--state", path.to_str().unwrap(), "--system", "Q"], &[("ENVLAB_DIM_GUARD", "8")]), 3);
    assert_eq!(doc["error"]["guard"], 8);
}

#[test]
fn validation_failures_exit_2_with_field_messages() {
    let doc = error_doc(&envlab(&["einselect", "--amplitudes", "0.6,0.6", "--overlap", "2", "--env-count", "0"]), 2);
    let fields: Vec<&str> = doc["error"]["fields"].as_array().unwrap().iter().map(|f| f["field"].as_str().unwrap()).collect();
    assert_eq!(fields, ["amplitudes", "env_count", "overlap"]);
    assert_eq!(doc["error"]["kind"], "validation");

    for args in [
        vec!["born", "--amplitudes", "sqrt(-1),1"],
        vec!["born", "--overlap", "0.1"],
        vec!["born", "--amplitudes", "0.6,0.8", "--m-cap", "1"],
        vec!["redundancy", "--amplitudes", "1,0"],
        vec!["cascade", "--tolerance", "0"],
        vec!["envariance", "--amplitudes", "1"],
        vec!["einselect", "--no-such-flag"],
        vec!["einselect", "--format", "xml"],
    ] {
        error_doc(&envlab(&args), 2);
    }
    let doc = error_doc(&envlab_env(&["redundancy"], &[("ENVLAB_DIM_GUARD", "lots")]), 2);
    assert_eq!(doc["error"]["fields"][0]["field"], "ENVLAB_DIM_GUARD");
}

#[test]
fn dimension_guard_exits_3_before_allocating() {
    // 2^(2 + 2·30) amplitudes would need exabytes; the guard must fire first
    let doc = error_doc(&envlab(&["cascade", "--env-count", "30"]), 3);
    assert_eq!(doc["error"]["kind"], "dimension_guard");
    assert_eq!(doc["error"]["dimension"], (1u128 << 62).to_string());

    error_doc(&envlab_env(&["redundancy"], &[("ENVLAB_DIM_GUARD", "512")]), 3);
    assert!(envlab_env(&["redundancy"], &[("ENVLAB_DIM_GUARD", "1024")]).status.success());
    // the guard is inclusive and can be raised
    assert!(envlab_env(&["redundancy", "--env-count", "19"], &[("ENVLAB_DIM_GUARD", "2097152")]).status.success());
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("sub");
    let doc = error_doc(&envlab(&["born", "--out", target.to_str().unwrap()]), 4);
    assert_eq!(doc["error"]["kind"], "io");
    error_doc(&envlab(&["born", "--config", dir.path().join("missing.json").to_str().unwrap()]), 4);
}

#[test]
fn help_and_version_succeed() {
    let help = stdout(&envlab(&["--help"]));
    for sub in ["einselect", "redundancy", "born", "envariance", "cascade"] {
        assert!(help.contains(sub));
    }
    assert!(stdout(&envlab(&["born", "--help"])).contains("--amplitudes"));
    assert!(stdout(&envlab(&["--version"])).starts_with("envlab "));
}
