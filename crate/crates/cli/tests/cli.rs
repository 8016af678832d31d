//! Black-box tests of the binary: exit codes, error wording, and a few
//! hand-checkable numbers pulled back out of the artifacts.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn respace(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_respace"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = respace(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

fn write(dir: &Path, name: &str, contents: &str) {
    let path = dir.join(name);
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, contents).unwrap();
}

/// Three solo authors with known field memberships. A publishes in f0 and
/// f1, B in f0 only, C in all three, so the co-occurrence counts and the
/// conditional probabilities can be checked by hand.
fn write_toy_inputs(dir: &Path) {
    write(
        dir,
        "out/corpus.csv",
        "author_id,paper_id,year,journal_id,coauthor_count\n\
         A,p1,2005,j0,1\n\
         A,p2,2006,j1,1\n\
         B,p3,2005,j0,1\n\
         C,p4,2005,j0,1\n\
         C,p5,2006,j1,1\n\
         C,p6,2007,j2,1\n",
    );
    write(
        dir,
        "out/journal_fields.csv",
        "journal_id,field_id\nj0,f0\nj1,f1\nj2,f2\n",
    );
    write(
        dir,
        "out/field_meta.csv",
        "field_id,field_name,area_id,area_name\n\
         f0,Algebra,a0,Mathematics\n\
         f1,Geometry,a0,Mathematics\n\
         f2,Optics,a1,Physics\n",
    );
}

fn read_phi(dir: &Path) -> BTreeMap<(String, String), f64> {
    let text = std::fs::read_to_string(dir.join("out/phi_research_space.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.records()
        .map(|row| {
            let rec = row.unwrap();
            (
                (rec[0].to_string(), rec[1].to_string()),
                rec[2].parse::<f64>().unwrap(),
            )
        })
        .collect()
}

#[test]
fn build_space_reproduces_hand_derived_proximity() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_inputs(dir.path());
    ok(dir.path(), &["build-space"]);
    let phi = read_phi(dir.path());
    // Members: f0 {A,B,C}, f1 {A,C}, f2 {C}.
    let expect = [
        (("f0", "f0"), 1.0),
        (("f0", "f1"), 1.0),
        (("f0", "f2"), 1.0),
        (("f1", "f0"), 2.0 / 3.0),
        (("f1", "f1"), 1.0),
        (("f1", "f2"), 1.0),
        (("f2", "f0"), 1.0 / 3.0),
        (("f2", "f1"), 0.5),
        (("f2", "f2"), 1.0),
    ];
    assert_eq!(phi.len(), expect.len());
    for ((f, g), want) in expect {
        let got = phi[&(f.to_string(), g.to_string())];
        assert!((got - want).abs() < 1e-11, "phi({f},{g}) = {got}, want {want}");
    }
}

#[test]
fn filtered_out_corpus_is_a_clear_error() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_inputs(dir.path());
    write(
        dir.path(),
        "out/corpus.csv",
        "author_id,paper_id,year,journal_id,coauthor_count\nA,p1,1950,j0,1\n",
    );
    let out = respace(dir.path(), &["build-space"]);
    assert_eq!(exit_code(&out), 70);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("no scholars after filtering"),
        "stderr: {stderr}"
    );
}

#[test]
fn missing_artifacts_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = respace(dir.path(), &["build-space"]);
    assert_eq!(exit_code(&out), 2);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("journal_fields.csv"),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    write_toy_inputs(dir.path());
    let out = respace(dir.path(), &["predict"]);
    assert_eq!(exit_code(&out), 2);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("states_author_t0.csv"),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn usage_problems_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_inputs(dir.path());
    assert_eq!(exit_code(&respace(dir.path(), &["--bogus"])), 64);
    assert_eq!(exit_code(&respace(dir.path(), &["predict", "--map", "bogus"])), 64);
    assert_eq!(
        exit_code(&respace(dir.path(), &["states", "--level", "bogus"])),
        64
    );
    assert_eq!(
        exit_code(&respace(dir.path(), &["predict", "--map", "external"])),
        64
    );
    write(dir.path(), "respace.toml", "[params]\nnot_a_knob = 1\n");
    assert_eq!(exit_code(&respace(dir.path(), &["build-space"])), 64);
    write(dir.path(), "respace.toml", "[windows]\nstate_window = [2012, 2013]\n");
    assert_eq!(exit_code(&respace(dir.path(), &["build-space"])), 64);
}

fn run_synthetic_chain(dir: &Path) {
    write(dir, "respace.toml", "[params]\nb = 0.0\n");
    ok(dir, &["synth", "--seed", "1"]);
    ok(dir, &["build-space"]);
    ok(dir, &["states"]);
    ok(dir, &["predict"]);
    ok(dir, &["evaluate", "--baseline-seed", "7"]);
}

#[test]
fn evaluation_report_shows_the_planted_signal() {
    let dir = tempfile::tempdir().unwrap();
    run_synthetic_chain(dir.path());
    let text =
        std::fs::read_to_string(dir.path().join("out/evaluation_author_inactive_to_active.json"))
            .unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rs = report["research_space"]["mean"].as_f64().unwrap();
    let null = report["baseline"]["mean"].as_f64().unwrap();
    assert_eq!(report["baseline"]["seed"], 7);
    assert_eq!(report["baseline"]["map"], "shuffled");
    assert!(rs > null + 0.1, "research space {rs} vs shuffled {null}");
    let p = report["baseline_comparison"]["p_value"].as_f64().unwrap();
    assert!(p < 0.05, "baseline comparison p = {p}");
    assert!(report["comparison"].is_null());
    assert_eq!(report["reference"]["benchmarks"].as_array().unwrap().len(), 7);

    let table =
        std::fs::read_to_string(dir.path().join("out/evaluation_author_inactive_to_active.txt"))
            .unwrap();
    assert!(table.contains("research-space"), "table: {table}");
    assert!(table.contains("shuffled"), "table: {table}");
}

/// Derives an external map from the built research space (symmetrized by
/// max, scaled by 0.9) so the two-map report path runs without real
/// citation data: both AUC columns, the group comparison, and the scatter
/// regression with its planted slope.
#[test]
fn evaluate_compares_both_maps_when_external_predictions_exist() {
    let dir = tempfile::tempdir().unwrap();
    run_synthetic_chain(dir.path());
    let phi = read_phi(dir.path());
    let mut lines = vec!["field_i,field_j,weight".to_string()];
    for ((f, g), v) in &phi {
        if f < g {
            let w = 0.9 * v.max(phi[&(g.clone(), f.clone())]);
            if w > 0.0 {
                lines.push(format!("{f},{g},{w}"));
            }
        }
    }
    write(dir.path(), "external_map.csv", &(lines.join("\n") + "\n"));
    write(
        dir.path(),
        "respace.toml",
        "[params]\nb = 0.0\n\n[paths]\nexternal_map = \"external_map.csv\"\n",
    );
    ok(dir.path(), &["predict", "--map", "external"]);
    ok(dir.path(), &["evaluate"]);

    let text =
        std::fs::read_to_string(dir.path().join("out/evaluation_author_inactive_to_active.json"))
            .unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(report["external"]["mean"].as_f64().unwrap() > 0.5);
    assert!(report["comparison"]["p_value"].as_f64().unwrap() > 0.0);
    let slope = report["map_correlation"]["slope"].as_f64().unwrap();
    assert!((slope - 0.9).abs() < 1e-9, "slope {slope}");
    assert_eq!(report["map_correlation"]["r_squared"], 1.0);
    assert!(dir.path().join("out/scatter_maps.csv").is_file());

    let table =
        std::fs::read_to_string(dir.path().join("out/evaluation_author_inactive_to_active.txt"))
            .unwrap();
    assert!(table.contains("external"), "table: {table}");
    assert!(table.contains("research-space vs external"), "table: {table}");
}

#[test]
fn backbone_overlay_marks_entity_states() {
    let dir = tempfile::tempdir().unwrap();
    run_synthetic_chain(dir.path());
    ok(dir.path(), &["export-backbone", "--entity", "s000", "--tau", "0.3"]);
    let graphml = std::fs::read_to_string(dir.path().join("out/backbone.graphml")).unwrap();
    assert!(graphml.contains("<data key=\"state\">"), "graphml lacks states");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/backbone.json")).unwrap())
            .unwrap();
    let nodes = json["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 20);
    assert!(nodes.iter().all(|n| n["state"].is_string()));
    let edges = json["edges"].as_array().unwrap();
    assert!(edges.len() >= 19, "backbone should at least span the fields");
    let dot = std::fs::read_to_string(dir.path().join("out/backbone.dot")).unwrap();
    assert!(dot.contains("origin="), "dot: {dot}");

    let out = respace(dir.path(), &["export-backbone", "--entity", "nobody"]);
    assert_eq!(exit_code(&out), 70);
}

#[test]
fn config_transition_is_respected() {
    let dir = tempfile::tempdir().unwrap();
    run_synthetic_chain(dir.path());
    write(
        dir.path(),
        "respace.toml",
        "[params]\nb = 0.0\ntransition = \"nascent_to_developed\"\n",
    );
    ok(dir.path(), &["predict"]);
    ok(dir.path(), &["evaluate"]);
    assert!(dir
        .path()
        .join("out/predictions_author_nascent_to_developed_research-space.csv")
        .is_file());
    assert!(dir
        .path()
        .join("out/evaluation_author_nascent_to_developed.json")
        .is_file());
}

/// Chains all five pipeline commands on a four-field corpus small enough to
/// trace by hand. At t0 scholar A works in f0 only, B in f0 and f1, C in f2.
/// In the outcome window A enters f1, B enters f2, C enters nothing.
///
/// The training map then has phi(f1,f0) = 1/2 from B, so A's one realized
/// candidate f1 outscores f2 and f3 (AUC 1), while B's two candidates both
/// score zero (AUC 1/2). The report must show a mean of exactly 0.75 with C
/// excluded as single-class.
#[test]
fn toy_corpus_chains_all_five_commands() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "out/corpus.csv",
        "author_id,paper_id,year,journal_id,coauthor_count\n\
         A,p1,2008,j0,1\n\
         A,p2,2009,j0,1\n\
         A,p3,2011,j1,1\n\
         B,p4,2008,j0,1\n\
         B,p5,2008,j1,1\n\
         B,p6,2012,j2,1\n\
         C,p7,2009,j2,1\n\
         C,p8,2011,j2,1\n",
    );
    write(
        dir.path(),
        "out/journal_fields.csv",
        "journal_id,field_id\nj0,f0\nj1,f1\nj2,f2\nj3,f3\n",
    );
    write(
        dir.path(),
        "out/field_meta.csv",
        "field_id,field_name,area_id,area_name\n\
         f0,Algebra,a0,Mathematics\n\
         f1,Geometry,a0,Mathematics\n\
         f2,Optics,a1,Physics\n\
         f3,Botany,a2,Biology\n",
    );
    write(dir.path(), "respace.toml", "[params]\nb = 0.0\n");
    ok(dir.path(), &["build-space"]);
    ok(dir.path(), &["states"]);
    ok(dir.path(), &["predict"]);
    ok(dir.path(), &["evaluate"]);
    ok(dir.path(), &["export-backbone", "--entity", "A"]);

    let text =
        std::fs::read_to_string(dir.path().join("out/evaluation_author_inactive_to_active.json"))
            .unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["research_space"]["n"], 2);
    assert_eq!(report["research_space"]["mean"], 0.75);
    assert_eq!(report["research_space"]["excluded_undefined"], 1);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/backbone.json")).unwrap())
            .unwrap();
    assert_eq!(json["nodes"].as_array().unwrap().len(), 4);
    let a_states: BTreeMap<&str, &str> = json["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| (n["id"].as_str().unwrap(), n["state"].as_str().unwrap()))
        .collect();
    assert_eq!(a_states["f0"], "developed");
    assert_eq!(a_states["f3"], "inactive");
}

#[test]
fn jsonl_corpus_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    write_toy_inputs(dir.path());
    write(
        dir.path(),
        "corpus.jsonl",
        r#"{"author_id":"A","paper_id":"p1","year":2005,"journal_id":"j0","coauthor_count":1}
{"author_id":"A","paper_id":"p2","year":2006,"journal_id":"j1","coauthor_count":1}
{"author_id":"B","paper_id":"p3","year":2005,"journal_id":"j0","coauthor_count":1}
"#,
    );
    write(
        dir.path(),
        "respace.toml",
        "[paths]\ncorpus = \"corpus.jsonl\"\n",
    );
    ok(dir.path(), &["build-space"]);
    let phi = read_phi(dir.path());
    assert_eq!(phi[&("f0".to_string(), "f1".to_string())], 1.0);
    assert_eq!(phi[&("f1".to_string(), "f0".to_string())], 0.5);
}
