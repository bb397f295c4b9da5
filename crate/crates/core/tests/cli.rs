use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use tempfile::TempDir;
use urbanedge_core::cli::{cmd_generate, cmd_query, cmd_run, main_with, EXIT_CONFIG, EXIT_QUERY, EXIT_RULE};
use urbanedge_core::edge::PipelineKind;
use urbanedge_core::kg::{parse_query, run_query, Class, Seed};
use urbanedge_core::scenario::{run_scenario, ScenarioConfig};

fn config_in(dir: &Path) -> ScenarioConfig {
    ScenarioConfig {
        output: dir.to_path_buf(),
        ..ScenarioConfig::default()
    }
}

fn exit(args: &[&str]) -> i32 {
    main_with(std::iter::once("urbanedge").chain(args.iter().copied()))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// File contents by name, skipping the timing artifacts.
fn deterministic_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_str().unwrap();
            !matches!(name, "timing.json" | "table4_queries.csv" | "fig6_scalability.csv")
        })
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn shipped_scenario_file_states_the_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/scenario.toml");
    let cfg = ScenarioConfig::load(&path).unwrap();
    let want = ScenarioConfig {
        output: path.parent().unwrap().join("out"),
        ..ScenarioConfig::default()
    };
    assert_eq!(cfg, want);
}

#[test]
fn exit_codes_follow_the_error_class() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let missing = d.join("absent.toml");
    assert_eq!(exit(&["--config", missing.to_str().unwrap(), "generate"]), EXIT_CONFIG);

    let bad_toml = write(d, "bad.toml", "seed = \"forty-two\"\n");
    assert_eq!(exit(&["--config", bad_toml.to_str().unwrap(), "generate"]), EXIT_CONFIG);

    let unknown = write(d, "unknown.toml", "pipelines = [\"oracle\"]\n");
    assert_eq!(exit(&["--config", unknown.to_str().unwrap(), "generate"]), EXIT_CONFIG);
    assert_eq!(exit(&["run", "--pipelines", "oracle"]), EXIT_CONFIG);

    write(d, "rules.txt", "WHEN category=temperature AND value>> 3 THEN transmit\nWHEN frobnicate THEN drop\n");
    let rules_cfg = write(
        d,
        "rules.toml",
        "expert_rules = \"rules.txt\"\noutput = \"out\"\npipelines = [\"expert\"]\n[sweep]\nscales = []\n",
    );
    assert_eq!(exit(&["--config", rules_cfg.to_str().unwrap(), "run"]), EXIT_RULE);

    let graph = write(d, "empty.nt", "");
    let g = graph.to_str().unwrap();
    assert_eq!(exit(&["query", g, "lookup"]), EXIT_QUERY);
    assert_eq!(exit(&["query", g, "hops a two locatedAt"]), EXIT_QUERY);
    assert_eq!(exit(&["query", g, "series * 0 10 median"]), EXIT_QUERY);
    assert_eq!(exit(&["query", g, "lookup sensor/0/nowhere"]), 0);
    assert_eq!(exit(&["--help"]), 0);
}

#[test]
fn generate_is_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let mut sink = Vec::new();
    let files = cmd_generate(&config_in(a.path()), &mut sink).unwrap();
    cmd_generate(&config_in(b.path()), &mut sink).unwrap();
    assert_eq!(files.len(), 2);
    let data = fs::read_to_string(a.path().join("dataset.csv")).unwrap();
    assert_eq!(data.lines().count(), 5001);
    assert!(data.starts_with("t,location,category,value,label,group\n"));
    assert_eq!(deterministic_files(a.path()), deterministic_files(b.path()));
    let labels = fs::read_to_string(a.path().join("labels.csv")).unwrap();
    let labeled = labels.lines().count() - 1;
    assert!((75..=125).contains(&labeled), "{labeled} labels");
}

#[test]
fn run_outputs_are_reproducible_and_complete() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let mut sink = Vec::new();
    let first = cmd_run(&config_in(a.path()), false, &mut sink).unwrap();
    let mut threaded = config_in(b.path());
    threaded.threads = 4;
    let second = cmd_run(&threaded, false, &mut sink).unwrap();
    assert_eq!(first.report, second.report);
    let (fa, fb) = (deterministic_files(a.path()), deterministic_files(b.path()));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        assert!(bytes == &fb[name], "{name} differs between runs");
    }
    for name in [
        "report.json",
        "table1_detection.csv",
        "table2_energy.csv",
        "table3_cost.csv",
        "fig3_reduction.csv",
        "fig4_timeseries.csv",
        "timing.json",
        "table4_queries.csv",
    ] {
        assert!(a.path().join(name).is_file(), "missing {name}");
    }
    for k in PipelineKind::ALL {
        assert!(fa.contains_key(&format!("decisions_{}.csv", k.name())));
        assert!(fa.contains_key(&format!("graph_{}.nt", k.name())));
    }
    assert!(first.timing.scalability.is_empty());

    let report: serde_json::Value = serde_json::from_slice(&fa["report.json"]).unwrap();
    let sections = report["pipelines"].as_array().unwrap();
    assert_eq!(sections.len(), 5);
    let names: Vec<&str> = sections.iter().map(|s| s["pipeline"].as_str().unwrap()).collect();
    assert_eq!(names, PipelineKind::ALL.map(|k| k.name()));
    let text = String::from_utf8(sink).unwrap();
    assert!(text.lines().any(|l| l.starts_with("adaptive")));
}

#[test]
fn centralized_only_run_reduces_nothing() {
    let tmp = TempDir::new().unwrap();
    let cfg = ScenarioConfig {
        pipelines: vec![PipelineKind::Centralized],
        ..config_in(tmp.path())
    };
    let out = cmd_run(&cfg, false, &mut Vec::new()).unwrap();
    assert_eq!(out.report.pipelines.len(), 1);
    let c = &out.report.pipelines[0];
    assert_eq!(c.reduction, 0.0);
    assert_eq!(c.detection.recall, 1.0);
    assert_eq!(c.detection.fpr, 1.0);
}

#[test]
fn queries_on_the_export_match_the_in_memory_graph() {
    let tmp = TempDir::new().unwrap();
    let cfg = ScenarioConfig {
        pipelines: vec![PipelineKind::Adaptive],
        ..config_in(tmp.path())
    };
    cmd_run(&cfg, false, &mut Vec::new()).unwrap();
    let run = run_scenario(&cfg).unwrap();
    let graph = run.get(PipelineKind::Adaptive).unwrap().graph.state();
    let sensor = graph
        .entities()
        .find(|(_, c)| *c == Class::Sensor)
        .map(|(id, _)| id.to_string())
        .expect("some sensor reported");
    let location = graph
        .lookup(&sensor)
        .into_iter()
        .find(|t| t.predicate == "locatedAt")
        .map(|t| t.object.to_string())
        .unwrap();
    let export = tmp.path().join("graph_adaptive.nt");
    let seed = Seed::default_seed();
    for q in [
        format!("lookup {sensor}"),
        format!("traverse {location} locatedAt in"),
        format!("hops {sensor} 3 locatedAt,partOf,adjacentTo"),
        "match ?r producedBy ?s . ?r indicates ?a".to_string(),
        "series * 0 8640 count".to_string(),
        "lookup nowhere/at/all".to_string(),
    ] {
        let mut out = Vec::new();
        let lines = cmd_query(&export, &q, &seed, &mut out).unwrap();
        let want = run_query(graph, &parse_query(&q).unwrap()).unwrap().render();
        assert_eq!(String::from_utf8(out).unwrap(), want, "{q}");
        assert_eq!(lines, want.lines().count());
    }
}
