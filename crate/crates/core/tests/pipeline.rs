use std::fs;

use gaussfpt::experiment::{preset, preset_json, run, ExperimentConfig, Overrides};

fn small(name: &str, dir: &std::path::Path) -> ExperimentConfig {
    let mut config = preset(name).unwrap();
    config.apply(&Overrides {
        paths: Some(5_000),
        horizon: Some(4.0),
        output_dir: Some(dir.to_path_buf()),
        ..Overrides::default()
    });
    config
}

#[test]
fn figure_1_writes_boundary_curves() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&small("figure-1", dir.path())).unwrap();
    for d in ["0.25", "0.5"] {
        let text = fs::read_to_string(dir.path().join(format!("boundary_soglia_b0.5_d{d}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,S,dS"));
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(first[0], 0.0);
        assert_eq!(first[1], d.parse::<f64>().unwrap());
    }
    assert!(report.files.contains(&"manifest.json".to_string()));
}

#[test]
fn figure_2_writes_every_method_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&small("figure-2", dir.path())).unwrap();
    let label = "soglia_b0.5_d0.25";
    for f in [
        format!("closed_form_{label}.csv"),
        format!("volterra_{label}.csv"),
        format!("volterra_{label}_diagnostics.csv"),
        format!("simulate_{label}_alpha1e-10.csv"),
        format!("simulate_{label}_alpha0.25.csv"),
        format!("fpt_samples_{label}_alpha0.5.csv"),
        "metrics.csv".into(),
        "statistics.csv".into(),
        "manifest.json".into(),
    ] {
        assert!(dir.path().join(&f).exists(), "missing {f}");
    }
    let pair = report
        .metrics
        .iter()
        .find(|m| m.a == "closed_form" && m.b == "volterra")
        .unwrap();
    assert!(pair.comparison.sup < 1e-3);
    assert_eq!(report.statistics.len(), 3);
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("boundary,a,b,l1,sup,ks\n"));
    // one pairwise row plus closed form and volterra for each simulated alpha
    assert_eq!(metrics.lines().count(), 1 + 1 + 3 * 2);
}

#[test]
fn manifest_reruns_to_identical_tables() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run(&small("figure-3", a.path())).unwrap();
    let manifest = fs::read_to_string(a.path().join("manifest.json")).unwrap();
    let mut again = ExperimentConfig::from_json(&manifest).unwrap();
    again.output_dir = Some(b.path().to_path_buf());
    let second = run(&again).unwrap();
    assert_eq!(first.files, second.files);
    for f in first.files.iter().filter(|f| f.ends_with(".csv")) {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn validation_reports_scope_and_parameter_violations() {
    assert!(preset("figure-2").unwrap().validate().is_empty());
    let with_memory = preset_json("figure-2")
        .unwrap()
        .replace("\"alpha\": 0.0", "\"alpha\": 0.25");
    let v = ExperimentConfig::from_json(&with_memory).unwrap().validate();
    assert!(v.iter().any(|m| m.contains("closed form requires α=0")), "{v:?}");
    let negative = preset_json("figure-1").unwrap().replace("\"d\": 0.25", "\"d\": -1");
    let v = ExperimentConfig::from_json(&negative).unwrap().validate();
    assert!(v.iter().any(|m| m.contains("d > 0")), "{v:?}");
}
