use std::path::{Path, PathBuf};
use std::process::Command;

use depscreen::forest::ForestConfig;
use depscreen::inference::McmcConfig;
use depscreen::pipeline::{self, Dataset, GridChoice, Pipeline, PipelineConfig, PipelineError};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn desk_config(out: &Path, seed: u64) -> PipelineConfig {
    let mut c = PipelineConfig { seed, out_dir: out.to_path_buf(), ..PipelineConfig::default() };
    c.synth.spec = "desk".into();
    c.mcmc = McmcConfig { chains: 2, iterations: 3_000, burn_in: 500, thin: 1, seed: 0 };
    c.model.ppc_replicates = 50;
    c.forest.grid = GridChoice::Fixed;
    c.forest.fixed = ForestConfig { n_estimators: 25, ..ForestConfig::default() };
    c.forest.runs = 2;
    c
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn desk_pipeline_runs_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(desk_config(dir.path(), 3)).unwrap();
    pipeline::synth(&p).unwrap();
    let agg = pipeline::aggregate(&p).unwrap();
    assert!(agg.all.nrows() > agg.pre.nrows());
    assert!(agg.pre.nrows() > 0);

    for d in [Dataset::All, Dataset::Pre, Dataset::Ratings] {
        let fit = pipeline::fit(&p, d).unwrap();
        assert!(fit.ppc.p_value >= 0.0 && fit.ppc.p_value <= 1.0);
        assert!(p.out(&["fit", &format!("draws_{}.csv", d.name())]).exists());
    }

    // Without classifier outputs the report is partial but still written.
    let partial = pipeline::report(&p).unwrap();
    assert_eq!(partial.missing, vec!["classifier".to_string(), "filters".to_string()]);
    assert!(!partial.warnings.is_empty());

    for d in [Dataset::All, Dataset::Pre] {
        let r = pipeline::classify(&p, d).unwrap();
        assert_eq!(r.runs.runs.len(), 2);
    }
    pipeline::filters(&p).unwrap();
    let bundle = pipeline::report(&p).unwrap();
    assert_eq!(bundle.present().len(), 8, "missing {:?}", bundle.missing);
    assert_eq!(bundle.stamp.config_hash, p.hash);

    let json: serde_json::Value = serde_json::from_slice(&read(&p.out(&["report", "report.json"]))).unwrap();
    for name in pipeline::SECTION_NAMES {
        assert_eq!(json[name]["config_hash"], serde_json::Value::String(p.hash.clone()), "{name}");
    }
    let text = String::from_utf8(read(&p.out(&["report", "report.txt"]))).unwrap();
    assert!(text.contains(&p.hash));
}

#[test]
fn synth_and_aggregate_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let outputs = ["cohort/participants.jsonl", "cohort/posts.jsonl", "cohort/ratings.jsonl", "aggregate/all.csv"];
    for dir in [&a, &b] {
        let p = Pipeline::new(desk_config(dir.path(), 11)).unwrap();
        pipeline::synth(&p).unwrap();
        pipeline::aggregate(&p).unwrap();
    }
    for f in outputs {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }

    let c = tempfile::tempdir().unwrap();
    let p = Pipeline::new(desk_config(c.path(), 12)).unwrap();
    pipeline::synth(&p).unwrap();
    assert_ne!(read(&a.path().join(outputs[1])), read(&c.path().join(outputs[1])));
}

fn extract_fixture(dir: &Path) -> PipelineConfig {
    let participants = r#"{"id":"h1","group":"healthy","cesd_score":5}
{"id":"d1","group":"depressed","diagnosis_date":"2015-06-01","cesd_score":30}
"#;
    let mut posts = String::new();
    for i in 0..9 {
        let who = if i % 2 == 0 { "h1" } else { "d1" };
        let ext = if i % 2 == 0 { "png" } else { "jpg" };
        posts.push_str(&format!(
            r#"{{"participant_id":"{who}","timestamp":"2015-05-0{}T12:00:00Z","like_count":3,"comment_count":1,"filter":"Normal","image_path":"face_0{i}.{ext}"}}"#,
            i + 1
        ));
        posts.push('\n');
    }
    let corrupt = dir.join("corrupt.jpg");
    std::fs::write(&corrupt, b"\xff\xd8\xff not really a jpeg").unwrap();
    posts.push_str(&format!(
        r#"{{"participant_id":"d1","timestamp":"2015-05-10T12:00:00Z","like_count":0,"comment_count":0,"filter":"Inkwell","image_path":"{}"}}"#,
        corrupt.display()
    ));
    posts.push('\n');
    std::fs::write(dir.join("participants.jsonl"), participants).unwrap();
    std::fs::write(dir.join("posts.jsonl"), posts).unwrap();

    let mut c = PipelineConfig { out_dir: dir.join("out"), ..PipelineConfig::default() };
    c.inputs.participants = Some(dir.join("participants.jsonl"));
    c.inputs.posts = Some(dir.join("posts.jsonl"));
    c.inputs.images_dir = Some(fixtures().join("faces"));
    c.extract.cascade = Some(fixtures().join("frontalface_default.json"));
    c
}

#[test]
fn extract_skips_corrupt_images_and_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(extract_fixture(dir.path())).unwrap();
    let out = pipeline::extract(&p).unwrap();
    assert_eq!((out.records, out.errors, out.precomputed), (9, 1, 0));

    let posts_file = p.out(&["features", "posts.jsonl"]);
    let first = read(&posts_file);
    let errors = String::from_utf8(read(&p.out(&["features", "errors.jsonl"]))).unwrap();
    assert_eq!(errors.lines().count(), 1);
    assert!(errors.contains("d1-4"));
    let posts = depscreen::cohort::io::read_posts(&posts_file).unwrap();
    assert!(posts.iter().all(|p| p.features.is_some()));

    pipeline::extract(&p).unwrap();
    assert_eq!(first, read(&posts_file));
}

#[test]
fn extract_without_cascade_is_a_missing_resource() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = extract_fixture(dir.path());
    c.extract.cascade = Some(dir.path().join("nope.json"));
    let err = pipeline::extract(&Pipeline::new(c).unwrap()).unwrap_err();
    assert!(matches!(err, PipelineError::Missing { .. }));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn fit_fails_on_unconverged_chains() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = desk_config(dir.path(), 5);
    c.mcmc = McmcConfig { chains: 2, iterations: 60, burn_in: 10, thin: 1, seed: 0 };
    c.model.max_rhat = 1.0;
    c.model.ppc_replicates = 10;
    let p = Pipeline::new(c).unwrap();
    pipeline::synth(&p).unwrap();
    pipeline::aggregate(&p).unwrap();
    let err = pipeline::fit(&p, Dataset::All).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
    assert!(p.out(&["fit", "all.json"]).exists());
}

fn depscreen(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_depscreen")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let missing = depscreen(&["--out", out, "aggregate"]);
    assert_eq!(missing.status.code(), Some(2), "{}", String::from_utf8_lossy(&missing.stderr));

    let ok = depscreen(&["--out", out, "--seed", "4", "synth", "--spec", "desk"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("desk"));

    let bad_config = dir.path().join("bad.toml");
    std::fs::write(&bad_config, "schema_version = 1\nunknown_key = 3\n").unwrap();
    let bad = depscreen(&["--config", bad_config.to_str().unwrap(), "aggregate"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown_key"));

    std::fs::write(dir.path().join("posts.jsonl"), "{not json\n").unwrap();
    std::fs::write(dir.path().join("p.jsonl"), "").unwrap();
    let cfg = dir.path().join("broken.toml");
    std::fs::write(&cfg, "[inputs]\nparticipants = \"p.jsonl\"\nposts = \"posts.jsonl\"\n").unwrap();
    let data = depscreen(&["--config", cfg.to_str().unwrap(), "aggregate"]);
    assert_eq!(data.status.code(), Some(1), "{}", String::from_utf8_lossy(&data.stderr));

    let no_cascade = depscreen(&["--out", out, "extract"]);
    assert_eq!(no_cascade.status.code(), Some(2));
}
