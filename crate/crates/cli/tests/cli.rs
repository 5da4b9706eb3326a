use std::path::{Path, PathBuf};
use std::process::Command;

use annoqa::baselines::{eval_answers, parse_predictions, SpanRule};
use annoqa::corpus::load_corpus;
use annoqa::generator::{generate_dataset, read_records, write_records, GeneratorConfig, RefRangeKb};
use annoqa::lf::load_lf_templates;
use annoqa::schema::load_schema;
use annoqa::templates::load_templates;
use annoqa_cli::{execute, Cli};
use clap::Parser;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_annoqa"));
    c.env_remove("ANNOQA_CONFIG");
    c
}

fn run_lib(args: &[&str]) -> String {
    let mut argv = vec!["annoqa"];
    argv.extend_from_slice(args);
    let mut out = Vec::new();
    execute(Cli::try_parse_from(argv).unwrap(), &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn input_args(f: &Path) -> Vec<String> {
    [
        ("--corpus", "corpus"),
        ("--templates", "templates.tsv"),
        ("--lf", "lf_templates.tsv"),
        ("--schema", "schema.cfg"),
        ("--kb", "kb.tsv"),
    ]
    .iter()
    .flat_map(|(k, v)| [k.to_string(), f.join(v).display().to_string()])
    .collect()
}

fn generate_into(dir: &Path) {
    let mut args: Vec<String> = vec!["generate".into()];
    args.extend(input_args(&fixtures()));
    args.extend(["--out".into(), dir.display().to_string()]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run_lib(&refs);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = bin().args(["generate", "--no-such-flag"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failures_print_one_error_line() {
    let o = bin()
        .args(["split", "--data", "/nonexistent/data.jsonl", "--out", "/tmp"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "), "{err}");
}

#[test]
fn generate_matches_library_call() {
    let dir = tempfile::tempdir().unwrap();
    generate_into(dir.path());
    let f = fixtures();
    let corpus = load_corpus(&f.join("corpus")).unwrap();
    let lfs = load_lf_templates(&f.join("lf_templates.tsv")).unwrap();
    let templates = load_templates(&f.join("templates.tsv"), &lfs).unwrap();
    let schema = load_schema(&f.join("schema.cfg")).unwrap();
    let kb = RefRangeKb::load(&f.join("kb.tsv")).unwrap();
    let g = generate_dataset(&corpus, &templates, &schema, &kb, &GeneratorConfig::default()).unwrap();
    let written = std::fs::read_to_string(dir.path().join("dataset.jsonl")).unwrap();
    assert_eq!(written, write_records(&g.records));
    assert_eq!(std::fs::read_to_string(dir.path().join("report.txt")).unwrap(), g.report.to_table());
    let audit = read_records(&std::fs::read_to_string(dir.path().join("audit.jsonl")).unwrap()).unwrap();
    assert_eq!(audit.len(), 500.min(g.records.len()));
}

#[test]
fn eval_qa_matches_library_call() {
    let dir = tempfile::tempdir().unwrap();
    generate_into(dir.path());
    let gold_path = dir.path().join("dataset.jsonl");
    let gold = read_records(&std::fs::read_to_string(&gold_path).unwrap()).unwrap();
    // Predict each record's first evidence line, or a decoy for every third.
    let mut pred = String::new();
    for (i, r) in gold.iter().enumerate() {
        if let Some(e) = r.evidences.first() {
            let text = if i % 3 == 0 { "no answer here" } else { e.line_text.as_str() };
            pred.push_str(&format!("{}\t1\t{}\n", r.record_id, text.replace('\n', " ")));
        }
    }
    let pred_path = dir.path().join("pred.tsv");
    std::fs::write(&pred_path, &pred).unwrap();
    let out = run_lib(&["eval-qa", "--pred", pred_path.to_str().unwrap(), "--gold", gold_path.to_str().unwrap()]);

    let preds = parse_predictions(&pred).unwrap();
    let p: Vec<_> = gold.iter().map(|r| preds.get(&r.record_id).cloned().unwrap_or_default()).collect();
    let g: Vec<_> = gold.iter().map(|r| r.evidences.clone()).collect();
    let s = eval_answers(&p, &g, SpanRule::Endpoints).unwrap();
    let want = format!(
        "em\t{:.6}\nf1\t{:.6}\nquestions\t{}\nskipped\t{}\n",
        s.em, s.f1, s.questions, s.skipped
    );
    assert_eq!(out, want);
    assert!(s.em > 0.0 && s.em < 1.0);
}

#[test]
fn ql1_split_files_have_disjoint_templates() {
    let dir = tempfile::tempdir().unwrap();
    generate_into(dir.path());
    let f = fixtures();
    let data = dir.path().join("dataset.jsonl");
    let out = dir.path().join("split");
    run_lib(&[
        "split",
        "--strategy",
        "ql1",
        "--ratio",
        "0.8",
        "--seed",
        "7",
        "--data",
        data.to_str().unwrap(),
        "--templates",
        f.join("templates.tsv").to_str().unwrap(),
        "--lf",
        f.join("lf_templates.tsv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let ids = |name: &str| -> std::collections::BTreeSet<String> {
        read_records(&std::fs::read_to_string(out.join(name)).unwrap())
            .unwrap()
            .into_iter()
            .map(|r| r.question_template_id)
            .collect()
    };
    let (train, test) = (ids("train.jsonl"), ids("test.jsonl"));
    assert!(!test.is_empty());
    assert!(train.is_disjoint(&test));
}

#[test]
fn config_file_supplies_paths_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures().canonicalize().unwrap();
    let cfg = dir.path().join("annoqa.toml");
    std::fs::write(
        &cfg,
        format!(
            "seed = 9\n[paths]\ncorpus = \"{}\"\ntemplates = \"{}\"\nlf = \"{}\"\nkb = \"{}\"\nout = \"gen\"\n",
            f.join("corpus").display(),
            f.join("templates.tsv").display(),
            f.join("lf_templates.tsv").display(),
            f.join("kb.tsv").display()
        ),
    )
    .unwrap();
    let o = bin().arg("generate").env("ANNOQA_CONFIG", &cfg).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("gen/dataset.jsonl").exists());
    let o = bin()
        .args(["validate", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).ends_with("ok\n"));
    std::fs::write(&cfg, "colour = \"red\"\n").unwrap();
    let o = bin().args(["validate", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_reports_template_problems() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.tsv");
    std::fs::write(&t, "Q1\tL01\tWhat is the dosage of |problem| ?\n").unwrap();
    let f = fixtures();
    let o = bin()
        .args(["validate", "--templates", t.to_str().unwrap(), "--lf"])
        .arg(f.join("lf_templates.tsv"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("problem\t"));
}

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let f = fixtures();
    let run = |root: &Path| {
        generate_into(&root.join("gen"));
        let data = root.join("gen/dataset.jsonl");
        run_lib(&[
            "split",
            "--data",
            data.to_str().unwrap(),
            "--out",
            root.join("split").to_str().unwrap(),
        ]);
        run_lib(&[
            "analyze",
            "--data",
            data.to_str().unwrap(),
            "--corpus",
            f.join("corpus").to_str().unwrap(),
            "--templates",
            f.join("templates.tsv").to_str().unwrap(),
            "--lf",
            f.join("lf_templates.tsv").to_str().unwrap(),
            "--out",
            root.join("analysis").to_str().unwrap(),
        ]);
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path());
    run(b.path());
    for rel in [
        "gen/dataset.jsonl",
        "gen/report.json",
        "gen/audit.jsonl",
        "split/train.jsonl",
        "split/test.jsonl",
        "analysis/analysis.json",
        "analysis/analysis.txt",
    ] {
        let x = std::fs::read(a.path().join(rel)).unwrap();
        let y = std::fs::read(b.path().join(rel)).unwrap();
        assert!(x == y, "{rel} differs");
    }
}
