use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use annoqa::analysis::{corpus_stats, paraphrase_diversity, template_groups, BleuVariant, DatasetStats, DiversityReport};
use annoqa::baselines::{
    eval_answers, eval_ql_accuracy, format_predictions, oracle_lexicon, parse_predictions, predict_cls,
    predict_records, split_dataset, subset_accuracy, thin_lexicon, train_cls, ClsParams, HmMode, RankedPrediction,
    SentenceMode, SpanRule, SplitSpec, SplitStrategy, TemplateMatcher, WordVectors,
};
use annoqa::corpus::{load_corpus_with, write_synth_corpus, synth_kb, SynthParams};
use annoqa::generator::{audit_sample, read_records, write_records};
use annoqa::lf::{load_lf_templates, parse_lf};
use annoqa::schema::load_schema;
use annoqa::templates::{load_templates, validate_templates};
use annoqa::text::lower_words;
use annoqa::{generate_dataset, AnnotationCorpus, Gazetteer, QARecord, RefRangeKb, Schema, TemplateSet};
use anyhow::{bail, Context, Result};
use serde::Serialize;

use crate::config::{optional, require, RunConfig};
use crate::{Cli, Command, InputArgs};

/// Runs a parsed command, writing its summary to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cfg.seed(cli.seed);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        anyhow::ensure!(n > 0, "--jobs must be positive");
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker threads")?;
    let mut buf: Vec<u8> = Vec::new();
    let res = pool.install(|| dispatch(cli.command, &cfg, seed, &mut buf));
    out.write_all(&buf)?;
    res
}

fn dispatch(command: Command, cfg: &RunConfig, seed: u64, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Generate { input, out: dir, strict } => generate(&input, dir, strict, cfg, seed, out),
        Command::Split {
            data,
            strategy,
            ratio,
            input,
            out: dir,
        } => split(&data, strategy, ratio, &input, dir, cfg, seed, out),
        Command::Analyze {
            data,
            input,
            bleu,
            out: dir,
        } => analyze(&data, &input, bleu, dir, cfg, seed, out),
        Command::EvalQl {
            gold,
            pred,
            train,
            matcher,
            vectors,
            sif,
            lexicon,
            drop_lexicon,
            input,
            write_pred,
        } => {
            let gold_records = read_dataset(&gold)?;
            match pred {
                Some(p) => eval_ql_file(&p, &gold_records, out),
                None => {
                    let Some(train) = train else {
                        bail!("eval-ql needs --pred or --train");
                    };
                    let opts = MatchOptions {
                        matcher,
                        vectors,
                        sif,
                        lexicon,
                        drop_lexicon,
                    };
                    eval_ql_matcher(&train, &gold_records, &opts, &input, write_pred, cfg, seed, out)
                }
            }
        }
        Command::EvalQa { pred, gold, em_rule } => eval_qa(&pred, &gold, em_rule, cfg, out),
        Command::EvalCls {
            train,
            test,
            epochs,
            learning_rate,
            l2,
            write_pred,
        } => {
            let params = ClsParams {
                learning_rate,
                l2,
                epochs,
            };
            eval_cls(&train, &test, params, write_pred, out)
        }
        Command::Synth {
            out: dir,
            patients,
            notes_per_patient,
            templates,
            dim,
        } => synth(&dir, patients, notes_per_patient, templates.as_deref(), dim, seed, out),
        Command::Validate { input } => validate(&input, cfg, out),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn out_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = flag
        .or_else(|| cfg.paths.out.clone())
        .context("--out is required")?;
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn read_dataset(path: &Path) -> Result<Vec<QARecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    read_records(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn load_corpus(input: &InputArgs, cfg: &RunConfig) -> Result<AnnotationCorpus> {
    let p = require(&input.corpus, &cfg.paths.corpus, "corpus")?;
    Ok(load_corpus_with(&p, cfg.generator.dates)?)
}

fn load_template_set(input: &InputArgs, cfg: &RunConfig) -> Result<TemplateSet> {
    let t = require(&input.templates, &cfg.paths.templates, "templates")?;
    let l = require(&input.lf, &cfg.paths.lf, "lf")?;
    let lfs = load_lf_templates(&l)?;
    Ok(load_templates(&t, &lfs)?)
}

fn optional_templates(input: &InputArgs, cfg: &RunConfig) -> Result<Option<TemplateSet>> {
    if input.templates.is_none() && cfg.paths.templates.is_none() {
        return Ok(None);
    }
    load_template_set(input, cfg).map(Some)
}

fn load_schema_or_default(input: &InputArgs, cfg: &RunConfig) -> Result<Schema> {
    match optional(&input.schema, &cfg.paths.schema, "schema")? {
        Some(p) => Ok(load_schema(&p)?),
        None => Ok(Schema::default_schema()),
    }
}

fn load_kb(input: &InputArgs, cfg: &RunConfig) -> Result<RefRangeKb> {
    match optional(&input.kb, &cfg.paths.kb, "kb")? {
        Some(p) => Ok(RefRangeKb::load(&p)?),
        None => Ok(RefRangeKb::new()),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn generate(
    input: &InputArgs,
    dir: Option<PathBuf>,
    strict: bool,
    cfg: &RunConfig,
    seed: u64,
    out: &mut dyn Write,
) -> Result<()> {
    let corpus = load_corpus(input, cfg)?;
    let templates = load_template_set(input, cfg)?;
    let schema = load_schema_or_default(input, cfg)?;
    let kb = load_kb(input, cfg)?;
    let dir = out_dir(dir, cfg)?;
    let mut gen_cfg = cfg.generator.clone();
    gen_cfg.seed = seed;
    let g = generate_dataset(&corpus, &templates, &schema, &kb, &gen_cfg)?;
    write_file(&dir.join("dataset.jsonl"), &write_records(&g.records))?;
    let table = g.report.to_table();
    write_file(&dir.join("report.txt"), &table)?;
    write_file(&dir.join("report.json"), &to_json(&g.report))?;
    let sample: Vec<QARecord> = audit_sample(&g.records, gen_cfg.audit_sample, seed)
        .into_iter()
        .cloned()
        .collect();
    write_file(&dir.join("audit.jsonl"), &write_records(&sample))?;
    out.write_all(table.as_bytes())?;
    if (strict || cfg.strict.unwrap_or(false)) && g.report.integrity_violations > 0 {
        bail!("{} evidence integrity violations", g.report.integrity_violations);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn split(
    data: &Path,
    strategy: Option<String>,
    ratio: Option<f64>,
    input: &InputArgs,
    dir: Option<PathBuf>,
    cfg: &RunConfig,
    seed: u64,
    out: &mut dyn Write,
) -> Result<()> {
    let strategy = match strategy {
        Some(s) => s.parse::<SplitStrategy>().map_err(anyhow::Error::msg)?,
        None => cfg.split.strategy.unwrap_or(SplitStrategy::Ql2),
    };
    let spec = SplitSpec {
        strategy,
        ratio: ratio.or(cfg.split.ratio).unwrap_or(0.8),
        seed,
    };
    let records = read_dataset(data)?;
    let templates = match strategy {
        SplitStrategy::Ql1 => load_template_set(input, cfg)?,
        _ => optional_templates(input, cfg)?.unwrap_or_default(),
    };
    let s = split_dataset(&records, &templates, spec)?;
    let dir = out_dir(dir, cfg)?;
    write_file(&dir.join("train.jsonl"), &write_records(&s.train))?;
    write_file(&dir.join("test.jsonl"), &write_records(&s.test))?;
    writeln!(out, "train\t{}", s.train.len())?;
    writeln!(out, "test\t{}", s.test.len())?;
    for w in &s.warnings {
        writeln!(out, "warning\t{w}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Analysis {
    stats: DatasetStats,
    diversity: Option<DiversityReport>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn analysis_table(a: &Analysis) -> String {
    let s = &a.stats;
    let mut t = String::new();
    for (k, v) in [
        ("question length", s.question_len),
        ("evidence length", s.evidence_len),
        ("logical form length", s.lf_len),
        ("note length", s.note_len),
        ("evidences per question", s.evidences_per_question),
        ("questions per note", s.questions_per_note),
    ] {
        writeln!(t, "{k:<24}{}", fmt_opt(v)).unwrap();
    }
    writeln!(t).unwrap();
    writeln!(t, "{:<16}{:>8}{:>10}{:>7}", "source", "records", "answered", "notes").unwrap();
    for (src, c) in &s.per_source {
        writeln!(t, "{src:<16}{:>8}{:>10}{:>7}", c.records, c.answered, c.notes).unwrap();
    }
    if let Some(d) = &a.diversity {
        writeln!(t).unwrap();
        let ms = |m: Option<annoqa::analysis::MeanStd>| {
            m.map_or_else(|| "-".into(), |m| format!("{:.4} ± {:.4}", m.mean, m.std))
        };
        writeln!(t, "paraphrase groups scored  {}", d.groups.len()).unwrap();
        writeln!(t, "BLEU                      {}", ms(d.bleu)).unwrap();
        writeln!(t, "Jaccard                   {}", ms(d.jaccard)).unwrap();
    }
    t
}

fn analyze(
    data: &Path,
    input: &InputArgs,
    bleu: Option<String>,
    dir: Option<PathBuf>,
    cfg: &RunConfig,
    seed: u64,
    out: &mut dyn Write,
) -> Result<()> {
    let variant = match bleu.as_deref() {
        None => cfg.bleu.unwrap_or_default(),
        Some("smoothed") => BleuVariant::Smoothed,
        Some("unsmoothed") => BleuVariant::Unsmoothed,
        Some(other) => bail!("unknown BLEU variant {other:?} (expected smoothed or unsmoothed)"),
    };
    let records = read_dataset(data)?;
    let corpus = load_corpus(input, cfg)?;
    let diversity = optional_templates(input, cfg)?.map(|t| paraphrase_diversity(&template_groups(&t), seed, variant));
    let a = Analysis {
        stats: corpus_stats(&records, &corpus),
        diversity,
    };
    let table = analysis_table(&a);
    match dir.or_else(|| cfg.paths.out.clone()) {
        Some(d) => {
            let d = out_dir(Some(d), cfg)?;
            write_file(&d.join("analysis.txt"), &table)?;
            write_file(&d.join("analysis.json"), &to_json(&a))?;
            out.write_all(table.as_bytes())?;
        }
        None => out.write_all(table.as_bytes())?,
    }
    Ok(())
}

fn eval_ql_file(pred: &Path, gold: &[QARecord], out: &mut dyn Write) -> Result<()> {
    let text = fs::read_to_string(pred).with_context(|| format!("reading {}", pred.display()))?;
    let preds = parse_predictions(&text)?;
    let predicted: Vec<_> = gold
        .iter()
        .map(|r| {
            preds
                .get(&r.record_id)
                .and_then(|v| v.first())
                .and_then(|p| parse_lf(&p.text).ok())
        })
        .collect();
    let gold_lfs: Vec<_> = gold.iter().map(|r| r.lf.clone()).collect();
    let acc = eval_ql_accuracy(&predicted, &gold_lfs)?;
    writeln!(out, "accuracy\t{acc:.6}")?;
    writeln!(out, "questions\t{}", gold.len())?;
    writeln!(out, "predicted\t{}", predicted.iter().filter(|p| p.is_some()).count())?;
    Ok(())
}

struct MatchOptions {
    matcher: Option<String>,
    vectors: Option<PathBuf>,
    sif: bool,
    lexicon: Option<String>,
    drop_lexicon: f64,
}

#[allow(clippy::too_many_arguments)]
fn eval_ql_matcher(
    train_path: &Path,
    gold: &[QARecord],
    opts: &MatchOptions,
    input: &InputArgs,
    write_pred: Option<PathBuf>,
    cfg: &RunConfig,
    seed: u64,
    out: &mut dyn Write,
) -> Result<()> {
    let mode = match &opts.matcher {
        Some(m) => m.parse::<HmMode>().map_err(anyhow::Error::msg)?,
        None => HmMode::Hm1,
    };
    anyhow::ensure!(
        (0.0..=1.0).contains(&opts.drop_lexicon),
        "--drop-lexicon must lie in [0, 1]"
    );
    let train = read_dataset(train_path)?;
    let all = load_template_set(input, cfg)?;
    let ids: BTreeSet<String> = train.iter().map(|r| r.question_template_id.clone()).collect();
    let train_templates = all.subset(&ids);
    let lexicon = match opts.lexicon.as_deref().unwrap_or("fills") {
        "fills" => {
            let mut both = train.clone();
            both.extend_from_slice(gold);
            oracle_lexicon(&both)
        }
        "corpus" => Gazetteer::from_corpus(&load_corpus(input, cfg)?),
        other => bail!("unknown lexicon {other:?} (expected fills or corpus)"),
    };
    let lexicon = thin_lexicon(&lexicon, opts.drop_lexicon, seed);
    let vectors;
    let sentence = if opts.sif || cfg.sif.unwrap_or(false) {
        SentenceMode::Sif
    } else {
        SentenceMode::Mean
    };
    let matcher = match mode {
        HmMode::Hm1 => TemplateMatcher::hm1(&train_templates),
        HmMode::Hm2 => {
            let p = require(&opts.vectors, &cfg.paths.vectors, "vectors")?;
            vectors = WordVectors::load(&p)?;
            TemplateMatcher::hm2(&train_templates, &vectors, sentence)
        }
    };
    let results = predict_records(&matcher, &lexicon, gold);
    let predicted: Vec<_> = results.iter().map(|r| r.as_ref().ok().map(|p| p.lf.clone())).collect();
    let gold_lfs: Vec<_> = gold.iter().map(|r| r.lf.clone()).collect();
    let acc = eval_ql_accuracy(&predicted, &gold_lfs)?;
    if let Some(p) = write_pred {
        let lists: Vec<(String, Vec<RankedPrediction>)> = gold
            .iter()
            .zip(&results)
            .filter_map(|(r, res)| {
                res.as_ref()
                    .ok()
                    .map(|p| (r.record_id.clone(), vec![RankedPrediction::text(p.lf.to_string())]))
            })
            .collect();
        write_file(&p, &format_predictions(lists.iter().map(|(k, v)| (k.as_str(), v.as_slice()))))?;
    }
    let mut reasons: BTreeMap<&'static str, usize> = BTreeMap::new();
    for e in results.iter().filter_map(|r| r.as_ref().err()) {
        let k = match e {
            annoqa::baselines::NoMatch::NotFound(_) => "no matching template",
            annoqa::baselines::NoMatch::NoKnownTokens(_) => "no known tokens",
            annoqa::baselines::NoMatch::Empty => "no train templates",
            annoqa::baselines::NoMatch::Fill { .. } => "entities do not fit the LF",
        };
        *reasons.entry(k).or_default() += 1;
    }
    writeln!(out, "matcher\t{}", if mode == HmMode::Hm1 { "hm1" } else { "hm2" })?;
    if mode == HmMode::Hm2 {
        writeln!(out, "sentence\t{}", if sentence == SentenceMode::Sif { "sif" } else { "mean" })?;
    }
    writeln!(out, "accuracy\t{acc:.6}")?;
    writeln!(out, "questions\t{}", gold.len())?;
    writeln!(out, "lexicon entries\t{}", lexicon.len())?;
    for (k, n) in reasons {
        writeln!(out, "unmatched: {k}\t{n}")?;
    }
    Ok(())
}

fn eval_qa(pred: &Path, gold: &Path, em_rule: Option<String>, cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let rule = match em_rule.as_deref() {
        None => cfg.em_rule.unwrap_or_default(),
        Some("endpoints") => SpanRule::Endpoints,
        Some("window") => SpanRule::Window,
        Some(other) => bail!("unknown EM rule {other:?} (expected endpoints or window)"),
    };
    let text = fs::read_to_string(pred).with_context(|| format!("reading {}", pred.display()))?;
    let preds = parse_predictions(&text)?;
    let gold = read_dataset(gold)?;
    let (p, g) = qa_inputs(&preds, &gold);
    let s = eval_answers(&p, &g, rule)?;
    writeln!(out, "em\t{:.6}", s.em)?;
    writeln!(out, "f1\t{:.6}", s.f1)?;
    writeln!(out, "questions\t{}", s.questions)?;
    writeln!(out, "skipped\t{}", s.skipped)?;
    Ok(())
}

/// Aligns predictions with gold records; records without predictions get
/// an empty list.
pub fn qa_inputs(
    preds: &BTreeMap<String, Vec<RankedPrediction>>,
    gold: &[QARecord],
) -> (Vec<Vec<RankedPrediction>>, Vec<Vec<annoqa::EvidenceSpan>>) {
    gold.iter()
        .map(|r| (preds.get(&r.record_id).cloned().unwrap_or_default(), r.evidences.clone()))
        .unzip()
}

fn cls_examples(records: &[QARecord]) -> BTreeMap<String, Vec<(&QARecord, String, BTreeSet<String>)>> {
    let mut m: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for r in records {
        let (Some(labels), Some(doc)) = (&r.answer_class, r.evidences.first()) else {
            continue;
        };
        let text = annoqa::baselines::cls_input(&r.question, &doc.line_text);
        m.entry(r.lf_template_id.clone())
            .or_default()
            .push((r, text, labels.iter().cloned().collect()));
    }
    m
}

fn eval_cls(
    train: &Path,
    test: &Path,
    params: ClsParams,
    write_pred: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let train = read_dataset(train)?;
    let test = read_dataset(test)?;
    let train_ex = cls_examples(&train);
    let test_ex = cls_examples(&test);
    anyhow::ensure!(!test_ex.is_empty(), "no class records in the test file");
    let (mut all_pred, mut all_gold) = (Vec::new(), Vec::new());
    let mut pred_lines: Vec<(String, Vec<RankedPrediction>)> = Vec::new();
    writeln!(out, "{:<10}{:>8}{:>8}{:>10}", "question", "train", "test", "accuracy")?;
    for (lf_id, items) in &test_ex {
        let pairs: Vec<(String, BTreeSet<String>)> = train_ex
            .get(lf_id)
            .map(|v| v.iter().map(|(_, t, l)| (t.clone(), l.clone())).collect())
            .unwrap_or_default();
        let model = if pairs.is_empty() {
            log::warn!("no training records for {lf_id}; its test records count as wrong");
            None
        } else {
            Some(train_cls(&pairs, params)?)
        };
        let (mut pred, mut gold) = (Vec::new(), Vec::new());
        for (r, _, labels) in items {
            let doc = &r.evidences[0].line_text;
            let p = model
                .as_ref()
                .map(|m| predict_cls(m, &r.question, doc))
                .unwrap_or_default();
            let joined: Vec<&str> = p.iter().map(String::as_str).collect();
            pred_lines.push((r.record_id.clone(), vec![RankedPrediction::text(joined.join(","))]));
            pred.push(p);
            gold.push(labels.clone());
        }
        let acc = subset_accuracy(&pred, &gold)?;
        writeln!(out, "{lf_id:<10}{:>8}{:>8}{acc:>10.4}", pairs.len(), items.len())?;
        all_pred.extend(pred);
        all_gold.extend(gold);
    }
    writeln!(out, "subset accuracy\t{:.6}", subset_accuracy(&all_pred, &all_gold)?)?;
    if let Some(p) = write_pred {
        pred_lines.sort_by(|a, b| a.0.cmp(&b.0));
        write_file(&p, &format_predictions(pred_lines.iter().map(|(k, v)| (k.as_str(), v.as_slice()))))?;
    }
    Ok(())
}

/// Question texts of a template file, without resolving LF ids.
fn template_texts(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split('\t').nth(2).map(str::to_string))
        .collect())
}

fn synth(
    dir: &Path,
    patients: usize,
    notes_per_patient: usize,
    templates: Option<&Path>,
    dim: usize,
    seed: u64,
    out: &mut dyn Write,
) -> Result<()> {
    let params = SynthParams {
        patients,
        notes_per_patient,
        ..SynthParams::default()
    };
    write_synth_corpus(seed, &params, &dir.join("corpus")).with_context(|| format!("writing {}", dir.display()))?;
    write_file(&dir.join("kb.tsv"), &synth_kb())?;
    writeln!(out, "corpus\t{}", dir.join("corpus").display())?;
    if let Some(t) = templates {
        anyhow::ensure!(dim > 0, "--dim must be positive");
        let tokens: Vec<String> = template_texts(t)?.iter().flat_map(|s| lower_words(s)).collect();
        let v = WordVectors::synthetic(&tokens, dim, seed);
        write_file(&dir.join("vectors.txt"), &v.to_text())?;
        writeln!(out, "vectors\t{} tokens x {dim}", v.len())?;
    }
    Ok(())
}

fn validate(input: &InputArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let mut problems: Vec<String> = Vec::new();
    let schema = load_schema_or_default(input, cfg)?;
    if let Some(p) = optional(&input.kb, &cfg.paths.kb, "kb")? {
        match RefRangeKb::load(&p) {
            Ok(kb) => writeln!(out, "kb entries\t{}", kb.len())?,
            Err(e) => problems.push(format!("kb: {e}")),
        }
    }
    if input.corpus.is_some() || cfg.paths.corpus.is_some() {
        let corpus = load_corpus(input, cfg)?;
        writeln!(out, "documents\t{}", corpus.documents().len())?;
        writeln!(out, "concepts\t{}", corpus.concepts().len())?;
        writeln!(out, "relations\t{}", corpus.relations().len())?;
        writeln!(out, "coreference chains\t{}", corpus.chains().len())?;
        problems.extend(corpus.violations().iter().map(|v| format!("corpus: {v}")));
    }
    if input.templates.is_some() || cfg.paths.templates.is_some() {
        match load_template_set(input, cfg) {
            Ok(set) => {
                writeln!(out, "question templates\t{}", set.len())?;
                writeln!(out, "LF templates\t{}", set.lf_count())?;
                problems.extend(validate_templates(&set, &schema).into_iter().map(|p| format!("templates: {p}")));
            }
            Err(e) => problems.push(format!("templates: {e:#}")),
        }
    }
    for p in &problems {
        writeln!(out, "problem\t{p}")?;
    }
    if !problems.is_empty() {
        bail!("{} problems found", problems.len());
    }
    writeln!(out, "ok")?;
    Ok(())
}
