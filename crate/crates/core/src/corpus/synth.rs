//! Deterministic synthetic corpus standing in for licensed clinical data.
//!
//! Every note carries medication lines with dosages, dated lab lines and,
//! depending on the patient's source tag, relation lines with coreference
//! chains, BMI lines or social-history lines together with document labels.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::load::{load_corpus, LoadError};
use super::model::AnnotationCorpus;

pub const SOURCES: &[&str] = &["relations", "medications", "heart-disease", "obesity", "smoking"];

const MEDICATIONS: &[&str] = &[
    "Nitroglycerin",
    "Lisinopril",
    "Metformin",
    "Atorvastatin",
    "Warfarin",
    "Furosemide",
    "Aspirin",
    "Metoprolol",
    "Iron",
    "Glipizide",
];
const DOSES: &[&str] = &["40mg", "10 mg", "500 mg", "0.4 mg", "81 mg", "25 mg", "5 mg", "325 mg"];
const ROUTES: &[&str] = &["p.o. daily", "p.o. b.i.d.", "daily", "q.h.s."];
/// Lab name, low and high reference values, typical range for sampling.
const LABS: &[(&str, f64, f64)] = &[
    ("HBA1C", 4.0, 5.6),
    ("LDL", 0.0, 100.0),
    ("HDL", 40.0, 60.0),
    ("TG", 0.0, 150.0),
    ("gluc", 70.0, 110.0),
    ("creatinine", 0.6, 1.2),
    ("potassium", 3.5, 5.0),
];
const IMAGING: &[&str] = &["echocardiogram", "chest x-ray", "CT scan", "stress test"];
const PROBLEMS: &[&str] = &[
    "hypertension",
    "chest pain",
    "diabetes",
    "anemia",
    "pneumonia",
    "atrial fibrillation",
    "dyspnea",
    "cardiomegaly",
];
const PROCEDURES: &[&str] = &[
    "ascending aortic root replacement",
    "cardiac catheterization",
    "colonoscopy",
    "heparin drip",
    "ffp",
    "diuresis",
];
const HEADERS: &[&str] = &["CARDIOLOGY CLINIC NOTE", "DISCHARGE SUMMARY", "PRIMARY CARE VISIT"];
const COMORBIDITIES: &[&str] = &["Diabetes", "Hypertension", "Hypercholesterolemia", "CAD"];
const SMOKING: &[(&str, &str)] = &[
    ("Current smoker", "smokes one pack per day"),
    ("Past smoker", "quit tobacco ten years ago"),
    ("Non-smoker", "denies tobacco use"),
];

/// Size parameters for [`synth_corpus`].
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SynthParams {
    pub patients: usize,
    pub notes_per_patient: usize,
    pub meds_per_note: usize,
    pub labs_per_note: usize,
    /// Relation lines per note for relation-bearing sources; 0 disables
    /// relations and coreference entirely.
    pub relations_per_note: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            patients: 12,
            notes_per_patient: 3,
            meds_per_note: 2,
            labs_per_note: 2,
            relations_per_note: 2,
        }
    }
}

/// Annotation files for one note, built line by line.
#[derive(Default)]
struct Note {
    lines: Vec<String>,
    con: Vec<String>,
    att: Vec<String>,
    rel: Vec<String>,
    chains: Vec<String>,
}

/// A mention placed on a note line: text, line, first and last token.
#[derive(Clone)]
struct Placed {
    text: String,
    line: usize,
    start: usize,
    end: usize,
}

impl Placed {
    fn c(&self) -> String {
        format!(
            "c=\"{}\" {}:{} {}:{}",
            self.text.to_lowercase(),
            self.line,
            self.start,
            self.line,
            self.end
        )
    }
}

impl Note {
    /// Appends a line assembled from segments; returns the placement of each
    /// segment so annotations can address them.
    fn push(&mut self, segments: &[&str]) -> Vec<Placed> {
        let line = self.lines.len() + 1;
        let mut placed = Vec::new();
        let mut tok = 0;
        for s in segments {
            let n = s.split_whitespace().count();
            placed.push(Placed {
                text: (*s).to_string(),
                line,
                start: tok,
                end: (tok + n).saturating_sub(1),
            });
            tok += n;
        }
        self.lines.push(segments.join(" "));
        placed
    }

    fn concept(&mut self, p: &Placed, ty: &str) {
        self.con.push(format!("{}||t=\"{ty}\"", p.c()));
    }

    fn attribute(&mut self, owner: &Placed, ty: &str, name: &str, value: &Placed) {
        self.att.push(format!(
            "{}||t=\"{ty}\"||a=\"{name}\"=\"{}\" {}:{} {}:{}",
            owner.c(),
            value.text,
            value.line,
            value.start,
            value.line,
            value.end
        ));
    }

    fn relation(&mut self, head: &Placed, ty: &str, tail: &Placed) {
        self.rel
            .push(format!("{}||r=\"{ty}\"||{}", head.c(), tail.c()));
    }

    fn chain(&mut self, members: &[&Placed], ty: &str) {
        let cs: Vec<String> = members.iter().map(|m| m.c()).collect();
        self.chains
            .push(format!("{}||t=\"coref_{ty}\"", cs.join("||")));
    }
}

fn us_date(d: NaiveDate) -> String {
    d.format("%m/%d/%Y").to_string()
}

fn lab_value<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> String {
    let span = hi - lo;
    let v = lo + span * rng.gen_range(0.3..1.6);
    if hi < 10.0 {
        format!("{v:.2}")
    } else {
        format!("{}", v.round() as i64)
    }
}

struct PatientPlan<'a> {
    source: &'a str,
    index: usize,
}

fn write_note<R: Rng>(
    rng: &mut R,
    params: &SynthParams,
    plan: &PatientPlan<'_>,
    note_no: usize,
    date: NaiveDate,
) -> (Note, Vec<(String, String)>) {
    let mut note = Note::default();
    let mut classes = Vec::new();
    let literal_labs = plan.source == "heart-disease" && plan.index == 2 && note_no == 0;
    let date = if literal_labs {
        NaiveDate::from_ymd_opt(2115, 12, 16).expect("valid date")
    } else {
        date
    };
    note.push(&[&format!("Record Date: {}", date.format("%Y-%m-%d"))]);
    note.push(&[HEADERS.choose(rng).expect("non-empty")]);

    note.push(&["Medications :"]);
    for med in MEDICATIONS.choose_multiple(rng, params.meds_per_note) {
        let dose = DOSES.choose(rng).expect("non-empty");
        let route = ROUTES.choose(rng).expect("non-empty");
        let stop = rng.gen_bool(0.25);
        let with_dose = rng.gen_bool(0.8);
        let stopped = us_date(date - Duration::days(rng.gen_range(1..30)));
        let p = if stop {
            note.push(&[med, dose, route, ", discontinued", &stopped])
        } else {
            note.push(&[med, dose, route])
        };
        note.concept(&p[0], "medication");
        if with_dose {
            note.attribute(&p[0], "medication", "dosage", &p[1]);
        }
        if stop {
            note.attribute(&p[0], "medication", "enddate", &p[4]);
        }
    }

    note.push(&["Labs :"]);
    if literal_labs {
        let a1c = note.push(&["HBA1C", "12/14/2115", "11.80"]);
        note.concept(&a1c[0], "test");
        note.attribute(&a1c[0], "test", "date", &a1c[1]);
        note.attribute(&a1c[0], "test", "result", &a1c[2]);
        let panel = note.push(&["gluc", "192,", "LDL", "115,", "TG", "71,", "HDL", "36"]);
        for i in [0, 2, 4, 6] {
            note.concept(&panel[i], "test");
        }
    }
    for (name, lo, hi) in LABS.choose_multiple(rng, params.labs_per_note) {
        let when = us_date(date - Duration::days(rng.gen_range(0..5)));
        let value = lab_value(rng, *lo, *hi);
        let p = note.push(&[name, &when, &value]);
        note.concept(&p[0], "test");
        note.attribute(&p[0], "test", "date", &p[1]);
        note.attribute(&p[0], "test", "result", &p[2]);
    }

    let with_relations = params.relations_per_note > 0 && plan.source != "medications";
    if with_relations {
        note.push(&["Hospital course :"]);
        for k in 0..params.relations_per_note {
            let problem = PROBLEMS.choose(rng).expect("non-empty");
            match (k + note_no + plan.index) % 3 {
                0 => {
                    let proc = PROCEDURES.choose(rng).expect("non-empty");
                    let p = note.push(&[proc, "was given for", problem, "."]);
                    note.concept(&p[0], "treatment");
                    note.concept(&p[2], "problem");
                    note.relation(&p[0], "TrAP", &p[2]);
                }
                1 => {
                    let test = IMAGING.choose(rng).expect("non-empty");
                    let p = note.push(&[test, "revealed", problem, "."]);
                    note.concept(&p[0], "test");
                    note.concept(&p[2], "problem");
                    note.relation(&p[0], "TeRP", &p[2]);
                }
                _ => {
                    let proc = PROCEDURES.choose(rng).expect("non-empty");
                    let first = note.push(&["Underwent", proc, "without complication ."]);
                    let (outcome, rel) = if rng.gen_bool(0.5) {
                        ("improved", "TrIP")
                    } else {
                        ("worsened", "TrWP")
                    };
                    let second = note.push(&[
                        "The patient tolerated",
                        "the procedure",
                        "fairly well and",
                        problem,
                        outcome,
                        ".",
                    ]);
                    note.concept(&first[1], "treatment");
                    note.concept(&second[1], "treatment");
                    note.concept(&second[3], "problem");
                    note.relation(&second[1], rel, &second[3]);
                    note.chain(&[&first[1], &second[1]], "treatment");
                }
            }
        }
    }

    let labelled = note_no + 1 < params.notes_per_patient.max(2);
    match plan.source {
        "obesity" => {
            let bmi: f64 = rng.gen_range(22.0..41.0);
            let obese = bmi >= 30.0;
            let status = if obese { "Obese, high risk" } else { "Not obese" };
            note.push(&[&format!("BMI: {bmi:.1}  {status}")]);
            if labelled {
                classes.push(("obesity".into(), if obese { "Yes" } else { "No" }.into()));
                let n = rng.gen_range(1..=3);
                let mut labels: Vec<&str> = COMORBIDITIES.choose_multiple(rng, n).copied().collect();
                labels.sort_unstable();
                classes.push(("comorbidity".into(), labels.join(",")));
            }
        }
        "smoking" => {
            let (label, phrase) = SMOKING.choose(rng).expect("non-empty");
            note.push(&["Social history : patient", phrase, "."]);
            if labelled {
                classes.push(("smoking".into(), (*label).to_string()));
            }
        }
        _ => {}
    }
    note.push(&["Plan : follow up in clinic ."]);
    (note, classes)
}

/// Writes a corpus directory under `out` and loads it back.
pub fn synth_corpus(
    seed: u64,
    params: &SynthParams,
    out: &Path,
) -> Result<AnnotationCorpus, LoadError> {
    write_synth_corpus(seed, params, out).map_err(|source| LoadError::Io {
        path: out.display().to_string(),
        source,
    })?;
    load_corpus(out)
}

/// Writes the synthetic corpus files; same seed and params give identical
/// bytes.
pub fn write_synth_corpus(seed: u64, params: &SynthParams, out: &Path) -> io::Result<()> {
    if params.patients == 0 || params.notes_per_patient == 0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "patients and notes_per_patient must be positive",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fs::create_dir_all(out.join("docs"))?;
    fs::create_dir_all(out.join("ann"))?;
    let mut patients = String::new();
    let mut classes = String::new();
    let base = NaiveDate::from_ymd_opt(2110, 1, 1).expect("valid date");
    for p in 0..params.patients {
        let plan = PatientPlan {
            source: SOURCES[p % SOURCES.len()],
            index: p,
        };
        let pid = format!("p{:03}", p + 1);
        let mut date = base + Duration::days(rng.gen_range(0..1500));
        for n in 0..params.notes_per_patient {
            let doc = format!("{pid}-n{}", n + 1);
            let (note, labels) = write_note(&mut rng, params, &plan, n, date);
            date += Duration::days(rng.gen_range(60..200));
            let mut text = note.lines.join("\n");
            text.push('\n');
            fs::write(out.join("docs").join(format!("{doc}.txt")), text)?;
            for (ext, body) in [
                ("con", &note.con),
                ("att", &note.att),
                ("rel", &note.rel),
                ("chains", &note.chains),
            ] {
                if !body.is_empty() {
                    let mut s = body.join("\n");
                    s.push('\n');
                    fs::write(out.join("ann").join(format!("{doc}.{ext}")), s)?;
                }
            }
            writeln!(patients, "{pid}\t{doc}\t{}", plan.source).expect("string write");
            for (task, label) in labels {
                writeln!(classes, "{doc}\t{task}\t{label}").expect("string write");
            }
        }
    }
    fs::write(out.join("patients.tsv"), patients)?;
    fs::write(out.join("classes.tsv"), classes)?;
    Ok(())
}

/// Reference ranges matching the synthetic labs, in the KB file format.
pub fn synth_kb() -> String {
    let mut s = String::from("# lab\treflow\trefhigh\tunit\n");
    for (name, lo, hi) in LABS {
        let unit = match *name {
            "HBA1C" => "%",
            "creatinine" => "mg/dl",
            "potassium" => "mmol/l",
            _ => "mg/dl",
        };
        writeln!(s, "{name}\t{lo}\t{hi}\t{unit}").expect("string write");
    }
    s
}
