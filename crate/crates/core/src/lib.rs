//! Builds question / logical-form / answer-evidence datasets from clinical
//! notes that already carry concept, relation, coreference and class
//! annotations, and provides the baselines and metrics used to evaluate them.

pub mod analysis;
pub mod baselines;
pub mod corpus;
pub mod generator;
pub mod lf;
pub mod schema;
pub mod templates;
pub mod text;

pub use corpus::{AnnotationCorpus, DateConfig, Document};
pub use generator::{generate_dataset, EvidenceSpan, GenerationReport, Generated, GeneratorConfig, QARecord, RefRangeKb};
pub use lf::{lf_equal, parse_lf, serialize_lf, LfTemplate, LogicalForm};
pub use schema::Schema;
pub use templates::{EntityRecognizer, Gazetteer, QuestionTemplate, SlotFill, TemplateSet};
