//! Dataset generation: fills templates from corpus annotations and extracts
//! answer evidence.

mod engine;
mod kb;
mod operators;
mod preprocess;
mod record;
mod report;

pub use engine::{
    answers_by_attribute, answers_by_class, answers_by_relation, generate_dataset, GenerateError,
    Generated, GeneratorConfig, Strategy,
};
pub use kb::{KbError, MissingKbEntry, RefRange, RefRangeKb};
pub use operators::{eval_operator, FieldKind, OperatorCandidate, OperatorError, OperatorOutcome};
pub use preprocess::{preprocess_entity, EmptyEntity};
pub use record::{check_evidence_integrity, read_records, write_records, EvidenceSpan, QARecord};
pub use report::{audit_sample, GenerationReport, SourceRow, StrategyCounts};
