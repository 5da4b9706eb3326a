//! Annotated clinical corpora: data model, annotation formats, loading and a
//! synthetic fixture generator.

mod annfmt;
mod dates;
mod load;
mod model;
mod synth;

pub use annfmt::{parse_concept_line, AnnLine, AnnParseError, MentionRef, Position};
pub use dates::{find_date, parse_date, DateConfig};
pub use load::{load_corpus, load_corpus_with, LoadError};
pub use model::{
    AnnotationCorpus, AttributeAnn, ClassAnn, ConceptAnn, CorefChain, CorpusBuilder, Document,
    RelationAnn, Violation,
};
pub use synth::{synth_corpus, synth_kb, write_synth_corpus, SynthParams, SOURCES};
