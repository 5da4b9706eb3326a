//! Dataset statistics and paraphrase diversity.

mod diversity;
mod similarity;
mod stats;

pub use diversity::{paraphrase_diversity, template_groups, DiversityReport, GroupDiversity, MeanStd};
pub use similarity::{bleu, jaccard, BleuVariant};
pub use stats::{corpus_stats, DatasetStats, SourceCounts};
