//! Baselines and evaluation: train/test splits, template-matching question
//! to LF models, answer and class metrics, and a TF-IDF logistic regression
//! class predictor.

mod cls;
mod hm;
mod metrics;
mod split;
mod vectors;

pub use cls::{
    cls_input, logistic_gradient, logistic_loss, predict_cls, train_cls, ClassWeights, ClsError, ClsModel,
    ClsParams, SparseVec, TfIdf,
};
pub use hm::{
    fill_lf, hm_match, oracle_lexicon, predict_records, thin_lexicon, HmMode, HmPrediction, NoMatch, TemplateMatcher,
};
pub use metrics::{
    em_credit, eval_answers, eval_ql_accuracy, format_predictions, parse_predictions, score_question,
    subset_accuracy, token_f1, AnswerScores, LengthMismatch, PredictionFileError, RankedPrediction, SpanRule,
    SPAN_TOLERANCE, TOP_K,
};
pub use split::{ql1_test_count, ql1_test_templates, split_dataset, BadRatio, Split, SplitSpec, SplitStrategy};
pub use vectors::{
    cosine, first_component, sentence_vector, unigram_probs, weighted_mean, SentenceEncoder, SentenceMode,
    VectorError, WordVectors, SIF_A,
};
