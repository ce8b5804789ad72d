//! Pairwise scoring, per-subgroup thresholds and the three approach
//! pipelines.

mod pipeline;
mod score;
mod search;

pub use pipeline::{
    fit_ovo, run_inprocessing, run_postprocessing, run_preprocessing, run_single_attribute, FittedOvo, OvoConfig,
    OvoOutput, OvoPrediction, PreprocessingOutput,
};
pub use score::{apply_thresholds, score_instance, vote_weight, Score, ScoredInstance, ThresholdMap};
pub use search::{
    candidate_thresholds, search_thresholds, search_thresholds_multi, SearchConfig, SearchOutcome, SearchStrategy,
    BELOW_ZERO_SENTINEL,
};
