//! Smatch and the fine-grained quality families.

mod fine;
mod quality;
mod smatch;

pub use fine::{
    bag_f1, feature_flags, fine_grained, fine_grained_with_flags, is_frame, quality_targets, score_correction,
    strip_sense, FeatureFlags,
};
pub use quality::{dimension_names, Family, Prf, QualityVector, QUALITY_DIMS};
pub use smatch::{
    count_matches, normalize_triples, smatch, smatch_bruteforce, smatch_bruteforce_triples, smatch_triples,
    Alignment, MetricsError, SmatchResult, TripleSet, DEFAULT_RESTARTS,
};
