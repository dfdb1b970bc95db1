//! Label post-processing, episode/duration detection metrics and the paired
//! Wilcoxon signed-rank test.

mod labels;
mod metrics;
mod wilcoxon;

pub use labels::{merge_events, postprocess, smooth_labels, LabelSequence, PostProcess};
pub use metrics::{
    blocks, duration_metrics, episode_metrics, evaluate, f1_de_mean, Counts, LevelScores, MetricsReport,
};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult, EXACT_MAX_N, MIN_NONZERO};
