//! Scoring, experiment orchestration over the model grid, prediction
//! records and the attention and error reports.

mod config;
mod experiment;
mod metrics;
mod records;
mod reports;

pub use config::{DataPaths, DatasetFormat, ExperimentConfig, ModelId, NetworkSettings, WordVectors, PATH_OVERRIDES};
pub use experiment::{
    run_experiment, Artifacts, Experiment, ExperimentReport, Resources, SeedArtifacts, SeedScore,
    TrainedComponent, CHECKPOINT_DIR, PREDICTIONS_FILE, SUMMARY_FILE,
};
pub use metrics::{clamp_score, cosine_similarity};
pub use records::{read_records, write_records, PredictionRecord};
pub use reports::{emit_attention_report, emit_error_report, AttentionReport, ErrorReport, ErrorRow};
