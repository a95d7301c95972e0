//! Dataset generation, training, evaluation and detection dumps, as run by
//! the `ragc` binary.

mod config;
mod dataset;
mod detect;
mod eval;
mod train;

pub use config::{ExperimentConfig, ExperimentSection, SplitSizes};
pub use dataset::{cmd_generate, dataset_dir, scene_seed, Manifest, SceneEntry, Split, MANIFEST_FILE};
pub use detect::{box_shape, cmd_anchors, cmd_detect, DetectOutcome, DetectSource};
pub use eval::{
    average_ranks, cmd_eval, eval_dir, power_vs_targets, spearman, EvalOptions, EvalOutcome, EvalPolicy,
    EvalReport, FrameRecord, PowerByTargets, SceneReport,
};
pub use train::{
    agent_seed, cmd_train, read_progress, train_dir, Progress, TrainOptions, TrainOutcome, FINAL_FILE,
    LOG_FILE, NETS_FILE, PROGRESS_FILE, RESUME_FILE,
};
