//! DDPG: replay memory, exploration noise, critic and actor updates, target
//! tracking and resumable state.

mod ddpg;
mod log;
mod ou;
mod replay;
mod snapshot;

pub use ddpg::{
    actor_objective, actor_update, bellman_targets, critic_update, ActionValue, AgentConfig,
    DdpgAgent, UpdateStats,
};
pub use log::{read_train_log, TrainLogRow, TrainLogWriter, TRAIN_LOG_HEADER};
pub use ou::OuProcess;
pub use replay::{state_to_shared, Batch, ReplayMemory, Transition};
pub use snapshot::{decode_resume, encode_resume, load_resume, save_resume};
