//! Losses, the Adam optimizer with its warm-up schedule, and the training
//! and auxiliary-decoder pretraining loops.

mod losses;
mod optim;
mod schedule;
mod train;

pub use losses::{rmse_loss, triphone_xent_loss, LossBreakdown};
pub use optim::{adam_step, OptimizerState};
pub use schedule::lr_schedule;
pub use train::{
    aux_frame_accuracy, batch_loss, model_loss, pretrain_aux, train, Batch, LossVars, StartFrom,
    StepRecord, TrainOutcome,
    TrainRunConfig,
};
