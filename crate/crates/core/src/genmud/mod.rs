//! Generative multi-user detection.
//!
//! A kernel-1 convolutional generator maps a latent vector to a `K x J`
//! frame. Detection searches the latent space by gradient descent on the
//! measurement misfit, then keeps the strongest users. Training meta-learns
//! the generator and the latent step size so that a few descent steps are
//! enough.

mod detect;
mod latent;
mod network;
mod rip;
mod scalar;
mod train;

pub use detect::{genmud_detect, map_to_frame, Selection};
pub use latent::{
    descend_from, latent_descent, matrix_to_output, measurement_loss, output_to_matrix, standardize, Generator,
    LatentPoint, Measurement,
};
pub use network::{Architecture, Forward, GeneratorModel, HiddenBlock, Mode, ParamLayout, RunningStats};
pub use rip::rip_loss;
pub use scalar::{Dual, Scalar};
pub use train::{
    batch_latent_grad, endpoint_loss, inner_descent, meta_gradient, sample_batch_latent, train, train_from,
    unrolled_loss, Adam, BatchStats, EndpointLoss, LogEntry, MamlMode, MetaGradient, SimulatedTasks, Task,
    TaskSource, TrainConfig, TrainFailure, Trained, TrainingLog, MIN_STEP_SIZE,
};
