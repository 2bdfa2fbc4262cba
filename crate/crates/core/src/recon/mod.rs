//! A small three-part convolutional event-to-image network with analytic
//! gradients, the noise watermark and private re-training.

mod loss;
mod net;
mod tensor;
mod train;
mod watermark;

pub use loss::{sobel_sharpness, sobel_sharpness_grad, ImageDistance, MeanAbsolute};
pub use net::{run_layers, Activation, ConvLayer, ConvNet, LayerGrad, Part, Trace, DEFAULT_WIDTHS, LEAKY_SLOPE};
pub use tensor::Tensor;
pub use train::{
    loss_and_gradient, supervised_loss_and_gradient, total_loss, train, train_private, Adam, Objective,
    PrivateObjective, TrainConfig, TrainOutcome,
};
pub use watermark::{infuse, NoiseWatermark};

/// Scalar type the network can be evaluated in.
pub trait Real: num_traits::Float + Default + core::fmt::Debug + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}
