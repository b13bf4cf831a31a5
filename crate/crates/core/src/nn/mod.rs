//! Small dense neural-network kernel in `f64`.

pub mod adam;
pub mod gradcheck;
pub mod loss;
pub mod mlp;
pub mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{gradient_check, GradCheckOptions, GradCheckReport};
pub use loss::{focal_loss, inverse_frequency_alpha, mse_loss, softmax};
pub use mlp::{Activation, Mlp, MlpCache, MlpSpec, OutputTransform};
pub use tensor::Tensor2;
