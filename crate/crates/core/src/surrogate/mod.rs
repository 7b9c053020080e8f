//! Graph-convolutional surrogate: GMM-kernel layers, the ELU/skip
//! stack, exact gradients, training and persistence.

mod io;
mod layer;
mod model;
mod train;

pub use io::{load_model, save_model, FORMAT_VERSION};
pub use layer::{GmmConvLayer, GraphCache, LayerGrads, SELF_LOOP};
pub use model::{ForwardCache, InputGrads, ModelConfig, ModelGrads, SurrogateModel};
pub use train::{backward, loss, prepare_dataset, train, PreparedSample, TrainConfig};
