//! Model blocks composed from the arithmetic, linear-algebra, and transfer
//! modules, plus classical reference implementations and the linear-layer
//! backward pass.

pub mod attention;
pub mod config;
pub mod reference;
pub mod resnet;

pub use attention::{
    backprop_input_grad, backprop_linear, backprop_weight_grad, ffn_forward, mhsa_forward,
    transformer_block_forward, AttnConfig, AttnWeights, FfnWeights, MhsaOutput,
    TransformerDtm, TransformerOutput,
};
pub use config::{
    read_matrix_csv, write_matrix_csv, ResnetBlockSpec, ResnetInstance, TransformerBlockSpec,
    TransformerInstance,
};
pub use resnet::{residual_block_forward, ResBlockConfig, ResBlockOutput};
