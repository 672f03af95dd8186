//! Dense networks with exact reverse-mode gradients, Adam, and soft target
//! updates.

mod adam;
mod mlp;

pub use adam::AdamState;
pub use mlp::{soft_update, Activation, ForwardCache, Layer, Mlp};
