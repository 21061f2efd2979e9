//! Dense numerical core: matrices, layers, optimizer and gradient checking.

mod adam;
mod gradcheck;
mod layer;
mod matrix;
mod network;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{grad_check, GradCheckReport, RELATIVE_ERROR_FLOOR};
pub use layer::{tanh_backward, tanh_forward, AffineGrad, AffineLayer};
pub use matrix::Matrix;
pub use network::{ForwardCache, Layer, Network, NetworkGrad};
