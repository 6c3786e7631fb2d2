//! Non-Archimedean deep neural networks on the finite quotients `G_l` of the
//! ring of integers of a local field (`F_p[[T]]` or `Z_p`).
//!
//! * [`localfield`]: arithmetic on `G_l`, the truncation map and enumeration.
//! * [`testfn`]: locally constant functions, Haar norms and inner products.
//! * [`network`]: layered networks with dense or group-convolutional weights.
//! * [`training`]: quadratic cost, backpropagation and gradient descent.
//! * [`approx`]: the constructive approximating network and its robustness radii.
//! * [`encoding`]: base-`p` digit expansion of `[0, 1]` and sampling of real functions.
//! * [`walsh`]: additive characters and Walsh-type orthonormal bases.
//! * [`cli`]: experiment drivers used by the `padic-nn` binary.

pub mod approx;
pub mod cli;
pub mod encoding;
pub mod error;
pub mod localfield;
pub mod network;
pub mod testfn;
pub mod training;
pub mod walsh;

pub use approx::{AffineChart, NetworkBundle, RobustnessBall};
pub use error::{Error, Result};
pub use localfield::{BallId, Characteristic, FieldConfig, TreeIndex};
pub use network::{Activation, ForwardTrace, Layer, LayerKind, Network, Weights};
pub use testfn::{ComplexTestFunction, TestFunction};
