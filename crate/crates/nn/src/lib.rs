//! Small reverse-mode autodiff engine for 64-bit tensors.
//!
//! Everything needed to train a ResNet-style CNN or a PointNet-style MLP on
//! the CPU lives here: a [`Tape`] that records operations, the operations
//! themselves (convolution, batch norm, pooling, linear, losses), layer
//! wrappers that own their parameters inside a [`ParamStore`], and the Adam
//! optimizer with a reduce-on-plateau learning-rate schedule.
//!
//! ```
//! use orthoview_nn::{ops, Tape, Tensor};
//!
//! let mut tape = Tape::new();
//! let x = tape.leaf(Tensor::new(vec![1, 1, 3, 3], vec![1.0; 9]).unwrap(), true);
//! let w = tape.leaf(Tensor::new(vec![1, 1, 3, 3], vec![1.0; 9]).unwrap(), true);
//! let y = ops::conv2d(&mut tape, x, w, None, 1, 0).unwrap();
//! assert_eq!(tape.value(y).data(), &[9.0]);
//! ```

mod error;
mod gemm;
pub mod gradcheck;
pub mod init;
pub mod layers;
pub mod loss;
pub mod ops;
pub mod optim;
mod param;
mod session;
mod tape;
mod tensor;

pub use error::{NnError, Result};
pub use param::{Param, ParamId, ParamStore};
pub use session::{Mode, Session};
pub use tape::{BackwardCtx, BackwardFn, Tape, Var};
pub use tensor::Tensor;
