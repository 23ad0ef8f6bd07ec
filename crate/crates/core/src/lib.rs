#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod error;
pub mod linalg;
pub mod nets;
pub mod piecewise;
pub mod saddle;
pub mod stability;
pub mod transport;

pub use error::{Error, Result};
