//! Exact monoidal streams over finite stochastic kernels.
//!
//! The crate is layered bottom-up:
//!
//! * [`value`], [`dist`], [`shape`] and [`kernel`] form the one-tick base
//!   category of exact discrete kernels;
//! * [`stream`] builds coinductive monoidal streams on top, with delay,
//!   delayed feedback and finite observation;
//! * [`ir`] is a typed term language for feedback diagrams that compiles to
//!   streams;
//! * [`lang`] is a small causal dataflow language elaborated into [`ir`].

pub mod dist;
pub mod ir;
pub mod kernel;
pub mod lang;
pub mod rng;
pub mod shape;
pub mod stream;
pub mod value;

pub use dist::{format_rat, parse_rat, rat, Dist, DistError, Rat};
pub use kernel::{Kernel, KernelError, Tuple, DEFAULT_STATE_CAP};
pub use shape::{BaseShape, ShapeError, WireShape};
pub use stream::{NStageProcess, ShapeSeq, Stream, StreamError};
pub use value::Value;
