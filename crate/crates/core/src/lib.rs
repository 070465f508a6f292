// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dsp;
pub mod gateway;
pub mod media;
pub mod mux;
pub mod pipeline;
pub mod prompt;
