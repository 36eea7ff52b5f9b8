// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod cluster;
pub mod detect;
pub mod error;
pub mod fps;
pub mod linalg;
pub mod lowdeg;
pub mod model;
pub mod rng;
