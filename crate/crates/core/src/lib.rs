// Validation rejects NaN through negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod filter;
pub mod harness;
pub mod measurements;
pub mod so3;
pub mod wahba;
