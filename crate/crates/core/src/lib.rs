//! Forward model of the magnetomyographic field of a propagating muscle-fiber
//! action potential.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biot_savart;
pub mod config;
pub mod dsp;
pub mod electro;
pub mod field;
pub mod pipeline;
pub mod special;
