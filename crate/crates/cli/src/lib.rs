//! Library side of the `cbm` binary: configuration, commands and exit codes.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod exit;
pub mod manifest;
