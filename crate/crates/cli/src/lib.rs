//! Command implementations behind the `fedmf` binary; exposed as a library
//! so the acceptance suite can drive them in-process.

pub mod args;
pub mod attack_cmd;
pub mod bench_cmd;
pub mod train_cmd;
