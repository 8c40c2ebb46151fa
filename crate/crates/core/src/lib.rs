//! Flint compiler front to back: parsing, analysis, lowering to IR, and a
//! deterministic chain simulator that executes the IR.

pub mod analysis;
pub mod diagnostics;
pub mod environment;
pub mod frontend;
pub mod lowering;
pub mod pipeline;
pub mod script;
pub mod stdlib;
pub mod vm;
