//! Deterministic simulated chain executing IR programs.

pub mod abi;
pub mod arith;
pub mod chain;
pub mod gas;
pub mod memory;
pub mod storage;

pub use chain::{CallResult, Chain, ChainState, EmittedEvent, Status, Transaction, VmError};
