//! Name mangling, ABI selectors and lowering of analysed programs to IR.

pub mod ir;
pub mod lower;
pub mod mangle;
pub mod printer;
pub mod selector;
