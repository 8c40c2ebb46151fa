//! Flint sources compiled into every program: the `Flint$Global` functions
//! and the `Asset` trait with its `Wei` currency.

use crate::environment::Type;

pub const GLOBAL_SOURCE: &str = include_str!("global.flint");
pub const ASSET_SOURCE: &str = include_str!("asset.flint");

pub const GLOBAL_STRUCT: &str = "Flint$Global";
pub const CURRENCY: &str = "Wei";
pub const CURRENCY_FIELD: &str = "rawValue";

/// Which library sources a compilation includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdlibMode {
    #[default]
    Full,
    /// Only `Flint$Global`; the program supplies its own `Wei`.
    GlobalsOnly,
    None,
}

/// `(file name, source)` pairs in compilation order.
pub fn sources(mode: StdlibMode) -> Vec<(&'static str, &'static str)> {
    match mode {
        StdlibMode::Full => vec![("<stdlib>/global.flint", GLOBAL_SOURCE), ("<stdlib>/asset.flint", ASSET_SOURCE)],
        StdlibMode::GlobalsOnly => vec![("<stdlib>/global.flint", GLOBAL_SOURCE)],
        StdlibMode::None => Vec::new(),
    }
}

/// Runtime functions reachable from library code as `flint$name`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum RuntimeFn {
    Send,
    FatalError,
    Assert,
    Mint,
}

impl RuntimeFn {
    pub const ALL: [RuntimeFn; 4] = [RuntimeFn::Send, RuntimeFn::FatalError, RuntimeFn::Assert, RuntimeFn::Mint];

    pub fn name(self) -> &'static str {
        match self {
            RuntimeFn::Send => "flint$send",
            RuntimeFn::FatalError => "flint$fatalError",
            RuntimeFn::Assert => "flint$assert",
            RuntimeFn::Mint => "flint$mint",
        }
    }

    pub fn from_name(name: &str) -> Option<RuntimeFn> {
        RuntimeFn::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn params(self) -> Vec<Type> {
        match self {
            RuntimeFn::Send => vec![Type::Address, Type::Int],
            RuntimeFn::FatalError => vec![],
            RuntimeFn::Assert => vec![Type::Bool],
            RuntimeFn::Mint => vec![Type::Int],
        }
    }
}
