//! Gas cost table and per-transaction meter.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::lowering::ir::RevertReason;

pub const DEFAULT: &str = "default";
pub const SLOAD: &str = "sload";
pub const SSTORE: &str = "sstore";
pub const PROTECTION_CHECK: &str = "protectionCheck";
pub const TYPESTATE_CHECK: &str = "typestateCheck";
pub const EVENT_WORD: &str = "eventWord";

pub const DEFAULT_GAS_LIMIT: u64 = 30_000_000;

/// Costs by instruction name; unlisted instructions cost `default`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GasTable {
    pub costs: BTreeMap<String, u64>,
}

impl Default for GasTable {
    fn default() -> Self {
        let costs = [(DEFAULT, 1), (SLOAD, 20), (SSTORE, 100), (PROTECTION_CHECK, 50), (TYPESTATE_CHECK, 50), (EVENT_WORD, 9)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        GasTable { costs }
    }
}

impl GasTable {
    /// Default table overridden by the entries of a JSON object.
    pub fn from_json(text: &str) -> Result<GasTable, serde_json::Error> {
        let overrides: BTreeMap<String, u64> = serde_json::from_str(text)?;
        let mut table = GasTable::default();
        table.costs.extend(overrides);
        Ok(table)
    }

    pub fn cost(&self, name: &str) -> u64 {
        self.costs.get(name).or_else(|| self.costs.get(DEFAULT)).copied().unwrap_or(1)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meter {
    pub gas_used: u64,
    pub gas_limit: u64,
    pub protection_checks: u64,
    pub typestate_checks: u64,
}

impl Meter {
    pub fn new(gas_limit: u64) -> Meter {
        Meter { gas_limit, ..Meter::default() }
    }

    pub fn charge(&mut self, amount: u64) -> Result<(), RevertReason> {
        self.gas_used = self.gas_used.saturating_add(amount);
        if self.gas_used > self.gas_limit {
            self.gas_used = self.gas_limit;
            return Err(RevertReason::OutOfGas);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_limits() {
        let t = GasTable::from_json(r#"{"sload": 200, "call": 7}"#).unwrap();
        assert_eq!(t.cost(SLOAD), 200);
        assert_eq!(t.cost("call"), 7);
        assert_eq!(t.cost("move"), 1);
        let mut m = Meter::new(0);
        assert_eq!(m.charge(1), Err(RevertReason::OutOfGas));
    }
}
