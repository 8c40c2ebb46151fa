//! Per-transaction linear memory of 32-byte words with a bump allocator.

use primitive_types::U256;

/// Scratch space below the free memory pointer.
pub const SCRATCH_BYTES: u64 = 0x40;
pub const FREE_POINTER: u64 = 0x40;
pub const HEAP_START: u64 = 0x60;

#[derive(Debug, Clone)]
pub struct Memory {
    words: Vec<U256>,
    free: u64,
}

impl Default for Memory {
    fn default() -> Self {
        let mut m = Memory { words: vec![U256::zero(); (HEAP_START / 32) as usize], free: HEAP_START };
        m.words[(FREE_POINTER / 32) as usize] = U256::from(HEAP_START);
        m
    }
}

impl Memory {
    /// Returns the current free pointer and bumps it by `bytes` rounded up to 32.
    pub fn allocate(&mut self, bytes: u64) -> u64 {
        let at = self.free;
        self.free += bytes.div_ceil(32) * 32;
        self.words.resize((self.free / 32) as usize, U256::zero());
        self.words[(FREE_POINTER / 32) as usize] = U256::from(self.free);
        at
    }

    pub fn free_pointer(&self) -> u64 {
        self.free
    }

    fn index(addr: U256) -> Option<usize> {
        (addr.bits() <= 64).then(|| (addr.low_u64() / 32) as usize)
    }

    pub fn load(&self, addr: U256) -> U256 {
        Self::index(addr).and_then(|i| self.words.get(i).copied()).unwrap_or_default()
    }

    /// Returns false for addresses beyond any allocation.
    pub fn store(&mut self, addr: U256, value: U256) -> bool {
        match Self::index(addr).and_then(|i| self.words.get_mut(i)) {
            Some(w) => {
                *w = value;
                true
            }
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_allocation() {
        let mut m = Memory::default();
        assert_eq!(m.load(U256::from(FREE_POINTER)), U256::from(0x60));
        assert_eq!(m.allocate(32), 0x60);
        assert_eq!(m.free_pointer(), 0x80);
        assert_eq!(m.allocate(1), 0x80);
        assert_eq!(m.allocate(1), 0xa0);
        assert_eq!(m.load(U256::from(FREE_POINTER)), U256::from(0xc0));
    }
}
