//! Storage addressing of dynamic collections.
//!
//! An array keeps its length at the head slot and element `i` at
//! `keccak(head) + i * words`. A dictionary keeps the value for key `k` at
//! `keccak(k ‖ head)`, its key count at the head slot, key number `i` at
//! `keccak(head) + i`, and a registration marker (index + 1) one slot below
//! each value.

use primitive_types::U256;

use crate::lowering::selector::keccak256;

fn word_bytes(w: U256) -> [u8; 32] {
    w.to_big_endian()
}

pub fn array_base(head: U256) -> U256 {
    U256::from_big_endian(&keccak256(&word_bytes(head)))
}

pub fn array_element(head: U256, index: U256, elem_words: u64) -> U256 {
    array_base(head).overflowing_add(index.overflowing_mul(U256::from(elem_words)).0).0
}

pub fn dict_entry(head: U256, key: U256) -> U256 {
    let mut buf = [0u8; 64];
    buf[..32].copy_from_slice(&word_bytes(key));
    buf[32..].copy_from_slice(&word_bytes(head));
    U256::from_big_endian(&keccak256(&buf))
}

pub fn dict_marker(head: U256, key: U256) -> U256 {
    dict_entry(head, key).overflowing_sub(U256::one()).0
}

pub fn dict_key_slot(head: U256, index: U256) -> U256 {
    array_element(head, index, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_hash_of_slot_zero() {
        let expected = "290decd9548b62a8d60345a988386fc84ba6bc95484008f6362f93160ef3e563";
        assert_eq!(format!("{:064x}", array_base(U256::zero())), expected);
        assert_eq!(array_element(2.into(), 3.into(), 2), array_base(2.into()) + 6);
    }
}
