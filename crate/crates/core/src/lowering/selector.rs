//! Keccak-256 and ABI function selectors.

use sha3::{Digest, Keccak256};

use crate::environment::Type;

pub fn keccak256(data: &[u8]) -> [u8; 32] {
    let mut hasher = Keccak256::new();
    hasher.update(data);
    hasher.finalize().into()
}

/// First four bytes of the keccak-256 hash of a canonical signature.
pub fn compute_selector(signature: &str) -> [u8; 4] {
    let h = keccak256(signature.as_bytes());
    [h[0], h[1], h[2], h[3]]
}

pub fn selector_hex(selector: [u8; 4]) -> String {
    format!("0x{}", selector.iter().map(|b| format!("{b:02x}")).collect::<String>())
}

/// ABI type name of a parameter type, if it has one.
pub fn abi_type(ty: &Type) -> Option<String> {
    Some(match ty {
        Type::Int => "uint256".into(),
        Type::Address => "address".into(),
        Type::Bool => "bool".into(),
        Type::String => "string".into(),
        Type::Named(_) => "uint256".into(),
        Type::Array(t) => format!("{}[]", abi_type(t)?),
        Type::FixedArray(t, n) => format!("{}[{n}]", abi_type(t)?),
        _ => return None,
    })
}

/// `name(type1,type2)` over the external parameters.
pub fn signature<'a>(name: &str, params: impl IntoIterator<Item = &'a Type>) -> String {
    let types: Vec<String> = params.into_iter().map(|t| abi_type(t).unwrap_or_else(|| "bytes".into())).collect();
    format!("{name}({})", types.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keccak_vectors() {
        let hex = |b: [u8; 32]| b.iter().map(|b| format!("{b:02x}")).collect::<String>();
        assert_eq!(hex(keccak256(b"")), "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470");
        assert_eq!(hex(keccak256(b"abc")), "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45");
    }

    #[test]
    fn transfer_selector() {
        assert_eq!(selector_hex(compute_selector("transfer(address,uint256)")), "0xa9059cbb");
        assert_eq!(signature("transfer", &[Type::Address, Type::Int]), "transfer(address,uint256)");
    }

    #[test]
    fn init_wallet_signature() {
        let sig = signature("initWallet", &[Type::Array(Box::new(Type::Address)), Type::Int, Type::Int]);
        assert_eq!(sig, "initWallet(address[],uint256,uint256)");
        assert_eq!(selector_hex(compute_selector(&sig)), "0xe46dcfeb");
    }
}
