//! Static ABI encoding: a 4-byte selector followed by one 32-byte word per argument.

use primitive_types::{H160, U256};
use serde::{Deserialize, Serialize};

use crate::lowering::ir::AbiType;
use crate::lowering::lower::{string_word, word_string};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum AbiValue {
    Uint(U256),
    Address(H160),
    Bool(bool),
    String(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AbiError {
    #[error("expected {expected} bytes of arguments, found {found}")]
    Length { expected: usize, found: usize },
    #[error("word {index} is not a valid {ty}")]
    Invalid { index: usize, ty: &'static str },
    #[error("cannot parse '{text}' as {ty}")]
    Parse { text: String, ty: &'static str },
}

impl AbiValue {
    pub fn to_word(&self) -> U256 {
        match self {
            AbiValue::Uint(v) => *v,
            AbiValue::Address(a) => U256::from_big_endian(a.as_bytes()),
            AbiValue::Bool(b) => U256::from(*b as u8),
            AbiValue::String(s) => string_word(s),
        }
    }

    /// Interprets a word as `ty` without validation.
    pub fn from_word(ty: AbiType, w: U256) -> AbiValue {
        match ty {
            AbiType::Uint256 => AbiValue::Uint(w),
            AbiType::Address => AbiValue::Address(word_address(w)),
            AbiType::Bool => AbiValue::Bool(!w.is_zero()),
            AbiType::String => AbiValue::String(word_string(w)),
        }
    }

    /// Parses script text: decimal integers, 0x-prefixed addresses,
    /// `true`/`false`, or raw strings.
    pub fn parse(ty: AbiType, text: &str) -> Result<AbiValue, AbiError> {
        let err = || AbiError::Parse { text: text.to_string(), ty: ty.name() };
        match ty {
            AbiType::Uint256 => U256::from_dec_str(text).map(AbiValue::Uint).map_err(|_| err()),
            AbiType::Address => parse_address(text).map(AbiValue::Address).ok_or_else(err),
            AbiType::Bool => match text {
                "true" => Ok(AbiValue::Bool(true)),
                "false" => Ok(AbiValue::Bool(false)),
                _ => Err(err()),
            },
            AbiType::String if text.len() <= 32 => Ok(AbiValue::String(text.to_string())),
            AbiType::String => Err(err()),
        }
    }
}

/// Display form used in reports: decimal integers, 0x addresses, booleans, strings.
impl std::fmt::Display for AbiValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AbiValue::Uint(v) => write!(f, "{v}"),
            AbiValue::Address(a) => write!(f, "{a:#x}"),
            AbiValue::Bool(b) => write!(f, "{b}"),
            AbiValue::String(s) => write!(f, "{s}"),
        }
    }
}

pub fn word_address(w: U256) -> H160 {
    H160::from_slice(&w.to_big_endian()[12..])
}

pub fn address_word(a: H160) -> U256 {
    U256::from_big_endian(a.as_bytes())
}

pub fn parse_address(text: &str) -> Option<H160> {
    let hex = text.strip_prefix("0x")?;
    if hex.len() != 40 {
        return None;
    }
    let mut out = [0u8; 20];
    for (i, chunk) in hex.as_bytes().chunks(2).enumerate() {
        out[i] = u8::from_str_radix(std::str::from_utf8(chunk).ok()?, 16).ok()?;
    }
    Some(H160(out))
}

pub fn encode_args(args: &[AbiValue]) -> Vec<u8> {
    args.iter().flat_map(|a| a.to_word().to_big_endian()).collect()
}

pub fn encode_call(selector: [u8; 4], args: &[AbiValue]) -> Vec<u8> {
    let mut out = selector.to_vec();
    out.extend(encode_args(args));
    out
}

/// Decodes argument words, rejecting wrong lengths and out-of-range words.
pub fn decode_args(data: &[u8], types: &[AbiType]) -> Result<Vec<AbiValue>, AbiError> {
    if data.len() != 32 * types.len() {
        return Err(AbiError::Length { expected: 32 * types.len(), found: data.len() });
    }
    types
        .iter()
        .enumerate()
        .map(|(i, &ty)| {
            let w = U256::from_big_endian(&data[32 * i..32 * i + 32]);
            let valid = match ty {
                AbiType::Uint256 | AbiType::String => true,
                AbiType::Address => w.bits() <= 160,
                AbiType::Bool => w <= U256::one(),
            };
            if !valid {
                return Err(AbiError::Invalid { index: i, ty: ty.name() });
            }
            let v = AbiValue::from_word(ty, w);
            if let AbiValue::String(s) = &v {
                if string_word(s) != w {
                    return Err(AbiError::Invalid { index: i, ty: ty.name() });
                }
            }
            Ok(v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_and_true() {
        let bytes = encode_args(&[AbiValue::Uint(100.into()), AbiValue::Bool(true)]);
        let mut expected = vec![0u8; 64];
        expected[31] = 0x64;
        expected[63] = 1;
        assert_eq!(bytes, expected);
        assert_eq!(decode_args(&bytes, &[AbiType::Uint256, AbiType::Bool]).unwrap()[1], AbiValue::Bool(true));
    }

    #[test]
    fn rejects_bad_words() {
        let mut bytes = vec![0u8; 32];
        bytes[31] = 2;
        assert!(decode_args(&bytes, &[AbiType::Bool]).is_err());
        assert!(decode_args(&bytes[..31], &[AbiType::Uint256]).is_err());
        assert_eq!(encode_call([1, 2, 3, 4], &[]), vec![1, 2, 3, 4]);
    }
}
