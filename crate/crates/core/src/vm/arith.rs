//! 256-bit arithmetic: checked operators trap, wrapping operators reduce mod 2^256.

use primitive_types::U256;

use crate::lowering::ir::{ArithOp, RevertReason};

pub fn checked(op: ArithOp, a: U256, b: U256) -> Result<U256, RevertReason> {
    let overflow = RevertReason::Overflow;
    match op {
        ArithOp::Add => a.checked_add(b).ok_or(overflow),
        ArithOp::Sub => a.checked_sub(b).ok_or(overflow),
        ArithOp::Mul => a.checked_mul(b).ok_or(overflow),
        ArithOp::Div => a.checked_div(b).ok_or(RevertReason::DivisionByZero),
        ArithOp::Exp => a.checked_pow(b).ok_or(overflow),
        ArithOp::WAdd | ArithOp::WSub | ArithOp::WMul => Ok(wrapping(op, a, b)),
    }
}

pub fn wrapping(op: ArithOp, a: U256, b: U256) -> U256 {
    match op {
        ArithOp::Add | ArithOp::WAdd => a.overflowing_add(b).0,
        ArithOp::Sub | ArithOp::WSub => a.overflowing_sub(b).0,
        ArithOp::Mul | ArithOp::WMul => a.overflowing_mul(b).0,
        ArithOp::Div => a.checked_div(b).unwrap_or_default(),
        ArithOp::Exp => a.overflowing_pow(b).0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traps_and_wraps() {
        let max = U256::MAX;
        assert_eq!(checked(ArithOp::Add, max, 1.into()), Err(RevertReason::Overflow));
        assert_eq!(checked(ArithOp::Sub, 0.into(), 1.into()), Err(RevertReason::Overflow));
        assert_eq!(checked(ArithOp::Div, 7.into(), 2.into()), Ok(3.into()));
        assert_eq!(checked(ArithOp::Div, 7.into(), 0.into()), Err(RevertReason::DivisionByZero));
        assert_eq!(checked(ArithOp::Exp, 2.into(), 255.into()), Ok(U256::one() << 255));
        assert_eq!(checked(ArithOp::Exp, 2.into(), 256.into()), Err(RevertReason::Overflow));
        assert_eq!(checked(ArithOp::Exp, 0.into(), 0.into()), Ok(1.into()));
        assert_eq!(wrapping(ArithOp::WAdd, max, 1.into()), 0.into());
        assert_eq!(wrapping(ArithOp::WSub, 0.into(), 1.into()), max);
        assert_eq!(wrapping(ArithOp::WMul, U256::one() << 255, 2.into()), 0.into());
    }
}
