//! Integer division conventions shared by the exact reference evaluator and
//! the fixed-width interpreter.
//!
//! `div` truncates toward zero. `mod` takes the sign of the divisor, so
//! `a = b * floor(a / b) + (a mod b)`.

use num_integer::Integer;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivRounding {
    TowardZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModSign {
    Divisor,
}

pub const DIV_ROUNDING: DivRounding = DivRounding::TowardZero;
pub const MOD_SIGN: ModSign = ModSign::Divisor;

/// Integer quotient, or `None` for a zero divisor.
pub fn int_div<T: Integer + Clone>(a: &T, b: &T) -> Option<T> {
    if b.is_zero() {
        return None;
    }
    match DIV_ROUNDING {
        DivRounding::TowardZero => Some(a.clone() / b.clone()),
    }
}

/// Integer remainder, or `None` for a zero divisor.
pub fn int_mod<T: Integer + Clone>(a: &T, b: &T) -> Option<T> {
    if b.is_zero() {
        return None;
    }
    match MOD_SIGN {
        ModSign::Divisor => Some(a.mod_floor(b)),
    }
}
