//! Money as integer cents.
//!
//! All payoffs, prices, and wages are stored as whole cents so that scoring
//! rules and group means stay exact. Prompts render whole-dollar amounts
//! without decimals ("$17"), which is how every scenario in this harness
//! states them.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// An amount of money in integer cents.
#[derive(
    Copy, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_cents(cents: i64) -> Self {
        Money(cents)
    }

    pub const fn from_dollars(dollars: i64) -> Self {
        Money(dollars * 100)
    }

    pub const fn cents(self) -> i64 {
        self.0
    }

    pub fn dollars_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn max(self, other: Money) -> Money {
        Money(self.0.max(other.0))
    }

    pub fn is_whole_dollars(self) -> bool {
        self.0 % 100 == 0
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl fmt::Display for Money {
    /// Renders "$17" for whole dollars and "$17.50" otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.abs();
        if abs % 100 == 0 {
            write!(f, "{sign}${}", abs / 100)
        } else {
            write!(f, "{sign}${}.{:02}", abs / 100, abs % 100)
        }
    }
}

impl fmt::Debug for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_dollars_render_without_decimals() {
        assert_eq!(Money::from_dollars(17).to_string(), "$17");
        assert_eq!(Money::from_dollars(0).to_string(), "$0");
    }

    #[test]
    fn fractional_cents_render_with_two_digits() {
        assert_eq!(Money::from_cents(1250).to_string(), "$12.50");
        assert_eq!(Money::from_cents(-305).to_string(), "-$3.05");
    }

    #[test]
    fn arithmetic_is_exact_in_cents() {
        let a = Money::from_dollars(15);
        let b = Money::from_cents(1);
        assert_eq!((a + b).cents(), 1501);
        assert_eq!((a - b).cents(), 1499);
        assert_eq!(a.max(b), a);
    }
}
