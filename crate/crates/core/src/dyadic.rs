//! Exact dyadic rationals `mant / 2^exp`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// A dyadic rational kept in lowest terms (odd mantissa unless zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mant: i64,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { mant: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { mant: 1, exp: 0 };

    pub fn new(mant: i64, exp: u32) -> Self {
        Dyadic { mant, exp }.normalized()
    }

    pub fn from_int(v: i64) -> Self {
        Dyadic { mant: v, exp: 0 }
    }

    pub fn mant(&self) -> i64 {
        self.mant
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    fn normalized(mut self) -> Self {
        if self.mant == 0 {
            self.exp = 0;
            return self;
        }
        while self.exp > 0 && self.mant % 2 == 0 {
            self.mant /= 2;
            self.exp -= 1;
        }
        self
    }

    /// Scale by `2^-k`.
    pub fn shr(self, k: u32) -> Self {
        Dyadic { mant: self.mant, exp: self.exp + k }.normalized()
    }

    pub fn to_f64(self) -> f64 {
        self.mant as f64 / 2f64.powi(self.exp as i32)
    }

    fn aligned(a: Dyadic, b: Dyadic) -> (i128, i128, u32) {
        let e = a.exp.max(b.exp);
        let am = (a.mant as i128) << (e - a.exp);
        let bm = (b.mant as i128) << (e - b.exp);
        (am, bm, e)
    }

    fn from_wide(m: i128, e: u32) -> Self {
        let mut m = m;
        let mut e = e;
        while e > 0 && m % 2 == 0 && m != 0 {
            m /= 2;
            e -= 1;
        }
        let mant = i64::try_from(m).expect("dyadic mantissa overflow");
        Dyadic { mant, exp: if mant == 0 { 0 } else { e } }
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = Dyadic::aligned(self, rhs);
        Dyadic::from_wide(a + b, e)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        self + (-rhs)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mant: -self.mant, exp: self.exp }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        Dyadic::from_wide(self.mant as i128 * rhs.mant as i128, self.exp + rhs.exp)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = Dyadic::aligned(*self, *other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.mant)
        } else {
            write!(f, "{}/{}", self.mant, 1u64 << self.exp)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_and_compares() {
        assert_eq!(Dyadic::new(4, 3), Dyadic::new(1, 1));
        assert_eq!(Dyadic::new(0, 7), Dyadic::ZERO);
        assert!(Dyadic::new(3, 2) < Dyadic::ONE);
        assert!(Dyadic::new(-1, 0) < Dyadic::new(1, 10));
    }

    #[test]
    fn arithmetic_is_exact() {
        let a = Dyadic::new(1, 2);
        let b = Dyadic::new(3, 4);
        assert_eq!(a + b, Dyadic::new(7, 4));
        assert_eq!(a - a, Dyadic::ZERO);
        assert_eq!(a * b, Dyadic::new(3, 6));
        assert_eq!((a + b).to_f64(), 0.4375);
        assert_eq!(Dyadic::from_int(3).shr(2), Dyadic::new(3, 2));
    }
}
