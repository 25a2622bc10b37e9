//! Scalar backends: plain `f64` and a double-double type with roughly
//! 106 bits of mantissa.
//!
//! Every numerical routine in the crate is generic over [`Real`]. The
//! double-double backend takes its arithmetic from `twofloat`; the
//! transcendental functions are implemented here by argument reduction and
//! Taylor series so that they are accurate to the full double-double width.

use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use twofloat::TwoFloat;

use crate::error::GiemError;

pub trait Real:
    Copy
    + Send
    + Sync
    + Debug
    + Display
    + PartialOrd
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    /// Short backend label used in reports.
    const NAME: &'static str;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;

    /// Unit roundoff of the backend.
    fn epsilon() -> f64;

    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn exp_m1(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn pi() -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }
    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { Self::one() / self } else { self };
        let mut k = n.unsigned_abs();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        acc
    }
    /// Golden mean conjugate `(sqrt(5) - 1) / 2`.
    fn golden() -> Self {
        (Self::from_f64(5.0).sqrt() - Self::one()) / Self::from_f64(2.0)
    }
}

impl Real for f64 {
    const NAME: &'static str = "binary64";

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn epsilon() -> f64 {
        f64::EPSILON
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
}

/// Double-double number: an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct DoubleDouble(TwoFloat);

impl DoubleDouble {
    pub fn new(hi: f64, lo: f64) -> Self {
        DoubleDouble(TwoFloat::new_add(hi, lo))
    }
    pub fn hi(self) -> f64 {
        self.0.hi()
    }
    pub fn lo(self) -> f64 {
        self.0.lo()
    }

    fn ln2() -> Self {
        Self::new(std::f64::consts::LN_2, 2.3190468138462996e-17)
    }
    fn half_pi() -> Self {
        Self::new(std::f64::consts::FRAC_PI_2, 6.123233995736766e-17)
    }

    fn scale(self, k: f64) -> Self {
        DoubleDouble(self.0 * k)
    }

    /// `exp(r) - 1` for `|r| <= 0.5`: series on `r / 256`, then eight doublings
    /// via `e(2y) - 1 = (e(y) - 1)(e(y) + 1)`.
    fn exp_m1_reduced(r: Self) -> Self {
        let s = r.scale(1.0 / 256.0);
        let mut term = s;
        let mut sum = s;
        for k in 2..20 {
            term = term * s / Self::from_f64(k as f64);
            sum += term;
            if term.hi().abs() < 1e-36 * sum.hi().abs().max(1e-300) {
                break;
            }
        }
        let two = Self::from_f64(2.0);
        for _ in 0..8 {
            sum = sum * (sum + two);
        }
        sum
    }

    /// Sine and cosine for `|r| <= pi/4` by Taylor series.
    fn sin_cos_reduced(r: Self) -> (Self, Self) {
        let r2 = r * r;
        let mut term = r;
        let mut s = r;
        let mut k = 1.0;
        loop {
            term = -(term * r2) / Self::from_f64((k + 1.0) * (k + 2.0));
            s += term;
            k += 2.0;
            if term.hi().abs() < 1e-35 || k > 60.0 {
                break;
            }
        }
        let mut term = Self::one();
        let mut c = Self::one();
        let mut k = 0.0;
        loop {
            term = -(term * r2) / Self::from_f64((k + 1.0) * (k + 2.0));
            c += term;
            k += 2.0;
            if term.hi().abs() < 1e-35 || k > 60.0 {
                break;
            }
        }
        (s, c)
    }

    fn sin_cos(self) -> (Self, Self) {
        let x = self;
        let k = (x.hi() / std::f64::consts::FRAC_PI_2).round();
        let r = x - Self::half_pi().scale(k);
        let (s, c) = Self::sin_cos_reduced(r);
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

impl Debug for DoubleDouble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DoubleDouble({:e} + {:e})", self.hi(), self.lo())
    }
}

impl Display for DoubleDouble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        Display::fmt(&self.hi(), f)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident, $op:tt) => {
        impl $tr for DoubleDouble {
            type Output = DoubleDouble;
            fn $m(self, rhs: DoubleDouble) -> DoubleDouble {
                DoubleDouble(self.0 $op rhs.0)
            }
        }
        impl $atr for DoubleDouble {
            fn $am(&mut self, rhs: DoubleDouble) {
                self.0 = self.0 $op rhs.0;
            }
        }
    };
}

forward_binop!(Add, add, AddAssign, add_assign, +);
forward_binop!(Sub, sub, SubAssign, sub_assign, -);
forward_binop!(Mul, mul, MulAssign, mul_assign, *);

// The upstream quotient forms its residual `1 - b·(1/b)` without a fused
// multiply-add and keeps only about 70 bits; long division restores full width.
impl Div for DoubleDouble {
    type Output = DoubleDouble;
    fn div(self, rhs: DoubleDouble) -> DoubleDouble {
        let q1 = self.hi() / rhs.hi();
        if !q1.is_finite() {
            return DoubleDouble::from_f64(q1);
        }
        let r = self - rhs * DoubleDouble::from_f64(q1);
        let q2 = r.hi() / rhs.hi();
        let r = r - rhs * DoubleDouble::from_f64(q2);
        let q3 = r.hi() / rhs.hi();
        DoubleDouble::new(q1, q2) + DoubleDouble::from_f64(q3)
    }
}

impl DivAssign for DoubleDouble {
    fn div_assign(&mut self, rhs: DoubleDouble) {
        *self = *self / rhs;
    }
}

impl Neg for DoubleDouble {
    type Output = DoubleDouble;
    fn neg(self) -> DoubleDouble {
        DoubleDouble(-self.0)
    }
}

impl Real for DoubleDouble {
    const NAME: &'static str = "double-double";

    fn from_f64(x: f64) -> Self {
        DoubleDouble(TwoFloat::from(x))
    }
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }
    fn epsilon() -> f64 {
        // 2^-104: two guard bits below the nominal 106-bit width.
        4.930380657631324e-32
    }
    fn abs(self) -> Self {
        DoubleDouble(self.0.abs())
    }
    fn sqrt(self) -> Self {
        if self.hi() == 0.0 {
            return Self::zero();
        }
        DoubleDouble(self.0.sqrt())
    }
    fn exp(self) -> Self {
        let x = self.hi();
        if x > 709.0 {
            return Self::from_f64(f64::INFINITY);
        }
        if x < -745.0 {
            return Self::zero();
        }
        let k = (x / std::f64::consts::LN_2).round();
        let r = self - Self::ln2().scale(k);
        let e = Self::exp_m1_reduced(r) + Self::one();
        e.scale(2f64.powi(k as i32))
    }
    fn exp_m1(self) -> Self {
        if self.hi().abs() <= 0.5 {
            Self::exp_m1_reduced(self)
        } else {
            self.exp() - Self::one()
        }
    }
    fn ln(self) -> Self {
        let x0 = self.hi();
        if x0.is_nan() || x0 < 0.0 {
            return Self::from_f64(f64::NAN);
        }
        if x0 == 0.0 {
            return Self::from_f64(f64::NEG_INFINITY);
        }
        // Newton on exp(y) = x, quadratic from a binary64 start.
        let mut y = Self::from_f64(x0.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Self::one();
        }
        y
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn pi() -> Self {
        Self::new(std::f64::consts::PI, 1.2246467991473532e-16)
    }
}

/// Arithmetic backend selected by configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Binary64,
    /// Extended precision with the requested number of mantissa bits
    /// (served by the double-double backend, at most 106 bits).
    Extended(u32),
}

impl Precision {
    pub const MAX_EXTENDED_BITS: u32 = 106;

    pub fn label(&self) -> String {
        match self {
            Precision::Binary64 => "binary64".to_string(),
            Precision::Extended(bits) => format!("extended:{bits}"),
        }
    }
}

impl FromStr for Precision {
    type Err = GiemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "binary64" {
            return Ok(Precision::Binary64);
        }
        if s == "extended" {
            return Ok(Precision::Extended(Self::MAX_EXTENDED_BITS));
        }
        if let Some(bits) = s.strip_prefix("extended:") {
            let bits: u32 = bits
                .parse()
                .map_err(|_| GiemError::Config(format!("bad precision bit count in {s:?}")))?;
            if bits <= 53 {
                return Err(GiemError::Config(format!(
                    "extended precision needs more than 53 bits, got {bits}"
                )));
            }
            if bits > Self::MAX_EXTENDED_BITS {
                return Err(GiemError::Config(format!(
                    "extended precision limited to {} bits, got {bits}",
                    Self::MAX_EXTENDED_BITS
                )));
            }
            return Ok(Precision::Extended(bits));
        }
        Err(GiemError::Config(format!(
            "precision must be \"binary64\" or \"extended:<bits>\", got {s:?}"
        )))
    }
}
