//! Minimal arbitrary-precision binary floating point.
//!
//! A [`Real`] is `mantissa · 2^exponent` with the mantissa rounded to at most
//! `prec` bits (round half away from zero). Binary operations run at the
//! larger of the two operand precisions. Only what the root finder and the
//! height engine need is provided: ring operations, division, square root,
//! natural logarithm and conversion to `f64`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub const DEFAULT_PRECISION: u32 = 128;
pub const MIN_PRECISION: u32 = 53;
pub const MAX_PRECISION: u32 = 1024;

#[derive(Clone)]
pub struct Real {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

fn bit_len(x: &BigInt) -> i64 {
    x.bits() as i64
}

/// Rounds `x · 2^-shift` to the nearest integer, ties away from zero.
fn shr_round(x: &BigInt, shift: u64) -> BigInt {
    if shift == 0 {
        return x.clone();
    }
    let mag = x.magnitude();
    let half = num_bigint::BigUint::one() << (shift - 1);
    let rounded = (mag + half) >> shift;
    BigInt::from_biguint(x.sign(), rounded)
}

impl Real {
    fn normalized(mant: BigInt, exp: i64, prec: u32) -> Self {
        if mant.is_zero() {
            return Self::zero(prec);
        }
        let excess = bit_len(&mant) - prec as i64;
        let (mant, exp) = if excess > 0 {
            (shr_round(&mant, excess as u64), exp + excess)
        } else {
            (mant, exp)
        };
        // strip trailing zero bits so equal values share a representation
        let tz = mant.trailing_zeros().unwrap_or(0);
        let mant = if tz > 0 { mant >> tz } else { mant };
        Self {
            mant,
            exp: exp + tz as i64,
            prec,
        }
    }

    pub fn zero(prec: u32) -> Self {
        Self {
            mant: BigInt::zero(),
            exp: 0,
            prec,
        }
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Self {
        Self::normalized(v.clone(), 0, prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        Self::normalized(BigInt::from(v), 0, prec)
    }

    /// Exact conversion of a finite `f64` (then rounded to `prec`).
    pub fn from_f64(v: f64, prec: u32) -> Self {
        assert!(v.is_finite(), "Real::from_f64 needs a finite value");
        if v == 0.0 {
            return Self::zero(prec);
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 {
            Sign::Minus
        } else {
            Sign::Plus
        };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Self::normalized(BigInt::from_biguint(sign, m.into()), e, prec)
    }

    pub fn from_rational(v: &BigRational, prec: u32) -> Self {
        Self::from_bigint(v.numer(), prec + 2)
            .div(&Self::from_bigint(v.denom(), prec + 2))
            .with_precision(prec)
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn with_precision(&self, prec: u32) -> Self {
        Self::normalized(self.mant.clone(), self.exp, prec)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn abs(&self) -> Self {
        Self {
            mant: self.mant.abs(),
            exp: self.exp,
            prec: self.prec,
        }
    }

    /// Position just above the leading bit: `|x| < 2^top`.
    fn top(&self) -> i64 {
        self.exp + bit_len(&self.mant)
    }

    /// `floor(log2 |x|)`; `None` for zero.
    pub fn ilog2(&self) -> Option<i64> {
        (!self.is_zero()).then(|| self.top() - 1)
    }

    /// `2^k` at the given precision.
    pub fn pow2(k: i64, prec: u32) -> Self {
        Self {
            mant: BigInt::one(),
            exp: k,
            prec,
        }
    }

    fn add_impl(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        if self.is_zero() {
            return other.with_precision(prec);
        }
        if other.is_zero() {
            return self.with_precision(prec);
        }
        // operands far apart: the smaller one only affects rounding
        let guard = prec as i64 + 4;
        if self.top() - other.top() > guard {
            return self.with_precision(prec);
        }
        if other.top() - self.top() > guard {
            return other.with_precision(prec);
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        Self::normalized(a + b, e, prec)
    }

    fn mul_impl(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        Self::normalized(&self.mant * &other.mant, self.exp + other.exp, prec)
    }

    fn div_impl(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division by zero Real");
        let prec = self.prec.max(other.prec);
        if self.is_zero() {
            return Self::zero(prec);
        }
        let shift = (prec as i64 + 2 + bit_len(&other.mant) - bit_len(&self.mant)).max(0);
        let num = &self.mant << shift as u64;
        let q = num / &other.mant;
        Self::normalized(q, self.exp - other.exp - shift, prec)
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "square root of a negative Real");
        if self.is_zero() {
            return self.clone();
        }
        let prec = self.prec;
        // want 2·prec + 2 mantissa bits with an even exponent
        let mut shift = (2 * prec as i64 + 2 - bit_len(&self.mant)).max(0);
        if (self.exp - shift) % 2 != 0 {
            shift += 1;
        }
        let m = &self.mant << shift as u64;
        Self::normalized(m.sqrt(), (self.exp - shift) / 2, prec)
    }

    /// `ln 2`, via `2·atanh(1/3)`.
    pub fn ln2(prec: u32) -> Self {
        let work = prec + 16;
        let third = Self::from_i64(1, work).div(&Self::from_i64(3, work));
        atanh_series(&third)
            .mul(&Self::from_i64(2, work))
            .with_precision(prec)
    }

    /// Natural logarithm of a positive value.
    pub fn ln(&self) -> Self {
        assert!(
            !self.is_zero() && !self.is_negative(),
            "logarithm of a non-positive Real"
        );
        let prec = self.prec;
        let work = prec + 16 + (64 - (self.top().unsigned_abs().max(1)).leading_zeros());
        // x = m · 2^k with m in [1, 2)
        let k = self.top() - 1;
        let m = Self {
            mant: self.mant.clone(),
            exp: self.exp - k,
            prec: work,
        };
        let one = Self::from_i64(1, work);
        let z = (&m - &one).div(&(&m + &one));
        let ln_m = atanh_series(&z).mul(&Self::from_i64(2, work));
        let ln_2k = Self::ln2(work).mul(&Self::from_i64(k, work));
        (ln_m + ln_2k).with_precision(prec)
    }

    /// Nearest `f64` (saturating to ±inf / 0 outside the double range).
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = bit_len(&self.mant);
        let keep = 62i64;
        let (m, e) = if bits > keep {
            (
                shr_round(&self.mant, (bits - keep) as u64),
                self.exp + bits - keep,
            )
        } else {
            (self.mant.clone(), self.exp)
        };
        let mf = m.to_f64().expect("62-bit mantissa fits in f64");
        scale_pow2(mf, e)
    }

    /// Decimal rendering with roughly `digits` significant digits.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let f = self.to_f64();
        if f.is_finite() && digits <= 17 {
            return format!("{f:e}");
        }
        // scientific with a bigint of `digits` digits
        let log10 = self.top() as f64 * std::f64::consts::LOG10_2;
        let exp10 = log10.floor() as i64 - digits as i64 + 1;
        let scaled = if exp10 >= 0 {
            self.div(&Self::from_bigint(
                &BigInt::from(10).pow(exp10 as u32),
                self.prec,
            ))
        } else {
            self.mul(&Self::from_bigint(
                &BigInt::from(10).pow((-exp10) as u32),
                self.prec,
            ))
        };
        let int = scaled.round_to_bigint();
        let s = int.abs().to_string();
        let sign = if int.is_negative() { "-" } else { "" };
        let (head, tail) = s.split_at(1);
        format!("{sign}{head}.{tail}e{}", exp10 + tail.len() as i64)
    }

    pub fn round_to_bigint(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << self.exp as u64
        } else {
            shr_round(&self.mant, (-self.exp) as u64)
        }
    }

    /// Exact value as a rational.
    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << self.exp as u64)
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << (-self.exp) as u64)
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

fn scale_pow2(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// `atanh(z) = z + z³/3 + z⁵/5 + …` for `|z| ≤ 1/3`.
fn atanh_series(z: &Real) -> Real {
    let prec = z.prec;
    let z2 = z.mul(z);
    let mut power = z.clone();
    let mut sum = z.clone();
    let cutoff = -(prec as i64) - 8;
    let mut k = 3i64;
    loop {
        power = &power * &z2;
        let term = &power / &Real::from_i64(k, prec);
        if term.is_zero() || term.top() - sum.top().max(0) < cutoff {
            break;
        }
        sum = &sum + &term;
        k += 2;
    }
    sum
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.mant == other.mant && self.exp == other.exp
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let d = self - other;
        Some(match d.mant.sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        })
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({})", self.to_decimal_string(20))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $imp:ident) => {
        impl $tr for &Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                self.$imp(rhs)
            }
        }
        impl $tr for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                (&self).$imp(&rhs)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                (&self).$imp(rhs)
            }
        }
    };
}

impl Real {
    fn sub_impl(&self, other: &Self) -> Self {
        self.add_impl(&-other)
    }
}

forward_binop!(Add, add, add_impl);
forward_binop!(Sub, sub, sub_impl);
forward_binop!(Mul, mul, mul_impl);
forward_binop!(Div, div, div_impl);

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real {
            mant: -&self.mant,
            exp: self.exp,
            prec: self.prec,
        }
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        -&self
    }
}

/// Complex number over [`Real`].
#[derive(Clone, Debug, PartialEq)]
pub struct Complex {
    pub re: Real,
    pub im: Real,
}

impl Complex {
    pub fn new(re: Real, im: Real) -> Self {
        Self { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        Self::new(Real::zero(prec), Real::zero(prec))
    }

    pub fn from_real(re: Real) -> Self {
        let prec = re.precision();
        Self::new(re, Real::zero(prec))
    }

    pub fn norm_sqr(&self) -> Real {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn abs(&self) -> Real {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn recip(&self) -> Self {
        let d = self.norm_sqr();
        Self::new(&self.re / &d, &(-&self.im) / &d)
    }
}

impl Add for &Complex {
    type Output = Complex;
    fn add(self, rhs: &Complex) -> Complex {
        Complex::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &Complex {
    type Output = Complex;
    fn sub(self, rhs: &Complex) -> Complex {
        Complex::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &Complex {
    type Output = Complex;
    fn mul(self, rhs: &Complex) -> Complex {
        Complex::new(
            &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        )
    }
}

impl Div for &Complex {
    type Output = Complex;
    fn div(self, rhs: &Complex) -> Complex {
        let d = rhs.norm_sqr();
        let re = &(&self.re * &rhs.re) + &(&self.im * &rhs.im);
        let im = &(&self.im * &rhs.re) - &(&self.re * &rhs.im);
        Complex::new(re.div(&d), im.div(&d))
    }
}
