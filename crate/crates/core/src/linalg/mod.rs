//! Exact integer matrix algebra.
//!
//! Everything here works on arbitrary-precision integers (`BigInt`) and is
//! exact: determinants and adjugates by fraction-free elimination,
//! characteristic polynomials by the Faddeev–LeVerrier recurrence, and Smith
//! normal forms with explicit unimodular transforms.

mod parse;
mod smith;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub(crate) use parse::json_int;
pub use smith::SmithForm;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix must have dimension at least 1")]
    Empty,
    #[error("matrix parse error: {0}")]
    Parse(String),
}

/// Square matrix of arbitrary-precision integers, stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    /// Builds a matrix from rows. Every row must have the same length as the
    /// number of rows.
    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if n == 0 {
            return Err(LinalgError::Empty);
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            entries.extend(row.iter().cloned().map(Into::into));
        }
        Ok(Self { n, entries })
    }

    /// Convenience constructor from small integers. Panics on ragged input;
    /// intended for literals.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let rows: Vec<Vec<i64>> = rows.iter().map(|r| r.to_vec()).collect();
        Self::from_rows(&rows).expect("literal matrix must be square and nonempty")
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, BigInt::one())
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            entries: vec![BigInt::zero(); n * n],
        }
    }

    pub fn scalar(n: usize, a: BigInt) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.entries[i * n + i] = a.clone();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[BigInt]> {
        self.entries.chunks(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        self.rows().map(<[BigInt]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                t.entries[j * n + i] = self.entries[i * n + j].clone();
            }
        }
        t
    }

    pub fn scale(&self, a: &BigInt) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|e| e * a).collect(),
        }
    }

    pub fn trace(&self) -> BigInt {
        (0..self.n).map(|i| self.get(i, i).clone()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn max_abs_entry(&self) -> BigInt {
        self.entries
            .iter()
            .map(|e| e.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    /// Matrix–vector product over the rationals.
    pub fn mul_rational_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(v.len(), self.n);
        self.rows()
            .map(|row| {
                row.iter().zip(v).fold(BigRational::zero(), |acc, (a, x)| {
                    acc + x * BigRational::from_integer(a.clone())
                })
            })
            .collect()
    }

    fn check_same_dim(&self, other: &Self) -> Result<(), LinalgError> {
        if self.n != other.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_dim(other)?;
        Ok(self * other)
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix[{}]", self)
    }
}

/// Rows separated by `; `, entries by single spaces. This is also an
/// accepted input format, so `Display` and `FromStr` round-trip.
impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            for (j, e) in row.iter().enumerate() {
                if j > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{e}")?;
            }
        }
        Ok(())
    }
}

impl Mul for &IntMatrix {
    type Output = IntMatrix;

    fn mul(self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        let n = self.n;
        let mut out = IntMatrix::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.entries[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &rhs.entries[k * n + j];
                    if !b.is_zero() {
                        out.entries[i * n + j] += a * b;
                    }
                }
            }
        }
        out
    }
}

impl Mul for IntMatrix {
    type Output = IntMatrix;

    fn mul(self, rhs: IntMatrix) -> IntMatrix {
        &self * &rhs
    }
}

impl Add for &IntMatrix {
    type Output = IntMatrix;

    fn add(self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        IntMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &IntMatrix {
    type Output = IntMatrix;

    fn sub(self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        IntMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &IntMatrix {
    type Output = IntMatrix;

    fn neg(self) -> IntMatrix {
        IntMatrix {
            n: self.n,
            entries: self.entries.iter().map(|e| -e).collect(),
        }
    }
}

/// Fraction-free (Bareiss) determinant of a row-major `n × n` buffer.
/// Consumes the buffer as scratch space.
pub(crate) fn bareiss_det(n: usize, mut a: Vec<BigInt>) -> BigInt {
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k * n + k].is_zero() {
            match (k + 1..n).find(|&r| !a[r * n + k].is_zero()) {
                Some(r) => {
                    for j in 0..n {
                        a.swap(k * n + j, r * n + j);
                    }
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        let pivot = a[k * n + k].clone();
        for i in k + 1..n {
            let lead = a[i * n + k].clone();
            for j in k + 1..n {
                let v = &pivot * &a[i * n + j] - &lead * &a[k * n + j];
                // exact by Sylvester's identity
                a[i * n + j] = v / &prev;
            }
            a[i * n + k] = BigInt::zero();
        }
        prev = pivot;
    }
    sign * &a[n * n - 1]
}

/// Exact determinant.
pub fn det(a: &IntMatrix) -> BigInt {
    bareiss_det(a.n, a.entries.clone())
}

fn minor(a: &IntMatrix, skip_row: usize, skip_col: usize) -> Vec<BigInt> {
    let n = a.n;
    let mut out = Vec::with_capacity((n - 1) * (n - 1));
    for i in (0..n).filter(|&i| i != skip_row) {
        for j in (0..n).filter(|&j| j != skip_col) {
            out.push(a.get(i, j).clone());
        }
    }
    out
}

/// Transpose of the cofactor matrix, so that `A · adj(A) = det(A) · I`.
/// Works for singular input as well; the 1×1 adjugate is `[1]`.
pub fn adjugate(a: &IntMatrix) -> IntMatrix {
    let n = a.n;
    let mut adj = IntMatrix::zero(n);
    for i in 0..n {
        for j in 0..n {
            let c = bareiss_det(n - 1, minor(a, i, j));
            let c = if (i + j) % 2 == 0 { c } else { -c };
            adj.set(j, i, c);
        }
    }
    adj
}

/// `A^p` by repeated squaring; `A^0` is the identity.
pub fn mat_pow(a: &IntMatrix, mut p: u64) -> IntMatrix {
    let mut result = IntMatrix::identity(a.n);
    let mut base = a.clone();
    while p > 0 {
        if p & 1 == 1 {
            result = &result * &base;
        }
        p >>= 1;
        if p > 0 {
            base = &base * &base;
        }
    }
    result
}

pub use smith::smith_normal_form;

/// Integer polynomial with coefficients stored in ascending degree order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPolynomial {
    coefficients: Vec<BigInt>,
}

impl IntPolynomial {
    /// Trailing zero coefficients are trimmed; the zero polynomial has no
    /// coefficients.
    pub fn new(mut coefficients: Vec<BigInt>) -> Self {
        while coefficients.last().is_some_and(Zero::is_zero) {
            coefficients.pop();
        }
        Self { coefficients }
    }

    pub fn from_i64(coefficients: &[i64]) -> Self {
        Self::new(coefficients.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn coefficients(&self) -> &[BigInt] {
        &self.coefficients
    }

    pub fn degree(&self) -> Option<usize> {
        self.coefficients.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coefficients.last()
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        self.coefficients
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    /// Horner evaluation at a square matrix.
    pub fn eval_matrix(&self, a: &IntMatrix) -> IntMatrix {
        let n = a.dim();
        self.coefficients
            .iter()
            .rev()
            .fold(IntMatrix::zero(n), |acc, c| {
                &(&acc * a) + &IntMatrix::scalar(n, c.clone())
            })
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coefficients.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            }
            first = false;
            let show_coeff = k == 0 || !mag.is_one();
            if show_coeff {
                write!(f, "{mag}")?;
            }
            match k {
                0 => {}
                1 => f.write_str("t")?,
                _ => write!(f, "t^{k}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Characteristic polynomial `det(tI − A)`, monic of degree `n`.
///
/// Faddeev–LeVerrier over the rationals: `M_1 = I`, `c_{n−k} = −tr(A M_k)/k`,
/// `M_{k+1} = A M_k + c_{n−k} I`. The divisions are exact, so the result is
/// cleared back to integers.
pub fn char_poly(a: &IntMatrix) -> IntPolynomial {
    let n = a.dim();
    let to_rat = |m: &IntMatrix| -> Vec<BigRational> {
        m.entries
            .iter()
            .map(|e| BigRational::from_integer(e.clone()))
            .collect()
    };
    let ar = to_rat(a);
    let mat_mul = |x: &[BigRational], y: &[BigRational]| -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let xik = &x[i * n + k];
                if xik.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += xik * &y[k * n + j];
                }
            }
        }
        out
    };

    let mut coeffs = vec![BigRational::zero(); n + 1];
    coeffs[n] = BigRational::one();
    let mut mk = to_rat(&IntMatrix::identity(n));
    for k in 1..=n {
        let amk = mat_mul(&ar, &mk);
        let tr: BigRational = (0..n).map(|i| amk[i * n + i].clone()).sum();
        let c = -tr / BigRational::from_integer(BigInt::from(k));
        coeffs[n - k] = c.clone();
        mk = amk;
        for i in 0..n {
            mk[i * n + i] += &c;
        }
    }
    let ints = coeffs
        .into_iter()
        .map(|c| {
            debug_assert!(
                c.is_integer(),
                "Faddeev–LeVerrier coefficient must be integral"
            );
            c.to_integer()
        })
        .collect();
    IntPolynomial::new(ints)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64(rows)
    }

    #[test]
    fn det_examples() {
        assert_eq!(det(&m(&[&[2, 1], &[1, 1]])), BigInt::from(1));
        assert_eq!(det(&m(&[&[1, 2], &[3, 4]])), BigInt::from(-2));
        assert_eq!(det(&IntMatrix::identity(3)), BigInt::from(1));
        assert_eq!(det(&m(&[&[0, 1], &[1, 0]])), BigInt::from(-1));
        assert_eq!(det(&m(&[&[1, 2], &[2, 4]])), BigInt::from(0));
        assert_eq!(
            det(&m(&[&[0, 2, 1], &[3, 0, 0], &[1, 1, 5]])),
            BigInt::from(-27)
        );
    }

    #[test]
    fn adjugate_examples() {
        assert_eq!(adjugate(&m(&[&[2]])), m(&[&[1]]));
        assert_eq!(adjugate(&m(&[&[2, 0], &[0, 1]])), m(&[&[1, 0], &[0, 2]]));
        let a = m(&[&[2, 1], &[1, 1]]);
        let adj = adjugate(&a);
        assert_eq!(adj, m(&[&[1, -1], &[-1, 2]]));
        assert_eq!(&a * &adj, IntMatrix::scalar(2, det(&a)));
    }

    #[test]
    fn adjugate_of_singular_matrix() {
        let a = m(&[&[1, 2], &[2, 4]]);
        assert_eq!(&a * &adjugate(&a), IntMatrix::zero(2));
    }

    #[test]
    fn mat_pow_examples() {
        let a = m(&[&[1, 2], &[0, 2]]);
        assert_eq!(mat_pow(&a, 2), m(&[&[1, 6], &[0, 4]]));
        assert_eq!(mat_pow(&a, 0), IntMatrix::identity(2));
        // oracle: repeated multiplication
        let mut naive = IntMatrix::identity(2);
        for p in 1..=10u64 {
            naive = &naive * &a;
            let two_p = 1i64 << p;
            assert_eq!(naive, m(&[&[1, 2 * (two_p - 1)], &[0, two_p]]));
            assert_eq!(mat_pow(&a, p), naive);
        }
    }

    #[test]
    fn char_poly_examples() {
        assert_eq!(
            char_poly(&m(&[&[1, 2], &[0, 2]])),
            IntPolynomial::from_i64(&[2, -3, 1])
        );
        assert_eq!(
            char_poly(&m(&[&[0, 1], &[1, 0]])),
            IntPolynomial::from_i64(&[-1, 0, 1])
        );
        assert_eq!(
            char_poly(&m(&[&[2, 1], &[1, 1]])),
            IntPolynomial::from_i64(&[1, -3, 1])
        );
        assert_eq!(char_poly(&m(&[&[5]])), IntPolynomial::from_i64(&[-5, 1]));
    }

    #[test]
    fn char_poly_display() {
        let p = char_poly(&m(&[&[1, 2], &[0, 2]]));
        assert_eq!(p.to_string(), "t^2 - 3t + 2");
    }

    #[test]
    fn cayley_hamilton_3x3() {
        let a = m(&[&[1, -2, 3], &[0, 4, -1], &[2, 2, 2]]);
        assert!(char_poly(&a).eval_matrix(&a).is_zero());
    }

    #[test]
    fn display_round_trips() {
        let a = m(&[&[2, -1], &[10, 0]]);
        assert_eq!(a.to_string(), "2 -1; 10 0");
        assert_eq!(a.to_string().parse::<IntMatrix>().unwrap(), a);
    }
}
