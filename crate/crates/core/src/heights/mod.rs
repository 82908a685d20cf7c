//! Weil heights of torus points over the rationals and their Kummer
//! extensions, zero-cycles, and orbit heights under monomial
//! correspondences.
//!
//! A point is stored as `x_i = ζ_i · ∏_q q^{e_iq}` with `ζ_i = exp(2πi t_i)`
//! a root of unity and the prime powers taken as positive real roots. The
//! representation is canonical, so points are compared exactly.

mod factor;
mod orbit;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::degrees::MonomialCorrespondence;
use crate::linalg::{det, smith_normal_form, IntMatrix};
use crate::real::Real;

pub use factor::{factorize, is_probable_prime, FactorBudget, FactorError};
pub use orbit::{
    estimate_alpha, orbit_heights_bruteforce, orbit_heights_fast, AlphaMethod, HeightSeries,
    DEFAULT_CYCLE_CAP,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum HeightError {
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error("coordinate {0} is zero; points must lie in the torus")]
    ZeroCoordinate(usize),
    #[error("point parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch: matrix has dimension {matrix}, point has {point}")]
    DimensionMismatch { matrix: usize, point: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("cycle would exceed {cap} points (next step needs {needed})")]
    CycleTooLarge { needed: usize, cap: usize },
    #[error("iterate count must be at least 1")]
    ZeroIterate,
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
}

/// A point of the torus with coordinates that are roots of unity times
/// rational powers of primes.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonomialPoint {
    primes: Vec<BigUint>,
    /// `exponents[i][j]` is the exponent of `primes[j]` in coordinate `i`.
    exponents: Vec<Vec<BigRational>>,
    torsion: Vec<BigRational>,
}

fn frac(t: &BigRational) -> BigRational {
    t - t.floor()
}

impl MonomialPoint {
    /// Canonicalizes: primes ascending and distinct, no all-zero exponent
    /// column, torsion reduced into `[0, 1)`.
    pub fn new(
        primes: Vec<BigUint>,
        exponents: Vec<Vec<BigRational>>,
        torsion: Vec<BigRational>,
    ) -> Self {
        let n = torsion.len();
        assert_eq!(exponents.len(), n, "one exponent row per coordinate");
        let mut columns: BTreeMap<BigUint, Vec<BigRational>> = BTreeMap::new();
        for (j, q) in primes.into_iter().enumerate() {
            let col = columns
                .entry(q)
                .or_insert_with(|| vec![BigRational::zero(); n]);
            for (i, c) in col.iter_mut().enumerate() {
                *c += &exponents[i][j];
            }
        }
        columns.retain(|_, col| col.iter().any(|e| !e.is_zero()));
        let primes: Vec<BigUint> = columns.keys().cloned().collect();
        let exponents = (0..n)
            .map(|i| columns.values().map(|col| col[i].clone()).collect())
            .collect();
        Self {
            primes,
            exponents,
            torsion: torsion.iter().map(frac).collect(),
        }
    }

    /// Factors a vector of nonzero rationals.
    pub fn from_rationals(x: &[BigRational], budget: &FactorBudget) -> Result<Self, HeightError> {
        let n = x.len();
        let mut primes = Vec::new();
        let mut entries: Vec<(usize, usize, BigRational)> = Vec::new();
        let mut torsion = vec![BigRational::zero(); n];
        for (i, v) in x.iter().enumerate() {
            if v.is_zero() {
                return Err(HeightError::ZeroCoordinate(i));
            }
            if v.is_negative() {
                torsion[i] = BigRational::new(1.into(), 2.into());
            }
            for (part, sign) in [(v.numer(), 1), (v.denom(), -1)] {
                for (q, e) in factorize(part.magnitude(), budget)? {
                    primes.push(q);
                    entries.push((
                        i,
                        primes.len() - 1,
                        BigRational::from_integer((sign * e as i64).into()),
                    ));
                }
            }
        }
        let mut exponents = vec![vec![BigRational::zero(); primes.len()]; n];
        for (i, j, e) in entries {
            exponents[i][j] = e;
        }
        Ok(Self::new(primes, exponents, torsion))
    }

    pub fn from_i64(x: &[i64]) -> Result<Self, HeightError> {
        let v: Vec<BigRational> = x
            .iter()
            .map(|&a| BigRational::from_integer(a.into()))
            .collect();
        Self::from_rationals(&v, &FactorBudget::default())
    }

    /// A point whose coordinates are the roots of unity `exp(2πi t_i)`.
    pub fn torsion_point(t: Vec<BigRational>) -> Self {
        let n = t.len();
        Self::new(Vec::new(), vec![Vec::new(); n], t)
    }

    pub fn dim(&self) -> usize {
        self.torsion.len()
    }

    pub fn primes(&self) -> &[BigUint] {
        &self.primes
    }

    pub fn exponents(&self) -> &[Vec<BigRational>] {
        &self.exponents
    }

    pub fn torsion(&self) -> &[BigRational] {
        &self.torsion
    }

    /// All coordinates are roots of unity.
    pub fn is_torsion(&self) -> bool {
        self.primes.is_empty()
    }

    /// Coordinates as rationals, when the point is rational.
    pub fn to_rationals(&self) -> Option<Vec<BigRational>> {
        let half = BigRational::new(1.into(), 2.into());
        (0..self.dim())
            .map(|i| {
                let sign = if self.torsion[i].is_zero() {
                    BigInt::one()
                } else if self.torsion[i] == half {
                    -BigInt::one()
                } else {
                    return None;
                };
                let mut num = BigInt::one();
                let mut den = BigInt::one();
                for (q, e) in self.primes.iter().zip(&self.exponents[i]) {
                    if !e.is_integer() {
                        return None;
                    }
                    let k = e.to_integer();
                    let qp =
                        BigInt::from_biguint(Sign::Plus, q.pow(k.magnitude().try_into().ok()?));
                    if k.is_negative() {
                        den *= qp;
                    } else {
                        num *= qp;
                    }
                }
                Some(BigRational::new(sign * num, den))
            })
            .collect()
    }
}

impl fmt::Display for MonomialPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coords: Vec<String> = (0..self.dim())
            .map(|i| {
                let mut parts: Vec<String> = self
                    .primes
                    .iter()
                    .zip(&self.exponents[i])
                    .filter(|(_, e)| !e.is_zero())
                    .map(|(q, e)| {
                        if e.is_one() {
                            q.to_string()
                        } else {
                            format!("{q}^({e})")
                        }
                    })
                    .collect();
                if !self.torsion[i].is_zero() {
                    parts.insert(0, format!("e(2πi·{})", self.torsion[i]));
                }
                if parts.is_empty() {
                    "1".to_string()
                } else {
                    parts.join("·")
                }
            })
            .collect();
        write!(f, "({})", coords.join(", "))
    }
}

impl fmt::Debug for MonomialPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Exact rationals are written as strings such as `"-1/2"`.
impl Serialize for MonomialPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let strings = |v: &[BigRational]| v.iter().map(ToString::to_string).collect::<Vec<_>>();
        let mut s = serializer.serialize_struct("MonomialPoint", 3)?;
        s.serialize_field(
            "primes",
            &self
                .primes
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>(),
        )?;
        s.serialize_field(
            "exponents",
            &self
                .exponents
                .iter()
                .map(|r| strings(r))
                .collect::<Vec<_>>(),
        )?;
        s.serialize_field("torsion", &strings(&self.torsion))?;
        s.end()
    }
}

fn parse_rational(token: &str) -> Result<BigRational, HeightError> {
    let t = token.trim().trim_matches('"').replace('\u{2212}', "-");
    let t = t.strip_prefix('+').unwrap_or(&t);
    let bad = || HeightError::Parse(format!("not a rational: {token:?}"));
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (t, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| bad())?;
    let den = BigInt::from_str(den).map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

/// Parses `"2 3"`, `"-2/3, 3"` or a JSON array such as `["-2/3", 3]`.
pub fn parse_point(s: &str) -> Result<Vec<BigRational>, HeightError> {
    let s = s.trim();
    let tokens: Vec<String> = if s.starts_with('[') {
        let value: serde_json::Value =
            serde_json::from_str(s).map_err(|e| HeightError::Parse(e.to_string()))?;
        value
            .as_array()
            .ok_or_else(|| HeightError::Parse("expected a JSON array".into()))?
            .iter()
            .map(|v| match v {
                serde_json::Value::String(t) => Ok(t.clone()),
                serde_json::Value::Number(n) if n.is_i64() || n.is_u64() => Ok(n.to_string()),
                other => Err(HeightError::Parse(format!("not a rational: {other}"))),
            })
            .collect::<Result<_, _>>()?
    } else {
        s.split(|c: char| c.is_whitespace() || c == ',' || c == ';')
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect()
    };
    if tokens.is_empty() {
        return Err(HeightError::Parse("empty point".into()));
    }
    tokens.iter().map(|t| parse_rational(t)).collect()
}

impl FromStr for MonomialPoint {
    type Err = HeightError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_rationals(&parse_point(s)?, &FactorBudget::default())
    }
}

/// Natural logarithms of primes at a fixed precision, computed once each.
pub(crate) struct LogTable {
    prec: u32,
    logs: HashMap<BigUint, Real>,
}

impl LogTable {
    pub(crate) fn new(prec: u32) -> Self {
        Self {
            prec,
            logs: HashMap::new(),
        }
    }

    fn ln(&mut self, q: &BigUint) -> Real {
        let prec = self.prec;
        self.logs
            .entry(q.clone())
            .or_insert_with(|| {
                Real::from_bigint(&BigInt::from_biguint(Sign::Plus, q.clone()), prec + 16).ln()
            })
            .clone()
    }

    /// `Σ_q log q · max(0, max_i −e_iq) + max(0, max_i Σ_q e_iq log q)`.
    pub(crate) fn height(&mut self, x: &MonomialPoint) -> Real {
        let work = self.prec + 16;
        let logs: Vec<Real> = x.primes.iter().map(|q| self.ln(q)).collect();
        let mut total = Real::zero(work);
        for (j, lq) in logs.iter().enumerate() {
            let lowest = x
                .exponents
                .iter()
                .map(|row| &row[j])
                .min()
                .cloned()
                .unwrap_or_else(BigRational::zero);
            if lowest.is_negative() {
                total = &total + &(lq * &Real::from_rational(&-lowest, work));
            }
        }
        let arch = x
            .exponents
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&logs)
                    .fold(Real::zero(work), |acc, (e, lq)| {
                        &acc + &(lq * &Real::from_rational(e, work))
                    })
            })
            .fold(Real::zero(work), Real::max);
        (&total + &arch).with_precision(self.prec)
    }
}

/// Weil height of `x` under `x ↦ [1 : x_1 : … : x_n]`, at `prec` bits.
pub fn weil_height_real(x: &MonomialPoint, prec: u32) -> Real {
    LogTable::new(prec).height(x)
}

pub fn weil_height(x: &MonomialPoint) -> f64 {
    weil_height_real(x, crate::real::DEFAULT_PRECISION).to_f64()
}

/// Coprime integer homogeneous coordinates `[c_0 : … : c_n]` of
/// `[1 : x_1 : … : x_n]` for a rational point; the height is `log max |c_i|`.
pub fn rational_coordinates(x: &MonomialPoint) -> Option<Vec<BigInt>> {
    let coords = x.to_rationals()?;
    let lcm = coords
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let mut out = vec![lcm.clone()];
    out.extend(coords.iter().map(|c| c.numer() * (&lcm / c.denom())));
    Some(out)
}

fn check_dim(b: &IntMatrix, x: &MonomialPoint) -> Result<(), HeightError> {
    if b.dim() != x.dim() {
        return Err(HeightError::DimensionMismatch {
            matrix: b.dim(),
            point: x.dim(),
        });
    }
    Ok(())
}

/// `φ(B)(x)`: exponents become `B · E` and torsion `B · t mod 1`.
pub fn monomial_image(b: &IntMatrix, x: &MonomialPoint) -> Result<MonomialPoint, HeightError> {
    check_dim(b, x)?;
    let n = x.dim();
    let r = x.primes.len();
    let exponents = (0..n)
        .map(|i| {
            (0..r)
                .map(|j| {
                    (0..n)
                        .map(|l| {
                            &x.exponents[l][j] * BigRational::from_integer(b.get(i, l).clone())
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    let torsion = b.mul_rational_vec(&x.torsion);
    Ok(MonomialPoint::new(x.primes.clone(), exponents, torsion))
}

/// Integer-weighted formal sum of points, kept in canonical point order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ZeroCycle {
    terms: BTreeMap<MonomialPoint, BigInt>,
}

impl ZeroCycle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn point(x: MonomialPoint) -> Self {
        let mut c = Self::new();
        c.add(x, BigInt::one());
        c
    }

    /// Adds `mult · [x]`, dropping the term if its multiplicity cancels.
    pub fn add(&mut self, x: MonomialPoint, mult: BigInt) {
        let entry = self.terms.entry(x).or_insert_with(BigInt::zero);
        *entry += mult;
        if entry.is_zero() {
            self.terms.retain(|_, m| !m.is_zero());
        }
    }

    pub fn extend(&mut self, other: ZeroCycle, scale: &BigInt) {
        for (x, m) in other.terms {
            self.add(x, m * scale);
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_multiplicity(&self) -> BigInt {
        self.terms.values().sum()
    }

    pub fn multiplicity(&self, x: &MonomialPoint) -> BigInt {
        self.terms.get(x).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MonomialPoint, &BigInt)> {
        self.terms.iter()
    }

    /// Pushforward under `φ(B)`.
    pub fn image(&self, b: &IntMatrix) -> Result<ZeroCycle, HeightError> {
        let mut out = ZeroCycle::new();
        for (x, m) in &self.terms {
            out.add(monomial_image(b, x)?, m.clone());
        }
        Ok(out)
    }
}

impl Serialize for ZeroCycle {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Term<'a> {
            multiplicity: String,
            point: &'a MonomialPoint,
        }
        let terms: Vec<Term> = self
            .terms
            .iter()
            .map(|(x, m)| Term {
                multiplicity: m.to_string(),
                point: x,
            })
            .collect();
        terms.serialize(serializer)
    }
}

/// All `|det M|` points `y` with `φ(M)(y) = x`, each with multiplicity one.
///
/// With `U · M · V = D` in Smith form, the exponent part is `M⁻¹ · E` and the
/// torsion part is `V · w` where `d_i w_i ≡ (U · t)_i (mod 1)`.
pub fn preimage_cycle(m: &IntMatrix, x: &MonomialPoint) -> Result<ZeroCycle, HeightError> {
    check_dim(m, x)?;
    let d = det(m);
    if d.is_zero() {
        return Err(HeightError::Singular);
    }
    let n = x.dim();
    let r = x.primes.len();
    let adj = crate::linalg::adjugate(m);
    let inv_det = BigRational::new(BigInt::one(), d);
    let exponents: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..r)
                .map(|j| {
                    let s: BigRational = (0..n)
                        .map(|l| {
                            &x.exponents[l][j] * BigRational::from_integer(adj.get(i, l).clone())
                        })
                        .sum();
                    s * &inv_det
                })
                .collect()
        })
        .collect();

    let smith = smith_normal_form(m).map_err(|_| HeightError::Singular)?;
    let s = smith.u.mul_rational_vec(&x.torsion);
    let diag = smith.diagonal();
    let mut cycle = ZeroCycle::new();
    let ranges: Vec<Vec<BigInt>> = diag.iter().map(num_iter_range).collect();
    for choice in cartesian(&ranges) {
        let w: Vec<BigRational> = (0..n)
            .map(|i| {
                (&s[i] + BigRational::from_integer(choice[i].clone()))
                    / BigRational::from_integer(diag[i].clone())
            })
            .collect();
        let t = smith.v.mul_rational_vec(&w);
        cycle.add(
            MonomialPoint::new(x.primes.clone(), exponents.clone(), t),
            BigInt::one(),
        );
    }
    Ok(cycle)
}

fn num_iter_range(d: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut j = BigInt::zero();
    while &j < d {
        out.push(j.clone());
        j += 1;
    }
    out
}

fn cartesian(ranges: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    ranges.iter().fold(vec![Vec::new()], |acc, r| {
        acc.iter()
            .flat_map(|prefix| {
                r.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect()
    })
}

/// `φ(N)_* φ(M)^* [x]`, merging equal points by adding multiplicities.
pub fn corr_image_cycle(
    f: &MonomialCorrespondence,
    x: &MonomialPoint,
) -> Result<ZeroCycle, HeightError> {
    preimage_cycle(f.m(), x)?.image(f.n())
}

/// Image of a whole cycle, with points processed in parallel and merged in
/// canonical order.
pub fn corr_image_of_cycle(
    f: &MonomialCorrespondence,
    c: &ZeroCycle,
) -> Result<ZeroCycle, HeightError> {
    let parts = c
        .terms
        .par_iter()
        .map(|(x, m)| corr_image_cycle(f, x).map(|img| (img, m.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = ZeroCycle::new();
    for (img, m) in parts {
        out.extend(img, &m);
    }
    Ok(out)
}

pub fn cycle_height_real(c: &ZeroCycle, prec: u32) -> Real {
    let mut table = LogTable::new(prec);
    c.terms.iter().fold(Real::zero(prec), |acc, (x, m)| {
        &acc + &(&Real::from_bigint(m, prec) * &table.height(x))
    })
}

/// `Σ a_i h(x_i)`.
pub fn cycle_height(c: &ZeroCycle) -> f64 {
    cycle_height_real(c, crate::real::DEFAULT_PRECISION).to_f64()
}
