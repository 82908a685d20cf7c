//! Degree sequences of monomial maps and monomial correspondences on
//! projective space, and the growth-constant estimator for them.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::linalg::{det, mat_pow, IntMatrix};
use crate::polytope::{mixed_volume_grouped, LatticePolytope, PolytopeError, MAX_DIM};
use crate::real::Real;
use crate::spectral::{self, LogConcavity, SpectralError};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DegreeError {
    #[error("{which} is singular")]
    Singular { which: &'static str },
    #[error("dimension mismatch between M ({m}) and N ({n})")]
    DimensionMismatch { m: usize, n: usize },
    #[error("index {index} outside {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },
    #[error("iterate count must be at least 1")]
    ZeroIterate,
    #[error("dimension {0} exceeds the supported maximum {MAX_DIM}")]
    UnsupportedDimension(usize),
    #[error("internal consistency failure: deg_{k} of iterate {p} is {numerator}/{denominator}, not an integer")]
    NonIntegral {
        k: usize,
        p: u64,
        numerator: BigInt,
        denominator: BigInt,
    },
    #[error("internal consistency failure: deg_{k} of iterate {p} is not positive")]
    NonPositive { k: usize, p: u64 },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// `φ(A): x ↦ (∏_l x_l^{A_il})_i` for nonsingular `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialMap {
    a: IntMatrix,
}

impl MonomialMap {
    pub fn new(a: IntMatrix) -> Result<Self, DegreeError> {
        if det(&a).is_zero() {
            return Err(DegreeError::Singular { which: "A" });
        }
        Ok(Self { a })
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.a
    }

    /// `φ(A) ∘ φ(B) = φ(A · B)`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: &self.a * &other.a,
        }
    }

    pub fn iterate(&self, p: u64) -> Self {
        Self {
            a: mat_pow(&self.a, p),
        }
    }

    pub fn degree(&self, k: usize) -> Result<BigInt, DegreeError> {
        map_degree(&self.a, k)
    }
}

/// The correspondence `x ↦ φ(N)(φ(M)⁻¹(x))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialCorrespondence {
    m: IntMatrix,
    n: IntMatrix,
    det_m: BigInt,
    det_n: BigInt,
}

impl MonomialCorrespondence {
    pub fn new(m: IntMatrix, n: IntMatrix) -> Result<Self, DegreeError> {
        if m.dim() != n.dim() {
            return Err(DegreeError::DimensionMismatch {
                m: m.dim(),
                n: n.dim(),
            });
        }
        let det_m = det(&m);
        if det_m.is_zero() {
            return Err(DegreeError::Singular { which: "M" });
        }
        let det_n = det(&n);
        if det_n.is_zero() {
            return Err(DegreeError::Singular { which: "N" });
        }
        Ok(Self { m, n, det_m, det_n })
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn m(&self) -> &IntMatrix {
        &self.m
    }

    pub fn n(&self) -> &IntMatrix {
        &self.n
    }

    pub fn det_m(&self) -> &BigInt {
        &self.det_m
    }

    pub fn det_n(&self) -> &BigInt {
        &self.det_n
    }

    /// The transposed correspondence `(N, M)`.
    pub fn dual(&self) -> Self {
        Self {
            m: self.n.clone(),
            n: self.m.clone(),
            det_m: self.det_n.clone(),
            det_n: self.det_m.clone(),
        }
    }

    /// `P = N · adj(M)`, with `P · M = det(M) · N`.
    pub fn reduction_matrix(&self) -> IntMatrix {
        spectral::reduction_matrix(&self.m, &self.n)
    }

    /// `|det M| · N · M⁻¹`, i.e. `P` with the sign of `det M` removed.
    ///
    /// When `det M < 0` the monomial map of `det(M) · Id` is not a morphism
    /// of projective space (it involves inversion), so iterates of the
    /// correspondence are governed by this matrix rather than by `P` itself.
    /// Both share the moduli of their eigenvalues.
    pub fn normalized_reduction_matrix(&self) -> IntMatrix {
        let p = self.reduction_matrix();
        if self.det_m.is_negative() {
            -&p
        } else {
            p
        }
    }
}

/// `conv({0} ∪ rows(A))`.
pub fn newton_polytope(a: &IntMatrix) -> LatticePolytope {
    let mut pts: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); a.dim()]];
    pts.extend(a.rows().map(<[BigInt]>::to_vec));
    LatticePolytope::hull(&pts).expect("nonempty points of equal dimension")
}

/// `deg_k(φ(A))` on projective `n`-space, computed as
/// `n! · MV(Δ, …, Δ, Q_A, …, Q_A)` with `n − k` copies of the standard
/// simplex and `k` copies of the Newton polytope.
pub fn map_degree(a: &IntMatrix, k: usize) -> Result<BigInt, DegreeError> {
    let n = a.dim();
    if n > MAX_DIM {
        return Err(DegreeError::UnsupportedDimension(n));
    }
    if k > n {
        return Err(DegreeError::IndexOutOfRange {
            index: k,
            lo: 0,
            hi: n,
        });
    }
    if det(a).is_zero() {
        return Err(DegreeError::Singular { which: "A" });
    }
    let simplex = LatticePolytope::standard_simplex(n);
    let newton = newton_polytope(a);
    let mv = mixed_volume_grouped(&[(&simplex, n - k), (&newton, k)])?;
    let scaled = mv * BigInt::from((1..=n as u64).product::<u64>());
    if !scaled.is_integer() {
        return Err(DegreeError::NonIntegral {
            k,
            p: 1,
            numerator: scaled.numer().clone(),
            denominator: scaled.denom().clone(),
        });
    }
    Ok(scaled.to_integer())
}

/// `deg_1(φ(A))` from the homogenized map: shift every column so that all
/// exponents become nonnegative, then take the largest row sum (with the
/// zero row standing for the homogenizing coordinate).
pub fn map_degree_oracle_deg1(a: &IntMatrix) -> BigInt {
    let n = a.dim();
    let shift: Vec<BigInt> = (0..n)
        .map(|j| {
            let lowest = a.rows().map(|r| &r[j]).min().expect("nonempty").clone();
            (-lowest).max(BigInt::zero())
        })
        .collect();
    let base: BigInt = shift.iter().sum();
    a.rows()
        .map(|r| r.iter().sum::<BigInt>() + &base)
        .chain(std::iter::once(base.clone()))
        .max()
        .expect("nonempty")
}

/// `deg_k(f^p) = deg_k(φ(P̂^p)) / |det M|^{p(k−1)}` where `P̂` is the
/// normalized reduction matrix; `k = 0` and `k = n` are returned directly as
/// `|det M|^p` and `|det N|^p`.
pub fn corr_degree(f: &MonomialCorrespondence, k: usize, p: u64) -> Result<BigInt, DegreeError> {
    let n = f.dim();
    if k > n {
        return Err(DegreeError::IndexOutOfRange {
            index: k,
            lo: 0,
            hi: n,
        });
    }
    if p == 0 {
        return Err(DegreeError::ZeroIterate);
    }
    let pe = u32::try_from(p).expect("iterate count fits in u32");
    if k == 0 {
        return Ok(f.det_m.abs().pow(pe));
    }
    if k == n {
        return Ok(f.det_n.abs().pow(pe));
    }
    let iterate = mat_pow(&f.normalized_reduction_matrix(), p);
    let numerator = map_degree(&iterate, k)?;
    let denominator = f.det_m.abs().pow(pe * (k as u32 - 1));
    let (q, r) = numerator.div_rem(&denominator);
    if !r.is_zero() {
        return Err(DegreeError::NonIntegral {
            k,
            p,
            numerator,
            denominator,
        });
    }
    if !q.is_positive() {
        return Err(DegreeError::NonPositive { k, p });
    }
    Ok(q)
}

/// `deg_k(f^p)` for `0 ≤ k ≤ n` and `1 ≤ p ≤ p_max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeTable {
    dim: usize,
    p_max: u64,
    /// `entries[k][p − 1]`
    entries: Vec<Vec<BigInt>>,
}

impl DegreeTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p_max(&self) -> u64 {
        self.p_max
    }

    pub fn get(&self, k: usize, p: u64) -> &BigInt {
        &self.entries[k][(p - 1) as usize]
    }

    /// Row `k`, indexed by `p − 1`.
    pub fn row(&self, k: usize) -> &[BigInt] {
        &self.entries[k]
    }

    /// CSV with header `p,k,deg`, ordered by `p` then `k`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,k,deg\n");
        for p in 1..=self.p_max {
            for k in 0..=self.dim {
                out.push_str(&format!("{p},{k},{}\n", self.get(k, p)));
            }
        }
        out
    }

    /// Triples `(k, p, q)` with `deg_k(f^{p+q}) > deg_k(f^p) · deg_k(f^q)`.
    pub fn submultiplicativity_violations(&self) -> Vec<(usize, u64, u64)> {
        let mut found = Vec::new();
        for k in 0..=self.dim {
            for p in 1..self.p_max {
                for q in p..=self.p_max - p {
                    if self.get(k, p + q) > &(self.get(k, p) * self.get(k, q)) {
                        found.push((k, p, q));
                    }
                }
            }
        }
        found
    }
}

/// JSON form `{"dim": n, "p_max": p, "deg": [[...], ...]}` with `deg[k][p-1]`
/// written as decimal strings.
impl Serialize for DegreeTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let deg: Vec<Vec<String>> = self
            .entries
            .iter()
            .map(|row| row.iter().map(BigInt::to_string).collect())
            .collect();
        let mut s = serializer.serialize_struct("DegreeTable", 3)?;
        s.serialize_field("dim", &self.dim)?;
        s.serialize_field("p_max", &self.p_max)?;
        s.serialize_field("deg", &deg)?;
        s.end()
    }
}

pub fn degree_table(f: &MonomialCorrespondence, p_max: u64) -> Result<DegreeTable, DegreeError> {
    if p_max == 0 {
        return Err(DegreeError::ZeroIterate);
    }
    let n = f.dim();
    let cells: Vec<(usize, u64)> = (0..=n)
        .flat_map(|k| (1..=p_max).map(move |p| (k, p)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(k, p)| corr_degree(f, k, p))
        .collect::<Result<Vec<_>, _>>()?;
    let entries = values
        .chunks(p_max as usize)
        .map(<[BigInt]>::to_vec)
        .collect();
    Ok(DegreeTable {
        dim: n,
        p_max,
        entries,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converged,
    NotStrict,
    InsufficientP,
    /// Strictly log-concave, but the observed decay is slower than predicted.
    NotConverged,
}

/// Fit of `deg_l(f^p) ≈ C · λ_l^p`.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticsReport {
    pub l: usize,
    pub lambda_l: f64,
    /// `C_p = deg_l(f^p) / λ_l^p` for `p = 1..=p_max`.
    pub c_estimates: Vec<f64>,
    pub c_final: f64,
    /// Predicted decay ratio `λ_{l−1} λ_{l+1} / λ_l²`, when strict.
    pub q: Option<f64>,
    /// `exp` of the least-squares slope of `log |C_p − C_{p−1}|`.
    pub measured_rate: Option<f64>,
    /// From this `p` on, `|C_p − C_{p_max}|` is non-increasing.
    pub burn_in: u64,
    pub verdict: Verdict,
}

const MIN_FIT_P: u64 = 4;

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Estimates `C` in `deg_l(f^p) = C λ_l^p + O(p^r q^p λ_l^p)` and checks that
/// the differences `C_p − C_{p−1}` shrink at the predicted rate `q`.
pub fn asymptotics_report(
    f: &MonomialCorrespondence,
    l: usize,
    p_max: u64,
    precision: u32,
) -> Result<AsymptoticsReport, DegreeError> {
    let n = f.dim();
    if l == 0 || l >= n {
        return Err(DegreeError::IndexOutOfRange {
            index: l,
            lo: 1,
            hi: n.saturating_sub(1),
        });
    }
    if p_max == 0 {
        return Err(DegreeError::ZeroIterate);
    }
    let report = spectral::dynamical_degrees(f.m(), f.n(), precision)?;
    let strict = spectral::strictness_with_refinement(f.m(), f.n(), l, precision)?;
    let q = match strict {
        Some(LogConcavity::Strict { q }) => Some(q),
        _ => None,
    };

    let work = precision + 32;
    let lambda = report.lambdas[l].with_precision(work);
    let mut power = Real::from_i64(1, work);
    let mut c = Vec::with_capacity(p_max as usize);
    for p in 1..=p_max {
        power = &power * &lambda;
        let deg = Real::from_bigint(&corr_degree(f, l, p)?, work);
        c.push(&deg / &power);
    }
    let c_estimates: Vec<f64> = c.iter().map(Real::to_f64).collect();
    let c_final = *c_estimates.last().expect("p_max ≥ 1");

    let last = &c[c.len() - 1];
    let dist: Vec<Real> = c.iter().map(|x| (x - last).abs()).collect();
    let burn_in = (0..dist.len())
        .rev()
        .take_while(|&i| i + 1 >= dist.len() || dist[i] >= dist[i + 1])
        .last()
        .map_or(p_max, |i| i as u64 + 1);

    let mut out = AsymptoticsReport {
        l,
        lambda_l: report.lambda(l),
        c_estimates,
        c_final,
        q,
        measured_rate: None,
        burn_in,
        verdict: Verdict::NotStrict,
    };
    let Some(q) = q else {
        return Ok(out);
    };
    if p_max < MIN_FIT_P {
        out.verdict = Verdict::InsufficientP;
        return Ok(out);
    }

    // differences ΔC_p for p = 2..=p_max, fitted over the tail
    let window = (p_max / 2).max(3) as usize;
    let diffs: Vec<(u64, Real)> = (2..=p_max)
        .map(|p| (p, (&c[p as usize - 1] - &c[p as usize - 2]).abs()))
        .collect();
    let tail = &diffs[diffs.len().saturating_sub(window)..];
    let scale = c.iter().map(|x| x.abs().to_f64()).fold(0.0, f64::max);
    let noise = scale * 2f64.powi(-(precision as i32) + 16);
    let points: Vec<(f64, f64)> = tail
        .iter()
        .filter(|(_, d)| d.to_f64() > noise)
        .map(|(p, d)| (*p as f64, d.ln().to_f64()))
        .collect();
    if points.len() < 2 {
        // differences vanish to working precision: C_p is already constant
        out.measured_rate = Some(0.0);
        out.verdict = Verdict::Converged;
        return Ok(out);
    }
    let rate = least_squares_slope(&points).exp();
    out.measured_rate = Some(rate);
    // a polynomial factor p^r with r ≤ n lifts the log-slope by at most r/p
    let p_start = points[0].0;
    let allowance = n as f64 / p_start + 1e-9;
    out.verdict = if rate.ln() <= q.ln() + allowance {
        Verdict::Converged
    } else {
        Verdict::NotConverged
    };
    Ok(out)
}
