//! Eigenvalue moduli of integer matrices and the closed-form dynamical and
//! arithmetic degrees of a monomial correspondence `(M, N)`.
//!
//! All spectral data comes from the reduction matrix `P = N · adj(M)`: its
//! characteristic polynomial has exact integer coefficients, and the
//! eigenvalues of `N · M⁻¹` are those of `P` divided by `det M`.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::linalg::{adjugate, char_poly, det, IntMatrix, IntPolynomial};
use crate::real::{Complex, Real, DEFAULT_PRECISION, MAX_PRECISION, MIN_PRECISION};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("root refinement did not converge within {iterations} iterations at {precision} bits")]
    IllConditioned { iterations: usize, precision: u32 },
    #[error("precision must be at least {MIN_PRECISION} bits, got {0}")]
    PrecisionTooLow(u32),
    #[error("{which} is singular")]
    Singular { which: &'static str },
    #[error("dimension mismatch between M ({m}) and N ({n})")]
    DimensionMismatch { m: usize, n: usize },
    #[error("log-concavity index {l} outside 1..={max}")]
    IndexOutOfRange { l: usize, max: usize },
    #[error("log-concavity gap at index {l} is within numerical error")]
    Indeterminate { l: usize },
}

/// Moduli of all complex eigenvalues, sorted non-increasing.
#[derive(Clone, Debug)]
pub struct EigenModuli {
    pub moduli: Vec<Real>,
    /// Every modulus is within this distance of a true eigenvalue modulus.
    pub error_radius: f64,
    pub source_poly: IntPolynomial,
    pub precision: u32,
}

impl EigenModuli {
    pub fn moduli_f64(&self) -> Vec<f64> {
        self.moduli.iter().map(Real::to_f64).collect()
    }

    pub fn product(&self) -> Real {
        self.moduli
            .iter()
            .fold(Real::from_i64(1, self.precision), |acc, m| &acc * m)
    }
}

fn upper_f64(x: &Real) -> f64 {
    let f = x.to_f64();
    f + f.abs() * f64::EPSILON * 2.0
}

/// Complex roots of an integer polynomial by Aberth–Ehrlich iteration.
///
/// Returns the roots together with a per-root inclusion radius: each disk
/// `|z − z_i| ≤ r_i` contains a true root.
fn aberth_roots(
    poly: &IntPolynomial,
    prec: u32,
) -> Result<(Vec<Complex>, Vec<f64>), SpectralError> {
    let n = poly.degree().unwrap_or(0);
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let work = prec + 32;
    let coeffs: Vec<Real> = poly
        .coefficients()
        .iter()
        .map(|c| Real::from_bigint(c, work))
        .collect();
    let abs_coeffs: Vec<Real> = coeffs.iter().map(Real::abs).collect();
    let deriv: Vec<Real> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * &Real::from_i64(k as i64, work))
        .collect();
    let lead = coeffs[n].clone();

    // Cauchy bound 1 + max |a_k / a_n|, used as the initial circle radius
    let lead_abs = lead.abs().to_f64();
    let cauchy = 1.0
        + poly.coefficients()[..n]
            .iter()
            .map(|c| c.abs().to_f64().unwrap_or(f64::MAX) / lead_abs)
            .fold(0.0, f64::max);
    let mut z: Vec<Complex> = (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
            Complex::new(
                Real::from_f64(cauchy * theta.cos(), work),
                Real::from_f64(cauchy * theta.sin(), work),
            )
        })
        .collect();

    let horner = |c: &[Real], x: &Complex| -> Complex {
        c.iter().rev().fold(Complex::zero(work), |acc, a| {
            let t = &acc * x;
            Complex::new(&t.re + a, t.im)
        })
    };
    let horner_abs = |c: &[Real], r: &Real| -> Real {
        c.iter()
            .rev()
            .fold(Real::zero(work), |acc, a| &(&acc * r) + a)
    };

    let eps_bits = -(prec as i64) + 4;
    let tol = Real::pow2(eps_bits, work);
    // backward-error target: |p(z)| ≤ 2^-(prec-16) · Σ|a_k||z|^k
    let residual_target = Real::pow2(-(prec as i64) + 16, work);
    let max_iter = 100 + 12 * prec as usize;

    let converged = |z: &[Complex]| -> bool {
        z.iter().all(|zi| {
            let scale = horner_abs(&abs_coeffs, &zi.abs());
            horner(&coeffs, zi).abs() <= &scale * &residual_target
        })
    };

    let mut iterations = 0;
    loop {
        let mut max_step = Real::zero(work);
        for i in 0..n {
            let pz = horner(&coeffs, &z[i]);
            if pz.is_zero() {
                continue;
            }
            let dpz = horner(&deriv, &z[i]);
            let mut repulsion = Complex::zero(work);
            for j in 0..n {
                if j != i {
                    let diff = &z[i] - &z[j];
                    if !diff.is_zero() {
                        repulsion = &repulsion + &diff.recip();
                    }
                }
            }
            let step = if dpz.is_zero() {
                // nudge off a critical point
                Complex::from_real(Real::pow2(eps_bits / 2, work))
            } else {
                let ratio = &pz / &dpz;
                let one = Complex::from_real(Real::from_i64(1, work));
                let denom = &one - &(&ratio * &repulsion);
                if denom.is_zero() {
                    ratio
                } else {
                    &ratio / &denom
                }
            };
            let rel = &step.abs() / &z[i].abs().max(Real::from_i64(1, work));
            max_step = max_step.max(rel);
            z[i] = &z[i] - &step;
        }
        iterations += 1;
        if (max_step <= tol || iterations % 4 == 0) && converged(&z) {
            break;
        }
        if iterations >= max_iter {
            return Err(SpectralError::IllConditioned {
                iterations,
                precision: prec,
            });
        }
    }

    // inclusion radii from residuals
    let eps = 2f64.powi(-(work as i32) + 2);
    let lead_f = lead.abs();
    let radii = (0..n)
        .map(|i| {
            let zi_abs = z[i].abs();
            let rounding = upper_f64(&horner_abs(&abs_coeffs, &zi_abs)) * eps * (2 * n + 2) as f64;
            let resid = upper_f64(&horner(&coeffs, &z[i]).abs()) + rounding;
            let resid_over_lead = resid / lead_f.to_f64();
            // |p(z)| ≥ |a_n| dist(z, roots)^n
            let root_bound = resid_over_lead.powf(1.0 / n as f64);
            // Weierstrass-type disk n·|p(z_i)| / |a_n ∏ (z_i − z_j)|
            let mut prod = Real::from_i64(1, work);
            for j in 0..n {
                if j != i {
                    prod = &prod * &(&z[i] - &z[j]).abs();
                }
            }
            let prod_f = prod.to_f64();
            let weierstrass = if prod_f > 0.0 {
                n as f64 * resid_over_lead / prod_f
            } else {
                f64::INFINITY
            };
            root_bound.min(weierstrass) + zi_abs.to_f64() * eps
        })
        .collect();
    Ok((z, radii))
}

/// Moduli of the eigenvalues of `a`, each within `error_radius` of truth.
pub fn eigen_moduli(a: &IntMatrix, precision: u32) -> Result<EigenModuli, SpectralError> {
    if precision < MIN_PRECISION {
        return Err(SpectralError::PrecisionTooLow(precision));
    }
    let poly = char_poly(a);
    let (roots, radii) = aberth_roots(&poly, precision)?;
    let mut moduli: Vec<Real> = roots
        .iter()
        .map(|z| z.abs().with_precision(precision))
        .collect();
    moduli.sort_by(|x, y| y.partial_cmp(x).expect("moduli are comparable"));
    let error_radius = radii.into_iter().fold(0.0, f64::max);
    Ok(EigenModuli {
        moduli,
        error_radius,
        source_poly: poly,
        precision,
    })
}

/// `P = N · adj(M)`. Satisfies `P · M = det(M) · N`.
pub fn reduction_matrix(m: &IntMatrix, n: &IntMatrix) -> IntMatrix {
    n * &adjugate(m)
}

/// Dynamical degrees `λ_0, …, λ_n` of the correspondence `(M, N)`.
#[derive(Clone, Debug)]
pub struct DynDegReport {
    pub lambdas: Vec<Real>,
    pub det_m: BigInt,
    pub det_n: BigInt,
    /// Bound on `|λ_k − true λ_k|` for every `k`.
    pub error_radius: f64,
    pub precision: u32,
}

impl DynDegReport {
    pub fn dim(&self) -> usize {
        self.lambdas.len() - 1
    }

    pub fn lambdas_f64(&self) -> Vec<f64> {
        self.lambdas.iter().map(Real::to_f64).collect()
    }

    pub fn lambda(&self, k: usize) -> f64 {
        self.lambdas[k].to_f64()
    }
}

/// JSON form `{"lambda": [...], "error_radius": r, "detM": "...", "detN": "..."}`.
/// The serialized radius also covers rounding the λ values to doubles.
impl Serialize for DynDegReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let lambdas = self.lambdas_f64();
        let rounding = lambdas
            .iter()
            .map(|l| l.abs() * f64::EPSILON)
            .fold(0.0, f64::max);
        let mut s = serializer.serialize_struct("DynDegReport", 4)?;
        s.serialize_field("lambda", &lambdas)?;
        s.serialize_field("error_radius", &self.error_radius.max(rounding))?;
        s.serialize_field("detM", &self.det_m.to_string())?;
        s.serialize_field("detN", &self.det_n.to_string())?;
        s.end()
    }
}

fn check_pair(m: &IntMatrix, n: &IntMatrix) -> Result<(BigInt, BigInt), SpectralError> {
    if m.dim() != n.dim() {
        return Err(SpectralError::DimensionMismatch {
            m: m.dim(),
            n: n.dim(),
        });
    }
    let dm = det(m);
    if dm.is_zero() {
        return Err(SpectralError::Singular { which: "M" });
    }
    let dn = det(n);
    if dn.is_zero() {
        return Err(SpectralError::Singular { which: "N" });
    }
    Ok((dm, dn))
}

/// `λ_k = (∏_{i≤k} |ρ'_i|) / |det M|^{k−1}` with `ρ'_i` the eigenvalues of
/// `P = N · adj(M)` in order of decreasing modulus; `λ_0 = |det M|` and
/// `λ_n = |det N|` exactly.
pub fn dynamical_degrees(
    m: &IntMatrix,
    n: &IntMatrix,
    precision: u32,
) -> Result<DynDegReport, SpectralError> {
    let (det_m, det_n) = check_pair(m, n)?;
    let dim = m.dim();
    let p = reduction_matrix(m, n);
    let spec = eigen_moduli(&p, precision)?;
    let work = precision + 16;
    let abs_dm = Real::from_bigint(&det_m.abs(), work);
    let e = Real::from_f64(spec.error_radius, work);

    let mut lambdas = Vec::with_capacity(dim + 1);
    lambdas.push(abs_dm.with_precision(precision));
    let mut error_radius = 0.0f64;
    let mut prod = Real::from_i64(1, work);
    let mut prod_upper = Real::from_i64(1, work);
    // |det M|^{k-1}, starting at k = 1
    let mut divisor = Real::from_i64(1, work);
    for k in 1..=dim {
        prod = &prod * &spec.moduli[k - 1];
        prod_upper = &prod_upper * &(&spec.moduli[k - 1] + &e);
        let lam = &prod / &divisor;
        let err = &(&prod_upper - &prod) / &divisor;
        error_radius = error_radius.max(upper_f64(&err));
        lambdas.push(lam.with_precision(precision));
        divisor = &divisor * &abs_dm;
    }

    // λ_n is forced to |det N|; the computed value must agree
    let exact_n = Real::from_bigint(&det_n.abs(), precision);
    let slack = error_radius + exact_n.to_f64() * 2f64.powi(-(precision as i32) + 8);
    let gap = (&lambdas[dim] - &exact_n).abs().to_f64();
    if gap > slack {
        return Err(SpectralError::IllConditioned {
            iterations: 0,
            precision,
        });
    }
    lambdas[dim] = exact_n;

    Ok(DynDegReport {
        lambdas,
        det_m,
        det_n,
        error_radius,
        precision,
    })
}

/// Deduplicated `{1} ∪ {|ρ'_i|}` for `P = N · adj(M)`, ascending.
#[derive(Clone, Debug, Serialize)]
pub struct Candidates {
    pub values: Vec<f64>,
    pub error_radius: f64,
}

impl Candidates {
    /// Nearest candidate within relative tolerance `rel_tol`.
    pub fn nearest(&self, x: f64, rel_tol: f64) -> Option<f64> {
        self.values
            .iter()
            .copied()
            .map(|c| (c, (x - c).abs()))
            .filter(|&(c, d)| d <= rel_tol * c.max(x.abs()) + self.error_radius)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(c, _)| c)
    }
}

pub fn arithmetic_degree_candidates(
    m: &IntMatrix,
    n: &IntMatrix,
    precision: u32,
) -> Result<Candidates, SpectralError> {
    check_pair(m, n)?;
    let spec = eigen_moduli(&reduction_matrix(m, n), precision)?;
    let merge_tol = 2.0 * spec.error_radius;
    let mut values = vec![1.0];
    values.extend(spec.moduli_f64());
    values.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(values.len());
    for v in values {
        match out.last() {
            Some(&last) if (v - last).abs() <= merge_tol + 4.0 * f64::EPSILON * v.abs() => {
                // keep 1 exact when an eigenvalue modulus collapses onto it
            }
            _ => out.push(v),
        }
    }
    Ok(Candidates {
        values: out,
        error_radius: spec.error_radius,
    })
}

/// Outcome of the strict log-concavity test at one index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LogConcavity {
    /// `λ_l² > λ_{l−1} λ_{l+1}`; carries `q = λ_{l−1} λ_{l+1} / λ_l² < 1`.
    Strict { q: f64 },
    /// `λ_l² < λ_{l−1} λ_{l+1}` beyond error (never expected).
    Violated { q: f64 },
}

/// Strict log-concavity at `l`, with a margin covering the report's error
/// radius. Within the margin the answer is [`SpectralError::Indeterminate`].
pub fn log_concavity_strict(
    report: &DynDegReport,
    l: usize,
) -> Result<LogConcavity, SpectralError> {
    let n = report.dim();
    if l == 0 || l >= n {
        return Err(SpectralError::IndexOutOfRange {
            l,
            max: n.saturating_sub(1),
        });
    }
    let work = report.precision + 16;
    let lo = &report.lambdas[l - 1];
    let mid = &report.lambdas[l];
    let hi = &report.lambdas[l + 1];
    let sq = mid * mid;
    let outer = lo * hi;
    let gap = &sq - &outer;
    let e = Real::from_f64(report.error_radius, work);
    // |δ(λ_l²)| + |δ(λ_{l-1}λ_{l+1})| to first order, plus e² terms
    let two = Real::from_i64(2, work);
    let margin = &(&(&(&two * mid) + lo) + hi) * &e + &(&two * &(&e * &e));
    let rounding = &sq.abs().max(outer.abs()) * &Real::pow2(-(report.precision as i64) + 8, work);
    let margin = &margin + &rounding;
    let q = (&outer / &sq).to_f64();
    if gap.abs() <= margin {
        Err(SpectralError::Indeterminate { l })
    } else if gap.is_negative() {
        Ok(LogConcavity::Violated { q })
    } else {
        Ok(LogConcavity::Strict { q })
    }
}

/// Strictness at `l`, recomputing the report at doubled precision (up to
/// [`MAX_PRECISION`]) while the answer is indeterminate. `None` means the gap
/// stayed within error at the maximum precision, i.e. equality to all
/// available digits.
pub fn strictness_with_refinement(
    m: &IntMatrix,
    n: &IntMatrix,
    l: usize,
    precision: u32,
) -> Result<Option<LogConcavity>, SpectralError> {
    let mut prec = precision.max(MIN_PRECISION);
    loop {
        let report = dynamical_degrees(m, n, prec)?;
        match log_concavity_strict(&report, l) {
            Ok(v) => return Ok(Some(v)),
            Err(SpectralError::Indeterminate { .. }) if prec < MAX_PRECISION => {
                prec = (prec * 2).min(MAX_PRECISION);
            }
            Err(SpectralError::Indeterminate { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
}

/// Reads `MONODYN_PRECISION`, falling back to the built-in default.
pub fn default_precision() -> u32 {
    std::env::var("MONODYN_PRECISION")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_PRECISION)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64(rows)
    }

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn eigen_moduli_examples() {
        let e = eigen_moduli(&m(&[&[1, 2], &[0, 2]]), 128).unwrap();
        assert_close(&e.moduli_f64(), &[2.0, 1.0], 1e-15);
        assert!(e.error_radius < 1e-20);

        let e = eigen_moduli(&m(&[&[2, 1], &[1, 1]]), 128).unwrap();
        let s5 = 5f64.sqrt();
        assert_close(
            &e.moduli_f64(),
            &[(3.0 + s5) / 2.0, (3.0 - s5) / 2.0],
            1e-15,
        );

        let e = eigen_moduli(&m(&[&[0, -1], &[1, 0]]), 128).unwrap();
        assert_close(&e.moduli_f64(), &[1.0, 1.0], 1e-15);
    }

    #[test]
    fn repeated_roots_have_honest_radius() {
        // (t - 1)^3
        let e = eigen_moduli(&IntMatrix::identity(3), 128).unwrap();
        assert_close(&e.moduli_f64(), &[1.0, 1.0, 1.0], 1e-10);
        assert!(e.error_radius < 1e-10);
        assert!(e.error_radius > 0.0);
        // jordan block
        let e = eigen_moduli(&m(&[&[3, 1], &[0, 3]]), 128).unwrap();
        assert_close(&e.moduli_f64(), &[3.0, 3.0], 1e-15);
    }

    #[test]
    fn radius_tightens_with_precision() {
        let a = m(&[&[2, 1, 0], &[0, 2, 1], &[0, 0, 2]]);
        let lo = eigen_moduli(&a, 64).unwrap().error_radius;
        let hi = eigen_moduli(&a, 512).unwrap().error_radius;
        assert!(hi < lo, "{hi} !< {lo}");
    }

    #[test]
    fn rejects_low_precision() {
        assert_eq!(
            eigen_moduli(&m(&[&[1]]), 20).unwrap_err(),
            SpectralError::PrecisionTooLow(20)
        );
    }

    #[test]
    fn dynamical_degree_examples() {
        let r = dynamical_degrees(&m(&[&[2]]), &m(&[&[2]]), 128).unwrap();
        assert_close(&r.lambdas_f64(), &[2.0, 2.0], 1e-15);
        let r = dynamical_degrees(&m(&[&[2]]), &m(&[&[1]]), 128).unwrap();
        assert_close(&r.lambdas_f64(), &[2.0, 1.0], 1e-15);
        let r = dynamical_degrees(&m(&[&[2, 0], &[0, 1]]), &m(&[&[1, 1], &[0, 1]]), 128).unwrap();
        assert_close(&r.lambdas_f64(), &[2.0, 2.0, 1.0], 1e-15);
    }

    #[test]
    fn dynamical_degrees_reject_singular() {
        assert_eq!(
            dynamical_degrees(&m(&[&[1, 2], &[2, 4]]), &IntMatrix::identity(2), 128).unwrap_err(),
            SpectralError::Singular { which: "M" }
        );
        assert_eq!(
            dynamical_degrees(&IntMatrix::identity(2), &m(&[&[0, 0], &[0, 1]]), 128).unwrap_err(),
            SpectralError::Singular { which: "N" }
        );
    }

    #[test]
    fn report_json_shape() {
        let r = dynamical_degrees(&m(&[&[2, 0], &[0, 1]]), &m(&[&[1, 1], &[0, 1]]), 128).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["detM"], "2");
        assert_eq!(v["detN"], "1");
        assert_eq!(v["lambda"].as_array().unwrap().len(), 3);
        assert!(v["error_radius"].as_f64().unwrap() >= 0.0);
    }

    #[test]
    fn candidate_examples() {
        let c = arithmetic_degree_candidates(&m(&[&[2]]), &m(&[&[2]]), 128).unwrap();
        assert_close(&c.values, &[1.0, 2.0], 1e-15);
        let c = arithmetic_degree_candidates(&m(&[&[2]]), &m(&[&[1]]), 128).unwrap();
        assert_close(&c.values, &[1.0], 1e-15);
        let c = arithmetic_degree_candidates(&m(&[&[2, 0], &[0, 1]]), &m(&[&[1, 1], &[0, 1]]), 128)
            .unwrap();
        assert_close(&c.values, &[1.0, 2.0], 1e-15);
        assert_eq!(c.nearest(2.01, 0.02), Some(2.0));
        assert_eq!(c.nearest(1.5, 0.02), None);
    }

    #[test]
    fn log_concavity_examples() {
        let r = dynamical_degrees(&m(&[&[2, 0], &[0, 1]]), &m(&[&[1, 1], &[0, 1]]), 128).unwrap();
        match log_concavity_strict(&r, 1).unwrap() {
            LogConcavity::Strict { q } => assert!((q - 0.5).abs() < 1e-15),
            other => panic!("expected strict, got {other:?}"),
        }
        let r = dynamical_degrees(&IntMatrix::identity(2), &m(&[&[2, 1], &[1, 1]]), 128).unwrap();
        assert!(matches!(
            log_concavity_strict(&r, 1),
            Ok(LogConcavity::Strict { .. })
        ));
        let r = dynamical_degrees(&m(&[&[2]]), &m(&[&[2]]), 128).unwrap();
        assert_eq!(
            log_concavity_strict(&r, 1).unwrap_err(),
            SpectralError::IndexOutOfRange { l: 1, max: 0 }
        );
    }

    #[test]
    fn equality_stays_indeterminate() {
        let two = IntMatrix::scalar(2, BigInt::from(2));
        let r = dynamical_degrees(&IntMatrix::identity(2), &two, 128).unwrap();
        assert_eq!(
            log_concavity_strict(&r, 1).unwrap_err(),
            SpectralError::Indeterminate { l: 1 }
        );
        assert_eq!(
            strictness_with_refinement(&IntMatrix::identity(2), &two, 1, 128).unwrap(),
            None
        );
    }

    #[test]
    fn reduction_matrix_identity() {
        let mm = m(&[&[2, 0], &[0, 1]]);
        let nn = m(&[&[1, 1], &[0, 1]]);
        let p = reduction_matrix(&mm, &nn);
        assert_eq!(p, m(&[&[1, 2], &[0, 2]]));
        assert_eq!(&p * &mm, nn.scale(&det(&mm)));
    }
}
