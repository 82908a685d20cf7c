//! Seeded random ensembles of correspondences and the consistency checks run
//! over them.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::degrees::{
    asymptotics_report, corr_degree, degree_table, MonomialCorrespondence, Verdict,
};
use crate::heights::{orbit_heights_fast, MonomialPoint};
use crate::linalg::{det, IntMatrix};
use crate::spectral::{dynamical_degrees, strictness_with_refinement, LogConcavity};

/// Relative tolerance for the degree-ratio check.
pub const RATIO_TOLERANCE: f64 = 0.05;

const BASE_POINT: [i64; 5] = [2, 3, 5, 7, 11];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// `deg_k(f^p) / deg_k(f^{p−1})` is within 5% of `λ_k` at `p = p_max`,
    /// for every strictly log-concave `k`.
    DegreeRatio,
    /// Degrees and dynamical degrees of `(M, N)` and `(N, M)` mirror each other.
    Duality,
    /// Every degree in the table is a positive integer.
    Integrality,
    /// The differences of `deg_l(f^p) / λ_l^p` shrink at the predicted rate.
    Decay,
    /// The growth rate of heights along the orbit of `(2, 3, 5, …)` is one
    /// of the candidate values.
    Membership,
}

impl Check {
    pub const ALL: [Check; 5] = [
        Check::DegreeRatio,
        Check::Duality,
        Check::Integrality,
        Check::Decay,
        Check::Membership,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::DegreeRatio => "degree-ratio",
            Check::Duality => "duality",
            Check::Integrality => "integrality",
            Check::Decay => "decay",
            Check::Membership => "membership",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error(
    "unknown check {0:?}; expected one of degree-ratio, duality, integrality, decay, membership"
)]
pub struct UnknownCheck(pub String);

impl FromStr for Check {
    type Err = UnknownCheck;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| UnknownCheck(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnsembleConfig {
    pub seed: u64,
    pub samples: usize,
    pub dim: usize,
    /// Entries are drawn uniformly from `[−bound, bound]`.
    pub bound: i64,
    pub p_max: u64,
    pub precision: u32,
    pub checks: Vec<Check>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum EnsembleError {
    #[error("entry bound must be at least 1")]
    Bound,
    #[error("dimension must be between 1 and 5")]
    Dimension,
    #[error("p_max must be at least 2")]
    IterateCount,
}

/// A uniformly random nonsingular matrix, redrawn until `det ≠ 0`.
pub fn random_nonsingular<R: Rng>(rng: &mut R, dim: usize, bound: i64) -> IntMatrix {
    loop {
        let rows: Vec<Vec<i64>> = (0..dim)
            .map(|_| (0..dim).map(|_| rng.random_range(-bound..=bound)).collect())
            .collect();
        let a = IntMatrix::from_rows(&rows).expect("rows are square");
        if !det(&a).is_zero() {
            return a;
        }
    }
}

/// The pairs `(M, N)` of an ensemble, in sample order. The same seed always
/// yields the same pairs.
pub fn sample_pairs(
    seed: u64,
    samples: usize,
    dim: usize,
    bound: i64,
) -> Vec<MonomialCorrespondence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let m = random_nonsingular(&mut rng, dim, bound);
            let n = random_nonsingular(&mut rng, dim, bound);
            MonomialCorrespondence::new(m, n).expect("both factors are nonsingular")
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub check: Check,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleReport {
    pub index: usize,
    #[serde(rename = "M")]
    pub m: IntMatrix,
    #[serde(rename = "N")]
    pub n: IntMatrix,
    pub outcomes: Vec<CheckOutcome>,
    /// Observations that are recorded but not failures, such as
    /// submultiplicativity violations.
    pub findings: Vec<Value>,
}

impl SampleReport {
    pub fn pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleReport {
    pub config: EnsembleConfig,
    pub pass: bool,
    pub failures: usize,
    pub samples: Vec<SampleReport>,
}

impl EnsembleReport {
    /// Failed outcomes of one check, with their sample index.
    pub fn failures_of(&self, check: Check) -> impl Iterator<Item = (usize, &CheckOutcome)> {
        self.samples.iter().flat_map(move |s| {
            s.outcomes
                .iter()
                .filter(move |o| o.check == check && !o.pass)
                .map(move |o| (s.index, o))
        })
    }
}

pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleReport, EnsembleError> {
    if config.bound < 1 {
        return Err(EnsembleError::Bound);
    }
    if !(1..=BASE_POINT.len()).contains(&config.dim) {
        return Err(EnsembleError::Dimension);
    }
    if config.p_max < 2 {
        return Err(EnsembleError::IterateCount);
    }
    let pairs = sample_pairs(config.seed, config.samples, config.dim, config.bound);
    let samples: Vec<SampleReport> = pairs
        .into_par_iter()
        .enumerate()
        .map(|(index, f)| run_sample(index, &f, config))
        .collect();
    let failures = samples.iter().filter(|s| !s.pass()).count();
    Ok(EnsembleReport {
        config: config.clone(),
        pass: failures == 0,
        failures,
        samples,
    })
}

/// Runs the configured checks on one correspondence.
pub fn run_sample(
    index: usize,
    f: &MonomialCorrespondence,
    config: &EnsembleConfig,
) -> SampleReport {
    let mut findings = Vec::new();
    let outcomes = config
        .checks
        .iter()
        .map(|&check| {
            let result = match check {
                Check::DegreeRatio => degree_ratio(f, config),
                Check::Duality => duality(f, config),
                Check::Integrality => integrality(f, config, &mut findings),
                Check::Decay => decay(f, config),
                Check::Membership => membership(f, config),
            };
            let (pass, detail) = result.unwrap_or_else(|e| (false, json!({ "error": e })));
            CheckOutcome {
                check,
                pass,
                detail,
            }
        })
        .collect();
    SampleReport {
        index,
        m: f.m().clone(),
        n: f.n().clone(),
        outcomes,
        findings,
    }
}

type Outcome = Result<(bool, Value), String>;

fn strict_indices(f: &MonomialCorrespondence, precision: u32) -> Result<Vec<(usize, f64)>, String> {
    let mut out = Vec::new();
    for l in 1..f.dim() {
        match strictness_with_refinement(f.m(), f.n(), l, precision).map_err(|e| e.to_string())? {
            Some(LogConcavity::Strict { q }) => out.push((l, q)),
            Some(LogConcavity::Violated { q }) => {
                return Err(format!("log-concavity violated at {l} (q = {q})"))
            }
            None => {}
        }
    }
    Ok(out)
}

fn ratio(a: &BigInt, b: &BigInt) -> f64 {
    let r = num_rational::BigRational::new(a.clone(), b.clone());
    num_traits::ToPrimitive::to_f64(&r).unwrap_or(f64::NAN)
}

fn degree_ratio(f: &MonomialCorrespondence, config: &EnsembleConfig) -> Outcome {
    let report = dynamical_degrees(f.m(), f.n(), config.precision).map_err(|e| e.to_string())?;
    let p = config.p_max;
    let mut pass = true;
    let mut rows = Vec::new();
    for (k, _) in strict_indices(f, config.precision)? {
        let last = corr_degree(f, k, p).map_err(|e| e.to_string())?;
        let prev = corr_degree(f, k, p - 1).map_err(|e| e.to_string())?;
        let r = ratio(&last, &prev);
        let lambda = report.lambda(k);
        let rel = (r - lambda).abs() / lambda;
        let ok = rel <= RATIO_TOLERANCE;
        pass &= ok;
        rows.push(
            json!({ "k": k, "ratio": r, "lambda": lambda, "relative_error": rel, "pass": ok }),
        );
    }
    Ok((pass, Value::Array(rows)))
}

fn duality(f: &MonomialCorrespondence, config: &EnsembleConfig) -> Outcome {
    let n = f.dim();
    let dual = f.dual();
    let mut mismatches = Vec::new();
    for p in 1..=config.p_max {
        for l in 0..=n {
            let a = corr_degree(f, l, p).map_err(|e| e.to_string())?;
            let b = corr_degree(&dual, n - l, p).map_err(|e| e.to_string())?;
            if a != b {
                mismatches.push(
                    json!({ "l": l, "p": p, "deg": a.to_string(), "dual_deg": b.to_string() }),
                );
            }
        }
    }
    let here = dynamical_degrees(f.m(), f.n(), config.precision).map_err(|e| e.to_string())?;
    let there =
        dynamical_degrees(dual.m(), dual.n(), config.precision).map_err(|e| e.to_string())?;
    let radius = 2.0 * here.error_radius.max(there.error_radius);
    let mut lambda_gaps = Vec::new();
    for l in 0..=n {
        let gap = (&here.lambdas[l] - &there.lambdas[n - l]).abs().to_f64();
        let rounding = here.lambda(l).abs() * 2f64.powi(-(config.precision as i32) + 16);
        if gap > radius + rounding {
            lambda_gaps.push(json!({ "l": l, "gap": gap, "allowed": radius + rounding }));
        }
    }
    let pass = mismatches.is_empty() && lambda_gaps.is_empty();
    Ok((
        pass,
        json!({ "degree_mismatches": mismatches, "lambda_mismatches": lambda_gaps }),
    ))
}

fn integrality(
    f: &MonomialCorrespondence,
    config: &EnsembleConfig,
    findings: &mut Vec<Value>,
) -> Outcome {
    let table = degree_table(f, config.p_max).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    let det_m = f.det_m().abs();
    let det_n = f.det_n().abs();
    for p in 1..=config.p_max {
        for k in 0..=f.dim() {
            let d = table.get(k, p);
            if !d.is_positive() {
                bad.push(json!({ "k": k, "p": p, "deg": d.to_string() }));
            }
        }
        if *table.get(0, p) != num_traits::pow(det_m.clone(), p as usize)
            || *table.get(f.dim(), p) != num_traits::pow(det_n.clone(), p as usize)
        {
            bad.push(json!({ "p": p, "reason": "boundary degrees differ from |det|^p" }));
        }
    }
    for (k, p, q) in table.submultiplicativity_violations() {
        findings.push(json!({ "submultiplicativity": { "k": k, "p": p, "q": q } }));
    }
    Ok((bad.is_empty(), Value::Array(bad)))
}

fn decay(f: &MonomialCorrespondence, config: &EnsembleConfig) -> Outcome {
    let mut pass = true;
    let mut rows = Vec::new();
    for l in 1..f.dim() {
        let r =
            asymptotics_report(f, l, config.p_max, config.precision).map_err(|e| e.to_string())?;
        let ok = !matches!(r.verdict, Verdict::NotConverged);
        pass &= ok;
        rows.push(json!({
            "l": l,
            "verdict": r.verdict,
            "C": r.c_final,
            "q": r.q,
            "measured_rate": r.measured_rate,
        }));
    }
    Ok((pass, Value::Array(rows)))
}

fn membership(f: &MonomialCorrespondence, config: &EnsembleConfig) -> Outcome {
    let x = MonomialPoint::from_i64(&BASE_POINT[..f.dim()]).map_err(|e| e.to_string())?;
    let series =
        orbit_heights_fast(f, &x, config.p_max, config.precision).map_err(|e| e.to_string())?;
    let pass = series.matched_candidate.is_some();
    let mut detail = series.summary();
    if !pass {
        detail["heights"] = json!(series.values);
    }
    Ok((pass, detail))
}
