use num_traits::ToPrimitive;
use serde::Serialize;

use super::{corr_image_of_cycle, monomial_image, HeightError, LogTable, MonomialPoint, ZeroCycle};
use crate::degrees::MonomialCorrespondence;
use crate::real::Real;
use crate::spectral::{arithmetic_degree_candidates, Candidates};

/// Largest number of distinct points the brute-force path will hold.
pub const DEFAULT_CYCLE_CAP: usize = 1 << 16;

/// Relative tolerance for matching an estimate to a candidate.
pub const MATCH_TOLERANCE: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaMethod {
    /// Every height is zero.
    TorsionOrbit,
    /// Extrapolated limit of the tail ratios.
    TailRatio,
    /// Slope of the upper envelope of `log h_p`, which ignores dips from
    /// oscillating phases.
    TailFit,
    /// `h_p^{1/p}` at the last `p` with nonzero height.
    Root,
}

/// Orbit heights `h_1, …, h_{p_max}` and the growth rate read off them.
#[derive(Clone, Debug, Serialize)]
pub struct HeightSeries {
    pub values: Vec<f64>,
    pub alpha_estimate: f64,
    pub matched_candidate: Option<f64>,
    pub torsion_orbit: bool,
    pub method: AlphaMethod,
}

impl HeightSeries {
    fn from_values(values: Vec<Real>, candidates: &Candidates) -> Self {
        let torsion_orbit = values.iter().all(Real::is_zero);
        let values: Vec<f64> = values.iter().map(Real::to_f64).collect();
        let (alpha_estimate, method) = if torsion_orbit {
            (1.0, AlphaMethod::TorsionOrbit)
        } else {
            estimate_alpha(&values)
        };
        let matched_candidate = candidates.nearest(alpha_estimate, MATCH_TOLERANCE);
        Self {
            values,
            alpha_estimate,
            matched_candidate,
            torsion_orbit,
            method,
        }
    }

    /// CSV with header `p,height`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,height\n");
        for (i, h) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{h:e}\n", i + 1));
        }
        out
    }

    /// `{"alpha": …, "candidate": …, "flag": …}`.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": self.alpha_estimate,
            "candidate": self.matched_candidate,
            "flag": if self.torsion_orbit { Some("torsion-orbit") } else { None },
            "method": self.method,
        })
    }
}

/// Slope of the line lying above every point `(x, y)` with the least total
/// gap. It touches the upper hull at the mean abscissa, so isolated dips
/// (from oscillating phases) do not pull it down.
fn upper_support_slope(points: &[(f64, f64)]) -> f64 {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &pt in points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or below the segment a–pt
            if (b.0 - a.0) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 - a.0) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let mean = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let slope = |w: &[(f64, f64)]| (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
    let edges: Vec<f64> = hull.windows(2).map(slope).collect();
    match hull.iter().position(|v| v.0 >= mean) {
        Some(i) if hull[i].0 == mean && i > 0 && i < edges.len() => (edges[i - 1] + edges[i]) / 2.0,
        Some(i) if i > 0 => edges[i - 1],
        _ => edges[0],
    }
}

const RATIO_TAIL: usize = 12;
const LEVIN_ORDER: usize = 6;
const LEVIN_AGREEMENT: f64 = 0.001;

/// Levin u-transform of order `k` on the last `k + 1` terms of `s`. It is
/// exact for limits approached like `c/p` as well as geometrically, which
/// covers both Jordan blocks and a subdominant eigenvalue.
fn levin_u(s: &[f64], k: usize) -> Option<f64> {
    let start = s.len().checked_sub(k + 1)?;
    if start == 0 {
        return None;
    }
    let last = s.len() as f64;
    let (mut num, mut den) = (0.0, 0.0);
    let mut binom = 1.0;
    for j in 0..=k {
        let i = start + j;
        let step = s[i] - s[i - 1];
        if step == 0.0 {
            return Some(s[i]);
        }
        let idx = (i + 1) as f64;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign * binom * (idx / last).powi(k as i32 - 1) / (idx * step);
        num += c * s[i];
        den += c;
        binom *= (k - j) as f64 / (j + 1) as f64;
    }
    let v = num / den;
    v.is_finite().then_some(v)
}

/// Limit of the two-step ratios `sqrt(h_{p+2}/h_p)` when the Levin transforms
/// of two orders and two windows agree. Two steps make period-two sign
/// patterns constant.
fn ratio_limit(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < RATIO_TAIL + 2 || values[n - RATIO_TAIL - 2..].iter().any(|&h| h <= 0.0) {
        return None;
    }
    let ratios: Vec<f64> = values[n - RATIO_TAIL - 2..]
        .windows(3)
        .map(|w| (w[2] / w[0]).sqrt())
        .collect();
    let a = levin_u(&ratios, LEVIN_ORDER)?;
    let b = levin_u(&ratios, LEVIN_ORDER + 1)?;
    let c = levin_u(&ratios[..ratios.len() - 1], LEVIN_ORDER)?;
    let spread = (a - b).abs().max((a - c).abs());
    (a > 0.0 && spread < LEVIN_AGREEMENT * a).then_some(a)
}

/// Growth rate of a height sequence: the extrapolated limit of the tail
/// ratios when it is stable, otherwise the slope of the upper envelope of
/// `log h_p`, and `h_p^{1/p}` when too few heights are positive.
pub fn estimate_alpha(values: &[f64]) -> (f64, AlphaMethod) {
    let n = values.len();
    if values.iter().all(|&h| h == 0.0) {
        return (1.0, AlphaMethod::TorsionOrbit);
    }
    if let Some(r) = ratio_limit(values) {
        return (r.max(1.0), AlphaMethod::TailRatio);
    }
    // envelope over the last two thirds of the orbit
    let start = n / 3;
    let points: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, &h)| h > 0.0)
        .map(|(i, &h)| ((i + 1) as f64, h.ln()))
        .collect();
    if points.len() >= 3 {
        return (
            upper_support_slope(&points).exp().max(1.0),
            AlphaMethod::TailFit,
        );
    }
    let (p, h) = values
        .iter()
        .enumerate()
        .rev()
        .find(|(_, &h)| h > 0.0)
        .expect("some height is nonzero");
    (h.max(1.0).powf(1.0 / (p + 1) as f64), AlphaMethod::Root)
}

/// Heights of `f^p(x)` through `h(f^p(x)) = h(φ(P̂^p)(x))`, where `P̂` is the
/// normalized reduction matrix.
pub fn orbit_heights_fast(
    f: &MonomialCorrespondence,
    x: &MonomialPoint,
    p_max: u64,
    precision: u32,
) -> Result<HeightSeries, HeightError> {
    if p_max == 0 {
        return Err(HeightError::ZeroIterate);
    }
    let candidates = arithmetic_degree_candidates(f.m(), f.n(), precision)?;
    let step = f.normalized_reduction_matrix();
    let mut table = LogTable::new(precision);
    let mut y = x.clone();
    let mut values = Vec::with_capacity(p_max as usize);
    for _ in 0..p_max {
        y = monomial_image(&step, &y)?;
        values.push(table.height(&y));
    }
    Ok(HeightSeries::from_values(values, &candidates))
}

/// Heights of `f^p(x)` by expanding the cycles `f^p(x)` point by point.
/// Cycle sizes grow like `|det M|^p`; `cap` bounds the number of points.
pub fn orbit_heights_bruteforce(
    f: &MonomialCorrespondence,
    x: &MonomialPoint,
    p_max: u64,
    precision: u32,
    cap: usize,
) -> Result<HeightSeries, HeightError> {
    if p_max == 0 {
        return Err(HeightError::ZeroIterate);
    }
    let candidates = arithmetic_degree_candidates(f.m(), f.n(), precision)?;
    let fan_out = f.det_m().magnitude().to_usize().unwrap_or(usize::MAX);
    let mut table = LogTable::new(precision);
    let mut cycle = ZeroCycle::point(x.clone());
    let mut values = Vec::with_capacity(p_max as usize);
    for _ in 0..p_max {
        let needed = cycle.len().saturating_mul(fan_out);
        if needed > cap {
            return Err(HeightError::CycleTooLarge { needed, cap });
        }
        cycle = corr_image_of_cycle(f, &cycle)?;
        let h = cycle.iter().fold(Real::zero(precision), |acc, (y, m)| {
            &acc + &(&Real::from_bigint(m, precision) * &table.height(y))
        });
        values.push(h);
    }
    Ok(HeightSeries::from_values(values, &candidates))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(f: impl Fn(f64) -> f64) -> Vec<f64> {
        (1..=25).map(|p| f(p as f64)).collect()
    }

    #[test]
    fn polynomial_factor_is_extrapolated_away() {
        // a Jordan block: h_p = (p + 3)·2^p, whose last ratio is about 2.07
        let (a, method) = estimate_alpha(&seq(|p| (p + 3.0) * 2f64.powf(p)));
        assert_eq!(method, AlphaMethod::TailRatio);
        assert!((a - 2.0).abs() < 0.01, "{a}");
    }

    #[test]
    fn period_two_pattern() {
        let (a, _) = estimate_alpha(&seq(|p| (2.0 + (p % 2.0)) * 6f64.powf(p)));
        assert!((a - 6.0).abs() < 1e-9, "{a}");
    }

    #[test]
    fn subdominant_term() {
        let (a, _) = estimate_alpha(&seq(|p| 5f64.powf(p) + 3.0 * 4.5f64.powf(p)));
        assert!((a - 5.0).abs() < 0.05, "{a}");
    }

    #[test]
    fn oscillating_phase_uses_envelope() {
        let (a, method) = estimate_alpha(&seq(|p| 3f64.powf(p) * (1.1 + (1.3 * p).cos())));
        assert_eq!(method, AlphaMethod::TailFit);
        assert!((a - 3.0).abs() < 0.06, "{a}");
    }

    #[test]
    fn zero_heights() {
        assert_eq!(estimate_alpha(&[0.0; 10]), (1.0, AlphaMethod::TorsionOrbit));
    }

    #[test]
    fn levin_is_exact_on_geometric_tails() {
        let s: Vec<f64> = (1..=12).map(|p| 4.0 + 0.5f64.powi(p)).collect();
        assert!((levin_u(&s, 6).unwrap() - 4.0).abs() < 1e-9);
    }
}
