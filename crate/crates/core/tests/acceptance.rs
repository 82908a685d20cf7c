//! Acceptance run. Prints one PASS/FAIL line per criterion, with the failing
//! cases underneath, and exits nonzero when any criterion fails.

use std::f64::consts::{LN_2, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use monodyn_core::degrees::{
    asymptotics_report, degree_table, map_degree, map_degree_oracle_deg1, MonomialCorrespondence,
};
use monodyn_core::ensemble::{
    random_nonsingular, run_ensemble, Check, EnsembleConfig, EnsembleReport,
};
use monodyn_core::heights::{
    monomial_image, orbit_heights_bruteforce, orbit_heights_fast, weil_height, MonomialPoint,
    DEFAULT_CYCLE_CAP,
};
use monodyn_core::linalg::{adjugate, char_poly, det, smith_normal_form};
use monodyn_core::polytope::{mixed_volume, LatticePolytope};
use monodyn_core::IntMatrix;

const PREC: u32 = 128;
const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    summary: String,
    failures: Vec<String>,
}

impl Outcome {
    fn new(failures: Vec<String>, summary: String) -> Self {
        Self {
            pass: failures.is_empty(),
            summary,
            failures,
        }
    }
}

fn mat(rows: &[&[i64]]) -> IntMatrix {
    IntMatrix::from_i64(rows)
}

fn corr(m: &[&[i64]], n: &[&[i64]]) -> MonomialCorrespondence {
    MonomialCorrespondence::new(mat(m), mat(n)).unwrap()
}

fn ensemble(dim: usize, samples: usize, p_max: u64, checks: Vec<Check>) -> EnsembleReport {
    run_ensemble(&EnsembleConfig {
        seed: SEED,
        samples,
        dim,
        bound: 3,
        p_max,
        precision: PREC,
        checks,
    })
    .unwrap()
}

fn failures_of(report: &EnsembleReport, check: Check) -> Vec<String> {
    report
        .failures_of(check)
        .map(|(i, o)| {
            let s = &report.samples[i];
            format!(
                "n={} sample {i}: M = {}, N = {}: {}",
                report.config.dim, s.m, s.n, o.detail
            )
        })
        .collect()
}

fn degree_ratios() -> Outcome {
    let start = Instant::now();
    let two = ensemble(2, 50, 10, vec![Check::DegreeRatio]);
    let three = ensemble(3, 20, 6, vec![Check::DegreeRatio]);
    let elapsed = start.elapsed();
    let mut failures = failures_of(&two, Check::DegreeRatio);
    failures.extend(failures_of(&three, Check::DegreeRatio));
    if elapsed > Duration::from_secs(300) {
        failures.push(format!("runtime {elapsed:?} exceeds 5 minutes"));
    }
    let bad2 = two.failures_of(Check::DegreeRatio).count();
    let bad3 = three.failures_of(Check::DegreeRatio).count();
    Outcome::new(
        failures,
        format!(
            "degree ratios within 5% of λ_k: n=2 {}/50, n=3 {}/20, {:.1}s",
            50 - bad2,
            20 - bad3,
            elapsed.as_secs_f64()
        ),
    )
}

fn exact_fixtures() -> Outcome {
    let mut failures = Vec::new();
    let square = degree_table(&corr(&[&[2]], &[&[2]]), 12).unwrap();
    let shear = degree_table(&corr(&[&[2, 0], &[0, 1]], &[&[1, 1], &[0, 1]]), 12).unwrap();
    for p in 1..=12u64 {
        let two_p = BigInt::one() << p as usize;
        for k in 0..=1 {
            if *square.get(k, p) != two_p {
                failures.push(format!("square map deg_{k} at p={p}: {}", square.get(k, p)));
            }
        }
        let expected = (BigInt::one() << (p as usize + 1)) - 1;
        if *shear.get(1, p) != expected {
            failures.push(format!(
                "shear deg_1 at p={p}: {} ≠ {expected}",
                shear.get(1, p)
            ));
        }
    }
    Outcome::new(
        failures,
        "square map 2^p and shear 2^{p+1}−1 for p ≤ 12".into(),
    )
}

fn degree_cross_validation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = Vec::new();
    for i in 0..200 {
        let n = i % 4 + 1;
        let a = random_nonsingular(&mut rng, n, 3);
        let d1 = map_degree(&a, 1).unwrap();
        let oracle = map_degree_oracle_deg1(&a);
        if d1 != oracle {
            failures.push(format!("A = {a}: deg_1 {d1}, homogenization {oracle}"));
        }
        if !map_degree(&a, 0).unwrap().is_one() {
            failures.push(format!("A = {a}: deg_0 ≠ 1"));
        }
        if map_degree(&a, n).unwrap() != det(&a).abs() {
            failures.push(format!("A = {a}: deg_n ≠ |det A|"));
        }
    }
    Outcome::new(
        failures,
        "200 random A with n ≤ 4 against homogenization".into(),
    )
}

fn integrality() -> Outcome {
    let two = ensemble(2, 50, 10, vec![Check::Integrality]);
    let three = ensemble(3, 20, 6, vec![Check::Integrality]);
    let mut failures = failures_of(&two, Check::Integrality);
    failures.extend(failures_of(&three, Check::Integrality));
    let findings: usize = two
        .samples
        .iter()
        .chain(&three.samples)
        .map(|s| s.findings.len())
        .sum();
    Outcome::new(
        failures,
        format!("70 ensemble tables integral; {findings} submultiplicativity findings logged"),
    )
}

fn duality() -> Outcome {
    let two = ensemble(2, 50, 10, vec![Check::Duality]);
    let three = ensemble(3, 20, 6, vec![Check::Duality]);
    let mut failures = failures_of(&two, Check::Duality);
    failures.extend(failures_of(&three, Check::Duality));
    Outcome::new(
        failures,
        "exact degree duality and λ duality on 70 pairs".into(),
    )
}

fn growth_constant() -> Outcome {
    let mut failures = Vec::new();
    let shear =
        asymptotics_report(&corr(&[&[2, 0], &[0, 1]], &[&[1, 1], &[0, 1]]), 1, 10, PREC).unwrap();
    let c_err = (shear.c_final - 2.0).abs() / 2.0;
    if c_err > 0.01 {
        failures.push(format!(
            "shear C_10 = {} is not within 1% of 2",
            shear.c_final
        ));
    }
    let rate = shear.measured_rate.unwrap_or(f64::NAN);
    if rate.is_nan() || (rate - 0.5).abs() > 0.05 {
        failures.push(format!("shear decay rate {rate} is not within 10% of 1/2"));
    }
    let cat =
        asymptotics_report(&corr(&[&[1, 0], &[0, 1]], &[&[2, 1], &[1, 1]]), 1, 10, PREC).unwrap();
    let c = &cat.c_estimates;
    let step = (c[9] - c[8]).abs();
    if step >= 1e-3 * c[9] {
        failures.push(format!(
            "|ΔC_10| = {step} for (Id, [[2,1],[1,1]]) with C = {}",
            c[9]
        ));
    }
    Outcome::new(
        failures,
        format!(
            "shear C = {:.6}, rate {:.4}; (Id, [[2,1],[1,1]]) C = {:.6}, |ΔC_10| = {:.2e}",
            shear.c_final, rate, c[9], step
        ),
    )
}

fn rational(s: &str) -> MonomialPoint {
    s.parse().unwrap()
}

fn fast_vs_bruteforce() -> Outcome {
    let mut cases: Vec<(MonomialCorrespondence, MonomialPoint)> = Vec::new();
    for m in [2, -2] {
        for n in [1, 2, 3, -1, -3] {
            for x in ["2", "4", "-3", "6/5", "1"] {
                cases.push((corr(&[&[m]], &[&[n]]), rational(x)));
            }
        }
    }
    let unimodular: [&[&[i64]]; 4] = [
        &[&[2, 1], &[1, 1]],
        &[&[1, 1], &[0, 1]],
        &[&[0, 1], &[1, 0]],
        &[&[1, 0], &[0, -1]],
    ];
    let targets: [&[&[i64]]; 3] = [
        &[&[1, 1], &[0, 1]],
        &[&[2, 0], &[0, 1]],
        &[&[1, 2], &[3, 4]],
    ];
    for m in unimodular {
        for n in targets {
            for x in ["2 3", "-1/2, 5"] {
                cases.push((corr(m, n), rational(x)));
            }
        }
    }
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (f, x) in &cases {
        let fast = orbit_heights_fast(f, x, 6, PREC).unwrap();
        let slow = orbit_heights_bruteforce(f, x, 6, PREC, DEFAULT_CYCLE_CAP).unwrap();
        for (p, (a, b)) in fast.values.iter().zip(&slow.values).enumerate() {
            let rel = (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
            worst = worst.max(rel);
            if rel > 1e-9 {
                failures.push(format!(
                    "M = {}, N = {}, x = {x}, p = {}: {a} vs {b}",
                    f.m(),
                    f.n(),
                    p + 1
                ));
            }
        }
    }
    Outcome::new(
        failures,
        format!(
            "{} fixtures up to p = 6, worst relative gap {worst:.1e}",
            cases.len()
        ),
    )
}

fn membership() -> Outcome {
    let two = ensemble(2, 50, 25, vec![Check::Membership]);
    let three = ensemble(3, 50, 25, vec![Check::Membership]);
    let mut failures = failures_of(&two, Check::Membership);
    failures.extend(failures_of(&three, Check::Membership));
    let torsion = orbit_heights_fast(&corr(&[&[2]], &[&[1]]), &rational("1"), 25, PREC).unwrap();
    if !(torsion.torsion_orbit && torsion.values.iter().all(|&h| h == 0.0)) {
        failures.push("square-root orbit of 1 is not flagged as a torsion orbit".into());
    }
    let bad =
        two.failures_of(Check::Membership).count() + three.failures_of(Check::Membership).count();
    Outcome::new(
        failures,
        format!(
            "growth rate matches a candidate within 2% for {}/100 pairs (n = 2, 3); torsion orbit flagged",
            100 - bad
        ),
    )
}

/// `log M(f) = ∫₀¹ log |f(e^{2πiθ})| dθ`, by the trapezoid rule, which
/// converges geometrically when `f` has no roots on the unit circle.
fn log_mahler_measure(coefficients: &[f64]) -> f64 {
    const STEPS: usize = 1 << 12;
    (0..STEPS)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / STEPS as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for &c in coefficients.iter().rev() {
                let (r, i) = (
                    re * theta.cos() - im * theta.sin(),
                    re * theta.sin() + im * theta.cos(),
                );
                re = r + c;
                im = i;
            }
            (re * re + im * im).sqrt().ln()
        })
        .sum::<f64>()
        / STEPS as f64
}

fn radical(prime: u32, num: i64, den: i64, torsion: (i64, i64)) -> MonomialPoint {
    MonomialPoint::new(
        vec![BigUint::from(prime)],
        vec![vec![BigRational::new(num.into(), den.into())]],
        vec![BigRational::new(torsion.0.into(), torsion.1.into())],
    )
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> LatticePolytope {
    let count = rng.random_range(1..=4);
    let pts: Vec<Vec<BigInt>> = (0..count)
        .map(|_| {
            (0..n)
                .map(|_| BigInt::from(rng.random_range(-2..=2)))
                .collect()
        })
        .collect();
    LatticePolytope::hull(&pts).unwrap()
}

fn structural() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = Vec::new();
    for i in 0..100 {
        let n = i % 4 + 1;
        let a = random_nonsingular(&mut rng, n, 5);
        if &a * &adjugate(&a) != IntMatrix::scalar(n, det(&a)) {
            failures.push(format!("adjugate identity fails for {a}"));
        }
        let s = smith_normal_form(&a).unwrap();
        let diag = s.diagonal();
        let ok = &(&s.u * &a) * &s.v == s.d
            && det(&s.u).abs().is_one()
            && det(&s.v).abs().is_one()
            && diag.iter().all(|d| d.is_positive())
            && diag.windows(2).all(|w| (&w[1] % &w[0]).is_zero())
            && diag.iter().product::<BigInt>() == det(&a).abs();
        if !ok {
            failures.push(format!("Smith form contract fails for {a}"));
        }
        if !char_poly(&a).eval_matrix(&a).is_zero() {
            failures.push(format!("Cayley–Hamilton residue nonzero for {a}"));
        }
    }

    for n in 1..=4usize {
        let bodies = vec![LatticePolytope::standard_simplex(n); n];
        let factorial: BigInt = (1..=n).map(BigInt::from).product();
        if mixed_volume(&bodies).unwrap() != BigRational::new(BigInt::one(), factorial) {
            failures.push(format!("MV of simplices in dimension {n} is not 1/{n}!"));
        }
    }
    for _ in 0..30 {
        let (a, b, c, a2) = (
            random_points(&mut rng, 3),
            random_points(&mut rng, 3),
            random_points(&mut rng, 3),
            random_points(&mut rng, 3),
        );
        let base = mixed_volume(&[a.clone(), b.clone(), c.clone()]).unwrap();
        if mixed_volume(&[c.clone(), a.clone(), b.clone()]).unwrap() != base
            || mixed_volume(&[b.clone(), a.clone(), c.clone()]).unwrap() != base
        {
            failures.push("mixed volume not symmetric".into());
        }
        let lhs = mixed_volume(&[a.minkowski_sum(&a2).unwrap(), b.clone(), c.clone()]).unwrap();
        let rhs = base + mixed_volume(&[a2, b, c]).unwrap();
        if lhs != rhs {
            failures.push("mixed volume not additive in its first argument".into());
        }
    }

    for _ in 0..50 {
        let n = rng.random_range(1..=3usize);
        let coords: Vec<i64> = (0..n)
            .map(|_| {
                let v = rng.random_range(1..=200i64);
                if rng.random_bool(0.5) {
                    -v
                } else {
                    v
                }
            })
            .collect();
        let x = MonomialPoint::from_i64(&coords).unwrap();
        let scalars: &[i64] = if n == 1 {
            &[-2, -1, 1, 2, 3]
        } else {
            &[1, 2, 3]
        };
        for &s in scalars {
            let y = monomial_image(&IntMatrix::scalar(n, s.into()), &x).unwrap();
            let expected = s.abs() as f64 * weil_height(&x);
            if (weil_height(&y) - expected).abs() > 1e-12 * expected.max(1.0) {
                failures.push(format!("h(x^{s}) ≠ {}·h(x) for x = {x}", s.abs()));
            }
        }
    }

    // heights of algebraic numbers against log M(minimal polynomial) / degree
    let radicals = [
        ("√2", radical(2, 1, 2, (0, 1)), vec![-2.0, 0.0, 1.0], 2.0),
        ("−√2", radical(2, 1, 2, (1, 2)), vec![-2.0, 0.0, 1.0], 2.0),
        (
            "2^{1/3}",
            radical(2, 1, 3, (0, 1)),
            vec![-2.0, 0.0, 0.0, 1.0],
            3.0,
        ),
        (
            "(1/3)^{1/2}",
            radical(3, -1, 2, (0, 1)),
            vec![-1.0, 0.0, 3.0],
            2.0,
        ),
    ];
    let mut sqrt2 = f64::NAN;
    for (name, x, poly, degree) in radicals {
        let oracle = log_mahler_measure(&poly) / degree;
        let h = weil_height(&x);
        if name == "√2" {
            sqrt2 = h;
        }
        if (h - oracle).abs() > 1e-12 {
            failures.push(format!("h({name}) = {h}, Mahler-measure oracle {oracle}"));
        }
    }
    if (sqrt2 - LN_2 / 2.0).abs() > 1e-15 {
        failures.push(format!("h(√2) = {sqrt2} ≠ (1/2) log 2"));
    }
    Outcome::new(
        failures,
        "adjugate, Smith form, Cayley–Hamilton, mixed volumes, height scaling, radical heights"
            .into(),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("degree growth matches dynamical degrees", degree_ratios),
        ("exact degree fixtures", exact_fixtures),
        ("degree cross-validation", degree_cross_validation),
        ("integrality", integrality),
        ("duality", duality),
        ("growth constant and decay", growth_constant),
        ("fast heights equal cycle heights", fast_vs_bruteforce),
        ("height growth rate is a candidate", membership),
        ("structural properties", structural),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} {} {name}: {}", i + 1, outcome.summary);
        for f in &outcome.failures {
            println!("    {f}");
        }
        all &= outcome.pass;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
