use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

/// Bound on the work spent splitting a single composite cofactor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FactorBudget {
    pub rho_iterations: u64,
}

impl Default for FactorBudget {
    fn default() -> Self {
        Self {
            rho_iterations: 1 << 20,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("could not factor {value} within {iterations} rho iterations; use smaller coordinates")]
pub struct FactorError {
    pub value: BigUint,
    pub iterations: u64,
}

const TRIAL_LIMIT: u32 = 10_000;
const WITNESSES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Miller–Rabin with the first twelve prime bases, which is deterministic
/// below 3.3·10²⁴ and a strong probable-prime test above.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for &w in &WITNESSES {
        let w = BigUint::from(w);
        if *n == w {
            return true;
        }
        if (n % &w).is_zero() {
            return false;
        }
    }
    let n1 = n - 1u32;
    let s = n1.trailing_zeros().expect("n > 1");
    let d = &n1 >> s;
    'witness: for &w in &WITNESSES {
        let mut x = BigUint::from(w).modpow(&d, n);
        if x.is_one() || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent's variant of Pollard rho. Returns a nontrivial factor of the odd
/// composite `n`, or `None` when the budget runs out.
fn rho(n: &BigUint, budget: u64) -> Option<BigUint> {
    let mut spent = 0u64;
    for c in 1u32.. {
        let c = BigUint::from(c);
        let f = |x: &BigUint| (x * x + &c) % n;
        let (mut y, mut r, mut q) = (BigUint::from(2u32), 1u64, BigUint::one());
        let mut x = y.clone();
        let mut ys = y.clone();
        let mut g = BigUint::one();
        while g.is_one() {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g.is_one() {
                ys = y.clone();
                for _ in 0..(r - k).min(128) {
                    y = f(&y);
                    let diff = if x > y { &x - &y } else { &y - &x };
                    q = q * diff % n;
                }
                g = q.gcd(n);
                k += 128;
            }
            spent += r;
            r *= 2;
            if spent > budget {
                return None;
            }
        }
        if g == *n {
            // backtrack one step at a time
            loop {
                ys = f(&ys);
                let diff = if x > ys { &x - &ys } else { &ys - &x };
                g = diff.gcd(n);
                if !g.is_one() {
                    break;
                }
            }
        }
        if g != *n {
            return Some(g);
        }
    }
    unreachable!("the constant sequence is unbounded")
}

fn split(n: BigUint, budget: &FactorBudget, out: &mut Vec<BigUint>) -> Result<(), FactorError> {
    if n.is_one() {
        return Ok(());
    }
    if is_probable_prime(&n) {
        out.push(n);
        return Ok(());
    }
    let d = rho(&n, budget.rho_iterations).ok_or_else(|| FactorError {
        value: n.clone(),
        iterations: budget.rho_iterations,
    })?;
    let rest = &n / &d;
    split(d, budget, out)?;
    split(rest, budget, out)
}

/// Prime factorization `[(q, e)]` with `q` ascending; `1` gives `[]`.
pub fn factorize(n: &BigUint, budget: &FactorBudget) -> Result<Vec<(BigUint, u32)>, FactorError> {
    assert!(!n.is_zero(), "cannot factor zero");
    let mut rest = n.clone();
    let mut primes: Vec<BigUint> = Vec::new();
    for p in 2..=TRIAL_LIMIT {
        if rest.is_one() {
            break;
        }
        let small = rest.to_u64();
        if small.is_some_and(|r| (p as u64) * (p as u64) > r) {
            break;
        }
        let pb = BigUint::from(p);
        while (&rest % &pb).is_zero() {
            rest /= &pb;
            primes.push(pb.clone());
        }
    }
    split(rest, budget, &mut primes)?;
    primes.sort();
    let mut out: Vec<(BigUint, u32)> = Vec::new();
    for p in primes {
        match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        }
    }
    Ok(out)
}
