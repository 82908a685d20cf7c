use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{det, IntMatrix, LinalgError};

/// `U · A · V = D` with `U`, `V` unimodular and `D` diagonal, positive, and
/// satisfying `d_1 | d_2 | … | d_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl SmithForm {
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.d.dim())
            .map(|i| self.d.get(i, i).clone())
            .collect()
    }
}

struct Work {
    n: usize,
    a: Vec<BigInt>,
    u: Vec<BigInt>,
    v: Vec<BigInt>,
}

impl Work {
    fn at(&self, i: usize, j: usize) -> &BigInt {
        &self.a[i * self.n + j]
    }

    fn swap_rows(&mut self, r1: usize, r2: usize) {
        if r1 == r2 {
            return;
        }
        let n = self.n;
        for j in 0..n {
            self.a.swap(r1 * n + j, r2 * n + j);
            self.u.swap(r1 * n + j, r2 * n + j);
        }
    }

    fn swap_cols(&mut self, c1: usize, c2: usize) {
        if c1 == c2 {
            return;
        }
        let n = self.n;
        for i in 0..n {
            self.a.swap(i * n + c1, i * n + c2);
            self.v.swap(i * n + c1, i * n + c2);
        }
    }

    /// row[dst] += q * row[src], mirrored into U.
    fn add_row(&mut self, dst: usize, src: usize, q: &BigInt) {
        let n = self.n;
        for j in 0..n {
            let t = q * &self.a[src * n + j];
            self.a[dst * n + j] += t;
            let t = q * &self.u[src * n + j];
            self.u[dst * n + j] += t;
        }
    }

    /// col[dst] += q * col[src], mirrored into V.
    fn add_col(&mut self, dst: usize, src: usize, q: &BigInt) {
        let n = self.n;
        for i in 0..n {
            let t = q * &self.a[i * n + src];
            self.a[i * n + dst] += t;
            let t = q * &self.v[i * n + src];
            self.v[i * n + dst] += t;
        }
    }

    fn negate_row(&mut self, r: usize) {
        let n = self.n;
        for j in 0..n {
            self.a[r * n + j] = -&self.a[r * n + j];
            self.u[r * n + j] = -&self.u[r * n + j];
        }
    }

    /// Position of the smallest nonzero |entry| in the trailing block.
    fn smallest_in_block(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, BigInt)> = None;
        for i in t..self.n {
            for j in t..self.n {
                let e = self.at(i, j);
                if e.is_zero() {
                    continue;
                }
                let mag = e.abs();
                if best.as_ref().is_none_or(|(_, _, b)| mag < *b) {
                    best = Some((i, j, mag));
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }
}

/// Smith normal form with explicit transforms, pivoting on the
/// smallest-magnitude nonzero entry of the remaining block.
pub fn smith_normal_form(a: &IntMatrix) -> Result<SmithForm, LinalgError> {
    if det(a).is_zero() {
        return Err(LinalgError::Singular);
    }
    let n = a.dim();
    let ident = IntMatrix::identity(n);
    let mut w = Work {
        n,
        a: a.rows().flat_map(|r| r.iter().cloned()).collect(),
        u: ident.rows().flat_map(|r| r.iter().cloned()).collect(),
        v: ident.rows().flat_map(|r| r.iter().cloned()).collect(),
    };

    for t in 0..n {
        loop {
            let (pi, pj) = w
                .smallest_in_block(t)
                .expect("nonsingular matrix has a nonzero trailing block");
            w.swap_rows(t, pi);
            w.swap_cols(t, pj);

            let pivot = w.at(t, t).clone();
            let mut clean = true;
            for i in t + 1..n {
                let q = w.at(i, t).div_floor(&pivot);
                if !q.is_zero() {
                    w.add_row(i, t, &-q);
                }
                if !w.at(i, t).is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..n {
                let q = w.at(t, j).div_floor(&pivot);
                if !q.is_zero() {
                    w.add_col(j, t, &-q);
                }
                if !w.at(t, j).is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }

            // divisibility: fold an offending row into row t and repeat
            let offending = (t + 1..n)
                .flat_map(|i| (t + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| !w.at(i, j).is_multiple_of(&pivot));
            match offending {
                Some((i, _)) => w.add_row(t, i, &BigInt::one()),
                None => break,
            }
        }
        if w.at(t, t).is_negative() {
            w.negate_row(t);
        }
    }

    let to_matrix = |buf: Vec<BigInt>| -> IntMatrix {
        let rows: Vec<Vec<BigInt>> = buf.chunks(n).map(<[BigInt]>::to_vec).collect();
        IntMatrix::from_rows(&rows).expect("square buffer")
    };
    Ok(SmithForm {
        u: to_matrix(w.u),
        d: to_matrix(w.a),
        v: to_matrix(w.v),
    })
}
