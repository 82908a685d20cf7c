//! Exact lattice polytopes: convex hulls, Minkowski sums, volumes and mixed
//! volumes. No floating point is used anywhere in this module.
//!
//! Hulls are found by enumerating candidate facets through every affinely
//! independent subset of the input, which is exponential in the dimension but
//! simple and exact for the small dimensions supported here.

use std::collections::HashSet;

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{bareiss_det, json_int};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 5;

pub type Point = Vec<BigInt>;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum PolytopeError {
    #[error("a polytope needs at least one point")]
    Empty,
    #[error("points have mixed dimensions ({0} and {1})")]
    MixedDimensions(usize, usize),
    #[error("ambient dimension must be between 1 and {MAX_DIM}, got {0}")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("mixed volume in dimension {expected} needs {expected} bodies, got {found}")]
    WrongBodyCount { expected: usize, found: usize },
    #[error("polytope parse error: {0}")]
    Parse(String),
}

/// Which vertex a star triangulation uses as its apex at every level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApexOrder {
    First,
    Last,
}

/// Convex hull of finitely many points of `Z^n`, stored by its extreme
/// points in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticePolytope {
    dim: usize,
    vertices: Vec<Point>,
}

fn sub(a: &[BigInt], b: &[BigInt]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn add(a: &[BigInt], b: &[BigInt]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rank by fraction-free elimination.
fn rank(mut rows: Vec<Point>) -> usize {
    let Some(cols) = rows.first().map(Vec::len) else {
        return 0;
    };
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        for i in r + 1..rows.len() {
            if rows[i][c].is_zero() {
                continue;
            }
            let (a, b) = (rows[r][c].clone(), rows[i][c].clone());
            let pivot = rows[r].clone();
            for (x, y) in rows[i].iter_mut().zip(&pivot).skip(c) {
                *x = &a * &*x - &b * y;
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}

/// Coordinates on which the affine hull of `pts` projects bijectively.
fn affine_frame(pts: &[Point]) -> Vec<usize> {
    let diffs: Vec<Point> = pts[1..].iter().map(|p| sub(p, &pts[0])).collect();
    let dim = pts[0].len();
    let mut chosen: Vec<usize> = Vec::new();
    let mut current = 0;
    for c in 0..dim {
        let mut trial = chosen.clone();
        trial.push(c);
        let restricted: Vec<Point> = diffs
            .iter()
            .map(|d| trial.iter().map(|&j| d[j].clone()).collect())
            .collect();
        let r = rank(restricted);
        if r > current {
            chosen = trial;
            current = r;
        }
    }
    chosen
}

fn project(pts: &[Point], coords: &[usize]) -> Vec<Point> {
    pts.iter()
        .map(|p| coords.iter().map(|&j| p[j].clone()).collect())
        .collect()
}

/// Normal of the hyperplane spanned by `d − 1` vectors in `R^d`.
fn cross(vectors: &[Point], d: usize) -> Point {
    (0..d)
        .map(|skip| {
            let entries: Vec<BigInt> = vectors
                .iter()
                .flat_map(|v| {
                    (0..d)
                        .filter(move |&j| j != skip)
                        .map(move |j| v[j].clone())
                })
                .collect();
            let m = bareiss_det(d - 1, entries);
            if skip % 2 == 0 {
                m
            } else {
                -m
            }
        })
        .collect()
}

struct Facet {
    normal: Point,
    /// Indices of the input points lying on the facet, ascending.
    members: Vec<usize>,
}

/// All facets of a full-dimensional point set in `R^d`, with outward normals.
fn facets(pts: &[Point], d: usize) -> Vec<Facet> {
    let mut out: Vec<Facet> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for combo in (0..pts.len()).combinations(d) {
        let covered = out
            .iter()
            .any(|f| combo.iter().all(|i| f.members.binary_search(i).is_ok()));
        if covered {
            continue;
        }
        let base = &pts[combo[0]];
        let mut normal = if d == 1 {
            vec![BigInt::one()]
        } else {
            let diffs: Vec<Point> = combo[1..].iter().map(|&i| sub(&pts[i], base)).collect();
            cross(&diffs, d)
        };
        if normal.iter().all(Zero::is_zero) {
            continue;
        }
        let offset = dot(&normal, base);
        let (mut pos, mut neg) = (false, false);
        let mut members = Vec::new();
        for (i, q) in pts.iter().enumerate() {
            let s = dot(&normal, q) - &offset;
            if s.is_positive() {
                pos = true;
            } else if s.is_negative() {
                neg = true;
            } else {
                members.push(i);
            }
            if pos && neg {
                break;
            }
        }
        if pos && neg {
            continue;
        }
        if pos {
            normal = normal.iter().map(|x| -x).collect();
        }
        if seen.insert(members.clone()) {
            out.push(Facet { normal, members });
        }
    }
    out
}

/// Indices of the extreme points among distinct points.
fn extreme_indices(pts: &[Point]) -> Vec<usize> {
    if pts.len() == 1 {
        return vec![0];
    }
    let coords = affine_frame(pts);
    let d = coords.len();
    if d == 0 {
        return vec![0];
    }
    let proj = project(pts, &coords);
    let fs = facets(&proj, d);
    (0..pts.len())
        .filter(|&i| {
            let normals: Vec<Point> = fs
                .iter()
                .filter(|f| f.members.binary_search(&i).is_ok())
                .map(|f| f.normal.clone())
                .collect();
            rank(normals) == d
        })
        .collect()
}

/// Star triangulation of a full-dimensional point set in `R^d`; returns
/// simplices as index lists of length `d + 1`.
fn triangulate(pts: &[Point], d: usize, order: ApexOrder) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![vec![0]];
    }
    let apex = match order {
        ApexOrder::First => 0,
        ApexOrder::Last => pts.len() - 1,
    };
    let mut simplices = Vec::new();
    for f in facets(pts, d) {
        if f.members.binary_search(&apex).is_ok() {
            continue;
        }
        let face: Vec<Point> = f.members.iter().map(|&i| pts[i].clone()).collect();
        let coords = affine_frame(&face);
        debug_assert_eq!(coords.len(), d - 1);
        let proj = project(&face, &coords);
        for s in triangulate(&proj, d - 1, order) {
            let mut simplex: Vec<usize> = s.into_iter().map(|i| f.members[i]).collect();
            simplex.push(apex);
            simplices.push(simplex);
        }
    }
    simplices
}

fn factorial(n: usize) -> BigInt {
    (1..=n).map(BigInt::from).product()
}

fn dedup_sorted(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort();
    pts.dedup();
    pts
}

impl LatticePolytope {
    /// Convex hull of `points`, keeping only extreme points.
    pub fn hull(points: &[Point]) -> Result<Self, PolytopeError> {
        let first = points.first().ok_or(PolytopeError::Empty)?;
        let dim = first.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(PolytopeError::UnsupportedDimension(dim));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(PolytopeError::MixedDimensions(dim, p.len()));
        }
        let pts = dedup_sorted(points.to_vec());
        let vertices = extreme_indices(&pts)
            .into_iter()
            .map(|i| pts[i].clone())
            .collect();
        Ok(Self { dim, vertices })
    }

    pub fn hull_i64(points: &[&[i64]]) -> Result<Self, PolytopeError> {
        let pts: Vec<Point> = points
            .iter()
            .map(|p| p.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        Self::hull(&pts)
    }

    /// `conv{0, e_1, …, e_n}`.
    pub fn standard_simplex(n: usize) -> Self {
        let mut vertices = vec![vec![BigInt::zero(); n]];
        for i in 0..n {
            let mut e = vec![BigInt::zero(); n];
            e[i] = BigInt::one();
            vertices.push(e);
        }
        vertices.sort();
        Self { dim: n, vertices }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Dimension of the affine hull.
    pub fn affine_dim(&self) -> usize {
        if self.vertices.len() == 1 {
            0
        } else {
            affine_frame(&self.vertices).len()
        }
    }

    pub fn minkowski_sum(&self, other: &Self) -> Result<Self, PolytopeError> {
        if self.dim != other.dim {
            return Err(PolytopeError::DimensionMismatch(self.dim, other.dim));
        }
        let sums: Vec<Point> = self
            .vertices
            .iter()
            .cartesian_product(&other.vertices)
            .map(|(a, b)| add(a, b))
            .collect();
        Self::hull(&sums)
    }

    /// `c · P` for `c ≥ 0`.
    pub fn dilate(&self, c: u64) -> Self {
        let c = BigInt::from(c);
        let vertices = dedup_sorted(
            self.vertices
                .iter()
                .map(|v| v.iter().map(|x| x * &c).collect())
                .collect(),
        );
        Self {
            dim: self.dim,
            vertices,
        }
    }

    /// `n! · volume`, an integer for lattice polytopes.
    pub fn normalized_volume_with_order(&self, order: ApexOrder) -> BigInt {
        if self.affine_dim() < self.dim {
            return BigInt::zero();
        }
        let n = self.dim;
        triangulate(&self.vertices, n, order)
            .into_iter()
            .map(|s| {
                let base = &self.vertices[s[0]];
                let entries: Vec<BigInt> = s[1..]
                    .iter()
                    .flat_map(|&i| sub(&self.vertices[i], base))
                    .collect();
                bareiss_det(n, entries).abs()
            })
            .sum()
    }

    pub fn normalized_volume(&self) -> BigInt {
        self.normalized_volume_with_order(ApexOrder::First)
    }

    /// Euclidean volume; zero for lower-dimensional polytopes.
    pub fn volume(&self) -> BigRational {
        BigRational::new(self.normalized_volume(), factorial(self.dim))
    }

    pub fn volume_with_order(&self, order: ApexOrder) -> BigRational {
        BigRational::new(
            self.normalized_volume_with_order(order),
            factorial(self.dim),
        )
    }
}

/// Mixed volume of bodies given with multiplicities, normalized so that
/// `MV(P, …, P) = vol(P)`. Multiplicities must add up to the dimension.
pub fn mixed_volume_grouped(
    groups: &[(&LatticePolytope, usize)],
) -> Result<BigRational, PolytopeError> {
    let Some(&(first, _)) = groups.first() else {
        return Err(PolytopeError::WrongBodyCount {
            expected: 0,
            found: 0,
        });
    };
    let n = first.dim();
    if let Some((p, _)) = groups.iter().find(|(p, _)| p.dim() != n) {
        return Err(PolytopeError::DimensionMismatch(n, p.dim()));
    }
    let count: usize = groups.iter().map(|g| g.1).sum();
    if count != n {
        return Err(PolytopeError::WrongBodyCount {
            expected: n,
            found: count,
        });
    }
    let groups: Vec<(&LatticePolytope, usize)> =
        groups.iter().copied().filter(|g| g.1 > 0).collect();

    // Σ over (c_j) ≠ 0 of ∏ C(m_j, c_j) (−1)^{n − Σc} vol(Σ c_j P_j)
    let choices: Vec<Vec<usize>> = groups
        .iter()
        .map(|g| (0..=g.1).collect::<Vec<_>>())
        .multi_cartesian_product()
        .filter(|c| c.iter().any(|&x| x > 0))
        .collect();
    let single: Vec<BigInt> = groups.iter().map(|g| g.0.normalized_volume()).collect();
    let total: BigInt = choices
        .par_iter()
        .map(|c| {
            let weight: BigInt = groups
                .iter()
                .zip(c)
                .map(|(g, &cj)| binomial(BigInt::from(g.1), BigInt::from(cj)))
                .product();
            let used: Vec<usize> = (0..c.len()).filter(|&j| c[j] > 0).collect();
            let vol = if let [j] = used[..] {
                &single[j] * BigInt::from(c[j]).pow(n as u32)
            } else {
                used.iter()
                    .map(|&j| groups[j].0.dilate(c[j] as u64))
                    .reduce(|a, b| a.minkowski_sum(&b).expect("dimensions checked"))
                    .expect("at least one body")
                    .normalized_volume()
            };
            let sign = if (n - c.iter().sum::<usize>()) % 2 == 0 {
                BigInt::one()
            } else {
                -BigInt::one()
            };
            sign * weight * vol
        })
        .sum();
    let nf = factorial(n);
    Ok(BigRational::new(total, &nf * &nf))
}

/// Mixed volume of exactly `n` bodies in `R^n`.
pub fn mixed_volume(bodies: &[LatticePolytope]) -> Result<BigRational, PolytopeError> {
    let n = bodies
        .first()
        .map(|b| b.dim())
        .ok_or(PolytopeError::WrongBodyCount {
            expected: 0,
            found: 0,
        })?;
    if bodies.len() != n {
        return Err(PolytopeError::WrongBodyCount {
            expected: n,
            found: bodies.len(),
        });
    }
    let mut groups: Vec<(&LatticePolytope, usize)> = Vec::new();
    for b in bodies {
        match groups.iter_mut().find(|g| g.0 == b) {
            Some(g) => g.1 += 1,
            None => groups.push((b, 1)),
        }
    }
    mixed_volume_grouped(&groups)
}

/// Serialized as an array of vertex arrays; entries beyond 64 bits are
/// written as decimal strings.
impl Serialize for LatticePolytope {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<serde_json::Value>> = self
            .vertices
            .iter()
            .map(|v| {
                v.iter()
                    .map(|x| match x.to_i64() {
                        Some(i) => serde_json::Value::from(i),
                        None => serde_json::Value::from(x.to_string()),
                    })
                    .collect()
            })
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LatticePolytope {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<serde_json::Value>>::deserialize(deserializer)?;
        let pts = rows
            .iter()
            .map(|r| r.iter().map(json_int).collect::<Result<Point, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(de::Error::custom)?;
        Self::hull(&pts).map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(points: &[&[i64]]) -> LatticePolytope {
        LatticePolytope::hull_i64(points).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn verts(p: &LatticePolytope) -> Vec<Vec<i64>> {
        p.vertices()
            .iter()
            .map(|v| v.iter().map(|x| x.to_i64().unwrap()).collect())
            .collect()
    }

    #[test]
    fn hull_examples() {
        let t = poly(&[&[0, 0], &[1, 0], &[0, 1]]);
        assert_eq!(verts(&t), vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        let s = poly(&[&[0, 0], &[2, 0], &[1, 0]]);
        assert_eq!(verts(&s), vec![vec![0, 0], vec![2, 0]]);
        let q_a = poly(&[&[0, 0], &[2, 1], &[1, 1]]);
        assert_eq!(q_a.vertices().len(), 3);
    }

    #[test]
    fn hull_drops_interior_and_edge_points() {
        let sq = poly(&[
            &[0, 0],
            &[2, 0],
            &[0, 2],
            &[2, 2],
            &[1, 1],
            &[1, 0],
            &[2, 1],
        ]);
        assert_eq!(
            verts(&sq),
            vec![vec![0, 0], vec![0, 2], vec![2, 0], vec![2, 2]]
        );
        let cube: Vec<Vec<i64>> = (0..27).map(|i| vec![i % 3, (i / 3) % 3, i / 9]).collect();
        let refs: Vec<&[i64]> = cube.iter().map(Vec::as_slice).collect();
        assert_eq!(poly(&refs).vertices().len(), 8);
    }

    #[test]
    fn hull_is_idempotent() {
        let p = poly(&[&[0, 0, 0], &[3, 1, 0], &[1, 2, 1], &[0, 1, 3], &[1, 1, 1]]);
        assert_eq!(LatticePolytope::hull(p.vertices()).unwrap(), p);
    }

    #[test]
    fn lower_dimensional_hulls() {
        // square lying in a plane of R^3
        let p = poly(&[&[0, 0, 0], &[1, 1, 0], &[0, 0, 1], &[1, 1, 1], &[1, 1, 0]]);
        assert_eq!(p.vertices().len(), 4);
        assert_eq!(p.affine_dim(), 2);
        assert_eq!(p.volume(), q(0, 1));
        let pt = poly(&[&[3, -1], &[3, -1]]);
        assert_eq!(pt.affine_dim(), 0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(LatticePolytope::hull(&[]), Err(PolytopeError::Empty));
        assert_eq!(
            LatticePolytope::hull_i64(&[&[0, 0], &[1]]),
            Err(PolytopeError::MixedDimensions(2, 1))
        );
        assert_eq!(
            LatticePolytope::hull_i64(&[&[0, 0, 0, 0, 0, 0]]),
            Err(PolytopeError::UnsupportedDimension(6))
        );
    }

    #[test]
    fn minkowski_examples() {
        let t = LatticePolytope::standard_simplex(2);
        let origin = poly(&[&[0, 0]]);
        assert_eq!(t.minkowski_sum(&origin).unwrap(), t);
        let a = poly(&[&[0], &[1]]);
        let b = poly(&[&[0], &[2]]);
        assert_eq!(verts(&a.minkowski_sum(&b).unwrap()), vec![vec![0], vec![3]]);
        assert_eq!(
            verts(&t.minkowski_sum(&t).unwrap()),
            vec![vec![0, 0], vec![0, 2], vec![2, 0]]
        );
        assert_eq!(
            t.minkowski_sum(&a),
            Err(PolytopeError::DimensionMismatch(2, 1))
        );
    }

    #[test]
    fn volume_examples() {
        assert_eq!(LatticePolytope::standard_simplex(2).volume(), q(1, 2));
        assert_eq!(poly(&[&[0, 0], &[2, 1], &[1, 1]]).volume(), q(1, 2));
        assert_eq!(poly(&[&[0, 0], &[3, 1]]).volume(), q(0, 1));
        assert_eq!(LatticePolytope::standard_simplex(4).volume(), q(1, 24));
        let cube: Vec<Vec<i64>> = (0..8).map(|i| vec![i & 1, (i >> 1) & 1, i >> 2]).collect();
        let refs: Vec<&[i64]> = cube.iter().map(Vec::as_slice).collect();
        let c = poly(&refs);
        assert_eq!(c.volume(), q(1, 1));
        assert_eq!(c.dilate(3).volume(), q(27, 1));
    }

    #[test]
    fn triangulation_orders_agree() {
        let p = poly(&[
            &[0, 0, 0],
            &[3, 1, 0],
            &[1, 2, 1],
            &[0, 1, 3],
            &[-1, 1, 1],
            &[2, 2, 2],
        ]);
        assert_eq!(
            p.volume_with_order(ApexOrder::First),
            p.volume_with_order(ApexOrder::Last)
        );
    }

    #[test]
    fn mixed_volume_examples() {
        let t = LatticePolytope::standard_simplex(2);
        assert_eq!(mixed_volume(&[t.clone(), t.clone()]).unwrap(), q(1, 2));
        let seg = poly(&[&[0], &[5]]);
        assert_eq!(mixed_volume(&[seg]).unwrap(), q(5, 1));
        let q_a = poly(&[&[0, 0], &[2, 1], &[1, 1]]);
        assert_eq!(mixed_volume(&[t.clone(), q_a]).unwrap(), q(3, 2));
        assert_eq!(
            mixed_volume(&[t]),
            Err(PolytopeError::WrongBodyCount {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn mixed_volume_of_simplices() {
        for n in 1..=4usize {
            let t = LatticePolytope::standard_simplex(n);
            let bodies = vec![t; n];
            assert_eq!(
                mixed_volume(&bodies).unwrap(),
                BigRational::new(1.into(), factorial(n))
            );
        }
    }

    #[test]
    fn degenerate_bodies_are_legal() {
        // MV of two orthogonal unit segments in the plane is 1/2
        let a = poly(&[&[0, 0], &[1, 0]]);
        let b = poly(&[&[0, 0], &[0, 1]]);
        assert_eq!(mixed_volume(&[a.clone(), b]).unwrap(), q(1, 2));
        assert_eq!(mixed_volume(&[a.clone(), a]).unwrap(), q(0, 1));
    }

    #[test]
    fn json_round_trip() {
        let p = poly(&[&[0, 0], &[2, 1], &[1, 1]]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[[0,0],[1,1],[2,1]]");
        let back: LatticePolytope = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let with_interior: LatticePolytope =
            serde_json::from_str("[[0,0],[2,0],[0,2],[1,\"0\"]]").unwrap();
        assert_eq!(with_interior.vertices().len(), 3);
    }
}
