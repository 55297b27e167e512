//! Exact right kernels of integer matrices.
//!
//! [`right_kernel`] returns a basis of the lattice `{ v in Z^m : M v = 0 }`
//! itself, in Hermite normal form. Integer column operations reduce `M` to
//! echelon form while a unimodular transform is tracked; the transformed
//! columns that end up zero span the kernel lattice over `Z`.
//!
//! [`rational_kernel`] spans the same space over `Q` with one primitive vector
//! per non-pivot column. Those vectors can generate a sublattice of index
//! greater than one, so alphas built from them may miss the exact order.
//!
//! Rank and the rational kernel use fraction-free (Bareiss) elimination: after
//! eliminating with the `k`-th pivot every entry is a `(k+1) x (k+1)` minor of
//! the input, so each division by the previous pivot is exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::relations::RelationSet;
use crate::wire::dec_matrix;

/// A dense `rows x cols` integer matrix. `cols` is kept explicitly so that
/// matrices with no rows still have a shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    cols: usize,
    data: Vec<Vec<BigInt>>,
}

impl IntMatrix {
    pub fn new(data: Vec<Vec<BigInt>>, cols: usize) -> Result<Self> {
        if let Some(bad) = data.iter().position(|r| r.len() != cols) {
            return Err(Error::domain(format!(
                "row {bad} has length {}, expected {cols}",
                data[bad].len()
            )));
        }
        Ok(IntMatrix { cols, data })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
                .collect(),
            cols,
        )
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            cols,
            data: vec![vec![BigInt::zero(); cols]; rows],
        }
    }

    pub fn rows(&self) -> usize {
        self.data.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i]
    }

    pub fn data(&self) -> &[Vec<BigInt>] {
        &self.data
    }

    pub fn without_row(&self, i: usize) -> IntMatrix {
        let mut data = self.data.clone();
        data.remove(i);
        IntMatrix {
            cols: self.cols,
            data,
        }
    }

    /// `M v`.
    pub fn mul_vec(&self, v: &[BigInt]) -> Result<Vec<BigInt>> {
        if v.len() != self.cols {
            return Err(Error::domain(format!(
                "vector length {} does not match {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok(self
            .data
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn annihilates(&self, v: &[BigInt]) -> bool {
        self.mul_vec(v).is_ok_and(|p| p.iter().all(Zero::is_zero))
    }

    pub fn rank(&self) -> usize {
        self.echelon().pivots.len()
    }

    fn echelon(&self) -> Echelon {
        let rows = self.rows();
        let mut a = self.data.clone();
        let mut prev = BigInt::one();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == rows {
                break;
            }
            // Smallest nonzero magnitude in the column curbs entry growth.
            let Some(p) = (r..rows)
                .filter(|&i| !a[i][c].is_zero())
                .min_by(|&i, &j| a[i][c].magnitude().cmp(a[j][c].magnitude()))
            else {
                continue;
            };
            a.swap(r, p);
            let (top, rest) = a.split_at_mut(r + 1);
            let pivot_row = &top[r];
            let pivot = &pivot_row[c];
            for row in rest.iter_mut() {
                let lead = std::mem::take(&mut row[c]);
                for j in c + 1..self.cols {
                    let v = pivot * &row[j] - &lead * &pivot_row[j];
                    let (q, rem) = v.div_rem(&prev);
                    debug_assert!(rem.is_zero(), "Bareiss division must be exact");
                    row[j] = q;
                }
            }
            prev = a[r][c].clone();
            pivots.push(c);
            r += 1;
        }
        a.truncate(pivots.len());
        Echelon { rows: a, pivots }
    }
}

struct Echelon {
    rows: Vec<Vec<BigInt>>,
    pivots: Vec<usize>,
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        dec_matrix::serialize(&self.data, s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let data: Vec<Vec<BigInt>> = dec_matrix::deserialize(d)?;
        let cols = data.first().map_or(0, Vec::len);
        IntMatrix::new(data, cols).map_err(serde::de::Error::custom)
    }
}

/// The `b x m` exponent matrix whose column `j` is `f_j`, with the exponents
/// `x_j` kept alongside (they never take part in elimination).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationMatrix {
    entries: IntMatrix,
    x_row: Vec<BigInt>,
}

impl RelationMatrix {
    pub fn new(entries: IntMatrix, x_row: Vec<BigInt>) -> Result<Self> {
        if x_row.len() != entries.cols() {
            return Err(Error::domain(format!(
                "x row has length {}, matrix has {} columns",
                x_row.len(),
                entries.cols()
            )));
        }
        if entries.cols() == 0 || entries.cols() < entries.rows() {
            return Err(Error::domain(format!(
                "relation matrix needs at least as many columns as rows, got {}x{}",
                entries.rows(),
                entries.cols()
            )));
        }
        Ok(RelationMatrix { entries, x_row })
    }

    pub fn from_relations(set: &RelationSet) -> Result<Self> {
        let (entries, x_row) = columns_of(set);
        Self::new(entries, x_row)
    }

    pub fn entries(&self) -> &IntMatrix {
        &self.entries
    }

    pub fn x_row(&self) -> &[BigInt] {
        &self.x_row
    }

    pub fn right_kernel(&self) -> KernelBasis {
        right_kernel(&self.entries)
    }
}

/// Exponent matrix (one column per relation) and the matching `x` values,
/// without the shape check of [`RelationMatrix`].
pub(crate) fn columns_of(set: &RelationSet) -> (IntMatrix, Vec<BigInt>) {
    let rels = set.relations();
    let width = set.factor_base().width();
    let data = (0..width)
        .map(|i| {
            rels.iter()
                .map(|r| BigInt::from(r.f().entries()[i]))
                .collect()
        })
        .collect();
    let x_row = rels.iter().map(|r| BigInt::from(r.x().clone())).collect();
    (
        IntMatrix {
            cols: rels.len(),
            data,
        },
        x_row,
    )
}

/// Integer vectors spanning a right kernel.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KernelBasis {
    vectors: Vec<Vec<BigInt>>,
    primitive: bool,
}

impl KernelBasis {
    pub fn new(vectors: Vec<Vec<BigInt>>) -> Self {
        let primitive = vectors.iter().all(|v| is_primitive(v));
        KernelBasis { vectors, primitive }
    }

    pub fn vectors(&self) -> &[Vec<BigInt>] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Whether every vector has entries with gcd 1.
    pub fn is_primitive(&self) -> bool {
        self.primitive
    }
}

impl Serialize for KernelBasis {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        dec_matrix::serialize(&self.vectors, s)
    }
}

impl<'de> Deserialize<'de> for KernelBasis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(KernelBasis::new(dec_matrix::deserialize(d)?))
    }
}

fn is_primitive(v: &[BigInt]) -> bool {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x)).is_one()
}

/// A basis of the integer kernel lattice `{ v in Z^m : M v = 0 }` in Hermite
/// normal form: pivots positive, entries above a pivot reduced into
/// `[0, pivot)`. Every integer kernel vector is an integer combination of the
/// basis, and each basis vector is primitive.
pub fn right_kernel(m: &IntMatrix) -> KernelBasis {
    let n = m.cols();
    // Column j of M under the transform, paired with the transform column.
    let mut active: Vec<(Vec<BigInt>, Vec<BigInt>)> = (0..n)
        .map(|j| {
            let col = m.data.iter().map(|row| row[j].clone()).collect();
            let mut unit = vec![BigInt::zero(); n];
            unit[j] = BigInt::one();
            (col, unit)
        })
        .collect();
    for i in 0..m.rows() {
        // Euclid on entry i until at most one active column is nonzero there.
        loop {
            let mut nonzero = active
                .iter()
                .enumerate()
                .filter(|(_, (c, _))| !c[i].is_zero());
            let Some((mut p, _)) = nonzero.next() else {
                break;
            };
            if nonzero.next().is_none() {
                active.swap_remove(p);
                break;
            }
            for (j, (c, _)) in active.iter().enumerate() {
                if !c[i].is_zero() && c[i].magnitude() < active[p].0[i].magnitude() {
                    p = j;
                }
            }
            let pivot = active.swap_remove(p);
            for (c, u) in active.iter_mut() {
                if c[i].is_zero() {
                    continue;
                }
                let q = nearest_quotient(&c[i], &pivot.0[i]);
                sub_scaled(c, &pivot.0, &q);
                sub_scaled(u, &pivot.1, &q);
            }
            active.push(pivot);
        }
    }
    let basis = hermite_normal_form(active.into_iter().map(|(_, u)| u).collect());
    KernelBasis {
        vectors: basis,
        primitive: true,
    }
}

/// `a / b` rounded to a nearest integer, so the remainder is at most `|b|/2`.
fn nearest_quotient(a: &BigInt, b: &BigInt) -> BigInt {
    // The floor remainder has the sign of `b`.
    let (q, r) = a.div_mod_floor(b);
    if (r * 2u32).magnitude() > b.magnitude() {
        q + 1u32
    } else {
        q
    }
}

fn sub_scaled(v: &mut [BigInt], w: &[BigInt], q: &BigInt) {
    for (a, b) in v.iter_mut().zip(w) {
        if !b.is_zero() {
            *a -= q * b;
        }
    }
}

/// Row Hermite normal form of linearly independent rows.
fn hermite_normal_form(mut rows: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        loop {
            let Some(p) = (r..rows.len())
                .filter(|&i| !rows[i][c].is_zero())
                .min_by(|&i, &j| rows[i][c].magnitude().cmp(rows[j][c].magnitude()))
            else {
                break;
            };
            rows.swap(r, p);
            let (top, rest) = rows.split_at_mut(r + 1);
            let pivot = &top[r];
            let mut done = true;
            for row in rest.iter_mut() {
                if !row[c].is_zero() {
                    let q = nearest_quotient(&row[c], &pivot[c]);
                    sub_scaled(row, pivot, &q);
                    done &= row[c].is_zero();
                }
            }
            if done {
                break;
            }
        }
        if r == rows.len() || rows[r][c].is_zero() {
            continue;
        }
        if rows[r][c].is_negative() {
            for x in rows[r].iter_mut() {
                *x = -std::mem::take(x);
            }
        }
        let (top, rest) = rows.split_at_mut(r);
        let pivot = &rest[0];
        for row in top.iter_mut() {
            let q = row[c].div_floor(&pivot[c]);
            if !q.is_zero() {
                sub_scaled(row, pivot, &q);
            }
        }
        r += 1;
    }
    debug_assert_eq!(r, rows.len(), "rows must be independent");
    rows
}

/// A basis of `{ v : M v = 0 }` over the rationals, as primitive integer
/// vectors. One vector per non-pivot column, in column order; its entry at
/// that column is positive and its entries at later free columns are zero.
pub fn rational_kernel(m: &IntMatrix) -> KernelBasis {
    let Echelon { rows, pivots } = m.echelon();
    let n = m.cols();
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let vectors = (0..n)
        .filter(|&f| !is_pivot[f])
        .map(|free| {
            let mut v = vec![BigRational::zero(); n];
            v[free] = BigRational::one();
            for (row, &p) in rows.iter().zip(&pivots).rev() {
                let s: BigRational = (p + 1..n)
                    .filter(|&j| !v[j].is_zero() && !row[j].is_zero())
                    .map(|j| &v[j] * BigRational::from_integer(row[j].clone()))
                    .sum();
                v[p] = -s / BigRational::from_integer(row[p].clone());
            }
            primitivize(&v).expect("kernel vector has a unit entry")
        })
        .collect();
    KernelBasis {
        vectors,
        primitive: true,
    }
}

/// The unique positive multiple of `v` with coprime integer entries whose
/// first nonzero entry is positive.
pub fn primitivize(v: &[BigRational]) -> Result<Vec<BigInt>> {
    let Some(first) = v.iter().find(|x| !x.is_zero()) else {
        return Err(Error::domain("cannot primitivize the zero vector"));
    };
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if first.is_negative() {
        g = -g;
    }
    Ok(ints.into_iter().map(|x| x / &g).collect())
}

/// [`primitivize`] for integer input.
pub fn primitivize_integers(v: &[BigInt]) -> Result<Vec<BigInt>> {
    let q: Vec<BigRational> = v.iter().cloned().map(BigRational::from_integer).collect();
    primitivize(&q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn small_kernels() {
        let k = right_kernel(&IntMatrix::from_i64(&[vec![2, -2]]).unwrap());
        assert_eq!(k.vectors(), &[ints(&[1, 1])]);
        assert!(k.is_primitive());

        let k = right_kernel(&IntMatrix::from_i64(&[vec![1, 0], vec![0, 1]]).unwrap());
        assert!(k.is_empty());

        // No rows: every vector is in the kernel.
        let k = right_kernel(&IntMatrix::zeros(0, 3));
        assert_eq!(k.dim(), 3);

        let m = IntMatrix::from_i64(&[vec![1, 2, 3], vec![2, 4, 6]]).unwrap();
        let k = right_kernel(&m);
        assert_eq!(k.dim(), 2);
        assert!(k.vectors().iter().all(|v| m.annihilates(v)));
    }

    #[test]
    fn lattice_basis_beats_rational_basis() {
        // 2a + b + c = 0. Solving for the pivot a gives (1, -2, 0) and
        // (1, 0, -2), which miss (0, 1, -1).
        let m = IntMatrix::from_i64(&[vec![2, 1, 1]]).unwrap();
        let q = rational_kernel(&m);
        assert_eq!(q.vectors(), &[ints(&[1, -2, 0]), ints(&[1, 0, -2])]);
        let z = right_kernel(&m);
        assert_eq!(z.vectors(), &[ints(&[1, 0, -2]), ints(&[0, 1, -1])]);
        assert!(integer_coefficients(z.vectors(), &ints(&[0, 1, -1])).is_some());
        assert!(integer_coefficients(q.vectors(), &ints(&[0, 1, -1])).is_none());
    }

    #[test]
    fn primitivize_examples() {
        assert_eq!(
            primitivize(&[rat(1, 2), rat(3, 2), rat(-1, 1)]).unwrap(),
            ints(&[1, 3, -2])
        );
        assert_eq!(
            primitivize(&[rat(4, 1), rat(6, 1), rat(10, 1)]).unwrap(),
            ints(&[2, 3, 5])
        );
        assert_eq!(
            primitivize(&[rat(-3, 1), rat(0, 1), rat(0, 1)]).unwrap(),
            ints(&[1, 0, 0])
        );
        assert!(primitivize(&[rat(0, 1), rat(0, 1)]).is_err());
        assert_eq!(
            primitivize_integers(&ints(&[0, -4, 6])).unwrap(),
            ints(&[0, 2, -3])
        );
    }

    #[test]
    fn relation_matrix_shape_checks() {
        let m = IntMatrix::from_i64(&[vec![1, 2], vec![3, 4], vec![5, 6]]).unwrap();
        assert!(RelationMatrix::new(m, ints(&[1, 2])).is_err());
        let m = IntMatrix::from_i64(&[vec![1, 2]]).unwrap();
        assert!(RelationMatrix::new(m.clone(), ints(&[1])).is_err());
        let rm = RelationMatrix::new(m, ints(&[5, 7])).unwrap();
        assert_eq!(rm.right_kernel().vectors(), &[ints(&[2, -1])]);
        assert!(IntMatrix::new(vec![ints(&[1]), ints(&[1, 2])], 1).is_err());
    }

    #[test]
    fn serializes_as_string_arrays() {
        let m = IntMatrix::from_i64(&[vec![1, -2], vec![0, 3]]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"[["1","-2"],["0","3"]]"#);
        let back: IntMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        let k = KernelBasis::new(vec![ints(&[2, 4])]);
        assert!(!k.is_primitive());
        assert_eq!(serde_json::to_string(&k).unwrap(), r#"[["2","4"]]"#);
    }

    // Independent rank: plain Gauss-Jordan over the rationals.
    fn rational_rank(m: &[Vec<i64>]) -> usize {
        let mut a: Vec<Vec<BigRational>> = m
            .iter()
            .map(|r| r.iter().map(|&x| rat(x, 1)).collect())
            .collect();
        let cols = m.first().map_or(0, Vec::len);
        let mut rank = 0;
        for c in 0..cols {
            let Some(p) = (rank..a.len()).find(|&i| !a[i][c].is_zero()) else {
                continue;
            };
            a.swap(rank, p);
            for i in 0..a.len() {
                if i != rank && !a[i][c].is_zero() {
                    let f = &a[i][c] / &a[rank][c];
                    for j in 0..cols {
                        let t = &f * &a[rank][j];
                        a[i][j] -= t;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (1usize..=8, 1usize..=8)
            .prop_flat_map(|(b, m)| prop::collection::vec(prop::collection::vec(-9i64..=9, m), b))
    }

    // Every integer vector in [-2, 2]^m annihilating M, by enumeration.
    fn small_kernel_vectors(m: &[Vec<i64>]) -> Vec<Vec<i64>> {
        let cols = m[0].len();
        let mut out = Vec::new();
        let mut v = vec![-2i64; cols];
        loop {
            if v.iter().any(|&x| x != 0)
                && m.iter()
                    .all(|r| r.iter().zip(&v).map(|(a, b)| a * b).sum::<i64>() == 0)
            {
                out.push(v.clone());
            }
            let mut k = 0;
            while k < cols && v[k] == 2 {
                v[k] = -2;
                k += 1;
            }
            if k == cols {
                return out;
            }
            v[k] += 1;
        }
    }

    // Rational coefficients of `w` in the span of independent `basis` rows,
    // if they exist and are all integers. Gauss-Jordan on the transposed
    // system `basis^T a = w`.
    fn integer_coefficients(basis: &[Vec<BigInt>], w: &[BigInt]) -> Option<Vec<BigInt>> {
        let k = basis.len();
        let mut a: Vec<Vec<BigRational>> = (0..w.len())
            .map(|j| {
                let mut row: Vec<BigRational> = basis
                    .iter()
                    .map(|v| BigRational::from_integer(v[j].clone()))
                    .collect();
                row.push(BigRational::from_integer(w[j].clone()));
                row
            })
            .collect();
        let mut r = 0;
        for c in 0..k {
            let p = (r..a.len()).find(|&i| !a[i][c].is_zero())?;
            a.swap(r, p);
            let lead = a[r][c].clone();
            for x in a[r].iter_mut() {
                *x /= &lead;
            }
            for i in 0..a.len() {
                if i != r && !a[i][c].is_zero() {
                    let f = a[i][c].clone();
                    for j in 0..=k {
                        let t = &f * &a[r][j];
                        a[i][j] -= t;
                    }
                }
            }
            r += 1;
        }
        if a[k..].iter().any(|row| !row[k].is_zero()) {
            return None;
        }
        a[..k]
            .iter()
            .map(|row| row[k].is_integer().then(|| row[k].to_integer()))
            .collect()
    }

    fn assert_hermite(basis: &[Vec<BigInt>]) {
        let mut last = None;
        for (t, v) in basis.iter().enumerate() {
            let p = v.iter().position(|x| !x.is_zero()).unwrap();
            assert!(last.is_none_or(|l| p > l), "pivots must move right");
            assert!(v[p].is_positive());
            for above in &basis[..t] {
                assert!(!above[p].is_negative() && above[p] < v[p]);
            }
            last = Some(p);
        }
    }

    proptest! {
        #[test]
        fn kernel_invariants(rows in matrix_strategy()) {
            let m = IntMatrix::from_i64(&rows).unwrap();
            let k = right_kernel(&m);
            prop_assert_eq!(k.dim() + rational_rank(&rows), m.cols());
            prop_assert_eq!(m.rank(), rational_rank(&rows));
            prop_assert_eq!(rational_kernel(&m).dim(), k.dim());
            assert_hermite(k.vectors());
            for v in k.vectors() {
                prop_assert!(m.annihilates(v));
                prop_assert!(is_primitive(v));
            }
            for v in rational_kernel(&m).vectors() {
                prop_assert!(m.annihilates(v));
                prop_assert!(integer_coefficients(k.vectors(), v).is_some());
            }
            // Every small annihilating vector is an integer combination.
            if m.cols() <= 6 {
                for w in small_kernel_vectors(&rows) {
                    let w: Vec<BigInt> = w.into_iter().map(BigInt::from).collect();
                    prop_assert!(integer_coefficients(k.vectors(), &w).is_some());
                }
            }
        }
    }
}
