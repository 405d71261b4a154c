//! Exact linear algebra over the integers and rationals.
//!
//! Matrices here are small (a few hundred rows) and entries stay modest, so plain
//! Gaussian elimination on `BigRational` and unimodular column/row reduction on
//! `BigInt` are used without fraction-free tricks.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Matrix<T> = Vec<Vec<T>>;

pub fn to_rational(m: &[Vec<i64>]) -> Matrix<BigRational> {
    m.iter().map(|r| r.iter().map(|&v| BigRational::from_integer(v.into())).collect()).collect()
}

pub fn big_to_rational(m: &[Vec<BigInt>]) -> Matrix<BigRational> {
    m.iter().map(|r| r.iter().map(|v| BigRational::from_integer(v.clone())).collect()).collect()
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut Matrix<BigRational>) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    let t = &m[r][j] * &f;
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &[Vec<BigRational>]) -> usize {
    let mut work = m.to_vec();
    rref(&mut work).len()
}

pub fn rank_i64(m: &[Vec<i64>]) -> usize {
    rank(&to_rational(m))
}

pub fn determinant(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    let mut a = big_to_rational(m);
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else { return BigInt::zero() };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= &a[c][c];
        for i in c + 1..n {
            if !a[i][c].is_zero() {
                let f = &a[i][c] / &a[c][c];
                for j in c..n {
                    let t = &a[c][j] * &f;
                    a[i][j] -= t;
                }
            }
        }
    }
    det.to_integer()
}

/// Inverse over the rationals, `None` when singular.
pub fn inverse(m: &[Vec<BigRational>]) -> Option<Matrix<BigRational>> {
    let n = m.len();
    let mut aug: Matrix<BigRational> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Inverse of an integer matrix when it is again integral (i.e. the matrix is unimodular).
pub fn unimodular_inverse(m: &[Vec<BigInt>]) -> Option<Matrix<BigInt>> {
    let inv = inverse(&big_to_rational(m))?;
    inv.into_iter()
        .map(|r| r.into_iter().map(|v| if v.is_integer() { Some(v.to_integer()) } else { None }).collect())
        .collect()
}

pub fn mul<T>(a: &[Vec<T>], b: &[Vec<T>]) -> Matrix<T>
where
    T: Clone + Zero,
    for<'x> &'x T: std::ops::Mul<&'x T, Output = T>,
{
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).fold(T::zero(), |acc, l| acc + &row[l] * &b[l][j]))
                .collect()
        })
        .collect()
}

/// Extended gcd with non-negative gcd: returns `(g, x, y)` with `x a + y b = g`.
fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = a.extended_gcd(b);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

/// A Z-basis of `{x in Z^cols : A x = 0}`, returned as column vectors (each of length `cols`).
pub fn integer_kernel(a: &[Vec<i64>], cols: usize) -> Matrix<BigInt> {
    let rows = a.len();
    let mut w: Matrix<BigInt> = a.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
    // u[j] is column j of the unimodular transform, stored as a vector.
    let mut u: Matrix<BigInt> =
        (0..cols).map(|j| (0..cols).map(|i| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect();
    let mut pc = 0;
    for i in 0..rows {
        if pc == cols {
            break;
        }
        for j in pc + 1..cols {
            if w[i][j].is_zero() {
                continue;
            }
            let a_ = w[i][pc].clone();
            let b_ = w[i][j].clone();
            let (g, x, y) = ext_gcd(&a_, &b_);
            let (ag, bg) = (&a_ / &g, &b_ / &g);
            // new pc = x*pc + y*j ; new j = -bg*pc + ag*j
            for r in w.iter_mut() {
                let (p, q) = (r[pc].clone(), r[j].clone());
                r[pc] = &x * &p + &y * &q;
                r[j] = &ag * &q - &bg * &p;
            }
            let (p, q) = (u[pc].clone(), u[j].clone());
            u[pc] = p.iter().zip(&q).map(|(s, t)| &x * s + &y * t).collect();
            u[j] = p.iter().zip(&q).map(|(s, t)| &ag * t - &bg * s).collect();
        }
        if !w[i][pc].is_zero() {
            pc += 1;
        }
    }
    let mut basis = u.split_off(pc);
    for v in &mut basis {
        // Sign normalisation: first non-zero entry positive.
        if v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
            for x in v.iter_mut() {
                *x = -x.clone();
            }
        }
    }
    basis
}

/// Unimodular row reduction of an `m x p` integer matrix. Returns `(h, combos)` where
/// `h` is the upper-triangular top `p x p` block and `combos[j]` (length m) expresses
/// row `j` of `h` as an integer combination of the input rows.
pub fn row_hermite(k: &[Vec<BigInt>]) -> (Matrix<BigInt>, Matrix<BigInt>) {
    let m = k.len();
    let p = k.first().map_or(0, Vec::len);
    let mut a = k.to_vec();
    let mut v: Matrix<BigInt> =
        (0..m).map(|i| (0..m).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect();
    let mut r = 0;
    for c in 0..p {
        if r == m {
            break;
        }
        for i in r + 1..m {
            if a[i][c].is_zero() {
                continue;
            }
            let (g, x, y) = ext_gcd(&a[r][c], &a[i][c]);
            let (ag, bg) = (&a[r][c] / &g, &a[i][c] / &g);
            let (ra, ri) = (a[r].clone(), a[i].clone());
            a[r] = ra.iter().zip(&ri).map(|(s, t)| &x * s + &y * t).collect();
            a[i] = ra.iter().zip(&ri).map(|(s, t)| &ag * t - &bg * s).collect();
            let (va, vi) = (v[r].clone(), v[i].clone());
            v[r] = va.iter().zip(&vi).map(|(s, t)| &x * s + &y * t).collect();
            v[i] = va.iter().zip(&vi).map(|(s, t)| &ag * t - &bg * s).collect();
        }
        if !a[r][c].is_zero() {
            if a[r][c].is_negative() {
                a[r] = a[r].iter().map(|x| -x).collect();
                v[r] = v[r].iter().map(|x| -x).collect();
            }
            r += 1;
        }
    }
    a.truncate(p);
    v.truncate(p);
    (a, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bi(v: &[Vec<i64>]) -> Matrix<BigInt> {
        v.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn rank_and_determinant() {
        assert_eq!(rank_i64(&[vec![1, 2], vec![2, 4]]), 1);
        assert_eq!(rank_i64(&[vec![1, 2], vec![3, 4]]), 2);
        assert_eq!(determinant(&bi(&[vec![2, 1], vec![1, 1]])), BigInt::from(1));
        assert_eq!(determinant(&bi(&[vec![0, 2], vec![3, 1]])), BigInt::from(-6));
        assert!(unimodular_inverse(&bi(&[vec![2, 0], vec![0, 1]])).is_none());
        assert_eq!(unimodular_inverse(&bi(&[vec![2, 1], vec![1, 1]])).unwrap(), bi(&[vec![1, -1], vec![-1, 2]]));
    }

    #[test]
    fn kernel_of_torsion_relation() {
        // 2 x - 2 y = 0 over Z has kernel spanned by (1, 1).
        let k = integer_kernel(&[vec![2, -2]], 2);
        assert_eq!(k, bi(&[vec![1, 1]]));
        // x + y + z = 0: rank-2 kernel.
        let k = integer_kernel(&[vec![1, 1, 1]], 3);
        assert_eq!(k.len(), 2);
    }

    #[test]
    fn hermite_generates_unit_rows() {
        let k = bi(&[vec![2, 0], vec![3, 0], vec![0, 1]]);
        let (h, combos) = row_hermite(&k);
        assert_eq!(h, bi(&[vec![1, 0], vec![0, 1]]));
        for (j, c) in combos.iter().enumerate() {
            let row: Vec<BigInt> =
                (0..2).map(|col| c.iter().zip(&k).map(|(a, r)| a * &r[col]).sum()).collect();
            assert_eq!(row, h[j]);
        }
    }

    proptest! {
        #[test]
        fn kernel_vectors_annihilate_and_have_full_dimension(
            a in proptest::collection::vec(proptest::collection::vec(-3i64..=3, 5), 1..4)
        ) {
            let basis = integer_kernel(&a, 5);
            for v in &basis {
                for row in &a {
                    let s: BigInt = row.iter().zip(v).map(|(x, y)| BigInt::from(*x) * y).sum();
                    prop_assert!(s.is_zero());
                }
            }
            prop_assert_eq!(basis.len(), 5 - rank_i64(&a));
        }
    }
}
