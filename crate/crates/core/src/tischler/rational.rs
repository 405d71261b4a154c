//! Continued-fraction rationalisation of decomposition coefficients.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::TischlerError;
use crate::cohomology::{CohomologyBasis, Decomposition};
use crate::mesh::{Cochain, SimplicialComplex};

/// Smallest perturbation bound tried before giving up.
pub const EPS_FLOOR: f64 = 1e-13;

/// Exact rational value of a finite float.
pub fn exact(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite value")
}

/// All convergents of the (finite) continued fraction of `x`, ending with `x` itself.
pub fn convergents(x: &BigRational) -> Vec<BigRational> {
    let mut out = Vec::new();
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    let mut rest = x.clone();
    loop {
        let a = rest.floor().to_integer();
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        out.push(BigRational::new(h.clone(), k.clone()));
        let frac = &rest - BigRational::from_integer(a);
        if frac.is_zero() {
            break;
        }
        rest = frac.recip();
    }
    out
}

/// The convergent of `a` with the smallest denominator lying within `eps` of `a`.
pub fn approximate(a: f64, eps: f64) -> BigRational {
    let x = exact(a);
    let bound = exact(eps.max(0.0));
    convergents(&x)
        .into_iter()
        .find(|c| (c - &x).abs() <= bound)
        .expect("the last convergent is exact")
}

/// `N_i` = lcm of the row denominators and `k_ij = N_i q_ij`.
pub fn integerize(q: &[Vec<BigRational>]) -> (Vec<BigInt>, Vec<Vec<BigInt>>) {
    let mut multipliers = Vec::with_capacity(q.len());
    let mut integers = Vec::with_capacity(q.len());
    for row in q {
        let n = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let k = row.iter().map(|v| (v * BigRational::from_integer(n.clone())).to_integer()).collect();
        multipliers.push(n);
        integers.push(k);
    }
    (multipliers, integers)
}

/// Rational periods, their integer scaling, and the perturbation that was needed.
#[derive(Debug, Clone, Serialize)]
pub struct TischlerCoefficients {
    pub original: Vec<Vec<f64>>,
    #[serde(serialize_with = "crate::report::ser_rational_matrix")]
    pub rational: Vec<Vec<BigRational>>,
    #[serde(serialize_with = "crate::report::ser_bigint_vec")]
    pub multipliers: Vec<BigInt>,
    #[serde(serialize_with = "crate::report::ser_bigint_matrix")]
    pub integers: Vec<Vec<BigInt>>,
    /// The bound on `|q - a|` at which the perturbed forms passed.
    pub eps_bound: f64,
    /// The largest `|q_ij - a_ij|` actually incurred.
    pub max_perturbation: f64,
    /// Halvings of the initial bound that were needed.
    pub halvings: u32,
    pub perturbed_min_singular_value: Option<f64>,
}

impl TischlerCoefficients {
    /// Coefficients that are already the integers `k` (so `q = k`, `N = 1`).
    pub fn from_integers(k: &[Vec<i64>]) -> Self {
        let rational: Vec<Vec<BigRational>> =
            k.iter().map(|r| r.iter().map(|&v| BigRational::from_integer(v.into())).collect()).collect();
        let (multipliers, integers) = integerize(&rational);
        TischlerCoefficients {
            original: k.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect(),
            rational,
            multipliers,
            integers,
            eps_bound: 0.0,
            max_perturbation: 0.0,
            halvings: 0,
            perturbed_min_singular_value: None,
        }
    }

    pub fn integers_i64(&self) -> Option<Vec<Vec<i64>>> {
        self.integers.iter().map(|r| r.iter().map(ToPrimitive::to_i64).collect()).collect()
    }
}

/// `sum_j q_j nu_j + dF` in floating point.
pub fn perturbed_form(
    complex: &SimplicialComplex,
    basis: &CohomologyBasis,
    q: &[BigRational],
    potential: &Cochain<f64>,
) -> Result<Cochain<f64>, TischlerError> {
    let coeffs: Vec<f64> = q.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    Ok(basis.combine(&coeffs).add(&complex.coboundary(potential)?))
}

/// Replaces every coefficient by a nearby convergent, halving the bound from `eps0`
/// until the perturbed forms are still pointwise independent.
pub fn rationalize(
    complex: &SimplicialComplex,
    decomposition: &Decomposition,
    basis: &CohomologyBasis,
    eps0: f64,
    independence_tol: f64,
) -> Result<TischlerCoefficients, TischlerError> {
    let mut eps = eps0;
    let mut halvings = 0;
    while eps >= EPS_FLOOR {
        let q: Vec<Vec<BigRational>> =
            decomposition.coefficients.iter().map(|row| row.iter().map(|&a| approximate(a, eps)).collect()).collect();
        let forms = q
            .iter()
            .zip(&decomposition.potentials)
            .map(|(row, f)| perturbed_form(complex, basis, row, f))
            .collect::<Result<Vec<_>, _>>()?;
        let report = complex.independence_report(&forms, independence_tol)?;
        if report.pass {
            let max_perturbation = q
                .iter()
                .zip(&decomposition.coefficients)
                .flat_map(|(qr, ar)| qr.iter().zip(ar).map(|(qv, &av)| (qv - exact(av)).abs()))
                .max()
                .and_then(|d| d.to_f64())
                .unwrap_or(0.0);
            let (multipliers, integers) = integerize(&q);
            return Ok(TischlerCoefficients {
                original: decomposition.coefficients.clone(),
                rational: q,
                multipliers,
                integers,
                eps_bound: eps,
                max_perturbation,
                halvings,
                perturbed_min_singular_value: Some(report.min_singular_value),
            });
        }
        eps /= 2.0;
        halvings += 1;
    }
    Err(TischlerError::EpsilonUnderflow { floor: EPS_FLOOR })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Independent oracle: best approximation by scanning denominators upwards.
    fn smallest_denominator_within(a: f64, eps: f64) -> (i64, i64) {
        let x = exact(a);
        let bound = exact(eps);
        for d in 1..100_000i64 {
            let n = (a * d as f64).round() as i64;
            for cand in [n - 1, n, n + 1] {
                if (r(cand, d) - &x).abs() <= bound {
                    return (cand, d);
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn convergents_of_simple_fractions() {
        assert_eq!(convergents(&r(3, 10)), vec![r(0, 1), r(1, 3), r(3, 10)]);
        assert_eq!(convergents(&r(17, 10)), vec![r(1, 1), r(2, 1), r(5, 3), r(17, 10)]);
        assert_eq!(convergents(&r(-1, 2)), vec![r(-1, 1), r(-1, 2)]);
    }

    #[test]
    fn float_decimals_snap_to_their_fractions() {
        assert_eq!(approximate(0.3, 1e-4), r(3, 10));
        assert_eq!(approximate(1.7, 1e-4), r(17, 10));
        assert_eq!(approximate(1.0, 0.0), r(1, 1));
        assert_eq!(approximate(0.0, 0.0), r(0, 1));
        let q = approximate(std::f64::consts::SQRT_2, 1e-6);
        assert!((q.to_f64().unwrap() - std::f64::consts::SQRT_2).abs() <= 1e-6);
        assert_eq!(q, r(1393, 985));
    }

    #[test]
    fn integerize_uses_lcm_of_denominators() {
        let (n, k) = integerize(&[vec![r(3, 10), r(17, 10)]]);
        assert_eq!(n, vec![BigInt::from(10)]);
        assert_eq!(k, vec![vec![BigInt::from(3), BigInt::from(17)]]);
        let (n, k) = integerize(&[vec![r(1, 1), r(0, 1)]]);
        assert_eq!((n[0].clone(), k[0].clone()), (BigInt::from(1), vec![BigInt::from(1), BigInt::from(0)]));
        let (n, k) = integerize(&[vec![r(1, 2), r(1, 3), r(1, 5)]]);
        assert_eq!(n[0], BigInt::from(30));
        assert_eq!(k[0], vec![BigInt::from(15), BigInt::from(10), BigInt::from(6)]);
    }

    proptest! {
        #[test]
        fn convergent_meets_bound(a in -50.0f64..50.0, e in 1u32..9) {
            let eps = 10f64.powi(-(e as i32));
            let q = approximate(a, eps);
            prop_assert!((q.clone() - exact(a)).abs() <= exact(eps));
            if eps >= 1e-5 {
                let (_, d) = smallest_denominator_within(a, eps);
                prop_assert!(q.denom() >= &BigInt::from(d));
            }
        }

        #[test]
        fn integerize_then_divide_recovers_q(nums in proptest::collection::vec((-40i64..40, 1i64..30), 1..5)) {
            let row: Vec<BigRational> = nums.iter().map(|&(n, d)| r(n, d)).collect();
            let (n, k) = integerize(&[row.clone()]);
            prop_assert!(n[0] >= BigInt::one());
            for (kv, qv) in k[0].iter().zip(&row) {
                prop_assert_eq!(BigRational::new(kv.clone(), n[0].clone()), qv.clone());
            }
        }
    }
}
