use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::SimplicialComplex;

/// Coefficient types a cochain can carry.
pub trait Scalar:
    Clone + Zero + Add<Output = Self> + Sub<Output = Self> + Neg<Output = Self> + PartialEq + std::fmt::Debug
{
}

impl<T> Scalar for T where
    T: Clone + Zero + Add<Output = T> + Sub<Output = T> + Neg<Output = T> + PartialEq + std::fmt::Debug
{
}

/// A p-cochain: one value per canonical p-simplex. The value on a simplex with the
/// opposite orientation is the negation of the stored value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cochain<T> {
    degree: usize,
    values: Vec<T>,
}

impl<T> Cochain<T> {
    pub fn new(degree: usize, values: Vec<T>) -> Self {
        Cochain { degree, values }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Cochain<U> {
        Cochain::new(self.degree, self.values.iter().map(f).collect())
    }
}

impl<T: Scalar> Cochain<T> {
    pub fn zeros(degree: usize, len: usize) -> Self {
        Cochain::new(degree, vec![T::zero(); len])
    }

    /// Value on the simplex with the given vertex order (sign follows the orientation).
    pub fn value_on(&self, complex: &SimplicialComplex, vertices: &[usize]) -> Option<T> {
        let idx = complex.simplex_index(vertices)?;
        let mut sign = 1;
        for i in 0..vertices.len() {
            for j in i + 1..vertices.len() {
                if vertices[i] > vertices[j] {
                    sign = -sign;
                }
            }
        }
        let v = self.values.get(idx)?.clone();
        Some(if sign > 0 { v } else { -v })
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree);
        Cochain::new(
            self.degree,
            self.values.iter().zip(&other.values).map(|(a, b)| a.clone() + b.clone()).collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree);
        Cochain::new(
            self.degree,
            self.values.iter().zip(&other.values).map(|(a, b)| a.clone() - b.clone()).collect(),
        )
    }
}

impl<T: Scalar + Mul<Output = T>> Cochain<T> {
    pub fn scale(&self, s: &T) -> Self {
        self.map(|v| v.clone() * s.clone())
    }

    /// `self + s * other`
    pub fn axpy(&self, s: &T, other: &Self) -> Self {
        self.add(&other.scale(s))
    }
}

impl Cochain<i64> {
    pub fn to_f64(&self) -> Cochain<f64> {
        self.map(|&v| v as f64)
    }

    pub fn to_rational(&self) -> Cochain<BigRational> {
        self.map(|&v| BigRational::from_integer(BigInt::from(v)))
    }
}

impl Cochain<BigRational> {
    pub fn to_f64(&self) -> Cochain<f64> {
        self.map(|v| v.to_f64().unwrap_or(f64::NAN))
    }
}
