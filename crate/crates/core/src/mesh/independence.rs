use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{Cochain, MeshError, SimplicialComplex};

/// Component matrix of k forms on one top simplex, in the edge basis `(v0, vi)`.
#[derive(Debug, Clone, Serialize)]
pub struct SimplexComponents {
    pub simplex: Vec<usize>,
    /// `k` rows of `n` components.
    pub matrix: Vec<Vec<f64>>,
    pub rank: usize,
    pub min_singular_value: f64,
}

/// Pointwise independence of k closed 1-cochains, decided simplex by simplex.
#[derive(Debug, Clone, Serialize)]
pub struct IndependenceReport {
    pub forms: usize,
    pub tolerance: f64,
    pub simplices: Vec<SimplexComponents>,
    pub min_singular_value: f64,
    pub pass: bool,
}

impl IndependenceReport {
    /// Top simplices whose component matrix is rank deficient.
    pub fn failing(&self) -> Vec<usize> {
        self.simplices.iter().enumerate().filter(|(_, s)| s.rank < self.forms).map(|(i, _)| i).collect()
    }
}

pub(crate) fn singular_values(rows: &[Vec<f64>]) -> Vec<f64> {
    let k = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if k == 0 || n == 0 {
        return Vec::new();
    }
    let m = DMatrix::from_fn(k, n, |i, j| rows[i][j]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

impl SimplicialComplex {
    /// Per-simplex rank of the stacked component matrix of `forms`; passes iff every
    /// simplex has rank k with smallest singular value at least `tol`.
    pub fn independence_report(&self, forms: &[Cochain<f64>], tol: f64) -> Result<IndependenceReport, MeshError> {
        let k = forms.len();
        if k == 0 {
            return Err(MeshError::NoForms);
        }
        if k > self.dim {
            return Err(MeshError::TooManyForms { count: k, dim: self.dim });
        }
        for f in forms {
            if f.degree() != 1 {
                return Err(MeshError::WrongDegree { expected: 1, found: f.degree() });
            }
            self.check_cochain(f)?;
        }
        let simplices: Vec<SimplexComponents> = self
            .top
            .par_iter()
            .map(|s| {
                let matrix: Vec<Vec<f64>> =
                    forms.iter().map(|f| self.simplexwise_components(f, s).expect("validated")).collect();
                let sv = singular_values(&matrix);
                let rank = sv.iter().filter(|&&x| x >= tol).count();
                let min_singular_value = if sv.len() < k { 0.0 } else { sv[k - 1] };
                SimplexComponents { simplex: s.clone(), matrix, rank, min_singular_value }
            })
            .collect();
        let min_singular_value = simplices.iter().map(|s| s.min_singular_value).fold(f64::INFINITY, f64::min);
        let pass = simplices.iter().all(|s| s.rank == k) && min_singular_value >= tol;
        Ok(IndependenceReport { forms: k, tolerance: tol, simplices, min_singular_value, pass })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generators::flat_torus;

    /// Closed-form singular values of a 2x2 matrix, used as an independent oracle.
    fn min_sv_2x2(m: &[Vec<f64>]) -> f64 {
        let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
        let s1 = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        let disc = (s1 * s1 - 4.0 * det * det).max(0.0).sqrt();
        ((s1 - disc) / 2.0).max(0.0).sqrt()
    }

    fn sin_profile(mesh: &SimplicialComplex) -> Cochain<f64> {
        let values = mesh
            .coords()
            .iter()
            .map(|c| 0.1 * (2.0 * std::f64::consts::PI * c[0]).sin() * (2.0 * std::f64::consts::PI * c[1]).cos())
            .collect();
        Cochain::new(0, values)
    }

    #[test]
    fn dx_dy_pass_and_repeated_form_fails() {
        let mesh = flat_torus(8);
        let dx = mesh.coordinate_cochain(0);
        let dy = mesh.coordinate_cochain(1);
        let r = mesh.independence_report(&[dx.clone(), dy], 1e-9).unwrap();
        assert!(r.pass);
        assert!(r.simplices.iter().all(|s| s.rank == 2));
        let r = mesh.independence_report(&[dx.clone(), dx], 1e-9).unwrap();
        assert!(!r.pass);
        assert!(r.simplices.iter().all(|s| s.rank == 1));
        assert_eq!(r.failing().len(), 128);
    }

    #[test]
    fn perturbed_pair_matches_determinant_scan() {
        let mesh = flat_torus(8);
        let dx = mesh.coordinate_cochain(0);
        let dy = mesh.coordinate_cochain(1);
        let df = mesh.coboundary(&sin_profile(&mesh)).unwrap();
        let forms = [dx.clone(), dy.add(&df)];
        let r = mesh.independence_report(&forms, 1e-9).unwrap();
        assert!(r.pass);
        // Oracle: rebuild each 2x2 matrix from raw edge values and take the closed-form minimum.
        let mut oracle = f64::INFINITY;
        for s in mesh.top_simplices() {
            let m: Vec<Vec<f64>> = forms
                .iter()
                .map(|f| vec![mesh.edge_value(f, s[0], s[1]).unwrap(), mesh.edge_value(f, s[0], s[2]).unwrap()])
                .collect();
            assert!(m[0][0] * m[1][1] - m[0][1] * m[1][0] != 0.0);
            oracle = oracle.min(min_sv_2x2(&m));
        }
        assert!((r.min_singular_value - oracle).abs() < 1e-12, "{} vs {}", r.min_singular_value, oracle);
    }

    #[test]
    fn too_many_forms_is_impossible() {
        let mesh = flat_torus(4);
        let dx = mesh.coordinate_cochain(0);
        let err = mesh.independence_report(&[dx.clone(), dx.clone(), dx], 1e-9).unwrap_err();
        assert_eq!(err, MeshError::TooManyForms { count: 3, dim: 2 });
    }
}
