//! Assembly of the torus-valued map from integer-scaled forms.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::rational::TischlerCoefficients;
use super::TischlerError;
use crate::cohomology::{CohomologyBasis, CycleBasis};
use crate::mesh::{Cochain, SimplicialComplex};

/// Largest tolerated deviation of a vertex difference from the edge increment (mod 1).
pub const EDGE_TOL: f64 = 1e-9;

/// A map `M -> T^k` given by vertex values in `[0, 1)^k` together with the real edge
/// increments `beta'_i` that say how far each coordinate winds along every edge.
#[derive(Debug, Clone, Serialize)]
pub struct FibrationMap {
    pub k: usize,
    /// `values[v][i]` is `Theta_i(v)`.
    pub values: Vec<Vec<f64>>,
    pub increments: Vec<Cochain<f64>>,
    /// Periods of each integer class part over the selected cycles (exact integers).
    #[serde(serialize_with = "crate::report::ser_bigint_matrix")]
    pub pullback_periods: Vec<Vec<BigInt>>,
    pub max_edge_defect: f64,
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

fn wrap(d: f64) -> f64 {
    d - d.round()
}

fn edge_defect(complex: &SimplicialComplex, values: &[Vec<f64>], increments: &[Cochain<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (e, uv) in complex.edges().iter().enumerate() {
        for (i, inc) in increments.iter().enumerate() {
            let d = values[uv[1]][i] - values[uv[0]][i] - inc.values()[e];
            worst = worst.max(wrap(d).abs());
        }
    }
    worst
}

impl FibrationMap {
    /// A map given only by vertex values; every edge increment is the representative of
    /// the difference in `(-1/2, 1/2)`.
    pub fn from_values(complex: &SimplicialComplex, values: Vec<Vec<f64>>) -> Result<Self, TischlerError> {
        let k = values.first().map_or(0, Vec::len);
        if values.len() != complex.vertex_count() || values.iter().any(|v| v.len() != k) || k == 0 {
            return Err(TischlerError::MapShape);
        }
        let values: Vec<Vec<f64>> = values.into_iter().map(|v| v.into_iter().map(frac).collect()).collect();
        let mut increments = Vec::with_capacity(k);
        for i in 0..k {
            let mut inc = Vec::with_capacity(complex.count(1));
            for (e, uv) in complex.edges().iter().enumerate() {
                let d = wrap(values[uv[1]][i] - values[uv[0]][i]);
                if d.abs() > 0.5 - EDGE_TOL {
                    return Err(TischlerError::AmbiguousLift { edge: e });
                }
                inc.push(d);
            }
            increments.push(Cochain::new(1, inc));
        }
        for inc in &increments {
            let (closed, residual) = complex.verify_closed(inc, EDGE_TOL)?;
            if !closed {
                return Err(TischlerError::InconsistentLift { defect: residual });
            }
        }
        Ok(FibrationMap { k, values, increments, pullback_periods: Vec::new(), max_edge_defect: 0.0 })
    }

    /// Lifted images of the vertices of `simplex` in `R^k`, starting at `Theta(v0)`.
    pub fn lift(&self, complex: &SimplicialComplex, simplex: &[usize]) -> Vec<Vec<f64>> {
        let v0 = simplex[0];
        simplex
            .iter()
            .map(|&v| {
                (0..self.k)
                    .map(|i| {
                        let step = if v == v0 { 0.0 } else { complex.edge_value(&self.increments[i], v0, v).unwrap() };
                        self.values[v0][i] + step
                    })
                    .collect()
            })
            .collect()
    }
}

/// `Theta_i = sum_j k_ij nu_j` integrated exactly along the tree, plus `N_i (F_i - F_i(root))`,
/// all reduced mod 1.
pub fn build_fibration_map(
    complex: &SimplicialComplex,
    cycles: &CycleBasis,
    basis: &CohomologyBasis,
    coefficients: &TischlerCoefficients,
    potentials: &[Cochain<f64>],
) -> Result<FibrationMap, TischlerError> {
    let k = coefficients.integers.len();
    let nv = complex.vertex_count();
    let mut values = vec![vec![0.0; k]; nv];
    let mut increments = Vec::with_capacity(k);
    let mut pullback_periods = Vec::with_capacity(k);
    for i in 0..k {
        let mut class = Cochain::<BigRational>::zeros(1, complex.count(1));
        for (kij, nu) in coefficients.integers[i].iter().zip(&basis.smooth) {
            class = class.axpy(&BigRational::from_integer(kij.clone()), nu);
        }
        let g = cycles.integrate_exact(complex, &class);
        for (e, uv) in complex.edges().iter().enumerate() {
            let d = &g.values()[uv[1]] - &g.values()[uv[0]] - &class.values()[e];
            if !d.is_integer() {
                return Err(TischlerError::NonIntegerPeriod { edge: e });
            }
        }
        let periods: Vec<BigRational> = cycles.periods_exact(&class);
        if let Some(cycle) = periods.iter().position(|p| !p.is_integer()) {
            return Err(TischlerError::NonIntegerCyclePeriod { cycle });
        }
        pullback_periods.push(periods.iter().map(|p| p.to_integer()).collect());

        let n_i = coefficients.multipliers[i].to_f64().ok_or(TischlerError::Overflow)?;
        let f = &potentials[i];
        let f_root = f.values()[cycles.root];
        for v in 0..nv {
            let gv = &g.values()[v];
            let class_frac = (gv - gv.floor()).to_f64().unwrap_or(0.0);
            values[v][i] = frac(class_frac + frac(n_i * (f.values()[v] - f_root)));
        }
        let df = complex.coboundary(&f.scale(&n_i))?;
        increments.push(class.to_f64().add(&df));
    }
    let max_edge_defect = edge_defect(complex, &values, &increments);
    if max_edge_defect > EDGE_TOL {
        return Err(TischlerError::InconsistentLift { defect: max_edge_defect });
    }
    Ok(FibrationMap { k, values, increments, pullback_periods, max_edge_defect })
}

/// Whether every entry of the pullback period matrix equals the corresponding `k_ij`.
pub fn periods_match(map: &FibrationMap, coefficients: &TischlerCoefficients) -> bool {
    map.pullback_periods == coefficients.integers
}
