use rayon::prelude::*;
use serde::Serialize;

use super::{distance, joint_flow, norm, pseudo_inverse, Dopri5, FlowError, InBox, LevelSetSample, TorusError};
use crate::geomech::SystemDefinition;
use crate::mesh::singular_values;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeOptions {
    pub t_max: f64,
    /// Grid points per time axis, endpoints included.
    pub grid: usize,
    pub return_tol: f64,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        LatticeOptions { t_max: 20.0, grid: 64, return_tol: 1e-8 }
    }
}

/// Refinement accepts a return once `|Phi_t(m) - m|` is below this multiple of the tolerance.
const NEAR_RETURN_FACTOR: f64 = 10.0;
const MAX_REFINEMENT_ITERATIONS: usize = 50;
const DEDUP_TOL: f64 = 1e-6;
const BASIS_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct PeriodLattice {
    pub options: LatticeOptions,
    /// Grid local minima handed to refinement.
    pub candidates: usize,
    /// Distinct refined return times, sorted by length.
    pub returns: Vec<Vec<f64>>,
    pub basis: Vec<Vec<f64>>,
    pub rank: usize,
    /// `|Phi_b(m) - m|` for each basis vector.
    pub basis_residuals: Vec<f64>,
    /// Largest distance from a return time to the nearest integer combination of the basis.
    pub reconstruction_residual: f64,
    /// Largest drift of any first integral over the scanned grid.
    pub conservation_residual: f64,
    /// Largest drift of the brackets `{f_j, f_k}` over the scanned grid.
    pub bracket_drift: f64,
}

fn scan_grid(sys: &SystemDefinition, x0: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>, FlowError> {
    let d = Dopri5::default();
    let check = InBox(sys);
    let mut layer = vec![x0.to_vec()];
    for axis in (0..sys.rank).rev() {
        let next = layer
            .par_iter()
            .map(|p| d.integrate_stops(|y| Ok(sys.hamiltonian_field(axis, y)?), p, times, &check))
            .collect::<Result<Vec<_>, _>>()?;
        layer = next.into_iter().flatten().collect();
    }
    Ok(layer)
}

/// Multi-index of a flat grid position; axis 0 varies fastest.
fn decode(mut idx: usize, grid: usize, r: usize) -> Vec<usize> {
    let mut out = vec![0; r];
    for o in out.iter_mut() {
        *o = idx % grid;
        idx /= grid;
    }
    out
}

fn encode(multi: &[usize], grid: usize) -> usize {
    multi.iter().rev().fold(0, |acc, &i| acc * grid + i)
}

fn is_local_min(dist: &[f64], multi: &[usize], grid: usize) -> bool {
    let r = multi.len();
    let here = dist[encode(multi, grid)];
    let mut nb = multi.to_vec();
    for code in 0..3usize.pow(r as u32) {
        let mut c = code;
        let mut valid = true;
        let mut moved = false;
        for (a, &m) in multi.iter().enumerate() {
            let off = (c % 3) as isize - 1;
            c /= 3;
            let v = m as isize + off;
            if v < 0 || v >= grid as isize {
                valid = false;
                break;
            }
            moved |= off != 0;
            nb[a] = v as usize;
        }
        if valid && moved && dist[encode(&nb, grid)] < here {
            return false;
        }
    }
    true
}

/// Gauss–Newton on `t -> Phi_t(m) - m`; the Jacobian columns are the fields at
/// the end point, which holds because the flows commute.
fn refine(sys: &SystemDefinition, x0: &[f64], mut t: Vec<f64>, tol: f64) -> Option<(Vec<f64>, f64)> {
    let fields: Vec<usize> = (0..sys.rank).collect();
    let mut best = f64::INFINITY;
    for _ in 0..=MAX_REFINEMENT_ITERATIONS {
        let y = joint_flow(sys, &fields, &t, x0).ok()?;
        let g: Vec<f64> = y.iter().zip(x0).map(|(a, b)| a - b).collect();
        let res = norm(&g);
        best = res;
        if res <= tol {
            return Some((t, res));
        }
        let cols = sys.fields(&fields, &y).ok()?;
        let n = x0.len();
        let jac: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        let pinv = pseudo_inverse(&jac, 1e-10);
        for (k, tk) in t.iter_mut().enumerate() {
            *tk -= (0..n).map(|i| pinv[(k, i)] * g[i]).sum::<f64>();
        }
    }
    (best <= NEAR_RETURN_FACTOR * tol).then_some((t, best))
}

fn rank_of(rows: &[Vec<f64>]) -> usize {
    let sv = singular_values(rows);
    let top = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| top > 0.0 && s > BASIS_RTOL * top).count()
}

pub fn period_lattice(
    sys: &SystemDefinition,
    sample: &LevelSetSample,
    options: &LatticeOptions,
) -> Result<PeriodLattice, TorusError> {
    let r = sys.rank;
    let grid = options.grid.max(2);
    let x0 = &sample.point;
    let h = options.t_max / (grid - 1) as f64;
    let times: Vec<f64> = (0..grid).map(|i| i as f64 * h).collect();
    let points = scan_grid(sys, x0, &times)?;

    let f0 = sys.integral_values(x0)?;
    let s = sys.integral_count();
    let pairs: Vec<(usize, usize)> = (0..s).flat_map(|j| (j + 1..s).map(move |k| (j, k))).collect();
    let b0 = pairs.iter().map(|&(j, k)| sys.poisson_bracket(j, k, x0)).collect::<Result<Vec<_>, _>>()?;
    let drifts = points
        .par_iter()
        .map(|p| {
            let f = sys.integral_values(p)?;
            let cons = f.iter().zip(&f0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let mut br = 0.0f64;
            for (&(j, k), b) in pairs.iter().zip(&b0) {
                br = br.max((sys.poisson_bracket(j, k, p)? - b).abs());
            }
            Ok((cons, br))
        })
        .collect::<Result<Vec<_>, TorusError>>()?;
    let conservation_residual = drifts.iter().map(|d| d.0).fold(0.0, f64::max);
    let bracket_drift = drifts.iter().map(|d| d.1).fold(0.0, f64::max);

    let dist: Vec<f64> = points.iter().map(|p| distance(p, x0)).collect();
    let which: Vec<usize> = (0..r).collect();
    let speed = sys.fields(&which, x0)?.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let threshold = r as f64 * h * speed;
    let starts: Vec<Vec<f64>> = (1..dist.len())
        .filter(|&i| dist[i] <= threshold)
        .map(|i| decode(i, grid, r))
        .filter(|m| is_local_min(&dist, m, grid))
        .map(|m| m.iter().map(|&i| times[i]).collect())
        .collect();
    let candidates = starts.len();
    let refined: Vec<(Vec<f64>, f64)> = starts
        .into_par_iter()
        .filter_map(|t| refine(sys, x0, t, options.return_tol))
        .filter(|(t, _)| norm(t) > 0.5 * h)
        .collect();

    let mut sorted = refined;
    sorted.sort_by(|a, b| norm(&a.0).total_cmp(&norm(&b.0)).then_with(|| a.0.partial_cmp(&b.0).unwrap()));
    let mut returns: Vec<(Vec<f64>, f64)> = Vec::new();
    for cand in sorted {
        if returns.iter().all(|(t, _)| distance(t, &cand.0) > DEDUP_TOL) {
            returns.push(cand);
        }
    }
    if returns.is_empty() {
        return Err(TorusError::NoReturns { t_max: options.t_max });
    }

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut basis_residuals = Vec::new();
    for (t, res) in &returns {
        if basis.len() == r {
            break;
        }
        let mut trial = basis.clone();
        trial.push(t.clone());
        if rank_of(&trial) == trial.len() {
            basis = trial;
            basis_residuals.push(*res);
        }
    }
    let rank = basis.len();
    // Present the basis in echelon-like order: by first significant component.
    let mut order: Vec<usize> = (0..rank).collect();
    let lead = |v: &[f64]| v.iter().position(|x| x.abs() > BASIS_RTOL * norm(v)).unwrap_or(v.len());
    order.sort_by_key(|&i| lead(&basis[i]));
    let basis: Vec<Vec<f64>> = order.iter().map(|&i| basis[i].clone()).collect();
    let basis_residuals: Vec<f64> = order.iter().map(|&i| basis_residuals[i]).collect();

    // Coefficients c with sum_i c_i b_i = t, then the distance to the rounded combination.
    let cols: Vec<Vec<f64>> = (0..r).map(|a| basis.iter().map(|b| b[a]).collect()).collect();
    let pinv = pseudo_inverse(&cols, 1e-12);
    let reconstruction_residual = returns
        .iter()
        .map(|(t, _)| {
            let mut approx = vec![0.0; r];
            for (i, b) in basis.iter().enumerate() {
                let c: f64 = (0..r).map(|a| pinv[(i, a)] * t[a]).sum();
                let c = c.round();
                for a in 0..r {
                    approx[a] += c * b[a];
                }
            }
            distance(&approx, t)
        })
        .fold(0.0, f64::max);

    Ok(PeriodLattice {
        options: *options,
        candidates,
        returns: returns.into_iter().map(|(t, _)| t).collect(),
        basis,
        rank,
        basis_residuals,
        reconstruction_residual,
        conservation_residual,
        bracket_drift,
    })
}
