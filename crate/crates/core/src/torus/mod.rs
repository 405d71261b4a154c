//! Numerical witnesses that a regular fibre of an integrable system is a torus:
//! projection onto a level set, joint Hamiltonian flows, the dual coframe of the
//! flow fields and the lattice of return times.

mod dopri;
mod lattice;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geomech::{ClassificationVerdict, GeomechError, SystemDefinition, DEFAULT_SAMPLES};
use crate::mesh::singular_values;

pub use dopri::{Dopri5, StepCheck};
pub use lattice::{period_lattice, LatticeOptions, PeriodLattice};

pub const LEVEL_TOL: f64 = 1e-10;
pub const MAX_PROJECTION_ITERATIONS: usize = 100;
/// Smallest accepted `sigma_min / sigma_max` of `dF` at a projected point.
pub const REGULARITY_RTOL: f64 = 1e-4;
/// Smallest accepted `sigma_min / sigma_max` of the flow fields.
pub const FIELD_RTOL: f64 = 1e-8;
pub const COFRAME_TOL: f64 = 1e-10;
pub const COMMUTATION_TOL: f64 = 1e-7;
pub const RECONSTRUCTION_TOL: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Geomech(#[from] GeomechError),
    #[error("trajectory left the system box at t = {time}")]
    BoxExit { time: f64 },
    #[error("step size underflow at t = {time}")]
    StepUnderflow { time: f64 },
    #[error("step limit exceeded at t = {time}")]
    TooManySteps { time: f64 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error(transparent)]
    Geomech(#[from] GeomechError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("{what} has {found} entries, expected {expected}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error("initial guess lies outside the system box")]
    OutsideBox,
    #[error("projection did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Jacobian of the integrals is rank deficient at the limit point (sigma ratio {ratio:e})")]
    NotRegular { ratio: f64 },
    #[error("flow fields are dependent at the point (sigma ratio {ratio:e})")]
    DependentFields { ratio: f64 },
    #[error("no return times found in [0, {t_max}]")]
    NoReturns { t_max: f64 },
}

struct InBox<'a>(&'a SystemDefinition);

impl StepCheck for InBox<'_> {
    fn accept(&self, t: f64, y: &[f64]) -> Result<(), FlowError> {
        if self.0.in_box(y) {
            Ok(())
        } else {
            Err(FlowError::BoxExit { time: t })
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Moore–Penrose inverse of a row-major matrix, truncating singular values below
/// `rtol * sigma_max`.
pub(crate) fn pseudo_inverse(rows: &[Vec<f64>], rtol: f64) -> DMatrix<f64> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    let a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let svd = a.svd(true, true);
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    svd.pseudo_inverse(rtol * top.max(f64::MIN_POSITIVE)).unwrap_or_else(|_| DMatrix::zeros(n, m))
}

fn sigma_ratio(rows: &[Vec<f64>]) -> f64 {
    let sv = singular_values(rows);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 && sv.len() == rows.len() => lo / hi,
        _ => 0.0,
    }
}

/// Regular point on a level set of the first integrals.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetSample {
    pub level: Vec<f64>,
    pub point: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub jacobian_rank: usize,
    pub jacobian_sigma_ratio: f64,
    pub poisson_rank: usize,
}

pub fn project_to_level(sys: &SystemDefinition, c: &[f64], guess: &[f64]) -> Result<LevelSetSample, TorusError> {
    let s = sys.integral_count();
    if c.len() != s {
        return Err(TorusError::Dimension { what: "level", expected: s, found: c.len() });
    }
    if guess.len() != sys.dim {
        return Err(TorusError::Dimension { what: "guess", expected: sys.dim, found: guess.len() });
    }
    if !sys.in_box(guess) {
        return Err(TorusError::OutsideBox);
    }
    let mut x = guess.to_vec();
    let mut iterations = 0;
    let (jac, residual) = loop {
        let (vals, jac) = sys.integral_jacobian(&x)?;
        let r: Vec<f64> = vals.iter().zip(c).map(|(v, c)| v - c).collect();
        let residual = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if residual <= LEVEL_TOL {
            break (jac, residual);
        }
        if iterations == MAX_PROJECTION_ITERATIONS {
            return Err(TorusError::NoConvergence { iterations, residual });
        }
        let pinv = pseudo_inverse(&jac, 1e-12);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi -= (0..s).map(|k| pinv[(i, k)] * r[k]).sum::<f64>();
        }
        iterations += 1;
    };
    let sv = singular_values(&jac);
    let top = sv.first().copied().unwrap_or(0.0);
    let ratio = if sv.len() == s && top > 0.0 { sv[s - 1] / top } else { 0.0 };
    let jacobian_rank = sv.iter().filter(|&&v| top > 0.0 && v >= REGULARITY_RTOL * top).count();
    if ratio < REGULARITY_RTOL {
        return Err(TorusError::NotRegular { ratio });
    }
    let poisson_rank = crate::geomech::numeric_rank(&sys.pi_matrix(&x)?);
    Ok(LevelSetSample {
        level: c.to_vec(),
        point: x,
        iterations,
        residual,
        jacobian_rank,
        jacobian_sigma_ratio: ratio,
        poisson_rank,
    })
}

/// `Phi^i_t(x)` for the Hamiltonian field of integral `i`.
pub fn flow(sys: &SystemDefinition, i: usize, t: f64, x: &[f64]) -> Result<Vec<f64>, FlowError> {
    Dopri5::default().integrate(|y| Ok(sys.hamiltonian_field(i, y)?), x, t, &InBox(sys))
}

/// `Phi^{f_1}_{t_1} o ... o Phi^{f_r}_{t_r}(x)`: the last listed field acts first.
pub fn joint_flow(sys: &SystemDefinition, fields: &[usize], t: &[f64], x: &[f64]) -> Result<Vec<f64>, FlowError> {
    if fields.len() != t.len() {
        return Err(FlowError::Invalid(format!("{} fields but {} times", fields.len(), t.len())));
    }
    let mut y = x.to_vec();
    for (&i, &ti) in fields.iter().zip(t).rev() {
        y = flow(sys, i, ti, &y)?;
    }
    Ok(y)
}

/// `|Phi^i_t Phi^j_s (x) - Phi^j_s Phi^i_t (x)|`.
pub fn commutation_residual(
    sys: &SystemDefinition,
    i: usize,
    j: usize,
    x: &[f64],
    t: f64,
    s: f64,
) -> Result<f64, FlowError> {
    let a = flow(sys, i, t, &flow(sys, j, s, x)?)?;
    let b = flow(sys, j, s, &flow(sys, i, t, x)?)?;
    Ok(distance(&a, &b))
}

/// Largest commutation residual over all pairs of the first `r` fields and all
/// pairs of listed times.
pub fn commutation_scan(sys: &SystemDefinition, x: &[f64], times: &[f64]) -> Result<f64, FlowError> {
    let r = sys.rank;
    let mut jobs = Vec::new();
    for i in 0..r {
        for j in i + 1..r {
            for &t in times {
                for &s in times {
                    jobs.push((i, j, t, s));
                }
            }
        }
    }
    let vals = jobs
        .par_iter()
        .map(|&(i, j, t, s)| commutation_residual(sys, i, j, x, t, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Flow fields at a point and the covectors `beta_i` on their span with
/// `beta_i(X_j) = delta_ij`.
#[derive(Debug, Clone, Serialize)]
pub struct DualCoframe {
    pub point: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
    pub covectors: Vec<Vec<f64>>,
    pub pairing_residual: f64,
    pub commutation_residual: f64,
}

pub fn dual_coframe(sys: &SystemDefinition, sample: &LevelSetSample) -> Result<DualCoframe, TorusError> {
    let r = sys.rank;
    let x = &sample.point;
    let which: Vec<usize> = (0..r).collect();
    let fields = sys.fields(&which, x)?;
    let ratio = sigma_ratio(&fields);
    if ratio < FIELD_RTOL {
        return Err(TorusError::DependentFields { ratio });
    }
    let n = sys.dim;
    // Columns of `xm` are the fields; covectors are the columns of X (X^T X)^-1.
    let xm = DMatrix::from_fn(n, r, |i, j| fields[j][i]);
    let gram = xm.transpose() * &xm;
    let inv = gram.try_inverse().ok_or(TorusError::DependentFields { ratio })?;
    let b = &xm * inv;
    let pairing = b.transpose() * &xm;
    let mut pairing_residual = 0.0f64;
    for i in 0..r {
        for j in 0..r {
            let target = if i == j { 1.0 } else { 0.0 };
            pairing_residual = pairing_residual.max((pairing[(i, j)] - target).abs());
        }
    }
    let covectors = (0..r).map(|j| (0..n).map(|i| b[(i, j)]).collect()).collect();
    let commutation_residual = commutation_scan(sys, x, &[0.5, 1.0])?;
    Ok(DualCoframe { point: x.clone(), fields, covectors, pairing_residual, commutation_residual })
}

#[derive(Debug, Clone, Serialize)]
pub struct FiberOptions {
    pub samples: usize,
    pub seed: u64,
    pub lattice: LatticeOptions,
    /// Times `t, s` at which flow commutation is checked.
    pub commutation_times: Vec<f64>,
}

impl Default for FiberOptions {
    fn default() -> Self {
        FiberOptions {
            samples: DEFAULT_SAMPLES,
            seed: 0,
            lattice: LatticeOptions::default(),
            commutation_times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FiberVerdict {
    pub level: Vec<f64>,
    pub classification: ClassificationVerdict,
    pub sample: Option<LevelSetSample>,
    pub projection_errors: Vec<String>,
    pub involution_residual: Option<f64>,
    pub jacobi_residual: Option<f64>,
    pub coframe: Option<DualCoframe>,
    pub commutation_residual: Option<f64>,
    pub lattice: Option<PeriodLattice>,
    pub torus_dimension: Option<usize>,
    pub verdict: String,
    pub reason: Option<String>,
}

impl FiberVerdict {
    pub fn is_torus(&self) -> bool {
        self.torus_dimension.is_some()
    }
}

/// Runs every check on the fibre through `level`, trying `guesses` in order for
/// the anchor point. Failures are recorded in the verdict rather than returned.
pub fn fiber_verdict(sys: &SystemDefinition, level: &[f64], guesses: &[Vec<f64>], options: &FiberOptions) -> FiberVerdict {
    let classification = sys.classify(options.samples, options.seed);
    let mut v = FiberVerdict {
        level: level.to_vec(),
        classification,
        sample: None,
        projection_errors: Vec::new(),
        involution_residual: None,
        jacobi_residual: None,
        coframe: None,
        commutation_residual: None,
        lattice: None,
        torus_dimension: None,
        verdict: String::new(),
        reason: None,
    };
    let reason = fill_fiber(sys, level, guesses, options, &mut v);
    match reason {
        None => {
            let r = sys.rank;
            v.torus_dimension = Some(r);
            v.verdict = format!("torus T^{r}");
        }
        Some(why) => {
            v.verdict = format!("inconclusive: {why}");
            v.reason = Some(why);
        }
    }
    v
}

fn fill_fiber(
    sys: &SystemDefinition,
    level: &[f64],
    guesses: &[Vec<f64>],
    options: &FiberOptions,
    v: &mut FiberVerdict,
) -> Option<String> {
    if !v.classification.is_integrable() {
        return Some(format!("system is {}", v.classification.verdict));
    }
    let attempts: Vec<Result<LevelSetSample, TorusError>> =
        guesses.par_iter().map(|g| project_to_level(sys, level, g)).collect();
    for a in attempts {
        match a {
            Ok(s) if v.sample.is_none() => v.sample = Some(s),
            Ok(_) => {}
            Err(e) => v.projection_errors.push(e.to_string()),
        }
    }
    let Some(sample) = v.sample.clone() else {
        let singular = v.projection_errors.iter().any(|e| e.contains("rank deficient"));
        return Some(if singular {
            "anchor not regular".to_string()
        } else {
            "no anchor point on the level set".to_string()
        });
    };
    let x = &sample.point;
    v.involution_residual = sys.involution_at(x).ok();
    v.jacobi_residual = sys.jacobi_at(x).ok();
    match dual_coframe(sys, &sample) {
        Ok(c) => v.coframe = Some(c),
        Err(e) => return Some(format!("coframe failed: {e}")),
    }
    let coframe = v.coframe.as_ref().expect("set above");
    if coframe.pairing_residual > COFRAME_TOL {
        return Some("coframe pairing is not the identity".to_string());
    }
    match commutation_scan(sys, x, &options.commutation_times) {
        Ok(c) => v.commutation_residual = Some(c),
        Err(e) => return Some(format!("flow failed: {e}")),
    }
    if v.commutation_residual.unwrap_or(f64::INFINITY) > COMMUTATION_TOL {
        return Some("flows do not commute".to_string());
    }
    match period_lattice(sys, &sample, &options.lattice) {
        Ok(l) => v.lattice = Some(l),
        Err(e) => return Some(e.to_string()),
    }
    let lattice = v.lattice.as_ref().expect("set above");
    if lattice.rank < sys.rank {
        return Some(format!("found {} independent periods, expected {}", lattice.rank, sys.rank));
    }
    if lattice.reconstruction_residual >= RECONSTRUCTION_TOL {
        return Some("return times are not integer combinations of the basis".to_string());
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    pub(super) fn oscillator() -> SystemDefinition {
        SystemDefinition::from_json(
            r#"{"dimension": 4, "structure": {"kind": "canonical"},
                "integrals": ["(x1^2 + x3^2)/2", "(x2^2 + x4^2)/2"], "box": [[-2,2],[-2,2],[-2,2],[-2,2]]}"#,
        )
        .unwrap()
    }

    pub(super) fn so3() -> SystemDefinition {
        SystemDefinition::from_json(
            r#"{"dimension": 3, "structure": {"kind": "poisson", "bivector": [["-x3", "x2"], ["-x1"]]},
                "integrals": ["x3", "x1^2 + x2^2 + x3^2"], "rank": 1, "box": [[-3,3],[-3,3],[-3,3]]}"#,
        )
        .unwrap()
    }

    fn shear() -> SystemDefinition {
        SystemDefinition::from_json(
            r#"{"dimension": 2, "structure": {"kind": "canonical"}, "integrals": ["x1", "x2^2/2"], "box": [[-5,5],[-5,5]]}"#,
        )
        .unwrap()
    }

    #[test]
    fn projection_lands_on_circles() {
        let s = project_to_level(&oscillator(), &[0.5, 0.5], &[1.1, 0.9, 0.0, 0.0]).unwrap();
        let p = &s.point;
        assert!((p[0] * p[0] + p[2] * p[2] - 1.0).abs() < 1e-9);
        assert!((p[1] * p[1] + p[3] * p[3] - 1.0).abs() < 1e-9);
        assert_eq!(s.jacobian_rank, 2);
        let again = project_to_level(&oscillator(), &[0.5, 0.5], p).unwrap();
        assert_eq!(again.iterations, 0);
        assert_eq!(&again.point, p);
    }

    #[test]
    fn singular_level_is_rejected() {
        let err = project_to_level(&oscillator(), &[0.0, 0.5], &[1.1, 0.9, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, TorusError::NotRegular { .. }), "{err:?}");
        assert_eq!(project_to_level(&oscillator(), &[0.5, 0.5], &[3.0, 0.0, 0.0, 0.0]).unwrap_err(), TorusError::OutsideBox);
    }

    #[test]
    fn flows_rotate() {
        let sys = oscillator();
        let x = [0.3, -0.8, 0.5, 0.1];
        let y = flow(&sys, 0, 2.0 * PI, &x).unwrap();
        assert!(distance(&x, &y) < 1e-8);
        assert_eq!(joint_flow(&sys, &[0, 1], &[0.0, 0.0], &x).unwrap(), x.to_vec());
        let y = flow(&so3(), 0, PI, &[1.0, 0.0, 2.0]).unwrap();
        assert!(distance(&y, &[-1.0, 0.0, 2.0]) < 1e-8, "{y:?}");
    }

    #[test]
    fn commutation_of_decoupled_and_sheared_flows() {
        let sys = oscillator();
        assert!(commutation_scan(&sys, &[0.3, -0.8, 0.5, 0.1], &[0.0, 0.5, 1.0]).unwrap() < 1e-8);
        let sh = shear();
        assert_eq!(commutation_residual(&sh, 0, 1, &[0.2, 0.7], 0.0, 0.4).unwrap(), 0.0);
        // The flows are (q, p - t) and (q + s p, p), so the defect is exactly |t s|.
        let d = commutation_residual(&sh, 0, 1, &[0.2, 0.7], 0.1, 0.1).unwrap();
        assert!((d - 0.01).abs() < 1e-9, "{d}");
    }

    #[test]
    fn coframe_pairs_to_identity() {
        let sys = oscillator();
        let s = project_to_level(&sys, &[0.5, 0.5], &[1.1, 0.9, 0.0, 0.0]).unwrap();
        let c = dual_coframe(&sys, &s).unwrap();
        assert!(c.pairing_residual < 1e-12);
        let so = so3();
        let s = project_to_level(&so, &[2.0, 5.0], &[1.0, 0.0, 2.0]).unwrap();
        let c = dual_coframe(&so, &s).unwrap();
        assert_eq!(c.covectors, vec![vec![0.0, -1.0, 0.0]]);
        let origin = LevelSetSample {
            level: vec![0.0, 0.0],
            point: vec![0.0; 3],
            iterations: 0,
            residual: 0.0,
            jacobian_rank: 0,
            jacobian_sigma_ratio: 0.0,
            poisson_rank: 0,
        };
        assert!(matches!(dual_coframe(&so, &origin), Err(TorusError::DependentFields { .. })));
    }

    #[test]
    fn fibre_verdicts() {
        let sys = oscillator();
        let opts = FiberOptions { samples: 200, ..FiberOptions::default() };
        let v = fiber_verdict(&sys, &[0.5, 0.5], &[vec![1.1, 0.9, 0.0, 0.0]], &opts);
        assert_eq!(v.verdict, "torus T^2", "{v:?}");
        let v = fiber_verdict(&sys, &[0.0, 0.5], &[vec![1.1, 0.9, 0.0, 0.0]], &opts);
        assert_eq!(v.verdict, "inconclusive: anchor not regular");
        let v = fiber_verdict(&so3(), &[1.0, 5.0], &[vec![2.0, 0.0, 1.0]], &opts);
        assert_eq!(v.verdict, "torus T^1", "{v:?}");
    }
}
