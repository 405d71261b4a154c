//! Rational perturbation of closed forms to integer periods, the resulting torus-valued
//! map, and its certification as a fibration or covering.

pub mod certify;
pub mod map;
pub mod rational;

use serde::Serialize;
use thiserror::Error;

pub use certify::{
    covering_report, verify_fibration, CertificateVerdict, CertifyOptions, CoveringReport, FiberSample,
    FibrationCertificate,
};
pub use map::{build_fibration_map, periods_match, FibrationMap};
pub use rational::{approximate, convergents, integerize, rationalize, TischlerCoefficients};

use crate::cohomology::{self, CohomologyError, Decomposition};
use crate::mesh::{Cochain, MeshError, SimplicialComplex, DEFAULT_RANK_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TischlerError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Cohomology(#[from] CohomologyError),
    #[error("no perturbation bound down to {floor:e} keeps the forms independent")]
    EpsilonUnderflow { floor: f64 },
    #[error("map values do not match the mesh")]
    MapShape,
    #[error("map with {k} components on a {n}-manifold cannot be certified")]
    MapDimension { k: usize, n: usize },
    #[error("edge {edge} has an increment of half a turn or more; refine the mesh")]
    AmbiguousLift { edge: usize },
    #[error("vertex values disagree with edge increments by {defect:e}")]
    InconsistentLift { defect: f64 },
    #[error("integrated class is not integral across edge {edge}")]
    NonIntegerPeriod { edge: usize },
    #[error("integer class has a non-integer period over cycle {cycle}")]
    NonIntegerCyclePeriod { cycle: usize },
    #[error("integer coefficient does not fit a machine word")]
    Overflow,
    #[error("differential is rank deficient on {simplices} simplices")]
    RankDeficient { simplices: usize },
    #[error("no regular values were sampled")]
    NoRegularValues,
    #[error("preimage counts vary between {min} and {max} over regular values")]
    InconsistentPreimages { min: usize, max: usize },
    #[error("lifted image needs {translates} translates per sample value, more than {limit}")]
    ImageTooLarge { translates: u128, limit: u128 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FibrateOptions {
    pub eps0: f64,
    pub closed_tol: f64,
    pub independence_tol: f64,
    pub certify: CertifyOptions,
}

impl Default for FibrateOptions {
    fn default() -> Self {
        FibrateOptions {
            eps0: 1e-4,
            closed_tol: cohomology::DEFAULT_DECOMPOSITION_TOL,
            independence_tol: DEFAULT_RANK_TOL,
            certify: CertifyOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FibrateStage {
    Closedness,
    Cohomology,
    Independence,
    Rationalize,
    Build,
    Certify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FibrateVerdict {
    Fibration,
    Covering,
    NotClosed,
    InsufficientCohomology,
    DependentClasses,
    IndependenceFailed,
    CertificationFailed,
}

impl FibrateVerdict {
    pub fn is_positive(self) -> bool {
        matches!(self, FibrateVerdict::Fibration | FibrateVerdict::Covering)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FibrateVerdict::Fibration => "fibration",
            FibrateVerdict::Covering => "covering",
            FibrateVerdict::NotClosed => "not closed",
            FibrateVerdict::InsufficientCohomology => "insufficient cohomology",
            FibrateVerdict::DependentClasses => "dependent classes",
            FibrateVerdict::IndependenceFailed => "independence failed",
            FibrateVerdict::CertificationFailed => "certification failed",
        }
    }
}

/// Decomposition coefficients and residuals, without the vertex potentials.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionSummary {
    pub coefficients: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub distinct_classes: bool,
    pub class_rank: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FibrateOutcome {
    pub forms: usize,
    pub dimension: usize,
    pub closedness_residuals: Vec<f64>,
    pub betti: Option<usize>,
    pub decomposition: Option<DecompositionSummary>,
    pub independence_min_singular_value: Option<f64>,
    pub independence_failing: Vec<Vec<usize>>,
    pub coefficients: Option<TischlerCoefficients>,
    pub periods_match: Option<bool>,
    #[serde(skip)]
    pub map: Option<FibrationMap>,
    pub certificate: Option<FibrationCertificate>,
    pub covering: Option<CoveringReport>,
    pub verdict: FibrateVerdict,
    pub failed_stage: Option<FibrateStage>,
    pub reason: Option<String>,
}

impl FibrateOutcome {
    fn new(forms: usize, dimension: usize) -> Self {
        FibrateOutcome {
            forms,
            dimension,
            closedness_residuals: Vec::new(),
            betti: None,
            decomposition: None,
            independence_min_singular_value: None,
            independence_failing: Vec::new(),
            coefficients: None,
            periods_match: None,
            map: None,
            certificate: None,
            covering: None,
            verdict: FibrateVerdict::CertificationFailed,
            failed_stage: None,
            reason: None,
        }
    }

    fn fail(mut self, stage: FibrateStage, verdict: FibrateVerdict, reason: String) -> Self {
        self.failed_stage = Some(stage);
        self.verdict = verdict;
        self.reason = Some(reason);
        self
    }
}

fn numeric_rank(rows: &[Vec<f64>], tol: f64) -> usize {
    crate::mesh::singular_values(rows).iter().filter(|&&s| s >= tol).count()
}

/// Runs the whole construction on `forms`. Negative findings are reported in the
/// outcome; errors are reserved for malformed input and numerical breakdown.
pub fn fibrate(
    complex: &SimplicialComplex,
    forms: &[Cochain<f64>],
    options: &FibrateOptions,
) -> Result<FibrateOutcome, TischlerError> {
    let k = forms.len();
    let n = complex.dim();
    if k == 0 {
        return Err(MeshError::NoForms.into());
    }
    for f in forms {
        if f.degree() != 1 {
            return Err(MeshError::WrongDegree { expected: 1, found: f.degree() }.into());
        }
        complex.check_cochain(f)?;
    }
    let mut out = FibrateOutcome::new(k, n);

    for f in forms {
        let (_, residual) = complex.verify_closed(f, options.closed_tol)?;
        out.closedness_residuals.push(residual);
    }
    if let Some(i) = out.closedness_residuals.iter().position(|&r| r > options.closed_tol) {
        let r = out.closedness_residuals[i];
        return Ok(out.fail(
            FibrateStage::Closedness,
            FibrateVerdict::NotClosed,
            format!("form {} has coboundary residual {r:e}", i + 1),
        ));
    }

    let (cycles, basis) = cohomology::homology(complex)?;
    let p = basis.betti;
    out.betti = Some(p);
    if k > p {
        return Ok(out.fail(
            FibrateStage::Cohomology,
            FibrateVerdict::InsufficientCohomology,
            format!("{k} independent classes requested but the first Betti number is {p}"),
        ));
    }
    let rows = forms
        .iter()
        .map(|f| cohomology::decompose(complex, f, &basis, &cycles, options.closed_tol))
        .collect::<Result<Vec<_>, _>>()?;
    let decomposition = Decomposition::from_rows(rows);
    let class_rank = numeric_rank(&decomposition.coefficients, options.independence_tol);
    out.decomposition = Some(DecompositionSummary {
        coefficients: decomposition.coefficients.clone(),
        residuals: decomposition.residuals.clone(),
        distinct_classes: decomposition.rows_pairwise_distinct(options.closed_tol),
        class_rank,
    });
    if k > n {
        return Ok(out.fail(
            FibrateStage::Independence,
            FibrateVerdict::IndependenceFailed,
            format!("{k} forms cannot be pointwise independent on a {n}-manifold"),
        ));
    }
    let independence = complex.independence_report(forms, options.independence_tol)?;
    out.independence_min_singular_value = Some(independence.min_singular_value);
    if !independence.pass {
        out.independence_failing =
            independence.failing().into_iter().map(|i| independence.simplices[i].simplex.clone()).collect();
        let count = out.independence_failing.len();
        return Ok(out.fail(
            FibrateStage::Independence,
            FibrateVerdict::IndependenceFailed,
            format!("forms are dependent on {count} simplices"),
        ));
    }

    if class_rank < k {
        return Ok(out.fail(
            FibrateStage::Cohomology,
            FibrateVerdict::DependentClasses,
            format!("the {k} classes span only a rank-{class_rank} subspace of H^1"),
        ));
    }

    let coefficients = rationalize(complex, &decomposition, &basis, options.eps0, options.independence_tol)?;
    let map = build_fibration_map(complex, &cycles, &basis, &coefficients, &decomposition.potentials)?;
    out.periods_match = Some(periods_match(&map, &coefficients));
    out.coefficients = Some(coefficients);
    let certificate = match verify_fibration(complex, &map, options.certify) {
        Ok(c) => c,
        Err(e @ TischlerError::ImageTooLarge { .. }) => {
            out.map = Some(map);
            return Ok(out.fail(FibrateStage::Certify, FibrateVerdict::CertificationFailed, e.to_string()));
        }
        Err(e) => return Err(e),
    };

    match certificate.verdict {
        CertificateVerdict::Fail => {
            let reason = certificate.reason.clone().unwrap_or_default();
            out.certificate = Some(certificate);
            out.map = Some(map);
            return Ok(out.fail(FibrateStage::Certify, FibrateVerdict::CertificationFailed, reason));
        }
        CertificateVerdict::Covering => match covering_report(&certificate) {
            Ok(c) => {
                out.covering = Some(c);
                out.verdict = FibrateVerdict::Covering;
            }
            Err(e) => {
                out.certificate = Some(certificate);
                out.map = Some(map);
                return Ok(out.fail(FibrateStage::Certify, FibrateVerdict::CertificationFailed, e.to_string()));
            }
        },
        CertificateVerdict::Fibration => out.verdict = FibrateVerdict::Fibration,
    }
    out.certificate = Some(certificate);
    out.map = Some(map);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::homology;
    use crate::mesh::generators::{flat_torus, klein_bottle};
    use num_bigint::BigInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_potential(mesh: &SimplicialComplex, seed: u64) -> Cochain<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Cochain::new(0, (0..mesh.vertex_count()).map(|_| rng.random_range(-0.01..0.01)).collect())
    }

    #[test]
    fn identity_coefficients_give_grid_coordinates() {
        let mesh = flat_torus(8);
        let (cycles, basis) = homology(&mesh).unwrap();
        let coeffs = TischlerCoefficients::from_integers(&[vec![1, 0], vec![0, 1]]);
        let zero = vec![Cochain::zeros(0, mesh.vertex_count()); 2];
        let map = build_fibration_map(&mesh, &cycles, &basis, &coeffs, &zero).unwrap();
        for (v, c) in mesh.coords().iter().enumerate() {
            assert!((map.values[v][0] - c[0]).abs() < 1e-12, "{v}: {:?} vs {c:?}", map.values[v]);
            assert!((map.values[v][1] - c[1]).abs() < 1e-12);
        }
        assert!(periods_match(&map, &coeffs));
    }

    #[test]
    fn doubled_coefficient_winds_twice() {
        let mesh = flat_torus(8);
        let (cycles, basis) = homology(&mesh).unwrap();
        let coeffs = TischlerCoefficients::from_integers(&[vec![2, 0], vec![0, 1]]);
        let zero = vec![Cochain::zeros(0, mesh.vertex_count()); 2];
        let map = build_fibration_map(&mesh, &cycles, &basis, &coeffs, &zero).unwrap();
        for (v, c) in mesh.coords().iter().enumerate() {
            let expect = (2.0 * c[0]).fract();
            assert!((map.values[v][0] - expect).abs() < 1e-12);
        }
        let cert = verify_fibration(&mesh, &map, CertifyOptions::default()).unwrap();
        assert_eq!(covering_report(&cert).unwrap().degree, 2);
    }

    #[test]
    fn potential_shifts_values_by_scaled_potential() {
        let mesh = flat_torus(8);
        let (cycles, basis) = homology(&mesh).unwrap();
        let coeffs = TischlerCoefficients::from_integers(&[vec![1, 0]]);
        let f = small_potential(&mesh, 3);
        let zero = build_fibration_map(&mesh, &cycles, &basis, &coeffs, &[Cochain::zeros(0, 64)]).unwrap();
        let with = build_fibration_map(&mesh, &cycles, &basis, &coeffs, std::slice::from_ref(&f)).unwrap();
        let f0 = f.values()[cycles.root];
        for v in 0..64 {
            let d = with.values[v][0] - zero.values[v][0] - (f.values()[v] - f0);
            assert!((d - d.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn single_circle_map_fibres_the_torus() {
        let mesh = flat_torus(8);
        let (cycles, basis) = homology(&mesh).unwrap();
        let coeffs = TischlerCoefficients::from_integers(&[vec![1, 0]]);
        let map = build_fibration_map(&mesh, &cycles, &basis, &coeffs, &[Cochain::zeros(0, 64)]).unwrap();
        let cert = verify_fibration(&mesh, &map, CertifyOptions::default()).unwrap();
        assert_eq!(cert.verdict, CertificateVerdict::Fibration);
        assert!(cert.fibers.iter().all(|f| f.components == 1));
    }

    #[test]
    fn perturbed_torus_pair_is_a_covering() {
        let mesh = flat_torus(8);
        let dx = mesh.coordinate_cochain(0);
        let dy = mesh.coordinate_cochain(1);
        let df = mesh.coboundary(&small_potential(&mesh, 7)).unwrap();
        let beta1 = dx.add(&dy.scale(&0.3)).add(&df);
        let out = fibrate(&mesh, &[beta1, dy], &FibrateOptions::default()).unwrap();
        assert_eq!(out.verdict, FibrateVerdict::Covering, "{:?}", out.reason);
        let c = out.coefficients.as_ref().unwrap();
        assert_eq!(c.multipliers, vec![BigInt::from(10), BigInt::from(1)]);
        assert_eq!(c.integers_i64().unwrap(), vec![vec![10, 3], vec![0, 1]]);
        assert_eq!(out.periods_match, Some(true));
        let cert = out.certificate.as_ref().unwrap();
        assert!(cert.rank_deficient.is_empty());
        assert_eq!(cert.coverage, 1.0);
        assert_eq!(out.covering.as_ref().unwrap().degree, 10);
    }

    #[test]
    fn oversized_images_fail_certification() {
        let mesh = flat_torus(8);
        let dx = mesh.coordinate_cochain(0).scale(&10000.5);
        let dy = mesh.coordinate_cochain(1).scale(&1000.5);
        let out = fibrate(&mesh, &[dx, dy], &FibrateOptions::default()).unwrap();
        assert_eq!(out.verdict, FibrateVerdict::CertificationFailed);
        assert_eq!(out.failed_stage, Some(FibrateStage::Certify));
        assert!(out.reason.as_deref().unwrap().contains("translates"), "{:?}", out.reason);
        assert!(out.map.is_some() && out.certificate.is_none());
    }

    #[test]
    fn klein_bottle_has_too_little_cohomology() {
        let mesh = klein_bottle(8);
        let dy = mesh.coordinate_cochain(1);
        let out = fibrate(&mesh, &[dy.clone(), dy], &FibrateOptions::default()).unwrap();
        assert_eq!(out.verdict, FibrateVerdict::InsufficientCohomology);
        assert_eq!(out.failed_stage, Some(FibrateStage::Cohomology));
        assert_eq!(out.betti, Some(1));
    }

    #[test]
    fn repeated_class_fails_independence() {
        let mesh = flat_torus(8);
        let dx = mesh.coordinate_cochain(0);
        let out = fibrate(&mesh, &[dx.clone(), dx.scale(&2.0)], &FibrateOptions::default()).unwrap();
        assert_eq!(out.verdict, FibrateVerdict::IndependenceFailed);
        assert_eq!(out.failed_stage, Some(FibrateStage::Independence));
        assert_eq!(out.decomposition.as_ref().unwrap().class_rank, 1);
    }

    #[test]
    fn open_form_is_rejected_first() {
        let mesh = flat_torus(4);
        let mut bad = mesh.coordinate_cochain(0);
        bad.values_mut()[0] += 0.25;
        let out = fibrate(&mesh, &[bad], &FibrateOptions::default()).unwrap();
        assert_eq!(out.verdict, FibrateVerdict::NotClosed);
    }

    #[test]
    fn irrational_class_is_rationalised_within_bound() {
        let mesh = flat_torus(8);
        let dx = mesh.coordinate_cochain(0);
        let dy = mesh.coordinate_cochain(1);
        let s2 = std::f64::consts::SQRT_2;
        let beta1 = dx.scale(&s2).add(&dy);
        let opts = FibrateOptions { eps0: 1e-6, ..FibrateOptions::default() };
        let (cycles, basis) = homology(&mesh).unwrap();
        let rows = [beta1, dy]
            .iter()
            .map(|f| cohomology::decompose(&mesh, f, &basis, &cycles, 1e-9))
            .collect::<Result<Vec<_>, _>>()
            .unwrap();
        let d = Decomposition::from_rows(rows);
        let c = rationalize(&mesh, &d, &basis, opts.eps0, 1e-9).unwrap();
        assert!(c.max_perturbation <= 1e-6);
        assert!(c.max_perturbation > 0.0);
        // Independent re-check: per-triangle determinant of the perturbed pair.
        let q0: f64 = num_traits::ToPrimitive::to_f64(&c.rational[0][0]).unwrap();
        for s in mesh.top_simplices() {
            let (a, b) = (mesh.displacement(s[0], s[1]), mesh.displacement(s[0], s[2]));
            let r1 = [q0 * a[0] + a[1], q0 * b[0] + b[1]];
            let r2 = [a[1], b[1]];
            assert!((r1[0] * r2[1] - r1[1] * r2[0]).abs() > 1e-3);
        }
    }
}
