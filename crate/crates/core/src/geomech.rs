//! Symplectic and Poisson structures given by expressions, their brackets and
//! Hamiltonian fields, and a sampling classification of integrable systems.
//!
//! Conventions: `{f, g} = sum_ij Pi^ij d_i f d_j g` and `X_f^i = sum_j Pi^ij d_j f`,
//! so `<dg, X_f> = {g, f}`. The canonical structure on `R^2n` uses the order
//! `(q_1..q_n, p_1..p_n)` with `Pi^(q_i p_i) = +1`, giving `X_f = (d_p f, -d_q f)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_expression, CompiledExpr, EvalError, Expr, ParseError};
use crate::mesh::singular_values;

/// Fraction of samples that must be regular for independence on a dense open set.
pub const REGULAR_FRACTION: f64 = 0.95;
pub const DEFAULT_SAMPLES: usize = 1000;
pub const INVOLUTION_TOL: f64 = 1e-10;
pub const JACOBI_TOL: f64 = 1e-10;
/// Relative singular-value threshold for pointwise ranks.
pub const RANK_RTOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomechError {
    #[error("{context}: {source}")]
    Parse { context: String, source: ParseError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid system: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    Canonical,
    Poisson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureFile {
    pub kind: StructureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bivector: Option<Vec<Vec<String>>>,
}

/// On-disk form of a system.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    pub structure: StructureFile,
    pub integrals: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct SystemDefinition {
    pub name: Option<String>,
    pub dim: usize,
    pub kind: StructureKind,
    /// Strict upper triangle: `upper[i][j - i - 1]` is `Pi^ij` for `i < j`.
    upper: Vec<Vec<CompiledExpr>>,
    pub integrals: Vec<CompiledExpr>,
    pub rank: usize,
    pub bounds: Vec<[f64; 2]>,
}

fn parse_in(text: &str, context: String, dim: usize) -> Result<CompiledExpr, GeomechError> {
    let e = parse_expression(text).map_err(|source| GeomechError::Parse { context: context.clone(), source })?;
    e.compile(dim).map_err(|err| GeomechError::Invalid(format!("{context}: {err}")))
}

impl SystemDefinition {
    pub fn from_file(file: &SystemFile) -> Result<Self, GeomechError> {
        let n = file.dimension;
        if n == 0 {
            return Err(GeomechError::Invalid("dimension must be positive".into()));
        }
        if file.integrals.is_empty() {
            return Err(GeomechError::Invalid("at least one first integral is required".into()));
        }
        if file.bounds.len() != n {
            return Err(GeomechError::Invalid(format!("box has {} intervals, expected {n}", file.bounds.len())));
        }
        if file.bounds.iter().any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(GeomechError::Invalid("box intervals must be finite with lo < hi".into()));
        }
        let upper = match file.structure.kind {
            StructureKind::Canonical => {
                if !n.is_multiple_of(2) {
                    return Err(GeomechError::Invalid("canonical structure needs an even dimension".into()));
                }
                if file.structure.bivector.is_some() {
                    return Err(GeomechError::Invalid("canonical structure takes no bivector".into()));
                }
                Vec::new()
            }
            StructureKind::Poisson => {
                let rows = file
                    .structure
                    .bivector
                    .as_ref()
                    .ok_or_else(|| GeomechError::Invalid("poisson structure needs a bivector".into()))?;
                if rows.len() + 1 != n && !(n == 1 && rows.is_empty()) {
                    return Err(GeomechError::Invalid(format!("bivector needs {} rows", n.saturating_sub(1))));
                }
                rows.iter()
                    .enumerate()
                    .map(|(i, row)| {
                        if row.len() != n - 1 - i {
                            return Err(GeomechError::Invalid(format!(
                                "bivector row {} needs {} entries",
                                i + 1,
                                n - 1 - i
                            )));
                        }
                        row.iter()
                            .enumerate()
                            .map(|(o, t)| parse_in(t, format!("bivector entry ({}, {})", i + 1, i + o + 2), n))
                            .collect()
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        let integrals = file
            .integrals
            .iter()
            .enumerate()
            .map(|(i, t)| parse_in(t, format!("integral {}", i + 1), n))
            .collect::<Result<Vec<_>, _>>()?;
        let s = integrals.len();
        let rank = file.rank.unwrap_or(s);
        if rank == 0 || rank > s {
            return Err(GeomechError::Invalid(format!("rank {rank} must lie in 1..={s}")));
        }
        Ok(SystemDefinition { name: file.name.clone(), dim: n, kind: file.structure.kind, upper, integrals, rank, bounds: file.bounds.clone() })
    }

    pub fn from_json(text: &str) -> Result<Self, GeomechError> {
        let file: SystemFile =
            serde_json::from_str(text).map_err(|e| GeomechError::Invalid(format!("malformed system file: {e}")))?;
        Self::from_file(&file)
    }

    pub fn integral_count(&self) -> usize {
        self.integrals.len()
    }

    pub fn integral_exprs(&self) -> Vec<&Expr> {
        self.integrals.iter().map(CompiledExpr::source).collect()
    }

    /// All expressions the system is built from.
    pub fn expressions(&self) -> Vec<&CompiledExpr> {
        self.upper.iter().flatten().chain(&self.integrals).collect()
    }

    pub fn compile(&self, e: &Expr) -> Result<CompiledExpr, GeomechError> {
        Ok(e.compile(self.dim)?)
    }

    /// Full antisymmetric `Pi(x)`.
    pub fn pi_matrix(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, GeomechError> {
        let n = self.dim;
        let mut m = vec![vec![0.0; n]; n];
        match self.kind {
            StructureKind::Canonical => {
                let h = n / 2;
                for i in 0..h {
                    m[i][i + h] = 1.0;
                    m[i + h][i] = -1.0;
                }
            }
            StructureKind::Poisson => {
                for (i, row) in self.upper.iter().enumerate() {
                    for (o, e) in row.iter().enumerate() {
                        let j = i + o + 1;
                        let v = e.eval(x)?;
                        m[i][j] = v;
                        m[j][i] = -v;
                    }
                }
            }
        }
        Ok(m)
    }

    /// `Pi(x)` and `d_l Pi^ij (x)` as `grad[l][i][j]`.
    fn pi_with_gradient(&self, x: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>), GeomechError> {
        let n = self.dim;
        let m = self.pi_matrix(x)?;
        let mut grad = vec![vec![vec![0.0; n]; n]; n];
        if self.kind == StructureKind::Poisson {
            for (i, row) in self.upper.iter().enumerate() {
                for (o, e) in row.iter().enumerate() {
                    let j = i + o + 1;
                    let (_, g) = e.eval_with_gradient(x)?;
                    for l in 0..n {
                        grad[l][i][j] = g[l];
                        grad[l][j][i] = -g[l];
                    }
                }
            }
        }
        Ok((m, grad))
    }

    pub fn bracket(&self, f: &CompiledExpr, g: &CompiledExpr, x: &[f64]) -> Result<f64, GeomechError> {
        let pi = self.pi_matrix(x)?;
        let (_, df) = f.eval_with_gradient(x)?;
        let (_, dg) = g.eval_with_gradient(x)?;
        Ok(bilinear(&pi, &df, &dg))
    }

    /// `{f_i, f_j}` for first integrals (0-based indices).
    pub fn poisson_bracket(&self, i: usize, j: usize, x: &[f64]) -> Result<f64, GeomechError> {
        self.bracket(&self.integrals[i], &self.integrals[j], x)
    }

    pub fn field(&self, f: &CompiledExpr, x: &[f64]) -> Result<Vec<f64>, GeomechError> {
        let pi = self.pi_matrix(x)?;
        let (_, df) = f.eval_with_gradient(x)?;
        Ok(apply(&pi, &df))
    }

    /// `X_{f_i}(x)`.
    pub fn hamiltonian_field(&self, i: usize, x: &[f64]) -> Result<Vec<f64>, GeomechError> {
        self.field(&self.integrals[i], x)
    }

    /// Fields `X_{f_i}` for every listed integral, sharing one evaluation of `Pi`.
    pub fn fields(&self, which: &[usize], x: &[f64]) -> Result<Vec<Vec<f64>>, GeomechError> {
        let pi = self.pi_matrix(x)?;
        which
            .iter()
            .map(|&i| {
                let (_, df) = self.integrals[i].eval_with_gradient(x)?;
                Ok(apply(&pi, &df))
            })
            .collect()
    }

    pub fn integral_values(&self, x: &[f64]) -> Result<Vec<f64>, GeomechError> {
        self.integrals.iter().map(|f| Ok(f.eval(x)?)).collect()
    }

    /// Values and the `s x N` Jacobian of the first integrals.
    pub fn integral_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), GeomechError> {
        let mut vals = Vec::with_capacity(self.integrals.len());
        let mut jac = Vec::with_capacity(self.integrals.len());
        for f in &self.integrals {
            let (v, g) = f.eval_with_gradient(x)?;
            vals.push(v);
            jac.push(g);
        }
        Ok((vals, jac))
    }

    /// Largest Schouten component `|[Pi, Pi]^ijk|` at `x`.
    pub fn jacobi_at(&self, x: &[f64]) -> Result<f64, GeomechError> {
        if self.kind == StructureKind::Canonical {
            return Ok(0.0);
        }
        let n = self.dim;
        let (p, dp) = self.pi_with_gradient(x)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += p[l][i] * dp[l][j][k] + p[l][j] * dp[l][k][i] + p[l][k] * dp[l][i][j];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
        Ok(worst)
    }

    pub fn jacobi_residual(&self, points: &[Vec<f64>]) -> Result<f64, GeomechError> {
        let vals = points.par_iter().map(|x| self.jacobi_at(x)).collect::<Result<Vec<_>, _>>()?;
        Ok(vals.into_iter().fold(0.0, f64::max))
    }

    /// Index pairs whose brackets must vanish: all pairs when `r = s`, otherwise
    /// `i < r` against every `j`.
    pub fn involution_pairs(&self) -> Vec<(usize, usize)> {
        let s = self.integrals.len();
        let r = self.rank;
        let mut out = Vec::new();
        for i in 0..r {
            for j in 0..s {
                if j > i || j >= r {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn involution_at(&self, x: &[f64]) -> Result<f64, GeomechError> {
        let pi = self.pi_matrix(x)?;
        let grads = self
            .integrals
            .iter()
            .map(|f| f.eval_with_gradient(x).map(|(_, g)| g))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self
            .involution_pairs()
            .into_iter()
            .map(|(i, j)| bilinear(&pi, &grads[i], &grads[j]).abs())
            .fold(0.0, f64::max))
    }

    pub fn involution_residual(&self, points: &[Vec<f64>]) -> Result<f64, GeomechError> {
        let vals = points.par_iter().map(|x| self.involution_at(x)).collect::<Result<Vec<_>, _>>()?;
        Ok(vals.into_iter().fold(0.0, f64::max))
    }

    /// `count` uniform points in the system box.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.bounds.iter().map(|[lo, hi]| rng.random_range(*lo..*hi)).collect()).collect()
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.bounds).all(|(v, [lo, hi])| v >= lo && v <= hi)
    }

    /// Ranks of `dF` and of `X_{f_1..f_r}` at `x`, and the rank of `Pi`.
    pub fn ranks_at(&self, x: &[f64]) -> Result<PointRanks, GeomechError> {
        let (_, jac) = self.integral_jacobian(x)?;
        let which: Vec<usize> = (0..self.rank).collect();
        let fields = self.fields(&which, x)?;
        let pi = self.pi_matrix(x)?;
        Ok(PointRanks { jacobian: numeric_rank(&jac), fields: numeric_rank(&fields), poisson: numeric_rank(&pi) })
    }

    pub fn classify(&self, samples: usize, seed: u64) -> ClassificationVerdict {
        let points = self.sample_points(samples, seed);
        let per_point: Vec<Option<(PointRanks, f64, f64)>> = points
            .par_iter()
            .map(|x| {
                let ranks = self.ranks_at(x).ok()?;
                let inv = self.involution_at(x).ok()?;
                let jac = self.jacobi_at(x).ok()?;
                Some((ranks, inv, jac))
            })
            .collect();
        let s = self.integrals.len();
        let r = self.rank;
        let n = self.dim;
        let evaluated = per_point.iter().flatten().count();
        let regular =
            per_point.iter().flatten().filter(|(rk, _, _)| rk.jacobian == s && rk.fields == r).count();
        let regular_fraction = if samples == 0 { 0.0 } else { regular as f64 / samples as f64 };
        let involution_residual = per_point.iter().flatten().map(|t| t.1).fold(0.0, f64::max);
        let jacobi_residual = per_point.iter().flatten().map(|t| t.2).fold(0.0, f64::max);
        let poisson_rank = per_point.iter().flatten().map(|t| t.0.poisson).max().unwrap_or(0);

        let reason = if evaluated < samples {
            Some(NotIntegrable::Evaluation)
        } else if jacobi_residual > JACOBI_TOL {
            Some(NotIntegrable::Jacobi)
        } else if r + s != n {
            Some(NotIntegrable::Count)
        } else if regular_fraction < REGULAR_FRACTION {
            Some(NotIntegrable::Dependent)
        } else if involution_residual > INVOLUTION_TOL {
            Some(NotIntegrable::Involution)
        } else if poisson_rank > 2 * r {
            Some(NotIntegrable::PoissonRank)
        } else {
            None
        };
        let kind = match reason {
            Some(_) => VerdictKind::NotIntegrable,
            None if r == s => VerdictKind::Commutative,
            None => VerdictKind::NonCommutative,
        };
        let verdict = match (kind, reason) {
            (VerdictKind::Commutative, _) => "commutative Liouville".to_string(),
            (VerdictKind::NonCommutative, _) => format!("non-commutative rank {r}"),
            (_, Some(why)) => format!("not integrable: {}", why.as_str()),
            (_, None) => unreachable!(),
        };
        ClassificationVerdict {
            samples,
            seed,
            dimension: n,
            integrals: s,
            rank: r,
            regular_fraction,
            involution_residual,
            jacobi_residual,
            poisson_rank,
            kind,
            reason,
            verdict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PointRanks {
    pub jacobian: usize,
    pub fields: usize,
    pub poisson: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    Commutative,
    NonCommutative,
    NotIntegrable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NotIntegrable {
    Evaluation,
    Jacobi,
    Count,
    Dependent,
    Involution,
    PoissonRank,
}

impl NotIntegrable {
    pub fn as_str(self) -> &'static str {
        match self {
            NotIntegrable::Evaluation => "evaluation failed at a sample point",
            NotIntegrable::Jacobi => "Jacobi identity fails",
            NotIntegrable::Count => "rank and number of integrals do not add up to the dimension",
            NotIntegrable::Dependent => "integrals are not independent on a dense set",
            NotIntegrable::Involution => "integrals are not in involution",
            NotIntegrable::PoissonRank => "Poisson rank exceeds twice the declared rank",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationVerdict {
    pub samples: usize,
    pub seed: u64,
    pub dimension: usize,
    pub integrals: usize,
    pub rank: usize,
    pub regular_fraction: f64,
    pub involution_residual: f64,
    pub jacobi_residual: f64,
    pub poisson_rank: usize,
    pub kind: VerdictKind,
    pub reason: Option<NotIntegrable>,
    pub verdict: String,
}

impl ClassificationVerdict {
    pub fn is_integrable(&self) -> bool {
        self.kind != VerdictKind::NotIntegrable
    }
}

fn bilinear(pi: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, row) in pi.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            s += p * a[i] * b[j];
        }
    }
    s
}

fn apply(pi: &[Vec<f64>], df: &[f64]) -> Vec<f64> {
    pi.iter().map(|row| row.iter().zip(df).map(|(p, d)| p * d).sum()).collect()
}

pub(crate) fn numeric_rank(rows: &[Vec<f64>]) -> usize {
    let sv = singular_values(rows);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RTOL * top.max(1.0)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sys(json: &str) -> SystemDefinition {
        SystemDefinition::from_json(json).unwrap()
    }

    fn canonical_r2(integrals: &str) -> SystemDefinition {
        sys(&format!(
            r#"{{"dimension": 2, "structure": {{"kind": "canonical"}}, "integrals": [{integrals}], "box": [[-2,2],[-2,2]]}}"#
        ))
    }

    fn so3() -> SystemDefinition {
        sys(r#"{"dimension": 3, "structure": {"kind": "poisson", "bivector": [["-x3", "x2"], ["-x1"]]},
                "integrals": ["x3", "x1^2 + x2^2 + x3^2"], "rank": 1, "box": [[-2,2],[-2,2],[-2,2]]}"#)
    }

    fn oscillator() -> SystemDefinition {
        sys(r#"{"dimension": 4, "structure": {"kind": "canonical"},
                "integrals": ["(x1^2 + x3^2)/2", "(x2^2 + x4^2)/2"], "box": [[-2,2],[-2,2],[-2,2],[-2,2]]}"#)
    }

    fn expr(s: &SystemDefinition, t: &str) -> CompiledExpr {
        s.compile(&parse_expression(t).unwrap()).unwrap()
    }

    #[test]
    fn canonical_relation() {
        let s = canonical_r2(r#""x1", "x2""#);
        for x in s.sample_points(10, 1) {
            assert_eq!(s.poisson_bracket(0, 1, &x).unwrap(), 1.0);
            assert_eq!(s.poisson_bracket(0, 0, &x).unwrap(), 0.0);
        }
        assert_eq!(s.involution_residual(&s.sample_points(10, 2)).unwrap(), 1.0);
    }

    #[test]
    fn oscillator_field_rotates() {
        let s = canonical_r2(r#""(x1^2 + x2^2)/2""#);
        assert_eq!(s.hamiltonian_field(0, &[0.3, -0.7]).unwrap(), vec![-0.7, -0.3]);
    }

    #[test]
    fn so3_fields_and_casimir() {
        let s = so3();
        assert_eq!(s.hamiltonian_field(0, &[1.0, 2.0, 3.0]).unwrap(), vec![2.0, -1.0, 0.0]);
        assert_eq!(s.poisson_bracket(0, 1, &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        for x in s.sample_points(100, 5) {
            let xc = s.hamiltonian_field(1, &x).unwrap();
            assert!(xc.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-12);
        }
    }

    #[test]
    fn jacobi_residuals() {
        let canonical = oscillator();
        assert_eq!(canonical.jacobi_residual(&canonical.sample_points(100, 0)).unwrap(), 0.0);
        let s = so3();
        assert!(s.jacobi_residual(&s.sample_points(100, 0)).unwrap() < 1e-12);
        let broken = sys(r#"{"dimension": 3, "structure": {"kind": "poisson", "bivector": [["x1", "x2"], ["1"]]},
                "integrals": ["x3"], "box": [[-2,2],[-2,2],[-2,2]]}"#);
        // Only the Pi^13 d_1 Pi^12 term survives: the residual at (1,1,1) is y = 1.
        assert_eq!(broken.jacobi_at(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!(broken.jacobi_residual(&broken.sample_points(100, 0)).unwrap() > 0.1);
        assert!(broken.classify(200, 0).verdict.starts_with("not integrable: Jacobi"));
    }

    #[test]
    fn classifications() {
        let v = oscillator().classify(DEFAULT_SAMPLES, 0);
        assert_eq!(v.verdict, "commutative Liouville");
        assert!(v.involution_residual < 1e-12);
        let v = so3().classify(DEFAULT_SAMPLES, 0);
        assert_eq!(v.verdict, "non-commutative rank 1");
        assert_eq!(v.poisson_rank, 2);
        let dependent = sys(r#"{"dimension": 4, "structure": {"kind": "canonical"},
                "integrals": ["x1", "x1^2"], "box": [[-2,2],[-2,2],[-2,2],[-2,2]]}"#);
        let v = dependent.classify(DEFAULT_SAMPLES, 0);
        assert_eq!(v.reason, Some(NotIntegrable::Dependent));
        assert_eq!(v.regular_fraction, 0.0);
    }

    #[test]
    fn pair_policy() {
        assert_eq!(so3().involution_pairs(), vec![(0, 1)]);
        assert_eq!(oscillator().involution_pairs(), vec![(0, 1)]);
        let three = sys(r#"{"dimension": 5, "structure": {"kind": "poisson", "bivector": [["0","0","0","0"],["0","0","0"],["0","0"],["0"]]},
                "integrals": ["x1", "x2", "x3"], "rank": 2, "box": [[0,1],[0,1],[0,1],[0,1],[0,1]]}"#);
        assert_eq!(three.involution_pairs(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn malformed_systems_are_rejected() {
        assert!(SystemDefinition::from_json(r#"{"dimension": 3, "structure": {"kind": "canonical"}, "integrals": ["x1"], "box": [[0,1],[0,1],[0,1]]}"#).is_err());
        assert!(SystemDefinition::from_json(r#"{"dimension": 2, "structure": {"kind": "canonical"}, "integrals": ["x3"], "box": [[0,1],[0,1]]}"#).is_err());
        assert!(matches!(
            SystemDefinition::from_json(r#"{"dimension": 2, "structure": {"kind": "canonical"}, "integrals": ["x1 +"], "box": [[0,1],[0,1]]}"#),
            Err(GeomechError::Parse { .. })
        ));
        assert!(SystemDefinition::from_json(r#"{"dimension": 3, "structure": {"kind": "poisson", "bivector": [["x1"], ["1"]]}, "integrals": ["x1"], "box": [[0,1],[0,1],[0,1]]}"#).is_err());
    }

    proptest! {
        #[test]
        fn antisymmetry_leibniz_and_field_consistency(
            x in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let s = so3();
            let f = expr(&s, "x1*x2 + sin(x3)");
            let g = expr(&s, "exp(x1/4) - x2^3");
            let h = expr(&s, "x1 + x2*x3");
            let fg = s.compile(&Expr::mul(f.source().clone(), g.source().clone())).unwrap();
            let bfg = s.bracket(&f, &g, &x).unwrap();
            prop_assert!((bfg + s.bracket(&g, &f, &x).unwrap()).abs() < 1e-12);
            let lhs = s.bracket(&fg, &h, &x).unwrap();
            let rhs = f.eval(&x).unwrap() * s.bracket(&g, &h, &x).unwrap()
                + g.eval(&x).unwrap() * s.bracket(&f, &h, &x).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
            let xf = s.field(&f, &x).unwrap();
            let (_, dg) = g.eval_with_gradient(&x).unwrap();
            let pairing: f64 = dg.iter().zip(&xf).map(|(a, b)| a * b).sum();
            prop_assert!((pairing - s.bracket(&g, &f, &x).unwrap()).abs() < 1e-12);
        }
    }
}
