//! Sampling certificate that a torus-valued map is a submersion onto `T^k` with
//! well-behaved fibres.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::map::FibrationMap;
use super::TischlerError;
use crate::mesh::{singular_values, SimplicialComplex};

/// Slack for barycentric containment tests.
const INSIDE_TOL: f64 = 1e-12;

/// Upper bound on simplex-image translates examined per sample value.
pub const MAX_TRANSLATES: u128 = 200_000;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertifyOptions {
    /// Bin centres per torus axis.
    pub bins: usize,
    pub rank_tol: f64,
    /// A sample value closer than this to the image of a codimension-one face is not regular.
    pub guard: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { bins: 16, rank_tol: crate::mesh::DEFAULT_RANK_TOL, guard: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateVerdict {
    /// Surjective submersion with `k < n`.
    Fibration,
    /// Surjective local diffeomorphism, `k = n`.
    Covering,
    Fail,
}

/// Preimage of one regular sample value.
#[derive(Debug, Clone, Serialize)]
pub struct FiberSample {
    pub value: Vec<f64>,
    /// Preimage pieces: points when `k = n`, simplex slices otherwise.
    pub pieces: usize,
    pub components: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FibrationCertificate {
    pub k: usize,
    pub n: usize,
    pub options: CertifyOptions,
    pub min_singular_value: f64,
    /// Top simplices (vertex lists) where the differential has rank below `k`.
    pub rank_deficient: Vec<Vec<usize>>,
    pub coverage: f64,
    pub uncovered: usize,
    pub samples: usize,
    pub fibers: Vec<FiberSample>,
    pub constant_components: bool,
    pub verdict: CertificateVerdict,
    pub reason: Option<String>,
}

/// Degree information for the equidimensional case.
#[derive(Debug, Clone, Serialize)]
pub struct CoveringReport {
    pub degree: usize,
    pub sampled_values: usize,
    pub diffeomorphism: bool,
    pub statement: String,
}

pub(crate) fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    rec(0, n, r, &mut cur, &mut out);
    out
}

/// Barycentric coordinates of `z` for `k + 1` affinely independent points of `R^k`.
pub(crate) fn barycentric(pts: &[&[f64]], z: &[f64]) -> Option<Vec<f64>> {
    let k = z.len();
    debug_assert_eq!(pts.len(), k + 1);
    let a = DMatrix::from_fn(k, k, |r, c| pts[c + 1][r] - pts[0][r]);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || a.determinant().abs() <= 1e-13 * scale.powi(k as i32) {
        return None;
    }
    let rhs = DVector::from_fn(k, |r, _| z[r] - pts[0][r]);
    let mu = a.lu().solve(&rhs)?;
    let mut lambda = Vec::with_capacity(k + 1);
    lambda.push(1.0 - mu.sum());
    lambda.extend(mu.iter().copied());
    Some(lambda)
}

/// Whether `z` lies in the convex hull of `pts` (any number of points in `R^k`).
pub(crate) fn hull_contains(pts: &[&[f64]], z: &[f64], tol: f64) -> bool {
    let k = z.len();
    if pts.len() < k + 1 {
        return false;
    }
    combinations(pts.len(), k + 1).into_iter().any(|sub| {
        let sel: Vec<&[f64]> = sub.iter().map(|&i| pts[i]).collect();
        barycentric(&sel, z).is_some_and(|l| l.iter().all(|&x| x >= -tol))
    })
}

/// Euclidean distance from `z` to the convex hull of `pts`.
pub(crate) fn distance_to_hull(pts: &[&[f64]], z: &[f64]) -> f64 {
    let dist = |p: &[f64]| p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if pts.len() == 1 {
        return dist(pts[0]);
    }
    let m = pts.len() - 1;
    let k = z.len();
    let e = DMatrix::from_fn(k, m, |r, c| pts[c + 1][r] - pts[0][r]);
    let gram = e.transpose() * &e;
    let rhs = e.transpose() * DVector::from_fn(k, |r, _| z[r] - pts[0][r]);
    let faces = || {
        (0..pts.len())
            .map(|drop| {
                let sub: Vec<&[f64]> = pts.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, p)| *p).collect();
                distance_to_hull(&sub, z)
            })
            .fold(f64::INFINITY, f64::min)
    };
    let scale = gram.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 || gram.determinant().abs() <= 1e-13 * scale.powi(m as i32) {
        return faces();
    }
    let Some(mu) = gram.lu().solve(&rhs) else { return faces() };
    if mu.iter().all(|&x| x >= 0.0) && mu.sum() <= 1.0 {
        let proj: Vec<f64> = (0..k).map(|r| pts[0][r] + (0..m).map(|c| e[(r, c)] * mu[c]).sum::<f64>()).collect();
        dist(&proj)
    } else {
        faces()
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

struct SimplexImage {
    verts: Vec<usize>,
    pts: Vec<Vec<f64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

struct Sample {
    value: Vec<f64>,
    covered: bool,
    regular: bool,
    pieces: usize,
    components: usize,
}

fn shifts(lo: &[f64], hi: &[f64], z: &[f64], guard: f64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for i in 0..z.len() {
        let a = (lo[i] - guard - z[i]).ceil() as i64;
        let b = (hi[i] + guard - z[i]).floor() as i64;
        out = out
            .into_iter()
            .flat_map(|m| {
                (a..=b).map(move |s| {
                    let mut m2 = m.clone();
                    m2.push(s);
                    m2
                })
            })
            .collect();
    }
    out
}

fn sample(
    value: Vec<f64>,
    images: &[SimplexImage],
    neighbours: &[Vec<(usize, usize)>],
    k: usize,
    n: usize,
    guard: f64,
) -> Sample {
    let faces = combinations(n + 1, k);
    let mut regular = true;
    let mut nodes: Vec<(usize, Vec<i64>)> = Vec::new();
    for (t, img) in images.iter().enumerate() {
        for m in shifts(&img.lo, &img.hi, &value, guard) {
            let z: Vec<f64> = value.iter().zip(&m).map(|(c, s)| c + *s as f64).collect();
            let pts: Vec<&[f64]> = img.pts.iter().map(Vec::as_slice).collect();
            if regular {
                for f in &faces {
                    let sub: Vec<&[f64]> = f.iter().map(|&i| pts[i]).collect();
                    if distance_to_hull(&sub, &z) <= guard {
                        regular = false;
                        break;
                    }
                }
            }
            if hull_contains(&pts, &z, INSIDE_TOL) {
                nodes.push((t, m));
            }
        }
    }
    let covered = !nodes.is_empty();
    let pieces = nodes.len();
    let components = if !regular || k == n {
        pieces
    } else {
        let index: HashMap<(usize, Vec<i64>), usize> =
            nodes.iter().cloned().enumerate().map(|(i, key)| (key, i)).collect();
        let mut uf = UnionFind((0..nodes.len()).collect());
        for (a, (t, m)) in nodes.iter().enumerate() {
            let z: Vec<f64> = value.iter().zip(m).map(|(c, s)| c + *s as f64).collect();
            for &(drop, t2) in &neighbours[*t] {
                let facet: Vec<&[f64]> =
                    images[*t].pts.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, p)| p.as_slice()).collect();
                if !hull_contains(&facet, &z, INSIDE_TOL) {
                    continue;
                }
                // Offset between the two lifts, read off at a shared vertex.
                let shared = if drop == 0 { 1 } else { 0 };
                let w = images[*t].verts[shared];
                let pos = images[t2].verts.iter().position(|&v| v == w).expect("shared facet vertex");
                let (here, there) = (&images[*t].pts[shared], &images[t2].pts[pos]);
                let m2: Vec<i64> =
                    m.iter().zip(there.iter().zip(here)).map(|(s, (b, a))| s + (b - a).round() as i64).collect();
                if let Some(&b) = index.get(&(t2, m2)) {
                    uf.union(a, b);
                }
            }
        }
        let mut roots: Vec<usize> = (0..nodes.len()).map(|i| uf.find(i)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    };
    Sample { value, covered, regular, pieces, components }
}

/// Rank, coverage and fibre sampling for `map` on `complex`.
pub fn verify_fibration(
    complex: &SimplicialComplex,
    map: &FibrationMap,
    options: CertifyOptions,
) -> Result<FibrationCertificate, TischlerError> {
    let n = complex.dim();
    let k = map.k;
    if k == 0 || k > n {
        return Err(TischlerError::MapDimension { k, n });
    }
    if options.bins == 0 {
        return Err(TischlerError::MapShape);
    }
    let tops = complex.top_simplices();
    let mut min_singular_value = f64::INFINITY;
    let mut rank_deficient = Vec::new();
    let mut images = Vec::with_capacity(tops.len());
    for s in tops {
        let pts = map.lift(complex, s);
        let diff: Vec<Vec<f64>> = (0..k).map(|i| (1..=n).map(|j| pts[j][i] - pts[0][i]).collect()).collect();
        let sv = singular_values(&diff);
        let sk = sv.get(k - 1).copied().unwrap_or(0.0);
        min_singular_value = min_singular_value.min(sk);
        if sk < options.rank_tol {
            rank_deficient.push(s.clone());
        }
        let lo = (0..k).map(|i| pts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min)).collect();
        let hi = (0..k).map(|i| pts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
        images.push(SimplexImage { verts: s.clone(), pts, lo, hi });
    }

    let translates: u128 = images
        .iter()
        .map(|img| img.lo.iter().zip(&img.hi).map(|(a, b)| ((b - a).max(0.0).floor() as u128).saturating_add(2)).product::<u128>())
        .sum();
    if translates > MAX_TRANSLATES {
        return Err(TischlerError::ImageTooLarge { translates, limit: MAX_TRANSLATES });
    }

    // Neighbours across each facet: (index of the dropped vertex, other top simplex).
    let mut canonical_to_supplied = vec![0; tops.len()];
    for t in 0..tops.len() {
        canonical_to_supplied[complex.top_canonical_index(t)] = t;
    }
    let cofaces = complex.cofaces_of_facets();
    let neighbours: Vec<Vec<(usize, usize)>> = tops
        .iter()
        .enumerate()
        .map(|(t, s)| {
            (0..s.len())
                .filter_map(|drop| {
                    let mut facet: Vec<usize> =
                        s.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &v)| v).collect();
                    facet.sort_unstable();
                    let f = complex.simplex_index(&facet)?;
                    cofaces[f].iter().map(|&c| canonical_to_supplied[c]).find(|&o| o != t).map(|o| (drop, o))
                })
                .collect()
        })
        .collect();

    let total = options.bins.pow(k as u32);
    let samples: Vec<Sample> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rest = idx;
            let value: Vec<f64> = (0..k)
                .map(|_| {
                    let b = rest % options.bins;
                    rest /= options.bins;
                    (b as f64 + 0.5) / options.bins as f64
                })
                .collect();
            sample(value, &images, &neighbours, k, n, options.guard)
        })
        .collect();

    let uncovered = samples.iter().filter(|s| !s.covered).count();
    let coverage = (total - uncovered) as f64 / total as f64;
    let fibers: Vec<FiberSample> = samples
        .iter()
        .filter(|s| s.regular && s.covered)
        .map(|s| FiberSample { value: s.value.clone(), pieces: s.pieces, components: s.components })
        .collect();
    let constant_components = fibers.windows(2).all(|w| w[0].components == w[1].components);

    let (verdict, reason) = if !rank_deficient.is_empty() {
        (CertificateVerdict::Fail, Some(format!("rank below {k} on {} simplices", rank_deficient.len())))
    } else if uncovered > 0 {
        (CertificateVerdict::Fail, Some(format!("not surjective: {uncovered} of {total} bins uncovered")))
    } else if fibers.is_empty() {
        (CertificateVerdict::Fail, Some("no regular values sampled".to_string()))
    } else if k == n {
        (CertificateVerdict::Covering, None)
    } else {
        (CertificateVerdict::Fibration, None)
    };
    Ok(FibrationCertificate {
        k,
        n,
        options,
        min_singular_value,
        rank_deficient,
        coverage,
        uncovered,
        samples: total,
        fibers,
        constant_components,
        verdict,
        reason,
    })
}

/// Covering degree of an equidimensional certified map.
pub fn covering_report(certificate: &FibrationCertificate) -> Result<CoveringReport, TischlerError> {
    if certificate.k != certificate.n {
        return Err(TischlerError::MapDimension { k: certificate.k, n: certificate.n });
    }
    if !certificate.rank_deficient.is_empty() {
        return Err(TischlerError::RankDeficient { simplices: certificate.rank_deficient.len() });
    }
    if certificate.fibers.is_empty() {
        return Err(TischlerError::NoRegularValues);
    }
    let min = certificate.fibers.iter().map(|f| f.pieces).min().unwrap_or(0);
    let max = certificate.fibers.iter().map(|f| f.pieces).max().unwrap_or(0);
    if min != max || min == 0 {
        return Err(TischlerError::InconsistentPreimages { min, max });
    }
    let n = certificate.n;
    let statement = if min == 1 {
        format!("Theta is a diffeomorphism; M is diffeomorphic to T^{n}")
    } else {
        format!("Theta is a {min}-sheeted covering; M is diffeomorphic to T^{n}")
    };
    Ok(CoveringReport { degree: min, sampled_values: certificate.fibers.len(), diffeomorphism: min == 1, statement })
}
