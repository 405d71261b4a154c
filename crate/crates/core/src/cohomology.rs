//! First cohomology of a triangulated closed manifold.
//!
//! A breadth-first spanning tree rooted at vertex 0 yields one fundamental cycle per
//! chord. In the gauge where cochains vanish on tree edges, a closed cochain is just
//! a vector of chord values killed by the triangle constraints, and its period over
//! a fundamental cycle is the value on that cycle's chord. The integer kernel of the
//! constraint matrix is therefore a copy of `H^1(M; Z)`, from which a basis with
//! identity period matrix is extracted.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact;
use crate::mesh::{Cochain, MeshError, SimplicialComplex};

/// Default tolerance for decomposition residuals and closedness of real input.
pub const DEFAULT_DECOMPOSITION_TOL: f64 = 1e-9;

/// Harmonic shifts are rounded to this many binary digits so smooth representatives stay exact.
const SHIFT_BITS: u32 = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CohomologyError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("cochain is not closed: coboundary residual {residual:e} exceeds {tol:e}")]
    NotClosed { residual: f64, tol: f64 },
    #[error("decomposition residual {residual:e} exceeds {tol:e}")]
    Residual { residual: f64, tol: f64 },
    #[error("basis has {found} elements but {expected} were expected")]
    BasisMismatch { found: usize, expected: usize },
    #[error("integral basis entry does not fit in 64 bits")]
    Overflow,
    #[error("harmonic shift solve failed")]
    Harmonic,
    #[error("inconsistent Betti numbers: constraint kernel {kernel} vs coboundary ranks {ranks}")]
    Inconsistent { kernel: usize, ranks: usize },
}

/// An integral 1-chain, as `(canonical edge index, coefficient)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cycle {
    pub edges: Vec<(usize, i64)>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn pair(&self, c: &Cochain<f64>) -> f64 {
        self.edges.iter().map(|&(e, k)| k as f64 * c.values()[e]).sum()
    }

    pub fn pair_exact(&self, c: &Cochain<BigRational>) -> BigRational {
        self.edges
            .iter()
            .fold(BigRational::zero(), |acc, &(e, k)| acc + &c.values()[e] * BigRational::from_integer(k.into()))
    }

    pub fn pair_int(&self, c: &Cochain<i64>) -> i64 {
        self.edges.iter().map(|&(e, k)| k * c.values()[e]).sum()
    }

    /// Boundary of the chain as a vertex vector; zero for a cycle.
    pub fn boundary(&self, complex: &SimplicialComplex) -> Vec<i64> {
        let mut b = vec![0i64; complex.vertex_count()];
        for &(e, k) in &self.edges {
            let s = &complex.edges()[e];
            b[s[1]] += k;
            b[s[0]] -= k;
        }
        b
    }

    fn combine(parts: &[(i64, &Cycle)]) -> Cycle {
        let mut acc: std::collections::BTreeMap<usize, i64> = Default::default();
        for (w, c) in parts {
            for &(e, k) in &c.edges {
                *acc.entry(e).or_default() += w * k;
            }
        }
        Cycle { edges: acc.into_iter().filter(|&(_, k)| k != 0).collect() }
    }
}

/// Spanning tree, fundamental cycles and the selected homology cycles.
#[derive(Debug, Clone, Serialize)]
pub struct CycleBasis {
    pub root: usize,
    /// `parent[v] = (parent vertex, edge index)`; `None` at the root.
    pub parent: Vec<Option<(usize, usize)>>,
    /// Vertices in breadth-first order (root first).
    pub order: Vec<usize>,
    pub tree_edge: Vec<bool>,
    /// Non-tree edges, canonical order; `fundamental[i]` closes `chords[i]`.
    pub chords: Vec<usize>,
    pub fundamental: Vec<Cycle>,
    /// `p` cycles whose classes form a basis of first homology modulo torsion.
    pub selected: Vec<Cycle>,
    /// Each selected cycle as integer weights over the fundamental cycles.
    pub selected_weights: Vec<Vec<(usize, i64)>>,
}

impl CycleBasis {
    pub fn betti(&self) -> usize {
        self.selected.len()
    }

    /// Periods of `c` over the selected cycles.
    pub fn periods(&self, c: &Cochain<f64>) -> Vec<f64> {
        self.selected.iter().map(|z| z.pair(c)).collect()
    }

    pub fn periods_exact(&self, c: &Cochain<BigRational>) -> Vec<BigRational> {
        self.selected.iter().map(|z| z.pair_exact(c)).collect()
    }

    /// Periods of a real cochain after checking it is closed within `tol`.
    pub fn periods_checked(
        &self,
        complex: &SimplicialComplex,
        c: &Cochain<f64>,
        tol: f64,
    ) -> Result<Vec<f64>, CohomologyError> {
        let (ok, residual) = complex.verify_closed(c, tol)?;
        if !ok {
            return Err(CohomologyError::NotClosed { residual, tol });
        }
        Ok(self.periods(c))
    }

    /// Integrates a 1-cochain along tree paths from the root (value 0 there).
    pub fn integrate_f64(&self, complex: &SimplicialComplex, c: &Cochain<f64>) -> Cochain<f64> {
        let mut f = vec![0.0; complex.vertex_count()];
        for &v in &self.order[1..] {
            let (u, _) = self.parent[v].unwrap();
            f[v] = f[u] + complex.edge_value(c, u, v).unwrap();
        }
        Cochain::new(0, f)
    }

    pub fn integrate_exact(&self, complex: &SimplicialComplex, c: &Cochain<BigRational>) -> Cochain<BigRational> {
        let mut f = vec![BigRational::zero(); complex.vertex_count()];
        for &v in &self.order[1..] {
            let (u, e) = self.parent[v].unwrap();
            let step = if u < v { c.values()[e].clone() } else { -c.values()[e].clone() };
            f[v] = &f[u] + step;
        }
        Cochain::new(0, f)
    }
}

/// An integral basis of `H^1` with identity period matrix over the selected cycles.
#[derive(Debug, Clone, Serialize)]
pub struct CohomologyBasis {
    pub betti: usize,
    /// Integer representatives, zero on tree edges.
    pub integral: Vec<Cochain<i64>>,
    /// Dyadic vertex potentials `h_j` minimising the norm of `integral_j + d h_j`.
    #[serde(skip)]
    pub shifts: Vec<Cochain<BigRational>>,
    /// Cohomologous representatives `integral_j + d h_j`; same periods, small edge values.
    #[serde(skip)]
    pub smooth: Vec<Cochain<BigRational>>,
    pub period_matrix: Vec<Vec<i64>>,
}

impl CohomologyBasis {
    pub fn smooth_f64(&self) -> Vec<Cochain<f64>> {
        self.smooth.iter().map(Cochain::<BigRational>::to_f64).collect()
    }

    /// `sum_j a_j * smooth_j` in floating point.
    pub fn combine(&self, coefficients: &[f64]) -> Cochain<f64> {
        let forms = self.smooth_f64();
        let mut out = Cochain::zeros(1, forms.first().map_or(0, Cochain::len));
        for (a, f) in coefficients.iter().zip(&forms) {
            out = out.axpy(a, f);
        }
        out
    }
}

/// One row of the decomposition `beta = sum_j a_j nu_j + dF`.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionRow {
    pub coefficients: Vec<f64>,
    pub potential: Cochain<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub coefficients: Vec<Vec<f64>>,
    pub potentials: Vec<Cochain<f64>>,
    pub residuals: Vec<f64>,
}

impl Decomposition {
    pub fn from_rows(rows: Vec<DecompositionRow>) -> Self {
        let mut d = Decomposition { coefficients: Vec::new(), potentials: Vec::new(), residuals: Vec::new() };
        for r in rows {
            d.coefficients.push(r.coefficients);
            d.potentials.push(r.potential);
            d.residuals.push(r.residual);
        }
        d
    }

    /// Whether the coefficient rows are pairwise distinct (distinct cohomology classes).
    pub fn rows_pairwise_distinct(&self, tol: f64) -> bool {
        let a = &self.coefficients;
        (0..a.len()).all(|i| {
            (i + 1..a.len()).all(|j| a[i].iter().zip(&a[j]).any(|(x, y)| (x - y).abs() > tol))
        })
    }
}

/// Spanning tree by breadth-first search from vertex 0, neighbours in increasing order.
fn spanning_tree(complex: &SimplicialComplex) -> (Vec<Option<(usize, usize)>>, Vec<usize>, Vec<bool>) {
    let nv = complex.vertex_count();
    let adj = complex.vertex_adjacency();
    let mut parent = vec![None; nv];
    let mut seen = vec![false; nv];
    let mut tree_edge = vec![false; complex.count(1)];
    let mut order = vec![0];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &(v, e) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some((u, e));
                tree_edge[e] = true;
                order.push(v);
                queue.push_back(v);
            }
        }
    }
    (parent, order, tree_edge)
}

fn tree_path(parent: &[Option<(usize, usize)>], depth: &[usize], from: usize, to: usize) -> Vec<(usize, i64)> {
    // Oriented edge steps from `from` to `to` through the tree.
    let mut up = Vec::new();
    let mut down = Vec::new();
    let (mut a, mut b) = (from, to);
    while a != b {
        if depth[a] >= depth[b] {
            let (p, e) = parent[a].unwrap();
            up.push((e, if a < p { 1 } else { -1 }));
            a = p;
        } else {
            let (p, e) = parent[b].unwrap();
            down.push((e, if p < b { 1 } else { -1 }));
            b = p;
        }
    }
    down.reverse();
    up.extend(down);
    up
}

struct H1Data {
    cycles: CycleBasis,
    basis: CohomologyBasis,
}

fn compute(complex: &SimplicialComplex) -> Result<H1Data, CohomologyError> {
    let (parent, order, tree_edge) = spanning_tree(complex);
    let mut depth = vec![0usize; complex.vertex_count()];
    for &v in &order[1..] {
        depth[v] = depth[parent[v].unwrap().0] + 1;
    }
    let chords: Vec<usize> = (0..complex.count(1)).filter(|&e| !tree_edge[e]).collect();
    let fundamental: Vec<Cycle> = chords
        .iter()
        .map(|&e| {
            let s = &complex.edges()[e];
            let mut edges = vec![(e, 1i64)];
            edges.extend(tree_path(&parent, &depth, s[1], s[0]));
            Cycle::combine(&[(1, &Cycle { edges })])
        })
        .collect();

    // Triangle constraints restricted to chord values.
    let chord_pos: std::collections::HashMap<usize, usize> = chords.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let m = chords.len();
    let constraints: Vec<Vec<i64>> = if complex.dim() >= 2 {
        (0..complex.count(2))
            .map(|t| {
                let mut row = vec![0i64; m];
                for &(e, s) in complex.boundary(2, t) {
                    if let Some(&i) = chord_pos.get(&e) {
                        row[i] += i64::from(s);
                    }
                }
                row
            })
            .collect()
    } else {
        Vec::new()
    };
    let kernel = exact::integer_kernel(&constraints, m); // p vectors of length m
    let p = kernel.len();

    let ranks = betti_from_coboundary_ranks(complex);
    if ranks != p {
        return Err(CohomologyError::Inconsistent { kernel: p, ranks });
    }

    // K: m x p, row i = period vector of fundamental cycle i against the kernel basis.
    let k_rows: Vec<Vec<BigInt>> = (0..m).map(|i| kernel.iter().map(|v| v[i].clone()).collect()).collect();

    // Greedy selection, shortest fundamental cycles first.
    let mut candidates: Vec<usize> = (0..m).collect();
    candidates.sort_by_key(|&i| (fundamental[i].len(), chords[i]));
    let mut chosen: Vec<usize> = Vec::new();
    let mut chosen_rows: Vec<Vec<BigRational>> = Vec::new();
    for &i in &candidates {
        if chosen.len() == p {
            break;
        }
        let row: Vec<BigRational> = k_rows[i].iter().map(|x| BigRational::from_integer(x.clone())).collect();
        chosen_rows.push(row);
        if exact::rank(&chosen_rows) == chosen_rows.len() {
            chosen.push(i);
        } else {
            chosen_rows.pop();
        }
    }

    let ks: Vec<Vec<BigInt>> = chosen.iter().map(|&i| k_rows[i].clone()).collect();
    let (periods_block, weights): (Vec<Vec<BigInt>>, Vec<Vec<(usize, i64)>>) = if p == 0 {
        (Vec::new(), Vec::new())
    } else if exact::determinant(&ks).abs().is_one() {
        (ks, chosen.iter().map(|&i| vec![(i, 1)]).collect())
    } else {
        // Selected fundamental cycles only span a finite-index sublattice: use integer
        // combinations of all fundamental cycles instead.
        let (h, combos) = exact::row_hermite(&k_rows);
        let weights = combos
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .filter(|(_, w)| !w.is_zero())
                    .map(|(i, w)| Ok::<_, CohomologyError>((i, w.to_i64().ok_or(CohomologyError::Overflow)?)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        (h, weights)
    };
    let normaliser = if p == 0 { Vec::new() } else { exact::unimodular_inverse(&periods_block).ok_or(CohomologyError::Overflow)? };
    // Basis vectors as chord values: columns of K * normaliser.
    let coeffs = exact::mul(&k_rows, &normaliser); // m x p
    let mut integral = Vec::with_capacity(p);
    for j in 0..p {
        let mut values = vec![0i64; complex.count(1)];
        for (i, &e) in chords.iter().enumerate() {
            values[e] = coeffs[i][j].to_i64().ok_or(CohomologyError::Overflow)?;
        }
        integral.push(Cochain::new(1, values));
    }

    let selected: Vec<Cycle> = weights
        .iter()
        .map(|w| Cycle::combine(&w.iter().map(|&(i, k)| (k, &fundamental[i])).collect::<Vec<_>>()))
        .collect();
    let period_matrix: Vec<Vec<i64>> =
        selected.iter().map(|z| integral.iter().map(|nu| z.pair_int(nu)).collect()).collect();
    debug_assert!(period_matrix.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, &v)| v == i64::from(i == j))));

    let shifts = harmonic_shifts(complex, &integral)?;
    let smooth = integral
        .iter()
        .zip(&shifts)
        .map(|(nu, h)| Ok(nu.to_rational().add(&complex.coboundary(h)?)))
        .collect::<Result<Vec<_>, MeshError>>()?;

    let cycles = CycleBasis {
        root: 0,
        parent,
        order,
        tree_edge,
        chords,
        fundamental,
        selected,
        selected_weights: weights,
    };
    let basis = CohomologyBasis { betti: p, integral, shifts, smooth, period_matrix };
    Ok(H1Data { cycles, basis })
}

/// `dim ker d1 - rank d0` computed with exact rational elimination.
pub fn betti_from_coboundary_ranks(complex: &SimplicialComplex) -> usize {
    let ne = complex.count(1);
    let nv = complex.vertex_count();
    let d0: Vec<Vec<i64>> = complex
        .edges()
        .iter()
        .map(|s| {
            let mut row = vec![0i64; nv];
            row[s[0]] = -1;
            row[s[1]] = 1;
            row
        })
        .collect();
    let rank_d1 = if complex.dim() >= 2 {
        let d1: Vec<Vec<i64>> = (0..complex.count(2))
            .map(|t| {
                let mut row = vec![0i64; ne];
                for &(e, s) in complex.boundary(2, t) {
                    row[e] += i64::from(s);
                }
                row
            })
            .collect();
        exact::rank_i64(&d1)
    } else {
        0
    };
    (ne - rank_d1) - exact::rank_i64(&d0)
}

/// Vertex potentials `h` (with `h(root) = 0`) minimising `|nu + dh|`, rounded to dyadics.
fn harmonic_shifts(complex: &SimplicialComplex, forms: &[Cochain<i64>]) -> Result<Vec<Cochain<BigRational>>, CohomologyError> {
    let nv = complex.vertex_count();
    if forms.is_empty() {
        return Ok(Vec::new());
    }
    let size = nv - 1;
    let mut lap = DMatrix::<f64>::zeros(size, size);
    for s in complex.edges() {
        let (a, b) = (s[0], s[1]);
        for (x, y) in [(a, a), (b, b)] {
            if x > 0 {
                lap[(x - 1, y - 1)] += 1.0;
            }
        }
        if a > 0 && b > 0 {
            lap[(a - 1, b - 1)] -= 1.0;
            lap[(b - 1, a - 1)] -= 1.0;
        }
    }
    let chol = lap.cholesky().ok_or(CohomologyError::Harmonic)?;
    let scale = BigRational::from_integer(BigInt::one() << SHIFT_BITS);
    let mut out = Vec::with_capacity(forms.len());
    for nu in forms {
        // rhs = -d0^T nu
        let mut rhs = DVector::<f64>::zeros(size);
        for (e, s) in complex.edges().iter().enumerate() {
            let v = nu.values()[e] as f64;
            if s[1] > 0 {
                rhs[s[1] - 1] -= v;
            }
            if s[0] > 0 {
                rhs[s[0] - 1] += v;
            }
        }
        let h = chol.solve(&rhs);
        let mut values = vec![BigRational::zero(); nv];
        for v in 1..nv {
            let num = (h[v - 1] * f64::from(1u32 << 16) * f64::from(1u32 << 16)).round();
            let num = BigInt::from(num as i64);
            values[v] = BigRational::from_integer(num) / &scale;
        }
        out.push(Cochain::new(0, values));
    }
    Ok(out)
}

/// Spanning tree, fundamental cycles and homology selection.
pub fn cycle_basis(complex: &SimplicialComplex) -> Result<CycleBasis, CohomologyError> {
    compute(complex).map(|d| d.cycles)
}

/// Integral basis of `H^1` normalised to identity periods over the selected cycles.
pub fn h1_basis(complex: &SimplicialComplex) -> Result<CohomologyBasis, CohomologyError> {
    compute(complex).map(|d| d.basis)
}

/// Both at once; the cycles are the ones the basis is normalised against.
pub fn homology(complex: &SimplicialComplex) -> Result<(CycleBasis, CohomologyBasis), CohomologyError> {
    compute(complex).map(|d| (d.cycles, d.basis))
}

/// Splits a closed cochain into its class over the basis and an exact remainder.
pub fn decompose(
    complex: &SimplicialComplex,
    beta: &Cochain<f64>,
    basis: &CohomologyBasis,
    cycles: &CycleBasis,
    tol: f64,
) -> Result<DecompositionRow, CohomologyError> {
    if basis.betti != cycles.betti() {
        return Err(CohomologyError::BasisMismatch { found: basis.betti, expected: cycles.betti() });
    }
    let (ok, residual) = complex.verify_closed(beta, tol)?;
    if !ok {
        return Err(CohomologyError::NotClosed { residual, tol });
    }
    let coefficients = cycles.periods(beta);
    let remainder = beta.sub(&basis.combine(&coefficients));
    let potential = cycles.integrate_f64(complex, &remainder);
    let dpot = complex.coboundary(&potential)?;
    let residual = remainder.values().iter().zip(dpot.values()).fold(0.0f64, |m, (r, d)| m.max((r - d).abs()));
    if residual > tol {
        return Err(CohomologyError::Residual { residual, tol });
    }
    Ok(DecompositionRow { coefficients, potential, residual })
}
