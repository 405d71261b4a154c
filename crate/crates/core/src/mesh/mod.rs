//! Oriented simplicial complexes of closed manifolds and the cochains that live on them.
//!
//! Every p-simplex is stored as a sorted vertex tuple and the p-skeleton is kept in
//! lexicographic order; this canonical ordering is what cochain value lists refer to.
//! Top simplices additionally remember the orientation they were given in.

mod cochain;
pub mod generators;
mod independence;

pub use cochain::{Cochain, Scalar};
pub use independence::{IndependenceReport, SimplexComponents};
pub(crate) use independence::singular_values;

use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;
use thiserror::Error;

/// Default tolerance on the smallest singular value used for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh dimension must be at least 1")]
    ZeroDimension,
    #[error("mesh has no top simplices")]
    Empty,
    #[error("simplex {index} has {found} vertices, expected {expected}")]
    Arity { index: usize, found: usize, expected: usize },
    #[error("simplex {index} references vertex {vertex}, but only {count} vertices exist")]
    VertexOutOfRange { index: usize, vertex: usize, count: usize },
    #[error("simplex {index} repeats a vertex")]
    RepeatedVertex { index: usize },
    #[error("vertex {vertex} has {found} coordinates, expected at least {expected}")]
    CoordinateDimension { vertex: usize, found: usize, expected: usize },
    #[error("periods list has {found} entries but vertices have {expected} coordinates")]
    PeriodsLength { found: usize, expected: usize },
    #[error("top simplex {index} is geometrically degenerate")]
    Degenerate { index: usize },
    #[error("face {face:?} is shared by {count} top simplices, a closed manifold needs exactly 2")]
    NotClosedManifold { face: Vec<usize>, count: usize },
    #[error("top simplices are orientable but not coherently oriented (face {face:?})")]
    IncoherentOrientation { face: Vec<usize> },
    #[error("the 1-skeleton is disconnected (vertex {vertex} unreachable from vertex 0)")]
    Disconnected { vertex: usize },
    #[error("vertex {vertex} belongs to no simplex")]
    IsolatedVertex { vertex: usize },
    #[error("cochain of degree {degree} exceeds mesh dimension {dim}")]
    DegreeTooHigh { degree: usize, dim: usize },
    #[error("cochain of degree {degree} has {found} values, expected {expected}")]
    CochainLength { degree: usize, found: usize, expected: usize },
    #[error("expected a cochain of degree {expected}, got degree {found}")]
    WrongDegree { expected: usize, found: usize },
    #[error("{0:?} is not a top simplex of this mesh")]
    UnknownSimplex(Vec<usize>),
    #[error("{count} forms requested but the mesh dimension is {dim}")]
    TooManyForms { count: usize, dim: usize },
    #[error("no forms given")]
    NoForms,
}

/// A triangulated closed manifold.
#[derive(Debug, Clone)]
pub struct SimplicialComplex {
    dim: usize,
    coords: Vec<Vec<f64>>,
    periods: Option<Vec<f64>>,
    /// Top simplices in the orientation they were supplied with.
    top: Vec<Vec<usize>>,
    /// `skeleton[p]` holds the sorted p-simplices in lexicographic order.
    skeleton: Vec<Vec<Vec<usize>>>,
    lookup: Vec<HashMap<Vec<usize>, usize>>,
    /// `faces[p][i]` lists `(face index, sign)` of the boundary of p-simplex `i`, p >= 1.
    faces: Vec<Vec<Vec<(usize, i8)>>>,
    /// Position of each supplied top simplex in `skeleton[dim]`.
    top_index: Vec<usize>,
    orientable: bool,
}

/// Sign of the permutation sorting `v`.
fn permutation_sign(v: &[usize]) -> i8 {
    let mut sign = 1i8;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] > v[j] {
                sign = -sign;
            }
        }
    }
    sign
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

fn subsets(v: &[usize], size: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(v: &[usize], size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..v.len() {
            cur.push(v[i]);
            rec(v, size, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(v, size, 0, &mut Vec::with_capacity(size), out);
}

impl SimplicialComplex {
    /// Builds and validates a complex. `periods`, when given, declares the vertex
    /// coordinates periodic per axis so displacements use the minimum image.
    pub fn new(
        dim: usize,
        coords: Vec<Vec<f64>>,
        top: Vec<Vec<usize>>,
        periods: Option<Vec<f64>>,
    ) -> Result<Self, MeshError> {
        if dim == 0 {
            return Err(MeshError::ZeroDimension);
        }
        if top.is_empty() {
            return Err(MeshError::Empty);
        }
        for (vertex, c) in coords.iter().enumerate() {
            if c.len() < dim {
                return Err(MeshError::CoordinateDimension { vertex, found: c.len(), expected: dim });
            }
        }
        if let Some(p) = &periods {
            let d = coords.first().map_or(0, Vec::len);
            if p.len() != d {
                return Err(MeshError::PeriodsLength { found: p.len(), expected: d });
            }
        }
        let nv = coords.len();
        for (index, s) in top.iter().enumerate() {
            if s.len() != dim + 1 {
                return Err(MeshError::Arity { index, found: s.len(), expected: dim + 1 });
            }
            if let Some(&vertex) = s.iter().find(|&&v| v >= nv) {
                return Err(MeshError::VertexOutOfRange { index, vertex, count: nv });
            }
            let srt = sorted(s);
            if srt.windows(2).any(|w| w[0] == w[1]) {
                return Err(MeshError::RepeatedVertex { index });
            }
        }

        let mut skeleton: Vec<Vec<Vec<usize>>> = vec![Vec::new(); dim + 1];
        skeleton[0] = (0..nv).map(|v| vec![v]).collect();
        for p in 1..=dim {
            let mut all = Vec::new();
            for s in &top {
                subsets(&sorted(s), p + 1, &mut all);
            }
            all.sort_unstable();
            all.dedup();
            skeleton[p] = all;
        }
        let lookup: Vec<HashMap<Vec<usize>, usize>> = skeleton
            .iter()
            .map(|list| list.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
            .collect();
        let mut faces = vec![Vec::new(); dim + 1];
        for p in 1..=dim {
            faces[p] = skeleton[p]
                .iter()
                .map(|s| {
                    (0..s.len())
                        .map(|i| {
                            let mut f = s.clone();
                            f.remove(i);
                            let sign = if i % 2 == 0 { 1 } else { -1 };
                            (lookup[p - 1][&f], sign)
                        })
                        .collect()
                })
                .collect();
        }
        let top_index = top.iter().map(|s| lookup[dim][&sorted(s)]).collect();

        let mut complex = SimplicialComplex {
            dim,
            coords,
            periods,
            top,
            skeleton,
            lookup,
            faces,
            top_index,
            orientable: true,
        };
        complex.validate()?;
        Ok(complex)
    }

    fn validate(&mut self) -> Result<(), MeshError> {
        let n = self.dim;
        let nv = self.coords.len();
        let mut used = vec![false; nv];
        for s in &self.top {
            for &v in s {
                used[v] = true;
            }
        }
        if let Some(vertex) = used.iter().position(|u| !u) {
            return Err(MeshError::IsolatedVertex { vertex });
        }

        for (index, s) in self.top.iter().enumerate() {
            let rows: Vec<Vec<f64>> = (1..=n).map(|i| self.displacement(s[0], s[i])).collect();
            let d = rows[0].len();
            let m = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
            let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let sv = m.singular_values();
            let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
            if scale == 0.0 || smin <= 1e-12 * scale {
                return Err(MeshError::Degenerate { index });
            }
        }

        // (n-1)-faces: incidence count and induced orientation.
        let mut incidences: HashMap<Vec<usize>, Vec<(usize, i8)>> = HashMap::new();
        for (ti, s) in self.top.iter().enumerate() {
            for i in 0..=n {
                let mut f = s.clone();
                f.remove(i);
                let base = if i % 2 == 0 { 1 } else { -1 };
                let sign = base * permutation_sign(&f);
                incidences.entry(sorted(&f)).or_default().push((ti, sign));
            }
        }
        let mut keys: Vec<_> = incidences.keys().cloned().collect();
        keys.sort_unstable();
        for face in &keys {
            let count = incidences[face].len();
            if count != 2 {
                return Err(MeshError::NotClosedManifold { face: face.clone(), count });
            }
        }
        let incoherent = keys.iter().find(|f| {
            let inc = &incidences[*f];
            inc[0].1 == inc[1].1
        });
        if let Some(face) = incoherent {
            // Search for any coherent reorientation.
            let nt = self.top.len();
            let mut flip: Vec<Option<i8>> = vec![None; nt];
            let mut adj: Vec<Vec<(usize, i8)>> = vec![Vec::new(); nt];
            for f in &keys {
                let inc = &incidences[f];
                // flips must satisfy flip_a * s_a = -flip_b * s_b
                let rel = -inc[0].1 * inc[1].1;
                adj[inc[0].0].push((inc[1].0, rel));
                adj[inc[1].0].push((inc[0].0, rel));
            }
            let mut orientable = true;
            for start in 0..nt {
                if flip[start].is_some() {
                    continue;
                }
                flip[start] = Some(1);
                let mut queue = VecDeque::from([start]);
                while let Some(a) = queue.pop_front() {
                    let fa = flip[a].unwrap();
                    for &(b, rel) in &adj[a] {
                        let want = fa * rel;
                        match flip[b] {
                            None => {
                                flip[b] = Some(want);
                                queue.push_back(b);
                            }
                            Some(fb) if fb != want => orientable = false,
                            _ => {}
                        }
                    }
                }
            }
            if orientable {
                return Err(MeshError::IncoherentOrientation { face: face.clone() });
            }
            self.orientable = false;
        }

        // Connectivity of the 1-skeleton.
        let adjacency = self.vertex_adjacency();
        let mut seen = vec![false; nv];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if let Some(vertex) = seen.iter().position(|s| !s) {
            return Err(MeshError::Disconnected { vertex });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn periods(&self) -> Option<&[f64]> {
        self.periods.as_deref()
    }

    /// Top simplices in their supplied orientation.
    pub fn top_simplices(&self) -> &[Vec<usize>] {
        &self.top
    }

    /// Sorted p-simplices in canonical (lexicographic) order.
    pub fn simplices(&self, p: usize) -> &[Vec<usize>] {
        &self.skeleton[p]
    }

    pub fn count(&self, p: usize) -> usize {
        self.skeleton.get(p).map_or(0, Vec::len)
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.skeleton[1]
    }

    pub fn is_orientable(&self) -> bool {
        self.orientable
    }

    /// Index of a simplex given by any vertex ordering.
    pub fn simplex_index(&self, vertices: &[usize]) -> Option<usize> {
        let p = vertices.len().checked_sub(1)?;
        self.lookup.get(p)?.get(&sorted(vertices)).copied()
    }

    /// Canonical index of the oriented edge `(u, v)` and the sign relating the
    /// orientation `u -> v` to the canonical low-to-high one.
    pub fn edge(&self, u: usize, v: usize) -> Option<(usize, i8)> {
        let (a, b, s) = if u < v { (u, v, 1) } else { (v, u, -1) };
        self.lookup[1].get(&vec![a, b]).map(|&i| (i, s))
    }

    /// Boundary faces of the canonical p-simplex `index` with coboundary signs.
    pub fn boundary(&self, p: usize, index: usize) -> &[(usize, i8)] {
        &self.faces[p][index]
    }

    /// For every vertex, its neighbours with the connecting edge index, sorted by neighbour.
    pub fn vertex_adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.coords.len()];
        for (e, s) in self.skeleton[1].iter().enumerate() {
            adj[s[0]].push((s[1], e));
            adj[s[1]].push((s[0], e));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Position of the supplied top simplex `t` in the canonical top skeleton.
    pub fn top_canonical_index(&self, t: usize) -> usize {
        self.top_index[t]
    }

    /// Canonical top simplices sharing the (n-1)-face with canonical index `face`.
    pub fn cofaces_of_facets(&self) -> Vec<Vec<usize>> {
        let n = self.dim;
        let mut out = vec![Vec::new(); self.count(n - 1)];
        for (t, fs) in self.faces[n].iter().enumerate() {
            for &(f, _) in fs {
                out[f].push(t);
            }
        }
        out
    }

    /// Vector from vertex `u` to vertex `v`, minimum image along periodic axes.
    pub fn displacement(&self, u: usize, v: usize) -> Vec<f64> {
        let a = &self.coords[u];
        let b = &self.coords[v];
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(axis, (x, y))| {
                let mut d = y - x;
                if let Some(p) = self.periods.as_ref().map(|p| p[axis]).filter(|&p| p > 0.0) {
                    d -= p * (d / p).round();
                }
                d
            })
            .collect()
    }

    /// Coboundary `d: C^p -> C^{p+1}`.
    pub fn coboundary<T: Scalar>(&self, c: &Cochain<T>) -> Result<Cochain<T>, MeshError> {
        self.check_cochain(c)?;
        let p = c.degree();
        if p >= self.dim {
            return Err(MeshError::DegreeTooHigh { degree: p + 1, dim: self.dim });
        }
        let values = self.faces[p + 1]
            .iter()
            .map(|fs| {
                fs.iter().fold(T::zero(), |acc, &(f, s)| {
                    let v = c.values()[f].clone();
                    if s > 0 {
                        acc + v
                    } else {
                        acc - v
                    }
                })
            })
            .collect();
        Ok(Cochain::new(p + 1, values))
    }

    pub fn check_cochain<T>(&self, c: &Cochain<T>) -> Result<(), MeshError> {
        let p = c.degree();
        if p > self.dim {
            return Err(MeshError::DegreeTooHigh { degree: p, dim: self.dim });
        }
        let expected = self.count(p);
        if c.len() != expected {
            return Err(MeshError::CochainLength { degree: p, found: c.len(), expected });
        }
        Ok(())
    }

    /// Checks `dc = 0` on every 2-simplex; returns the verdict and the largest residual.
    pub fn verify_closed(&self, c: &Cochain<f64>, tol: f64) -> Result<(bool, f64), MeshError> {
        if c.degree() != 1 {
            return Err(MeshError::WrongDegree { expected: 1, found: c.degree() });
        }
        self.check_cochain(c)?;
        if self.dim < 2 {
            return Ok((true, 0.0));
        }
        let dc = self.coboundary(c)?;
        let residual = dc.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok((residual <= tol, residual))
    }

    /// The coordinate 1-cochain `dx_axis`: each edge carries its (minimum-image) displacement.
    pub fn coordinate_cochain(&self, axis: usize) -> Cochain<f64> {
        let values = self.skeleton[1].iter().map(|e| self.displacement(e[0], e[1])[axis]).collect();
        Cochain::new(1, values)
    }

    /// Value of a 1-cochain on the oriented edge `u -> v`.
    pub fn edge_value(&self, c: &Cochain<f64>, u: usize, v: usize) -> Option<f64> {
        self.edge(u, v).map(|(e, s)| f64::from(s) * c.values()[e])
    }

    /// Components of the affine representative of `c` on the simplex `vertices`,
    /// in the basis dual to the edge vectors `(v0, vi)`: entry `i-1` is `c(v0, vi)`.
    pub fn simplexwise_components(&self, c: &Cochain<f64>, vertices: &[usize]) -> Result<Vec<f64>, MeshError> {
        if c.degree() != 1 {
            return Err(MeshError::WrongDegree { expected: 1, found: c.degree() });
        }
        self.check_cochain(c)?;
        self.top_position(vertices)?;
        let v0 = vertices[0];
        Ok(vertices[1..].iter().map(|&v| self.edge_value(c, v0, v).unwrap()).collect())
    }

    /// The same covector expressed in ambient Cartesian coordinates (minimum-norm
    /// solution when the ambient dimension exceeds the simplex dimension).
    pub fn cartesian_components(&self, c: &Cochain<f64>, vertices: &[usize]) -> Result<Vec<f64>, MeshError> {
        let comps = self.simplexwise_components(c, vertices)?;
        let n = self.dim;
        let rows: Vec<Vec<f64>> = vertices[1..].iter().map(|&v| self.displacement(vertices[0], v)).collect();
        let d = rows[0].len();
        let e = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
        let gram = &e * e.transpose();
        let lu = gram.lu();
        let rhs = nalgebra::DVector::from_vec(comps);
        let index = self.top_position(vertices)?;
        let y = lu.solve(&rhs).ok_or(MeshError::Degenerate { index })?;
        let xi = e.transpose() * y;
        Ok(xi.iter().copied().collect())
    }

    fn top_position(&self, vertices: &[usize]) -> Result<usize, MeshError> {
        if vertices.len() != self.dim + 1 {
            return Err(MeshError::UnknownSimplex(vertices.to_vec()));
        }
        self.lookup[self.dim].get(&sorted(vertices)).copied().ok_or_else(|| MeshError::UnknownSimplex(vertices.to_vec()))
    }
}
