//! Built-in meshes: the flat 2-torus grid, a Klein bottle grid and the octahedral sphere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Cochain, SimplicialComplex};

/// Flat unit 2-torus triangulated as a `res x res` grid with one diagonal per cell.
///
/// Vertex `(i, j)` has index `j * res + i` and coordinates `(i / res, j / res)`; both
/// axes have period 1. Panics if `res < 3`.
pub fn flat_torus(res: usize) -> SimplicialComplex {
    assert!(res >= 3, "torus grid needs res >= 3");
    let idx = |i: usize, j: usize| (j % res) * res + (i % res);
    let coords = grid_coords(res);
    let mut top = Vec::with_capacity(2 * res * res);
    for j in 0..res {
        for i in 0..res {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            top.push(vec![a, b, c]);
            top.push(vec![a, c, d]);
        }
    }
    SimplicialComplex::new(2, coords, top, Some(vec![1.0, 1.0])).expect("torus grid is a valid closed surface")
}

/// Klein bottle as the quotient of the plane by `(x, y) ~ (x + 1, y)` and
/// `(x, y) ~ (-x, y + 1)`, triangulated like [`flat_torus`]. Panics if `res < 3`.
pub fn klein_bottle(res: usize) -> SimplicialComplex {
    assert!(res >= 3, "Klein bottle grid needs res >= 3");
    let idx = |i: usize, j: usize| {
        let (i, j) = if j >= res { ((res - i % res) % res, j - res) } else { (i % res, j) };
        j * res + i
    };
    let coords = grid_coords(res);
    let mut top = Vec::with_capacity(2 * res * res);
    for j in 0..res {
        for i in 0..res {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            top.push(vec![a, b, c]);
            top.push(vec![a, c, d]);
        }
    }
    SimplicialComplex::new(2, coords, top, Some(vec![1.0, 1.0])).expect("Klein grid is a valid closed surface")
}

/// Boundary of the octahedron with outward orientation; a triangulated 2-sphere in R^3.
pub fn octahedron() -> SimplicialComplex {
    let coords = vec![
        vec![1.0, 0.0, 0.0],
        vec![-1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, -1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 0.0, -1.0],
    ];
    let top = vec![
        vec![0, 2, 4],
        vec![2, 1, 4],
        vec![1, 3, 4],
        vec![3, 0, 4],
        vec![2, 0, 5],
        vec![1, 2, 5],
        vec![3, 1, 5],
        vec![0, 3, 5],
    ];
    SimplicialComplex::new(2, coords, top, None).expect("octahedron is a valid closed surface")
}

/// `sum_i a_i dx_i + dF` with `F` uniform in `[-amplitude, amplitude]` per vertex.
pub fn synthetic_form(mesh: &SimplicialComplex, coefficients: &[f64], amplitude: f64, seed: u64) -> Cochain<f64> {
    let mut form = Cochain::zeros(1, mesh.count(1));
    for (axis, a) in coefficients.iter().enumerate() {
        if *a != 0.0 {
            form = form.axpy(a, &mesh.coordinate_cochain(axis));
        }
    }
    if amplitude > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Cochain::new(0, (0..mesh.vertex_count()).map(|_| rng.random_range(-amplitude..amplitude)).collect());
        form = form.add(&mesh.coboundary(&f).expect("vertex cochain matches mesh"));
    }
    form
}

fn grid_coords(res: usize) -> Vec<Vec<f64>> {
    let mut coords = Vec::with_capacity(res * res);
    for j in 0..res {
        for i in 0..res {
            coords.push(vec![i as f64 / res as f64, j as f64 / res as f64]);
        }
    }
    coords
}
