//! Acceptance criteria 1-11. Prints one line per criterion and exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use torifold::catalog;
use torifold::cohomology::{betti_from_coboundary_ranks, homology};
use torifold::expr::parse_expression;
use torifold::geomech::SystemDefinition;
use torifold::io::{load_mesh, CochainDocument};
use torifold::mesh::generators::{flat_torus, klein_bottle, octahedron};
use torifold::mesh::{Cochain, SimplicialComplex};
use torifold::tischler::{fibrate, FibrateOptions, FibrateVerdict};
use torifold::torus::{fiber_verdict, FiberOptions};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn system(name: &str) -> SystemDefinition {
    SystemDefinition::from_json(catalog::system(name).unwrap()).unwrap()
}

fn form(name: &str) -> Cochain<f64> {
    CochainDocument::from_json(catalog::form(name).unwrap()).unwrap().to_f64().unwrap()
}

fn bundled_meshes() -> Vec<(&'static str, SimplicialComplex)> {
    catalog::MESHES.iter().map(|(n, t)| (*n, load_mesh(t).unwrap())).collect()
}

fn exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    for (name, mesh) in bundled_meshes() {
        for _ in 0..100 {
            let f = Cochain::new(0, (0..mesh.vertex_count()).map(|_| rng.random_range(-1_000_000i64..=1_000_000)).collect());
            let ddf = mesh.coboundary(&mesh.coboundary(&f).unwrap()).unwrap();
            ensure(ddf.values().iter().all(|&v| v == 0), || format!("{name}: d(d f) is not zero"))?;
            checked += 1;
        }
    }
    Ok(format!("d(d f) = 0 for {checked} integer cochains"))
}

fn betti_numbers() -> Outcome {
    let cases = [("torus 8x8", flat_torus(8), 2), ("octahedron", octahedron(), 0), ("Klein bottle", klein_bottle(8), 1)];
    let mut found = Vec::new();
    for (name, mesh, expected) in cases {
        let (cycles, basis) = homology(&mesh).map_err(|e| format!("{name}: {e}"))?;
        let ranks = betti_from_coboundary_ranks(&mesh);
        ensure(basis.betti == expected && cycles.betti() == expected && ranks == expected, || {
            format!("{name}: basis {} cycles {} ranks {ranks}, expected {expected}", basis.betti, cycles.betti())
        })?;
        found.push(format!("{name} p={expected}"));
    }
    Ok(found.join(", "))
}

fn tischler_pipeline() -> Outcome {
    let mesh = flat_torus(8);
    let out = fibrate(&mesh, &[form("torus8_beta1"), form("torus8_dy")], &FibrateOptions::default()).map_err(|e| e.to_string())?;
    let c = out.coefficients.as_ref().ok_or_else(|| format!("rationalize failed: {:?}", out.reason))?;
    let map = out.map.as_ref().ok_or_else(|| format!("no map: {:?}", out.reason))?;
    let cert = out.certificate.as_ref().ok_or_else(|| format!("no certificate: {:?}", out.reason))?;
    ensure(out.verdict.is_positive(), || format!("verdict {}: {:?}", out.verdict.as_str(), out.reason))?;
    ensure(cert.rank_deficient.is_empty() && cert.min_singular_value > 0.0, || {
        format!("{} rank-deficient triangles", cert.rank_deficient.len())
    })?;
    ensure(map.pullback_periods == c.integers, || format!("pullback periods {:?} != k {:?}", map.pullback_periods, c.integers))?;
    ensure(cert.coverage == 1.0 && cert.options.bins == 16, || format!("coverage {} at {} bins", cert.coverage, cert.options.bins))?;
    let k: Vec<Vec<String>> = c.integers.iter().map(|r| r.iter().map(BigInt::to_string).collect()).collect();
    Ok(format!("k = {k:?}, rank 2 on {} triangles, coverage 1.0", mesh.count(2)))
}

fn covering_case() -> Outcome {
    let mesh = flat_torus(8);
    let out = fibrate(&mesh, &[form("torus8_2dx"), form("torus8_dy")], &FibrateOptions::default()).map_err(|e| e.to_string())?;
    let c = out.coefficients.as_ref().ok_or("no coefficients")?;
    let expected = vec![vec![BigInt::from(2), BigInt::from(0)], vec![BigInt::from(0), BigInt::from(1)]];
    ensure(c.integers == expected, || format!("k = {:?}", c.integers))?;
    ensure(out.verdict == FibrateVerdict::Covering, || format!("verdict {}: {:?}", out.verdict.as_str(), out.reason))?;
    let cov = out.covering.as_ref().ok_or("no covering report")?;
    let cert = out.certificate.as_ref().ok_or("no certificate")?;
    ensure(cov.degree == 2, || format!("degree {}", cov.degree))?;
    ensure(cert.fibers.iter().all(|f| f.pieces == 2), || "preimage count is not constant".into())?;
    ensure(cov.sampled_values >= 50, || format!("only {} regular values", cov.sampled_values))?;
    Ok(format!("degree 2 over {} regular values", cov.sampled_values))
}

fn negative_control() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_torifold"))
        .args(["fibrate", "--mesh", "builtin:klein8", "--forms", "builtin:klein8_dy", "builtin:klein8_dy_exact"])
        .output()
        .map_err(|e| e.to_string())?;
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    ensure(out.status.code() == Some(1), || format!("exit code {:?}", out.status.code()))?;
    ensure(report["result"]["betti"] == 1, || format!("betti {}", report["result"]["betti"]))?;
    ensure(report["result"]["failed_stage"] == "cohomology", || format!("failed at {}", report["result"]["failed_stage"]))?;
    Ok(format!("exit 1, verdict {}", report["verdict"]))
}

fn jacobi() -> Outcome {
    let mut parts = Vec::new();
    for (name, verdict) in [("oscillator", "commutative Liouville"), ("so3", "non-commutative rank 1")] {
        let sys = system(name);
        let r = sys.jacobi_residual(&sys.sample_points(100, 0)).map_err(|e| e.to_string())?;
        ensure(r < 1e-12, || format!("{name}: residual {r:e}"))?;
        let v = sys.classify(1000, 0);
        ensure(v.verdict == verdict, || format!("{name}: verdict {}", v.verdict))?;
        parts.push(format!("{name} {r:.1e}"));
    }
    let sys = system("broken_bivector");
    let r = sys.jacobi_residual(&sys.sample_points(100, 0)).map_err(|e| e.to_string())?;
    ensure(r > 0.1, || format!("broken bivector: residual {r:e}"))?;
    let v = sys.classify(1000, 0);
    ensure(v.verdict == "not integrable: Jacobi identity fails", || format!("broken bivector: verdict {}", v.verdict))?;
    parts.push(format!("broken {r:.3}"));
    Ok(parts.join(", "))
}

fn lattice_error(basis: &[Vec<f64>], expected: &[Vec<f64>]) -> f64 {
    if basis.len() != expected.len() {
        return f64::INFINITY;
    }
    basis
        .iter()
        .zip(expected)
        .flat_map(|(b, e)| b.iter().zip(e).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn liouville_witness() -> Outcome {
    let sys = system("oscillator");
    let v = fiber_verdict(&sys, &[0.5, 0.5], &[vec![1.1, 0.9, 0.0, 0.0]], &FiberOptions::default());
    let inv = v.involution_residual.unwrap_or(f64::INFINITY);
    let coframe = v.coframe.as_ref().map_or(f64::INFINITY, |c| c.pairing_residual);
    let comm = v.commutation_residual.unwrap_or(f64::INFINITY);
    ensure(inv < 1e-12, || format!("involution residual {inv:e}"))?;
    ensure(coframe < 1e-10, || format!("coframe residual {coframe:e}"))?;
    ensure(comm < 1e-7, || format!("commutation residual {comm:e}"))?;
    let l = v.lattice.as_ref().ok_or_else(|| format!("no lattice: {:?}", v.reason))?;
    let err = lattice_error(&l.basis, &[vec![2.0 * PI, 0.0], vec![0.0, 2.0 * PI]]);
    ensure(err < 1e-6, || format!("lattice {:?} off by {err:e}", l.basis))?;
    ensure(v.verdict == "torus T^2", || v.verdict.clone())?;
    Ok(format!("lattice error {err:.1e}, commutation {comm:.1e}, coframe {coframe:.1e}"))
}

fn noncommutative_witness() -> Outcome {
    let sys = system("so3");
    let v = fiber_verdict(&sys, &[1.0, 5.0], &[vec![2.0, 0.0, 1.0]], &FiberOptions::default());
    ensure(v.classification.verdict == "non-commutative rank 1", || v.classification.verdict.clone())?;
    let l = v.lattice.as_ref().ok_or_else(|| format!("no lattice: {:?}", v.reason))?;
    let err = lattice_error(&l.basis, &[vec![2.0 * PI]]);
    ensure(err < 1e-6, || format!("period {:?} off by {err:e}", l.basis))?;
    ensure(v.verdict == "torus T^1", || v.verdict.clone())?;
    Ok(format!("period error {err:.1e}"))
}

fn anisotropic_lattice() -> Outcome {
    let sys = system("anisotropic");
    let v = fiber_verdict(&sys, &[0.5, 0.5], &[vec![1.1, 0.9, 0.0, 0.5]], &FiberOptions::default());
    let l = v.lattice.as_ref().ok_or_else(|| format!("no lattice: {:?}", v.reason))?;
    let err = lattice_error(&l.basis, &[vec![2.0 * PI, 0.0], vec![0.0, 2.0 * PI / 2f64.sqrt()]]);
    ensure(err < 1e-6, || format!("lattice {:?} off by {err:e}", l.basis))?;
    ensure(v.verdict == "torus T^2", || v.verdict.clone())?;
    Ok(format!("lattice error {err:.1e}"))
}

fn relative_gradient_error(f: &torifold::expr::CompiledExpr, x: &[f64]) -> Result<f64, String> {
    const H: f64 = 1e-5;
    let (_, ad) = f.eval_with_gradient(x).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let mut up = x.to_vec();
        let mut down = x.to_vec();
        up[i] += H;
        down[i] -= H;
        let fd = (f.eval(&up).map_err(|e| e.to_string())? - f.eval(&down).map_err(|e| e.to_string())?) / (2.0 * H);
        worst = worst.max((fd - ad[i]).abs());
    }
    let scale = ad.iter().fold(1.0f64, |m, g| m.max(g.abs()));
    Ok(worst / scale)
}

fn differentiation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let set = catalog::expressions();
    for text in &set.expressions {
        let f = parse_expression(text).map_err(|e| e.to_string())?.compile(set.dimension).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let x: Vec<f64> = set.bounds.iter().map(|[lo, hi]| rng.random_range(*lo..*hi)).collect();
            let e = relative_gradient_error(&f, &x)?;
            ensure(e < 1e-6, || format!("{text} at {x:?}: relative error {e:e}"))?;
            worst = worst.max(e);
        }
        count += 1;
    }
    for (name, _) in catalog::SYSTEMS {
        let sys = system(name);
        let points = sys.sample_points(100, 10);
        for f in sys.expressions() {
            for x in &points {
                let e = relative_gradient_error(f, x)?;
                ensure(e < 1e-6, || format!("{name}: {} at {x:?}: relative error {e:e}", f.source()))?;
                worst = worst.max(e);
            }
            count += 1;
        }
    }
    Ok(format!("{count} expressions, worst relative error {worst:.1e}"))
}

fn determinism() -> Outcome {
    let scenarios = catalog::scenarios();
    for s in &scenarios {
        let run = || Command::new(env!("CARGO_BIN_EXE_torifold")).args(&s.args).output().map_err(|e| e.to_string());
        let (a, b) = (run()?, run()?);
        ensure(!a.stdout.is_empty() && a.stdout == b.stdout, || format!("{}: reports differ", s.name))?;
    }
    Ok(format!("{} scenarios byte-identical", scenarios.len()))
}

fn main() {
    let criteria: [(&str, Option<u64>, fn() -> Outcome); 11] = [
        ("exactness", Some(1), exactness),
        ("Betti numbers", Some(5), betti_numbers),
        ("torus-valued map", Some(10), tischler_pipeline),
        ("covering case", Some(10), covering_case),
        ("negative control", Some(5), negative_control),
        ("Jacobi identity", Some(2), jacobi),
        ("Liouville torus", Some(30), liouville_witness),
        ("non-commutative torus", Some(15), noncommutative_witness),
        ("anisotropic lattice", Some(30), anisotropic_lattice),
        ("differentiation", Some(2), differentiation),
        ("determinism", None, determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if budget.is_some_and(|b| elapsed > Duration::from_secs(b)) => {
                Err(format!("took longer than {} s", budget.unwrap()))
            }
            o => o,
        };
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        failed += usize::from(outcome.is_err());
        let limit = budget.map_or_else(|| "no limit".to_string(), |b| format!("limit {b} s"));
        println!("criterion {:>2} {status} {name} ({:.2} s, {limit}): {detail}", i + 1, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
