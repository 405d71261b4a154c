//! Bundled example data, addressable from the command line as `builtin:NAME`.

use serde::Deserialize;

pub const MESHES: &[(&str, &str)] = &[
    ("torus8", include_str!("../data/meshes/torus8.json")),
    ("klein8", include_str!("../data/meshes/klein8.json")),
    ("octahedron", include_str!("../data/meshes/octahedron.json")),
];

pub const SYSTEMS: &[(&str, &str)] = &[
    ("oscillator", include_str!("../data/systems/oscillator.json")),
    ("anisotropic", include_str!("../data/systems/anisotropic.json")),
    ("so3", include_str!("../data/systems/so3.json")),
    ("broken_bivector", include_str!("../data/systems/broken_bivector.json")),
    ("canonical_pair", include_str!("../data/systems/canonical_pair.json")),
    ("shear_pair", include_str!("../data/systems/shear_pair.json")),
    ("dependent", include_str!("../data/systems/dependent.json")),
];

pub const FORMS: &[(&str, &str)] = &[
    ("torus8_dx", include_str!("../data/forms/torus8_dx.json")),
    ("torus8_dy", include_str!("../data/forms/torus8_dy.json")),
    ("torus8_2dx", include_str!("../data/forms/torus8_2dx.json")),
    ("torus8_beta1", include_str!("../data/forms/torus8_beta1.json")),
    ("klein8_dy", include_str!("../data/forms/klein8_dy.json")),
    ("klein8_dy_exact", include_str!("../data/forms/klein8_dy_exact.json")),
];

const EXPRESSIONS: &str = include_str!("../data/expressions.json");
const SCENARIOS: &str = include_str!("../data/scenarios.json");

fn lookup(table: &[(&str, &'static str)], name: &str) -> Option<&'static str> {
    table.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Looks up `name` among meshes, systems and forms, in that order.
pub fn builtin(name: &str) -> Option<&'static str> {
    lookup(MESHES, name).or_else(|| lookup(SYSTEMS, name)).or_else(|| lookup(FORMS, name))
}

pub fn mesh(name: &str) -> Option<&'static str> {
    lookup(MESHES, name)
}

pub fn system(name: &str) -> Option<&'static str> {
    lookup(SYSTEMS, name)
}

pub fn form(name: &str) -> Option<&'static str> {
    lookup(FORMS, name)
}

/// Extra expressions for derivative checks, sampled in `bounds`.
#[derive(Debug, Clone, Deserialize)]
pub struct ExpressionSet {
    pub dimension: usize,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub expressions: Vec<String>,
}

pub fn expressions() -> ExpressionSet {
    serde_json::from_str(EXPRESSIONS).expect("bundled expression set is valid")
}

/// A command line run against bundled inputs.
#[derive(Debug, Clone, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub args: Vec<String>,
    pub exit_code: i32,
    pub verdict: String,
}

pub fn scenarios() -> Vec<Scenario> {
    serde_json::from_str(SCENARIOS).expect("bundled scenarios are valid")
}
