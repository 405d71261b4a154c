//! On-disk documents for meshes and cochains.

use serde::{Deserialize, Serialize};
use serde_json::Number;
use thiserror::Error;

use crate::mesh::{Cochain, MeshError, SimplicialComplex};

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed {what} document: {source}")]
    Json { what: &'static str, source: serde_json::Error },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("cochain value {index} is not {expected}")]
    Value { index: usize, expected: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshDocument {
    pub dimension: usize,
    pub vertices: Vec<Vec<f64>>,
    pub simplices: Vec<Vec<usize>>,
    /// Per-axis periods of the vertex coordinates, for meshes drawn in a fundamental domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<f64>>,
}

impl MeshDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        serde_json::from_str(text).map_err(|source| DocumentError::Json { what: "mesh", source })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("mesh documents serialize");
        s.push('\n');
        s
    }

    pub fn from_complex(c: &SimplicialComplex) -> Self {
        MeshDocument {
            dimension: c.dim(),
            vertices: c.coords().to_vec(),
            simplices: c.top_simplices().to_vec(),
            periods: c.periods().map(<[f64]>::to_vec),
        }
    }

    pub fn to_complex(&self) -> Result<SimplicialComplex, DocumentError> {
        Ok(SimplicialComplex::new(self.dimension, self.vertices.clone(), self.simplices.clone(), self.periods.clone())?)
    }
}

pub fn load_mesh(text: &str) -> Result<SimplicialComplex, DocumentError> {
    MeshDocument::from_json(text)?.to_complex()
}

/// Cochain values in canonical simplex order. Integers are kept as JSON integers so
/// integer cochains round-trip bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CochainDocument {
    pub degree: usize,
    pub values: Vec<Number>,
}

fn number_from_f64(v: f64) -> Number {
    const EXACT: f64 = 9_007_199_254_740_992.0;
    if v.fract() == 0.0 && v.abs() < EXACT && !(v == 0.0 && v.is_sign_negative()) {
        Number::from(v as i64)
    } else {
        Number::from_f64(v).unwrap_or_else(|| Number::from(0))
    }
}

impl CochainDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        serde_json::from_str(text).map_err(|source| DocumentError::Json { what: "cochain", source })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("cochain documents serialize");
        s.push('\n');
        s
    }

    pub fn from_f64(c: &Cochain<f64>) -> Self {
        CochainDocument { degree: c.degree(), values: c.values().iter().map(|&v| number_from_f64(v)).collect() }
    }

    pub fn from_i64(c: &Cochain<i64>) -> Self {
        CochainDocument { degree: c.degree(), values: c.values().iter().map(|&v| Number::from(v)).collect() }
    }

    pub fn to_f64(&self) -> Result<Cochain<f64>, DocumentError> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(index, n)| n.as_f64().ok_or(DocumentError::Value { index, expected: "a finite number" }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Cochain::new(self.degree, values))
    }

    pub fn to_i64(&self) -> Result<Cochain<i64>, DocumentError> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(index, n)| n.as_i64().ok_or(DocumentError::Value { index, expected: "an integer" }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Cochain::new(self.degree, values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generators::{flat_torus, octahedron};
    use proptest::prelude::*;

    #[test]
    fn mesh_round_trip() {
        let m = flat_torus(4);
        let doc = MeshDocument::from_complex(&m);
        let back = MeshDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        let c = back.to_complex().unwrap();
        assert_eq!(c.count(1), m.count(1));
        assert_eq!(c.periods(), Some(&[1.0, 1.0][..]));
        let o = MeshDocument::from_complex(&octahedron());
        assert!(!o.to_json().contains("periods"));
    }

    #[test]
    fn malformed_documents_are_errors() {
        assert!(load_mesh("{\"dimension\": 2}").is_err());
        assert!(load_mesh("{\"dimension\": 2, \"vertices\": [[0,0]], \"simplices\": [[0,0,0]]}").is_err());
        let d = CochainDocument::from_json("{\"degree\": 1, \"values\": [1, 2.5]}").unwrap();
        assert!(matches!(d.to_i64(), Err(DocumentError::Value { index: 1, .. })));
        assert_eq!(d.to_f64().unwrap().values(), &[1.0, 2.5]);
    }

    #[test]
    fn whole_floats_are_written_as_integers() {
        let d = CochainDocument::from_f64(&Cochain::new(1, vec![3.0, -0.25, 0.0]));
        assert_eq!(d.to_json(), "{\"degree\":1,\"values\":[3,-0.25,0]}\n");
    }

    proptest! {
        #[test]
        fn integer_cochains_round_trip_exactly(values in proptest::collection::vec(any::<i64>(), 0..50)) {
            let c = Cochain::new(1, values);
            let text = CochainDocument::from_i64(&c).to_json();
            prop_assert_eq!(CochainDocument::from_json(&text).unwrap().to_i64().unwrap(), c);
        }

        #[test]
        fn float_cochains_round_trip_exactly(values in proptest::collection::vec(-1e6f64..1e6, 0..50)) {
            let c = Cochain::new(1, values);
            let text = CochainDocument::from_f64(&c).to_json();
            prop_assert_eq!(CochainDocument::from_json(&text).unwrap().to_f64().unwrap(), c);
        }
    }
}
