//! Text formatting shared by every exporter.

use ndarray::Array2;
use serde::ser::{SerializeSeq, Serializer};

/// Formats a float with 17 significant digits, which round-trips any `f64`.
/// Infinities are written as `inf` / `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Serializes a matrix as a JSON-style list of rows.
pub fn serialize_rows<S: Serializer>(m: &Array2<f64>, serializer: S) -> Result<S::Ok, S::Error> {
    let mut seq = serializer.serialize_seq(Some(m.nrows()))?;
    for row in m.rows() {
        seq.serialize_element(&row.to_vec())?;
    }
    seq.end()
}
