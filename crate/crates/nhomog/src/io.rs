//! JSON input parsing and output encoding. Complex numbers are `[re, im]`
//! pairs (a bare number is read as real); matrices are arrays of rows.

use nhomog_core::matrix::check_finite;
use nhomog_core::{c64, CMatrix, MatTuple, C64};
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at {field}: {message}")]
    Schema { field: String, message: String },
}

fn schema(field: &str, message: impl Into<String>) -> InputError {
    InputError::Schema { field: field.to_string(), message: message.into() }
}

pub fn parse_document(text: &str) -> Result<Value, InputError> {
    serde_json::from_str(text).map_err(|e| InputError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn read_document(path: &std::path::Path) -> Result<Value, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_document(&text)
}

pub fn field<'a>(doc: &'a Value, name: &str) -> Result<&'a Value, InputError> {
    doc.get(name).ok_or_else(|| schema(name, "missing field"))
}

pub fn usize_field(doc: &Value, name: &str) -> Result<Option<usize>, InputError> {
    match doc.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|x| Some(x as usize))
            .ok_or_else(|| schema(name, "expected a non-negative integer")),
    }
}

fn number(v: &Value, path: &str) -> Result<f64, InputError> {
    let x = v.as_f64().ok_or_else(|| schema(path, format!("expected a number, found {v}")))?;
    if !x.is_finite() {
        return Err(schema(path, "non-finite number"));
    }
    Ok(x)
}

pub fn complex(v: &Value, path: &str) -> Result<C64, InputError> {
    match v {
        Value::Number(_) => Ok(c64(number(v, path)?, 0.0)),
        Value::Array(pair) if pair.len() == 2 => {
            Ok(c64(number(&pair[0], &format!("{path}[0]"))?, number(&pair[1], &format!("{path}[1]"))?))
        }
        _ => Err(schema(path, format!("expected [re, im], found {v}"))),
    }
}

pub fn matrix(v: &Value, path: &str) -> Result<CMatrix, InputError> {
    let rows = v.as_array().ok_or_else(|| schema(path, "expected an array of rows"))?;
    if rows.is_empty() {
        return Err(schema(path, "matrix has no rows"));
    }
    let mut entries: Vec<Vec<C64>> = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let rpath = format!("{path}[{i}]");
        let row = row.as_array().ok_or_else(|| schema(&rpath, "expected an array of entries"))?;
        let parsed = row
            .iter()
            .enumerate()
            .map(|(j, z)| complex(z, &format!("{rpath}[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = entries.first() {
            if parsed.len() != first.len() {
                return Err(schema(&rpath, format!("ragged row: {} entries, expected {}", parsed.len(), first.len())));
            }
        }
        entries.push(parsed);
    }
    if entries[0].is_empty() {
        return Err(schema(path, "matrix has no columns"));
    }
    let m = CMatrix::from_fn(entries.len(), entries[0].len(), |i, j| entries[i][j]);
    check_finite(&m).map_err(|e| schema(path, e.to_string()))?;
    Ok(m)
}

pub fn matrices(v: &Value, path: &str) -> Result<Vec<CMatrix>, InputError> {
    let items = v.as_array().ok_or_else(|| schema(path, "expected an array of matrices"))?;
    items.iter().enumerate().map(|(i, m)| matrix(m, &format!("{path}[{i}]"))).collect()
}

pub fn square_matrices(v: &Value, path: &str, size: Option<usize>) -> Result<Vec<CMatrix>, InputError> {
    let ms = matrices(v, path)?;
    let d = size.or(ms.first().map(|m| m.nrows()));
    for (i, m) in ms.iter().enumerate() {
        if !m.is_square() || Some(m.nrows()) != d {
            return Err(schema(
                &format!("{path}[{i}]"),
                format!("expected a {0}x{0} matrix, found {1}x{2}", d.unwrap_or(0), m.nrows(), m.ncols()),
            ));
        }
    }
    Ok(ms)
}

/// A tuple of square matrices of one size.
pub fn tuple(v: &Value, path: &str) -> Result<MatTuple, InputError> {
    let gens = square_matrices(v, path, None)?;
    if gens.is_empty() {
        return Err(schema(path, "at least one generator is required"));
    }
    MatTuple::new(gens).map_err(|e| schema(path, e.to_string()))
}

pub fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_json(m: &CMatrix) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect())).collect())
}

pub fn tuple_json(t: &MatTuple) -> Value {
    Value::Array(t.gens.iter().map(matrix_json).collect())
}
