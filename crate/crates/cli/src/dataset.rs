//! JSON datasets: a group tag plus one payload per sample.
//!
//! Payloads by group:
//!
//! * `translation:d`: `[x1, ..., xd]`
//! * `so3`, `glplus:n`: a matrix as a list of rows, or flat in row-major order
//! * `se3`: `{"rotation": <3x3 matrix>, "translation": [x, y, z]}`
//! * products and powers: a list with one payload per factor

use std::path::Path;

use liestat::{GroupDescriptor, GroupElement};
use nalgebra::{DMatrix, Matrix3, Vector3};
use serde_json::{json, Map, Value};

use crate::failure::Failure;

pub const DATASET_SCHEMA: &str = "liestat.dataset/1";

#[derive(Debug, Clone)]
pub struct Dataset {
    pub group: GroupDescriptor,
    pub samples: Vec<GroupElement>,
    pub labels: Option<Vec<String>>,
    /// How the dataset was produced, kept verbatim in the file.
    pub generator: Option<Value>,
}

fn numbers(v: &Value, what: &str) -> Result<Vec<f64>, String> {
    let arr = v.as_array().ok_or_else(|| format!("{what} must be an array"))?;
    arr.iter().map(|x| x.as_f64().ok_or_else(|| format!("{what} must contain only numbers"))).collect()
}

fn matrix(v: &Value, n: usize, what: &str) -> Result<DMatrix<f64>, String> {
    let arr = v.as_array().ok_or_else(|| format!("{what} must be an array"))?;
    let flat = if arr.first().is_some_and(Value::is_array) {
        if arr.len() != n {
            return Err(format!("{what} must have {n} rows, found {}", arr.len()));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in arr.iter().enumerate() {
            let row = numbers(row, &format!("{what} row {i}"))?;
            if row.len() != n {
                return Err(format!("{what} row {i} must have {n} entries, found {}", row.len()));
            }
            flat.extend(row);
        }
        flat
    } else {
        let flat = numbers(v, what)?;
        if flat.len() != n * n {
            return Err(format!("{what} must have {} entries, found {}", n * n, flat.len()));
        }
        flat
    };
    Ok(DMatrix::from_row_slice(n, n, &flat))
}

fn matrix_rows(m: &DMatrix<f64>) -> Value {
    Value::Array(m.row_iter().map(|r| json!(r.iter().copied().collect::<Vec<_>>())).collect())
}

/// Reads a payload as an element of `group`.
pub fn element_from_json(group: &GroupDescriptor, v: &Value) -> Result<GroupElement, String> {
    let err = |e: liestat::Error| e.to_string();
    match group {
        GroupDescriptor::Translation(d) => {
            let x = numbers(v, "translation")?;
            if x.len() != *d {
                return Err(format!("translation must have {d} entries, found {}", x.len()));
            }
            GroupElement::from_slice(&x).map_err(err)
        }
        GroupDescriptor::SO3 => {
            let r = matrix(v, 3, "rotation")?;
            GroupElement::so3(Matrix3::from_iterator(r.iter().copied())).map_err(err)
        }
        GroupDescriptor::SE3 => {
            let obj = v.as_object().ok_or("se3 payload must be an object with rotation and translation")?;
            let r = matrix(obj.get("rotation").ok_or("se3 payload lacks \"rotation\"")?, 3, "rotation")?;
            let t = numbers(obj.get("translation").ok_or("se3 payload lacks \"translation\"")?, "translation")?;
            if t.len() != 3 {
                return Err(format!("se3 translation must have 3 entries, found {}", t.len()));
            }
            GroupElement::se3(Matrix3::from_iterator(r.iter().copied()), Vector3::from_column_slice(&t)).map_err(err)
        }
        GroupDescriptor::GLPlus(n) => GroupElement::glplus(matrix(v, *n, "matrix")?).map_err(err),
        GroupDescriptor::Product(fs) => {
            let arr = v.as_array().ok_or("product payload must be a list of factors")?;
            if arr.len() != fs.len() {
                return Err(format!("product payload must have {} factors, found {}", fs.len(), arr.len()));
            }
            let factors = fs
                .iter()
                .zip(arr)
                .enumerate()
                .map(|(i, (f, p))| element_from_json(f, p).map_err(|e| format!("factor {i}: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            GroupElement::product(factors).map_err(err)
        }
    }
}

/// Writes an element as a payload.
pub fn element_to_json(g: &GroupElement) -> Value {
    if let Some(v) = g.as_translation() {
        json!(v.iter().copied().collect::<Vec<_>>())
    } else if let Some(r) = g.as_so3() {
        matrix_rows(&DMatrix::from_iterator(3, 3, r.iter().copied()))
    } else if let Some((r, t)) = g.as_se3() {
        json!({
            "rotation": matrix_rows(&DMatrix::from_iterator(3, 3, r.iter().copied())),
            "translation": [t.x, t.y, t.z],
        })
    } else if let Some(a) = g.as_glplus() {
        matrix_rows(a)
    } else {
        Value::Array(g.factors().unwrap_or_default().iter().map(element_to_json).collect())
    }
}

fn parse_group(v: Option<&Value>) -> Result<GroupDescriptor, String> {
    let tag = v.and_then(Value::as_str).ok_or("missing \"group\" tag")?;
    tag.parse().map_err(|e: liestat::Error| e.to_string())
}

fn check_schema(obj: &Map<String, Value>) -> Result<(), String> {
    match obj.get("schema") {
        None => Ok(()),
        Some(Value::String(s)) if s == DATASET_SCHEMA => Ok(()),
        Some(other) => Err(format!("unsupported dataset schema {other}, expected {DATASET_SCHEMA:?}")),
    }
}

fn labels(v: Option<&Value>) -> Result<Option<Vec<String>>, String> {
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Array(xs)) => xs
            .iter()
            .map(|x| x.as_str().map(str::to_owned).ok_or_else(|| "labels must be strings".to_string()))
            .collect::<Result<Vec<_>, _>>()
            .map(Some),
        Some(_) => Err("labels must be a list of strings".into()),
    }
}

impl Dataset {
    pub fn new(group: GroupDescriptor, samples: Vec<GroupElement>) -> Self {
        Self { group, samples, labels: None, generator: None }
    }

    /// Parses a dataset document.
    pub fn from_json_str(text: &str) -> Result<Self, String> {
        let doc: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
        let obj = doc.as_object().ok_or("dataset must be a JSON object")?;
        check_schema(obj)?;
        let group = parse_group(obj.get("group"))?;
        let raw = obj.get("samples").and_then(Value::as_array).ok_or("missing \"samples\" list")?;
        let samples = raw
            .iter()
            .enumerate()
            .map(|(i, p)| element_from_json(&group, p).map_err(|e| format!("sample {i}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        let labels = labels(obj.get("labels"))?;
        if let Some(l) = &labels {
            if l.len() != samples.len() {
                return Err(format!("{} labels for {} samples", l.len(), samples.len()));
            }
        }
        Ok(Self { group, samples, labels, generator: obj.get("generator").cloned() })
    }

    /// Parses the line-delimited form: a header object with the group tag,
    /// then one `{"sample": ..., "label": ...}` object per line.
    pub fn from_jsonl_str(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (i0, first) = lines.next().ok_or("empty dataset")?;
        let at = |e: String| format!("line {}: {e}", i0 + 1);
        let header: Value = serde_json::from_str(first).map_err(|e| at(format!("invalid JSON: {e}")))?;
        let header = header.as_object().ok_or_else(|| at("header must be a JSON object".into()))?;
        check_schema(header).map_err(at)?;
        let group = parse_group(header.get("group")).map_err(at)?;
        let mut samples = Vec::new();
        let mut names = Vec::new();
        for (i, line) in lines {
            let no = i + 1;
            let rec: Value = serde_json::from_str(line).map_err(|e| format!("line {no}: invalid JSON: {e}"))?;
            let payload = rec.get("sample").ok_or_else(|| format!("line {no}: missing \"sample\""))?;
            let idx = samples.len();
            samples.push(element_from_json(&group, payload).map_err(|e| format!("line {no}: sample {idx}: {e}"))?);
            names.push(rec.get("label").and_then(Value::as_str).map(str::to_owned));
        }
        let labels = if names.iter().all(Option::is_some) && !names.is_empty() {
            Some(names.into_iter().flatten().collect())
        } else {
            None
        };
        Ok(Self { group, samples, labels, generator: header.get("generator").cloned() })
    }

    /// Reads a dataset file; `.jsonl` files use the line-delimited form.
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("jsonl")) {
            Self::from_jsonl_str(&text)
        } else {
            Self::from_json_str(&text)
        };
        parsed.map_err(|e| Failure::input(format!("{}: {e}", path.display())))
    }

    fn header(&self) -> Map<String, Value> {
        let mut obj = Map::new();
        obj.insert("schema".into(), json!(DATASET_SCHEMA));
        obj.insert("group".into(), json!(self.group.to_string()));
        if let Some(g) = &self.generator {
            obj.insert("generator".into(), g.clone());
        }
        obj
    }

    pub fn to_json(&self) -> Value {
        let mut obj = self.header();
        obj.insert("samples".into(), Value::Array(self.samples.iter().map(element_to_json).collect()));
        if let Some(l) = &self.labels {
            obj.insert("labels".into(), json!(l));
        }
        Value::Object(obj)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = Value::Object(self.header()).to_string();
        out.push('\n');
        for (i, s) in self.samples.iter().enumerate() {
            let mut rec = Map::new();
            rec.insert("sample".into(), element_to_json(s));
            if let Some(l) = &self.labels {
                rec.insert("label".into(), json!(l[i]));
            }
            out.push_str(&Value::Object(rec).to_string());
            out.push('\n');
        }
        out
    }
}

/// Reads a bare covariance file: a number `s` meaning `s·I`, or a `d×d`
/// matrix given as rows.
pub fn covariance_from_json(group: &GroupDescriptor, v: &Value) -> Result<DMatrix<f64>, String> {
    let d = group.dim();
    match v {
        Value::Number(s) => {
            let s = s.as_f64().ok_or("covariance scale must be a number")?;
            Ok(DMatrix::identity(d, d) * s)
        }
        _ => matrix(v, d, "covariance"),
    }
}

/// Reads a list of positive numbers.
pub fn weights_from_json(v: &Value) -> Result<Vec<f64>, String> {
    numbers(v, "weights")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn payload_round_trip_for_every_group() {
        let groups = ["translation:2", "so3", "se3", "glplus:3", "power:glplus:3:2", "product(se3,translation:1)"];
        for tag in groups {
            let desc: GroupDescriptor = tag.parse().unwrap();
            let v = DVector::from_fn(desc.dim(), |i, _| 0.3 * (i as f64 + 1.0).sin());
            let g = liestat::group_exp(&desc, &liestat::TangentCoords::new(v)).unwrap();
            let v = element_to_json(&g);
            assert_eq!(element_from_json(&desc, &v).unwrap(), g, "{tag}");
        }
    }
}
