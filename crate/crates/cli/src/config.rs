//! Run configuration: defaults, then a JSON config file, then flags.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use bifcurrent::{Complex, GridSpec, LineParams, Rect};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

/// A complex number written `re,im` on the command line and in config files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cx(pub Complex);

impl FromStr for Cx {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let num = |p: &str| p.parse::<f64>().map_err(|_| format!("bad number {p:?} in {s:?}"));
        match parts.as_slice() {
            [re] => Ok(Cx(Complex::new(num(re)?, 0.0))),
            [re, im] => Ok(Cx(Complex::new(num(re)?, num(im)?))),
            _ => Err(format!("expected re,im but found {s:?}")),
        }
    }
}

impl fmt::Display for Cx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0.re, self.0.im)
    }
}

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A polynomial in `c` given by complex coefficients in ascending degree,
/// written `re,im;re,im;...`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyArg(pub Vec<Complex>);

impl FromStr for PolyArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let coeffs = s
            .split(';')
            .map(|t| t.parse::<Cx>().map(|c| c.0))
            .collect::<Result<Vec<_>, _>>()?;
        if coeffs.is_empty() {
            return Err("empty coefficient list".into());
        }
        Ok(PolyArg(coeffs))
    }
}

impl fmt::Display for PolyArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| Cx(*c).to_string()).collect();
        write!(f, "{}", parts.join(";"))
    }
}

impl Serialize for PolyArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PolyArg {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn rect_from(v: &[f64]) -> Result<Rect, String> {
    match v {
        [a, b, c, d] => Ok(Rect::new(*a, *b, *c, *d)),
        _ => Err(format!("rect needs 4 numbers re_min,re_max,im_min,im_max, got {}", v.len())),
    }
}

pub fn grid_from(rect: &[f64], res: usize) -> Result<GridSpec, String> {
    GridSpec::square(rect_from(rect)?, res).map_err(|e| e.to_string())
}

pub fn line_from(alpha: Cx, beta: Cx) -> LineParams {
    LineParams::new(alpha.0, beta.0)
}

/// Layers `defaults < file < flags` as JSON objects; `null` entries in a
/// higher layer do not override.
pub fn merge<T: Serialize + DeserializeOwned>(defaults: &T, file: Option<&Value>, flags: &T) -> Result<(T, Value), String> {
    let mut merged = as_object(serde_json::to_value(defaults).map_err(|e| e.to_string())?);
    let known: Vec<String> = merged.keys().cloned().collect();
    if let Some(Value::Object(f)) = file {
        for (k, v) in f {
            if !known.contains(k) {
                return Err(format!("unknown config key {k:?}"));
            }
            if !v.is_null() {
                merged.insert(k.clone(), v.clone());
            }
        }
    }
    for (k, v) in as_object(serde_json::to_value(flags).map_err(|e| e.to_string())?) {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    let value = Value::Object(merged);
    let resolved = serde_json::from_value(value.clone()).map_err(|e| format!("config: {e}"))?;
    Ok((resolved, value))
}

fn as_object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

/// The section of a config file that applies to `command`: either a flat
/// object, or the entry under the command's name.
pub fn load_config(path: &Path, command: &str) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    match value {
        Value::Object(ref m) if m.get(command).is_some_and(Value::is_object) => Ok(m[command].clone()),
        Value::Object(_) => Ok(value),
        _ => Err(format!("{}: config must be a JSON object", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    struct Demo {
        n: Option<usize>,
        c: Option<Cx>,
    }

    #[test]
    fn complex_arguments() {
        assert_eq!("0.5,-1".parse::<Cx>().unwrap(), Cx(Complex::new(0.5, -1.0)));
        assert_eq!("-2".parse::<Cx>().unwrap(), Cx(Complex::new(-2.0, 0.0)));
        assert!("1,2,3".parse::<Cx>().is_err());
        let p: PolyArg = "0,0;1,0".parse().unwrap();
        assert_eq!(p.0, vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)]);
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let defaults = Demo {
            n: Some(3),
            c: Some(Cx(Complex::new(0.0, 0.0))),
        };
        let file = serde_json::json!({ "n": 5, "c": "1,1" });
        let flags = Demo { n: Some(7), c: None };
        let (r, _) = merge(&defaults, Some(&file), &flags).unwrap();
        assert_eq!(r.n, Some(7));
        assert_eq!(r.c, Some(Cx(Complex::new(1.0, 1.0))));
        let bad = serde_json::json!({ "bogus": 1 });
        assert!(merge(&defaults, Some(&bad), &flags).is_err());
    }
}
