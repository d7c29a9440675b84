//! Versioned JSON documents. Complex numbers are `[re, im]` pairs and object keys are
//! emitted in sorted order.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::cycles::CanonicalCycle;
use crate::detformula::FormTuple;
use crate::{BivariatePolynomial, Error, Result, C64};

pub const SCHEMA: &str = "periodlab/1";

pub fn parse(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn check_schema(obj: &Map<String, Value>) -> Result<()> {
    match obj.get("schema") {
        Some(Value::String(s)) if s == SCHEMA => Ok(()),
        Some(other) => Err(invalid(format!("unsupported schema {other}, expected {SCHEMA:?}"))),
        None => Err(invalid(format!("missing \"schema\": {SCHEMA:?}"))),
    }
}

/// Serializes with the schema tag added at top level; keys come out sorted.
pub fn document<T: Serialize>(body: &T) -> Value {
    let mut v = serde_json::to_value(body).expect("serializable report");
    if let Value::Object(m) = &mut v {
        m.insert("schema".into(), Value::String(SCHEMA.into()));
    }
    v
}

pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("valid JSON value");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct PolynomialBody {
    degree: usize,
    coeffs: Vec<(usize, usize, f64, f64)>,
}

/// `{"degree": d, "coeffs": [[i, j, re, im], ...]}` with terms in ascending `(i, j)`.
pub fn polynomial_value(p: &BivariatePolynomial) -> Value {
    let mut coeffs: Vec<(usize, usize, f64, f64)> = p.terms().map(|(i, j, c)| (i, j, c.re, c.im)).collect();
    coeffs.sort_by_key(|&(i, j, _, _)| (i, j));
    document(&PolynomialBody { degree: p.degree().unwrap_or(0), coeffs })
}

/// Reads a polynomial document, or the `"polynomial"` member of a larger document.
pub fn polynomial_from_value(v: &Value) -> Result<BivariatePolynomial> {
    let obj = v.as_object().ok_or_else(|| invalid("expected a JSON object"))?;
    check_schema(obj)?;
    let obj = match obj.get("polynomial") {
        Some(Value::Object(inner)) => inner,
        Some(_) => return Err(invalid("\"polynomial\" must be an object")),
        None => obj,
    };
    let degree = obj
        .get("degree")
        .and_then(Value::as_u64)
        .ok_or_else(|| invalid("\"degree\" must be a non-negative integer"))? as usize;
    let raw = obj
        .get("coeffs")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("\"coeffs\" must be an array of [i, j, re, im]"))?;
    let mut terms = Vec::with_capacity(raw.len());
    let mut seen = std::collections::BTreeSet::new();
    for (k, entry) in raw.iter().enumerate() {
        let quad: (u64, u64, f64, f64) = serde_json::from_value(entry.clone())
            .map_err(|_| invalid(format!("coeffs[{k}] must be [i, j, re, im] with integer i, j")))?;
        let (i, j) = (quad.0 as usize, quad.1 as usize);
        if !seen.insert((i, j)) {
            return Err(invalid(format!("duplicate monomial x^{i} y^{j}")));
        }
        if i + j > degree {
            return Err(invalid(format!("monomial x^{i} y^{j} exceeds declared degree {degree}")));
        }
        if !(quad.2.is_finite() && quad.3.is_finite()) {
            return Err(invalid(format!("coeffs[{k}] is not finite")));
        }
        terms.push((i, j, C64::new(quad.2, quad.3)));
    }
    let p = BivariatePolynomial::from_terms(degree, &terms)?;
    if p.degree() != Some(degree) {
        return Err(invalid(format!("declared degree {degree} but the polynomial has degree {:?}", p.degree())));
    }
    Ok(p)
}

pub fn read_polynomial(text: &str) -> Result<BivariatePolynomial> {
    polynomial_from_value(&parse(text)?)
}

#[derive(Serialize)]
struct CycleBody<'a> {
    cycle: &'a CanonicalCycle,
}

pub fn cycle_value(c: &CanonicalCycle) -> Value {
    document(&CycleBody { cycle: c })
}

/// Reads a cycle document, accepting either `{"cycle": {...}}` or the bare cycle object.
pub fn read_cycle(text: &str) -> Result<CanonicalCycle> {
    let v = parse(text)?;
    let obj = v.as_object().ok_or_else(|| invalid("expected a JSON object"))?;
    check_schema(obj)?;
    let body = obj.get("cycle").cloned().unwrap_or_else(|| v.clone());
    serde_json::from_value(body).map_err(|e| invalid(format!("cycle: {e}")))
}

pub fn tuple_value(t: &FormTuple) -> Value {
    #[derive(Serialize)]
    struct Body {
        forms: Vec<crate::detformula::FormIndex>,
    }
    document(&Body { forms: t.pairs() })
}

pub fn read_tuple(text: &str) -> Result<FormTuple> {
    let v = parse(text)?;
    let obj = v.as_object().ok_or_else(|| invalid("expected a JSON object"))?;
    check_schema(obj)?;
    let forms: Vec<crate::detformula::FormIndex> =
        serde_json::from_value(obj.get("forms").cloned().ok_or_else(|| invalid("missing \"forms\""))?)
            .map_err(|e| invalid(format!("forms: {e}")))?;
    Ok(FormTuple::from_pairs(&forms.iter().map(|f| (f.l, f.m)).collect::<Vec<_>>()))
}

/// `"l,m;l,m;..."`.
pub fn parse_tuple_spec(s: &str) -> Result<FormTuple> {
    let pairs = s
        .split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (l, m) = p.split_once(',').ok_or_else(|| invalid(format!("form {p:?} is not l,m")))?;
            Ok((
                l.trim().parse().map_err(|_| invalid(format!("bad l in {p:?}")))?,
                m.trim().parse().map_err(|_| invalid(format!("bad m in {p:?}")))?,
            ))
        })
        .collect::<Result<Vec<(u32, u32)>>>()?;
    Ok(FormTuple::from_pairs(&pairs))
}

/// `"re,im"` or a bare real.
pub fn parse_complex(s: &str) -> Result<C64> {
    let bad = || invalid(format!("cannot parse complex number {s:?}; use re,im"));
    match s.split_once(',') {
        Some((a, b)) => Ok(C64::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?)),
        None => Ok(C64::new(s.trim().parse().map_err(|_| bad())?, 0.0)),
    }
}

/// `"re,im;re,im;..."`.
pub fn parse_points(s: &str) -> Result<Vec<C64>> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(parse_complex).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TESTBED: &str = r#"{"schema": "periodlab/1", "degree": 3,
        "coeffs": [[3, 0, 1, 0], [1, 0, -3, 0], [0, 3, 2, 0], [0, 1, -6, 0]]}"#;

    #[test]
    fn polynomial_roundtrip() {
        let p = read_polynomial(TESTBED).unwrap();
        assert_eq!(p.coeff(0, 1), C64::new(-6.0, 0.0));
        let back = polynomial_from_value(&polynomial_value(&p)).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn keys_are_sorted_and_tagged() {
        let p = read_polynomial(TESTBED).unwrap();
        let s = to_text(&polynomial_value(&p));
        let (c, d, sc) = (s.find("\"coeffs\"").unwrap(), s.find("\"degree\"").unwrap(), s.find("\"schema\"").unwrap());
        assert!(c < d && d < sc);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = read_polynomial("{\n  \"schema\": \"periodlab/1\",\n  \"degree\": 3,,\n}").unwrap_err();
        match err {
            Error::Json { line, column, .. } => assert_eq!((line, column), (3, 15)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_degree_mismatch() {
        let dup = r#"{"schema": "periodlab/1", "degree": 3, "coeffs": [[3, 0, 1, 0], [3, 0, 2, 0]]}"#;
        assert!(matches!(read_polynomial(dup), Err(Error::InvalidInput(m)) if m.contains("duplicate")));
        let low = r#"{"schema": "periodlab/1", "degree": 4, "coeffs": [[3, 0, 1, 0]]}"#;
        assert!(read_polynomial(low).is_err());
        let noschema = r#"{"degree": 3, "coeffs": [[3, 0, 1, 0]]}"#;
        assert!(read_polynomial(noschema).is_err());
    }

    #[test]
    fn parses_specs() {
        assert_eq!(parse_complex("1.5,-2").unwrap(), C64::new(1.5, -2.0));
        assert_eq!(parse_complex("3").unwrap(), C64::new(3.0, 0.0));
        assert_eq!(parse_points("0,1;2,0").unwrap().len(), 2);
        assert_eq!(parse_tuple_spec("0,0;1,0").unwrap().pairs().len(), 2);
        assert!(parse_tuple_spec("0;1").is_err());
    }
}
