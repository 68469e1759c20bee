//! Case document schema: parse, validate, serialize.
//!
//! The schema is a purpose-built JSON layout; quantities stay in the
//! document units (MW, rad, $/MWh) on `CaseFile` and are converted to
//! per-unit when a `Grid` is built.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BusSpec {
    pub id: i64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub load: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub from: i64,
    pub to: i64,
    pub b: f64,
    pub f_min: f64,
    pub f_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dtheta_max: Option<f64>,
    pub switchable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub bus: i64,
    pub c: f64,
    pub q: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub agc: bool,
}

fn zero() -> f64 {
    0.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WindSpec {
    pub bus: i64,
    pub nominal: f64,
    #[serde(default = "zero")]
    pub xi_min: f64,
    #[serde(default = "zero")]
    pub xi_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub base_mva: f64,
    pub buses: Vec<BusSpec>,
    pub lines: Vec<LineSpec>,
    pub gens: Vec<GenSpec>,
    #[serde(default)]
    pub wind: Vec<WindSpec>,
    pub ref_bus: i64,
    pub max_open: usize,
}

/// Parse a case document, checking the schema (including duplicate keys),
/// numeric sanity and every data invariant.
pub fn parse_case(text: &str) -> Result<CaseFile> {
    check_duplicate_keys(text)?;
    let case: CaseFile = serde_json::from_str(text).map_err(|e| Error::Schema {
        path: format!("line {} col {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    case.validate()?;
    Ok(case)
}

pub fn serialize_case(case: &CaseFile) -> String {
    serde_json::to_string_pretty(case).expect("case serialization is infallible")
}

impl CaseFile {
    pub fn validate(&self) -> Result<()> {
        let finite = |path: String, v: f64| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Units { path, value: v })
            }
        };
        let invariant = |path: String, ok: bool, msg: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Validation { path, message: msg.to_string() })
            }
        };

        finite("base_mva".into(), self.base_mva)?;
        invariant("base_mva".into(), self.base_mva > 0.0, "base_mva must be positive")?;

        let mut seen = std::collections::BTreeSet::new();
        for (i, bus) in self.buses.iter().enumerate() {
            let p = |f: &str| format!("buses[{i}].{f}");
            finite(p("theta_min"), bus.theta_min)?;
            finite(p("theta_max"), bus.theta_max)?;
            finite(p("load"), bus.load)?;
            invariant(
                format!("buses[{i}].id"),
                seen.insert(bus.id),
                &format!("duplicate bus id {}", bus.id),
            )?;
            invariant(
                p("theta_min"),
                bus.theta_min <= bus.theta_max,
                "theta_min must not exceed theta_max",
            )?;
        }
        invariant(
            "ref_bus".into(),
            seen.contains(&self.ref_bus),
            &format!("ref_bus {} is not a declared bus", self.ref_bus),
        )?;
        let ref_bus = self.buses.iter().find(|b| b.id == self.ref_bus).unwrap();
        invariant(
            "ref_bus".into(),
            ref_bus.theta_min <= 0.0 && ref_bus.theta_max >= 0.0,
            "reference bus angle range must contain 0 (the anchor)",
        )?;

        for (i, line) in self.lines.iter().enumerate() {
            let p = |f: &str| format!("lines[{i}].{f}");
            finite(p("b"), line.b)?;
            finite(p("f_min"), line.f_min)?;
            finite(p("f_max"), line.f_max)?;
            invariant(
                p("from"),
                seen.contains(&line.from),
                &format!("from bus {} not declared", line.from),
            )?;
            invariant(
                p("to"),
                seen.contains(&line.to),
                &format!("to bus {} not declared", line.to),
            )?;
            invariant(p("from"), line.from != line.to, "self-loop line")?;
            invariant(p("b"), line.b > 0.0, "susceptance must be positive")?;
            invariant(
                p("f_min"),
                line.f_min <= 0.0 && line.f_max >= 0.0,
                "flow limits must satisfy f_min <= 0 <= f_max",
            )?;
            if let Some(dt) = line.dtheta_max {
                finite(p("dtheta_max"), dt)?;
                invariant(p("dtheta_max"), dt > 0.0, "dtheta_max must be positive")?;
            }
        }

        for (i, gen) in self.gens.iter().enumerate() {
            let p = |f: &str| format!("gens[{i}].{f}");
            for (f, v) in [
                ("c", gen.c),
                ("q", gen.q),
                ("g_min", gen.g_min),
                ("g_max", gen.g_max),
                ("r_minus", gen.r_minus),
                ("r_plus", gen.r_plus),
            ] {
                finite(p(f), v)?;
            }
            invariant(
                p("bus"),
                seen.contains(&gen.bus),
                &format!("generator bus {} not declared", gen.bus),
            )?;
            invariant(p("g_min"), gen.g_min <= gen.g_max, "g_min must not exceed g_max")?;
            invariant(
                p("r_minus"),
                gen.r_minus <= 0.0 && gen.r_plus >= 0.0,
                "reserves must satisfy r_minus <= 0 <= r_plus",
            )?;
        }

        for (i, w) in self.wind.iter().enumerate() {
            let p = |f: &str| format!("wind[{i}].{f}");
            finite(p("nominal"), w.nominal)?;
            finite(p("xi_min"), w.xi_min)?;
            finite(p("xi_max"), w.xi_max)?;
            invariant(
                p("bus"),
                seen.contains(&w.bus),
                &format!("wind bus {} not declared", w.bus),
            )?;
            invariant(
                p("xi_min"),
                w.xi_min <= 0.0 && w.xi_max >= 0.0,
                "wind deviation bounds must satisfy xi_min <= 0 <= xi_max",
            )?;
        }
        Ok(())
    }
}

/// Reject documents with duplicate keys anywhere in the object tree;
/// serde_json silently keeps the last occurrence otherwise. Minimal JSON
/// tokenizer tracking object/array scopes; malformed text is left for the
/// real parser to report.
fn check_duplicate_keys(text: &str) -> Result<()> {
    enum Scope {
        Object { keys: std::collections::BTreeSet<String>, expecting_key: bool },
        Array,
    }
    let mut stack: Vec<Scope> = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0usize;
    while i < bytes.len() {
        match bytes[i] {
            b'{' => {
                stack.push(Scope::Object { keys: Default::default(), expecting_key: true });
                i += 1;
            }
            b'[' => {
                stack.push(Scope::Array);
                i += 1;
            }
            b'}' | b']' => {
                stack.pop();
                i += 1;
            }
            b',' => {
                if let Some(Scope::Object { expecting_key, .. }) = stack.last_mut() {
                    *expecting_key = true;
                }
                i += 1;
            }
            b':' => {
                if let Some(Scope::Object { expecting_key, .. }) = stack.last_mut() {
                    *expecting_key = false;
                }
                i += 1;
            }
            b'"' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() {
                    match bytes[j] {
                        b'\\' => j += 2,
                        b'"' => break,
                        _ => j += 1,
                    }
                }
                let s = &text[start..j.min(text.len())];
                if let Some(Scope::Object { keys, expecting_key }) = stack.last_mut() {
                    if *expecting_key && !keys.insert(s.to_string()) {
                        return Err(Error::Schema {
                            path: s.to_string(),
                            message: format!("duplicate field `{s}`"),
                        });
                    }
                }
                i = j + 1;
            }
            _ => {
                i += 1;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_bus_doc() -> String {
        r#"{
            "base_mva": 100.0,
            "buses": [
                {"id": 0, "theta_min": -0.6, "theta_max": 0.6, "load": 0.0},
                {"id": 1, "theta_min": -0.6, "theta_max": 0.6, "load": 100.0}
            ],
            "lines": [
                {"from": 0, "to": 1, "b": 10.0, "f_min": -200.0, "f_max": 200.0,
                 "dtheta_max": 0.6, "switchable": true}
            ],
            "gens": [
                {"bus": 0, "c": 10.0, "q": 2.0, "g_min": 0.0, "g_max": 200.0,
                 "r_minus": -50.0, "r_plus": 50.0, "agc": true}
            ],
            "wind": [],
            "ref_bus": 0,
            "max_open": 0
        }"#
        .to_string()
    }

    #[test]
    fn minimal_case_parses() {
        let case = parse_case(&two_bus_doc()).unwrap();
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.ref_bus, 0);
    }

    #[test]
    fn duplicate_bus_id_rejected() {
        let doc = two_bus_doc().replace(r#""id": 1"#, r#""id": 0"#);
        match parse_case(&doc) {
            Err(Error::Validation { message, .. }) => {
                assert!(message.contains("duplicate bus id 0"), "{message}")
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_json_key_rejected() {
        let doc = two_bus_doc().replace(
            r#""ref_bus": 0,"#,
            r#""ref_bus": 0, "ref_bus": 1,"#,
        );
        match parse_case(&doc) {
            Err(Error::Schema { message, .. }) => assert!(message.contains("duplicate"), "{message}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_rejected() {
        let doc = two_bus_doc().replace(r#""max_open": 0"#, r#""max_open2": 0"#);
        assert!(matches!(parse_case(&doc), Err(Error::Schema { .. })));
    }

    #[test]
    fn roundtrip_identity() {
        let case = parse_case(&two_bus_doc()).unwrap();
        let text = serialize_case(&case);
        let case2 = parse_case(&text).unwrap();
        assert_eq!(case, case2);
    }
}
