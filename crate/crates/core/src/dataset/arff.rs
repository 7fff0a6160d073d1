//! Parser for the dense, numeric ARFF subset used by the cleaned NASA MDP files.
//!
//! Accepted layout: `%` comment lines anywhere, a single `@relation`, numeric
//! `@attribute` lines followed by one nominal class attribute with exactly two
//! values, then `@data` and comma-separated rows.

use nalgebra::DMatrix;

use super::{Dataset, DefectiveTokens, CLEAN, DEFECTIVE};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

enum AttrType {
    Numeric,
    Nominal(Vec<String>),
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    let bytes = s.as_bytes();
    if s.len() >= 2
        && (bytes[0] == b'\'' || bytes[0] == b'"')
        && bytes[s.len() - 1] == bytes[0]
    {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

/// Splits `@attribute <name> <type>` into name and type text.
fn split_attribute(rest: &str, line: usize) -> Result<(String, String)> {
    let rest = rest.trim_start();
    let first = rest
        .chars()
        .next()
        .ok_or_else(|| parse_err(line, "@attribute without a name"))?;
    let (name, tail) = if first == '\'' || first == '"' {
        let close = rest[1..]
            .find(first)
            .ok_or_else(|| parse_err(line, "unterminated quoted attribute name"))?;
        (&rest[1..1 + close], &rest[close + 2..])
    } else {
        match rest.find(char::is_whitespace) {
            Some(end) => (&rest[..end], &rest[end..]),
            None => return Err(parse_err(line, "@attribute without a type")),
        }
    };
    let ty = tail.trim();
    if ty.is_empty() {
        return Err(parse_err(line, "@attribute without a type"));
    }
    Ok((name.to_string(), ty.to_string()))
}

fn parse_type(ty: &str, line: usize) -> Result<AttrType> {
    if ty.starts_with('{') {
        let inner = ty
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or_else(|| parse_err(line, "unterminated nominal value list"))?;
        let values: Vec<String> = inner
            .split(',')
            .map(|v| unquote(v).to_string())
            .filter(|v| !v.is_empty())
            .collect();
        return Ok(AttrType::Nominal(values));
    }
    match ty.to_ascii_lowercase().as_str() {
        "numeric" | "real" | "integer" => Ok(AttrType::Numeric),
        other => Err(parse_err(line, format!("unsupported attribute type `{other}`"))),
    }
}

/// Strips a leading `@keyword` (case-insensitive) and returns the remainder.
fn keyword<'a>(line: &'a str, kw: &str) -> Option<&'a str> {
    let head = line.get(..kw.len())?;
    if !head.eq_ignore_ascii_case(kw) {
        return None;
    }
    let rest = &line[kw.len()..];
    if rest.is_empty() || rest.starts_with(char::is_whitespace) {
        Some(rest)
    } else {
        None
    }
}

/// Parses ARFF text into a [`Dataset`].
///
/// The class value matching one of `defective` (case-insensitive) maps to
/// label 1. Missing values (`?`) are rejected.
pub fn parse_arff(text: &str, defective: &DefectiveTokens) -> Result<Dataset> {
    let mut relation: Option<String> = None;
    let mut names: Vec<String> = Vec::new();
    let mut class_values: Option<Vec<String>> = None;
    let mut class_line = 0;
    let mut in_data = false;
    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    let mut defective_value = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }

        if in_data {
            if line.starts_with('{') {
                return Err(parse_err(line_no, "sparse ARFF rows are not supported"));
            }
            let d = names.len();
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != d + 1 {
                return Err(parse_err(
                    line_no,
                    format!("expected {} fields, found {}", d + 1, fields.len()),
                ));
            }
            for (j, field) in fields[..d].iter().enumerate() {
                if *field == "?" {
                    return Err(parse_err(
                        line_no,
                        format!("missing value in attribute `{}`", names[j]),
                    ));
                }
                let v: f64 = field.parse().map_err(|_| {
                    parse_err(
                        line_no,
                        format!("non-numeric value `{field}` for attribute `{}`", names[j]),
                    )
                })?;
                if !v.is_finite() {
                    return Err(parse_err(line_no, format!("non-finite value `{field}`")));
                }
                values.push(v);
            }
            let class = unquote(fields[d]);
            if class == "?" {
                return Err(parse_err(line_no, "missing class value"));
            }
            let declared = class_values.as_ref().expect("checked at @data");
            let pos = declared
                .iter()
                .position(|v| v.eq_ignore_ascii_case(class))
                .ok_or_else(|| parse_err(line_no, format!("unknown class token `{class}`")))?;
            labels.push(if pos == defective_value { DEFECTIVE } else { CLEAN });
            continue;
        }

        if let Some(rest) = keyword(line, "@relation") {
            if relation.is_some() {
                return Err(parse_err(line_no, "duplicate @relation"));
            }
            let name = unquote(rest);
            if name.is_empty() {
                return Err(parse_err(line_no, "@relation without a name"));
            }
            relation = Some(name.to_string());
        } else if let Some(rest) = keyword(line, "@attribute") {
            if relation.is_none() {
                return Err(parse_err(line_no, "@attribute before @relation"));
            }
            if class_values.is_some() {
                return Err(parse_err(
                    line_no,
                    "the nominal class attribute must be the last attribute",
                ));
            }
            let (name, ty) = split_attribute(rest, line_no)?;
            match parse_type(&ty, line_no)? {
                AttrType::Numeric => names.push(name),
                AttrType::Nominal(vals) => {
                    if vals.len() != 2 {
                        return Err(parse_err(
                            line_no,
                            format!("class attribute needs 2 values, found {}", vals.len()),
                        ));
                    }
                    class_values = Some(vals);
                    class_line = line_no;
                }
            }
        } else if keyword(line, "@data").is_some() {
            if relation.is_none() {
                return Err(parse_err(line_no, "missing @relation"));
            }
            let declared = class_values
                .as_ref()
                .ok_or_else(|| parse_err(line_no, "no nominal class attribute declared"))?;
            if names.is_empty() {
                return Err(parse_err(line_no, "no numeric attributes declared"));
            }
            let hits: Vec<usize> = declared
                .iter()
                .enumerate()
                .filter(|(_, v)| defective.matches(v))
                .map(|(i, _)| i)
                .collect();
            defective_value = match hits.as_slice() {
                [one] => *one,
                [] => {
                    return Err(parse_err(
                        class_line,
                        format!("no class value in {declared:?} is a defective token"),
                    ))
                }
                _ => {
                    return Err(parse_err(
                        class_line,
                        format!("both class values in {declared:?} are defective tokens"),
                    ))
                }
            };
            in_data = true;
        } else {
            return Err(parse_err(line_no, format!("unexpected header line `{line}`")));
        }
    }

    if !in_data {
        return Err(parse_err(text.lines().count().max(1), "missing @data section"));
    }
    let n = labels.len();
    let d = names.len();
    let features = DMatrix::from_row_slice(n, d, &values);
    Dataset::new(relation.unwrap_or_default(), names, features, labels)
}
