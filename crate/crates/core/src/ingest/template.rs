//! Domain-knowledge predicate templates.
//!
//! One template per line: `term CMP term; def; def ...` where each def is
//! `c_k in {v1, v2, ...}` or `c_k arbitrary`. Coefficients named `c_<n>`
//! without a def are arbitrary. `#` starts a comment line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::expr::{parse_comparison_at, parse_number, Comparator, Expr};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoefficientSpec {
    Finite(Vec<f64>),
    Arbitrary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicateTemplate {
    pub name: String,
    pub source: String,
    pub lhs: Expr,
    pub comparator: Comparator,
    pub rhs: Expr,
    pub coefficients: BTreeMap<String, CoefficientSpec>,
}

fn is_coefficient_name(name: &str) -> bool {
    name.strip_prefix("c_")
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

impl PredicateTemplate {
    pub fn parse(text: &str, name: impl Into<String>) -> Result<Self> {
        parse_template_line(text, 1, name.into())
    }

    pub fn finite_coefficients(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.coefficients.iter().filter_map(|(k, v)| match v {
            CoefficientSpec::Finite(vals) => Some((k.as_str(), vals.as_slice())),
            CoefficientSpec::Arbitrary => None,
        })
    }

    pub fn arbitrary_coefficients(&self) -> Vec<&str> {
        self.coefficients
            .iter()
            .filter(|(_, v)| matches!(v, CoefficientSpec::Arbitrary))
            .map(|(k, _)| k.as_str())
            .collect()
    }

    /// Number of finite assignments (product of finite domain sizes).
    pub fn enumeration_size(&self) -> u128 {
        self.finite_coefficients()
            .map(|(_, vals)| vals.len() as u128)
            .product()
    }
}

impl fmt::Display for PredicateTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn parse_template_line(text: &str, line: usize, name: String) -> Result<PredicateTemplate> {
    let mut segments = text.split(';');
    let head = segments.next().unwrap_or_default();
    let (lhs, comparator, rhs) = parse_comparison_at(head, line, 0)?;

    let mut defs: BTreeMap<String, CoefficientSpec> = BTreeMap::new();
    let mut offset = head.chars().count() + 1;
    for seg in segments {
        let column = offset + 1;
        offset += seg.chars().count() + 1;
        let seg = seg.trim();
        if seg.is_empty() {
            continue;
        }
        let (symbol, spec) = parse_def(seg, line, column)?;
        if defs.insert(symbol.clone(), spec).is_some() {
            return Err(Error::parse(
                line,
                column,
                format!("`{symbol}` defined twice"),
            ));
        }
    }

    let mut used: BTreeSet<String> = lhs.identifiers();
    used.extend(rhs.identifiers());
    for symbol in defs.keys() {
        if !used.contains(symbol) {
            return Err(Error::UndeclaredCoefficient(symbol.clone()));
        }
    }
    let mut coefficients = BTreeMap::new();
    let mut has_variable = false;
    for ident in &used {
        if let Some(spec) = defs.remove(ident) {
            coefficients.insert(ident.clone(), spec);
        } else if is_coefficient_name(ident) {
            coefficients.insert(ident.clone(), CoefficientSpec::Arbitrary);
        } else {
            has_variable = true;
        }
    }
    if !has_variable {
        return Err(Error::parse(
            line,
            1,
            "template references no state variable",
        ));
    }
    Ok(PredicateTemplate {
        name,
        source: text.trim().to_string(),
        lhs,
        comparator,
        rhs,
        coefficients,
    })
}

fn parse_def(seg: &str, line: usize, column: usize) -> Result<(String, CoefficientSpec)> {
    let mut words = seg.splitn(2, char::is_whitespace);
    let symbol = words.next().unwrap_or_default().to_string();
    let rest = words.next().unwrap_or_default().trim();
    if symbol.is_empty()
        || !symbol
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
    {
        return Err(Error::parse(
            line,
            column,
            format!("bad coefficient name `{symbol}`"),
        ));
    }
    if rest == "arbitrary" {
        return Ok((symbol, CoefficientSpec::Arbitrary));
    }
    let set = rest
        .strip_prefix("in")
        .map(str::trim)
        .and_then(|s| s.strip_prefix('{'))
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| {
            Error::parse(
                line,
                column,
                format!("expected `{symbol} in {{...}}` or `{symbol} arbitrary`"),
            )
        })?;
    let values = set
        .split(',')
        .map(|v| {
            parse_number(v.trim()).ok_or_else(|| {
                Error::parse(line, column, format!("`{}` is not a number", v.trim()))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((symbol, CoefficientSpec::Finite(values)))
}

/// Parses a domain-knowledge file. Templates are named `t0`, `t1`, ... in file order.
pub fn parse_domain_knowledge(text: &str) -> Result<Vec<PredicateTemplate>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let name = format!("t{}", out.len());
        out.push(parse_template_line(raw, idx + 1, name)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_and_arbitrary_coefficients() {
        let t = parse_domain_knowledge(
            "c_1 * x_1 - c_2 + 2 * x_2 <= c_3; c_1 in {1,2,3}; c_2 in {4,8}",
        )
        .unwrap()
        .remove(0);
        assert_eq!(
            t.coefficients["c_1"],
            CoefficientSpec::Finite(vec![1.0, 2.0, 3.0])
        );
        assert_eq!(
            t.coefficients["c_2"],
            CoefficientSpec::Finite(vec![4.0, 8.0])
        );
        assert_eq!(t.coefficients["c_3"], CoefficientSpec::Arbitrary);
        assert_eq!(t.comparator, Comparator::Le);
        assert_eq!(t.enumeration_size(), 6);
    }

    #[test]
    fn coefficient_free_template() {
        let t = PredicateTemplate::parse("x_0 <= 5", "t0").unwrap();
        assert!(t.coefficients.is_empty());
    }

    #[test]
    fn cruise_template() {
        let t =
            PredicateTemplate::parse("d + (v_f - v_o)*c_0 > c_1; c_1 in {0,5,10}", "t0").unwrap();
        assert_eq!(t.coefficients["c_0"], CoefficientSpec::Arbitrary);
        assert_eq!(
            t.coefficients["c_1"],
            CoefficientSpec::Finite(vec![0.0, 5.0, 10.0])
        );
        assert_eq!(t.comparator, Comparator::Gt);
    }

    #[test]
    fn named_coefficients_and_comments() {
        let text = "# comment\n\nk * x <= 3; k in {1, -2.5}\nx >= a; a arbitrary\n";
        let ts = parse_domain_knowledge(text).unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(
            ts[0].coefficients["k"],
            CoefficientSpec::Finite(vec![1.0, -2.5])
        );
        assert_eq!(ts[1].coefficients["a"], CoefficientSpec::Arbitrary);
        assert_eq!(ts[1].name, "t1");
    }

    #[test]
    fn errors() {
        assert_eq!(
            PredicateTemplate::parse("x <= 1; c_9 in {1}", "t"),
            Err(Error::UndeclaredCoefficient("c_9".into()))
        );
        assert!(matches!(
            parse_domain_knowledge("x <= 1\nx <<= 2"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(PredicateTemplate::parse("c_0 <= c_1", "t").is_err());
        assert!(PredicateTemplate::parse("x <= c_1; c_1 in {a}", "t").is_err());
        assert!(PredicateTemplate::parse("x <= c_1; c_1 maybe", "t").is_err());
    }
}
