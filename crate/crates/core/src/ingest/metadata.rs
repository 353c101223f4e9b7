use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{VarKind, VariableMeta};

#[derive(Deserialize)]
struct ColumnTypes {
    #[serde(default)]
    numeric: Vec<usize>,
    #[serde(default)]
    categorical: Vec<usize>,
}

#[derive(Deserialize)]
struct MetadataDoc {
    x_column_types: ColumnTypes,
    #[serde(default)]
    x_column_names: Option<Vec<String>>,
    /// Optional fixed dictionaries keyed by column index; columns without an
    /// entry get their dictionary from the data.
    #[serde(default)]
    x_category_values: BTreeMap<String, Vec<String>>,
    /// Kind of objective the controller was synthesized for, e.g. `safety`.
    #[serde(default)]
    objective: Option<String>,
}

/// The optional `objective` entry of a metadata document.
pub fn metadata_objective(text: &str) -> Result<Option<String>> {
    let doc: MetadataDoc = serde_json::from_str(text)?;
    Ok(doc.objective)
}

/// Warning text when a determinizer is applied to a controller whose
/// objective is known not to be pure safety: a subset of a permissive
/// strategy keeps safety but may lose reachability or other guarantees.
pub fn determinization_warning(
    objective: Option<&str>,
    determinizer: crate::impurity::Determinizer,
) -> Option<String> {
    let objective = objective?.trim();
    if determinizer == crate::impurity::Determinizer::None
        || objective.eq_ignore_ascii_case("safety")
    {
        return None;
    }
    Some(format!(
        "determinizer `{determinizer}` may not preserve the `{objective}` objective"
    ))
}

/// Parses the variable metadata document:
///
/// ```json
/// {"x_column_types": {"numeric": [0, 1], "categorical": [2]},
///  "x_column_names": ["v_o", "v_f", "colour"]}
/// ```
pub fn parse_metadata(text: &str) -> Result<Vec<VariableMeta>> {
    let doc: MetadataDoc = serde_json::from_str(text)?;
    let n = doc
        .x_column_types
        .numeric
        .iter()
        .chain(&doc.x_column_types.categorical)
        .map(|i| i + 1)
        .max()
        .unwrap_or(0)
        .max(doc.x_column_names.as_ref().map_or(0, Vec::len));
    let mut kinds: Vec<Option<VarKind>> = vec![None; n];
    for (list, kind) in [
        (&doc.x_column_types.numeric, VarKind::Numeric),
        (&doc.x_column_types.categorical, VarKind::Categorical),
    ] {
        for &i in list {
            if kinds[i].is_some() {
                return Err(Error::OverlappingColumnTypes(i));
            }
            kinds[i] = Some(kind);
        }
    }
    if let Some(names) = &doc.x_column_names {
        if names.len() != n {
            return Err(Error::MalformedJson(format!(
                "x_column_names has {} entries for {} columns",
                names.len(),
                n
            )));
        }
    }
    let mut out = Vec::with_capacity(n);
    for (i, kind) in kinds.into_iter().enumerate() {
        let kind = kind.ok_or(Error::GapInColumnCoverage(i))?;
        let name = doc
            .x_column_names
            .as_ref()
            .map_or_else(|| format!("x_{i}"), |names| names[i].clone());
        let dictionary = doc
            .x_category_values
            .get(&i.to_string())
            .cloned()
            .unwrap_or_default();
        if kind == VarKind::Numeric && !dictionary.is_empty() {
            return Err(Error::MalformedJson(format!(
                "numeric column {i} has category values"
            )));
        }
        out.push(VariableMeta {
            name,
            kind,
            dictionary,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE_METADATA: &str = r#"{
        "x_column_types": {
            "numeric": [ 0, 1, 2, 3, 4, 5, 6, 7, 8, 9 ],
            "categorical": [ 10, 11, 12, 13, 14, 15, 16 ]
        },
        "x_column_names": [
            "Host_1_ev", "Host_1_na", "Host_1_wt", "Host_2_ev", "Host_2_na", "Host_2_wt",
            "Host_ev", "Host_na", "Host_wt", "N", "_loc_Clock", "_loc_Host",
            "_loc_Host_1", "_loc_Host_2", "cr", "gave_up", "line_seized"
        ]
    }"#;

    #[test]
    fn seventeen_columns() {
        let vars = parse_metadata(SAMPLE_METADATA).unwrap();
        assert_eq!(vars.len(), 17);
        assert!(vars[..10].iter().all(VariableMeta::is_numeric));
        assert!(vars[10..].iter().all(VariableMeta::is_categorical));
        assert_eq!(vars[0].name, "Host_1_ev");
        assert_eq!(vars[16].name, "line_seized");
    }

    #[test]
    fn default_names() {
        let vars =
            parse_metadata(r#"{"x_column_types":{"numeric":[0],"categorical":[]}}"#).unwrap();
        assert_eq!(vars, vec![VariableMeta::numeric("x_0")]);
    }

    #[test]
    fn contract_errors() {
        assert_eq!(
            parse_metadata(r#"{"x_column_types":{"numeric":[0,1],"categorical":[1]}}"#),
            Err(Error::OverlappingColumnTypes(1))
        );
        assert_eq!(
            parse_metadata(r#"{"x_column_types":{"numeric":[0,2],"categorical":[]}}"#),
            Err(Error::GapInColumnCoverage(1))
        );
        assert!(matches!(parse_metadata("{"), Err(Error::MalformedJson(_))));
    }

    #[test]
    fn fixed_dictionaries() {
        let vars = parse_metadata(
            r#"{"x_column_types":{"numeric":[],"categorical":[0]},
                "x_category_values":{"0":["r","g","b"]}}"#,
        )
        .unwrap();
        assert_eq!(vars[0].dictionary, vec!["r", "g", "b"]);
    }

    #[test]
    fn objective_warning() {
        use crate::impurity::Determinizer;
        let text = r#"{"x_column_types":{"numeric":[0]},"objective":"reachability"}"#;
        let objective = metadata_objective(text).unwrap();
        assert_eq!(objective.as_deref(), Some("reachability"));
        assert!(
            determinization_warning(objective.as_deref(), Determinizer::SafeEarlyStop).is_some()
        );
        assert!(determinization_warning(objective.as_deref(), Determinizer::None).is_none());
        assert!(determinization_warning(Some("safety"), Determinizer::PreMaxFreq).is_none());
        assert!(determinization_warning(None, Determinizer::PreMaxFreq).is_none());
    }
}
