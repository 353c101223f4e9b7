//! Tree serialization: canonical JSON, Graphviz DOT and C source.

mod c;
mod dot;
mod json;

pub use self::c::export_c;
pub use dot::export_dot;
pub use json::{export_json, import_json, predicate_from_json, predicate_to_json, SCHEMA_VERSION};

/// Output format selector shared by the CLI and the service.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Dot,
    C,
}

impl std::str::FromStr for ExportFormat {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ExportFormat::Json),
            "dot" => Ok(ExportFormat::Dot),
            "c" => Ok(ExportFormat::C),
            _ => Err(crate::error::Error::InvalidConfig(format!(
                "unknown export format `{s}`"
            ))),
        }
    }
}

pub fn export(
    tree: &crate::model::DecisionTree,
    format: ExportFormat,
) -> crate::error::Result<String> {
    match format {
        ExportFormat::Json => Ok(export_json(tree)),
        ExportFormat::Dot => Ok(export_dot(tree)),
        ExportFormat::C => export_c(tree),
    }
}
