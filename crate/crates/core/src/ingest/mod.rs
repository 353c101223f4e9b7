//! Readers and writers for controllers, metadata and domain knowledge.

pub mod csv;
pub mod expr;
pub mod metadata;
pub mod strategy;
pub mod template;

pub use self::csv::{parse_controller_csv, write_controller_csv};
pub use expr::{parse_comparison, parse_expression, Comparator, Expr};
pub use metadata::{determinization_warning, metadata_objective, parse_metadata};
pub use strategy::parse_strategy_json;
pub use template::{parse_domain_knowledge, CoefficientSpec, PredicateTemplate};
