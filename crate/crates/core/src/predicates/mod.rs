//! Branching tests on states and the generators that propose them.

pub(crate) mod candidates;
mod grouping;
mod simplex;
mod sweep;
mod templates;

use std::fmt::Write as _;

pub use candidates::{axis_aligned_candidates, linear_candidates, midpoints};
pub use grouping::categorical_grouping;
pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};
pub use templates::{instantiate_templates, DroppedCandidate, TemplateCandidates};

use crate::error::{Error, Result};
use crate::ingest::expr::{Comparator, Expr};
use crate::model::VariableMeta;

/// Relative tolerance under which two thresholds are considered equal.
pub const THRESHOLD_DEDUP_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    /// `s[var] <= threshold`.
    AxisAligned { var: usize, threshold: f64 },
    /// `sum_i coefficients[i] * s[i] <= threshold`; categorical columns carry 0.
    Linear {
        coefficients: Vec<f64>,
        threshold: f64,
    },
    /// Multiway split on a categorical variable; branch `i` holds the codes in `groups[i]`.
    Categorical { var: usize, groups: Vec<Vec<usize>> },
    /// `lhs CMP rhs` over bound expressions.
    Algebraic {
        lhs: Expr,
        comparator: Comparator,
        rhs: Expr,
        provenance: String,
    },
}

/// Generator family of a predicate, in tie-break preference order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DomainKind {
    Axis,
    Categorical,
    Linear,
    Template,
}

/// `sum_i c_i * s_i` over the nonzero coefficients, in column order.
pub(crate) fn linear_value(coefficients: &[f64], state: &[f64]) -> f64 {
    coefficients
        .iter()
        .zip(state)
        .filter(|(c, _)| **c != 0.0)
        .map(|(c, s)| c * s)
        .sum()
}

fn threshold_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= THRESHOLD_DEDUP_REL * a.abs().max(b.abs())
}

impl Predicate {
    pub fn arity(&self) -> usize {
        match self {
            Predicate::Categorical { groups, .. } => groups.len(),
            _ => 2,
        }
    }

    pub fn domain_kind(&self) -> DomainKind {
        match self {
            Predicate::AxisAligned { .. } => DomainKind::Axis,
            Predicate::Linear { .. } => DomainKind::Linear,
            Predicate::Categorical { .. } => DomainKind::Categorical,
            Predicate::Algebraic { .. } => DomainKind::Template,
        }
    }

    /// Number of distinct state variables the test reads.
    pub fn referenced_variables(&self) -> usize {
        match self {
            Predicate::AxisAligned { .. } | Predicate::Categorical { .. } => 1,
            Predicate::Linear { coefficients, .. } => {
                coefficients.iter().filter(|c| **c != 0.0).count()
            }
            Predicate::Algebraic { lhs, rhs, .. } => {
                let mut vars = lhs.variables();
                vars.extend(rhs.variables());
                vars.len()
            }
        }
    }

    /// Branch taken by a state: 1 if a binary test holds, 0 otherwise;
    /// the group index for categorical splits.
    pub fn eval(&self, state: &[f64]) -> Result<usize> {
        let coord = |var: usize| {
            state.get(var).copied().ok_or(Error::StateShape {
                expected: var + 1,
                found: state.len(),
            })
        };
        match self {
            Predicate::AxisAligned { var, threshold } => {
                Ok(usize::from(coord(*var)? <= *threshold))
            }
            Predicate::Linear {
                coefficients,
                threshold,
            } => {
                if state.len() < coefficients.len() {
                    return Err(Error::StateShape {
                        expected: coefficients.len(),
                        found: state.len(),
                    });
                }
                Ok(usize::from(linear_value(coefficients, state) <= *threshold))
            }
            Predicate::Categorical { var, groups } => {
                let value = coord(*var)?;
                let code = value as usize;
                groups
                    .iter()
                    .position(|g| value.fract() == 0.0 && value >= 0.0 && g.contains(&code))
                    .ok_or_else(|| Error::UnknownCategoricalValue {
                        variable: format!("x_{var}"),
                        value: format!("{value}"),
                    })
            }
            Predicate::Algebraic {
                lhs,
                comparator,
                rhs,
                ..
            } => {
                let a = lhs.eval(state)?;
                let b = rhs.eval(state)?;
                Ok(usize::from(comparator.holds(a, b)))
            }
        }
    }

    /// Like [`Predicate::eval`] but names the variable in categorical errors.
    pub fn eval_named(&self, state: &[f64], variables: &[VariableMeta]) -> Result<usize> {
        self.eval(state).map_err(|err| match (err, self) {
            (Error::UnknownCategoricalValue { value, .. }, Predicate::Categorical { var, .. }) => {
                let meta = &variables[*var];
                Error::UnknownCategoricalValue {
                    variable: meta.name.clone(),
                    value: value
                        .parse::<f64>()
                        .map(|v| meta.render(v))
                        .unwrap_or(value),
                }
            }
            (other, _) => other,
        })
    }

    pub fn display(&self, variables: &[VariableMeta]) -> String {
        let name = |i: usize| {
            variables
                .get(i)
                .map_or_else(|| format!("x_{i}"), |v| v.name.clone())
        };
        match self {
            Predicate::AxisAligned { var, threshold } => format!("{} <= {}", name(*var), threshold),
            Predicate::Linear {
                coefficients,
                threshold,
            } => {
                let mut out = String::new();
                for (i, c) in coefficients.iter().enumerate().filter(|(_, c)| **c != 0.0) {
                    let first = out.is_empty();
                    let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
                    match (first, sign) {
                        (true, "+") => {}
                        (true, _) => out.push('-'),
                        (false, s) => {
                            let _ = write!(out, " {s} ");
                        }
                    }
                    if mag == 1.0 {
                        out.push_str(&name(i));
                    } else {
                        let _ = write!(out, "{}*{}", mag, name(i));
                    }
                }
                format!("{out} <= {threshold}")
            }
            Predicate::Categorical { var, groups } => {
                let groups: Vec<String> = groups
                    .iter()
                    .map(|g| format!("{{{}}}", group_label(variables, *var, g)))
                    .collect();
                format!("{} in {}", name(*var), groups.join(" | "))
            }
            Predicate::Algebraic {
                lhs,
                comparator,
                rhs,
                ..
            } => format!("{lhs} {comparator} {rhs}"),
        }
    }

    /// Labels for each outgoing edge: `false`/`true` for binary tests,
    /// comma-joined value tokens for categorical groups.
    pub fn edge_labels(&self, variables: &[VariableMeta]) -> Vec<String> {
        match self {
            Predicate::Categorical { var, groups } => groups
                .iter()
                .map(|g| group_label(variables, *var, g))
                .collect(),
            _ => vec!["false".to_string(), "true".to_string()],
        }
    }

    /// Structural equality with thresholds compared up to [`THRESHOLD_DEDUP_REL`].
    pub fn approx_eq(&self, other: &Predicate) -> bool {
        match (self, other) {
            (
                Predicate::AxisAligned {
                    var: a,
                    threshold: t,
                },
                Predicate::AxisAligned {
                    var: b,
                    threshold: u,
                },
            ) => a == b && threshold_close(*t, *u),
            (
                Predicate::Linear {
                    coefficients: a,
                    threshold: t,
                },
                Predicate::Linear {
                    coefficients: b,
                    threshold: u,
                },
            ) => a == b && threshold_close(*t, *u),
            (
                Predicate::Algebraic {
                    lhs: l1,
                    comparator: c1,
                    rhs: r1,
                    ..
                },
                Predicate::Algebraic {
                    lhs: l2,
                    comparator: c2,
                    rhs: r2,
                    ..
                },
            ) => c1 == c2 && exprs_close(l1, l2) && exprs_close(r1, r2),
            _ => self == other,
        }
    }
}

fn exprs_close(a: &Expr, b: &Expr) -> bool {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => threshold_close(*x, *y),
        (Expr::Neg(x), Expr::Neg(y)) => exprs_close(x, y),
        (Expr::Binary(o1, l1, r1), Expr::Binary(o2, l2, r2)) => {
            o1 == o2 && exprs_close(l1, l2) && exprs_close(r1, r2)
        }
        (Expr::Call(f1, a1), Expr::Call(f2, a2)) => {
            f1 == f2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| exprs_close(x, y))
        }
        _ => a == b,
    }
}

fn group_label(variables: &[VariableMeta], var: usize, group: &[usize]) -> String {
    group
        .iter()
        .map(|code| match variables.get(var) {
            Some(meta) => meta.render(*code as f64),
            None => code.to_string(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Evaluates a predicate on a state (see [`Predicate::eval`]).
pub fn eval_predicate(pred: &Predicate, state: &[f64]) -> Result<usize> {
    pred.eval(state)
}
