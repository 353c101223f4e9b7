use std::fmt::Write as _;

use crate::error::Result;
use crate::ingest::expr::{BinOp, Comparator, Expr, Func, EQ_REL_TOL};
use crate::model::{DecisionTree, Node};
use crate::predicates::Predicate;

fn literal(v: f64) -> String {
    format!("({v:.16e})")
}

fn c_function(func: Func) -> Result<&'static str> {
    Ok(match func {
        Func::Exp => "exp",
        Func::Log => "log",
        Func::Log2 => "log2",
        Func::Sqrt => "sqrt",
        Func::Sin => "sin",
        Func::Cos => "cos",
        Func::Tan => "tan",
        Func::Abs => "fabs",
        Func::Min => "fmin",
        Func::Max => "fmax",
    })
}

fn c_expr(e: &Expr) -> Result<String> {
    Ok(match e {
        Expr::Num(v) => literal(*v),
        Expr::Var { index, .. } => format!("x[{index}]"),
        Expr::Ident(name) => {
            return Err(crate::error::Error::InvalidPredicate(format!(
                "unbound name `{name}`"
            )))
        }
        Expr::Neg(inner) => format!("(-{})", c_expr(inner)?),
        Expr::Binary(BinOp::Pow, l, r) => format!("pow({}, {})", c_expr(l)?, c_expr(r)?),
        Expr::Binary(op, l, r) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                _ => "/",
            };
            format!("({} {sym} {})", c_expr(l)?, c_expr(r)?)
        }
        Expr::Call(func, args) => {
            let args = args.iter().map(c_expr).collect::<Result<Vec<_>>>()?;
            format!("{}({})", c_function(*func)?, args.join(", "))
        }
    })
}

fn c_condition(pred: &Predicate) -> Result<String> {
    Ok(match pred {
        Predicate::AxisAligned { var, threshold } => {
            format!("x[{var}] <= {}", literal(*threshold))
        }
        Predicate::Linear {
            coefficients,
            threshold,
        } => {
            let terms: Vec<String> = coefficients
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, c)| format!("{} * x[{i}]", literal(*c)))
                .collect();
            format!("{} <= {}", terms.join(" + "), literal(*threshold))
        }
        Predicate::Algebraic {
            lhs,
            comparator,
            rhs,
            ..
        } => {
            let (l, r) = (c_expr(lhs)?, c_expr(rhs)?);
            match comparator {
                Comparator::Eq => format!("ct_eq({l}, {r})"),
                other => format!("{l} {} {r}", other.symbol()),
            }
        }
        Predicate::Categorical { .. } => unreachable!("categorical splits use group tests"),
    })
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn emit_node(tree: &DecisionTree, id: usize, depth: usize, out: &mut String) -> Result<()> {
    match &tree.nodes()[id] {
        Node::Leaf { actions, .. } => {
            for (slot, action) in actions.ids().iter().enumerate() {
                indent(out, depth);
                let _ = writeln!(out, "actions_out[{slot}] = {action};");
            }
            indent(out, depth);
            let _ = writeln!(out, "return {};", actions.len());
        }
        Node::Inner {
            predicate: Predicate::Categorical { var, groups },
            children,
        } => {
            for (i, (group, child)) in groups.iter().zip(children).enumerate() {
                let test: Vec<String> = group
                    .iter()
                    .map(|code| format!("x[{var}] == {code}.0"))
                    .collect();
                indent(out, depth);
                if i > 0 {
                    out.push_str("} else ");
                }
                let _ = writeln!(out, "if ({}) {{", test.join(" || "));
                emit_node(tree, *child, depth + 1, out)?;
            }
            indent(out, depth);
            out.push_str("} else {\n");
            indent(out, depth + 1);
            out.push_str("return -1;\n");
            indent(out, depth);
            out.push_str("}\n");
        }
        Node::Inner {
            predicate,
            children,
        } => {
            indent(out, depth);
            let _ = writeln!(out, "if ({}) {{", c_condition(predicate)?);
            emit_node(tree, children[1], depth + 1, out)?;
            indent(out, depth);
            out.push_str("} else {\n");
            emit_node(tree, children[0], depth + 1, out)?;
            indent(out, depth);
            out.push_str("}\n");
        }
    }
    Ok(())
}

fn c_string(s: &str) -> String {
    let mut out = String::from("\"");
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if c.is_ascii_graphic() || c == ' ' => out.push(c),
            c => {
                let mut buf = [0u8; 4];
                for b in c.encode_utf8(&mut buf).bytes() {
                    let _ = write!(out, "\\{b:03o}");
                }
            }
        }
    }
    out.push('"');
    out
}

fn comment_safe(s: &str) -> String {
    s.replace("*/", "* /")
}

fn uses_eq(tree: &DecisionTree) -> bool {
    tree.nodes().iter().any(|n| {
        matches!(
            n,
            Node::Inner {
                predicate: Predicate::Algebraic {
                    comparator: Comparator::Eq,
                    ..
                },
                ..
            }
        )
    })
}

/// C99 translation unit defining
/// `int classify(const double x[], int actions_out[])`.
///
/// The function writes the allowed action ids into `actions_out` and returns
/// how many were written, or -1 when a categorical code matches no group.
/// Categorical coordinates are passed as their dictionary codes.
pub fn export_c(tree: &DecisionTree) -> Result<String> {
    let max_actions = tree
        .nodes()
        .iter()
        .filter_map(|n| match n {
            Node::Leaf { actions, .. } => Some(actions.len()),
            Node::Inner { .. } => None,
        })
        .max()
        .unwrap_or(1);

    let mut out = String::new();
    out.push_str("#include <math.h>\n\n#pragma STDC FP_CONTRACT OFF\n\n");
    out.push_str("/* state layout:\n");
    for (i, var) in tree.variables().iter().enumerate() {
        let _ = write!(out, " *   x[{i}] {}", comment_safe(&var.name));
        if var.is_categorical() {
            let codes: Vec<String> = var
                .dictionary
                .iter()
                .enumerate()
                .map(|(code, token)| format!("{code} = {}", comment_safe(token)))
                .collect();
            let _ = write!(out, " (categorical: {})", codes.join(", "));
        }
        out.push('\n');
    }
    out.push_str(" */\n\n");
    let _ = writeln!(
        out,
        "#define CLASSIFY_NUM_VARIABLES {}",
        tree.variables().len()
    );
    let _ = writeln!(out, "#define CLASSIFY_NUM_ACTIONS {}", tree.labels().len());
    let _ = writeln!(out, "#define CLASSIFY_MAX_ACTIONS {max_actions}\n");
    let labels: Vec<String> = tree.labels().iter().map(|l| c_string(l)).collect();
    let _ = writeln!(
        out,
        "const char *const classify_action_labels[CLASSIFY_NUM_ACTIONS] = {{{}}};\n",
        labels.join(", ")
    );
    if uses_eq(tree) {
        let _ = writeln!(
            out,
            "static int ct_eq(double a, double b) {{\n    return a == b || fabs(a - b) <= {} * fmax(fabs(a), fabs(b));\n}}\n",
            literal(EQ_REL_TOL)
        );
    }
    out.push_str("int classify(const double x[], int actions_out[]) {\n");
    let mut body = String::new();
    emit_node(tree, tree.root(), 1, &mut body)?;
    out.push_str(&body);
    out.push_str("}\n");
    Ok(out)
}
