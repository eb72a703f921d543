//! Parser for the concrete formula syntax: s-expressions over
//! `(and or not => <= < = >= > != + - *)`, integer literals, and identifiers.
//! Multiplication must have an integer-constant factor (linearity check).

use std::collections::BTreeSet;

use thiserror::Error;

use crate::sexpr::{self, Pos, Sexpr};

use super::{Formula, LinTerm, Rel};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{0}")]
    Syntax(#[from] sexpr::SexprError),
    #[error("{pos}: {msg}")]
    Malformed { pos: Pos, msg: String },
    #[error("{pos}: nonlinear product (neither factor is constant)")]
    NotLinear { pos: Pos },
    #[error("{pos}: unknown variable `{name}`")]
    UnknownVariable { pos: Pos, name: String },
    #[error("{pos}: integer overflow while folding constants")]
    Overflow { pos: Pos },
}

fn malformed(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::Malformed {
        pos,
        msg: msg.into(),
    }
}

/// Parses a formula; any identifier is accepted as a variable.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let expr = sexpr::parse_one(text)?;
    formula(&expr, None)
}

/// Parses a formula, rejecting variables outside `declared`.
pub fn parse_formula_with_vars(
    text: &str,
    declared: &BTreeSet<String>,
) -> Result<Formula, ParseError> {
    let expr = sexpr::parse_one(text)?;
    formula(&expr, Some(declared))
}

const RESERVED: &[&str] = &[
    "and", "or", "not", "=>", "<=", "<", "=", ">=", ">", "!=", "+", "-", "*", "true", "false",
];

fn formula(expr: &Sexpr, declared: Option<&BTreeSet<String>>) -> Result<Formula, ParseError> {
    match expr {
        Sexpr::Sym(s, _) if s == "true" => Ok(Formula::True),
        Sexpr::Sym(s, _) if s == "false" => Ok(Formula::False),
        Sexpr::Sym(_, pos) | Sexpr::Int(_, pos) => Err(malformed(
            *pos,
            "expected a formula: `true`, `false`, or an operator application",
        )),
        Sexpr::List(items, pos) => {
            let head = items
                .first()
                .ok_or_else(|| malformed(*pos, "empty application"))?;
            let op = head
                .as_sym()
                .ok_or_else(|| malformed(head.pos(), "operator must be a symbol"))?;
            let args = &items[1..];
            match op {
                "and" => Ok(Formula::And(
                    args.iter()
                        .map(|a| formula(a, declared))
                        .collect::<Result<_, _>>()?,
                )),
                "or" => Ok(Formula::Or(
                    args.iter()
                        .map(|a| formula(a, declared))
                        .collect::<Result<_, _>>()?,
                )),
                "not" => {
                    let [arg] = args else {
                        return Err(malformed(*pos, "`not` takes exactly one argument"));
                    };
                    Ok(Formula::not(formula(arg, declared)?))
                }
                "=>" => {
                    let [lhs, rhs] = args else {
                        return Err(malformed(*pos, "`=>` takes exactly two arguments"));
                    };
                    Ok(Formula::implies(
                        formula(lhs, declared)?,
                        formula(rhs, declared)?,
                    ))
                }
                "<=" | "<" | "=" | ">=" | ">" | "!=" => {
                    let [lhs, rhs] = args else {
                        return Err(malformed(
                            *pos,
                            format!("`{op}` takes exactly two arguments"),
                        ));
                    };
                    let rel = match op {
                        "<=" => Rel::Le,
                        "<" => Rel::Lt,
                        "=" => Rel::Eq,
                        ">=" => Rel::Ge,
                        ">" => Rel::Gt,
                        _ => Rel::Ne,
                    };
                    Ok(Formula::atom(term(lhs, declared)?, rel, term(rhs, declared)?))
                }
                _ => Err(malformed(head.pos(), format!("unknown operator `{op}`"))),
            }
        }
    }
}

fn term(expr: &Sexpr, declared: Option<&BTreeSet<String>>) -> Result<LinTerm, ParseError> {
    match expr {
        Sexpr::Int(v, _) => Ok(LinTerm::constant(*v)),
        Sexpr::Sym(name, pos) => {
            if RESERVED.contains(&name.as_str()) {
                return Err(malformed(*pos, format!("`{name}` cannot be a variable")));
            }
            if let Some(vars) = declared {
                if !vars.contains(name) {
                    return Err(ParseError::UnknownVariable {
                        pos: *pos,
                        name: name.clone(),
                    });
                }
            }
            Ok(LinTerm::var(name.clone()))
        }
        Sexpr::List(items, pos) => {
            let head = items
                .first()
                .ok_or_else(|| malformed(*pos, "empty arithmetic application"))?;
            let op = head
                .as_sym()
                .ok_or_else(|| malformed(head.pos(), "operator must be a symbol"))?;
            let args = &items[1..];
            match op {
                "+" => {
                    let mut acc = LinTerm::constant(0);
                    for a in args {
                        acc = acc
                            .checked_add(&term(a, declared)?)
                            .ok_or(ParseError::Overflow { pos: a.pos() })?;
                    }
                    Ok(acc)
                }
                "-" => match args {
                    [] => Err(malformed(*pos, "`-` takes at least one argument")),
                    [only] => term(only, declared)?
                        .checked_scale(-1)
                        .ok_or(ParseError::Overflow { pos: *pos }),
                    [first, rest @ ..] => {
                        let mut acc = term(first, declared)?;
                        for a in rest {
                            acc = acc
                                .checked_sub(&term(a, declared)?)
                                .ok_or(ParseError::Overflow { pos: a.pos() })?;
                        }
                        Ok(acc)
                    }
                },
                "*" => {
                    let [lhs, rhs] = args else {
                        return Err(malformed(*pos, "`*` takes exactly two arguments"));
                    };
                    let l = term(lhs, declared)?;
                    let r = term(rhs, declared)?;
                    let (k, t) = if l.is_constant() {
                        (l.constant_part(), r)
                    } else if r.is_constant() {
                        (r.constant_part(), l)
                    } else {
                        return Err(ParseError::NotLinear { pos: *pos });
                    };
                    t.checked_scale(k).ok_or(ParseError::Overflow { pos: *pos })
                }
                _ => Err(malformed(
                    head.pos(),
                    format!("unknown arithmetic operator `{op}`"),
                )),
            }
        }
    }
}
