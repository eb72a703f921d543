//! SMT-LIB2 (QF_LIA) query generation and CHC (HORN) emission.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::formula::{prime_var, Formula, Int, LinTerm, PrimeError, Rel};
use crate::systems::SymbolicTS;

/// The three validity queries, each asserting the negation of one
/// inductiveness implication; `sat` means the condition fails.
#[derive(Debug, Clone)]
pub struct SmtQueries {
    pub initiation: String,
    pub consecution: String,
    pub safety: String,
}

/// A symbol is emitted verbatim when it is a simple SMT-LIB symbol and
/// `|`-quoted otherwise (primed names contain `'`).
fn smt_symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.as_bytes()[0].is_ascii_digit()
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b"~!@$%^&*_+=<>.?/-".contains(&b));
    if simple {
        name.to_owned()
    } else {
        format!("|{name}|")
    }
}

fn smt_int(v: Int) -> String {
    if v < 0 {
        format!("(- {})", v.unsigned_abs())
    } else {
        v.to_string()
    }
}

fn term_to_smt(t: &LinTerm) -> String {
    let mut parts: Vec<String> = t
        .coeffs()
        .map(|(v, c)| {
            let sym = smt_symbol(v);
            if c == 1 {
                sym
            } else {
                format!("(* {} {sym})", smt_int(c))
            }
        })
        .collect();
    if t.constant_part() != 0 || parts.is_empty() {
        parts.push(smt_int(t.constant_part()));
    }
    if parts.len() == 1 {
        parts.pop().expect("nonempty")
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

pub fn formula_to_smt(phi: &Formula) -> String {
    match phi {
        Formula::True => "true".to_owned(),
        Formula::False => "false".to_owned(),
        Formula::Atom(a) => {
            let l = term_to_smt(&a.lhs);
            let r = term_to_smt(&a.rhs);
            match a.rel {
                Rel::Le => format!("(<= {l} {r})"),
                Rel::Lt => format!("(< {l} {r})"),
                Rel::Eq => format!("(= {l} {r})"),
                Rel::Ge => format!("(>= {l} {r})"),
                Rel::Gt => format!("(> {l} {r})"),
                Rel::Ne => format!("(not (= {l} {r}))"),
            }
        }
        Formula::Not(f) => format!("(not {})", formula_to_smt(f)),
        Formula::And(fs) if fs.is_empty() => "true".to_owned(),
        Formula::Or(fs) if fs.is_empty() => "false".to_owned(),
        Formula::And(fs) => nary("and", fs),
        Formula::Or(fs) => nary("or", fs),
    }
}

fn nary(op: &str, fs: &[Formula]) -> String {
    let body: Vec<String> = fs.iter().map(formula_to_smt).collect();
    format!("({op} {})", body.join(" "))
}

/// A QF_LIA satisfiability query for `lhs /\ not rhs`; `unsat` means the
/// implication `lhs => rhs` is valid.
pub(crate) fn implication_query(lhs: &Formula, rhs: &Formula) -> String {
    let mut vars = lhs.free_vars();
    vars.extend(rhs.free_vars());
    build_query(&vars, lhs, rhs)
}

fn build_query(vars: &BTreeSet<String>, lhs: &Formula, rhs: &Formula) -> String {
    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n(set-logic QF_LIA)\n");
    for v in vars {
        let _ = writeln!(out, "(declare-const {} Int)", smt_symbol(v));
    }
    let _ = writeln!(out, "(assert {})", formula_to_smt(lhs));
    let _ = writeln!(out, "(assert (not {}))", formula_to_smt(rhs));
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

/// The three inductiveness queries for `inv` against `ts`, with every system
/// variable declared (primed copies too, for consecution).
pub fn emit_smt2(ts: &SymbolicTS, inv: &Formula) -> Result<SmtQueries, PrimeError> {
    let inv_primed = inv.prime()?;
    let base: BTreeSet<String> = ts.vars.iter().cloned().collect();
    let mut with_candidate = base.clone();
    with_candidate.extend(inv.free_vars());
    let mut stepped: BTreeSet<String> = with_candidate.clone();
    stepped.extend(with_candidate.iter().map(|v| prime_var(v)));
    let consecution_lhs = Formula::And(vec![inv.clone(), ts.tr.clone()]);
    Ok(SmtQueries {
        initiation: build_query(&with_candidate, &ts.init, inv),
        consecution: build_query(&stepped, &consecution_lhs, &inv_primed),
        safety: build_query(&with_candidate, inv, &ts.prop),
    })
}

/// A constrained-Horn-clause rendering of the invariant-existence question:
/// one uninterpreted predicate over the state tuple and three clauses.
pub fn emit_chc(ts: &SymbolicTS) -> String {
    let pred = "inv";
    let unprimed: Vec<String> = ts.vars.iter().map(|v| smt_symbol(v)).collect();
    let primed: Vec<String> = ts.vars.iter().map(|v| smt_symbol(&prime_var(v))).collect();
    let decl = |names: &[String]| {
        names
            .iter()
            .map(|n| format!("({n} Int)"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let app = |names: &[String]| format!("({pred} {})", names.join(" "));

    let mut out = String::new();
    out.push_str("(set-logic HORN)\n");
    let _ = writeln!(
        out,
        "(declare-fun {pred} ({}) Bool)",
        vec!["Int"; ts.vars.len()].join(" ")
    );
    let _ = writeln!(
        out,
        "(assert (forall ({}) (=> {} {})))",
        decl(&unprimed),
        formula_to_smt(&ts.init),
        app(&unprimed)
    );
    let _ = writeln!(
        out,
        "(assert (forall ({} {}) (=> (and {} {}) {})))",
        decl(&unprimed),
        decl(&primed),
        app(&unprimed),
        formula_to_smt(&ts.tr),
        app(&primed)
    );
    let _ = writeln!(
        out,
        "(assert (forall ({}) (=> (and {} (not {})) false)))",
        decl(&unprimed),
        app(&unprimed),
        formula_to_smt(&ts.prop)
    );
    out.push_str("(check-sat)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::lin;
    use crate::systems::{build_prog, encode_ts};

    #[test]
    fn terms_and_atoms_print_as_smt() {
        let phi = Formula::atom(lin(&[(2, "x"), (-1, "y1")], -3), Rel::Le, LinTerm::constant(0));
        assert_eq!(
            formula_to_smt(&phi),
            "(<= (+ (* 2 x) (* (- 1) y1) (- 3)) 0)"
        );
    }

    #[test]
    fn primed_symbols_are_quoted() {
        let phi = Formula::atom(LinTerm::var("z1'"), Rel::Eq, LinTerm::var("z1"));
        assert_eq!(formula_to_smt(&phi), "(= |z1'| z1)");
    }

    #[test]
    fn queries_declare_all_variables() {
        let ts = encode_ts(&build_prog());
        let queries = emit_smt2(&ts, &Formula::True).unwrap();
        for v in &ts.vars {
            assert!(queries.initiation.contains(&format!("(declare-const {v} Int)")));
            assert!(queries
                .consecution
                .contains(&format!("(declare-const |{v}'| Int)")));
        }
        assert!(queries.safety.contains("(check-sat)"));
        // The emitted scripts stay within our own s-expression grammar.
        for q in [&queries.initiation, &queries.consecution, &queries.safety] {
            crate::sexpr::parse_all(q).expect("query must be well-formed");
        }
    }

    #[test]
    fn chc_has_three_clauses_and_horn_logic() {
        let ts = encode_ts(&build_prog());
        let chc = emit_chc(&ts);
        assert!(chc.starts_with("(set-logic HORN)"));
        assert_eq!(chc.matches("(assert (forall").count(), 3);
        assert!(chc.contains("(declare-fun inv (Int Int Int Int Int Int) Bool)"));
        crate::sexpr::parse_all(&chc).expect("CHC output must be well-formed");
    }
}
