//! Printer for the concrete formula syntax. `parse(print(phi))` is
//! structurally equal to `phi` (implications print as `(or (not ..) ..)`).

use std::fmt;

use super::{Atom, Formula, LinTerm, Rel};

pub fn print_formula(phi: &Formula) -> String {
    phi.to_string()
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rel::Le => "<=",
            Rel::Lt => "<",
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
            Rel::Ne => "!=",
        };
        f.write_str(s)
    }
}

impl fmt::Display for LinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .coeffs()
            .map(|(v, c)| if c == 1 { v.to_owned() } else { format!("(* {c} {v})") })
            .collect();
        if self.constant_part() != 0 || parts.is_empty() {
            parts.push(self.constant_part().to_string());
        }
        if parts.len() == 1 {
            f.write_str(&parts[0])
        } else {
            write!(f, "(+ {})", parts.join(" "))
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {})", self.rel, self.lhs, self.rhs)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(a) => a.fmt(f),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(fs) => write_nary(f, "and", fs),
            Formula::Or(fs) => write_nary(f, "or", fs),
        }
    }
}

fn write_nary(f: &mut fmt::Formatter<'_>, op: &str, fs: &[Formula]) -> fmt::Result {
    write!(f, "({op}")?;
    for g in fs {
        write!(f, " {g}")?;
    }
    f.write_str(")")
}
