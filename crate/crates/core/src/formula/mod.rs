//! Quantifier-free linear integer arithmetic: syntax, evaluation, priming,
//! tight DNF normalization, and a concrete s-expression syntax.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

mod dnf;
mod parse;
mod print;

pub use dnf::{
    cube_sat, to_tight_dnf, to_tight_dnf_capped, Cube, Dnf, DnfError, LeAtom, DEFAULT_CUBE_CAP,
};
pub use parse::{parse_formula, parse_formula_with_vars, ParseError};
pub use print::print_formula;

/// All arithmetic is checked 128-bit; overflow is reported, never wrapped.
pub type Int = i128;

pub const PRIME_MARK: char = '\'';

/// Total (partial, from the formula's point of view) integer assignment.
pub trait Assignment {
    fn lookup(&self, var: &str) -> Option<Int>;
}

impl Assignment for BTreeMap<String, Int> {
    fn lookup(&self, var: &str) -> Option<Int> {
        self.get(var).copied()
    }
}

impl Assignment for HashMap<String, Int> {
    fn lookup(&self, var: &str) -> Option<Int> {
        self.get(var).copied()
    }
}

impl<A: Assignment + ?Sized> Assignment for &A {
    fn lookup(&self, var: &str) -> Option<Int> {
        (**self).lookup(var)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("variable `{0}` is not bound by the assignment")]
    UnboundVariable(String),
    #[error("integer overflow during evaluation")]
    Overflow,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PrimeError {
    #[error("formula already mentions primed variable `{0}`")]
    AlreadyPrimed(String),
    #[error("cannot unprime: variable `{0}` is not primed")]
    NotPrimed(String),
}

/// Linear term `Σ coeff·var + constant` with exact integer coefficients.
///
/// Canonical form: no zero coefficient is ever stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinTerm {
    coeffs: BTreeMap<String, Int>,
    constant: Int,
}

impl LinTerm {
    pub fn constant(c: Int) -> Self {
        LinTerm {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Self::with_coeff(1, name)
    }

    pub fn with_coeff(coeff: Int, name: impl Into<String>) -> Self {
        let mut coeffs = BTreeMap::new();
        if coeff != 0 {
            coeffs.insert(name.into(), coeff);
        }
        LinTerm {
            coeffs,
            constant: 0,
        }
    }

    pub fn constant_part(&self) -> Int {
        self.constant
    }

    pub fn coeff(&self, var: &str) -> Int {
        self.coeffs.get(var).copied().unwrap_or(0)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&str, Int)> {
        self.coeffs.iter().map(|(v, &c)| (v.as_str(), c))
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.coeffs.keys().map(|s| s.as_str())
    }

    pub fn checked_add(&self, other: &LinTerm) -> Option<LinTerm> {
        let mut coeffs = self.coeffs.clone();
        for (v, &c) in &other.coeffs {
            let entry = coeffs.entry(v.clone()).or_insert(0);
            *entry = entry.checked_add(c)?;
            if *entry == 0 {
                coeffs.remove(v);
            }
        }
        Some(LinTerm {
            coeffs,
            constant: self.constant.checked_add(other.constant)?,
        })
    }

    pub fn checked_sub(&self, other: &LinTerm) -> Option<LinTerm> {
        self.checked_add(&other.checked_scale(-1)?)
    }

    pub fn checked_scale(&self, k: Int) -> Option<LinTerm> {
        if k == 0 {
            return Some(LinTerm::constant(0));
        }
        let mut coeffs = BTreeMap::new();
        for (v, &c) in &self.coeffs {
            coeffs.insert(v.clone(), c.checked_mul(k)?);
        }
        Some(LinTerm {
            coeffs,
            constant: self.constant.checked_mul(k)?,
        })
    }

    pub fn eval(&self, sigma: &dyn Assignment) -> Result<Int, EvalError> {
        let mut acc = self.constant;
        for (v, &c) in &self.coeffs {
            let val = sigma
                .lookup(v)
                .ok_or_else(|| EvalError::UnboundVariable(v.clone()))?;
            let term = c.checked_mul(val).ok_or(EvalError::Overflow)?;
            acc = acc.checked_add(term).ok_or(EvalError::Overflow)?;
        }
        Ok(acc)
    }

    fn rename(&self, f: &mut dyn FnMut(&str) -> String) -> LinTerm {
        LinTerm {
            coeffs: self.coeffs.iter().map(|(v, &c)| (f(v), c)).collect(),
            constant: self.constant,
        }
    }
}

/// Builds `Σ coeff·var + constant` from small fixture-sized inputs.
pub fn lin(terms: &[(Int, &str)], constant: Int) -> LinTerm {
    let mut acc = LinTerm::constant(constant);
    for &(c, v) in terms {
        acc = acc
            .checked_add(&LinTerm::with_coeff(c, v))
            .expect("linear term coefficient overflow");
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rel {
    Le,
    Lt,
    Eq,
    Ge,
    Gt,
    Ne,
}

impl Rel {
    /// The relation equivalent to the negation of `self`.
    pub fn complement(self) -> Rel {
        match self {
            Rel::Le => Rel::Gt,
            Rel::Lt => Rel::Ge,
            Rel::Eq => Rel::Ne,
            Rel::Ge => Rel::Lt,
            Rel::Gt => Rel::Le,
            Rel::Ne => Rel::Eq,
        }
    }

    pub fn holds(self, lhs: Int, rhs: Int) -> bool {
        match self {
            Rel::Le => lhs <= rhs,
            Rel::Lt => lhs < rhs,
            Rel::Eq => lhs == rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Gt => lhs > rhs,
            Rel::Ne => lhs != rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub lhs: LinTerm,
    pub rel: Rel,
    pub rhs: LinTerm,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    /// Empty conjunction is `true`.
    And(Vec<Formula>),
    /// Empty disjunction is `false`.
    Or(Vec<Formula>),
}

impl Formula {
    pub fn atom(lhs: LinTerm, rel: Rel, rhs: LinTerm) -> Formula {
        Formula::Atom(Atom { lhs, rel, rhs })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(lhs: Formula, rhs: Formula) -> Formula {
        Formula::Or(vec![Formula::not(lhs), rhs])
    }

    pub fn eval(&self, sigma: &dyn Assignment) -> Result<bool, EvalError> {
        match self {
            Formula::True => Ok(true),
            Formula::False => Ok(false),
            Formula::Atom(a) => Ok(a.rel.holds(a.lhs.eval(sigma)?, a.rhs.eval(sigma)?)),
            Formula::Not(f) => Ok(!f.eval(sigma)?),
            Formula::And(fs) => {
                for f in fs {
                    if !f.eval(sigma)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(fs) => {
                for f in fs {
                    if f.eval(sigma)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                out.extend(a.lhs.vars().map(str::to_owned));
                out.extend(a.rhs.vars().map(str::to_owned));
            }
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_vars(out);
                }
            }
        }
    }

    /// Renames every variable `v` to `v'`.
    pub fn prime(&self) -> Result<Formula, PrimeError> {
        if let Some(v) = self.free_vars().iter().find(|v| is_primed(v)) {
            return Err(PrimeError::AlreadyPrimed(v.clone()));
        }
        Ok(self.rename(&mut |v| prime_var(v)))
    }

    /// Inverse of [`Formula::prime`]; every variable must be primed.
    pub fn unprime(&self) -> Result<Formula, PrimeError> {
        if let Some(v) = self.free_vars().iter().find(|v| !is_primed(v)) {
            return Err(PrimeError::NotPrimed(v.clone()));
        }
        Ok(self.rename(&mut |v| v[..v.len() - 1].to_owned()))
    }

    fn rename(&self, f: &mut dyn FnMut(&str) -> String) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(a) => Formula::Atom(Atom {
                lhs: a.lhs.rename(f),
                rel: a.rel,
                rhs: a.rhs.rename(f),
            }),
            Formula::Not(g) => Formula::not(g.rename(f)),
            Formula::And(fs) => Formula::And(fs.iter().map(|g| g.rename(f)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|g| g.rename(f)).collect()),
        }
    }
}

pub fn is_primed(var: &str) -> bool {
    var.ends_with(PRIME_MARK)
}

pub fn prime_var(var: &str) -> String {
    format!("{var}{PRIME_MARK}")
}

/// Looks up primed variables in `post` and unprimed ones in `pre`.
pub struct StepAssignment<'a> {
    pub pre: &'a dyn Assignment,
    pub post: &'a dyn Assignment,
}

impl Assignment for StepAssignment<'_> {
    fn lookup(&self, var: &str) -> Option<Int> {
        match var.strip_suffix(PRIME_MARK) {
            Some(base) => self.post.lookup(base),
            None => self.pre.lookup(var),
        }
    }
}

#[cfg(test)]
pub(crate) fn asg(pairs: &[(&str, Int)]) -> BTreeMap<String, Int> {
    pairs.iter().map(|&(v, x)| (v.to_owned(), x)).collect()
}
