//! Integer-tight DNF: every cube is a negation-free conjunction of
//! non-strict `<=` rows, so its satisfying set is convex over the rationals
//! and closed under integer midpoints of its integer points.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{Assignment, Atom, EvalError, Formula, Int, LinTerm, Rel};

pub const DEFAULT_CUBE_CAP: usize = 200_000;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DnfError {
    #[error("cube count exceeded the cap of {cap}")]
    CapExceeded { cap: usize },
    #[error("integer overflow while normalizing an atom")]
    Overflow,
}

/// Canonical row `Σ coeffs·var <= bound` with gcd-reduced coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeAtom {
    coeffs: BTreeMap<String, Int>,
    bound: Int,
}

impl LeAtom {
    /// Canonicalizes `term <= bound`: strips the constant into the bound,
    /// divides by the coefficient gcd, and floors the bound (integer
    /// tightening). A constant row degenerates to `true`/`false`.
    pub fn canonicalize(term: &LinTerm, bound: Int) -> Result<RowForm, DnfError> {
        let bound = bound
            .checked_sub(term.constant_part())
            .ok_or(DnfError::Overflow)?;
        let mut coeffs: BTreeMap<String, Int> =
            term.coeffs().map(|(v, c)| (v.to_owned(), c)).collect();
        if coeffs.is_empty() {
            return Ok(if 0 <= bound {
                RowForm::True
            } else {
                RowForm::False
            });
        }
        let g = coeffs
            .values()
            .fold(0u128, |g, &c| gcd(g, c.unsigned_abs()));
        let g = Int::try_from(g).map_err(|_| DnfError::Overflow)?;
        if g > 1 {
            for c in coeffs.values_mut() {
                *c /= g;
            }
        }
        Ok(RowForm::Row(LeAtom {
            coeffs,
            bound: div_floor(bound, g),
        }))
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&str, Int)> {
        self.coeffs.iter().map(|(v, &c)| (v.as_str(), c))
    }

    pub fn bound(&self) -> Int {
        self.bound
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.coeffs.keys().map(|s| s.as_str())
    }

    pub fn holds(&self, sigma: &dyn Assignment) -> Result<bool, EvalError> {
        let mut acc: Int = 0;
        for (v, &c) in &self.coeffs {
            let val = sigma
                .lookup(v)
                .ok_or_else(|| EvalError::UnboundVariable(v.clone()))?;
            acc = c
                .checked_mul(val)
                .and_then(|t| acc.checked_add(t))
                .ok_or(EvalError::Overflow)?;
        }
        Ok(acc <= self.bound)
    }

    /// The row as a formula atom `Σ coeffs·var <= bound`.
    pub fn to_atom(&self) -> Atom {
        let mut term = LinTerm::constant(0);
        for (v, c) in self.coeffs() {
            term = term
                .checked_add(&LinTerm::with_coeff(c, v))
                .expect("canonical row coefficients cannot overflow");
        }
        Atom {
            lhs: term,
            rel: Rel::Le,
            rhs: LinTerm::constant(self.bound),
        }
    }
}

pub enum RowForm {
    True,
    False,
    Row(LeAtom),
}

/// Conjunction of canonical `<=` rows; empty means `true`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    atoms: Vec<LeAtom>,
}

impl Cube {
    pub fn top() -> Cube {
        Cube::default()
    }

    pub fn from_rows(mut atoms: Vec<LeAtom>) -> Cube {
        atoms.sort();
        atoms.dedup();
        Cube { atoms }
    }

    pub fn atoms(&self) -> &[LeAtom] {
        &self.atoms
    }

    pub fn sat(&self, sigma: &dyn Assignment) -> Result<bool, EvalError> {
        for a in &self.atoms {
            if !a.holds(sigma)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_formula(&self) -> Formula {
        Formula::And(self.atoms.iter().map(|a| Formula::Atom(a.to_atom())).collect())
    }

    /// Conjunction of two cubes.
    fn merge(&self, other: &Cube) -> Cube {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Cube::from_rows(atoms)
    }
}

/// True iff every atom of the cube holds under `sigma`.
pub fn cube_sat(cube: &Cube, sigma: &dyn Assignment) -> Result<bool, EvalError> {
    cube.sat(sigma)
}

/// Disjunction of cubes; an empty cube list means `false`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dnf {
    cubes: Vec<Cube>,
}

impl Dnf {
    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    /// Cube count, the `r` of pigeonhole arguments.
    pub fn r(&self) -> usize {
        self.cubes.len()
    }

    pub fn sat(&self, sigma: &dyn Assignment) -> Result<bool, EvalError> {
        for c in &self.cubes {
            if c.sat(sigma)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn to_formula(&self) -> Formula {
        Formula::Or(self.cubes.iter().map(Cube::to_formula).collect())
    }
}

/// Converts to DNF with negation-free cubes using integer tightening:
/// `not (t <= c)` becomes `-t <= -c-1`, `t < c` becomes `t <= c-1`,
/// `t = c` splits into two rows, and `t != c` splits into two cubes.
pub fn to_tight_dnf(phi: &Formula) -> Result<Dnf, DnfError> {
    to_tight_dnf_capped(phi, DEFAULT_CUBE_CAP)
}

pub fn to_tight_dnf_capped(phi: &Formula, cap: usize) -> Result<Dnf, DnfError> {
    let cubes = dnf_rec(phi, true, cap)?;
    Ok(Dnf { cubes })
}

fn dnf_rec(phi: &Formula, positive: bool, cap: usize) -> Result<Vec<Cube>, DnfError> {
    match phi {
        Formula::True => Ok(if positive { vec![Cube::top()] } else { vec![] }),
        Formula::False => Ok(if positive { vec![] } else { vec![Cube::top()] }),
        Formula::Not(f) => dnf_rec(f, !positive, cap),
        Formula::Atom(a) => atom_cubes(a, positive),
        Formula::And(fs) if positive => distribute(fs, true, cap),
        Formula::And(fs) => union(fs, false, cap),
        Formula::Or(fs) if positive => union(fs, true, cap),
        Formula::Or(fs) => distribute(fs, false, cap),
    }
}

fn union(fs: &[Formula], positive: bool, cap: usize) -> Result<Vec<Cube>, DnfError> {
    let mut out = Vec::new();
    for f in fs {
        out.extend(dnf_rec(f, positive, cap)?);
        if out.len() > cap {
            return Err(DnfError::CapExceeded { cap });
        }
    }
    Ok(out)
}

fn distribute(fs: &[Formula], positive: bool, cap: usize) -> Result<Vec<Cube>, DnfError> {
    let mut acc = vec![Cube::top()];
    for f in fs {
        let next = dnf_rec(f, positive, cap)?;
        let mut merged = Vec::with_capacity(acc.len().saturating_mul(next.len()));
        for a in &acc {
            for b in &next {
                merged.push(a.merge(b));
                if merged.len() > cap {
                    return Err(DnfError::CapExceeded { cap });
                }
            }
        }
        acc = merged;
    }
    Ok(acc)
}

/// Cubes equivalent to the atom (or its negation when `positive` is false).
fn atom_cubes(a: &Atom, positive: bool) -> Result<Vec<Cube>, DnfError> {
    let rel = if positive { a.rel } else { a.rel.complement() };
    let diff = a.lhs.checked_sub(&a.rhs).ok_or(DnfError::Overflow)?;
    let neg = diff.checked_scale(-1).ok_or(DnfError::Overflow)?;
    // Everything reduces to rows `t <= c` over the difference `lhs - rhs`.
    let rows: Vec<Vec<RowForm>> = match rel {
        Rel::Le => vec![vec![LeAtom::canonicalize(&diff, 0)?]],
        Rel::Lt => vec![vec![LeAtom::canonicalize(&diff, -1)?]],
        Rel::Ge => vec![vec![LeAtom::canonicalize(&neg, 0)?]],
        Rel::Gt => vec![vec![LeAtom::canonicalize(&neg, -1)?]],
        Rel::Eq => vec![vec![LeAtom::canonicalize(&diff, 0)?, LeAtom::canonicalize(&neg, 0)?]],
        Rel::Ne => vec![vec![LeAtom::canonicalize(&diff, -1)?], vec![LeAtom::canonicalize(&neg, -1)?]],
    };
    let mut cubes = Vec::new();
    'cube: for cube_rows in rows {
        let mut atoms = Vec::new();
        for row in cube_rows {
            match row {
                RowForm::True => {}
                RowForm::False => continue 'cube,
                RowForm::Row(r) => atoms.push(r),
            }
        }
        cubes.push(Cube::from_rows(atoms));
    }
    Ok(cubes)
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn div_floor(a: Int, b: Int) -> Int {
    debug_assert!(b > 0);
    if b == 1 {
        return a;
    }
    let q = a / b;
    if a % b < 0 {
        q - 1
    } else {
        q
    }
}
