//! Bounded countermodel search: enumerates the integer points of each
//! premise cube inside the box `|v| <= bound`, propagating row bounds, and
//! evaluates the conclusion at every surviving point. Sound for
//! countermodels only; it never claims validity.

use std::collections::HashMap;

use crate::formula::{
    to_tight_dnf_capped, Assignment, Cube, DnfError, Formula, Int, DEFAULT_CUBE_CAP,
};

use super::{replay, CheckError, ImplicationOutcome, Model};

#[derive(Debug, Clone)]
pub struct BoundedCfg {
    /// Box radius: every variable ranges over `[-bound, bound]`.
    pub bound: Int,
    /// Cap on the premise's tight-DNF size.
    pub cube_cap: usize,
    /// Cap on assignment attempts across the whole search.
    pub node_budget: u64,
}

impl Default for BoundedCfg {
    fn default() -> Self {
        BoundedCfg {
            bound: 8,
            cube_cap: DEFAULT_CUBE_CAP,
            node_budget: 4_000_000,
        }
    }
}

impl BoundedCfg {
    pub fn with_bound(bound: Int) -> Self {
        BoundedCfg {
            bound,
            ..Self::default()
        }
    }
}

/// Searches the box for a point satisfying `lhs` and falsifying `rhs`.
pub fn countermodel(
    lhs: &Formula,
    rhs: &Formula,
    cfg: &BoundedCfg,
) -> Result<ImplicationOutcome, CheckError> {
    let dnf = match to_tight_dnf_capped(lhs, cfg.cube_cap) {
        Ok(d) => d,
        Err(DnfError::CapExceeded { cap }) => {
            return Ok(ImplicationOutcome::Unknown(format!(
                "premise normal form exceeded {cap} cubes"
            )))
        }
        Err(DnfError::Overflow) => {
            return Ok(ImplicationOutcome::Unknown(
                "overflow while normalizing the premise".to_owned(),
            ))
        }
    };
    let mut all_vars = lhs.free_vars();
    all_vars.extend(rhs.free_vars());
    let all_vars: Vec<String> = all_vars.into_iter().collect();

    let mut budget = cfg.node_budget;
    for cube in dnf.cubes() {
        let mut search = Search::new(cube, &all_vars, rhs, cfg.bound);
        match search.run(&mut budget)? {
            SearchResult::Found(model) => {
                replay(lhs, rhs, &model, "bounded")?;
                return Ok(ImplicationOutcome::Countermodel(model));
            }
            SearchResult::NotFound => {}
            SearchResult::BudgetExhausted => {
                return Ok(ImplicationOutcome::Unknown(
                    "node budget exhausted".to_owned(),
                ))
            }
        }
    }
    Ok(ImplicationOutcome::Unknown(format!(
        "no countermodel with every |v| <= {}",
        cfg.bound
    )))
}

enum SearchResult {
    Found(Model),
    NotFound,
    BudgetExhausted,
}

struct Row {
    bound: Int,
    /// Sum over assigned variables.
    sum: Int,
    /// Least possible contribution of the unassigned variables.
    min_rest: Int,
}

struct Search<'a> {
    vars: Vec<String>,
    values: Vec<Option<Int>>,
    rows: Vec<Row>,
    /// For each variable: the rows it occurs in and its coefficient there.
    var_rows: Vec<Vec<(usize, Int)>>,
    rhs: &'a Formula,
    /// Depth at which every free variable of `rhs` is assigned; the
    /// conclusion is decided once there and the subtree pruned if it holds.
    rhs_complete_at: usize,
    box_bound: Int,
    overflow: bool,
}

struct SearchEnv<'a> {
    index: &'a HashMap<&'a str, usize>,
    values: &'a [Option<Int>],
}

impl Assignment for SearchEnv<'_> {
    fn lookup(&self, var: &str) -> Option<Int> {
        self.index.get(var).and_then(|&i| self.values[i])
    }
}

// Magnitude gates keeping all row arithmetic comfortably inside `Int`:
// |coeff·bound| <= 2^61 and row sums over <= 2^20 terms stay below 2^81.
const MAX_COEFF: Int = 1 << 40;
const MAX_ROW_BOUND: Int = 1 << 80;
const MAX_BOX: Int = 1 << 20;

impl<'a> Search<'a> {
    fn new(cube: &Cube, all_vars: &[String], rhs: &'a Formula, box_bound: Int) -> Self {
        // Cube variables first, in first-appearance order, so equalities
        // propagate as soon as their inputs are fixed.
        let mut vars: Vec<String> = Vec::new();
        for atom in cube.atoms() {
            for v in atom.vars() {
                if !vars.iter().any(|u| u == v) {
                    vars.push(v.to_owned());
                }
            }
        }
        for v in all_vars {
            if !vars.iter().any(|u| u == v) {
                vars.push(v.clone());
            }
        }
        let positions: HashMap<&str, usize> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let rhs_complete_at = rhs
            .free_vars()
            .iter()
            .map(|v| positions[v.as_str()] + 1)
            .max()
            .unwrap_or(0);

        let mut rows = Vec::new();
        let mut var_rows = vec![Vec::new(); vars.len()];
        let mut overflow = !(0..=MAX_BOX).contains(&box_bound) || vars.len() > (1 << 20);
        for atom in cube.atoms() {
            let mut min_rest: Int = 0;
            if atom.bound().unsigned_abs() > MAX_ROW_BOUND as u128 {
                overflow = true;
            }
            for (v, c) in atom.coeffs() {
                let i = positions[v];
                var_rows[i].push((rows.len(), c));
                if c.unsigned_abs() > MAX_COEFF as u128 {
                    overflow = true;
                } else if !overflow {
                    min_rest -= c.abs() * box_bound;
                }
            }
            rows.push(Row {
                bound: atom.bound(),
                sum: 0,
                min_rest,
            });
        }
        Search {
            values: vec![None; vars.len()],
            vars,
            rows,
            var_rows,
            rhs,
            rhs_complete_at,
            box_bound,
            overflow,
        }
    }

    fn eval_rhs(&self) -> Result<bool, CheckError> {
        let index: HashMap<&str, usize> = self
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let env = SearchEnv {
            index: &index,
            values: &self.values,
        };
        Ok(self.rhs.eval(&env)?)
    }

    fn run(&mut self, budget: &mut u64) -> Result<SearchResult, CheckError> {
        if self.overflow {
            // coefficients too large for box arithmetic; report nothing
            return Ok(SearchResult::NotFound);
        }
        self.dive(0, budget)
    }

    fn dive(&mut self, depth: usize, budget: &mut u64) -> Result<SearchResult, CheckError> {
        if depth == self.rhs_complete_at && depth < self.vars.len() {
            // The conclusion no longer depends on the remaining variables.
            if self.eval_rhs()? {
                return Ok(SearchResult::NotFound);
            }
        }
        if depth == self.vars.len() {
            // Bound propagation is exact, but re-check the rows anyway.
            if self.rows.iter().any(|r| r.sum > r.bound) {
                return Ok(SearchResult::NotFound);
            }
            if self.rhs_complete_at == self.vars.len() && self.eval_rhs()? {
                return Ok(SearchResult::NotFound);
            }
            let model: Model = self
                .vars
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), self.values[i].expect("leaf is total")))
                .collect();
            return Ok(SearchResult::Found(model));
        }

        let (mut lo, mut hi) = (-self.box_bound, self.box_bound);
        for &(row_idx, coeff) in &self.var_rows[depth] {
            let row = &self.rows[row_idx];
            // Least contribution of the other unassigned variables.
            let min_other = row.min_rest + coeff.abs() * self.box_bound;
            let budget_for_var = row.bound - row.sum - min_other;
            if coeff > 0 {
                hi = hi.min(div_floor(budget_for_var, coeff));
            } else {
                lo = lo.max(div_ceil(budget_for_var, coeff));
            }
        }

        let mut value = lo;
        while value <= hi {
            if *budget == 0 {
                return Ok(SearchResult::BudgetExhausted);
            }
            *budget -= 1;
            self.assign(depth, value);
            let result = self.dive(depth + 1, budget)?;
            self.unassign(depth, value);
            match result {
                SearchResult::NotFound => {}
                found_or_exhausted => return Ok(found_or_exhausted),
            }
            value += 1;
        }
        Ok(SearchResult::NotFound)
    }

    fn assign(&mut self, depth: usize, value: Int) {
        self.values[depth] = Some(value);
        for &(row_idx, coeff) in &self.var_rows[depth] {
            let row = &mut self.rows[row_idx];
            row.sum += coeff * value;
            row.min_rest += coeff.abs() * self.box_bound;
        }
    }

    fn unassign(&mut self, depth: usize, value: Int) {
        self.values[depth] = None;
        for &(row_idx, coeff) in &self.var_rows[depth] {
            let row = &mut self.rows[row_idx];
            row.sum -= coeff * value;
            row.min_rest -= coeff.abs() * self.box_bound;
        }
    }
}

fn div_floor(a: Int, b: Int) -> Int {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: Int, b: Int) -> Int {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{lin, parse_formula, LinTerm, Rel};

    fn run(lhs: &str, rhs: &str) -> ImplicationOutcome {
        countermodel(
            &parse_formula(lhs).unwrap(),
            &parse_formula(rhs).unwrap(),
            &BoundedCfg::default(),
        )
        .unwrap()
    }

    #[test]
    fn finds_simple_countermodel() {
        match run("(>= x 0)", "(> x 0)") {
            ImplicationOutcome::Countermodel(m) => assert_eq!(m["x"], 0),
            other => panic!("expected countermodel, got {other:?}"),
        }
    }

    #[test]
    fn equality_chain_propagates() {
        // z2 = 2x and x = 3 pin z2; conclusion z2 = 7 must fail at x = 3.
        match run("(and (= z2 (* 2 x)) (= x 3))", "(= z2 7)") {
            ImplicationOutcome::Countermodel(m) => {
                assert_eq!(m["x"], 3);
                assert_eq!(m["z2"], 6);
            }
            other => panic!("expected countermodel, got {other:?}"),
        }
    }

    #[test]
    fn exhausts_box_without_false_positive() {
        let out = run("(> x 0)", "(>= x 1)");
        assert!(matches!(out, ImplicationOutcome::Unknown(ref s) if s.contains("<= 8")), "{out:?}");
    }

    #[test]
    fn infeasible_premise_cube_is_skipped() {
        // x > 8 has no point in the box
        let out = run("(> x 8)", "false");
        assert!(matches!(out, ImplicationOutcome::Unknown(_)));
    }

    #[test]
    fn node_budget_reports_unknown() {
        let cfg = BoundedCfg {
            node_budget: 10,
            ..BoundedCfg::default()
        };
        let lhs = Formula::True;
        // Valid conclusion, so the search must visit the whole box; the
        // budget cuts it short.
        let rhs = parse_formula("(and (= a a) (= b b) (= c c) (= d d))").unwrap();
        let out = countermodel(&lhs, &rhs, &cfg).unwrap();
        assert!(matches!(out, ImplicationOutcome::Unknown(ref s) if s.contains("budget")));
    }

    #[test]
    fn negative_coefficient_bounds() {
        // -3x <= -12, i.e. x >= 4; countermodel needs the lower bound honored.
        let lhs = Formula::atom(lin(&[(-3, "x")], 0), Rel::Le, LinTerm::constant(-12));
        let rhs = Formula::atom(LinTerm::var("x"), Rel::Ge, LinTerm::constant(6));
        match countermodel(&lhs, &rhs, &BoundedCfg::default()).unwrap() {
            ImplicationOutcome::Countermodel(m) => {
                assert!(m["x"] >= 4 && m["x"] < 6);
            }
            other => panic!("expected countermodel, got {other:?}"),
        }
    }

    #[test]
    fn division_helpers() {
        assert_eq!(div_floor(7, 2), 3);
        assert_eq!(div_floor(-7, 2), -4);
        assert_eq!(div_floor(7, -2), -4);
        assert_eq!(div_ceil(7, 2), 4);
        assert_eq!(div_ceil(-7, 2), -3);
        assert_eq!(div_ceil(-7, -2), 4);
    }
}
