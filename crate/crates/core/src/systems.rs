//! Guarded-update transition systems: the two-loop squaring program, its
//! lockstep product with a counter machine, exact simulation, closed-form
//! step-indexed state families, and the symbolic (Init, TR, Prop) encoding.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::formula::{lin, Assignment, EvalError, Formula, Int, LinTerm, Rel};
use crate::minsky::{Instr, MinskyMachine, MinskyTrace, Reg};

pub const PC_START: Int = 0;
pub const PC_LOOP_ONE: Int = 1;
pub const PC_LOOP_TWO: Int = 2;
pub const PC_END: Int = 3;

pub const PROG_VARS: [&str; 6] = ["pc", "x", "z1", "z2", "y1", "y2"];
pub const PRODUCT_VARS: [&str; 9] = ["pc", "x", "z1", "z2", "y1", "y2", "c1", "c2", "q"];

/// Positions in the fixed variable tuple (shared prefix for both systems).
pub const V_PC: usize = 0;
pub const V_X: usize = 1;
pub const V_Z1: usize = 2;
pub const V_Z2: usize = 3;
pub const V_Y1: usize = 4;
pub const V_Y2: usize = 5;
pub const V_C1: usize = 6;
pub const V_C2: usize = 7;
pub const V_Q: usize = 8;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SystemsError {
    #[error("nondeterministic step: rules `{0}` and `{1}` are both enabled")]
    Nondeterminism(String, String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("initial value of x must be positive, got {0}")]
    NonPositiveInput(Int),
    #[error("machine trace does not cover step {t}")]
    TraceTooShort { t: usize },
    #[error("closed-form family requires t >= 1 and n >= 1")]
    BadFamilyIndex,
    #[error("integer overflow while constructing a state")]
    Overflow,
}

/// Total assignment to the system's variable tuple, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State(pub Vec<Int>);

impl State {
    pub fn values(&self) -> &[Int] {
        &self.0
    }
}

/// One guarded update; variables absent from `update` keep their value.
#[derive(Debug, Clone)]
pub struct Rule {
    pub name: String,
    pub guard: Formula,
    pub update: BTreeMap<String, LinTerm>,
}

/// Deterministic guarded-update system over a fixed variable tuple.
#[derive(Debug, Clone)]
pub struct ProgramIR {
    name: String,
    vars: Vec<String>,
    index: HashMap<String, usize>,
    init: Formula,
    init_template: Vec<LinTerm>,
    rules: Vec<Rule>,
    prop: Formula,
}

/// QFLIA encoding of a [`ProgramIR`]: `TR` ranges over vars and primed vars.
#[derive(Debug, Clone)]
pub struct SymbolicTS {
    pub vars: Vec<String>,
    pub init: Formula,
    pub tr: Formula,
    pub prop: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Next(State),
    Stuck,
}

/// Looks a state's variables up by name.
pub struct StateEnv<'a> {
    ir: &'a ProgramIR,
    state: &'a State,
}

impl Assignment for StateEnv<'_> {
    fn lookup(&self, var: &str) -> Option<Int> {
        self.ir
            .index
            .get(var)
            .and_then(|&i| self.state.0.get(i))
            .copied()
    }
}

/// Assignment view of a state against a fixed variable tuple, without an IR.
pub struct TupleEnv<'a> {
    pub vars: &'a [&'a str],
    pub state: &'a State,
}

impl Assignment for TupleEnv<'_> {
    fn lookup(&self, var: &str) -> Option<Int> {
        self.vars
            .iter()
            .position(|v| *v == var)
            .and_then(|i| self.state.0.get(i))
            .copied()
    }
}

impl ProgramIR {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, var: &str) -> Option<usize> {
        self.index.get(var).copied()
    }

    pub fn init(&self) -> &Formula {
        &self.init
    }

    pub fn prop(&self) -> &Formula {
        &self.prop
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn env<'a>(&'a self, state: &'a State) -> StateEnv<'a> {
        StateEnv { ir: self, state }
    }

    pub fn eval_state(&self, phi: &Formula, state: &State) -> Result<bool, EvalError> {
        phi.eval(&self.env(state))
    }

    /// Evaluates a formula over vars and primed vars on a step `(pre, post)`.
    pub fn eval_step(&self, phi: &Formula, pre: &State, post: &State) -> Result<bool, EvalError> {
        let pre_env = self.env(pre);
        let post_env = self.env(post);
        phi.eval(&crate::formula::StepAssignment {
            pre: &pre_env,
            post: &post_env,
        })
    }

    /// The unique initial state with the given input.
    pub fn initial_state(&self, x: Int) -> Result<State, SystemsError> {
        if x <= 0 {
            return Err(SystemsError::NonPositiveInput(x));
        }
        let sigma: BTreeMap<String, Int> = [("x".to_owned(), x)].into();
        let values = self
            .init_template
            .iter()
            .map(|t| t.eval(&sigma))
            .collect::<Result<Vec<_>, _>>()?;
        let state = State(values);
        debug_assert_eq!(self.eval_state(&self.init, &state), Ok(true));
        Ok(state)
    }

    /// Applies the unique enabled rule, if any.
    pub fn macro_step(&self, state: &State) -> Result<StepOutcome, SystemsError> {
        let mut enabled: Option<&Rule> = None;
        for rule in &self.rules {
            if self.eval_state(&rule.guard, state)? {
                if let Some(prev) = enabled {
                    return Err(SystemsError::Nondeterminism(
                        prev.name.clone(),
                        rule.name.clone(),
                    ));
                }
                enabled = Some(rule);
            }
        }
        let Some(rule) = enabled else {
            return Ok(StepOutcome::Stuck);
        };
        let env = self.env(state);
        let mut next = state.0.clone();
        for (var, term) in &rule.update {
            let i = self.index[var];
            next[i] = term.eval(&env)?;
        }
        Ok(StepOutcome::Next(State(next)))
    }

    /// Deterministic trace from the initial state with input `x`; a stuck
    /// state ends the trace early.
    pub fn reachable(&self, x: Int, t_max: usize) -> Result<Vec<State>, SystemsError> {
        let mut states = vec![self.initial_state(x)?];
        for _ in 0..t_max {
            match self.macro_step(states.last().expect("nonempty"))? {
                StepOutcome::Next(next) => states.push(next),
                StepOutcome::Stuck => break,
            }
        }
        Ok(states)
    }
}

fn var_term(v: &str) -> LinTerm {
    LinTerm::var(v)
}

fn atom(v: &str, rel: Rel, rhs: LinTerm) -> Formula {
    Formula::atom(var_term(v), rel, rhs)
}

fn eq_const(v: &str, c: Int) -> Formula {
    atom(v, Rel::Eq, LinTerm::constant(c))
}

fn updates(pairs: &[(&str, LinTerm)]) -> BTreeMap<String, LinTerm> {
    pairs
        .iter()
        .map(|(v, t)| ((*v).to_owned(), t.clone()))
        .collect()
}

fn rule(name: &str, guard: Formula, update: BTreeMap<String, LinTerm>) -> Rule {
    Rule {
        name: name.to_owned(),
        guard,
        update,
    }
}

/// The program-side rules. One transition per loop-body iteration; a loop
/// exit is fused with the first iteration of the next phase, and an already
/// non-positive `z2` skips the second loop entirely.
fn prog_rules() -> Vec<Rule> {
    let dec = |v: &str| lin(&[(1, v)], -1);
    let add_x = |v: &str| lin(&[(1, v), (1, "x")], 0);
    vec![
        rule(
            "enter-loop1",
            eq_const("pc", PC_START),
            updates(&[
                ("pc", LinTerm::constant(PC_LOOP_ONE)),
                ("z1", dec("z1")),
                ("y1", add_x("y1")),
            ]),
        ),
        rule(
            "loop1-iter",
            Formula::And(vec![
                eq_const("pc", PC_LOOP_ONE),
                atom("z1", Rel::Gt, LinTerm::constant(0)),
            ]),
            updates(&[("z1", dec("z1")), ("y1", add_x("y1"))]),
        ),
        rule(
            "enter-loop2",
            Formula::And(vec![
                eq_const("pc", PC_LOOP_ONE),
                atom("z1", Rel::Le, LinTerm::constant(0)),
            ]),
            updates(&[
                ("pc", LinTerm::constant(PC_LOOP_TWO)),
                ("z2", dec("z2")),
                ("y2", add_x("y2")),
            ]),
        ),
        rule(
            "loop2-iter",
            Formula::And(vec![
                eq_const("pc", PC_LOOP_TWO),
                atom("z2", Rel::Gt, LinTerm::constant(1)),
            ]),
            updates(&[("z2", dec("z2")), ("y2", add_x("y2"))]),
        ),
        rule(
            "loop2-final",
            Formula::And(vec![
                eq_const("pc", PC_LOOP_TWO),
                eq_const("z2", 1),
            ]),
            updates(&[
                ("pc", LinTerm::constant(PC_END)),
                ("z2", LinTerm::constant(0)),
                ("y2", add_x("y2")),
            ]),
        ),
        rule(
            "loop2-skip",
            Formula::And(vec![
                eq_const("pc", PC_LOOP_TWO),
                atom("z2", Rel::Le, LinTerm::constant(0)),
            ]),
            updates(&[("pc", LinTerm::constant(PC_END))]),
        ),
    ]
}

fn prog_init_formula() -> Vec<Formula> {
    vec![
        eq_const("pc", PC_START),
        atom("x", Rel::Gt, LinTerm::constant(0)),
        atom("z1", Rel::Eq, var_term("x")),
        atom("z2", Rel::Eq, lin(&[(2, "x")], 0)),
        eq_const("y1", 0),
        eq_const("y2", 0),
    ]
}

fn prog_init_template() -> Vec<LinTerm> {
    vec![
        LinTerm::constant(PC_START),
        var_term("x"),
        var_term("x"),
        lin(&[(2, "x")], 0),
        LinTerm::constant(0),
        LinTerm::constant(0),
    ]
}

fn prog_prop() -> Formula {
    Formula::implies(
        eq_const("pc", PC_END),
        atom("y2", Rel::Eq, lin(&[(2, "y1")], 0)),
    )
}

fn make_ir(name: &str, vars: &[&str], init: Formula, template: Vec<LinTerm>, rules: Vec<Rule>, prop: Formula) -> ProgramIR {
    let vars: Vec<String> = vars.iter().map(|v| (*v).to_owned()).collect();
    let index = vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), i))
        .collect();
    ProgramIR {
        name: name.to_owned(),
        vars,
        index,
        init,
        init_template: template,
        rules,
        prop,
    }
}

/// The two-loop squaring program as a transition system over
/// `(pc, x, z1, z2, y1, y2)`.
pub fn build_prog() -> ProgramIR {
    make_ir(
        "ts_prog",
        &PROG_VARS,
        Formula::And(prog_init_formula()),
        prog_init_template(),
        prog_rules(),
        prog_prop(),
    )
}

struct MachineRule {
    name: String,
    guard: Vec<Formula>,
    update: Vec<(&'static str, LinTerm)>,
}

fn machine_rules(m: &MinskyMachine) -> Vec<MachineRule> {
    let reg_name = |r: Reg| match r {
        Reg::C1 => "c1",
        Reg::C2 => "c2",
    };
    let mut rules = Vec::new();
    for (idx, instr) in m.instrs().iter().enumerate() {
        let i = idx + 1;
        let at_i = eq_const("q", i as Int);
        match *instr {
            Instr::Inc(r) => {
                let c = reg_name(r);
                rules.push(MachineRule {
                    name: format!("q{i}-inc-{c}"),
                    guard: vec![at_i],
                    update: vec![
                        (c, lin(&[(1, c)], 1)),
                        ("q", LinTerm::constant((i + 1) as Int)),
                    ],
                });
            }
            Instr::Dec(r) => {
                let c = reg_name(r);
                rules.push(MachineRule {
                    name: format!("q{i}-dec-{c}"),
                    guard: vec![at_i, atom(c, Rel::Ge, LinTerm::constant(1))],
                    update: vec![
                        (c, lin(&[(1, c)], -1)),
                        ("q", LinTerm::constant((i + 1) as Int)),
                    ],
                });
            }
            Instr::Jz(r, j) => {
                let c = reg_name(r);
                rules.push(MachineRule {
                    name: format!("q{i}-jz-{c}-taken"),
                    guard: vec![at_i.clone(), eq_const(c, 0)],
                    update: vec![("q", LinTerm::constant(j as Int))],
                });
                rules.push(MachineRule {
                    name: format!("q{i}-jz-{c}-fall"),
                    guard: vec![at_i, atom(c, Rel::Ne, LinTerm::constant(0))],
                    update: vec![("q", LinTerm::constant((i + 1) as Int))],
                });
            }
            Instr::Halt => {} // no successor once q = n
        }
    }
    rules
}

/// Lockstep product over `(pc, x, z1, z2, y1, y2, c1, c2, q)`: every
/// transition advances both the program (stuttering at `pcend`) and the
/// machine; once `q = n` there is no transition at all.
pub fn build_product(m: &MinskyMachine) -> ProgramIR {
    let mut prog_side = prog_rules();
    prog_side.push(rule("at-end", eq_const("pc", PC_END), BTreeMap::new()));

    let m_rules = machine_rules(m);
    let mut rules = Vec::new();
    for p in &prog_side {
        for mr in &m_rules {
            let mut guard = vec![p.guard.clone()];
            guard.extend(mr.guard.iter().cloned());
            let mut update = p.update.clone();
            for (v, t) in &mr.update {
                update.insert((*v).to_owned(), t.clone());
            }
            rules.push(rule(
                &format!("{}/{}", p.name, mr.name),
                Formula::And(guard),
                update,
            ));
        }
    }

    let mut init = prog_init_formula();
    init.extend([eq_const("c1", 0), eq_const("c2", 0), eq_const("q", 1)]);
    let mut template = prog_init_template();
    template.extend([
        LinTerm::constant(0),
        LinTerm::constant(0),
        LinTerm::constant(1),
    ]);
    make_ir(
        "ts_comp",
        &PRODUCT_VARS,
        Formula::And(init),
        template,
        rules,
        prog_prop(),
    )
}

/// The closed-form state of the product system reached after exactly `t`
/// steps on input `n`, with the machine part read off the trace:
/// still inside loop 1 for `n >= t`, inside loop 2 for `t/3 < n < t`,
/// and at `pcend` for `n <= t/3`.
pub fn r_t_state(t: usize, n: Int, trace: &MinskyTrace) -> Result<State, SystemsError> {
    if t == 0 || n <= 0 {
        return Err(SystemsError::BadFamilyIndex);
    }
    let cfg = trace.config(t).ok_or(SystemsError::TraceTooShort { t })?;
    let t_int = Int::try_from(t).map_err(|_| SystemsError::Overflow)?;
    let mul = |a: Int, b: Int| a.checked_mul(b).ok_or(SystemsError::Overflow);
    let n_sq = mul(n, n)?;
    let prog_part: [Int; 6] = if n >= t_int {
        [PC_LOOP_ONE, n, n - t_int, 2 * n, mul(n, t_int)?, 0]
    } else if 3 * n > t_int {
        [PC_LOOP_TWO, n, 0, 3 * n - t_int, n_sq, mul(n, t_int - n)?]
    } else {
        [PC_END, n, 0, 0, n_sq, 2 * n_sq]
    };
    let mut values = prog_part.to_vec();
    values.extend([cfg.c1, cfg.c2, cfg.q as Int]);
    Ok(State(values))
}

/// Encodes the IR as QFLIA formulas. `TR` is the disjunction over rules of
/// the guard conjoined with a primed equality for every variable.
pub fn encode_ts(ir: &ProgramIR) -> SymbolicTS {
    let mut disjuncts = Vec::with_capacity(ir.rules.len());
    for rule in &ir.rules {
        let mut conjuncts = vec![rule.guard.clone()];
        for v in &ir.vars {
            let target = rule.update.get(v).cloned().unwrap_or_else(|| var_term(v));
            conjuncts.push(Formula::atom(
                LinTerm::var(crate::formula::prime_var(v)),
                Rel::Eq,
                target,
            ));
        }
        disjuncts.push(Formula::And(conjuncts));
    }
    SymbolicTS {
        vars: ir.vars.clone(),
        init: ir.init.clone(),
        tr: Formula::Or(disjuncts),
        prop: ir.prop.clone(),
    }
}

/// One JSON object per line, fields in variable-tuple order.
pub fn trace_to_jsonl(ir: &ProgramIR, states: &[State]) -> String {
    let mut out = String::new();
    for state in states {
        out.push('{');
        for (i, v) in ir.vars.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "\"{v}\":{}", state.0[i]);
        }
        out.push_str("}\n");
    }
    out
}
