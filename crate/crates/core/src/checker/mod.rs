//! Decides the three inductiveness conditions (initiation, consecution,
//! safety) against a symbolic transition system, through an external
//! SMT-LIB2 process or a built-in bounded countermodel search.

pub mod bounded;
pub mod smt;
pub mod solver;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use thiserror::Error;

use crate::formula::{EvalError, Formula, Int, PrimeError};
use crate::systems::SymbolicTS;

pub use bounded::BoundedCfg;
pub use smt::{emit_chc, emit_smt2, SmtQueries};
pub use solver::{SatStatus, SolverCmd, DEFAULT_SOLVER_TIMEOUT};

pub type Model = BTreeMap<String, Int>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Initiation,
    Consecution,
    Safety,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::Initiation => "initiation",
            Condition::Consecution => "consecution",
            Condition::Safety => "safety",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImplicationOutcome {
    /// The implication holds for all integer assignments (complete backends
    /// only; the bounded backend never claims this).
    Valid,
    /// A replay-validated assignment satisfying the premise and falsifying
    /// the conclusion.
    Countermodel(Model),
    Unknown(String),
}

impl ImplicationOutcome {
    pub fn is_valid(&self) -> bool {
        matches!(self, ImplicationOutcome::Valid)
    }

    pub fn is_countermodel(&self) -> bool {
        matches!(self, ImplicationOutcome::Countermodel(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckVerdict {
    pub condition: Condition,
    pub outcome: ImplicationOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub initiation: CheckVerdict,
    pub consecution: CheckVerdict,
    pub safety: CheckVerdict,
}

impl CheckReport {
    /// The invariant certifies the property only if all three are valid.
    pub fn inductive(&self) -> bool {
        self.verdicts().iter().all(|v| v.outcome.is_valid())
    }

    pub fn verdicts(&self) -> [&CheckVerdict; 3] {
        [&self.initiation, &self.consecution, &self.safety]
    }
}

#[derive(Debug, Clone)]
pub enum Backend {
    Smt(SolverCmd),
    Bounded(BoundedCfg),
    /// Bounded search first (cross-check), SMT for the verdict.
    Both(SolverCmd, BoundedCfg),
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("failed to start solver `{command}`: {message}")]
    SolverUnavailable { command: String, message: String },
    #[error("solver exceeded its {budget:?} budget")]
    SolverTimeout { budget: Duration },
    #[error("could not parse solver response: {0}")]
    ModelParseError(String),
    #[error("{condition} countermodel failed replay: {detail}")]
    ReplayFailed { condition: String, detail: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Prime(#[from] PrimeError),
}

/// Decides whether `lhs => rhs` is valid over the integers.
pub fn check_implication(
    lhs: &Formula,
    rhs: &Formula,
    backend: &Backend,
) -> Result<ImplicationOutcome, CheckError> {
    match backend {
        Backend::Smt(cmd) => check_smt(lhs, rhs, cmd),
        Backend::Bounded(cfg) => bounded::countermodel(lhs, rhs, cfg),
        Backend::Both(cmd, cfg) => match bounded::countermodel(lhs, rhs, cfg)? {
            ImplicationOutcome::Countermodel(m) => Ok(ImplicationOutcome::Countermodel(m)),
            _ => check_smt(lhs, rhs, cmd),
        },
    }
}

fn check_smt(
    lhs: &Formula,
    rhs: &Formula,
    cmd: &SolverCmd,
) -> Result<ImplicationOutcome, CheckError> {
    let script = smt::implication_query(lhs, rhs);
    let response = solver::run_query(cmd, &script)?;
    match response.status {
        SatStatus::Unsat => Ok(ImplicationOutcome::Valid),
        SatStatus::Unknown => Ok(ImplicationOutcome::Unknown(
            "solver returned unknown".to_owned(),
        )),
        SatStatus::Sat => {
            let model = complete_model(lhs, rhs, &response.model);
            replay(lhs, rhs, &model, "implication")?;
            Ok(ImplicationOutcome::Countermodel(model))
        }
    }
}

/// Restricts the solver model to the implication's free variables; variables
/// the solver left out are don't-cares and default to 0.
fn complete_model(lhs: &Formula, rhs: &Formula, model: &Model) -> Model {
    let mut vars = lhs.free_vars();
    vars.extend(rhs.free_vars());
    vars.into_iter()
        .map(|v| {
            let value = model.get(&v).copied().unwrap_or(0);
            (v, value)
        })
        .collect()
}

/// Unconditional local validation of a claimed countermodel.
pub(crate) fn replay(
    lhs: &Formula,
    rhs: &Formula,
    model: &Model,
    condition: &str,
) -> Result<(), CheckError> {
    let fail = |detail: String| CheckError::ReplayFailed {
        condition: condition.to_owned(),
        detail,
    };
    if !lhs.eval(model)? {
        return Err(fail("premise does not hold under the model".to_owned()));
    }
    if rhs.eval(model)? {
        return Err(fail("conclusion still holds under the model".to_owned()));
    }
    Ok(())
}

/// Runs the three inductiveness conditions for `inv` against `ts`.
pub fn check_inductive(
    ts: &SymbolicTS,
    inv: &Formula,
    backend: &Backend,
) -> Result<CheckReport, CheckError> {
    let inv_primed = inv.prime()?;
    let consecution_lhs = Formula::And(vec![inv.clone(), ts.tr.clone()]);
    let run = |cond: Condition, lhs: &Formula, rhs: &Formula| -> Result<CheckVerdict, CheckError> {
        let outcome = check_implication(lhs, rhs, backend)?;
        if let ImplicationOutcome::Countermodel(m) = &outcome {
            replay(lhs, rhs, m, &cond.to_string())?;
        }
        Ok(CheckVerdict {
            condition: cond,
            outcome,
        })
    };
    Ok(CheckReport {
        initiation: run(Condition::Initiation, &ts.init, inv)?,
        consecution: run(Condition::Consecution, &consecution_lhs, &inv_primed)?,
        safety: run(Condition::Safety, inv, &ts.prop)?,
    })
}
