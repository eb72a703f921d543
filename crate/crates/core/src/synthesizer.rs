//! For a machine halting in `k` steps, assembles the explicit inductive
//! invariant: an exact disjunction of the finitely many reachable states for
//! inputs `x <= k`, plus one step-indexed template cube per `t <= k` for
//! inputs `x > k`.

use thiserror::Error;

use crate::checker::{check_inductive, Backend, CheckError, CheckReport};
use crate::formula::{lin, Cube, Formula, Int, LinTerm, Rel};
use crate::minsky::{MinskyError, MinskyMachine};
use crate::systems::{build_product, encode_ts, SystemsError, PC_LOOP_ONE, PC_START, PRODUCT_VARS};

#[derive(Debug, Error)]
pub enum SynthesizerError {
    #[error("machine did not halt within {cap} steps; no invariant is synthesized")]
    DoesNotHaltWithin { cap: usize },
    #[error("template step {t} exceeds the halting time {k}")]
    StepOutOfRange { t: usize, k: usize },
    #[error(transparent)]
    Machine(#[from] MinskyError),
    #[error(transparent)]
    Systems(#[from] SystemsError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("internal: {0}")]
    Internal(String),
}

#[derive(Debug)]
pub struct SynthesisResult {
    /// Least halting time of the machine.
    pub k: usize,
    /// Exact finite disjunction of reachable-state cubes for `1 <= x <= k`.
    pub phi_small: Formula,
    /// Disjunction of the template cubes for `0 <= t <= k`.
    pub phi_big: Formula,
    /// `phi_small \/ phi_big`.
    pub invariant: Formula,
    pub report: CheckReport,
}

/// Least `k` with `fq(k) = n`, if within `cap`.
pub fn halting_time(m: &MinskyMachine, cap: usize) -> Result<usize, SynthesizerError> {
    let trace = m.run(cap)?;
    trace
        .halted_at
        .ok_or(SynthesizerError::DoesNotHaltWithin { cap })
}

/// Simulates the product for every input `1 <= x <= k` and turns each
/// visited state into a cube of nine equalities; `false` when `k = 0`.
pub fn build_phi_small(m: &MinskyMachine, k: usize) -> Result<Formula, SynthesizerError> {
    let ir = build_product(m);
    let mut seen = std::collections::HashSet::new();
    let mut cubes = Vec::new();
    for x in 1..=k {
        // The product halts with the machine, so k steps always suffice.
        for state in ir.reachable(x as Int, k)? {
            if !seen.insert(state.clone()) {
                continue; // disjunction is idempotent
            }
            let eqs = PRODUCT_VARS
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    Formula::atom(LinTerm::var(*v), Rel::Eq, LinTerm::constant(state.0[i]))
                })
                .collect();
            cubes.push(Formula::And(eqs));
        }
    }
    Ok(if cubes.is_empty() {
        Formula::False
    } else {
        Formula::Or(cubes)
    })
}

/// The template cube for states reached in exactly `t` steps on inputs
/// `x > k`: still in the first loop (`pc = pcstart` when `t = 0`), with
/// `z1 = x - t`, `z2 = 2x`, `y1 = t·x`, `y2 = 0`, and the machine part
/// pinned to its step-`t` configuration. `t` is a literal, so every
/// constraint is linear.
pub fn build_phi_t(m: &MinskyMachine, k: usize, t: usize) -> Result<Cube, SynthesizerError> {
    if t > k {
        return Err(SynthesizerError::StepOutOfRange { t, k });
    }
    let trace = m.run(t)?;
    let cfg = trace
        .config(t)
        .ok_or_else(|| SynthesizerError::Internal(format!("trace too short for t={t}")))?;
    let t_int = t as Int;
    let k_int = k as Int;
    let pc = if t == 0 { PC_START } else { PC_LOOP_ONE };
    let eq = |v: &str, term: LinTerm| Formula::atom(LinTerm::var(v), Rel::Eq, term);
    let phi = Formula::And(vec![
        Formula::atom(LinTerm::var("x"), Rel::Gt, LinTerm::constant(k_int)),
        eq("pc", LinTerm::constant(pc)),
        eq("z1", lin(&[(1, "x")], -t_int)),
        eq("z2", lin(&[(2, "x")], 0)),
        eq("y1", LinTerm::with_coeff(t_int, "x")),
        eq("y2", LinTerm::constant(0)),
        eq("c1", LinTerm::constant(cfg.c1)),
        eq("c2", LinTerm::constant(cfg.c2)),
        eq("q", LinTerm::constant(cfg.q as Int)),
    ]);
    let dnf = crate::formula::to_tight_dnf(&phi)
        .map_err(|e| SynthesizerError::Internal(format!("template normalization failed: {e}")))?;
    match dnf.cubes() {
        [cube] => Ok(cube.clone()),
        other => Err(SynthesizerError::Internal(format!(
            "template must normalize to one cube, got {}",
            other.len()
        ))),
    }
}

/// Builds `phi_small \/ phi_big` for a halting machine and checks the three
/// inductiveness conditions.
pub fn synthesize(
    m: &MinskyMachine,
    cap: usize,
    backend: &Backend,
) -> Result<SynthesisResult, SynthesizerError> {
    let k = halting_time(m, cap)?;
    let phi_small = build_phi_small(m, k)?;
    let phi_big = Formula::Or(
        (0..=k)
            .map(|t| Ok(build_phi_t(m, k, t)?.to_formula()))
            .collect::<Result<Vec<_>, SynthesizerError>>()?,
    );
    let invariant = Formula::Or(vec![phi_small.clone(), phi_big.clone()]);
    let ts = encode_ts(&build_product(m));
    let report = check_inductive(&ts, &invariant, backend)?;
    Ok(SynthesisResult {
        k,
        phi_small,
        phi_big,
        invariant,
        report,
    })
}
