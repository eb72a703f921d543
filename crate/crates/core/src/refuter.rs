//! Constructively defeats candidate DNF invariants: pick a step count `t`
//! from the cube count, enumerate even-input states reachable in exactly `t`
//! steps, force two of them into one cube by pigeonhole, take their integer
//! midpoint (cubes are convex, so it still satisfies the cube), and replay
//! the second loop from the midpoint straight into an assertion violation.

use thiserror::Error;

use crate::formula::{Dnf, EvalError, Int};
use crate::minsky::{MinskyError, MinskyMachine, MinskyTrace};
use crate::systems::{
    build_prog, build_product, r_t_state, ProgramIR, State, StepOutcome, SystemsError, TupleEnv,
    PC_END, PC_LOOP_ONE, PROG_VARS, PRODUCT_VARS, V_PC, V_Y1, V_Y2, V_Z2,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// The standalone squaring program over six variables.
    Warmup,
    /// The nine-variable lockstep product with a counter machine.
    Product,
}

/// Everything needed to re-check a counterexample-to-induction from scratch.
#[derive(Debug, Clone)]
pub struct CtiCertificate {
    pub system: SystemKind,
    /// Cube count of the candidate.
    pub r: usize,
    /// Shared step index of `v1`, `v2` (product only; warmup loop-exit
    /// states are reached at different times).
    pub t: Option<usize>,
    pub cube_index: usize,
    pub n: Int,
    pub m: Int,
    pub v1: State,
    pub v2: State,
    pub midpoint: State,
    /// Replayed states from the midpoint to the violation, inclusive.
    pub trace: Vec<State>,
    pub violation: State,
    pub predicted_y2: Int,
}

#[derive(Debug, Clone)]
pub enum RefutationOutcome {
    /// The candidate admits a state that reaches a bad state.
    Cti(Box<CtiCertificate>),
    /// A reachable state already falsifies the candidate.
    NotAnOverapproximation { witness: State },
    /// The machine halts too early for the argument (a halting machine
    /// genuinely has an invariant, so refutation must fail).
    Inconclusive { reason: String },
}

#[derive(Debug, Error)]
pub enum RefuterError {
    #[error("component {index} of v1 + v2 is odd; the midpoint is not integral")]
    NonIntegral { index: usize },
    #[error("step cap {cap} too small: the argument needs {needed} machine steps")]
    CapTooSmall { cap: usize, needed: usize },
    #[error(transparent)]
    Systems(#[from] SystemsError),
    #[error(transparent)]
    Machine(#[from] MinskyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("certificate validation failed: {0}")]
    Validation(String),
    #[error("internal: {0}")]
    Internal(String),
}

/// The step count used for an `r`-cube candidate: the open interval
/// `(t/3, t)` then contains at least `r + 1` even integers, enough to
/// pigeonhole two same-step states into one cube.
pub fn choose_t(r: usize) -> usize {
    3 * (r + 2)
}

#[derive(Debug, Clone)]
pub enum PigeonholeOutcome {
    Pair {
        cube_index: usize,
        n: Int,
        m: Int,
        v1: State,
        v2: State,
    },
    /// This even-input state at step `t` satisfies no cube.
    NotAnOverapproximation { n: Int, witness: State },
}

/// Scans the even inputs `n` in `(t/3, t)` ascending; the first state
/// sharing a cube with an earlier state wins (cube index breaks ties).
pub fn pigeonhole_pair(
    dnf: &Dnf,
    t: usize,
    trace: &MinskyTrace,
) -> Result<PigeonholeOutcome, RefuterError> {
    let mut owners: Vec<Option<(Int, State)>> = vec![None; dnf.r()];
    let t_int = t as Int;
    let mut n = first_even_after_third(t_int);
    while n < t_int {
        let state = r_t_state(t, n, trace)?;
        let env = TupleEnv {
            vars: &PRODUCT_VARS,
            state: &state,
        };
        let mut in_some_cube = false;
        for (i, cube) in dnf.cubes().iter().enumerate() {
            if !cube.sat(&env)? {
                continue;
            }
            in_some_cube = true;
            match &owners[i] {
                Some((prev_n, prev_state)) => {
                    return Ok(PigeonholeOutcome::Pair {
                        cube_index: i,
                        n: *prev_n,
                        m: n,
                        v1: prev_state.clone(),
                        v2: state,
                    })
                }
                None => owners[i] = Some((n, state.clone())),
            }
        }
        if !in_some_cube {
            return Ok(PigeonholeOutcome::NotAnOverapproximation { n, witness: state });
        }
        n += 2;
    }
    Err(RefuterError::Internal(format!(
        "pigeonhole failed: fewer than r+1 = {} even integers in ({}/3, {})",
        dnf.r() + 1,
        t,
        t
    )))
}

fn first_even_after_third(t: Int) -> Int {
    let mut n = t / 3 + 1; // smallest integer with 3n > t, since t = 3(r+2)
    debug_assert!(3 * n > t);
    if n % 2 != 0 {
        n += 1;
    }
    n
}

/// Exact componentwise average of two states.
pub fn midpoint_state(v1: &State, v2: &State) -> Result<State, RefuterError> {
    if v1.0.len() != v2.0.len() {
        return Err(RefuterError::Internal(
            "midpoint of states with different layouts".to_owned(),
        ));
    }
    let mut values = Vec::with_capacity(v1.0.len());
    for (index, (a, b)) in v1.0.iter().zip(&v2.0).enumerate() {
        let sum = a
            .checked_add(*b)
            .ok_or(RefuterError::Systems(SystemsError::Overflow))?;
        if sum % 2 != 0 {
            return Err(RefuterError::NonIntegral { index });
        }
        values.push(sum / 2);
    }
    Ok(State(values))
}

/// Final `y2` after replaying the second loop from the midpoint of the
/// step-`t` states for even inputs `n` and `m`: `(n²+m²)/4 + (3/2)·m·n`.
/// Differs from `2·y1 = n² + m²` whenever `n != m`.
pub fn predicted_y2(n: Int, m: Int, _t: usize) -> Int {
    debug_assert!(n % 2 == 0 && m % 2 == 0);
    let squares = n * n + m * m;
    debug_assert_eq!(squares % 4, 0);
    debug_assert_eq!(3 * m * n % 2, 0);
    squares / 4 + 3 * m * n / 2
}

/// Warmup variant: replaying loop 2 from the midpoint of two loop-exit
/// states multiplies `x = (n+m)/2` by `z2 = n+m`, giving `(n+m)²/2`.
pub fn warmup_predicted_y2(n: Int, m: Int) -> Int {
    debug_assert!(n % 2 == 0 && m % 2 == 0);
    (n + m) * (n + m) / 2
}

/// Steps until `pc = pcend`, failing if that takes more than `budget` steps.
fn replay_to_end(
    ir: &ProgramIR,
    start: &State,
    budget: usize,
) -> Result<Vec<State>, RefuterError> {
    let mut trace = vec![start.clone()];
    while trace.last().expect("nonempty").0[V_PC] != PC_END {
        if trace.len() > budget {
            return Err(RefuterError::Internal(format!(
                "replay exceeded its {budget}-step budget without reaching pcend"
            )));
        }
        match ir.macro_step(trace.last().expect("nonempty"))? {
            StepOutcome::Next(next) => trace.push(next),
            StepOutcome::Stuck => {
                return Err(RefuterError::Internal(
                    "replay got stuck before reaching pcend".to_owned(),
                ))
            }
        }
    }
    Ok(trace)
}

/// Defeats a candidate DNF invariant for the product with `machine`.
/// `cap` bounds how many machine steps may be simulated.
pub fn refute_product(
    dnf: &Dnf,
    machine: &MinskyMachine,
    cap: usize,
) -> Result<RefutationOutcome, RefuterError> {
    let ir = build_product(machine);
    let t = choose_t(dnf.r());
    let trace = machine.run(cap)?;

    if let Some(h) = trace.halted_at {
        if h <= t {
            return Ok(RefutationOutcome::Inconclusive {
                reason: format!("machine halted after {h} <= t = {t} steps"),
            });
        }
    } else if trace.configs.len() <= t {
        return Err(RefuterError::CapTooSmall {
            cap,
            needed: 3 * t + 2,
        });
    }

    let (cube_index, n, m, v1, v2) = match pigeonhole_pair(dnf, t, &trace)? {
        PigeonholeOutcome::Pair {
            cube_index,
            n,
            m,
            v1,
            v2,
        } => (cube_index, n, m, v1, v2),
        PigeonholeOutcome::NotAnOverapproximation { n, witness } => {
            // Re-derive the witness by honest simulation.
            let simulated = ir.reachable(n, t)?;
            let witness_sim = simulated
                .get(t)
                .ok_or_else(|| RefuterError::Internal("simulation fell short of t".to_owned()))?;
            if *witness_sim != witness {
                return Err(RefuterError::Internal(
                    "closed-form state disagrees with simulation".to_owned(),
                ));
            }
            return Ok(RefutationOutcome::NotAnOverapproximation { witness });
        }
    };

    let midpoint = midpoint_state(&v1, &v2)?;
    let replay_len = midpoint.0[V_Z2]; // = (3/2)(n+m) - t > 0
    let replay_len = usize::try_from(replay_len)
        .map_err(|_| RefuterError::Internal("negative loop count at midpoint".to_owned()))?;
    let needed = t + replay_len + 2;
    match trace.halted_at {
        Some(h) if h <= needed => {
            return Ok(RefutationOutcome::Inconclusive {
                reason: format!("machine halted after {h} steps, within the replay budget {needed}"),
            })
        }
        None if trace.configs.len() <= needed => {
            return Err(RefuterError::CapTooSmall { cap, needed });
        }
        _ => {}
    }

    let replay = replay_to_end(&ir, &midpoint, replay_len + 2)?;
    let violation = replay.last().expect("nonempty").clone();
    let certificate = CtiCertificate {
        system: SystemKind::Product,
        r: dnf.r(),
        t: Some(t),
        cube_index,
        n,
        m,
        v1,
        v2,
        midpoint,
        trace: replay,
        violation,
        predicted_y2: predicted_y2(n, m, t),
    };
    validate_certificate(&certificate, dnf, Some(machine))?;
    Ok(RefutationOutcome::Cti(Box::new(certificate)))
}

/// Defeats a candidate DNF invariant for the standalone program, using the
/// loop-exit states `(n, 0, 2n, n², 0)` for even `n` up to `2(r+1)`.
/// Sound here only because there is no machine component to desynchronize.
pub fn refute_warmup(dnf: &Dnf) -> Result<RefutationOutcome, RefuterError> {
    let ir = build_prog();
    let loop_exit = |n: Int| -> Result<State, RefuterError> {
        let trace = ir.reachable(n, n as usize)?;
        let state = trace
            .get(n as usize)
            .ok_or_else(|| RefuterError::Internal("loop-1 exit not reached".to_owned()))?;
        debug_assert_eq!(
            state.0,
            vec![PC_LOOP_ONE, n, 0, 2 * n, n * n, 0],
            "loop-exit closed form"
        );
        Ok(state.clone())
    };

    let mut owners: Vec<Option<(Int, State)>> = vec![None; dnf.r()];
    let mut pair = None;
    'outer: for step in 1..=(dnf.r() as Int + 1) {
        let n = 2 * step;
        let state = loop_exit(n)?;
        let env = TupleEnv {
            vars: &PROG_VARS,
            state: &state,
        };
        let mut in_some_cube = false;
        for (i, cube) in dnf.cubes().iter().enumerate() {
            if !cube.sat(&env)? {
                continue;
            }
            in_some_cube = true;
            match &owners[i] {
                Some((prev_n, prev_state)) => {
                    pair = Some((i, *prev_n, n, prev_state.clone(), state));
                    break 'outer;
                }
                None => owners[i] = Some((n, state.clone())),
            }
        }
        if !in_some_cube {
            return Ok(RefutationOutcome::NotAnOverapproximation { witness: state });
        }
    }
    let Some((cube_index, n, m, v1, v2)) = pair else {
        return Err(RefuterError::Internal(
            "pigeonhole failed over r+1 loop-exit states".to_owned(),
        ));
    };

    let midpoint = midpoint_state(&v1, &v2)?;
    let replay_len = usize::try_from(midpoint.0[V_Z2]).expect("z2 = n + m > 0");
    let replay = replay_to_end(&ir, &midpoint, replay_len + 2)?;
    let violation = replay.last().expect("nonempty").clone();
    let certificate = CtiCertificate {
        system: SystemKind::Warmup,
        r: dnf.r(),
        t: None,
        cube_index,
        n,
        m,
        v1,
        v2,
        midpoint,
        trace: replay,
        violation,
        predicted_y2: warmup_predicted_y2(n, m),
    };
    validate_certificate(&certificate, dnf, None)?;
    Ok(RefutationOutcome::Cti(Box::new(certificate)))
}

/// Re-validates a certificate from scratch, independently of how it was
/// produced: reachability of `v1`/`v2` by honest simulation, cube
/// membership, midpoint arithmetic, step-by-step replay, and the violation.
pub fn validate_certificate(
    cert: &CtiCertificate,
    dnf: &Dnf,
    machine: Option<&MinskyMachine>,
) -> Result<(), RefuterError> {
    let fail = |msg: String| Err(RefuterError::Validation(msg));
    if cert.r != dnf.r() {
        return fail(format!("r = {} but candidate has {} cubes", cert.r, dnf.r()));
    }
    let Some(cube) = dnf.cubes().get(cert.cube_index) else {
        return fail(format!("cube index {} out of range", cert.cube_index));
    };
    if cert.n == cert.m || cert.n % 2 != 0 || cert.m % 2 != 0 || cert.n <= 0 || cert.m <= 0 {
        return fail(format!("n = {}, m = {} must be distinct positive evens", cert.n, cert.m));
    }

    let (ir, vars): (ProgramIR, &[&str]) = match cert.system {
        SystemKind::Warmup => (build_prog(), &PROG_VARS),
        SystemKind::Product => {
            let Some(m) = machine else {
                return fail("product certificate requires the machine".to_owned());
            };
            (build_product(m), &PRODUCT_VARS)
        }
    };

    // v1 and v2 are honestly reachable.
    let expect_reachable = |n: Int, state: &State| -> Result<(), RefuterError> {
        let steps = match cert.system {
            SystemKind::Warmup => n as usize,
            SystemKind::Product => match cert.t {
                Some(t) => t,
                None => return fail("product certificate must carry t".to_owned()),
            },
        };
        let trace = ir.reachable(n, steps)?;
        match trace.get(steps) {
            Some(s) if s == state => Ok(()),
            Some(s) => fail(format!("state for input {n} differs from simulation: {s:?}")),
            None => fail(format!("input {n} does not run for {steps} steps")),
        }
    };
    expect_reachable(cert.n, &cert.v1)?;
    expect_reachable(cert.m, &cert.v2)?;

    if let SystemKind::Product = cert.system {
        let t = cert.t.expect("checked above");
        if t < 3 * (cert.r + 2) {
            return fail(format!("t = {t} is below the bound 3(r+2)"));
        }
        let t = t as Int;
        for n in [cert.n, cert.m] {
            if !(3 * n > t && n < t) {
                return fail(format!("n = {n} outside the open interval (t/3, t)"));
            }
        }
    }

    // Cube membership of the endpoints and the midpoint.
    for (name, state) in [("v1", &cert.v1), ("v2", &cert.v2), ("midpoint", &cert.midpoint)] {
        let env = TupleEnv { vars, state };
        if !cube.sat(&env)? {
            return fail(format!("{name} does not satisfy cube {}", cert.cube_index));
        }
    }

    // Midpoint is the exact componentwise average.
    let recomputed = midpoint_state(&cert.v1, &cert.v2)?;
    if recomputed != cert.midpoint {
        return fail("midpoint is not the componentwise average of v1 and v2".to_owned());
    }

    // The trace replays step by step from the midpoint to the violation.
    match cert.trace.first() {
        Some(first) if *first == cert.midpoint => {}
        _ => return fail("trace does not start at the midpoint".to_owned()),
    }
    for (i, pair) in cert.trace.windows(2).enumerate() {
        match ir.macro_step(&pair[0])? {
            StepOutcome::Next(next) if next == pair[1] => {}
            other => return fail(format!("trace step {i} does not replay: {other:?}")),
        }
    }
    match cert.trace.last() {
        Some(last) if *last == cert.violation => {}
        _ => return fail("trace does not end at the violation".to_owned()),
    }

    // The violation breaks the assertion exactly as predicted.
    let v = &cert.violation.0;
    if v[V_PC] != PC_END {
        return fail("violation is not at pcend".to_owned());
    }
    if v[V_Y2] == 2 * v[V_Y1] {
        return fail("violation still satisfies y2 = 2*y1".to_owned());
    }
    if v[V_Y2] != cert.predicted_y2 {
        return fail(format!(
            "violation has y2 = {} but the certificate predicts {}",
            v[V_Y2], cert.predicted_y2
        ));
    }
    let formula_value = match cert.system {
        SystemKind::Product => predicted_y2(cert.n, cert.m, cert.t.expect("checked above")),
        SystemKind::Warmup => warmup_predicted_y2(cert.n, cert.m),
    };
    if cert.predicted_y2 != formula_value {
        return fail(format!(
            "predicted y2 = {} does not match the closed form {}",
            cert.predicted_y2, formula_value
        ));
    }
    Ok(())
}
