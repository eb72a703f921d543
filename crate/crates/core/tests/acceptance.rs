//! Acceptance suite: one test per criterion, each printing a PASS line.
//! Criteria 3 and 8 need an external SMT solver; `discover` finds `z3` on
//! the PATH, the `QFLIA_SOLVER` command line, or the Node shim in `tools/`.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qflia_core::checker::{self, solver, Backend, BoundedCfg, SolverCmd};
use qflia_core::formula::{
    parse_formula_with_vars, to_tight_dnf, Assignment, Dnf, Formula, Int, LinTerm, Rel,
};
use qflia_core::minsky::MinskyMachine;
use qflia_core::refuter::{self, RefutationOutcome};
use qflia_core::synthesizer::{self, SynthesizerError};
use qflia_core::systems::{
    build_prog, build_product, encode_ts, r_t_state, ProgramIR, State, StepOutcome,
    PC_END, PC_LOOP_ONE, PRODUCT_VARS, V_PC, V_Y1, V_Y2,
};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn machine(name: &str) -> MinskyMachine {
    let path = fixtures().join("machines").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    MinskyMachine::parse(&text).unwrap_or_else(|e| panic!("{path:?}: {e}"))
}

fn smt_backend() -> Backend {
    let cmd = solver::discover().expect(
        "no SMT solver found: install z3, set QFLIA_SOLVER, or run `npm install` in tools/",
    );
    Backend::Smt(cmd.with_timeout(Duration::from_secs(30)))
}

const CORPUS: [&str; 12] = [
    "01_true.fml",
    "02_prop.fml",
    "03_x_positive.fml",
    "04_z1_nonneg.fml",
    "05_z2_nonneg.fml",
    "06_y_nonneg.fml",
    "07_machine_idle.fml",
    "08_pc_range.fml",
    "09_pc_templates.fml",
    "10_z1_le_x.fml",
    "11_progress_sum.fml",
    "12_q_range.fml",
];

fn candidate_dnf(name: &str) -> Dnf {
    let path = fixtures().join("candidates").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    let vars: BTreeSet<String> = PRODUCT_VARS.iter().map(|v| (*v).to_owned()).collect();
    let phi = parse_formula_with_vars(&text, &vars).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    to_tight_dnf(&phi).unwrap()
}

#[test]
fn criterion_1_squaring_program_semantics() {
    let started = Instant::now();
    let ir = build_prog();
    for x in 1..=50 as Int {
        let steps = 3 * x as usize + 2;
        let trace = ir.reachable(x, steps).unwrap();
        // loop-1 exit after x steps: (x, 0, 2x, x^2, 0)
        assert_eq!(
            trace[x as usize],
            State(vec![PC_LOOP_ONE, x, 0, 2 * x, x * x, 0]),
            "x = {x}"
        );
        // terminal state: y1 = x^2, y2 = 2x^2, and the property holds
        let last = trace.last().unwrap();
        assert_eq!(last, &State(vec![PC_END, x, 0, 0, x * x, 2 * x * x]));
        assert_eq!(trace.len(), 3 * x as usize + 1);
        for state in &trace {
            assert_eq!(ir.eval_state(ir.prop(), state), Ok(true));
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("criterion 1 PASS: squaring semantics exact for x in [1,50] ({elapsed:?})");
}

#[test]
fn criterion_2_step_indexed_closed_forms() {
    let started = Instant::now();
    let m = machine("loop.mm");
    let ir = build_product(&m);
    let trace = m.run(30).unwrap();
    for t in 1..=30usize {
        for n in 1..=40 as Int {
            let simulated = ir.reachable(n, t).unwrap()[t].clone();
            let closed = r_t_state(t, n, &trace).unwrap();
            assert_eq!(simulated, closed, "t = {t}, n = {n}");
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    println!("criterion 2 PASS: all 1200 closed-form states match simulation ({elapsed:?})");
}

#[test]
fn criterion_3_synthesis_for_halting_machines() {
    let started = Instant::now();
    let backend = smt_backend();
    let cases = [("halt.mm", 0usize), ("two_inc.mm", 2), ("count_down.mm", 9)];
    for (name, expected_k) in cases {
        let m = machine(name);
        let result = synthesizer::synthesize(&m, 1000, &backend)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(result.k, expected_k, "{name}");
        assert!(
            result.report.inductive(),
            "{name}: {:?}",
            result.report
        );
        // Self-contained cross-check: the bounded backend finds no countermodel.
        let ts = encode_ts(&build_product(&m));
        let bounded = checker::check_inductive(
            &ts,
            &result.invariant,
            &Backend::Bounded(BoundedCfg::with_bound(8)),
        )
        .unwrap();
        for verdict in bounded.verdicts() {
            assert!(
                !verdict.outcome.is_countermodel(),
                "{name}: bounded backend found {verdict:?}"
            );
        }
        // Consequence of all-valid: every honestly reachable state satisfies
        // the invariant, for inputs well past the halting time.
        let ir = build_product(&m);
        for x in 1..=(3 * result.k as Int + 2).min(60) {
            for state in ir.reachable(x, 200).unwrap() {
                assert_eq!(
                    ir.eval_state(&result.invariant, &state),
                    Ok(true),
                    "{name}: x = {x}, state = {state:?}"
                );
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    println!("criterion 3 PASS: synthesized invariants inductive for k=0,2,9 ({elapsed:?})");
}

#[test]
fn criterion_4_refutation_corpus() {
    let m = machine("loop.mm");
    let mut cti_count = 0;
    for name in CORPUS {
        let started = Instant::now();
        let dnf = candidate_dnf(name);
        let outcome = refuter::refute_product(&dnf, &m, 10_000).unwrap();
        let RefutationOutcome::Cti(cert) = outcome else {
            panic!("{name}: expected a counterexample certificate, got {outcome:?}");
        };
        // Independent replay of the certificate.
        refuter::validate_certificate(&cert, &dnf, Some(&m)).unwrap();
        // The final value is the closed form, recomputed here from n and m.
        let (n, mm) = (cert.n, cert.m);
        assert_eq!(cert.violation.0[V_Y2], (n * n + mm * mm) / 4 + 3 * n * mm / 2, "{name}");
        assert_ne!(
            cert.violation.0[V_Y2],
            2 * cert.violation.0[V_Y1],
            "{name}"
        );
        assert_eq!(cert.violation.0[V_PC], PC_END, "{name}");
        let elapsed = started.elapsed();
        assert!(elapsed < Duration::from_secs(5), "{name} took {elapsed:?}");
        cti_count += 1;
    }
    assert!(cti_count >= 10, "only {cti_count} certificates");

    // The invariant synthesized for a different (halting) machine is not
    // even an overapproximation of the looping product's reachable states.
    let synthesized = synthesizer::synthesize(
        &machine("two_inc.mm"),
        100,
        &Backend::Bounded(BoundedCfg::default()),
    )
    .unwrap();
    let dnf = to_tight_dnf(&synthesized.invariant).unwrap();
    let outcome = refuter::refute_product(&dnf, &m, 10_000).unwrap();
    let RefutationOutcome::NotAnOverapproximation { witness } = outcome else {
        panic!("expected a reachability witness, got {outcome:?}");
    };
    let ir = build_product(&m);
    assert_eq!(ir.eval_state(&synthesized.invariant, &witness), Ok(false));
    println!("criterion 4 PASS: {cti_count} candidates defeated by validated certificates");
}

#[test]
fn criterion_5_pigeonhole_bound() {
    for r in 1..=50usize {
        let t = refuter::choose_t(r);
        assert_eq!(t, 3 * (r + 2));
        let ints: Vec<usize> = (t / 3 + 1..t).collect();
        let evens = ints.iter().filter(|n| *n % 2 == 0).count();
        assert!(
            ints.len() >= 2 * (r + 1),
            "r = {r}: only {} integers in (t/3, t)",
            ints.len()
        );
        assert!(evens >= r + 1, "r = {r}: only {evens} even integers");
    }
    println!("criterion 5 PASS: interval (t/3, t) large enough for r in [1,50]");
}

/// Each TR disjunct must be the rule guard (over unprimed variables only)
/// conjoined with one equality `v' = term(unprimed)` per variable. Together
/// with guard determinism this pins the whole biconditional: a disjunct can
/// only hold for the unique image of an enabled rule, so checking the actual
/// successor, perturbed copies, and the state itself at every box point is
/// exhaustive in `t`.
fn assert_tr_shape(ir: &ProgramIR, ts: &qflia_core::systems::SymbolicTS) {
    let Formula::Or(disjuncts) = &ts.tr else {
        panic!("TR must be a disjunction");
    };
    assert_eq!(disjuncts.len(), ir.rules().len());
    let is_primed = |v: &String| v.ends_with('\'');
    for (rule, disjunct) in ir.rules().iter().zip(disjuncts) {
        let Formula::And(conjuncts) = disjunct else {
            panic!("disjunct must be a conjunction");
        };
        assert_eq!(&conjuncts[0], &rule.guard, "first conjunct is the guard");
        assert!(
            !rule.guard.free_vars().iter().any(is_primed),
            "guards mention only unprimed variables"
        );
        let mut pinned = BTreeSet::new();
        for eq in &conjuncts[1..] {
            let Formula::Atom(atom) = eq else {
                panic!("update conjunct must be an atom");
            };
            assert_eq!(atom.rel, Rel::Eq);
            let lhs_vars: Vec<&str> = atom.lhs.vars().collect();
            assert!(
                matches!(lhs_vars.as_slice(), [v] if v.ends_with('\'')),
                "left side must be a single primed variable"
            );
            assert!(
                !atom.rhs.vars().any(|v| v.ends_with('\'')),
                "update terms read only unprimed variables"
            );
            pinned.insert(lhs_vars[0].trim_end_matches('\'').to_owned());
        }
        let all: BTreeSet<String> = ir.vars().iter().cloned().collect();
        assert_eq!(pinned, all, "every variable is pinned by an equality");
    }
}

/// Exhaustively checks `eval(TR, s (+) t') <=> macro_step(s) = t` over a box.
fn check_encoding_fidelity(ir: &ProgramIR, ranges: Vec<(Int, Int)>) -> u64 {
    let ts = encode_ts(ir);
    assert_tr_shape(ir, &ts);
    let tasks: Vec<(Int, Int)> = (ranges[0].0..=ranges[0].1)
        .flat_map(|a| (ranges[1].0..=ranges[1].1).map(move |b| (a, b)))
        .collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = tasks
            .iter()
            .map(|&(a, b)| {
                let (ts, ir, ranges) = (&ts, &ir, &ranges);
                scope.spawn(move || {
                    let mut checked = 0u64;
                    let mut values = vec![0; ranges.len()];
                    values[0] = a;
                    values[1] = b;
                    enumerate_states(ir, ts, ranges, &mut values, 2, &mut checked);
                    checked
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).sum()
    })
}

fn enumerate_states(
    ir: &ProgramIR,
    ts: &qflia_core::systems::SymbolicTS,
    ranges: &[(Int, Int)],
    values: &mut Vec<Int>,
    depth: usize,
    checked: &mut u64,
) {
    if depth == ranges.len() {
        verify_state(ir, ts, &State(values.clone()));
        *checked += 1;
        return;
    }
    for v in ranges[depth].0..=ranges[depth].1 {
        values[depth] = v;
        enumerate_states(ir, ts, ranges, values, depth + 1, checked);
    }
}

fn verify_state(ir: &ProgramIR, ts: &qflia_core::systems::SymbolicTS, s: &State) {
    let successor = match ir.macro_step(s).unwrap() {
        StepOutcome::Next(t) => Some(t),
        StepOutcome::Stuck => None,
    };
    let mut candidates: Vec<State> = vec![s.clone()];
    if let Some(t) = &successor {
        candidates.push(t.clone());
        for i in [0, s.0.len() - 1] {
            let mut perturbed = t.clone();
            perturbed.0[i] += 1;
            candidates.push(perturbed);
        }
    }
    candidates.dedup();
    for t in &candidates {
        let tr_holds = ir.eval_step(&ts.tr, s, t).unwrap();
        let is_successor = successor.as_ref() == Some(t);
        assert_eq!(
            tr_holds, is_successor,
            "encoding disagrees with the interpreter at s = {s:?}, t = {t:?}"
        );
    }
}

#[test]
fn criterion_6_encoding_fidelity() {
    let started = Instant::now();
    let prog = build_prog();
    let mut ranges = vec![(0, 3)]; // pc
    ranges.extend(std::iter::repeat_n((0, 6), 5));
    let checked = check_encoding_fidelity(&prog, ranges);
    assert_eq!(checked, 4 * 7u64.pow(5));

    let product = build_product(&machine("loop.mm"));
    let mut ranges = vec![(0, 3)]; // pc
    ranges.extend(std::iter::repeat_n((0, 6), 7)); // x, z1, z2, y1, y2, c1, c2
    ranges.push((1, 2)); // q
    let checked = check_encoding_fidelity(&product, ranges);
    assert_eq!(checked, 4 * 7u64.pow(7) * 2);
    println!(
        "criterion 6 PASS: TR matches the interpreter on {} states ({:?})",
        4 * 7u64.pow(5) + 4 * 7u64.pow(7) * 2,
        started.elapsed()
    );
}

const GEN_VARS: [&str; 4] = ["a", "b", "x", "y"];

struct BoxEnv<'a>(&'a [Int; 4]);

impl Assignment for BoxEnv<'_> {
    fn lookup(&self, var: &str) -> Option<Int> {
        GEN_VARS.iter().position(|v| *v == var).map(|i| self.0[i])
    }
}

fn random_linterm(rng: &mut StdRng) -> LinTerm {
    let mut term = LinTerm::constant(rng.gen_range(-4..=4));
    for v in GEN_VARS {
        if rng.gen_bool(0.6) {
            term = term
                .checked_add(&LinTerm::with_coeff(rng.gen_range(-3..=3), v))
                .unwrap();
        }
    }
    term
}

fn random_formula(rng: &mut StdRng, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.35) {
        let rels = [Rel::Le, Rel::Lt, Rel::Eq, Rel::Ge, Rel::Gt, Rel::Ne];
        return Formula::atom(
            random_linterm(rng),
            rels[rng.gen_range(0..rels.len())],
            random_linterm(rng),
        );
    }
    match rng.gen_range(0..4) {
        0 => Formula::not(random_formula(rng, depth - 1)),
        1 => Formula::And(
            (0..rng.gen_range(0..=3))
                .map(|_| random_formula(rng, depth - 1))
                .collect(),
        ),
        _ => Formula::Or(
            (0..rng.gen_range(0..=3))
                .map(|_| random_formula(rng, depth - 1))
                .collect(),
        ),
    }
}

fn for_each_box_point(radius: Int, mut f: impl FnMut(&[Int; 4])) {
    let mut point = [-radius; 4];
    loop {
        f(&point);
        let mut i = 0;
        loop {
            point[i] += 1;
            if point[i] <= radius {
                break;
            }
            point[i] = -radius;
            i += 1;
            if i == 4 {
                return;
            }
        }
    }
}

#[test]
fn criterion_7_tight_dnf_on_random_formulas() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(20240607);
    let formulas: Vec<Formula> = (0..1000).map(|_| random_formula(&mut rng, 3)).collect();
    let chunk = formulas.len().div_ceil(8);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (i, formulas) in formulas.chunks(chunk).enumerate() {
            handles.push(scope.spawn(move || {
                let mut rng = StdRng::seed_from_u64(9000 + i as u64);
                for phi in formulas {
                    let dnf = to_tight_dnf(phi).unwrap();
                    // equivalence, exhaustively on [-6, 6]^4
                    for_each_box_point(6, |point| {
                        let env = BoxEnv(point);
                        assert_eq!(
                            phi.eval(&env).unwrap(),
                            dnf.sat(&env).unwrap(),
                            "formula {phi} disagrees with its DNF at {point:?}"
                        );
                    });
                    // integer-midpoint convexity on sampled pairs per cube
                    for cube in dnf.cubes().iter().take(6) {
                        let mut sat_points: Vec<[Int; 4]> = Vec::new();
                        for _ in 0..200 {
                            let p = [
                                2 * rng.gen_range(-3..=3),
                                2 * rng.gen_range(-3..=3),
                                2 * rng.gen_range(-3..=3),
                                2 * rng.gen_range(-3..=3),
                            ];
                            if cube.sat(&BoxEnv(&p)).unwrap() {
                                sat_points.push(p);
                                if sat_points.len() >= 12 {
                                    break;
                                }
                            }
                        }
                        for (i, p) in sat_points.iter().enumerate() {
                            for q in &sat_points[i + 1..] {
                                let mid = [
                                    (p[0] + q[0]) / 2,
                                    (p[1] + q[1]) / 2,
                                    (p[2] + q[2]) / 2,
                                    (p[3] + q[3]) / 2,
                                ];
                                assert!(
                                    cube.sat(&BoxEnv(&mid)).unwrap(),
                                    "cube not midpoint-closed: {p:?}, {q:?}"
                                );
                            }
                        }
                    }
                }
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
    });
    println!(
        "criterion 7 PASS: 1000 random formulas, DNF exact on 13^4 points each ({:?})",
        started.elapsed()
    );
}

#[test]
fn criterion_8_exclusivity_shadow() {
    let backend = smt_backend();
    let halting = ["halt.mm", "two_inc.mm", "count_down.mm"];
    let looping = machine("loop.mm");

    // Synthesis succeeds exactly for the halting fixtures.
    for name in halting {
        let result = synthesizer::synthesize(&machine(name), 1000, &backend)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(result.report.inductive(), "{name}: {:?}", result.report);
    }
    assert!(matches!(
        synthesizer::synthesize(&looping, 1000, &backend),
        Err(SynthesizerError::DoesNotHaltWithin { cap: 1000 })
    ));

    // Refutation defeats every corpus candidate exactly for the loop.
    for name in CORPUS {
        let dnf = candidate_dnf(name);
        match refuter::refute_product(&dnf, &looping, 10_000).unwrap() {
            RefutationOutcome::Cti(_) | RefutationOutcome::NotAnOverapproximation { .. } => {}
            RefutationOutcome::Inconclusive { reason } => {
                panic!("{name} not defeated for the looping machine: {reason}")
            }
        }
        for halting_name in halting {
            let outcome = refuter::refute_product(&dnf, &machine(halting_name), 10_000).unwrap();
            assert!(
                matches!(outcome, RefutationOutcome::Inconclusive { .. }),
                "{name} against {halting_name}: {outcome:?}"
            );
        }
    }
    println!("criterion 8 PASS: synthesis and refutation split exactly on halting");
}

#[test]
fn solver_is_available_for_the_acceptance_run() {
    let cmd: SolverCmd = solver::discover().expect(
        "no SMT solver found: install z3, set QFLIA_SOLVER, or run `npm install` in tools/",
    );
    println!("using solver: {}", cmd.display());
}
