//! Property-based checks: parser/printer round trip, tight-DNF equivalence
//! against brute-force evaluation, cube convexity under integer midpoints,
//! and priming involution.

use std::collections::BTreeSet;

use proptest::prelude::*;

use qflia_core::formula::{
    parse_formula, print_formula, to_tight_dnf, Assignment, Formula, Int, LinTerm, Rel,
};

const VARS: [&str; 4] = ["a", "b", "x", "y"];

/// Array-backed assignment over the fixed test variables.
struct BoxEnv<'a>(&'a [Int; 4]);

impl Assignment for BoxEnv<'_> {
    fn lookup(&self, var: &str) -> Option<Int> {
        VARS.iter().position(|v| *v == var).map(|i| self.0[i])
    }
}

fn arb_linterm() -> impl Strategy<Value = LinTerm> {
    (proptest::collection::vec(-3i128..=3, 4), -4i128..=4).prop_map(|(coeffs, constant)| {
        let mut term = LinTerm::constant(constant);
        for (&c, v) in coeffs.iter().zip(VARS) {
            term = term.checked_add(&LinTerm::with_coeff(c, v)).unwrap();
        }
        term
    })
}

fn arb_rel() -> impl Strategy<Value = Rel> {
    prop_oneof![
        Just(Rel::Le),
        Just(Rel::Lt),
        Just(Rel::Eq),
        Just(Rel::Ge),
        Just(Rel::Gt),
        Just(Rel::Ne),
    ]
}

fn arb_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        6 => (arb_linterm(), arb_rel(), arb_linterm())
            .prop_map(|(lhs, rel, rhs)| Formula::atom(lhs, rel, rhs)),
        1 => Just(Formula::True),
        1 => Just(Formula::False),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            proptest::collection::vec(inner.clone(), 0..3).prop_map(Formula::And),
            proptest::collection::vec(inner, 0..3).prop_map(Formula::Or),
        ]
    })
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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printer_parser_round_trip(phi in arb_formula()) {
        let text = print_formula(&phi);
        let reparsed = parse_formula(&text).unwrap();
        prop_assert_eq!(&reparsed, &phi, "text was: {}", text);
    }

    #[test]
    fn tight_dnf_is_equivalent_on_the_box(phi in arb_formula()) {
        let dnf = to_tight_dnf(&phi).unwrap();
        let mut mismatch = None;
        for_each_box_point(6, |point| {
            if mismatch.is_some() {
                return;
            }
            let env = BoxEnv(point);
            let direct = phi.eval(&env).unwrap();
            let normalized = dnf.sat(&env).unwrap();
            if direct != normalized {
                mismatch = Some((*point, direct, normalized));
            }
        });
        prop_assert_eq!(mismatch, None);
    }

    #[test]
    fn cubes_are_closed_under_integer_midpoints(phi in arb_formula()) {
        let dnf = to_tight_dnf(&phi).unwrap();
        for cube in dnf.cubes() {
            // Collect a few satisfying points, then check every even-sum pair.
            let mut sat_points: Vec<[Int; 4]> = Vec::new();
            for_each_box_point(4, |point| {
                if sat_points.len() < 24 && cube.sat(&BoxEnv(point)).unwrap() {
                    sat_points.push(*point);
                }
            });
            for (i, p) in sat_points.iter().enumerate() {
                for q in &sat_points[i + 1..] {
                    let sums: Vec<Int> = p.iter().zip(q).map(|(a, b)| a + b).collect();
                    if sums.iter().any(|s| s % 2 != 0) {
                        continue;
                    }
                    let mid = [sums[0] / 2, sums[1] / 2, sums[2] / 2, sums[3] / 2];
                    prop_assert!(
                        cube.sat(&BoxEnv(&mid)).unwrap(),
                        "midpoint of {:?} and {:?} escapes the cube",
                        p,
                        q
                    );
                }
            }
        }
    }

    #[test]
    fn priming_is_inverted_by_unpriming(phi in arb_formula()) {
        let primed = phi.prime().unwrap();
        prop_assert_eq!(primed.unprime().unwrap(), phi.clone());
        let expected: BTreeSet<String> =
            phi.free_vars().iter().map(|v| format!("{v}'")).collect();
        prop_assert_eq!(primed.free_vars(), expected);
    }

    #[test]
    fn dnf_cubes_imply_the_formula(phi in arb_formula()) {
        // Soundness direction point-wise: any point in some cube satisfies phi.
        let dnf = to_tight_dnf(&phi).unwrap();
        let mut bad = None;
        for_each_box_point(3, |point| {
            if bad.is_none()
                && dnf.sat(&BoxEnv(point)).unwrap()
                && !phi.eval(&BoxEnv(point)).unwrap()
            {
                bad = Some(*point);
            }
        });
        prop_assert_eq!(bad, None);
    }
}
