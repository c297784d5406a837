use num_bigint::BigInt;
use polyeq_core::corpus;
use polyeq_core::ehrhart::ehrhart_polynomial;
use polyeq_core::equidecomp::{
    match_triangulations, unimodular_triangulation_check, verify_matching, MatchOutcome,
    Triangulator, UnimodularCheck,
};
use polyeq_core::equivalence::{
    check_equivalence, equivalence_classes, verify_witness, EquivalenceWitness, Mode, Verdict,
};
use polyeq_core::polytope::{point, AffineUnimodularMap, LatticeSimplex};
use polyeq_core::search::{search, MutationPolicy};

fn simplex(name: &str) -> LatticeSimplex {
    LatticeSimplex::try_from(corpus::polytope(name).unwrap()).unwrap()
}

#[test]
fn each_example_is_one_class() {
    for k in 1..=5 {
        let names = corpus::example(k);
        let simplices: Vec<_> = names.iter().map(|n| simplex(n)).collect();
        let classes = equivalence_classes(&simplices).unwrap();
        assert_eq!(classes.len(), 1, "example {k}");
        let rep = &simplices[classes[0].representative];
        for (i, w) in &classes[0].members {
            assert!(verify_witness(rep, &simplices[*i], w), "{}", names[*i]);
        }
    }
}

#[test]
fn equivalent_pairs_share_ehrhart_polynomials() {
    for (a, b) in [
        ("example2_p7", "example2_p13"),
        ("example5_p1", "example5_p2"),
        ("example3_p1", "example3_p10"),
    ] {
        let (s, t) = (simplex(a), simplex(b));
        let v = check_equivalence(&s, &t, Mode::Full).unwrap();
        assert!(verify_witness(&s, &t, v.witness().unwrap()), "{a} {b}");
        assert_eq!(s.normalized_volume(), t.normalized_volume());
        assert_eq!(
            ehrhart_polynomial(s.as_polytope()).unwrap(),
            ehrhart_polynomial(t.as_polytope()).unwrap()
        );
    }
    let shift = AffineUnimodularMap::translation_by(point(&[1, 1, 1, 1]));
    let (s, t) = (simplex("example5_p1"), simplex("example5_p2"));
    assert_eq!(shift.apply(s.as_polytope()).unwrap(), *t.as_polytope());
    let f: Vec<usize> = s
        .vertices()
        .iter()
        .map(|v| {
            t.vertices()
                .iter()
                .position(|u| *u == shift.apply_point(v))
                .unwrap()
        })
        .collect();
    assert!(verify_witness(
        &s,
        &t,
        &EquivalenceWitness::from_map(&shift, f)
    ));
}

#[test]
fn counterexamples() {
    for (a, b, perms) in [("s21", "s22", 6), ("r1", "r2", 120)] {
        let (s, t) = (simplex(a), simplex(b));
        for mode in [Mode::Full, Mode::EqualVolume] {
            assert_eq!(
                check_equivalence(&s, &t, mode).unwrap(),
                Verdict::NotEquivalent {
                    permutations_tried: perms
                }
            );
        }
        assert_eq!(
            ehrhart_polynomial(s.as_polytope()).unwrap(),
            ehrhart_polynomial(t.as_polytope()).unwrap()
        );
    }
    assert_eq!(
        equivalence_classes(&[simplex("s21"), simplex("s22")])
            .unwrap()
            .len(),
        2
    );
}

#[test]
fn pyramids_of_small_triangles() {
    assert_eq!(simplex("s21").pyramid_lift(4).unwrap(), simplex("r1"));
    assert_eq!(simplex("s22").pyramid_lift(4).unwrap(), simplex("r2"));
    assert!(simplex("s21").pyramid_lift(2).is_err());
}

#[test]
fn example6_matching() {
    let p = corpus::polytope("example6_p1").unwrap();
    let q = corpus::polytope("example6_p2").unwrap();
    for how in [Triangulator::Pulling, Triangulator::Fine] {
        let MatchOutcome::Matched(w) = match_triangulations(&p, &q, how).unwrap() else {
            panic!("example 6 matches");
        };
        assert_eq!(w.len(), 4);
        assert!(w
            .p_cells
            .iter()
            .chain(&w.q_cells)
            .all(LatticeSimplex::is_unimodular));
        assert!(verify_matching(&p, &q, &w));
        assert!(how.triangulate(&q).unwrap().is_unimodular());
        let UnimodularCheck::Equidecomposable(u) =
            unimodular_triangulation_check(&p, &q, how).unwrap()
        else {
            panic!("unimodular triangulations");
        };
        assert!(verify_matching(&p, &q, &u));
    }
}

#[test]
fn simplex_pairs_match_in_one_cell() {
    let p = corpus::polytope("example1_p1").unwrap();
    let q = corpus::polytope("example1_p2").unwrap();
    let w = match_triangulations(&p, &q, Triangulator::Pulling).unwrap();
    let w = w.witness().unwrap();
    assert_eq!(w.len(), 1);
    assert!(verify_matching(&p, &q, w));
    assert!(
        check_equivalence(&simplex("example1_p1"), &simplex("example1_p2"), Mode::Full)
            .unwrap()
            .is_equivalent()
    );
}

#[test]
fn search_from_standard_simplex() {
    let standard = corpus::polytope("example2_p7").unwrap();
    assert_eq!(standard.num_vertices(), 5);
    let policy = MutationPolicy {
        budget: 40,
        seed: 1,
        ..MutationPolicy::default()
    };
    let report = search(std::slice::from_ref(&standard), &policy).unwrap();
    let class = report
        .classes
        .iter()
        .find(|c| c.key.to_string() == "1/24 t^4 + 5/12 t^3 + 35/24 t^2 + 25/12 t + 1")
        .expect("unimodular class");
    assert!(class.members.contains(&standard));
    assert!(class.members.len() >= 2);
    for m in &class.members {
        assert_eq!(normalized_volume(m), BigInt::from(1));
    }
}

fn normalized_volume(p: &polyeq_core::polytope::LatticePolytope) -> BigInt {
    polyeq_core::hull::triangulate(p)
        .unwrap()
        .normalized_volume()
}
