//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails. All comparisons are exact (tolerance 0).

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use polyeq_core::corpus;
use polyeq_core::ehrhart::{count_points, ehrhart_polynomial, reciprocity_check};
use polyeq_core::equidecomp::{verify_matching, MatchingWitness};
use polyeq_core::equivalence::{
    check_equivalence, equivalence_classes, verify_witness, EquivalenceWitness, Mode,
};
use polyeq_core::hull::{triangulate, volume, Mode as Containment};
use polyeq_core::linalg::Rational;
use polyeq_core::polytope::{LatticePolytope, LatticeSimplex};
use polyeq_core::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

type Check = Result<String, String>;

const GROUPS: &[(usize, &str)] = &[
    (1, "1/8 t^4 + 3/4 t^3 + 15/8 t^2 + 9/4 t + 1"),
    (2, "1/24 t^4 + 5/12 t^3 + 35/24 t^2 + 25/12 t + 1"),
    (3, "1/6 t^4 + t^3 + 7/3 t^2 + 5/2 t + 1"),
    (4, "1/8 t^4 + 5/12 t^3 + 11/8 t^2 + 25/12 t + 1"),
    (5, "8 t^4 + 38/3 t^3 + 6 t^2 + 7/3 t + 1"),
    (6, "1/6 t^4 + 2/3 t^3 + 11/6 t^2 + 7/3 t + 1"),
];
const PYRAMIDS: &str = "3/4 t^4 + 4 t^3 + 29/4 t^2 + 5 t + 1";

fn corpus_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/corpus")
        .join(format!("{name}.poly"))
}

/// Runs the binary with `--json` and returns the exit code and the report.
fn polyeq(args: &[&str]) -> Result<Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_polyeq"))
        .arg("--json")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.code() != Some(0) {
        return Err(format!(
            "polyeq {} exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    serde_json::from_slice(&out.stdout)
        .map_err(|e| format!("bad JSON from polyeq {}: {e}", args.join(" ")))
}

fn path_arg(name: &str) -> String {
    corpus_file(name).display().to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Pick: `L(t) = A t^2 + (B/2) t + 1` for a lattice triangle.
fn pick_polynomial(s: &LatticePolytope) -> String {
    let v: Vec<(i64, i64)> = s
        .vertices()
        .iter()
        .map(|p| (i64::try_from(&p[0]).unwrap(), i64::try_from(&p[1]).unwrap()))
        .collect();
    let twice_area =
        ((v[1].0 - v[0].0) * (v[2].1 - v[0].1) - (v[2].0 - v[0].0) * (v[1].1 - v[0].1)).abs();
    let boundary: i64 = (0..3)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % 3]);
            (b.0 - a.0).abs().gcd(&(b.1 - a.1).abs())
        })
        .sum();
    let term = |num: i64, den: i64, power: &str| {
        let r = Rational::new(BigInt::from(num), BigInt::from(den));
        let c = if r == Rational::from_integer(BigInt::from(1)) {
            String::new()
        } else {
            format!("{} ", polyeq_core::linalg::fmt_rational(&r))
        };
        format!("{c}{power}")
    };
    format!(
        "{} + {} + 1",
        term(twice_area, 2, "t^2"),
        term(boundary, 2, "t")
    )
}

fn expected_polynomial(name: &str) -> String {
    match name {
        "s21" | "s22" => pick_polynomial(&corpus::polytope(name).unwrap()),
        "r1" | "r2" => PYRAMIDS.to_string(),
        _ => {
            let group: usize = name["example".len()..name.find('_').unwrap()]
                .parse()
                .unwrap();
            GROUPS
                .iter()
                .find(|(g, _)| *g == group)
                .unwrap()
                .1
                .to_string()
        }
    }
}

fn criterion_1() -> Check {
    let names: Vec<&str> = corpus::names().collect();
    for name in &names {
        let report = polyeq(&["ehrhart", &path_arg(name)])?;
        let got = report["result"]["polynomial"].as_str().unwrap_or_default();
        let want = expected_polynomial(name);
        ensure(got == want, || format!("{name}: got {got}, want {want}"))?;
    }
    Ok(format!(
        "{} corpus polytopes reproduce their polynomials",
        names.len()
    ))
}

fn criterion_2() -> Check {
    let mut members = 0;
    for k in 1..=5 {
        let simplices: Vec<LatticeSimplex> = corpus::example(k)
            .iter()
            .map(|n| LatticeSimplex::try_from(corpus::polytope(n).unwrap()).unwrap())
            .collect();
        let classes = equivalence_classes(&simplices).map_err(|e| e.to_string())?;
        ensure(classes.len() == 1, || {
            format!("example {k}: {} classes", classes.len())
        })?;
        let rep = &simplices[classes[0].representative];
        for (i, w) in &classes[0].members {
            ensure(verify_witness(rep, &simplices[*i], w), || {
                format!("example {k}: witness {i} fails")
            })?;
        }
        members += simplices.len();
    }
    let report = polyeq(&["equiv", &path_arg("example2_p7"), &path_arg("example2_p13")])?;
    let w =
        EquivalenceWitness::from_json(&report["result"]["witness"]).map_err(|e| e.to_string())?;
    let s = LatticeSimplex::try_from(corpus::polytope("example2_p7").unwrap()).unwrap();
    let t = LatticeSimplex::try_from(corpus::polytope("example2_p13").unwrap()).unwrap();
    ensure(verify_witness(&s, &t, &w), || {
        "CLI witness for example2 P7/P13 fails".into()
    })?;
    Ok(format!(
        "5 examples, {members} simplices, one class each, all witnesses verify"
    ))
}

fn criterion_3() -> Check {
    for (a, b, perms) in [("r1", "r2", 120), ("s21", "s22", 6)] {
        let report = polyeq(&["equiv", &path_arg(a), &path_arg(b)])?;
        let r = &report["result"];
        ensure(r["verdict"] == "not_equivalent", || {
            format!("{a}/{b}: {}", r["verdict"])
        })?;
        ensure(r["permutations_tried"] == perms, || {
            format!(
                "{a}/{b}: {} permutations tried, want {perms}",
                r["permutations_tried"]
            )
        })?;
        let la = polyeq(&["ehrhart", &path_arg(a)])?["result"]["polynomial"].clone();
        let lb = polyeq(&["ehrhart", &path_arg(b)])?["result"]["polynomial"].clone();
        ensure(la == lb, || {
            format!("{a}/{b}: polynomials differ: {la} vs {lb}")
        })?;
        ensure(la.as_str() == Some(expected_polynomial(a).as_str()), || {
            format!("{a}: {la}")
        })?;
    }
    Ok("R1/R2 not equivalent after 120 permutations, S21/S22 after 6; equal polynomials".into())
}

fn criterion_4() -> Check {
    let report = polyeq(&[
        "equidecomp",
        &path_arg("example6_p1"),
        &path_arg("example6_p2"),
    ])?;
    let d = &report["result"]["dilations"][0];
    ensure(d["k"] == 1 && d["outcome"] == "matched", || {
        format!("k=1 outcome {d}")
    })?;
    let p = corpus::polytope("example6_p1").unwrap();
    let q = corpus::polytope("example6_p2").unwrap();
    let w = MatchingWitness::from_json(&d["witness"], 4).map_err(|e| e.to_string())?;
    ensure(w.len() == 4, || format!("{} pairs", w.len()))?;
    ensure(verify_matching(&p, &q, &w), || {
        "matching does not verify".into()
    })?;
    for x in [&p, &q] {
        let t = triangulate(x).map_err(|e| e.to_string())?;
        ensure(t.len() == 4 && t.is_unimodular(), || {
            format!("pulling triangulation: {} cells", t.len())
        })?;
    }
    Ok("4 verified cell pairs at k=1, both pulling triangulations 4 unimodular cells".into())
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..200 {
        let s = sample::simplex(2, -5, 5, &mut rng);
        let u = sample::affine_map(2, &mut rng);
        let t = sample::shuffled_image(&s, &u, &mut rng);
        let base = check_equivalence(&s, &t, Mode::Full)
            .map_err(|e| e.to_string())?
            .is_equivalent();
        for n in [3, 4] {
            let (ls, lt) = (s.pyramid_lift(n).unwrap(), t.pyramid_lift(n).unwrap());
            let v = check_equivalence(&ls, &lt, Mode::Full).map_err(|e| e.to_string())?;
            ensure(v.is_equivalent() == base, || {
                format!("trial {trial}, n={n}: {s:?} vs {t:?}")
            })?;
            if let Some(w) = v.witness() {
                ensure(verify_witness(&ls, &lt, w), || {
                    format!("trial {trial}, n={n}: witness fails")
                })?;
            }
        }
        ensure(base, || {
            format!("trial {trial}: image not recognised at n=2")
        })?;
    }
    let mut negatives = 0;
    while negatives < 50 {
        let s = sample::simplex(2, -5, 5, &mut rng);
        let t = sample::simplex(2, -5, 5, &mut rng);
        if s.normalized_volume() != t.normalized_volume() {
            continue;
        }
        if check_equivalence(&s, &t, Mode::Full)
            .map_err(|e| e.to_string())?
            .is_equivalent()
        {
            continue;
        }
        negatives += 1;
        for n in [3, 4] {
            let v = check_equivalence(
                &s.pyramid_lift(n).unwrap(),
                &t.pyramid_lift(n).unwrap(),
                Mode::Full,
            )
            .map_err(|e| e.to_string())?;
            ensure(!v.is_equivalent(), || {
                format!("lifted non-equivalent pair became equivalent: {s:?} {t:?} n={n}")
            })?;
        }
    }
    Ok("200 equivalent and 50 equal-volume non-equivalent pairs agree after lifting to n=3,4; 0 failures".into())
}

/// Counts lattice points of `kP` by scanning its whole bounding box.
fn box_count(p: &LatticePolytope, k: u64) -> u64 {
    let q = p.dilate(k).unwrap();
    let facets: Vec<(Vec<i64>, i64)> = q
        .facets()
        .unwrap()
        .iter()
        .map(|h| {
            (
                h.normal.iter().map(|x| i64::try_from(x).unwrap()).collect(),
                i64::try_from(&h.offset).unwrap(),
            )
        })
        .collect();
    let (lo, hi) = q.bounding_box();
    let lo: Vec<i64> = lo.iter().map(|x| i64::try_from(x).unwrap()).collect();
    let hi: Vec<i64> = hi.iter().map(|x| i64::try_from(x).unwrap()).collect();
    let n = lo.len();
    (lo[0]..=hi[0])
        .into_par_iter()
        .map(|x0| {
            let mut x = lo.clone();
            x[0] = x0;
            let mut count = 0u64;
            loop {
                if facets
                    .iter()
                    .all(|(a, b)| a.iter().zip(&x).map(|(ai, xi)| ai * xi).sum::<i64>() <= *b)
                {
                    count += 1;
                }
                let Some(i) = (1..n).rev().find(|&i| x[i] < hi[i]) else {
                    break;
                };
                x[i] += 1;
                x[i + 1..n].copy_from_slice(&lo[i + 1..n]);
            }
            count
        })
        .sum()
}

fn criterion_6() -> Check {
    let names: Vec<&str> = corpus::names().collect();
    for name in &names {
        let p = corpus::polytope(name).unwrap();
        let l = ehrhart_polynomial(&p).map_err(|e| e.to_string())?;
        let n = p.dim() as u64;
        ensure(
            l.evaluate_i64(0) == Rational::from_integer(BigInt::from(1)),
            || format!("{name}: L(0) != 1"),
        )?;
        let vol = volume(&p).map_err(|e| e.to_string())?;
        ensure(*l.leading() == vol, || {
            format!("{name}: leading {} vs volume {vol}", l.leading())
        })?;
        ensure(reciprocity_check(&p, 2).map_err(|e| e.to_string())?, || {
            format!("{name}: reciprocity fails")
        })?;
        let brute = BigInt::from(box_count(&p, n + 2));
        ensure(
            l.evaluate_i64(n as i64 + 2) == Rational::from_integer(brute.clone()),
            || {
                format!(
                    "{name}: L({}) = {} but box scan finds {brute}",
                    n + 2,
                    l.evaluate_i64(n as i64 + 2)
                )
            },
        )?;
        let fiber = count_points(&p, n + 2, Containment::Closed).map_err(|e| e.to_string())?;
        ensure(fiber == brute, || {
            format!("{name}: fiber count {fiber} vs box scan {brute}")
        })?;
    }
    Ok(format!(
        "{} corpus polytopes: L(0)=1, c_n = volume, reciprocity k<=2, L(n+2) = box scan",
        names.len()
    ))
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..100 {
        let n = 2 + trial % 3;
        let p = sample::polytope(n, n + 2, -2, 2, &mut rng);
        let u = sample::affine_map(n, &mut rng);
        let q = LatticePolytope::new(n, u.apply(&p).unwrap().vertices().to_vec()).unwrap();
        let lp = ehrhart_polynomial(&p).map_err(|e| e.to_string())?;
        let lq = ehrhart_polynomial(&q).map_err(|e| e.to_string())?;
        ensure(lp == lq, || format!("trial {trial}: {lp} vs {lq}"))?;
        let vp = triangulate(&p)
            .map_err(|e| e.to_string())?
            .normalized_volume();
        let vq = triangulate(&q)
            .map_err(|e| e.to_string())?
            .normalized_volume();
        ensure(vp == vq, || format!("trial {trial}: volumes {vp} vs {vq}"))?;
        for k in [2, 3] {
            let lk = ehrhart_polynomial(&p.dilate(k).unwrap()).map_err(|e| e.to_string())?;
            ensure(lk == lp.dilate(k), || {
                format!("trial {trial}: L_kP != L_P(kt) at k={k}")
            })?;
        }
        let s = sample::simplex(n, -3, 3, &mut rng);
        let t = if rng.gen_bool(0.5) {
            sample::shuffled_image(&s, &sample::affine_map(n, &mut rng), &mut rng)
        } else {
            sample::simplex(n, -3, 3, &mut rng)
        };
        let before = check_equivalence(&s, &t, Mode::Full).map_err(|e| e.to_string())?;
        let after = check_equivalence(
            &u.apply_simplex(&s).unwrap(),
            &u.apply_simplex(&t).unwrap(),
            Mode::Full,
        )
        .map_err(|e| e.to_string())?;
        ensure(before.is_equivalent() == after.is_equivalent(), || {
            format!("trial {trial}: verdict changed")
        })?;
    }
    Ok("100 (polytope, map) pairs in dims 2-4: polynomial, volume, verdicts invariant; L_kP(t) = L_P(kt), k=2,3".into())
}

fn criterion_8() -> Check {
    let report = polyeq(&[
        "equidecomp",
        &path_arg("r1"),
        &path_arg("r2"),
        "--dilate",
        "6",
    ])?;
    let dilations = report["result"]["dilations"]
        .as_array()
        .cloned()
        .unwrap_or_default();
    let ks: Vec<u64> = dilations.iter().filter_map(|d| d["k"].as_u64()).collect();
    ensure(ks == (1..=6).collect::<Vec<_>>(), || {
        format!("covered k = {ks:?}")
    })?;
    let p = corpus::polytope("r1").unwrap();
    let q = corpus::polytope("r2").unwrap();
    let mut summary = Vec::new();
    for d in &dilations {
        let k = d["k"].as_u64().unwrap();
        let outcome = d["outcome"].as_str().unwrap_or_default().to_string();
        if outcome == "matched" {
            let w = MatchingWitness::from_json(&d["witness"], 4).map_err(|e| e.to_string())?;
            ensure(
                verify_matching(&p.dilate(k).unwrap(), &q.dilate(k).unwrap(), &w),
                || format!("k={k}: matching does not verify"),
            )?;
        }
        summary.push(format!("k={k} {outcome}"));
    }
    Ok(format!(
        "report covers k=1..6 ({}); matched entries verify (evidence only)",
        summary.join(", ")
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 8] = [
        ("ehrhart regression, exact", criterion_1),
        ("mutual unimodular equivalence, exact", criterion_2),
        ("R1/R2 and S21/S22 counterexamples, exact", criterion_3),
        ("example 6 equidecomposability, exact", criterion_4),
        ("pyramid lifts, 0 failures allowed", criterion_5),
        ("ehrhart properties on the corpus, exact", criterion_6),
        ("invariance under unimodular maps, exact", criterion_7),
        ("dilation harness on R1/R2, completion", criterion_8),
    ];
    let mut failed = 0;
    for (i, (label, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} [{label}]: PASS ({secs:.1}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} [{label}]: FAIL ({secs:.1}s) {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
