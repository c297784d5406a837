use std::fmt::Write as _;

use num_bigint::BigInt;
use polyeq_core::document::{bigint_to_json, PolytopeDocument};
use polyeq_core::ehrhart::{ehrhart_polynomial, reciprocity_check, EhrhartPolynomial};
use polyeq_core::equidecomp::{dilation_search, verify_matching, DilationOutcome, Triangulator};
use polyeq_core::equivalence::{check_equivalence, permuted_target, verify_witness, Mode, Verdict};
use polyeq_core::hull::triangulate;
use polyeq_core::linalg::{fmt_rational, IntegerMatrix};
use polyeq_core::polytope::{fmt_point, LatticePolytope, LatticeSimplex};
use polyeq_core::search::{search as run_search, MutationPolicy};
use polyeq_core::Error;
use serde_json::{json, Value};

use crate::{Failure, Input, Outcome};

type CommandResult = Result<(Outcome, Vec<Input>), Failure>;

fn polytope(input: &Input) -> Result<LatticePolytope, Failure> {
    input
        .document
        .to_polytope()
        .map_err(|e| Failure::Usage(format!("{}: {e}", input.path.display())))
}

fn coefficients_json(l: &EhrhartPolynomial) -> Value {
    l.coefficients()
        .iter()
        .map(|c| json!(fmt_rational(c)))
        .collect()
}

fn matrix_json(m: &IntegerMatrix) -> Value {
    m.to_rows()
        .iter()
        .map(|row| row.iter().map(bigint_to_json).collect::<Vec<_>>())
        .collect()
}

/// Right-aligned rows, indented by two spaces.
fn matrix_text(m: &IntegerMatrix) -> String {
    let cells: Vec<Vec<String>> = m
        .to_rows()
        .iter()
        .map(|r| r.iter().map(ToString::to_string).collect())
        .collect();
    let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
    let mut out = String::new();
    for row in cells {
        let padded: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
        let _ = writeln!(out, "  [ {} ]", padded.join(" "));
    }
    out
}

fn normalized_volume(p: &LatticePolytope) -> Result<BigInt, Failure> {
    Ok(triangulate(p)?.normalized_volume())
}

pub fn ehrhart(input: Input) -> CommandResult {
    let p = polytope(&input)?;
    let l = ehrhart_polynomial(&p)?;
    let volume = normalized_volume(&p)?;
    let reciprocity = reciprocity_check(&p, 2)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "polytope: {} (dimension {}, {} vertices)",
        input.name,
        p.dim(),
        p.num_vertices()
    );
    let _ = writeln!(text, "L(t) = {l}");
    let coeffs: Vec<String> = l.coefficients().iter().map(fmt_rational).collect();
    let _ = writeln!(text, "coefficients: ({})", coeffs.join(", "));
    let _ = writeln!(text, "normalized volume: {volume}");
    let _ = writeln!(
        text,
        "reciprocity for k = 1, 2: {}",
        if reciprocity { "holds" } else { "FAILS" }
    );
    let json = json!({
        "polynomial": l.to_string(),
        "coefficients": coefficients_json(&l),
        "normalized_volume": bigint_to_json(&volume),
        "reciprocity_k2": reciprocity,
    });
    Ok((Outcome { text, json }, vec![input]))
}

fn simplex(input: &Input) -> Result<LatticeSimplex, Failure> {
    let p = polytope(input)?;
    if !p.is_simplex() {
        return Err(Failure::Usage(format!(
            "{} has {} vertices and is not a {}-simplex; use `polyeq equidecomp` for general polytopes",
            input.name,
            p.num_vertices(),
            p.dim()
        )));
    }
    Ok(LatticeSimplex::try_from(p)?)
}

pub fn equiv(source: Input, target: Input, mode: Mode) -> CommandResult {
    let s = simplex(&source)?;
    let t = simplex(&target)?;
    let verdict = check_equivalence(&s, &t, mode)?;
    let mode_name = match mode {
        Mode::Full => "full",
        Mode::EqualVolume => "equal-volume",
    };
    let mut text = String::new();
    for (label, input, x) in [("S", &source, &s), ("T", &target, &t)] {
        let _ = writeln!(
            text,
            "{label}: {} ({}-simplex, normalized volume {})",
            input.name,
            x.dim(),
            x.normalized_volume()
        );
    }
    let _ = writeln!(text, "mode: {mode_name}");
    let json = match &verdict {
        Verdict::NotEquivalent { permutations_tried } => {
            let _ = writeln!(
                text,
                "verdict: not equivalent ({permutations_tried} permutations tried)"
            );
            json!({
                "mode": mode_name,
                "verdict": "not_equivalent",
                "permutations_tried": permutations_tried,
            })
        }
        Verdict::Equivalent(w) => {
            if !verify_witness(&s, &t, w) {
                return Err(Failure::Internal(
                    "equivalence witness does not verify".into(),
                ));
            }
            let target_matrix = permuted_target(&t, w);
            let _ = writeln!(text, "verdict: equivalent");
            let f: Vec<String> = w
                .vertex_bijection
                .iter()
                .enumerate()
                .map(|(i, j)| format!("s{} -> t{}", i + 1, j + 1))
                .collect();
            let _ = writeln!(text, "vertex bijection: {}", f.join(", "));
            let _ = write!(text, "B =\n{}", matrix_text(&w.linear));
            let _ = writeln!(text, "c = {}", fmt_point(&w.translation));
            let _ = write!(text, "A =\n{}", matrix_text(&w.certificate_matrix));
            let _ = write!(text, "D_T P =\n{}", matrix_text(&target_matrix));
            json!({
                "mode": mode_name,
                "verdict": "equivalent",
                "witness": w.to_json(),
                "permuted_target": matrix_json(&target_matrix),
            })
        }
    };
    Ok((Outcome { text, json }, vec![source, target]))
}

pub fn pyramid(input: Input, target_dim: usize) -> CommandResult {
    let s = simplex(&input)?;
    let lifted = s.pyramid_lift(target_dim)?;
    let doc = PolytopeDocument::from_polytope(
        lifted.as_polytope(),
        Some(format!("{}_lift{target_dim}", input.name)),
    );
    let text = doc.to_text();
    let json = json!({ "document": doc.to_json() });
    Ok((Outcome { text, json }, vec![input]))
}

const EVIDENCE_BANNER: &str =
    "evidence only: no matching was found for these particular triangulations, \
which does not show that the polytopes are not equidecomposable";

pub fn equidecomp(pi: Input, qi: Input, k_max: u64, how: Triangulator) -> CommandResult {
    let p = polytope(&pi)?;
    let q = polytope(&qi)?;
    if p.dim() != q.dim() {
        return Err(Error::Dimension(format!("dimensions {} and {}", p.dim(), q.dim())).into());
    }
    let (vp, vq) = (normalized_volume(&p)?, normalized_volume(&q)?);
    let mut text = String::new();
    for (label, input, x, v) in [("P", &pi, &p, &vp), ("Q", &qi, &q, &vq)] {
        let _ = writeln!(
            text,
            "{label}: {} (dimension {}, normalized volume {v})",
            input.name,
            x.dim()
        );
    }
    let obstruction = if vp != vq {
        Some((
            "volume",
            format!("normalized volumes differ ({vp} vs {vq})"),
        ))
    } else {
        let (lp, lq) = (ehrhart_polynomial(&p)?, ehrhart_polynomial(&q)?);
        if lp != lq {
            Some((
                "ehrhart",
                format!("Ehrhart polynomials differ ({lp} vs {lq})"),
            ))
        } else {
            let _ = writeln!(text, "L(t) = {lp}");
            None
        }
    };
    if let Some((kind, why)) = obstruction {
        let _ = writeln!(text, "verdict: not equidecomposable ({why})");
        let json = json!({
            "verdict": "not_equidecomposable",
            "obstruction": kind,
            "reason": why,
        });
        return Ok((Outcome { text, json }, vec![pi, qi]));
    }

    let report = dilation_search(&p, &q, k_max, how)?;
    let _ = writeln!(text, "triangulation: {}", how.name());
    let mut entries = Vec::new();
    let mut negative = false;
    for (k, outcome) in &report.tested {
        let entry = match outcome {
            DilationOutcome::Matched { witness, from } => {
                if !verify_matching(&p.dilate(*k)?, &q.dilate(*k)?, witness) {
                    return Err(Failure::Internal(format!(
                        "matching at k={k} does not verify"
                    )));
                }
                let unimodular = witness
                    .p_cells
                    .iter()
                    .chain(&witness.q_cells)
                    .all(LatticeSimplex::is_unimodular);
                let origin = from
                    .map(|j| format!(", dilated from k={j}"))
                    .unwrap_or_default();
                let _ = writeln!(
                    text,
                    "k={k}: matched, {} cell pairs{}{origin} (verified)",
                    witness.len(),
                    if unimodular { ", all unimodular" } else { "" }
                );
                json!({
                    "k": k,
                    "outcome": "matched",
                    "from": from,
                    "pairs": witness.len(),
                    "unimodular": unimodular,
                    "witness": witness.to_json(),
                })
            }
            DilationOutcome::NotMatched { p_cells, q_cells } => {
                negative = true;
                let _ = writeln!(
                    text,
                    "k={k}: no matching found ({p_cells} and {q_cells} cells)"
                );
                json!({ "k": k, "outcome": "not_matched", "p_cells": p_cells, "q_cells": q_cells })
            }
            DilationOutcome::CapacityExceeded(msg) => {
                negative = true;
                let _ = writeln!(text, "k={k}: skipped, {msg}");
                json!({ "k": k, "outcome": "capacity_exceeded", "reason": msg })
            }
        };
        entries.push(entry);
    }
    match report.first_success {
        Some(k) => {
            let _ = writeln!(text, "first match: k={k}");
        }
        None => {
            let _ = writeln!(text, "no match for k <= {k_max}");
        }
    }
    if negative {
        let _ = writeln!(text, "{EVIDENCE_BANNER}");
    }
    let json = json!({
        "verdict": if report.first_success.is_some() { "matched" } else { "no_matching_found" },
        "triangulation": how.name(),
        "first_success": report.first_success,
        "evidence_only": negative,
        "note": if negative { Some(EVIDENCE_BANNER) } else { None },
        "dilations": entries,
    });
    Ok((Outcome { text, json }, vec![pi, qi]))
}

pub fn search(
    inputs: Vec<Input>,
    budget: usize,
    seed: u64,
    delta_min: i64,
    delta_max: i64,
) -> CommandResult {
    let seeds = inputs.iter().map(polytope).collect::<Result<Vec<_>, _>>()?;
    let policy = MutationPolicy {
        delta_min,
        delta_max,
        budget,
        seed,
    };
    let report = run_search(&seeds, &policy)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "seed {seed}, budget {budget}: {} polytopes evaluated, {} degenerate mutants, {} skipped for capacity",
        report.evaluated, report.degenerate, report.capacity_skipped
    );
    let _ = writeln!(text, "{} collision classes", report.classes.len());
    let mut classes = Vec::new();
    for (i, class) in report.classes.iter().enumerate() {
        let _ = writeln!(
            text,
            "class {}: {} members, L(t) = {}",
            i + 1,
            class.members.len(),
            class.key
        );
        for m in &class.members {
            let verts: Vec<String> = m.sorted_vertices().iter().map(|v| fmt_point(v)).collect();
            let _ = writeln!(text, "  conv{{{}}}", verts.join(", "));
        }
        classes.push(json!({
            "key": class.key.to_string(),
            "coefficients": coefficients_json(&class.key),
            "members": class.members.iter().map(|m| PolytopeDocument::from_polytope(m, None).to_json()).collect::<Vec<_>>(),
        }));
    }
    let json = json!({
        "seed": seed,
        "budget": budget,
        "delta": [delta_min, delta_max],
        "evaluated": report.evaluated,
        "degenerate": report.degenerate,
        "capacity_skipped": report.capacity_skipped,
        "classes": classes,
    });
    Ok((Outcome { text, json }, inputs))
}
