//! Embedded reference polytopes, one text document per entry.

use crate::document::PolytopeDocument;
use crate::error::{Error, Result};
use crate::polytope::LatticePolytope;

macro_rules! corpus {
    ($($name:literal),* $(,)?) => {
        const ENTRIES: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../corpus/", $name, ".poly")))),*
        ];
    };
}

corpus!(
    "example1_p1",
    "example1_p2",
    "example1_p3",
    "example1_p4",
    "example1_p5",
    "example1_p6",
    "example1_p7",
    "example1_p8",
    "example1_p9",
    "example2_p1",
    "example2_p2",
    "example2_p3",
    "example2_p4",
    "example2_p5",
    "example2_p6",
    "example2_p7",
    "example2_p8",
    "example2_p9",
    "example2_p10",
    "example2_p11",
    "example2_p12",
    "example2_p13",
    "example2_p14",
    "example2_p15",
    "example2_p16",
    "example2_p17",
    "example2_p18",
    "example2_p19",
    "example2_p20",
    "example2_p21",
    "example2_p22",
    "example3_p1",
    "example3_p2",
    "example3_p3",
    "example3_p4",
    "example3_p5",
    "example3_p6",
    "example3_p7",
    "example3_p8",
    "example3_p9",
    "example3_p10",
    "example4_p1",
    "example4_p2",
    "example4_p3",
    "example4_p4",
    "example5_p1",
    "example5_p2",
    "example5_p3",
    "example6_p1",
    "example6_p2",
    "r1",
    "r2",
    "s21",
    "s22",
);

/// Names of all entries in a stable order.
pub fn names() -> impl Iterator<Item = &'static str> {
    ENTRIES.iter().map(|(name, _)| *name)
}

pub fn source(name: &str) -> Option<&'static str> {
    ENTRIES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn document(name: &str) -> Result<PolytopeDocument> {
    let text =
        source(name).ok_or_else(|| Error::InvalidArgument(format!("no corpus entry `{name}`")))?;
    PolytopeDocument::parse_text(text)
}

pub fn polytope(name: &str) -> Result<LatticePolytope> {
    document(name)?.to_polytope()
}

/// Members of example group `k`, e.g. `example2_p1 .. example2_p22`.
pub fn example(k: usize) -> Vec<&'static str> {
    let prefix = format!("example{k}_p");
    names()
        .filter(|n| {
            n.strip_prefix(&prefix)
                .is_some_and(|rest| rest.parse::<usize>().is_ok())
        })
        .collect()
}
