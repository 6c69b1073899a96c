//! Canonical keys for isomorphism testing.
//!
//! Colour refinement followed by individualization: every leaf of the search
//! tree is a discrete colouring, hence a relabeling of the structure, and the
//! key is the lexicographically least relabeled fact list.

use serde::{Deserialize, Serialize};

use super::structure::{Elem, Fact, Structure};
use crate::{Error, Limits, Result};

/// Equal for two structures over one schema iff they are isomorphic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonKey {
    pub size: usize,
    pub facts: Vec<(usize, Vec<Elem>)>,
}

const SELF: u64 = u64::MAX;

/// Refines `colour` (ranks, 0-based) to a stable equitable colouring.
/// Colour of an element with its sorted incidence list.
type Signature = (u64, Vec<(usize, Vec<u64>)>);

fn refine(incident: &[Vec<&Fact>], colour: &mut Vec<u64>) {
    let n = colour.len();
    let mut classes = count_classes(colour);
    loop {
        let mut sigs: Vec<Signature> = (0..n)
            .map(|e| {
                let mut items: Vec<(usize, Vec<u64>)> = incident[e]
                    .iter()
                    .map(|f| {
                        let pattern = f
                            .args
                            .iter()
                            .map(|&a| if a as usize == e { SELF } else { colour[a as usize] })
                            .collect();
                        (f.rel, pattern)
                    })
                    .collect();
                items.sort_unstable();
                (colour[e], items)
            })
            .collect();
        let mut sorted: Vec<&Signature> = sigs.iter().collect();
        sorted.sort_unstable();
        sorted.dedup();
        let rank = |sig: &(u64, Vec<(usize, Vec<u64>)>)| {
            sorted.binary_search(&sig).expect("signature present") as u64
        };
        let next: Vec<u64> = sigs.iter().map(rank).collect();
        let new_classes = sorted.len();
        sigs.clear();
        *colour = next;
        if new_classes == classes {
            break;
        }
        classes = new_classes;
    }
}

fn count_classes(colour: &[u64]) -> usize {
    let mut c = colour.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn relabel(s: &Structure, colour: &[u64]) -> Vec<(usize, Vec<Elem>)> {
    let mut facts: Vec<(usize, Vec<Elem>)> = s
        .facts()
        .iter()
        .map(|f| (f.rel, f.args.iter().map(|&a| colour[a as usize] as Elem).collect()))
        .collect();
    facts.sort_unstable();
    facts
}

struct Canon<'a> {
    s: &'a Structure,
    incident: Vec<Vec<&'a Fact>>,
    best: Option<Vec<(usize, Vec<Elem>)>>,
    nodes: u64,
    limit: u64,
}

impl Canon<'_> {
    fn search(&mut self, colour: Vec<u64>) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(Error::limit("canonical labeling nodes", self.limit));
        }
        let n = colour.len();
        // first smallest non-singleton cell, by colour value
        let mut sizes = vec![0usize; n];
        for &c in &colour {
            sizes[c as usize] += 1;
        }
        let target = (0..n)
            .filter(|&c| sizes[c] > 1)
            .min_by_key(|&c| (sizes[c], c));
        let Some(cell) = target else {
            let labeled = relabel(self.s, &colour);
            if self.best.as_ref().is_none_or(|b| labeled < *b) {
                self.best = Some(labeled);
            }
            return Ok(());
        };
        let members: Vec<usize> = (0..n).filter(|&e| colour[e] == cell as u64).collect();
        for e in members {
            // e keeps rank `cell`; its cell-mates move just above it
            let mut next: Vec<u64> = colour
                .iter()
                .enumerate()
                .map(|(x, &c)| 2 * c + u64::from(c == cell as u64 && x != e))
                .collect();
            rerank(&mut next);
            refine(&self.incident, &mut next);
            self.search(next)?;
        }
        Ok(())
    }
}

fn rerank(colour: &mut [u64]) {
    let mut vals = colour.to_vec();
    vals.sort_unstable();
    vals.dedup();
    for c in colour.iter_mut() {
        *c = vals.binary_search(c).expect("value present") as u64;
    }
}

/// Canonical key of `s`; isolated elements count towards `size`.
pub fn canonical_key(s: &Structure, limits: &Limits) -> Result<CanonKey> {
    let n = s.domain_size();
    let mut incident: Vec<Vec<&Fact>> = vec![Vec::new(); n];
    for f in s.facts() {
        let mut seen: Vec<Elem> = Vec::new();
        for &a in &f.args {
            if !seen.contains(&a) {
                seen.push(a);
                incident[a as usize].push(f);
            }
        }
    }
    let mut colour = vec![0u64; n];
    refine(&incident, &mut colour);
    let mut canon = Canon {
        s,
        incident,
        best: None,
        nodes: 0,
        limit: limits.max_search_nodes,
    };
    canon.search(colour)?;
    Ok(CanonKey {
        size: n,
        facts: canon.best.unwrap_or_default(),
    })
}

/// Isomorphism test via canonical keys.
pub fn is_isomorphic(a: &Structure, b: &Structure, limits: &Limits) -> Result<bool> {
    if a.schema() != b.schema()
        || a.domain_size() != b.domain_size()
        || a.fact_count() != b.fact_count()
        || a.relation_counts() != b.relation_counts()
    {
        return Ok(false);
    }
    Ok(canonical_key(a, limits)? == canonical_key(b, limits)?)
}
