//! Structures that separate two non-isomorphic connected structures by
//! homomorphism counts.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::qcore::{hom_count, is_connected, is_isomorphic, product, Elem, Fact, Structure};
use crate::{Error, Limits, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// 0 for the first input, 1 for the second.
    Input(usize),
    Product(usize, usize),
    Enumerated { size: usize, candidate: u64 },
}

#[derive(Debug, Clone)]
pub struct Distinguisher {
    pub structure: Structure,
    pub origin: Origin,
    pub counts: (BigUint, BigUint),
}

/// Finds `H` with `hom(w, H) ≠ hom(w2, H)`. Tries `w`, `w2`, their pairwise
/// products, then every structure on `1..=max(|w|, |w2|)` elements in order
/// of size and fact count, within `max_distinguisher_candidates`.
pub fn find_distinguisher(w: &Structure, w2: &Structure, limits: &Limits) -> Result<Distinguisher> {
    w.same_schema(w2)?;
    if !is_connected(w) || !is_connected(w2) {
        return Err(Error::Precondition("distinguisher inputs must be connected".into()));
    }
    if is_isomorphic(w, w2, limits)? {
        return Err(Error::Precondition("inputs are isomorphic".into()));
    }
    let try_one = |h: &Structure| -> Result<Option<(BigUint, BigUint)>> {
        let a = hom_count(w, h, limits)?;
        let b = hom_count(w2, h, limits)?;
        Ok((a != b).then_some((a, b)))
    };
    let inputs = [w, w2];
    for (i, h) in inputs.iter().enumerate() {
        if let Some(counts) = try_one(h)? {
            return Ok(Distinguisher {
                structure: (*h).clone(),
                origin: Origin::Input(i),
                counts,
            });
        }
    }
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        let h = match product(inputs[i], inputs[j], limits) {
            Ok(h) => h,
            Err(e) if e.is_limit() => continue,
            Err(e) => return Err(e),
        };
        if let Some(counts) = try_one(&h)? {
            return Ok(Distinguisher {
                structure: h,
                origin: Origin::Product(i, j),
                counts,
            });
        }
    }

    let schema = w.schema();
    let max_n = w.domain_size().max(w2.domain_size());
    let mut tried: u64 = 0;
    for n in 1..=max_n {
        let mut slots: Vec<Fact> = Vec::new();
        for r in 0..schema.len() {
            let arity = schema.arity(r);
            let total = n.pow(arity as u32);
            for code in 0..total {
                let mut c = code;
                let args = (0..arity)
                    .map(|_| {
                        let a = (c % n) as Elem;
                        c /= n;
                        a
                    })
                    .collect();
                slots.push(Fact::new(r, args));
            }
        }
        for size in 0..=slots.len() {
            let mut pick: Vec<usize> = (0..size).collect();
            loop {
                tried += 1;
                if tried > limits.max_distinguisher_candidates {
                    return Err(Error::limit(
                        format!(
                            "distinguisher candidates ({} vs {} facts, reached size {n})",
                            w.fact_count(),
                            w2.fact_count()
                        ),
                        limits.max_distinguisher_candidates,
                    ));
                }
                let facts = pick.iter().map(|&i| slots[i].clone());
                let h = Structure::from_facts(schema.clone(), n, None, facts)?;
                // smaller active domains were covered at an earlier size
                if h.domain_size() == n {
                    if let Some(counts) = try_one(&h)? {
                        return Ok(Distinguisher {
                            structure: h,
                            origin: Origin::Enumerated {
                                size: n,
                                candidate: tried,
                            },
                            counts,
                        });
                    }
                }
                if !next_combination(&mut pick, slots.len()) {
                    break;
                }
            }
        }
    }
    Err(Error::Invalid(
        "no distinguisher among all structures up to the size bound".into(),
    ))
}

fn next_combination(pick: &mut [usize], n: usize) -> bool {
    let k = pick.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if pick[i] < n - k + i {
            pick[i] += 1;
            for j in i + 1..k {
                pick[j] = pick[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
