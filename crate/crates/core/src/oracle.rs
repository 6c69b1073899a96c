//! Brute-force reference implementations.
//!
//! Everything here enumerates all maps and shares no code with the search
//! in [`crate::qcore::hom`] or [`crate::qcore::canon`]. Meant for tests on
//! small inputs.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::qcore::{ConjunctiveQuery, Elem, Structure};
use crate::{Error, Result};

/// Largest number of maps any oracle enumerates.
pub const MAX_MAPS: u64 = 50_000_000;

fn maps(n_src: usize, n_dst: usize) -> Result<u64> {
    let mut total: u64 = 1;
    for _ in 0..n_src {
        total = total
            .checked_mul(n_dst as u64)
            .filter(|&t| t <= MAX_MAPS)
            .ok_or_else(|| Error::limit("oracle maps", MAX_MAPS))?;
    }
    Ok(total)
}

/// Calls `f` on every map `0..n_src → 0..n_dst`.
fn each_map(n_src: usize, n_dst: usize, mut f: impl FnMut(&[Elem])) {
    if n_src == 0 {
        f(&[]);
        return;
    }
    if n_dst == 0 {
        return;
    }
    let mut h = vec![0 as Elem; n_src];
    loop {
        f(&h);
        let mut i = 0;
        loop {
            if i == n_src {
                return;
            }
            h[i] += 1;
            if (h[i] as usize) < n_dst {
                break;
            }
            h[i] = 0;
            i += 1;
        }
    }
}

fn is_hom(a: &Structure, b: &Structure, h: &[Elem]) -> bool {
    a.facts().iter().all(|f| {
        let img: Vec<Elem> = f.args.iter().map(|&x| h[x as usize]).collect();
        b.contains(f.rel, &img)
    })
}

/// Counts homomorphisms `a → b` over all `|b|^|a|` maps.
pub fn hom_count(a: &Structure, b: &Structure) -> Result<BigUint> {
    maps(a.domain_size(), b.domain_size())?;
    let mut count: u64 = 0;
    each_map(a.domain_size(), b.domain_size(), |h| {
        if is_hom(a, b, h) {
            count += 1;
        }
    });
    Ok(BigUint::from(count))
}

/// Boolean CQ evaluation through [`hom_count`].
pub fn eval_boolean_cq(q: &ConjunctiveQuery, d: &Structure) -> Result<BigUint> {
    hom_count(&q.frozen_body(), d)
}

/// Answer multiplicities of `q` on `d` for every tuple of domain elements,
/// zero entries omitted.
pub fn eval_cq_bag(
    q: &ConjunctiveQuery,
    d: &Structure,
) -> Result<std::collections::BTreeMap<Vec<Elem>, BigUint>> {
    let nv = q.vars().len();
    maps(nv, d.domain_size())?;
    let mut out = std::collections::BTreeMap::new();
    each_map(nv, d.domain_size(), |h| {
        let ok = q.atoms().iter().all(|a| {
            let img: Vec<Elem> = a.args.iter().map(|&v| h[v]).collect();
            d.contains(a.rel, &img)
        });
        if ok {
            let key: Vec<Elem> = q.free_vars().iter().map(|&v| h[v]).collect();
            *out.entry(key).or_insert_with(BigUint::zero) += 1u32;
        }
    });
    Ok(out)
}

/// Searches all bijections for an isomorphism.
pub fn is_isomorphic(a: &Structure, b: &Structure) -> Result<bool> {
    let n = a.domain_size();
    if n != b.domain_size() || a.fact_count() != b.fact_count() || a.schema() != b.schema() {
        return Ok(false);
    }
    if n > 9 {
        return Err(Error::limit("oracle permutation size", 9));
    }
    let mut perm: Vec<Elem> = (0..n as Elem).collect();
    loop {
        if is_hom(a, b, &perm) {
            return Ok(true);
        }
        if !next_permutation(&mut perm) {
            return Ok(false);
        }
    }
}

fn next_permutation(p: &mut [Elem]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
