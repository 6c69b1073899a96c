//! Disjoint sums, categorical products, powers and connected components.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::schema::Schema;
use super::structure::{Elem, Fact, Structure};
use crate::{Error, Limits, Result};

/// `Σ coeffs[i]·parts[i]`: disjoint copies with fresh elements. Nullary
/// facts are shared, so `H() + H() = H()`.
pub fn combine(coeffs: &[u64], parts: &[Structure], limits: &Limits) -> Result<Structure> {
    if coeffs.len() != parts.len() {
        return Err(Error::DimensionMismatch {
            expected: parts.len(),
            found: coeffs.len(),
        });
    }
    let Some(first) = parts.first() else {
        return Err(Error::Invalid("combine needs at least one part".into()));
    };
    let mut size: u64 = 0;
    for (c, p) in coeffs.iter().zip(parts) {
        first.same_schema(p)?;
        size = size.saturating_add(c.saturating_mul(p.domain_size() as u64));
    }
    if size > limits.max_domain_size {
        return Err(Error::limit("combined domain size", limits.max_domain_size));
    }
    let mut facts = Vec::new();
    let mut offset: Elem = 0;
    let mut isolated = false;
    for (&c, p) in coeffs.iter().zip(parts) {
        isolated |= c > 0 && p.has_isolated();
        for _ in 0..c {
            for f in p.facts() {
                facts.push(Fact::new(f.rel, f.args.iter().map(|&a| a + offset).collect()));
            }
            offset += p.domain_size() as Elem;
        }
    }
    let schema = first.schema().clone();
    if isolated {
        Structure::with_domain(schema, offset as usize, None, facts)
    } else {
        Structure::from_facts(schema, offset as usize, None, facts)
    }
}

/// Categorical product. Elements are pairs of elements that occur together
/// in matching facts; a nullary fact survives iff it is in both operands.
pub fn product(a: &Structure, b: &Structure, limits: &Limits) -> Result<Structure> {
    a.same_schema(b)?;
    let mut by_rel: Vec<Vec<&Fact>> = vec![Vec::new(); b.schema().len()];
    for f in b.facts() {
        by_rel[f.rel].push(f);
    }
    let fact_limit = limits.max_domain_size.saturating_mul(16);
    let mut work: u64 = 0;
    for f in a.facts() {
        work += by_rel[f.rel].len() as u64;
    }
    if work > fact_limit {
        return Err(Error::limit("product fact count", fact_limit));
    }
    let mut ids: HashMap<(Elem, Elem), Elem> = HashMap::new();
    let mut facts = Vec::new();
    for fa in a.facts() {
        for fb in &by_rel[fa.rel] {
            let mut args = Vec::with_capacity(fa.args.len());
            for (&x, &y) in fa.args.iter().zip(&fb.args) {
                let next = ids.len() as Elem;
                let id = *ids.entry((x, y)).or_insert(next);
                args.push(id);
            }
            if ids.len() as u64 > limits.max_domain_size {
                return Err(Error::limit("product domain size", limits.max_domain_size));
            }
            facts.push(Fact::new(fa.rel, args));
        }
    }
    let isolated = a.has_isolated() || b.has_isolated();
    if isolated {
        // keep the full cartesian domain so isolated pairs survive
        let (na, nb) = (a.domain_size() as u64, b.domain_size() as u64);
        if na * nb > limits.max_domain_size {
            return Err(Error::limit("product domain size", limits.max_domain_size));
        }
        let mut order: Vec<((Elem, Elem), Elem)> = ids.into_iter().collect();
        order.sort_unstable();
        let remap: HashMap<Elem, Elem> = order
            .iter()
            .map(|&((x, y), old)| (old, x * nb as Elem + y))
            .collect();
        let facts = facts
            .into_iter()
            .map(|f| Fact::new(f.rel, f.args.iter().map(|a| remap[a]).collect()));
        return Structure::with_domain(a.schema().clone(), (na * nb) as usize, None, facts);
    }
    // number elements by their pair so the result does not depend on fact order
    let mut order: Vec<((Elem, Elem), Elem)> = ids.into_iter().collect();
    order.sort_unstable();
    let mut remap = vec![0 as Elem; order.len()];
    for (new, &(_, old)) in order.iter().enumerate() {
        remap[old as usize] = new as Elem;
    }
    let facts = facts
        .into_iter()
        .map(|f| Fact::new(f.rel, f.args.iter().map(|&a| remap[a as usize]).collect()));
    Structure::from_facts(a.schema().clone(), order.len(), None, facts)
}

/// `A⁰`: one element carrying a loop of every relation, plus every nullary
/// fact.
pub fn all_loops(schema: &Arc<Schema>) -> Structure {
    let facts: Vec<Fact> = (0..schema.len())
        .map(|r| Fact::new(r, vec![0; schema.arity(r)]))
        .collect();
    if (0..schema.len()).any(|r| schema.arity(r) > 0) {
        Structure::from_facts(schema.clone(), 1, None, facts)
    } else {
        Structure::with_domain(schema.clone(), 1, None, facts)
    }
    .expect("loops are well-formed")
}

/// `Aᵗ`, with `A⁰` the all-loops singleton.
pub fn power(a: &Structure, t: u32, limits: &Limits) -> Result<Structure> {
    if t == 0 {
        return Ok(all_loops(a.schema()));
    }
    let mut acc = a.clone();
    for _ in 1..t {
        acc = product(&acc, a, limits)?;
    }
    Ok(acc)
}

/// Connected components through shared elements. Each nullary fact and each
/// isolated element forms a component of its own. Components come in order
/// of their least fact.
pub fn connected_components(s: &Structure) -> Vec<Structure> {
    let n = s.domain_size();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for f in s.facts() {
        if let Some((&h, rest)) = f.args.split_first() {
            for &o in rest {
                let (x, y) = (find(&mut parent, h as usize), find(&mut parent, o as usize));
                if x != y {
                    parent[x.max(y)] = x.min(y);
                }
            }
        }
    }
    enum Part {
        Nullary(Fact),
        Group(usize),
    }
    let mut order: Vec<Part> = Vec::new();
    let mut groups: BTreeMap<usize, Vec<Fact>> = BTreeMap::new();
    for f in s.facts() {
        match f.args.first() {
            None => order.push(Part::Nullary(f.clone())),
            Some(&h) => {
                let r = find(&mut parent, h as usize);
                let g = groups.entry(r).or_default();
                if g.is_empty() {
                    order.push(Part::Group(r));
                }
                g.push(f.clone());
            }
        }
    }
    let mut touched = vec![false; n];
    for f in s.facts() {
        for &a in &f.args {
            touched[a as usize] = true;
        }
    }
    let schema = s.schema().clone();
    let mut out: Vec<Structure> = order
        .into_iter()
        .map(|p| match p {
            Part::Nullary(f) => Structure::from_facts(schema.clone(), 0, None, [f]),
            Part::Group(r) => {
                let names = s.names().map(<[String]>::to_vec);
                Structure::from_facts(schema.clone(), n, names, groups.remove(&r).unwrap())
            }
        })
        .map(|r| r.expect("sub-structure of a valid structure"))
        .collect();
    for e in (0..n).filter(|&e| !touched[e]) {
        let names = s.names().map(|ns| vec![ns[e].clone()]);
        out.push(Structure::with_domain(schema.clone(), 1, names, []).expect("singleton"));
    }
    out
}

pub fn is_connected(s: &Structure) -> bool {
    connected_components(s).len() <= 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::canon::is_isomorphic;
    use crate::qcore::hom::hom_count;
    use crate::qcore::parse::parse_structure;
    use num_bigint::BigUint;

    fn schema() -> Arc<Schema> {
        Arc::new(Schema::new([("R", 2), ("S", 2), ("H", 0)]).unwrap())
    }

    fn st(text: &str) -> Structure {
        parse_structure(text, Some(&schema())).unwrap()
    }

    fn l() -> Limits {
        Limits::default()
    }

    #[test]
    fn zero_copies_is_empty() {
        let a = st("R(a,b)");
        let z = combine(&[0], &[a], &l()).unwrap();
        assert!(z.is_empty());
    }

    #[test]
    fn two_edges() {
        let e = st("R(a,b)");
        let two = combine(&[2], std::slice::from_ref(&e), &l()).unwrap();
        assert_eq!(two.domain_size(), 4);
        assert_eq!(two.fact_count(), 2);
        let one = hom_count(&e, &e, &l()).unwrap();
        assert_eq!(hom_count(&e, &two, &l()).unwrap(), one * 2u32);
    }

    #[test]
    fn product_with_all_loops_is_identity() {
        let a = st("R(a,b)\nS(b,c)\nR(c,c)\nH()");
        let p = product(&a, &all_loops(&schema()), &l()).unwrap();
        assert!(is_isomorphic(&p, &a, &l()).unwrap());
        let p0 = power(&a, 0, &l()).unwrap();
        assert_eq!(p0.domain_size(), 1);
        assert_eq!(p0.fact_count(), 3);
        assert!(is_isomorphic(&power(&a, 1, &l()).unwrap(), &a, &l()).unwrap());
    }

    #[test]
    fn product_with_empty() {
        let a = st("R(a,b)");
        let p = product(&a, &Structure::empty(schema()), &l()).unwrap();
        assert_eq!(p.domain_size(), 0);
    }

    #[test]
    fn square_counts() {
        let a = st("R(a,b)\nR(b,c)\nR(c,a)\nS(a,a)");
        let w = st("R(x,y)\nR(y,z)");
        let a2 = power(&a, 2, &l()).unwrap();
        let c = hom_count(&w, &a, &l()).unwrap();
        assert_eq!(hom_count(&w, &a2, &l()).unwrap(), &c * &c);
    }

    #[test]
    fn power_limit() {
        let a = st("R(a,b)\nR(b,a)\nR(a,a)\nR(b,b)");
        let tight = Limits {
            max_domain_size: 100,
            ..Limits::default()
        };
        assert!(power(&a, 10, &tight).unwrap_err().is_limit());
    }

    #[test]
    fn components() {
        let s = st("R(a,b)\nS(c,d)\nH()\nR(b,e)");
        let cs = connected_components(&s);
        assert_eq!(cs.len(), 3);
        assert_eq!(cs.iter().map(Structure::fact_count).sum::<usize>(), 4);
        assert!(is_connected(&st("R(a,b)\nS(b,c)")));
        let sum = combine(&vec![1; cs.len()], &cs, &l()).unwrap();
        assert!(is_isomorphic(&sum, &s, &l()).unwrap());
        assert_eq!(hom_count(&cs[0], &s, &l()).unwrap(), BigUint::from(1u8));
    }
}
