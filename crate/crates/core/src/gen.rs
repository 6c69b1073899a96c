//! Seeded random generators for structures and queries.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::qcore::{Atom, ConjunctiveQuery, Elem, Fact, Schema, Structure};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random structure on at most `max_elems` elements: each possible fact is
/// present with probability `density`.
pub fn random_structure(
    rng: &mut TestRng,
    schema: &Arc<Schema>,
    max_elems: usize,
    density: f64,
) -> Structure {
    let n = rng.gen_range(0..=max_elems);
    let mut facts = Vec::new();
    for r in 0..schema.len() {
        let arity = schema.arity(r);
        let total = n.pow(arity as u32);
        for code in 0..total {
            if rng.gen_bool(density) {
                let mut args = Vec::with_capacity(arity);
                let mut c = code;
                for _ in 0..arity {
                    args.push((c % n.max(1)) as Elem);
                    c /= n.max(1);
                }
                facts.push(Fact::new(r, args));
            }
        }
    }
    Structure::from_facts(schema.clone(), n, None, facts).expect("generated facts are valid")
}

/// Random boolean query with `1..=max_atoms` atoms over the non-nullary
/// relations. With `connected` set, every atom after the first reuses a
/// variable that already occurs.
pub fn random_query(
    rng: &mut TestRng,
    schema: &Arc<Schema>,
    max_atoms: usize,
    max_vars: usize,
    connected: bool,
    name: &str,
) -> ConjunctiveQuery {
    let rels: Vec<usize> = (0..schema.len()).filter(|&r| schema.arity(r) > 0).collect();
    assert!(!rels.is_empty(), "schema has no non-nullary relation");
    let n_atoms = rng.gen_range(1..=max_atoms);
    let mut nvars = 0usize;
    let mut atoms = Vec::new();
    for i in 0..n_atoms {
        let rel = *rels.choose(rng).expect("nonempty");
        let arity = schema.arity(rel);
        let mut args: Vec<usize> = (0..arity)
            .map(|_| {
                let fresh = nvars < max_vars && (nvars == 0 || rng.gen_bool(0.5));
                if fresh {
                    nvars += 1;
                    nvars - 1
                } else {
                    rng.gen_range(0..nvars)
                }
            })
            .collect();
        if connected && i > 0 && nvars > 0 {
            let prev: Vec<usize> = atoms
                .iter()
                .flat_map(|a: &Atom| a.args.iter().copied())
                .collect();
            if !args.iter().any(|a| prev.contains(a)) {
                let slot = rng.gen_range(0..arity);
                args[slot] = *prev.choose(rng).expect("earlier atoms have args");
            }
        }
        atoms.push(Atom { rel, args });
    }
    // drop variables that lost every occurrence
    let mut used: Vec<usize> = atoms.iter().flat_map(|a| a.args.iter().copied()).collect();
    used.sort_unstable();
    used.dedup();
    let atoms = atoms
        .into_iter()
        .map(|a| Atom {
            rel: a.rel,
            args: a
                .args
                .iter()
                .map(|v| used.binary_search(v).expect("used"))
                .collect(),
        })
        .collect();
    let vars = (0..used.len()).map(|i| format!("x{i}")).collect();
    ConjunctiveQuery::new(name, schema.clone(), vars, Vec::new(), atoms)
        .expect("generated query is valid")
}

/// Shuffles the atoms and renames the variables of a boolean query.
pub fn scramble(rng: &mut TestRng, q: &ConjunctiveQuery) -> ConjunctiveQuery {
    let n = q.vars().len();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut atoms: Vec<Atom> = q
        .atoms()
        .iter()
        .map(|a| Atom {
            rel: a.rel,
            args: a.args.iter().map(|&v| perm[v]).collect(),
        })
        .collect();
    atoms.shuffle(rng);
    let vars = (0..n).map(|i| format!("y{i}")).collect();
    let free = q.free_vars().iter().map(|&v| perm[v]).collect();
    ConjunctiveQuery::new(q.name(), q.schema().clone(), vars, free, atoms)
        .expect("permuted query is valid")
}
