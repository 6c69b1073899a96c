use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::schema::Schema;
use crate::{Error, Result};

/// Index of a domain element inside one [`Structure`].
pub type Elem = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub rel: usize,
    pub args: Vec<Elem>,
}

impl Fact {
    pub fn new(rel: usize, args: Vec<Elem>) -> Self {
        Fact { rel, args }
    }
}

/// A finite set of facts over a schema.
///
/// Elements are the indices `0..domain_size()`. Unless the structure was
/// built with [`Structure::with_domain`], every element occurs in some fact
/// (the domain is the active domain).
#[derive(Debug, Clone)]
pub struct Structure {
    schema: Arc<Schema>,
    names: Option<Vec<String>>,
    size: usize,
    facts: BTreeSet<Fact>,
    isolated: bool,
}

impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.size == other.size && self.facts == other.facts
    }
}

impl Eq for Structure {}

impl Structure {
    pub fn empty(schema: Arc<Schema>) -> Self {
        Structure {
            schema,
            names: None,
            size: 0,
            facts: BTreeSet::new(),
            isolated: false,
        }
    }

    /// Builds a structure over `0..size`, keeping only the active domain.
    /// Surviving elements keep their relative order; `names`, if given, is
    /// indexed by the original element numbers.
    pub fn from_facts(
        schema: Arc<Schema>,
        size: usize,
        names: Option<Vec<String>>,
        facts: impl IntoIterator<Item = Fact>,
    ) -> Result<Self> {
        let facts = check_facts(&schema, size, facts)?;
        let mut used = vec![false; size];
        for f in &facts {
            for &a in &f.args {
                used[a as usize] = true;
            }
        }
        if used.iter().all(|&u| u) {
            return Ok(Structure {
                schema,
                names,
                size,
                facts,
                isolated: false,
            });
        }
        let mut remap = vec![Elem::MAX; size];
        let mut next = 0;
        for (i, &u) in used.iter().enumerate() {
            if u {
                remap[i] = next;
                next += 1;
            }
        }
        let names = names.map(|ns| {
            ns.into_iter()
                .enumerate()
                .filter(|(i, _)| used[*i])
                .map(|(_, n)| n)
                .collect()
        });
        let facts = facts
            .into_iter()
            .map(|f| Fact::new(f.rel, f.args.iter().map(|&a| remap[a as usize]).collect()))
            .collect();
        Ok(Structure {
            schema,
            names,
            size: next as usize,
            facts,
            isolated: false,
        })
    }

    /// Builds a structure whose domain is exactly `0..size`, isolated elements
    /// included. Used for path-query witnesses that share one domain.
    pub fn with_domain(
        schema: Arc<Schema>,
        size: usize,
        names: Option<Vec<String>>,
        facts: impl IntoIterator<Item = Fact>,
    ) -> Result<Self> {
        let facts = check_facts(&schema, size, facts)?;
        let mut used = vec![false; size];
        for f in &facts {
            for &a in &f.args {
                used[a as usize] = true;
            }
        }
        Ok(Structure {
            schema,
            names,
            size,
            facts,
            isolated: used.iter().any(|u| !u),
        })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn domain_size(&self) -> usize {
        self.size
    }

    pub fn facts(&self) -> &BTreeSet<Fact> {
        &self.facts
    }

    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty() && self.size == 0
    }

    /// True when some domain element occurs in no fact.
    pub fn has_isolated(&self) -> bool {
        self.isolated
    }

    pub fn contains(&self, rel: usize, args: &[Elem]) -> bool {
        // BTreeSet lookup needs an owned key
        self.facts.contains(&Fact::new(rel, args.to_vec()))
    }

    pub fn name(&self, e: Elem) -> String {
        match &self.names {
            Some(ns) => ns[e as usize].clone(),
            None => format!("c{e}"),
        }
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Number of facts of each relation, indexed by relation id.
    pub fn relation_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.schema.len()];
        for f in &self.facts {
            counts[f.rel] += 1;
        }
        counts
    }

    pub fn has_nullary_facts(&self) -> bool {
        self.facts.iter().any(|f| f.args.is_empty())
    }

    /// Returns the same facts with generated element names.
    pub fn anonymized(&self) -> Structure {
        Structure {
            names: None,
            ..self.clone()
        }
    }

    pub(crate) fn same_schema(&self, other: &Structure) -> Result<()> {
        if Arc::ptr_eq(&self.schema, &other.schema) || self.schema == other.schema {
            Ok(())
        } else {
            Err(Error::SchemaMismatch)
        }
    }

    /// Renders the structure file format: one `REL(const,...)` per line,
    /// facts in a deterministic order.
    pub fn to_fact_lines(&self) -> Vec<String> {
        self.facts
            .iter()
            .map(|f| {
                let args: Vec<String> = f.args.iter().map(|&a| self.name(a)).collect();
                format!("{}({})", self.schema.name(f.rel), args.join(","))
            })
            .collect()
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.to_fact_lines() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

fn check_facts(
    schema: &Schema,
    size: usize,
    facts: impl IntoIterator<Item = Fact>,
) -> Result<BTreeSet<Fact>> {
    let mut out = BTreeSet::new();
    for f in facts {
        if f.rel >= schema.len() {
            return Err(Error::UnknownRelation(format!("#{}", f.rel)));
        }
        let arity = schema.arity(f.rel);
        if f.args.len() != arity {
            return Err(Error::ArityMismatch {
                relation: schema.name(f.rel).to_string(),
                expected: arity,
                found: f.args.len(),
            });
        }
        if let Some(&a) = f.args.iter().find(|&&a| a as usize >= size) {
            return Err(Error::Invalid(format!(
                "element {a} outside a domain of size {size}"
            )));
        }
        out.insert(f);
    }
    Ok(out)
}

/// Interns named constants while facts are added.
#[derive(Debug, Clone)]
pub struct StructureBuilder {
    schema: Arc<Schema>,
    names: Vec<String>,
    ids: BTreeMap<String, Elem>,
    facts: Vec<Fact>,
}

impl StructureBuilder {
    pub fn new(schema: Arc<Schema>) -> Self {
        StructureBuilder {
            schema,
            names: Vec::new(),
            ids: BTreeMap::new(),
            facts: Vec::new(),
        }
    }

    pub fn constant(&mut self, name: &str) -> Elem {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as Elem;
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    pub fn fact(&mut self, rel: &str, args: &[&str]) -> Result<&mut Self> {
        let id = self.schema.resolve(rel, args.len())?;
        let args = args.iter().map(|a| self.constant(a)).collect();
        self.facts.push(Fact::new(id, args));
        Ok(self)
    }

    pub fn build(self) -> Result<Structure> {
        let size = self.names.len();
        Structure::from_facts(self.schema, size, Some(self.names), self.facts)
    }
}
