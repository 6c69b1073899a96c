use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
}

/// A finite relational signature. Relation names are unique; arity 0 is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schema {
    relations: Vec<Relation>,
    index: BTreeMap<String, usize>,
}

impl Schema {
    pub fn new<I, S>(relations: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut schema = Schema {
            relations: Vec::new(),
            index: BTreeMap::new(),
        };
        for (name, arity) in relations {
            schema.push(name.into(), arity)?;
        }
        Ok(schema)
    }

    pub fn empty() -> Self {
        Schema {
            relations: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    pub fn into_shared(self) -> Arc<Schema> {
        Arc::new(self)
    }

    pub(crate) fn push(&mut self, name: String, arity: usize) -> Result<usize> {
        if self.index.contains_key(&name) {
            return Err(Error::DuplicateRelation(name));
        }
        let id = self.relations.len();
        self.index.insert(name.clone(), id);
        self.relations.push(Relation { name, arity });
        Ok(id)
    }

    /// Adds `name/arity` unless present; checks the arity when it is.
    pub(crate) fn declare(&mut self, name: &str, arity: usize) -> Result<usize> {
        match self.index.get(name) {
            Some(&id) => {
                let expected = self.relations[id].arity;
                if expected != arity {
                    return Err(Error::ArityMismatch {
                        relation: name.to_string(),
                        expected,
                        found: arity,
                    });
                }
                Ok(id)
            }
            None => self.push(name.to_string(), arity),
        }
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, id: usize) -> &Relation {
        &self.relations[id]
    }

    pub fn arity(&self, id: usize) -> usize {
        self.relations[id].arity
    }

    pub fn name(&self, id: usize) -> &str {
        &self.relations[id].name
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn resolve(&self, name: &str, arity: usize) -> Result<usize> {
        let id = self
            .lookup(name)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))?;
        let expected = self.arity(id);
        if expected != arity {
            return Err(Error::ArityMismatch {
                relation: name.to_string(),
                expected,
                found: arity,
            });
        }
        Ok(id)
    }

    pub fn is_binary(&self) -> bool {
        self.relations.iter().all(|r| r.arity == 2)
    }

    pub fn has_nullary(&self) -> bool {
        self.relations.iter().any(|r| r.arity == 0)
    }
}

/// Renders the schema in the `REL/arity` file format, one relation per line.
impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.relations {
            writeln!(f, "{}/{}", r.name, r.arity)?;
        }
        Ok(())
    }
}
