use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io_util::{parse_error, read_to_string};

/// A (subject, relation, object) fact with ids into a [`KnowledgeGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub subject: usize,
    pub relation: usize,
    pub object: usize,
}

/// Triplet store with entity and relation vocabularies.
#[derive(Clone, Debug, Default)]
pub struct KnowledgeGraph {
    entities: Vec<String>,
    entity_index: HashMap<String, usize>,
    relations: Vec<String>,
    relation_index: HashMap<String, usize>,
    triplets: Vec<Triplet>,
    by_subject: HashMap<usize, Vec<usize>>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_entity(&mut self, name: &str) -> usize {
        intern(&mut self.entities, &mut self.entity_index, name)
    }

    pub fn add_relation(&mut self, name: &str) -> usize {
        intern(&mut self.relations, &mut self.relation_index, name)
    }

    /// Registers names as needed and stores the fact. Duplicate facts are
    /// stored once.
    pub fn add(&mut self, subject: &str, relation: &str, object: &str) -> Triplet {
        let t = Triplet {
            subject: self.add_entity(subject),
            relation: self.add_relation(relation),
            object: self.add_entity(object),
        };
        let list = self.by_subject.entry(t.subject).or_default();
        if !list.iter().any(|&i| self.triplets[i] == t) {
            list.push(self.triplets.len());
            self.triplets.push(t);
        }
        t
    }

    pub fn from_names<'a, I>(facts: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        let mut g = Self::new();
        for (s, r, o) in facts {
            g.add(s, r, o);
        }
        g
    }

    pub fn entity_id(&self, name: &str) -> Option<usize> {
        self.entity_index.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.relation_index.get(name).copied()
    }

    pub fn entity_name(&self, id: usize) -> &str {
        &self.entities[id]
    }

    pub fn relation_name(&self, id: usize) -> &str {
        &self.relations[id]
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn contains(&self, t: &Triplet) -> bool {
        self.by_subject
            .get(&t.subject)
            .is_some_and(|l| l.iter().any(|&i| self.triplets[i] == *t))
    }

    /// Facts whose subject is `entity`, in insertion order.
    pub fn with_subject(&self, entity: usize) -> impl Iterator<Item = &Triplet> {
        self.by_subject
            .get(&entity)
            .into_iter()
            .flatten()
            .map(|&i| &self.triplets[i])
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn validate(&self, t: &Triplet) -> Result<()> {
        if t.subject >= self.entities.len() || t.object >= self.entities.len() {
            return Err(Error::invalid("triplet entity id out of range"));
        }
        if t.relation >= self.relations.len() {
            return Err(Error::invalid("triplet relation id out of range"));
        }
        Ok(())
    }
}

fn intern(names: &mut Vec<String>, index: &mut HashMap<String, usize>, name: &str) -> usize {
    if let Some(&i) = index.get(name) {
        return i;
    }
    names.push(name.to_string());
    index.insert(name.to_string(), names.len() - 1);
    names.len() - 1
}

/// Loads tab-separated `subject<TAB>relation<TAB>object` lines. Entity
/// names are lowercased so they can be matched against tokens.
pub fn load_triplets(path: &Path) -> Result<KnowledgeGraph> {
    let mut g = KnowledgeGraph::new();
    for (lineno, line) in read_to_string(path)?.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        match fields.as_slice() {
            [s, r, o] if !s.is_empty() && !r.is_empty() && !o.is_empty() => {
                g.add(&s.to_lowercase(), r, &o.to_lowercase());
            }
            _ => {
                return Err(parse_error(
                    path,
                    lineno + 1,
                    "expected subject<TAB>relation<TAB>object",
                ))
            }
        }
    }
    log::info!(
        "{}: {} triplets over {} entities and {} relations",
        path.display(),
        g.triplets().len(),
        g.entity_count(),
        g.relation_count()
    );
    Ok(g)
}
