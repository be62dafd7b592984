use serde::{Deserialize, Serialize};

use super::{DistMultModel, KnowledgeGraph};
use crate::corpus::{DtTable, EmbeddingTable};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermSource {
    Kg,
    Dt,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelevantTerm {
    /// Human-readable label: `relation:object` for graph facts, the target
    /// word for thesaurus expansions.
    pub label: String,
    pub vector: Vec<f64>,
}

/// The relevant terms a token attends over. May be empty.
#[derive(Clone, Debug, PartialEq)]
pub struct RelevantTermSet {
    pub token_index: usize,
    pub source: TermSource,
    pub terms: Vec<RelevantTerm>,
}

impl RelevantTermSet {
    pub fn empty(token_index: usize, source: TermSource) -> Self {
        Self {
            token_index,
            source,
            terms: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Common term dimension, or `None` for an empty set.
    pub fn dim(&self) -> Option<usize> {
        self.terms.first().map(|t| t.vector.len())
    }

    pub fn labels(&self) -> Vec<&str> {
        self.terms.iter().map(|t| t.label.as_str()).collect()
    }
}

/// One term per fact having `token` (exact lowercase match) as subject;
/// each vector is `[e_s; w_r; e_o]`.
pub fn kg_relevant_terms(
    token: &str,
    token_index: usize,
    graph: &KnowledgeGraph,
    model: &DistMultModel,
) -> Result<RelevantTermSet> {
    let mut set = RelevantTermSet::empty(token_index, TermSource::Kg);
    let Some(entity) = graph.entity_id(&token.to_lowercase()) else {
        return Ok(set);
    };
    for t in graph.with_subject(entity) {
        set.terms.push(RelevantTerm {
            label: format!(
                "{}:{}",
                graph.relation_name(t.relation),
                graph.entity_name(t.object)
            ),
            vector: model.triplet_vector(t)?,
        });
    }
    Ok(set)
}

/// Up to `k` best-ranked thesaurus expansions of `token` that have a vector
/// in `emb`, in ranking order.
pub fn dt_relevant_terms(
    token: &str,
    token_index: usize,
    dt: &DtTable,
    emb: &EmbeddingTable,
    k: usize,
) -> RelevantTermSet {
    let terms = dt
        .expansions(token)
        .iter()
        .filter_map(|(target, _)| {
            emb.get(target).map(|v| RelevantTerm {
                label: target.clone(),
                vector: v.to_vec(),
            })
        })
        .take(k)
        .collect();
    RelevantTermSet {
        token_index,
        source: TermSource::Dt,
        terms,
    }
}

/// Where relevant terms come from for a run.
#[derive(Clone, Debug)]
pub enum KnowledgeSource {
    /// No external knowledge: every token gets an empty set.
    None,
    Kg {
        graph: KnowledgeGraph,
        model: DistMultModel,
    },
    Dt {
        table: DtTable,
        embeddings: EmbeddingTable,
        k: usize,
    },
}

impl KnowledgeSource {
    pub fn dt(table: DtTable, embeddings: EmbeddingTable, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("thesaurus expansion size k must be at least 1"));
        }
        Ok(Self::Dt {
            table,
            embeddings,
            k,
        })
    }

    /// Dimension of every relevant-term vector this source produces.
    pub fn term_dim(&self) -> Option<usize> {
        match self {
            Self::None => None,
            Self::Kg { model, .. } => Some(3 * model.dim()),
            Self::Dt { embeddings, .. } => Some(embeddings.dim()),
        }
    }

    pub fn source(&self) -> Option<TermSource> {
        match self {
            Self::None => None,
            Self::Kg { .. } => Some(TermSource::Kg),
            Self::Dt { .. } => Some(TermSource::Dt),
        }
    }

    pub fn lookup(&self, token: &str, token_index: usize) -> Result<RelevantTermSet> {
        match self {
            Self::None => Ok(RelevantTermSet::empty(token_index, TermSource::Dt)),
            Self::Kg { graph, model } => kg_relevant_terms(token, token_index, graph, model),
            Self::Dt {
                table,
                embeddings,
                k,
            } => Ok(dt_relevant_terms(token, token_index, table, embeddings, *k)),
        }
    }

    /// Relevant-term sets for every token of a sentence.
    pub fn lookup_all<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<RelevantTermSet>> {
        tokens
            .iter()
            .enumerate()
            .map(|(i, t)| self.lookup(t.as_ref(), i))
            .collect()
    }
}
