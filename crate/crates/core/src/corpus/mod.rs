//! Corpus ingestion: tokenizer, datasets, word vectors, thesauri, lexicons.

mod dataset;
mod embeddings;
mod lexicon;
mod thesaurus;
mod tokenize;

pub use dataset::{load_dataset, load_semeval, save_dataset, SentimentInstance, Track};
pub use embeddings::{load_embeddings, EmbeddingTable};
pub use lexicon::{
    load_lexicons, Lexicon, LexiconEntries, LexiconFormat, LexiconSet, LexiconSpec, PolarityTags,
};
pub use thesaurus::{load_thesaurus, DtTable};
pub use tokenize::{tokenize, Vocabulary, OOV_INDEX, URL_TOKEN};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub surface: String,
    pub index: usize,
    /// `None` marks a token without a pre-trained vector.
    pub embedding: Option<Vec<f64>>,
}

/// A tokenized sentence with vocabulary indices and word vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn from_text(text: &str, vocab: &Vocabulary, table: &EmbeddingTable) -> Result<Self> {
        Self::from_tokens(tokenize(text)?, vocab, table)
    }

    pub fn from_tokens(
        surfaces: Vec<String>,
        vocab: &Vocabulary,
        table: &EmbeddingTable,
    ) -> Result<Self> {
        if surfaces.is_empty() {
            return Err(Error::invalid("token sequence must not be empty"));
        }
        let tokens = surfaces
            .into_iter()
            .map(|s| Token {
                index: vocab.get(&s),
                embedding: table.get(&s).map(<[f64]>::to_vec),
                surface: s,
            })
            .collect();
        Ok(Self { tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    /// Word vectors with OOV tokens mapped to zero vectors of width `dim`.
    pub fn vectors(&self, dim: usize) -> Vec<Vec<f64>> {
        self.tokens
            .iter()
            .map(|t| t.embedding.clone().unwrap_or_else(|| vec![0.0; dim]))
            .collect()
    }
}
