use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// TF-IDF over a vocabulary fixed at fit time.
///
/// `value(w, d) = count(w, d) * idf(w)` with smoothed
/// `idf(w) = ln((1 + N) / (1 + df(w))) + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfIdf {
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    documents: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TfIdf {
    /// Learns the vocabulary (sorted) and document frequencies from the
    /// training documents only.
    pub fn fit<D: AsRef<[String]>>(docs: &[D]) -> Result<Self> {
        let vocab: BTreeSet<&str> = docs
            .iter()
            .flat_map(|d| d.as_ref().iter().map(String::as_str))
            .collect();
        if vocab.is_empty() {
            return Err(Error::invalid("tf-idf vocabulary is empty"));
        }
        let vocabulary: Vec<String> = vocab.into_iter().map(str::to_string).collect();
        let index: HashMap<String, usize> = vocabulary
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let mut df = vec![0usize; vocabulary.len()];
        for d in docs {
            let seen: BTreeSet<usize> = d.as_ref().iter().filter_map(|w| index.get(w).copied()).collect();
            for i in seen {
                df[i] += 1;
            }
        }
        let n = docs.len() as f64;
        let idf = df
            .iter()
            .map(|&f| ((1.0 + n) / (1.0 + f as f64)).ln() + 1.0)
            .collect();
        Ok(Self {
            vocabulary,
            idf,
            documents: docs.len(),
            index,
        })
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn idf(&self, word: &str) -> Option<f64> {
        self.slot(word).map(|i| self.idf[i])
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    fn slot(&self, word: &str) -> Option<usize> {
        if self.index.is_empty() {
            self.vocabulary.binary_search_by(|w| w.as_str().cmp(word)).ok()
        } else {
            self.index.get(word).copied()
        }
    }

    /// One value per vocabulary slot; unknown words are ignored.
    pub fn transform(&self, tokens: &[String]) -> Vec<f64> {
        let mut out = vec![0.0; self.vocabulary.len()];
        for t in tokens {
            if let Some(i) = self.slot(t) {
                out[i] += 1.0;
            }
        }
        for (v, idf) in out.iter_mut().zip(&self.idf) {
            *v *= idf;
        }
        out
    }
}
