//! Hand-crafted features for the SVR: TF-IDF, lexicon counts with an
//! agreement score, and concatenated word vectors.

mod tfidf;

pub use tfidf::TfIdf;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingTable, LexiconSet};
use crate::error::{Error, Result};
use crate::io_util::write_atomic;

/// Agreement between positive and negative word counts:
/// `1 - |P - N| / (P + N)`, and 0 when no sentiment words occur.
pub fn agreement_score(positive: usize, negative: usize) -> f64 {
    let total = positive + negative;
    if total == 0 {
        return 0.0;
    }
    1.0 - (positive as f64 - negative as f64).abs() / total as f64
}

/// `(P, N, A)` for every lexicon, in set order.
pub fn lexicon_features(tokens: &[String], lexicons: &LexiconSet) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * lexicons.lexicons.len());
    for lex in &lexicons.lexicons {
        let (mut p, mut n) = (0usize, 0usize);
        for t in tokens {
            let tags = lex.tags(t);
            p += tags.positive as usize;
            n += tags.negative as usize;
        }
        out.extend([p as f64, n as f64, agreement_score(p, n)]);
    }
    out
}

/// Word vectors of the first `max_len` tokens laid end to end, zero-padded
/// to `max_len * dim`. OOV tokens contribute zeros.
pub fn embedding_features(tokens: &[String], table: &EmbeddingTable, max_len: usize) -> Vec<f64> {
    let dim = table.dim();
    let mut out = vec![0.0; max_len * dim];
    for (slot, tok) in tokens.iter().take(max_len).enumerate() {
        if let Some(v) = table.get(tok) {
            out[slot * dim..(slot + 1) * dim].copy_from_slice(v);
        }
    }
    out
}

/// Nearest-rank 95th percentile of the token counts (at least 1).
pub fn percentile_95_length<D: AsRef<[String]>>(docs: &[D]) -> usize {
    let mut lens: Vec<usize> = docs.iter().map(|d| d.as_ref().len()).collect();
    if lens.is_empty() {
        return 1;
    }
    lens.sort_unstable();
    let rank = (0.95 * lens.len() as f64).ceil() as usize;
    lens[rank.clamp(1, lens.len()) - 1].max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Tfidf,
    Lexicon,
    Embedding,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub offset: usize,
    pub len: usize,
}

/// Ordered segments that exactly partition a feature vector.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub segments: Vec<Segment>,
}

impl FeatureLayout {
    pub fn total_len(&self) -> usize {
        self.segments.last().map_or(0, |s| s.offset + s.len)
    }

    pub fn segment(&self, kind: SegmentKind) -> Option<&Segment> {
        self.segments.iter().find(|s| s.kind == kind)
    }

    fn push(&mut self, kind: SegmentKind, len: usize) {
        let offset = self.total_len();
        self.segments.push(Segment { kind, offset, len });
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

/// Which segments to extract.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub tfidf: bool,
    pub lexicon: bool,
    pub embedding: bool,
}

/// Fitted extractor; every statistic comes from the training split.
#[derive(Clone, Debug)]
pub struct FeatureExtractor {
    tfidf: Option<TfIdf>,
    lexicons: Option<LexiconSet>,
    embedding: Option<(EmbeddingTable, usize)>,
    layout: FeatureLayout,
}

impl FeatureExtractor {
    pub fn fit(
        train_docs: &[Vec<String>],
        set: FeatureSet,
        lexicons: Option<&LexiconSet>,
        embeddings: Option<&EmbeddingTable>,
    ) -> Result<Self> {
        let mut layout = FeatureLayout::default();
        let tfidf = if set.tfidf {
            let t = TfIdf::fit(train_docs)?;
            layout.push(SegmentKind::Tfidf, t.len());
            Some(t)
        } else {
            None
        };
        let lexicons = if set.lexicon {
            let l = lexicons
                .ok_or_else(|| Error::MissingResource("lexicon features need lexicons".into()))?
                .clone();
            layout.push(SegmentKind::Lexicon, 3 * l.lexicons.len());
            Some(l)
        } else {
            None
        };
        let embedding = if set.embedding {
            let table = embeddings
                .ok_or_else(|| Error::MissingResource("embedding features need a word-vector table".into()))?
                .clone();
            let max_len = percentile_95_length(train_docs);
            layout.push(SegmentKind::Embedding, max_len * table.dim());
            Some((table, max_len))
        } else {
            None
        };
        if layout.total_len() == 0 {
            return Err(Error::Config("feature set selects no features".into()));
        }
        Ok(Self {
            tfidf,
            lexicons,
            embedding,
            layout,
        })
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn tfidf(&self) -> Option<&TfIdf> {
        self.tfidf.as_ref()
    }

    pub fn max_len(&self) -> Option<usize> {
        self.embedding.as_ref().map(|(_, m)| *m)
    }

    pub fn extract(&self, tokens: &[String]) -> FeatureVector {
        let mut values = Vec::with_capacity(self.layout.total_len());
        if let Some(t) = &self.tfidf {
            values.extend(t.transform(tokens));
        }
        if let Some(l) = &self.lexicons {
            values.extend(lexicon_features(tokens, l));
        }
        if let Some((table, max_len)) = &self.embedding {
            values.extend(embedding_features(tokens, table, *max_len));
        }
        debug_assert_eq!(values.len(), self.layout.total_len());
        FeatureVector { values }
    }
}

/// Per-dimension standardization with training-split statistics. Constant
/// dimensions get unit scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::invalid("cannot standardize zero rows"))?;
        let d = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            if r.len() != d {
                return Err(Error::shape("standardize", "ragged feature rows"));
            }
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Writes a feature matrix for auditing: a `# segments` header line listing
/// `kind:offset:len` entries, then one whitespace-separated row per line.
pub fn dump_feature_matrix(path: &Path, layout: &FeatureLayout, rows: &[Vec<f64>]) -> Result<()> {
    let mut buf = String::from("# segments");
    for s in &layout.segments {
        let kind = match s.kind {
            SegmentKind::Tfidf => "tfidf",
            SegmentKind::Lexicon => "lexicon",
            SegmentKind::Embedding => "embedding",
        };
        write!(buf, " {kind}:{}:{}", s.offset, s.len).unwrap();
    }
    buf.push('\n');
    for r in rows {
        let vals: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        buf.push_str(&vals.join(" "));
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Lexicon;

    fn docs(texts: &[&str]) -> Vec<Vec<String>> {
        texts
            .iter()
            .map(|t| t.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn tfidf_absent_and_ubiquitous_words() {
        let d = docs(&["stock up", "stock down", "stock flat"]);
        let t = TfIdf::fit(&d).unwrap();
        assert_eq!(t.idf("stock"), Some(1.0));
        let v = t.transform(&d[0]);
        let slot = |w: &str| t.vocabulary().iter().position(|x| x == w).unwrap();
        assert_eq!(v[slot("down")], 0.0);
        assert_eq!(v[slot("stock")], 1.0);
        let twice = t.transform(&docs(&["stock stock"])[0]);
        assert_eq!(twice[slot("stock")], 2.0);
    }

    #[test]
    fn tfidf_needs_vocabulary() {
        assert!(TfIdf::fit::<Vec<String>>(&[]).is_err());
        assert!(TfIdf::fit(&[Vec::<String>::new()]).is_err());
    }

    #[test]
    fn lexicon_examples() {
        let lex = LexiconSet {
            lexicons: vec![Lexicon::polarity("l", &["good", "gain"], &["bad"])],
        };
        let toks = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
        assert_eq!(lexicon_features(&toks("the stock"), &lex), vec![0.0, 0.0, 0.0]);
        assert_eq!(lexicon_features(&toks("good gain"), &lex), vec![2.0, 0.0, 0.0]);
        assert_eq!(lexicon_features(&toks("good bad"), &lex), vec![1.0, 1.0, 1.0]);
        assert!((agreement_score(3, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn embedding_concatenation() {
        let mut table = EmbeddingTable::new(3).unwrap();
        table.insert("a", &[1.0, 2.0, 3.0]).unwrap();
        table.insert("b", &[4.0, 5.0, 6.0]).unwrap();
        let toks = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
        let v = embedding_features(&toks("a b"), &table, 4);
        assert_eq!(v.len(), 12);
        assert_eq!(&v[..6], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(v[6..].iter().all(|&x| x == 0.0));
        let v = embedding_features(&toks("b a b a"), &table, 2);
        assert_eq!(v, vec![4.0, 5.0, 6.0, 1.0, 2.0, 3.0]);
        assert!(embedding_features(&toks("x y"), &table, 3).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn layout_partitions_vector() {
        let d = docs(&["good stock", "bad stock today", "a b c d e f g"]);
        let lex = LexiconSet {
            lexicons: vec![Lexicon::polarity("l", &["good"], &["bad"])],
        };
        let mut table = EmbeddingTable::new(2).unwrap();
        table.insert("good", &[1.0, 1.0]).unwrap();
        let set = FeatureSet { tfidf: true, lexicon: true, embedding: true };
        let fx = FeatureExtractor::fit(&d, set, Some(&lex), Some(&table)).unwrap();
        let layout = fx.layout();
        let mut expected = 0;
        for s in &layout.segments {
            assert_eq!(s.offset, expected);
            expected += s.len;
        }
        assert_eq!(fx.extract(&d[0]).values.len(), expected);
        assert_eq!(fx.max_len(), Some(7));
        let none = FeatureSet { tfidf: false, lexicon: false, embedding: false };
        assert!(FeatureExtractor::fit(&d, none, None, None).is_err());
    }

    #[test]
    fn extraction_uses_training_statistics_only() {
        let train = docs(&["up up", "down"]);
        let test = docs(&["up sideways sideways", "down down down"]);
        let set = FeatureSet { tfidf: true, lexicon: false, embedding: false };
        let fx = FeatureExtractor::fit(&train, set, None, None).unwrap();
        let recomputed = TfIdf::fit(&train).unwrap();
        for d in &test {
            assert_eq!(fx.extract(d).values, recomputed.transform(d));
        }
        let leaked = TfIdf::fit(&[train.clone(), test.clone()].concat()).unwrap();
        assert_ne!(fx.tfidf().unwrap().vocabulary(), leaked.vocabulary());
    }

    #[test]
    fn standardizer_centers_and_scales() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = Standardizer::fit(&rows).unwrap();
        assert_eq!(s.apply(&rows[0]), vec![-1.0, 0.0]);
        assert_eq!(s.apply(&rows[1]), vec![1.0, 0.0]);
    }

    #[test]
    fn ninety_fifth_percentile() {
        let d: Vec<Vec<String>> = (1..=20).map(|n| vec!["w".to_string(); n]).collect();
        assert_eq!(percentile_95_length(&d), 19);
    }
}
