//! Deterministic toy resources: a small scored corpus with matching word
//! vectors, a 10-entry thesaurus, a knowledge graph and polarity lexicons.
//! Used by the overfit checks, the examples and `knowattn selftest`.

use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{
    save_dataset, DtTable, EmbeddingTable, Lexicon, LexiconSet, SentimentInstance, Track,
};
use crate::error::Result;
use crate::io_util::write_atomic;
use crate::knowledge::{KnowledgeGraph, RelevantTerm, RelevantTermSet, TermSource};
use crate::model::{AttentionNetwork, Fusion, KnowledgeMode, NetworkConfig, SentenceInput};
use crate::seeded_rng;

const POSITIVE: [(&str, f64); 6] = [
    ("surge", 0.9),
    ("rally", 0.7),
    ("beat", 0.6),
    ("strong", 0.5),
    ("upgrade", 0.8),
    ("buy", 0.4),
];
const NEGATIVE: [(&str, f64); 6] = [
    ("plunge", -0.9),
    ("miss", -0.6),
    ("weak", -0.5),
    ("downgrade", -0.8),
    ("garbage", -1.0),
    ("sell", -0.4),
];
const NEUTRAL: [&str; 10] = [
    "stock", "shares", "today", "market", "earnings", "$acme", "$zeta", "the", "pure", "company",
];
/// Words that only appear as thesaurus targets.
const EXPANSIONS: [&str; 12] = [
    "soar", "jump", "climb", "gain", "slump", "crash", "drop", "fall", "trash", "junk", "equity",
    "firm",
];

/// The 10 thesaurus rows: (word, ranked targets).
const THESAURUS: [(&str, &[&str]); 10] = [
    ("surge", &["soar", "jump", "climb", "gain"]),
    ("rally", &["climb", "gain", "jump"]),
    ("beat", &["gain", "soar"]),
    ("strong", &["gain", "climb"]),
    ("plunge", &["crash", "slump", "drop", "fall"]),
    ("miss", &["drop", "fall"]),
    ("weak", &["slump", "fall", "drop"]),
    ("garbage", &["trash", "junk"]),
    ("stock", &["equity", "shares"]),
    ("company", &["firm"]),
];

#[derive(Clone, Debug)]
pub struct SyntheticBundle {
    pub instances: Vec<SentimentInstance>,
    pub embeddings: EmbeddingTable,
    pub thesaurus: DtTable,
    pub graph: KnowledgeGraph,
    pub lexicons: LexiconSet,
}

/// Builds `n` scored sentences and resources with vectors of width `dim`.
///
/// Scores are `tanh` of the summed word polarities, so they are a smooth,
/// learnable function of the tokens.
pub fn bundle(n: usize, dim: usize, seed: u64) -> SyntheticBundle {
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0, 0.5).expect("normal");

    let mut embeddings = EmbeddingTable::new(dim).expect("dim > 0");
    let all_words = POSITIVE
        .iter()
        .chain(NEGATIVE.iter())
        .map(|(w, _)| *w)
        .chain(NEUTRAL)
        .chain(EXPANSIONS);
    for w in all_words {
        let v: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
        embeddings.insert(w, &v).expect("width");
    }

    let rows = THESAURUS.iter().flat_map(|(w, targets)| {
        targets
            .iter()
            .enumerate()
            .map(move |(rank, t)| (w.to_string(), t.to_string(), 1.0 - 0.1 * rank as f64))
    });
    let thesaurus = DtTable::from_rows(rows);

    let graph = KnowledgeGraph::from_names([
        ("surge", "similar_to", "soar"),
        ("surge", "hypernym", "increase"),
        ("rally", "hypernym", "increase"),
        ("plunge", "hypernym", "decrease"),
        ("plunge", "similar_to", "crash"),
        ("garbage", "hypernym", "waste"),
        ("stock", "hypernym", "security"),
        ("stock", "part_of", "market"),
        ("company", "hypernym", "organization"),
        ("upgrade", "antonym", "downgrade"),
        ("downgrade", "hypernym", "decrease"),
        ("weak", "antonym", "strong"),
    ]);

    let pos: Vec<&str> = POSITIVE.iter().map(|(w, _)| *w).collect();
    let neg: Vec<&str> = NEGATIVE.iter().map(|(w, _)| *w).collect();
    let lexicons = LexiconSet {
        lexicons: vec![Lexicon::polarity("toy", &pos, &neg)],
    };

    let polar: Vec<(&str, f64)> = POSITIVE.iter().chain(NEGATIVE.iter()).copied().collect();
    let mut instances = Vec::with_capacity(n);
    for i in 0..n {
        let len = rng.random_range(3..=6);
        let n_polar = rng.random_range(1..=2.min(len));
        let mut words: Vec<(&str, f64)> = (0..n_polar)
            .map(|_| *polar.choose(&mut rng).expect("non-empty"))
            .collect();
        while words.len() < len {
            let w = *NEUTRAL.choose(&mut rng).expect("non-empty");
            let at = rng.random_range(0..=words.len());
            words.insert(at, (w, 0.0));
        }
        let raw: f64 = words.iter().map(|(_, p)| p).sum();
        let score = (1.2 * raw).tanh();
        let score = (score * 1000.0).round() / 1000.0;
        let text = words.iter().map(|(w, _)| *w).collect::<Vec<_>>().join(" ");
        instances.push(SentimentInstance {
            id: format!("syn-{i:03}"),
            text,
            score,
            track: Track::Microblog,
        });
    }

    SyntheticBundle {
        instances,
        embeddings,
        thesaurus,
        graph,
        lexicons,
    }
}

/// Paths written by [`SyntheticBundle::write_to`], relative to its directory.
pub mod files {
    pub const TRAIN: &str = "train.jsonl";
    pub const TEST: &str = "test.jsonl";
    pub const EMBEDDINGS: &str = "embeddings.txt";
    pub const THESAURUS: &str = "thesaurus.tsv";
    pub const TRIPLETS: &str = "triplets.tsv";
    pub const POSITIVE: &str = "positive-words.txt";
    pub const NEGATIVE: &str = "negative-words.txt";
}

impl SyntheticBundle {
    /// Writes every resource as files; the training split and the test
    /// split are both the full instance list.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        save_dataset(&dir.join(files::TRAIN), &self.instances)?;
        save_dataset(&dir.join(files::TEST), &self.instances)?;
        self.embeddings.save(&dir.join(files::EMBEDDINGS))?;
        self.thesaurus.save(&dir.join(files::THESAURUS))?;
        let mut triplets = String::new();
        for t in self.graph.triplets() {
            triplets.push_str(&format!(
                "{}\t{}\t{}\n",
                self.graph.entity_name(t.subject),
                self.graph.relation_name(t.relation),
                self.graph.entity_name(t.object)
            ));
        }
        write_atomic(&dir.join(files::TRIPLETS), triplets.as_bytes())?;
        let pos: Vec<&str> = POSITIVE.iter().map(|(w, _)| *w).collect();
        let neg: Vec<&str> = NEGATIVE.iter().map(|(w, _)| *w).collect();
        write_atomic(&dir.join(files::POSITIVE), (pos.join("\n") + "\n").as_bytes())?;
        write_atomic(&dir.join(files::NEGATIVE), (neg.join("\n") + "\n").as_bytes())?;
        Ok(())
    }
}

/// Width of the word vectors in the on-disk fixture. With 6 LSTM units per
/// direction, thesaurus terms (12-d) and DistMult triplets (3 x 4-d) both
/// match the 12-d encoder states, so every model id runs with additive fusion.
pub const FIXTURE_DIM: usize = 12;
pub const FIXTURE_SIZE: usize = 32;
pub const FIXTURE_SEED: u64 = 7;
pub const CONFIG_FILE: &str = "config.toml";

/// Experiment config for the fixture written by [`write_fixture`]; both
/// word-vector slots point at the same table.
pub const FIXTURE_CONFIG: &str = r#"# Synthetic fixture: the test split repeats the training split.
model = "L3"
track = "microblog"
output_dir = "out"

[data]
train = "train.jsonl"
test = "test.jsonl"
word2vec = "embeddings.txt"
glove = "embeddings.txt"
thesaurus = "thesaurus.tsv"
triplets = "triplets.tsv"

[[data.lexicons]]
name = "toy"
format = { kind = "word-lists" }
paths = ["positive-words.txt", "negative-words.txt"]

[network]
hidden_dim = 6
context_dim = 12
fusion = "add"
dt_k = 4

[distmult]
dim = 4
epochs = 200

[train]
batch_size = 8
dropout = 0.0
epochs = 60
seeds = [1, 2]
validation_fraction = 0.0

[train.adam]
step_size = 0.01

[ensemble]
folds = 4

[ensemble.train]
epochs = 100
seeds = [1]
dropout = 0.0
validation_fraction = 0.0
"#;

/// Writes the fixture corpus, its resources and `config.toml` into `dir`.
pub fn write_fixture(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    bundle(FIXTURE_SIZE, FIXTURE_DIM, FIXTURE_SEED).write_to(dir)?;
    write_atomic(&dir.join(CONFIG_FILE), FIXTURE_CONFIG.as_bytes())
}

/// Shape limits for [`random_case`].
#[derive(Clone, Copy, Debug)]
pub struct CaseShape {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub context_dim: usize,
    pub max_tokens: usize,
    pub max_terms: usize,
}

/// A freshly initialized network plus a random sentence for it. Knowledge
/// mode and fusion are drawn at random; concatenation draws its own term
/// width, addition uses `2 * hidden_dim`.
pub fn random_case<R: Rng + ?Sized>(rng: &mut R, shape: CaseShape) -> Result<(AttentionNetwork, SentenceInput)> {
    let knowledge = [KnowledgeMode::Disabled, KnowledgeMode::Kg, KnowledgeMode::Dt][rng.random_range(0..3)];
    let fusion = if rng.random_bool(0.5) { Fusion::Add } else { Fusion::Concat };
    let knowledge_dim = match fusion {
        Fusion::Add => 2 * shape.hidden_dim,
        Fusion::Concat => rng.random_range(2..=6),
    };
    let config = NetworkConfig {
        input_dim: shape.input_dim,
        hidden_dim: shape.hidden_dim,
        context_dim: shape.context_dim,
        knowledge_dim,
        knowledge,
        fusion,
    };
    let net = AttentionNetwork::new(config, rng)?;
    let t_len = rng.random_range(1..=shape.max_tokens);
    let vec_of = |rng: &mut R, d: usize| -> Vec<f64> { (0..d).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let embeddings = (0..t_len).map(|_| vec_of(rng, shape.input_dim)).collect();
    let source = if knowledge == KnowledgeMode::Kg { TermSource::Kg } else { TermSource::Dt };
    let knowledge_sets = (0..t_len)
        .map(|t| {
            let n = if knowledge == KnowledgeMode::Disabled {
                0
            } else {
                rng.random_range(0..=shape.max_terms)
            };
            RelevantTermSet {
                token_index: t,
                source,
                terms: (0..n)
                    .map(|k| RelevantTerm {
                        label: format!("term{t}_{k}"),
                        vector: vec_of(rng, knowledge_dim),
                    })
                    .collect(),
            }
        })
        .collect();
    let input = SentenceInput {
        tokens: (0..t_len).map(|t| format!("tok{t}")).collect(),
        embeddings,
        knowledge: knowledge_sets,
    };
    Ok((net, input))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_is_deterministic_and_valid() {
        let a = bundle(32, 16, 7);
        let b = bundle(32, 16, 7);
        assert_eq!(a.instances, b.instances);
        assert_eq!(a.instances.len(), 32);
        assert!(a.instances.iter().all(|i| i.validate().is_ok()));
        assert_eq!(a.thesaurus.len(), 10);
        assert_eq!(a.graph.triplets().len(), 12);
        assert!(a.instances.iter().any(|i| i.score > 0.2));
        assert!(a.instances.iter().any(|i| i.score < -0.2));
    }
}
