use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{LexiconSpec, Track};
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::io_util::read_to_string;
use crate::knowledge::DistMultConfig;
use crate::model::Fusion;
use crate::svr::SvrConfig;
use crate::trainer::TrainConfig;

/// The model grid: three attention networks, three SVR feature sets and
/// the stacked ensemble of L3 and S2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelId {
    L1,
    L2,
    L3,
    S1,
    S2,
    S3,
    E1,
}

/// Which pre-trained word-vector table a component reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WordVectors {
    Word2vec,
    Glove,
}

impl ModelId {
    pub const ALL: [ModelId; 7] = [
        ModelId::L1,
        ModelId::L2,
        ModelId::L3,
        ModelId::S1,
        ModelId::S2,
        ModelId::S3,
        ModelId::E1,
    ];

    pub fn description(self) -> &'static str {
        match self {
            ModelId::L1 => "attention network with knowledge-graph embeddings",
            ModelId::L2 => "attention network with thesaurus expansion over GloVe",
            ModelId::L3 => "attention network with thesaurus expansion over word2vec",
            ModelId::S1 => "SVR on tf-idf and lexicon features",
            ModelId::S2 => "SVR on tf-idf, lexicon and GloVe features",
            ModelId::S3 => "SVR on tf-idf, lexicon and word2vec features",
            ModelId::E1 => "MLP ensemble of L3 and S2",
        }
    }

    /// Base models whose predictions make up this model.
    pub fn components(self) -> Vec<ModelId> {
        match self {
            ModelId::E1 => vec![ModelId::L3, ModelId::S2],
            m => vec![m],
        }
    }

    pub fn is_network(self) -> bool {
        matches!(self, ModelId::L1 | ModelId::L2 | ModelId::L3)
    }

    /// Word vectors used as network inputs or SVR features. L1 reads
    /// word2vec for its inputs.
    pub fn word_vectors(self) -> Option<WordVectors> {
        match self {
            ModelId::L1 | ModelId::L3 | ModelId::S3 => Some(WordVectors::Word2vec),
            ModelId::L2 | ModelId::S2 => Some(WordVectors::Glove),
            ModelId::S1 | ModelId::E1 => None,
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown model id `{s}` (expected L1-L3, S1-S3 or E1)")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    /// One `{"id", "text", "score", "track"}` object per line.
    #[default]
    Jsonl,
    /// The shared task's original JSON array files.
    Semeval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataPaths {
    pub train: PathBuf,
    pub test: PathBuf,
    #[serde(default)]
    pub format: DatasetFormat,
    pub word2vec: Option<PathBuf>,
    pub glove: Option<PathBuf>,
    pub thesaurus: Option<PathBuf>,
    pub triplets: Option<PathBuf>,
    #[serde(default)]
    pub lexicons: Vec<LexiconSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkSettings {
    pub hidden_dim: usize,
    pub context_dim: usize,
    pub fusion: Fusion,
    /// Thesaurus expansions kept per token.
    pub dt_k: usize,
}

impl Default for NetworkSettings {
    fn default() -> Self {
        Self {
            hidden_dim: 150,
            context_dim: 300,
            fusion: Fusion::Add,
            dt_k: 4,
        }
    }
}

/// Everything one experiment needs, read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelId,
    pub track: Track,
    pub data: DataPaths,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub network: NetworkSettings,
    #[serde(default)]
    pub distmult: DistMultConfig,
    #[serde(default)]
    pub svr: SvrConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("knowattn-out")
}

/// Environment variables that override data paths, checked in this order.
pub const PATH_OVERRIDES: [(&str, &str); 7] = [
    ("KNOWATTN_TRAIN", "train"),
    ("KNOWATTN_TEST", "test"),
    ("KNOWATTN_WORD2VEC", "word2vec"),
    ("KNOWATTN_GLOVE", "glove"),
    ("KNOWATTN_THESAURUS", "thesaurus"),
    ("KNOWATTN_TRIPLETS", "triplets"),
    ("KNOWATTN_OUTPUT_DIR", "output_dir"),
];

impl ExperimentConfig {
    /// Reads a config file, resolves relative paths against its directory
    /// and applies `KNOWATTN_*` path overrides from the environment.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingResource(format!("config file {} does not exist", path.display())));
        }
        let text = read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = Self::from_toml(&text, base)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.apply_overrides(|k| std::env::var(k).ok());
        Ok(cfg)
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve_relative(base);
        Ok(cfg)
    }

    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let d = &mut self.data;
        fix(&mut d.train);
        fix(&mut d.test);
        for p in [&mut d.word2vec, &mut d.glove, &mut d.thesaurus, &mut d.triplets]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        for lex in &mut d.lexicons {
            lex.paths.iter_mut().for_each(fix);
        }
        fix(&mut self.output_dir);
    }

    /// Replaces paths from `lookup` (normally the process environment).
    pub fn apply_overrides(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        for (var, field) in PATH_OVERRIDES {
            let Some(value) = lookup(var).filter(|v| !v.is_empty()) else {
                continue;
            };
            let p = PathBuf::from(value);
            log::info!("{var} overrides `{field}`: {}", p.display());
            let d = &mut self.data;
            match field {
                "train" => d.train = p,
                "test" => d.test = p,
                "word2vec" => d.word2vec = Some(p),
                "glove" => d.glove = Some(p),
                "thesaurus" => d.thesaurus = Some(p),
                "triplets" => d.triplets = Some(p),
                _ => self.output_dir = p,
            }
        }
    }

    /// Checks hyperparameters and that every resource the model needs is
    /// configured and present, before anything is trained.
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.svr.validate()?;
        if self.ensemble.folds < 2 {
            return Err(Error::Config("ensemble.folds must be at least 2".into()));
        }
        if self.network.dt_k == 0 {
            return Err(Error::Config("network.dt_k must be at least 1".into()));
        }
        let d = &self.data;
        require_file("data.train", Some(&d.train))?;
        require_file("data.test", Some(&d.test))?;
        for m in self.model.components() {
            match m.word_vectors() {
                Some(WordVectors::Word2vec) => require_file(&format!("data.word2vec (needed by {m})"), d.word2vec.as_ref())?,
                Some(WordVectors::Glove) => require_file(&format!("data.glove (needed by {m})"), d.glove.as_ref())?,
                None => {}
            }
            match m {
                ModelId::L1 => require_file("data.triplets (needed by L1)", d.triplets.as_ref())?,
                ModelId::L2 | ModelId::L3 => require_file(&format!("data.thesaurus (needed by {m})"), d.thesaurus.as_ref())?,
                _ => {
                    if d.lexicons.is_empty() {
                        return Err(Error::MissingResource(format!("data.lexicons (needed by {m})")));
                    }
                    for lex in &d.lexicons {
                        for p in &lex.paths {
                            require_file(&format!("lexicon `{}`", lex.name), Some(p))?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn require_file(what: &str, path: Option<&PathBuf>) -> Result<()> {
    match path {
        None => Err(Error::MissingResource(format!("{what} is not configured"))),
        Some(p) if !p.is_file() => Err(Error::MissingResource(format!("{what}: {} does not exist", p.display()))),
        Some(_) => Ok(()),
    }
}
