use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::config::{DatasetFormat, ExperimentConfig, ModelId, WordVectors};
use super::metrics::{clamp_score, cosine_similarity};
use super::records::{write_records, PredictionRecord};
use crate::checkpoint::Checkpoint;
use crate::corpus::{
    load_dataset, load_embeddings, load_lexicons, load_semeval, load_thesaurus, tokenize, DtTable,
    EmbeddingTable, LexiconSet, SentimentInstance,
};
use crate::ensemble::{build_oof_matrix, train_ensemble, Component, EnsembleMlp};
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureSet, Standardizer};
use crate::io_util::write_atomic;
use crate::knowledge::{load_triplets, train_distmult, DistMultModel, KnowledgeGraph, KnowledgeSource};
use crate::model::{AttentionNetwork, AttentionRecord, KnowledgeMode, NetworkConfig, SentenceInput};
use crate::svr::{train_svr, SvrModel};
use crate::trainer::{mean, train_model, RunResult, TrainConfig};
use crate::seeded_rng;

/// Loaded datasets and whichever external resources the model needs.
#[derive(Clone, Debug)]
pub struct Resources {
    pub train: Vec<SentimentInstance>,
    pub test: Vec<SentimentInstance>,
    pub word2vec: Option<EmbeddingTable>,
    pub glove: Option<EmbeddingTable>,
    pub thesaurus: Option<DtTable>,
    pub graph: Option<KnowledgeGraph>,
    pub lexicons: Option<LexiconSet>,
}

impl Resources {
    /// Validates `cfg`, then loads only what its model uses.
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let d = &cfg.data;
        let load_split = |p: &Path| match d.format {
            DatasetFormat::Jsonl => load_dataset(p, cfg.track),
            DatasetFormat::Semeval => load_semeval(p, cfg.track),
        };
        let components = cfg.model.components();
        let needs = |w: WordVectors| components.iter().any(|m| m.word_vectors() == Some(w));
        let uses = |pred: fn(ModelId) -> bool| components.iter().any(|&m| pred(m));
        let opt = |want: bool, p: &Option<PathBuf>| -> Option<PathBuf> { want.then(|| p.clone()).flatten() };

        let train = load_split(&d.train)?;
        if train.is_empty() {
            return Err(Error::invalid(format!("training split {} is empty", d.train.display())));
        }
        let test = load_split(&d.test)?;
        if test.is_empty() {
            return Err(Error::invalid(format!("test split {} is empty", d.test.display())));
        }
        Ok(Self {
            train,
            test,
            word2vec: opt(needs(WordVectors::Word2vec), &d.word2vec).map(|p| load_embeddings(&p)).transpose()?,
            glove: opt(needs(WordVectors::Glove), &d.glove).map(|p| load_embeddings(&p)).transpose()?,
            thesaurus: opt(uses(|m| matches!(m, ModelId::L2 | ModelId::L3)), &d.thesaurus)
                .map(|p| load_thesaurus(&p))
                .transpose()?,
            graph: opt(uses(|m| m == ModelId::L1), &d.triplets).map(|p| load_triplets(&p)).transpose()?,
            lexicons: if uses(|m| !m.is_network()) {
                Some(load_lexicons(&d.lexicons)?)
            } else {
                None
            },
        })
    }

    fn words(&self, w: WordVectors) -> Result<&EmbeddingTable> {
        let (table, name) = match w {
            WordVectors::Word2vec => (&self.word2vec, "word2vec"),
            WordVectors::Glove => (&self.glove, "glove"),
        };
        table
            .as_ref()
            .ok_or_else(|| Error::MissingResource(format!("{name} vectors were not loaded")))
    }
}

/// Network inputs for every pooled instance (training split first).
#[derive(Clone, Debug)]
struct NetworkComponent {
    config: NetworkConfig,
    inputs: Vec<SentenceInput>,
}

impl NetworkComponent {
    fn fit(&self, idx: &[usize], golds: &[f64], train: &TrainConfig, seed: u64) -> Result<(AttentionNetwork, RunResult)> {
        let data: Vec<(SentenceInput, f64)> = idx.iter().map(|&i| (self.inputs[i].clone(), golds[i])).collect();
        let cfg = TrainConfig {
            seeds: vec![seed],
            ..train.clone()
        };
        let config = self.config.clone();
        let mut runs = train_model(
            |rng| AttentionNetwork::new(config.clone(), rng),
            &data,
            &cfg,
            &mut |e| log::debug!("seed {} epoch {} loss {:.4e}", e.seed, e.epoch, e.loss),
        )?;
        let run = runs.remove(0);
        Ok((run.model, run.result))
    }

    fn predict(&self, net: &AttentionNetwork, idx: &[usize]) -> Result<(Vec<f64>, Vec<AttentionRecord>)> {
        idx.iter().map(|&i| net.predict(&self.inputs[i])).collect::<Result<Vec<_>>>().map(|v| v.into_iter().unzip())
    }
}

#[derive(Clone, Debug)]
struct SvrComponent {
    set: FeatureSet,
    words: Option<EmbeddingTable>,
}

/// Feature pipeline and regressor fitted on one index set.
#[derive(Clone, Debug)]
struct FittedSvr {
    extractor: FeatureExtractor,
    standardizer: Standardizer,
    model: SvrModel,
}

impl SvrComponent {
    fn pipeline(&self, tokens: &[Vec<String>], idx: &[usize], lexicons: Option<&LexiconSet>) -> Result<(FeatureExtractor, Standardizer)> {
        let docs: Vec<Vec<String>> = idx.iter().map(|&i| tokens[i].clone()).collect();
        let extractor = FeatureExtractor::fit(&docs, self.set, lexicons, self.words.as_ref())?;
        let rows: Vec<Vec<f64>> = docs.iter().map(|d| extractor.extract(d).values).collect();
        let standardizer = Standardizer::fit(&rows)?;
        Ok((extractor, standardizer))
    }

    fn rows(&self, ex: &FeatureExtractor, st: &Standardizer, tokens: &[Vec<String>], idx: &[usize]) -> Vec<Vec<f64>> {
        idx.iter().map(|&i| st.apply(&ex.extract(&tokens[i]).values)).collect()
    }

    fn fit(&self, exp: &Experiment, idx: &[usize]) -> Result<FittedSvr> {
        let (extractor, standardizer) = self.pipeline(&exp.tokens, idx, exp.resources.lexicons.as_ref())?;
        let x = self.rows(&extractor, &standardizer, &exp.tokens, idx);
        let y: Vec<f64> = idx.iter().map(|&i| exp.golds[i]).collect();
        let t = train_svr(&x, &y, &exp.config.svr)?;
        log::debug!("svr: {} support vectors after {} iterations", t.model.num_support_vectors(), t.iterations);
        Ok(FittedSvr {
            extractor,
            standardizer,
            model: t.model,
        })
    }

    fn predict(&self, fitted: &FittedSvr, tokens: &[Vec<String>], idx: &[usize]) -> Result<Vec<f64>> {
        fitted.model.predict(&self.rows(&fitted.extractor, &fitted.standardizer, tokens, idx))
    }
}

#[derive(Clone, Debug)]
enum Prepared {
    Network(NetworkComponent),
    Svr(SvrComponent),
}

/// A trained base model.
#[derive(Clone, Debug)]
pub enum TrainedComponent {
    Network { network: AttentionNetwork, run: Option<RunResult> },
    Svr(SvrModel),
}

#[derive(Clone, Debug)]
pub struct SeedArtifacts {
    pub seed: u64,
    pub components: IndexMap<ModelId, TrainedComponent>,
    pub combiner: Option<EnsembleMlp>,
}

#[derive(Clone, Debug)]
pub struct Artifacts {
    pub model: ModelId,
    pub distmult: Option<DistMultModel>,
    pub seeds: Vec<SeedArtifacts>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedScore {
    pub seed: u64,
    pub cosine: f64,
    /// Cosine of each component's own clamped predictions.
    pub components: IndexMap<String, f64>,
}

/// Test-split scores: one cosine per seed and their mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub model: ModelId,
    pub track: crate::corpus::Track,
    pub mean_cosine: f64,
    pub seeds: Vec<SeedScore>,
    #[serde(skip)]
    pub records: Vec<PredictionRecord>,
}

impl ExperimentReport {
    /// Writes `predictions.jsonl` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_records(&dir.join(PREDICTIONS_FILE), &self.records)?;
        let summary = serde_json::to_string_pretty(self)? + "\n";
        write_atomic(&dir.join(SUMMARY_FILE), summary.as_bytes())
    }
}

pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// A configured experiment with its data tokenized and every component's
/// inputs prepared. Instances are pooled: the training split occupies
/// indices `0..n_train`, the test split follows.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub resources: Resources,
    tokens: Vec<Vec<String>>,
    golds: Vec<f64>,
    n_train: usize,
    distmult: Option<DistMultModel>,
    prepared: IndexMap<ModelId, Prepared>,
}

impl Experiment {
    /// Loads resources and, for L1, trains DistMult on the triplets with the
    /// first configured seed.
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        Self::prepare_with(config, None)
    }

    /// Like [`Experiment::prepare`] but reuses already trained DistMult
    /// vectors when given.
    pub fn prepare_with(config: ExperimentConfig, distmult: Option<DistMultModel>) -> Result<Self> {
        let resources = Resources::load(&config)?;
        let all: Vec<&SentimentInstance> = resources.train.iter().chain(&resources.test).collect();
        let tokens = all.iter().map(|i| tokenize(&i.text)).collect::<Result<Vec<_>>>()?;
        let golds = all.iter().map(|i| i.score).collect();
        let n_train = resources.train.len();

        let distmult = match (&resources.graph, distmult) {
            (Some(_), Some(m)) => Some(m),
            (Some(graph), None) => {
                let mut rng = seeded_rng(config.train.seeds[0]);
                let t = train_distmult(graph, &config.distmult, &mut rng)?;
                log::info!(
                    "distmult: {} epochs, final loss {:.4}",
                    t.epoch_losses.len(),
                    t.epoch_losses.last().copied().unwrap_or(f64::NAN)
                );
                Some(t.model)
            }
            (None, _) => None,
        };

        let mut exp = Self {
            config,
            resources,
            tokens,
            golds,
            n_train,
            distmult,
            prepared: IndexMap::new(),
        };
        for m in exp.config.model.components() {
            let p = exp.prepare_component(m)?;
            exp.prepared.insert(m, p);
        }
        Ok(exp)
    }

    fn prepare_component(&self, m: ModelId) -> Result<Prepared> {
        let res = &self.resources;
        let words = m.word_vectors().map(|w| res.words(w)).transpose()?;
        if !m.is_network() {
            return Ok(Prepared::Svr(SvrComponent {
                set: FeatureSet {
                    tfidf: true,
                    lexicon: true,
                    embedding: words.is_some(),
                },
                words: words.cloned(),
            }));
        }
        let words = words.expect("networks read word vectors");
        let (source, mode) = match m {
            ModelId::L1 => {
                let graph = res.graph.clone().ok_or_else(|| Error::MissingResource("triplets".into()))?;
                let model = self.distmult.clone().expect("trained with the graph");
                (KnowledgeSource::Kg { graph, model }, KnowledgeMode::Kg)
            }
            _ => {
                let table = res.thesaurus.clone().ok_or_else(|| Error::MissingResource("thesaurus".into()))?;
                (KnowledgeSource::dt(table, words.clone(), self.config.network.dt_k)?, KnowledgeMode::Dt)
            }
        };
        let net = &self.config.network;
        let config = NetworkConfig {
            input_dim: words.dim(),
            hidden_dim: net.hidden_dim,
            context_dim: net.context_dim,
            knowledge_dim: source.term_dim().expect("knowledge enabled"),
            knowledge: mode,
            fusion: net.fusion,
        };
        config
            .validate()
            .map_err(|e| Error::Config(format!("{m}: {e}")))?;
        let inputs = self
            .tokens
            .iter()
            .map(|t| SentenceInput::prepare(t, words, &source))
            .collect::<Result<Vec<_>>>()?;
        Ok(Prepared::Network(NetworkComponent { config, inputs }))
    }

    fn train_idx(&self) -> Vec<usize> {
        (0..self.n_train).collect()
    }

    fn test_idx(&self) -> Vec<usize> {
        (self.n_train..self.tokens.len()).collect()
    }

    fn fit_component(&self, m: ModelId, idx: &[usize], seed: u64) -> Result<TrainedComponent> {
        match &self.prepared[&m] {
            Prepared::Network(n) => {
                let (network, run) = n.fit(idx, &self.golds, &self.config.train, seed)?;
                log::info!(
                    "{m} seed {seed}: {} epochs, best epoch {}, final loss {:.4e}",
                    run.epoch_losses.len(),
                    run.best_epoch,
                    run.epoch_losses.last().copied().unwrap_or(f64::NAN)
                );
                Ok(TrainedComponent::Network { network, run: Some(run) })
            }
            Prepared::Svr(s) => Ok(TrainedComponent::Svr(s.fit(self, idx)?.model)),
        }
    }

    /// Trains every component (and the combiner for E1) once per seed.
    /// SVR training has no randomness, so it runs once and is shared.
    pub fn train(&self) -> Result<Artifacts> {
        let train_idx = self.train_idx();
        let mut shared_svr: IndexMap<ModelId, TrainedComponent> = IndexMap::new();
        let mut seeds = Vec::new();
        for &seed in &self.config.train.seeds {
            let mut components = IndexMap::new();
            for &m in self.prepared.keys() {
                let trained = match self.prepared[&m] {
                    Prepared::Svr(_) => match shared_svr.get(&m) {
                        Some(t) => t.clone(),
                        None => {
                            let t = self.fit_component(m, &train_idx, seed)?;
                            shared_svr.insert(m, t.clone());
                            t
                        }
                    },
                    Prepared::Network(_) => self.fit_component(m, &train_idx, seed)?,
                };
                components.insert(m, trained);
            }
            let combiner = if self.config.model == ModelId::E1 {
                Some(self.train_combiner(seed)?)
            } else {
                None
            };
            seeds.push(SeedArtifacts { seed, components, combiner });
        }
        Ok(Artifacts {
            model: self.config.model,
            distmult: self.distmult.clone(),
            seeds,
        })
    }

    /// Out-of-fold component predictions on the training split, then the
    /// combiner fitted on them.
    fn train_combiner(&self, seed: u64) -> Result<EnsembleMlp> {
        let n = self.n_train;
        let fitters: Vec<Box<Component<'_>>> = self
            .prepared
            .keys()
            .map(|&m| {
                let f: Box<Component<'_>> = Box::new(move |fit: &[usize], pred: &[usize]| match &self.prepared[&m] {
                    Prepared::Svr(s) => s.predict(&s.fit(self, fit)?, &self.tokens, pred),
                    Prepared::Network(_) => {
                        let trained = self.fit_component(m, fit, seed)?;
                        self.predict_component(m, &trained, pred).map(|(p, _)| p)
                    }
                });
                f
            })
            .collect();
        let refs: Vec<&Component<'_>> = fitters.iter().map(|b| b.as_ref()).collect();
        let oof = build_oof_matrix(n, self.config.ensemble.folds, &refs, &mut seeded_rng(seed))?;
        debug_assert!(oof.is_leak_free());
        train_ensemble(&oof.rows, &self.golds[..n], &self.config.ensemble, seed)
    }

    fn predict_component(
        &self,
        m: ModelId,
        trained: &TrainedComponent,
        idx: &[usize],
    ) -> Result<(Vec<f64>, Option<Vec<AttentionRecord>>)> {
        match (&self.prepared[&m], trained) {
            (Prepared::Network(n), TrainedComponent::Network { network, .. }) => {
                n.predict(network, idx).map(|(p, a)| (p, Some(a)))
            }
            (Prepared::Svr(s), TrainedComponent::Svr(model)) => {
                // Trained models are always fitted on the whole training
                // split, and the feature pipeline is a deterministic function
                // of it, so it is rebuilt rather than stored.
                let (extractor, standardizer) =
                    s.pipeline(&self.tokens, &self.train_idx(), self.resources.lexicons.as_ref())?;
                let fitted = FittedSvr {
                    extractor,
                    standardizer,
                    model: model.clone(),
                };
                Ok((s.predict(&fitted, &self.tokens, idx)?, None))
            }
            _ => Err(Error::Config(format!("trained artifact for {m} does not match its kind"))),
        }
    }

    /// Scores every seed's models on the test split.
    pub fn evaluate(&self, artifacts: &Artifacts) -> Result<ExperimentReport> {
        let test = self.test_idx();
        let golds: Vec<f64> = test.iter().map(|&i| self.golds[i]).collect();
        let mut records = Vec::new();
        let mut seeds = Vec::new();
        for sa in &artifacts.seeds {
            let mut per_model: IndexMap<String, Vec<f64>> = IndexMap::new();
            let mut attention = None;
            for (&m, trained) in &sa.components {
                if !self.prepared.contains_key(&m) {
                    return Err(Error::Config(format!("artifacts hold {m}, which the config does not use")));
                }
                let (p, att) = self.predict_component(m, trained, &test)?;
                per_model.insert(m.to_string(), p);
                if attention.is_none() {
                    attention = att;
                }
            }
            let ensemble: Option<Vec<f64>> = match &sa.combiner {
                Some(mlp) => Some(
                    (0..test.len())
                        .map(|k| {
                            let row: Vec<f64> = per_model.values().map(|p| p[k]).collect();
                            mlp.predict(&row)
                        })
                        .collect::<Result<_>>()?,
                ),
                None => None,
            };
            let finals: Vec<f64> = match &ensemble {
                Some(e) => e.iter().map(|&v| clamp_score(v)).collect(),
                None => per_model[0].iter().map(|&v| clamp_score(v)).collect(),
            };
            let cosine = cosine_similarity(&finals, &golds)?;
            let mut components = IndexMap::new();
            for (name, p) in &per_model {
                let clamped: Vec<f64> = p.iter().map(|&v| clamp_score(v)).collect();
                components.insert(name.clone(), cosine_similarity(&clamped, &golds)?);
            }
            log::info!("{} seed {}: test cosine {cosine:.4}", artifacts.model, sa.seed);
            seeds.push(SeedScore {
                seed: sa.seed,
                cosine,
                components,
            });
            for (k, &i) in test.iter().enumerate() {
                let inst = &self.resources.test[i - self.n_train];
                records.push(PredictionRecord {
                    seed: sa.seed,
                    id: inst.id.clone(),
                    text: inst.text.clone(),
                    gold: inst.score,
                    predictions: per_model.iter().map(|(n, p)| (n.clone(), p[k])).collect(),
                    ensemble: ensemble.as_ref().map(|e| e[k]),
                    final_prediction: finals[k],
                    attention: attention.as_ref().map(|a| a[k].clone()),
                });
            }
        }
        let mean_cosine = mean(&seeds.iter().map(|s| s.cosine).collect::<Vec<_>>())
            .ok_or_else(|| Error::invalid("no seeds to evaluate"))?;
        Ok(ExperimentReport {
            model: artifacts.model,
            track: self.config.track,
            mean_cosine,
            seeds,
            records,
        })
    }

    /// Saves trained parameters under `dir/checkpoints`.
    pub fn save_artifacts(&self, artifacts: &Artifacts, dir: &Path) -> Result<()> {
        let root = dir.join(CHECKPOINT_DIR);
        if let (Some(m), Some(g)) = (&artifacts.distmult, &self.resources.graph) {
            fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
            m.save(g, &root.join("distmult.txt"))?;
        }
        for sa in &artifacts.seeds {
            let d = root.join(format!("seed-{}", sa.seed));
            fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
            for (m, t) in &sa.components {
                match t {
                    TrainedComponent::Network { network, .. } => network.to_checkpoint().save(&d.join(format!("{m}.ckpt")))?,
                    TrainedComponent::Svr(s) => s.save(&d.join(format!("{m}.svr")))?,
                }
            }
            if let Some(c) = &sa.combiner {
                c.to_checkpoint().save(&d.join("combiner.ckpt"))?;
            }
        }
        Ok(())
    }

    /// DistMult vectors saved by an earlier `train`, if the model uses them.
    pub fn load_distmult(config: &ExperimentConfig, dir: &Path) -> Result<Option<DistMultModel>> {
        if !config.model.components().contains(&ModelId::L1) {
            return Ok(None);
        }
        let graph = load_triplets(
            config
                .data
                .triplets
                .as_ref()
                .ok_or_else(|| Error::MissingResource("data.triplets".into()))?,
        )?;
        let path = dir.join(CHECKPOINT_DIR).join("distmult.txt");
        DistMultModel::load(&graph, &path).map(Some)
    }

    /// Reads the checkpoints written by [`Experiment::save_artifacts`] for
    /// every configured seed.
    pub fn load_artifacts(&self, dir: &Path) -> Result<Artifacts> {
        let root = dir.join(CHECKPOINT_DIR);
        let mut seeds = Vec::new();
        for &seed in &self.config.train.seeds {
            let d = root.join(format!("seed-{seed}"));
            let mut components = IndexMap::new();
            for &m in self.prepared.keys() {
                let t = if m.is_network() {
                    TrainedComponent::Network {
                        network: AttentionNetwork::from_checkpoint(&Checkpoint::load(&d.join(format!("{m}.ckpt")))?)?,
                        run: None,
                    }
                } else {
                    TrainedComponent::Svr(SvrModel::load(&d.join(format!("{m}.svr")))?)
                };
                components.insert(m, t);
            }
            let combiner = if self.config.model == ModelId::E1 {
                Some(EnsembleMlp::from_checkpoint(&Checkpoint::load(&d.join("combiner.ckpt"))?)?)
            } else {
                None
            };
            seeds.push(SeedArtifacts { seed, components, combiner });
        }
        Ok(Artifacts {
            model: self.config.model,
            distmult: self.distmult.clone(),
            seeds,
        })
    }
}

/// Train then evaluate, as `knowattn reproduce` does.
pub fn run_experiment(config: ExperimentConfig) -> Result<ExperimentReport> {
    let exp = Experiment::prepare(config)?;
    let artifacts = exp.train()?;
    exp.evaluate(&artifacts)
}
