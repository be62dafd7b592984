//! Built-in checks run by `knowattn selftest`: gradients, attention
//! invariants, SVR optimality, tf-idf arithmetic, DistMult ranking,
//! overfitting capacity and the ensemble combiner.

use std::fmt;
use std::time::Instant;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::autodiff::gradcheck::{check_gradients, GradCheckConfig};
use crate::autodiff::{ParamStore, Tape, Tensor, Var};
use crate::corpus::tokenize;
use crate::ensemble::{train_ensemble, EnsembleConfig};
use crate::error::Result;
use crate::eval::cosine_similarity;
use crate::features::TfIdf;
use crate::knowledge::{train_distmult, DistMultConfig, DistMultModel, KnowledgeGraph, KnowledgeSource, Triplet};
use crate::model::{AttentionNetwork, Fusion, KnowledgeMode, NetworkConfig, SentenceInput, W_V};
use crate::svr::{train_svr, Kernel, SvrConfig};
use crate::synthetic::{self, random_case, CaseShape};
use crate::trainer::{train_model, AdamConfig, TrainConfig, Trainable};
use crate::seeded_rng;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag}  {:<12} {} ({:.1}s)", self.name, self.detail, self.seconds)
    }
}

type Check = fn() -> Result<(bool, String)>;

const CHECKS: [(&str, Check); 7] = [
    ("gradients", gradients),
    ("attention", attention),
    ("svr-kkt", svr_kkt),
    ("tfidf", tfidf),
    ("distmult", distmult_ranking),
    ("overfit", overfit),
    ("ensemble", ensemble),
];

/// Runs every check, reporting each as it finishes.
pub fn run_all(report: &mut dyn FnMut(&CheckResult)) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&(name, check)| {
            let start = Instant::now();
            let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
            let r = CheckResult {
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            };
            report(&r);
            r
        })
        .collect()
}

const SMALL: CaseShape = CaseShape {
    input_dim: 6,
    hidden_dim: 4,
    context_dim: 5,
    max_tokens: 5,
    max_terms: 3,
};

/// Squared error of the score against `target`, as a tape scalar.
pub fn squared_error_loss<'a>(
    net: &'a AttentionNetwork,
    input: &SentenceInput,
    target: f64,
) -> impl Fn(&mut Tape, &ParamStore) -> Result<Var> + 'a {
    let input = input.clone();
    move |tape, params| {
        let pass = net.forward::<crate::Rng>(tape, params, &input, None)?;
        let y = tape.constant(Tensor::scalar(target))?;
        let d = tape.sub(pass.score, y)?;
        tape.mul(d, d)
    }
}

fn gradients() -> Result<(bool, String)> {
    let mut rng = seeded_rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (net, input) = random_case(&mut rng, SMALL)?;
        let target = rng.random_range(-1.0..1.0);
        let report = check_gradients(&net.params, GradCheckConfig::default(), squared_error_loss(&net, &input, target))?;
        worst = worst.max(report.max_relative_error);
    }
    Ok((worst < 1e-4, format!("max relative error {worst:.2e} over 20 networks")))
}

fn attention() -> Result<(bool, String)> {
    let mut rng = seeded_rng(12);
    let mut worst_sum: f64 = 0.0;
    let mut worst_perm: f64 = 0.0;
    let mut identical = true;
    for _ in 0..200 {
        let (net, input) = random_case(&mut rng, SMALL)?;
        let mut tape = Tape::new();
        let pass = net.forward::<crate::Rng>(&mut tape, &net.params, &input, None)?;
        let mut rows = vec![tape.value(pass.sentence_weights).data().to_vec()];
        rows.extend(pass.word_weights.iter().flatten().map(|w| tape.value(*w).data().to_vec()));
        for r in &rows {
            if r.iter().any(|&a| a < 0.0) {
                worst_sum = f64::INFINITY;
            }
            worst_sum = worst_sum.max((r.iter().sum::<f64>() - 1.0).abs());
        }

        let mut shuffled = input.clone();
        for set in &mut shuffled.knowledge {
            set.terms.reverse();
        }
        let mut tape2 = Tape::new();
        let pass2 = net.forward::<crate::Rng>(&mut tape2, &net.params, &shuffled, None)?;
        for (a, b) in pass.knowledge.iter().zip(&pass2.knowledge) {
            if let (Some(a), Some(b)) = (a, b) {
                for (x, y) in tape.value(*a).data().iter().zip(tape2.value(*b).data()) {
                    worst_perm = worst_perm.max((x - y).abs());
                }
            }
        }

        if net.config.knowledge != KnowledgeMode::Disabled && net.config.fusion == Fusion::Add {
            let mut empty = input.clone();
            empty.knowledge.iter_mut().for_each(|k| k.terms.clear());
            let mut disabled = net.clone();
            disabled.config.knowledge = KnowledgeMode::Disabled;
            disabled.params = disabled.params.without(W_V);
            let a = net.predict(&empty)?.0;
            let b = disabled.predict(&empty)?.0;
            identical &= a.to_bits() == b.to_bits();
        }
    }
    let ok = worst_sum < 1e-9 && worst_perm < 1e-12 && identical;
    Ok((
        ok,
        format!("sum error {worst_sum:.1e}, permutation drift {worst_perm:.1e}, empty knowledge bitwise equal: {identical}"),
    ))
}

fn svr_kkt() -> Result<(bool, String)> {
    let mut rng = seeded_rng(13);
    let mut worst: f64 = 0.0;
    for case in 0..10 {
        let n = rng.random_range(4..=10);
        let d = rng.random_range(1..=3);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = x.iter().map(|r| r.iter().sum::<f64>().sin() + rng.random_range(-0.2..0.2)).collect();
        let kernel = if case % 2 == 0 { Kernel::Linear } else { Kernel::Rbf { gamma: 1.0 } };
        let (c, eps) = (1.0, 0.05);
        let cfg = SvrConfig {
            kernel: Some(kernel),
            c,
            epsilon: eps,
            tol: 1e-8,
            ..SvrConfig::default()
        };
        let t = train_svr(&x, &y, &cfg)?;
        for (i, &g) in t.dual_coefficients.iter().enumerate() {
            let r = y[i] - t.model.predict_one(&x[i])?;
            // Complementary slackness for the epsilon tube.
            let v = if g == 0.0 {
                (r.abs() - eps).max(0.0)
            } else if g.abs() < c {
                (r - eps * g.signum()).abs()
            } else {
                (eps - r * g.signum()).max(0.0)
            };
            worst = worst.max(v).max(g.abs() - c);
        }
        worst = worst.max(t.dual_coefficients.iter().sum::<f64>().abs());
    }
    Ok((worst < 1e-6, format!("largest KKT violation {worst:.1e} over 10 problems")))
}

fn tfidf() -> Result<(bool, String)> {
    let docs: Vec<Vec<String>> = ["up up stock", "down stock", "stock"]
        .iter()
        .map(|d| d.split(' ').map(str::to_string).collect())
        .collect();
    let t = TfIdf::fit(&docs)?;
    let v = t.transform(&docs[0]);
    let up = 2.0 * ((4.0f64 / 2.0).ln() + 1.0);
    let ok = t.idf("stock") == Some(1.0) && (v[2] - up).abs() < 1e-12 && v[0] == 0.0;
    Ok((ok, "smoothed idf table".into()))
}

/// Ten entities, twelve facts.
pub const TOY_FACTS: [(&str, &str, &str); 12] = [
    ("stock", "synonym", "share"),
    ("share", "synonym", "equity"),
    ("stock", "synonym", "equity"),
    ("company", "synonym", "firm"),
    ("profit", "synonym", "gain"),
    ("loss", "synonym", "decline"),
    ("stock", "part_of", "market"),
    ("share", "part_of", "market"),
    ("equity", "part_of", "market"),
    ("company", "part_of", "market"),
    ("profit", "antonym", "loss"),
    ("gain", "antonym", "decline"),
];

/// Rank of the true object among all entities (ties count against it).
pub fn object_rank(model: &DistMultModel, graph: &KnowledgeGraph, t: &Triplet) -> Result<usize> {
    let truth = model.score(t)?;
    let mut rank = 1;
    for o in 0..graph.entity_count() {
        if o != t.object && model.score(&Triplet { object: o, ..*t })? >= truth {
            rank += 1;
        }
    }
    Ok(rank)
}

fn distmult_ranking() -> Result<(bool, String)> {
    let graph = KnowledgeGraph::from_names(TOY_FACTS);
    let cfg = DistMultConfig {
        dim: 8,
        epochs: 200,
        ..DistMultConfig::default()
    };
    let model = train_distmult(&graph, &cfg, &mut seeded_rng(14))?.model;
    let ranks = graph
        .triplets()
        .iter()
        .map(|t| object_rank(&model, &graph, t))
        .collect::<Result<Vec<_>>>()?;
    let mean = ranks.iter().sum::<usize>() as f64 / ranks.len() as f64;
    Ok((mean < 5.5, format!("mean object rank {mean:.2} of {}", graph.entity_count())))
}

fn overfit() -> Result<(bool, String)> {
    let dim = 16;
    let data = synthetic::bundle(32, dim, 7);
    let knowledge = KnowledgeSource::dt(data.thesaurus.clone(), data.embeddings.clone(), 4)?;
    let examples = data
        .instances
        .iter()
        .map(|i| Ok((SentenceInput::prepare(&tokenize(&i.text)?, &data.embeddings, &knowledge)?, i.score)))
        .collect::<Result<Vec<_>>>()?;
    let net_cfg = NetworkConfig {
        input_dim: dim,
        hidden_dim: dim / 2,
        context_dim: dim,
        knowledge_dim: dim,
        knowledge: KnowledgeMode::Dt,
        fusion: Fusion::Add,
    };
    let cfg = overfit_train_config();
    let run = train_model(|rng| AttentionNetwork::new(net_cfg.clone(), rng), &examples, &cfg, &mut |_| {})?.remove(0);
    let preds = examples.iter().map(|(x, _)| run.model.predict_one(x)).collect::<Result<Vec<_>>>()?;
    let golds: Vec<f64> = examples.iter().map(|(_, y)| *y).collect();
    let cos = cosine_similarity(&preds, &golds)?;
    Ok((cos >= 0.99, format!("training-set cosine {cos:.4} after {} epochs", cfg.epochs)))
}

/// Settings used to show the network can fit the synthetic corpus.
pub fn overfit_train_config() -> TrainConfig {
    TrainConfig {
        batch_size: 8,
        dropout: 0.0,
        adam: AdamConfig {
            step_size: 0.01,
            ..AdamConfig::default()
        },
        epochs: 200,
        seeds: vec![1],
        patience: None,
        validation_fraction: 0.0,
        max_grad_norm: None,
    }
}

fn ensemble() -> Result<(bool, String)> {
    let mut rng = seeded_rng(15);
    let noise = Normal::new(0.0, 0.01).expect("valid sigma");
    let n = 500;
    let targets: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-0.9..0.9)).collect();
    let rows: Vec<Vec<f64>> = targets
        .iter()
        .map(|t| vec![t + noise.sample(&mut rng), rng.random_range(-1.0..1.0)])
        .collect();
    let mlp = train_ensemble(&rows[..n], &targets[..n], &EnsembleConfig::default(), 1)?;
    let preds = rows[n..].iter().map(|r| mlp.predict(r)).collect::<Result<Vec<_>>>()?;
    let cos = cosine_similarity(&preds, &targets[n..])?;
    Ok((cos >= 0.99, format!("held-out cosine {cos:.4}")))
}
