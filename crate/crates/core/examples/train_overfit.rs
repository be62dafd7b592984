//! Overfits the thesaurus-knowledge network on the 32-sentence synthetic
//! corpus and reports training-set cosine similarity.
//!
//! cargo run --release --example train_overfit

use std::time::Instant;

use knowattn::corpus::tokenize;
use knowattn::eval::cosine_similarity;
use knowattn::knowledge::KnowledgeSource;
use knowattn::model::{AttentionNetwork, Fusion, KnowledgeMode, NetworkConfig, SentenceInput};
use knowattn::synthetic;
use knowattn::trainer::{train_model, AdamConfig, TrainConfig, Trainable};

fn main() -> knowattn::Result<()> {
    let dim = 16;
    let data = synthetic::bundle(32, dim, 7);
    let knowledge = KnowledgeSource::dt(data.thesaurus.clone(), data.embeddings.clone(), 4)?;
    let examples: Vec<(SentenceInput, f64)> = data
        .instances
        .iter()
        .map(|inst| {
            let toks = tokenize(&inst.text)?;
            Ok((SentenceInput::prepare(&toks, &data.embeddings, &knowledge)?, inst.score))
        })
        .collect::<knowattn::Result<_>>()?;

    let net_cfg = NetworkConfig {
        input_dim: dim,
        hidden_dim: dim / 2,
        context_dim: dim,
        knowledge_dim: dim,
        knowledge: KnowledgeMode::Dt,
        fusion: Fusion::Add,
    };
    let train_cfg = TrainConfig {
        batch_size: 8,
        dropout: 0.0,
        adam: AdamConfig { step_size: 0.01, ..Default::default() },
        epochs: 200,
        seeds: vec![1],
        patience: None,
        validation_fraction: 0.0,
        max_grad_norm: None,
    };
    let start = Instant::now();
    let runs = train_model(
        |rng| AttentionNetwork::new(net_cfg.clone(), rng),
        &examples,
        &train_cfg,
        &mut |log| {
            if log.epoch % 25 == 0 {
                println!("epoch {:>3}  loss {:.6}", log.epoch, log.loss);
            }
        },
    )?;
    let run = &runs[0];
    let preds: Vec<f64> = examples
        .iter()
        .map(|(x, _)| run.model.predict_one(x))
        .collect::<knowattn::Result<_>>()?;
    let golds: Vec<f64> = examples.iter().map(|(_, y)| *y).collect();
    let losses = &run.result.epoch_losses;
    println!(
        "train cosine {:.4}  loss {:.3e} -> {:.3e}  ({:.1}s)",
        cosine_similarity(&preds, &golds)?,
        losses[0],
        losses[losses.len() - 1],
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
