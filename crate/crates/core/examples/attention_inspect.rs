//! Runs one sentence through an untrained thesaurus-knowledge network and
//! prints both attention layers.
//!
//! cargo run --example attention_inspect

use knowattn::corpus::tokenize;
use knowattn::knowledge::KnowledgeSource;
use knowattn::model::{AttentionNetwork, Fusion, KnowledgeMode, NetworkConfig, SentenceInput};
use knowattn::synthetic;

fn main() -> knowattn::Result<()> {
    let dim = 12;
    let data = synthetic::bundle(8, dim, 7);
    let source = KnowledgeSource::dt(data.thesaurus.clone(), data.embeddings.clone(), 4)?;
    let config = NetworkConfig {
        input_dim: dim,
        hidden_dim: dim / 2,
        context_dim: dim,
        knowledge_dim: dim,
        knowledge: KnowledgeMode::Dt,
        fusion: Fusion::Add,
    };
    let net = AttentionNetwork::new(config, &mut knowattn::seeded_rng(1))?;
    let input = SentenceInput::prepare(&tokenize("Pure garbage stock")?, &data.embeddings, &source)?;
    let (score, record) = net.predict(&input)?;
    println!("score {score:+.4}");
    for tok in &record.tokens {
        let terms: Vec<String> = tok.terms.iter().map(|t| format!("{}={:.3}", t.term, t.weight)).collect();
        println!("{:<8} sentence weight {:.3}  terms [{}]", tok.token, tok.weight, terms.join(", "));
    }
    Ok(())
}
