//! Trains DistMult on a ten-entity toy graph and ranks every fact's true
//! object against all entities.
//!
//! cargo run --example distmult_ranking

use knowattn::knowledge::{kg_relevant_terms, train_distmult, DistMultConfig, KnowledgeGraph};
use knowattn::selftest::{object_rank, TOY_FACTS};

fn main() -> knowattn::Result<()> {
    let graph = KnowledgeGraph::from_names(TOY_FACTS);
    let cfg = DistMultConfig {
        dim: 8,
        epochs: 200,
        ..DistMultConfig::default()
    };
    let training = train_distmult(&graph, &cfg, &mut knowattn::seeded_rng(14))?;
    let losses = &training.epoch_losses;
    println!("loss {:.4} -> {:.4}", losses[0], losses[losses.len() - 1]);

    let mut total = 0;
    for t in graph.triplets() {
        let rank = object_rank(&training.model, &graph, t)?;
        total += rank;
        println!(
            "{:>8} {:<8} {:<8} rank {rank}",
            graph.entity_name(t.subject),
            graph.relation_name(t.relation),
            graph.entity_name(t.object)
        );
    }
    println!("mean rank {:.2} (random would be 5.5)", total as f64 / graph.triplets().len() as f64);

    let terms = kg_relevant_terms("stock", 0, &graph, &training.model)?;
    println!("relevant terms for `stock`: {:?} ({}-d each)", terms.labels(), 3 * cfg.dim);
    Ok(())
}
