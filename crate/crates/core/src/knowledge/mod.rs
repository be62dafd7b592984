//! External knowledge: relevant terms and their vectors for each token,
//! drawn from DistMult-embedded graph facts or thesaurus expansions.

mod distmult;
mod graph;
mod relevant;

pub use distmult::{train_distmult, DistMultConfig, DistMultModel, DistMultTraining};
pub use graph::{load_triplets, KnowledgeGraph, Triplet};
pub use relevant::{
    dt_relevant_terms, kg_relevant_terms, KnowledgeSource, RelevantTerm, RelevantTermSet,
    TermSource,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DtTable, EmbeddingTable};
    use crate::seeded_rng;
    use rand::Rng;

    fn toy_graph() -> KnowledgeGraph {
        KnowledgeGraph::from_names([
            ("bronze_age", "part_of", "prehistory"),
            ("iron_age", "part_of", "prehistory"),
            ("stone_age", "part_of", "prehistory"),
            ("bronze_age", "precedes", "iron_age"),
            ("stone_age", "precedes", "bronze_age"),
            ("bronze_age", "hypernym", "period"),
        ])
    }

    #[test]
    fn score_by_hand() {
        let m = DistMultModel::from_parts(2, vec![1.0, 0.0, 1.0, 0.0], vec![1.0, 1.0]).unwrap();
        let t = Triplet { subject: 0, relation: 0, object: 1 };
        assert_eq!(m.score(&t).unwrap(), 1.0);
    }

    #[test]
    fn zero_relation_scores_zero() {
        let m = DistMultModel::from_parts(3, vec![0.3, -1.0, 2.0, 0.5, 0.5, 0.5], vec![0.0; 3]).unwrap();
        assert_eq!(m.score(&Triplet { subject: 0, relation: 0, object: 1 }).unwrap(), 0.0);
    }

    #[test]
    fn unknown_id_is_an_error() {
        let m = DistMultModel::from_parts(2, vec![1.0; 4], vec![1.0; 2]).unwrap();
        assert!(m.score(&Triplet { subject: 0, relation: 3, object: 1 }).is_err());
    }

    #[test]
    fn score_is_symmetric_in_subject_and_object() {
        let mut rng = seeded_rng(5);
        for _ in 0..20 {
            let ents: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            let rels: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m = DistMultModel::from_parts(5, ents, rels).unwrap();
            let a = m.score(&Triplet { subject: 0, relation: 0, object: 1 }).unwrap();
            let b = m.score(&Triplet { subject: 1, relation: 0, object: 0 }).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_dimension_is_rejected() {
        let cfg = DistMultConfig { dim: 0, ..Default::default() };
        assert!(train_distmult(&toy_graph(), &cfg, &mut seeded_rng(1)).is_err());
    }

    #[test]
    fn empty_graph_is_rejected() {
        assert!(train_distmult(&KnowledgeGraph::new(), &DistMultConfig::default(), &mut seeded_rng(1)).is_err());
    }

    #[test]
    fn single_fact_loss_decreases() {
        let mut g = KnowledgeGraph::from_names([("a", "r", "b")]);
        g.add_entity("c");
        g.add_entity("d");
        let cfg = DistMultConfig {
            dim: 4,
            epochs: 11,
            negatives_per_positive: 1,
            ..Default::default()
        };
        let run = train_distmult(&g, &cfg, &mut seeded_rng(3)).unwrap();
        assert!(run.epoch_losses[10] < run.epoch_losses[0], "{:?}", run.epoch_losses);
    }

    #[test]
    fn bronze_age_fact_yields_300_dim_term() {
        let g = KnowledgeGraph::from_names([("bronze_age", "part_of", "prehistory")]);
        let cfg = DistMultConfig { dim: 100, epochs: 1, ..Default::default() };
        let m = train_distmult(&g, &cfg, &mut seeded_rng(0)).unwrap().model;
        let set = kg_relevant_terms("bronze_age", 0, &g, &m).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.dim(), Some(300));
        assert_eq!(set.labels(), ["part_of:prehistory"]);
        assert_eq!(set.terms[0].vector[..100], *m.entity(0).unwrap());
    }

    #[test]
    fn kg_terms_count_subject_facts() {
        let g = toy_graph();
        let cfg = DistMultConfig { dim: 4, epochs: 1, ..Default::default() };
        let m = train_distmult(&g, &cfg, &mut seeded_rng(0)).unwrap().model;
        assert_eq!(kg_relevant_terms("Bronze_Age", 0, &g, &m).unwrap().len(), 3);
        assert_eq!(kg_relevant_terms("prehistory", 0, &g, &m).unwrap().len(), 0);
        assert!(kg_relevant_terms("stock", 0, &g, &m).unwrap().is_empty());
        for e in g.entities() {
            let expected = g.triplets().iter().filter(|t| g.entity_name(t.subject) == e).count();
            assert_eq!(kg_relevant_terms(e, 0, &g, &m).unwrap().len(), expected);
        }
    }

    #[test]
    fn model_export_round_trip() {
        let g = toy_graph();
        let cfg = DistMultConfig { dim: 3, epochs: 2, ..Default::default() };
        let m = train_distmult(&g, &cfg, &mut seeded_rng(9)).unwrap().model;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("dm.txt");
        m.save(&g, &p).unwrap();
        assert_eq!(DistMultModel::load(&g, &p).unwrap(), m);
    }

    fn touchpad_fixture() -> (DtTable, EmbeddingTable) {
        let dt = DtTable::from_rows(vec![
            ("touchpad", "mouse", 0.9),
            ("touchpad", "trackball", 0.8),
            ("touchpad", "joystick", 0.7),
            ("touchpad", "trackpad", 0.6),
            ("touchpad", "keyboard", 0.5),
            ("touchpad", "stylus", 0.4),
        ]);
        let mut emb = EmbeddingTable::new(2).unwrap();
        for (i, w) in ["mouse", "trackball", "joystick", "trackpad", "keyboard", "stylus"].iter().enumerate() {
            emb.insert(w, &[i as f64, 1.0]).unwrap();
        }
        (dt, emb)
    }

    #[test]
    fn touchpad_expands_to_top_four() {
        let (dt, emb) = touchpad_fixture();
        let set = dt_relevant_terms("touchpad", 0, &dt, &emb, 4);
        assert_eq!(set.labels(), ["mouse", "trackball", "joystick", "trackpad"]);
        assert!(dt_relevant_terms("laptop", 0, &dt, &emb, 4).is_empty());
    }

    #[test]
    fn expansions_without_vectors_are_skipped() {
        let (dt, _) = touchpad_fixture();
        let mut emb = EmbeddingTable::new(2).unwrap();
        // trackball and joystick lack vectors
        for w in ["mouse", "trackpad", "keyboard", "stylus"] {
            emb.insert(w, &[0.0, 1.0]).unwrap();
        }
        let set = dt_relevant_terms("touchpad", 0, &dt, &emb, 4);
        assert_eq!(set.labels(), ["mouse", "trackpad", "keyboard", "stylus"]);
        let set = dt_relevant_terms("touchpad", 0, &dt, &emb, 10);
        assert_eq!(set.len(), 4);
    }

    #[test]
    fn ties_break_lexicographically() {
        let dt = DtTable::from_rows(vec![("w", "zeta", 0.5), ("w", "alpha", 0.5), ("w", "mid", 0.9)]);
        let mut emb = EmbeddingTable::new(1).unwrap();
        for w in ["zeta", "alpha", "mid"] {
            emb.insert(w, &[1.0]).unwrap();
        }
        assert_eq!(dt_relevant_terms("w", 0, &dt, &emb, 4).labels(), ["mid", "alpha", "zeta"]);
    }
}
