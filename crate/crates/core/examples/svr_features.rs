//! Extracts tf-idf, lexicon and embedding features on the synthetic corpus,
//! standardizes them, fits the epsilon-SVR and dumps the feature matrix.
//!
//! cargo run --example svr_features

use knowattn::corpus::tokenize;
use knowattn::eval::cosine_similarity;
use knowattn::features::{dump_feature_matrix, FeatureExtractor, FeatureSet, Standardizer};
use knowattn::svr::{train_svr, SvrConfig};
use knowattn::synthetic;

fn main() -> knowattn::Result<()> {
    let data = synthetic::bundle(64, 12, 7);
    let docs = data.instances.iter().map(|i| tokenize(&i.text)).collect::<knowattn::Result<Vec<_>>>()?;
    let golds: Vec<f64> = data.instances.iter().map(|i| i.score).collect();
    let (train, test) = docs.split_at(48);

    let set = FeatureSet {
        tfidf: true,
        lexicon: true,
        embedding: true,
    };
    let fx = FeatureExtractor::fit(train, set, Some(&data.lexicons), Some(&data.embeddings))?;
    for s in &fx.layout().segments {
        println!("{:?}: offset {} width {}", s.kind, s.offset, s.len);
    }
    let raw: Vec<Vec<f64>> = train.iter().map(|d| fx.extract(d).values).collect();
    let st = Standardizer::fit(&raw)?;
    let x: Vec<Vec<f64>> = raw.iter().map(|r| st.apply(r)).collect();
    let fit = train_svr(&x, &golds[..48], &SvrConfig::default())?;
    println!(
        "{} support vectors, {} iterations, gap {:.1e}",
        fit.model.num_support_vectors(),
        fit.iterations,
        fit.gap
    );

    let preds = test
        .iter()
        .map(|d| fit.model.predict_one(&st.apply(&fx.extract(d).values)))
        .collect::<knowattn::Result<Vec<_>>>()?;
    println!("held-out cosine {:.4}", cosine_similarity(&preds, &golds[48..])?);

    let out = std::env::temp_dir().join("knowattn-features.txt");
    dump_feature_matrix(&out, fx.layout(), &x)?;
    println!("feature matrix written to {}", out.display());
    Ok(())
}
