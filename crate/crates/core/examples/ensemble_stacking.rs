//! Out-of-fold stacking of two toy components, then the MLP combiner.
//!
//! cargo run --example ensemble_stacking

use knowattn::ensemble::{build_oof_matrix, train_ensemble, EnsembleConfig};
use knowattn::eval::cosine_similarity;
use rand::Rng;

fn main() -> knowattn::Result<()> {
    let mut rng = knowattn::seeded_rng(5);
    let n = 400;
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = x.iter().map(|v: &f64| (1.5 * v).tanh()).collect();

    // A least-squares slope through the origin, and a mean predictor.
    let slope = |fit: &[usize], pred: &[usize]| {
        let (sxy, sxx) = fit.iter().fold((0.0, 0.0), |(a, b), &i| (a + x[i] * y[i], b + x[i] * x[i]));
        Ok(pred.iter().map(|&i| sxy / sxx * x[i]).collect())
    };
    let mean = |fit: &[usize], pred: &[usize]| {
        let m = fit.iter().map(|&i| y[i]).sum::<f64>() / fit.len() as f64;
        Ok(vec![m; pred.len()])
    };
    let oof = build_oof_matrix(n / 2, 5, &[&slope, &mean], &mut rng)?;
    println!("out-of-fold rows leak-free: {}", oof.is_leak_free());

    let mlp = train_ensemble(&oof.rows, &y[..n / 2], &EnsembleConfig::default(), 1)?;
    let all: Vec<usize> = (0..n / 2).collect();
    let held: Vec<usize> = (n / 2..n).collect();
    let a = slope(&all, &held)?;
    let b = mean(&all, &held)?;
    let preds = (0..held.len())
        .map(|k| mlp.predict(&[a[k], b[k]]))
        .collect::<knowattn::Result<Vec<_>>>()?;
    println!("held-out cosine: slope {:.4}, combiner {:.4}", cosine_similarity(&a, &y[n / 2..])?, cosine_similarity(&preds, &y[n / 2..])?);
    Ok(())
}
