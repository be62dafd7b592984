use crate::error::{Error, Result};

/// `dot(p, g) / (|p| |g|)` over whole vectors. A zero-norm side scores 0
/// with a warning.
pub fn cosine_similarity(predicted: &[f64], gold: &[f64]) -> Result<f64> {
    if predicted.len() != gold.len() {
        return Err(Error::shape(
            "cosine_similarity",
            format!("{} predictions vs {} golds", predicted.len(), gold.len()),
        ));
    }
    if predicted.is_empty() {
        return Err(Error::invalid("cosine similarity of empty vectors"));
    }
    let dot: f64 = predicted.iter().zip(gold).map(|(p, g)| p * g).sum();
    let np = predicted.iter().map(|p| p * p).sum::<f64>().sqrt();
    let ng = gold.iter().map(|g| g * g).sum::<f64>().sqrt();
    if np == 0.0 || ng == 0.0 {
        log::warn!("cosine similarity with a zero-norm vector; scoring 0");
        return Ok(0.0);
    }
    Ok(dot / (np * ng))
}

/// Clamps a reported prediction into the task range.
pub fn clamp_score(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!((cosine_similarity(&[0.3, -0.2], &[0.3, -0.2]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine_similarity(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.5]).unwrap(), 0.0);
        assert!(cosine_similarity(&[1.0], &[1.0, 0.5]).is_err());
        assert!(cosine_similarity(&[], &[]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn scale_invariant(
            pairs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40),
            c in 0.01f64..100.0,
        ) {
            let p: Vec<f64> = pairs.iter().map(|x| x.0).collect();
            let g: Vec<f64> = pairs.iter().map(|x| x.1).collect();
            proptest::prop_assume!(p.iter().any(|&v| v.abs() > 1e-6) && g.iter().any(|&v| v.abs() > 1e-6));
            let scaled: Vec<f64> = p.iter().map(|v| v * c).collect();
            let a = cosine_similarity(&p, &g).unwrap();
            let b = cosine_similarity(&scaled, &g).unwrap();
            proptest::prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
