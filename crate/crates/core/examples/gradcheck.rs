//! Compares reverse-mode gradients of a small random attention network with
//! central finite differences.
//!
//! cargo run --example gradcheck

use knowattn::autodiff::gradcheck::{check_gradients, GradCheckConfig};
use knowattn::selftest::squared_error_loss;
use knowattn::synthetic::{random_case, CaseShape};

fn main() -> knowattn::Result<()> {
    let mut rng = knowattn::seeded_rng(3);
    let shape = CaseShape {
        input_dim: 6,
        hidden_dim: 4,
        context_dim: 5,
        max_tokens: 5,
        max_terms: 3,
    };
    for case in 0..5 {
        let (net, input) = random_case(&mut rng, shape)?;
        let report = check_gradients(&net.params, GradCheckConfig::default(), squared_error_loss(&net, &input, 0.4))?;
        let (name, idx) = report.worst.clone().unwrap_or_default();
        println!(
            "case {case}: {:?}/{:?}, {} tokens, {} entries, max rel err {:.2e} at {name}[{idx}]",
            net.config.knowledge,
            net.config.fusion,
            input.len(),
            report.entries_checked,
            report.max_relative_error
        );
    }
    Ok(())
}
