//! Builds prediction records by hand and prints the error and attention
//! reports for them.
//!
//! cargo run --example reports

use indexmap::IndexMap;
use knowattn::eval::{emit_attention_report, emit_error_report, PredictionRecord};
use knowattn::model::{AttentionRecord, TermWeight, TokenAttention};

fn record(id: &str, text: &str, gold: f64, pred: f64) -> PredictionRecord {
    PredictionRecord {
        seed: 1,
        id: id.into(),
        text: text.into(),
        gold,
        predictions: IndexMap::from([("L3".to_string(), pred)]),
        ensemble: None,
        final_prediction: pred,
        attention: None,
    }
}

fn main() {
    let mut garbage = record("1", "Pure garbage stock", -0.946, 0.042);
    garbage.attention = Some(AttentionRecord {
        tokens: vec![
            TokenAttention { token: "pure".into(), weight: 0.2, terms: vec![] },
            TokenAttention {
                token: "garbage".into(),
                weight: 0.5,
                terms: vec![
                    TermWeight { term: "trash".into(), weight: 0.6 },
                    TermWeight { term: "junk".into(), weight: 0.4 },
                ],
            },
            TokenAttention { token: "stock".into(), weight: 0.3, terms: vec![] },
        ],
    });
    let records = vec![
        garbage,
        record("2", "Good opportunity to buy", -0.771, 0.260),
        record("3", "Shares up on earnings", 0.5, 0.4),
    ];
    print!("{}", emit_error_report(&records, 0.5));
    println!();
    print!("{}", emit_attention_report(&records));
}
