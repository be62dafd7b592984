use std::fmt;

use super::records::PredictionRecord;

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub seed: u64,
    pub id: String,
    pub text: String,
    pub gold: f64,
    pub predicted: f64,
}

impl ErrorRow {
    pub fn gap(&self) -> f64 {
        (self.gold - self.predicted).abs()
    }
}

/// Opposite-polarity predictions on clearly polar instances.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub threshold: f64,
    pub rows: Vec<ErrorRow>,
}

/// Flags records whose final prediction has the wrong sign while
/// `|gold| >= threshold`, largest miss first.
pub fn emit_error_report(records: &[PredictionRecord], threshold: f64) -> ErrorReport {
    let mut rows: Vec<ErrorRow> = records
        .iter()
        .filter(|r| r.gold.abs() >= threshold && sign(r.final_prediction) != sign(r.gold))
        .map(|r| ErrorRow {
            seed: r.seed,
            id: r.id.clone(),
            text: r.text.clone(),
            gold: r.gold,
            predicted: r.final_prediction,
        })
        .collect();
    rows.sort_by(|a, b| b.gap().total_cmp(&a.gap()).then_with(|| a.id.cmp(&b.id)));
    ErrorReport { threshold, rows }
}

impl fmt::Display for ErrorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# polarity errors with |gold| >= {}: {}", self.threshold, self.rows.len())?;
        writeln!(f, "id\tseed\tgold\tpredicted\tgap\ttext")?;
        for r in &self.rows {
            writeln!(
                f,
                "{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{}",
                r.id,
                r.seed,
                r.gold,
                r.predicted,
                r.gap(),
                r.text
            )?;
        }
        Ok(())
    }
}

/// Sentence and token attention for every record that carries it.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionReport {
    /// Set when nothing could be reported.
    pub notice: Option<String>,
    pub records: Vec<PredictionRecord>,
}

impl AttentionReport {
    /// Largest deviation from 1 of any emitted weight row.
    pub fn max_normalization_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for att in self.records.iter().filter_map(|r| r.attention.as_ref()) {
            let sentence: f64 = att.tokens.iter().map(|t| t.weight).sum();
            worst = worst.max((sentence - 1.0).abs());
            for tok in att.tokens.iter().filter(|t| !t.terms.is_empty()) {
                let s: f64 = tok.terms.iter().map(|t| t.weight).sum();
                worst = worst.max((s - 1.0).abs());
            }
        }
        worst
    }
}

pub fn emit_attention_report(records: &[PredictionRecord]) -> AttentionReport {
    let with: Vec<PredictionRecord> = records.iter().filter(|r| r.attention.is_some()).cloned().collect();
    let notice = with.is_empty().then(|| {
        "records carry no attention weights (SVR-only models have none); the report is empty".to_string()
    });
    AttentionReport { notice, records: with }
}

impl fmt::Display for AttentionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = &self.notice {
            return writeln!(f, "# {n}");
        }
        for r in &self.records {
            let att = r.attention.as_ref().expect("filtered");
            writeln!(f, "## {} seed={} gold={:.3} predicted={:.3}", r.id, r.seed, r.gold, r.final_prediction)?;
            writeln!(f, "# {}", r.text)?;
            for tok in &att.tokens {
                write!(f, "{}\t{:.6}", tok.token, tok.weight)?;
                for t in &tok.terms {
                    write!(f, "\t{}={:.6}", t.term, t.weight)?;
                }
                writeln!(f)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
