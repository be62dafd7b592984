//! Looks up thesaurus expansions for a sentence's tokens and shows which
//! ones carry word vectors and become relevant terms.
//!
//! cargo run --example thesaurus_expansion

use knowattn::corpus::tokenize;
use knowattn::knowledge::KnowledgeSource;
use knowattn::synthetic;

fn main() -> knowattn::Result<()> {
    let data = synthetic::bundle(8, 12, 7);
    let source = KnowledgeSource::dt(data.thesaurus.clone(), data.embeddings.clone(), 4)?;
    let tokens = tokenize("Plunge in $ACME stock, what garbage")?;
    for set in source.lookup_all(&tokens)? {
        let tok = &tokens[set.token_index];
        let ranked: Vec<String> = data
            .thesaurus
            .expansions(tok)
            .iter()
            .map(|(w, s)| format!("{w}:{s:.1}"))
            .collect();
        println!("{tok:<8} thesaurus [{}]  -> terms {:?}", ranked.join(" "), set.labels());
    }
    Ok(())
}
