use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};

/// Replacement for every URL in the input.
pub const URL_TOKEN: &str = "<url>";

fn token_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?xi)
            (?P<url>https?://\S+|www\.\S+)
            | (?P<sentinel><url>)
            | (?P<cashtag>\$[a-z][a-z0-9_]*(?:\.[a-z]+)?)
            | (?P<mention>@\w+)
            | (?P<number>\d+(?:[.,]\d+)+)
            | (?P<word>\w+(?:'\w+)*)
            | (?P<punct>\S)
            ",
        )
        .expect("token regex")
    })
}

/// Rule-based tokenizer.
///
/// Lowercases, keeps cashtags (`$aapl`) and mentions (`@user`) whole, keeps
/// decimal numbers and internal apostrophes together, replaces URLs with
/// [`URL_TOKEN`], and emits every other non-space symbol as its own token.
pub fn tokenize(text: &str) -> Result<Vec<String>> {
    if text.trim().is_empty() {
        return Err(Error::invalid("cannot tokenize empty text"));
    }
    let tokens = token_pattern()
        .captures_iter(text)
        .map(|cap| {
            if cap.name("url").is_some() {
                URL_TOKEN.to_string()
            } else {
                cap[0].to_lowercase()
            }
        })
        .collect();
    Ok(tokens)
}

/// Token-to-index map. Index 0 is reserved for out-of-vocabulary tokens.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
}

pub const OOV_INDEX: usize = 0;
const OOV_SURFACE: &str = "<unk>";

impl Default for Vocabulary {
    fn default() -> Self {
        Self {
            index: HashMap::new(),
            tokens: vec![OOV_SURFACE.to_string()],
        }
    }
}

impl Vocabulary {
    /// Builds a vocabulary from tokenized documents, in first-seen order.
    pub fn build<'a, I, D>(docs: I) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a String>,
    {
        let mut vocab = Self::default();
        for doc in docs {
            for tok in doc {
                vocab.add(tok);
            }
        }
        vocab
    }

    pub fn add(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), i);
        i
    }

    pub fn get(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(OOV_INDEX)
    }

    pub fn surface(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    /// Number of slots including the OOV slot.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_words() {
        assert_eq!(
            tokenize("Pure garbage stock").unwrap(),
            ["pure", "garbage", "stock"]
        );
    }

    #[test]
    fn cashtags_and_punctuation() {
        assert_eq!(
            tokenize("$AAPL up 5%!").unwrap(),
            ["$aapl", "up", "5", "%", "!"]
        );
    }

    #[test]
    fn blank_text_is_rejected() {
        assert!(tokenize("  ").is_err());
        assert!(tokenize("").is_err());
    }

    #[test]
    fn urls_mentions_and_numbers() {
        assert_eq!(
            tokenize("@Trader says $BRK.B hit 3.5 http://x.co/abc, don't sell").unwrap(),
            ["@trader", "says", "$brk.b", "hit", "3.5", URL_TOKEN, "don't", "sell"]
        );
    }

    #[test]
    fn underscores_stay_inside_words() {
        assert_eq!(tokenize("bronze_age").unwrap(), ["bronze_age"]);
    }

    #[test]
    fn vocabulary_reserves_oov() {
        let docs = [tokenize("a b a").unwrap(), tokenize("c").unwrap()];
        let v = Vocabulary::build(docs.iter());
        assert_eq!(v.len(), 4);
        assert_eq!(v.get("a"), 1);
        assert_eq!(v.get("zzz"), OOV_INDEX);
        assert_eq!(v.surface(3), Some("c"));
    }

    proptest::proptest! {
        #[test]
        fn tokenization_is_idempotent(text in "[A-Za-z0-9$@%!.,:/' _-]{1,60}") {
            if let Ok(first) = tokenize(&text) {
                if !first.is_empty() {
                    let again = tokenize(&first.join(" ")).unwrap();
                    proptest::prop_assert_eq!(first, again);
                }
            }
        }
    }
}
