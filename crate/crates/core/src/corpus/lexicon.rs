use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::{parse_error, read_to_string};

/// On-disk layout of a sentiment lexicon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LexiconFormat {
    /// Two files of one word per line: positive list then negative list.
    /// Lines starting with `;` or `#` are comments (Bing Liu layout).
    WordLists,
    /// `type=... word1=<w> ... priorpolarity=<positive|negative|both|neutral>`.
    Mpqa,
    /// `token<TAB>valence[<TAB>...]` with valences inside `[min, max]`.
    Valence { min: f64, max: f64 },
    /// SentiWordNet 3.0: `POS ID PosScore NegScore SynsetTerms Gloss`.
    /// Word valence is the mean of `PosScore - NegScore` over its synsets.
    SentiWordNet,
}

impl LexiconFormat {
    /// VADER's lexicon is a valence file on the [-4, 4] scale.
    pub const VADER: LexiconFormat = LexiconFormat::Valence { min: -4.0, max: 4.0 };
}

impl FromStr for LexiconFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "word-lists" | "bing-liu" | "opinion-lexicon" => Ok(Self::WordLists),
            "mpqa" => Ok(Self::Mpqa),
            "vader" => Ok(Self::VADER),
            "valence" => Ok(Self::Valence { min: -1.0, max: 1.0 }),
            "sentiwordnet" | "swn" => Ok(Self::SentiWordNet),
            other => Err(Error::invalid(format!("unknown lexicon format `{other}`"))),
        }
    }
}

/// Where to find one lexicon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LexiconSpec {
    pub name: String,
    pub format: LexiconFormat,
    pub paths: Vec<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PolarityTags {
    pub positive: bool,
    pub negative: bool,
}

#[derive(Clone, Debug)]
pub enum LexiconEntries {
    Polarity(HashMap<String, PolarityTags>),
    Valence {
        values: HashMap<String, f64>,
        range: (f64, f64),
    },
}

#[derive(Clone, Debug)]
pub struct Lexicon {
    pub name: String,
    pub entries: LexiconEntries,
}

impl Lexicon {
    pub fn polarity(name: &str, positive: &[&str], negative: &[&str]) -> Self {
        let mut map: HashMap<String, PolarityTags> = HashMap::new();
        for w in positive {
            map.entry(w.to_string()).or_default().positive = true;
        }
        for w in negative {
            map.entry(w.to_string()).or_default().negative = true;
        }
        Self {
            name: name.to_string(),
            entries: LexiconEntries::Polarity(map),
        }
    }

    pub fn len(&self) -> usize {
        match &self.entries {
            LexiconEntries::Polarity(m) => m.len(),
            LexiconEntries::Valence { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Polarity of `token`; valence lexicons are thresholded at 0.
    pub fn tags(&self, token: &str) -> PolarityTags {
        match &self.entries {
            LexiconEntries::Polarity(m) => m.get(token).copied().unwrap_or_default(),
            LexiconEntries::Valence { values, .. } => match values.get(token) {
                Some(&v) => PolarityTags {
                    positive: v > 0.0,
                    negative: v < 0.0,
                },
                None => PolarityTags::default(),
            },
        }
    }
}

/// All lexicons used for feature extraction, in configuration order.
#[derive(Clone, Debug, Default)]
pub struct LexiconSet {
    pub lexicons: Vec<Lexicon>,
}

impl fmt::Display for LexiconSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .lexicons
            .iter()
            .map(|l| format!("{}={}", l.name, l.len()))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

pub fn load_lexicons(specs: &[LexiconSpec]) -> Result<LexiconSet> {
    let mut set = LexiconSet::default();
    for spec in specs {
        let lex = load_lexicon(spec)?;
        if lex.is_empty() {
            return Err(Error::invalid(format!("lexicon `{}` is empty", spec.name)));
        }
        log::info!("lexicon {}: {} entries", lex.name, lex.len());
        set.lexicons.push(lex);
    }
    Ok(set)
}

fn load_lexicon(spec: &LexiconSpec) -> Result<Lexicon> {
    let entries = match spec.format {
        LexiconFormat::WordLists => {
            let [pos, neg] = spec.paths.as_slice() else {
                return Err(Error::invalid(format!(
                    "lexicon `{}`: word lists need a positive and a negative file",
                    spec.name
                )));
            };
            let mut map: HashMap<String, PolarityTags> = HashMap::new();
            for (path, positive) in [(pos, true), (neg, false)] {
                for word in read_word_list(path)? {
                    let tags = map.entry(word.clone()).or_default();
                    if positive {
                        tags.positive = true;
                    } else {
                        tags.negative = true;
                    }
                    if tags.positive && tags.negative {
                        log::warn!("lexicon {}: `{word}` listed as both positive and negative", spec.name);
                    }
                }
            }
            LexiconEntries::Polarity(map)
        }
        LexiconFormat::Mpqa => LexiconEntries::Polarity(read_mpqa(single_path(spec)?)?),
        LexiconFormat::Valence { min, max } => LexiconEntries::Valence {
            values: read_valence(single_path(spec)?, min, max)?,
            range: (min, max),
        },
        LexiconFormat::SentiWordNet => LexiconEntries::Valence {
            values: read_sentiwordnet(single_path(spec)?)?,
            range: (-1.0, 1.0),
        },
    };
    Ok(Lexicon {
        name: spec.name.clone(),
        entries,
    })
}

fn single_path(spec: &LexiconSpec) -> Result<&Path> {
    match spec.paths.as_slice() {
        [p] => Ok(p),
        _ => Err(Error::invalid(format!(
            "lexicon `{}` expects exactly one file",
            spec.name
        ))),
    }
}

fn read_word_list(path: &Path) -> Result<Vec<String>> {
    Ok(read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with(';') && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}

fn read_mpqa(path: &Path) -> Result<HashMap<String, PolarityTags>> {
    let mut map: HashMap<String, PolarityTags> = HashMap::new();
    for (lineno, line) in read_to_string(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: HashMap<&str, &str> = line
            .split_whitespace()
            .filter_map(|kv| kv.split_once('='))
            .collect();
        let (Some(word), Some(polarity)) = (fields.get("word1"), fields.get("priorpolarity")) else {
            return Err(parse_error(path, lineno + 1, "missing word1 or priorpolarity"));
        };
        let tags = map.entry(word.to_lowercase()).or_default();
        match *polarity {
            "positive" => tags.positive = true,
            "negative" => tags.negative = true,
            "both" => {
                tags.positive = true;
                tags.negative = true;
            }
            _ => {}
        }
    }
    map.retain(|_, t| t.positive || t.negative);
    Ok(map)
}

fn read_valence(path: &Path, min: f64, max: f64) -> Result<HashMap<String, f64>> {
    let mut map = HashMap::new();
    for (lineno, line) in read_to_string(path)?.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(tok), Some(val)) = (fields.next(), fields.next()) else {
            return Err(parse_error(path, lineno + 1, "expected token<TAB>valence"));
        };
        let v: f64 = val
            .trim()
            .parse()
            .map_err(|_| parse_error(path, lineno + 1, "unparseable valence"))?;
        if !(min..=max).contains(&v) {
            return Err(parse_error(
                path,
                lineno + 1,
                format!("valence {v} outside declared range [{min}, {max}]"),
            ));
        }
        map.entry(tok.trim().to_lowercase()).or_insert(v);
    }
    Ok(map)
}

fn read_sentiwordnet(path: &Path) -> Result<HashMap<String, f64>> {
    let mut sums: HashMap<String, (f64, usize)> = HashMap::new();
    for (lineno, line) in read_to_string(path)?.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 5 {
            return Err(parse_error(path, lineno + 1, "expected at least 5 tab-separated fields"));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| parse_error(path, lineno + 1, "unparseable score"))
        };
        let valence = parse(fields[2])? - parse(fields[3])?;
        for term in fields[4].split_whitespace() {
            let word = term.split('#').next().unwrap_or(term).to_lowercase();
            let e = sums.entry(word).or_insert((0.0, 0));
            e.0 += valence;
            e.1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(w, (s, n))| (w, s / n as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn word_lists_assign_tags_and_keep_conflicts() {
        // 6-word fixture: "volatile" is in both lists
        let pos = write_tmp("; comment\ngood\ngain\nvolatile\n");
        let neg = write_tmp("bad\nloss\nvolatile\n");
        let set = load_lexicons(&[LexiconSpec {
            name: "bing".into(),
            format: LexiconFormat::WordLists,
            paths: vec![pos.path().into(), neg.path().into()],
        }])
        .unwrap();
        let lex = &set.lexicons[0];
        assert_eq!(lex.len(), 5);
        assert_eq!(lex.tags("good"), PolarityTags { positive: true, negative: false });
        assert_eq!(lex.tags("loss"), PolarityTags { positive: false, negative: true });
        assert_eq!(lex.tags("volatile"), PolarityTags { positive: true, negative: true });
        assert_eq!(lex.tags("stock"), PolarityTags::default());
    }

    #[test]
    fn valence_file_respects_range() {
        let f = write_tmp("great\t3.1\t0.8\t[3, 3, 4]\nawful\t-3.4\t0.5\t[]\nmeh\t0\n");
        let set = load_lexicons(&[LexiconSpec {
            name: "vader".into(),
            format: LexiconFormat::VADER,
            paths: vec![f.path().into()],
        }])
        .unwrap();
        let lex = &set.lexicons[0];
        assert!(lex.tags("great").positive);
        assert!(lex.tags("awful").negative);
        assert_eq!(lex.tags("meh"), PolarityTags::default());

        let bad = write_tmp("great\t5.0\n");
        assert!(load_lexicons(&[LexiconSpec {
            name: "vader".into(),
            format: LexiconFormat::VADER,
            paths: vec![bad.path().into()],
        }])
        .is_err());
    }

    #[test]
    fn mpqa_and_sentiwordnet() {
        let mpqa = write_tmp(
            "type=weaksubj len=1 word1=abandon pos1=verb stemmed1=y priorpolarity=negative\n\
             type=strongsubj len=1 word1=adore pos1=verb stemmed1=y priorpolarity=positive\n\
             type=weaksubj len=1 word1=about pos1=adj stemmed1=n priorpolarity=neutral\n",
        );
        let swn = write_tmp(
            "# header\na\t00001\t0.75\t0\table#1\tgloss\na\t00002\t0\t0.5\tunable#1 able#2\tgloss\n",
        );
        let set = load_lexicons(&[
            LexiconSpec {
                name: "mpqa".into(),
                format: LexiconFormat::Mpqa,
                paths: vec![mpqa.path().into()],
            },
            LexiconSpec {
                name: "swn".into(),
                format: LexiconFormat::SentiWordNet,
                paths: vec![swn.path().into()],
            },
        ])
        .unwrap();
        assert_eq!(set.lexicons[0].len(), 2);
        assert!(set.lexicons[0].tags("adore").positive);
        // able: mean(0.75, -0.5) = 0.125 > 0
        assert!(set.lexicons[1].tags("able").positive);
        assert!(set.lexicons[1].tags("unable").negative);
    }

    #[test]
    fn empty_lexicon_and_unknown_format() {
        let f = write_tmp("");
        assert!(load_lexicons(&[LexiconSpec {
            name: "x".into(),
            format: LexiconFormat::Mpqa,
            paths: vec![f.path().into()],
        }])
        .is_err());
        assert!("afinn-ish".parse::<LexiconFormat>().is_err());
        assert_eq!("vader".parse::<LexiconFormat>().unwrap(), LexiconFormat::VADER);
    }
}
