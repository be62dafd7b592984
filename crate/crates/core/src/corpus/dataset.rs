use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::{parse_error, read_to_string, write_atomic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Track {
    Microblog,
    News,
}

impl fmt::Display for Track {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Track::Microblog => "microblog",
            Track::News => "news",
        })
    }
}

impl FromStr for Track {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "microblog" | "microblogs" | "1" => Ok(Track::Microblog),
            "news" | "headlines" | "2" => Ok(Track::News),
            other => Err(Error::invalid(format!("unknown track `{other}`"))),
        }
    }
}

/// One scored sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentimentInstance {
    pub id: String,
    pub text: String,
    pub score: f64,
    pub track: Track,
}

impl SentimentInstance {
    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(Error::invalid(format!("instance {}: empty text", self.id)));
        }
        if !self.score.is_finite() || self.score.abs() > 1.0 {
            return Err(Error::invalid(format!(
                "instance {}: score {} outside [-1, 1]",
                self.id, self.score
            )));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: serde_json::Value,
    text: String,
    score: f64,
    track: Option<Track>,
}

/// Loads the canonical dataset format: one JSON object per line with
/// `id`, `text`, `score` and optionally `track`. Blank lines are skipped.
pub fn load_dataset(path: &Path, track: Track) -> Result<Vec<SentimentInstance>> {
    let contents = read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in contents.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(line)
            .map_err(|e| parse_error(path, lineno, format!("malformed record: {e}")))?;
        if let Some(t) = raw.track {
            if t != track {
                return Err(parse_error(
                    path,
                    lineno,
                    format!("record track {t} does not match requested track {track}"),
                ));
            }
        }
        let inst = SentimentInstance {
            id: id_string(&raw.id),
            text: raw.text,
            score: raw.score,
            track,
        };
        inst.validate()
            .map_err(|e| parse_error(path, lineno, e.to_string()))?;
        out.push(inst);
    }
    if out.is_empty() {
        log::warn!("{}: dataset is empty", path.display());
    } else {
        log::info!("{}: loaded {} {track} instances", path.display(), out.len());
    }
    Ok(out)
}

/// Writes instances in the canonical line format.
pub fn save_dataset(path: &Path, instances: &[SentimentInstance]) -> Result<()> {
    let mut buf = String::new();
    for inst in instances {
        buf.push_str(&serde_json::to_string(inst)?);
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

fn id_string(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Adapter for the SemEval-2017 Task 5 release files: a JSON array whose
/// objects carry the text under `title` (headlines), `spans` or `message`
/// (microblogs) and the score under `sentiment` or `sentiment score`
/// (number or numeric string).
pub fn load_semeval(path: &Path, track: Track) -> Result<Vec<SentimentInstance>> {
    let contents = read_to_string(path)?;
    let items: Vec<serde_json::Value> = serde_json::from_str(&contents)
        .map_err(|e| parse_error(path, e.line(), format!("expected JSON array: {e}")))?;
    let mut out = Vec::with_capacity(items.len());
    for (pos, item) in items.iter().enumerate() {
        let record = pos + 1;
        let obj = item
            .as_object()
            .ok_or_else(|| parse_error(path, record, "record is not an object"))?;
        let id = obj
            .get("id")
            .map(id_string)
            .unwrap_or_else(|| record.to_string());
        let text = if let Some(t) = obj.get("title").and_then(|v| v.as_str()) {
            t.to_string()
        } else if let Some(spans) = obj.get("spans") {
            match spans {
                serde_json::Value::Array(parts) => parts
                    .iter()
                    .filter_map(|p| p.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
                serde_json::Value::String(s) => s.clone(),
                _ => String::new(),
            }
        } else if let Some(m) = obj.get("message") {
            m.get("body")
                .and_then(|b| b.as_str())
                .or_else(|| m.as_str())
                .unwrap_or_default()
                .to_string()
        } else {
            obj.get("text")
                .and_then(|v| v.as_str())
                .unwrap_or_default()
                .to_string()
        };
        let score_value = obj
            .get("sentiment score")
            .or_else(|| obj.get("sentiment"))
            .or_else(|| obj.get("score"))
            .ok_or_else(|| parse_error(path, record, "missing sentiment score"))?;
        let score = match score_value {
            serde_json::Value::Number(n) => n.as_f64(),
            serde_json::Value::String(s) => s.trim().parse().ok(),
            _ => None,
        }
        .ok_or_else(|| parse_error(path, record, "unparseable sentiment score"))?;
        let inst = SentimentInstance {
            id,
            text,
            score,
            track,
        };
        inst.validate()
            .map_err(|e| parse_error(path, record, e.to_string()))?;
        out.push(inst);
    }
    log::info!("{}: converted {} SemEval records", path.display(), out.len());
    Ok(out)
}
