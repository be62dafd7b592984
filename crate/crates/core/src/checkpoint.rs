//! Self-describing text checkpoints shared by every trainable model.
//!
//! Layout, one item per line:
//!
//! ```text
//! knowattn-checkpoint 1
//! kind <model kind>
//! meta <key> <value>              (zero or more)
//! param <name> <rank> <dim>...    (followed by one line of values)
//! <v0> <v1> ...                   (row-major, shortest round-trip decimal)
//! end
//! ```
//!
//! Values are printed with Rust's shortest round-trip `f64` formatting, so
//! save followed by load reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;

use crate::autodiff::{ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::io_util::{parse_error, read_to_string, write_atomic};

const MAGIC: &str = "knowattn-checkpoint 1";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub meta: IndexMap<String, String>,
    pub params: ParamStore,
}

impl Checkpoint {
    pub fn new(kind: impl Into<String>, params: ParamStore) -> Self {
        Self {
            kind: kind.into(),
            meta: IndexMap::new(),
            params,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("checkpoint lacks `{key}`")))
    }

    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.meta(key)?
            .parse()
            .map_err(|_| Error::Config(format!("checkpoint field `{key}` is malformed")))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "kind {}", self.kind).unwrap();
        for (k, v) in &self.meta {
            writeln!(out, "meta {k} {v}").unwrap();
        }
        for (name, t) in self.params.iter() {
            write!(out, "param {name} {}", t.rank()).unwrap();
            for d in t.shape() {
                write!(out, " {d}").unwrap();
            }
            out.push('\n');
            let vals: Vec<String> = t.data().iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", vals.join(" ")).unwrap();
        }
        out.push_str("end\n");
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_to_string(path)?, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l.trim() == MAGIC => {}
            _ => return Err(parse_error(path, 1, format!("expected `{MAGIC}`"))),
        }
        let kind = match lines.next() {
            Some((_, l)) if l.starts_with("kind ") => l[5..].trim().to_string(),
            _ => return Err(parse_error(path, 2, "expected `kind <name>`")),
        };
        let mut ck = Checkpoint::new(kind, ParamStore::new());
        let mut ended = false;
        while let Some((no, line)) = lines.next() {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("meta") => {
                    let key = parts
                        .next()
                        .ok_or_else(|| parse_error(path, no, "meta without key"))?;
                    let value: Vec<&str> = parts.collect();
                    ck.meta.insert(key.to_string(), value.join(" "));
                }
                Some("param") => {
                    let name = parts
                        .next()
                        .ok_or_else(|| parse_error(path, no, "param without name"))?;
                    let nums: Vec<usize> = parts
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| parse_error(path, no, "bad shape"))?;
                    let (&rank, dims) = nums
                        .split_first()
                        .ok_or_else(|| parse_error(path, no, "missing rank"))?;
                    if dims.len() != rank {
                        return Err(parse_error(path, no, "rank does not match shape"));
                    }
                    let (vno, vline) = lines
                        .next()
                        .ok_or_else(|| parse_error(path, no, "missing values line"))?;
                    let data: Vec<f64> = vline
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| parse_error(path, vno, "unparseable value"))?;
                    let t = Tensor::new(dims.to_vec(), data)
                        .map_err(|e| parse_error(path, vno, e.to_string()))?;
                    ck.params.insert(name, t);
                }
                Some("end") => {
                    ended = true;
                    break;
                }
                None => continue,
                Some(other) => {
                    return Err(parse_error(path, no, format!("unexpected `{other}`")));
                }
            }
        }
        if !ended {
            return Err(parse_error(path, text.lines().count(), "truncated checkpoint"));
        }
        Ok(ck)
    }
}
