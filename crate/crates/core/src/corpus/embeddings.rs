use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io_util::{parse_error, read_to_string, write_atomic};

/// Pre-trained word vectors of one uniform dimension.
#[derive(Clone, Debug, Default)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    values: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        Ok(Self {
            dim,
            ..Default::default()
        })
    }

    /// Inserts a vector. Returns `false` (and keeps the existing entry) when
    /// the token is already present.
    pub fn insert(&mut self, token: &str, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::shape(
                "embedding",
                format!("`{token}` has {} values, table dimension is {}", vector.len(), self.dim),
            ));
        }
        if self.index.contains_key(token) {
            return Ok(false);
        }
        self.index.insert(token.to_string(), self.tokens.len());
        self.tokens.push(token.to_string());
        self.values.extend_from_slice(vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.values[i * self.dim..(i + 1) * self.dim])
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Vector for `token`, or the zero vector when it is out of vocabulary.
    pub fn lookup_or_zero(&self, token: &str) -> Vec<f64> {
        self.get(token)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; self.dim])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), &self.values[i * self.dim..(i + 1) * self.dim]))
    }

    /// Writes the whitespace-separated text format (no header line).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = String::new();
        for (tok, v) in self.iter() {
            buf.push_str(tok);
            for x in v {
                write!(buf, " {x}").unwrap();
            }
            buf.push('\n');
        }
        write_atomic(path, buf.as_bytes())
    }
}

/// Loads a text embedding file: one `token v1 v2 ...` line per entry.
/// A leading `count dim` header line (word2vec text format) is skipped.
/// Files ending in `.bin` are read as word2vec binary.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    if path.extension().is_some_and(|e| e == "bin") {
        return load_word2vec_binary(path);
    }
    let contents = read_to_string(path)?;
    let mut table: Option<EmbeddingTable> = None;
    let mut duplicates = 0usize;
    for (lineno, line) in contents.lines().enumerate() {
        let lineno = lineno + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if lineno == 1 && rest.len() == 1 && token.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
            continue;
        }
        let values: Vec<f64> = rest
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_error(path, lineno, format!("unparseable value: {e}")))?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(parse_error(path, lineno, "non-finite value"));
        }
        let t = match &mut table {
            Some(t) => t,
            None => table.insert(
                EmbeddingTable::new(values.len())
                    .map_err(|_| parse_error(path, lineno, "line has no values"))?,
            ),
        };
        if values.len() != t.dim() {
            return Err(parse_error(
                path,
                lineno,
                format!("expected {} values, found {}", t.dim(), values.len()),
            ));
        }
        if !t.insert(token, &values)? {
            duplicates += 1;
            log::warn!("{}:{lineno}: duplicate token `{token}` ignored", path.display());
        }
    }
    let table = table.ok_or_else(|| parse_error(path, 0, "no embedding entries"))?;
    if duplicates > 0 {
        log::warn!("{}: {duplicates} duplicate tokens ignored", path.display());
    }
    log::info!(
        "{}: {} vectors of dimension {}",
        path.display(),
        table.len(),
        table.dim()
    );
    Ok(table)
}

fn load_word2vec_binary(path: &Path) -> Result<EmbeddingTable> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| parse_error(path, 1, "missing header"))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| parse_error(path, 1, "header is not UTF-8"))?;
    let mut parts = header.split_whitespace().map(str::parse::<usize>);
    let (count, dim) = match (parts.next(), parts.next()) {
        (Some(Ok(c)), Some(Ok(d))) => (c, d),
        _ => return Err(parse_error(path, 1, "header must be `count dim`")),
    };
    let mut table = EmbeddingTable::new(dim)?;
    let mut pos = header_end + 1;
    for entry in 0..count {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos] != b' ' {
            pos += 1;
        }
        let token = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        pos += 1;
        let end = pos + 4 * dim;
        if end > bytes.len() {
            return Err(parse_error(path, entry + 2, "truncated vector"));
        }
        let v: Vec<f64> = bytes[pos..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        pos = end;
        if !table.insert(&token, &v)? {
            log::warn!("{}: duplicate token `{token}` ignored", path.display());
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &[u8], suffix: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        f.write_all(contents).unwrap();
        f
    }

    #[test]
    fn three_lines_of_four_values() {
        let f = write_tmp(b"a 1 2 3 4\nb 0 0 0 1\nc -1 0.5 2 3\n", ".txt");
        let t = load_embeddings(f.path()).unwrap();
        assert_eq!((t.dim(), t.len()), (4, 3));
        assert_eq!(t.get("c").unwrap(), &[-1.0, 0.5, 2.0, 3.0]);
    }

    #[test]
    fn short_line_is_named() {
        let f = write_tmp(b"a 1 2 3 4\nb 1 2 3\nc 1 2 3 4\n", ".txt");
        match load_embeddings(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_token_keeps_first() {
        let f = write_tmp(b"a 1 2\na 3 4\n", ".txt");
        let t = load_embeddings(f.path()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("a").unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn word2vec_header_is_skipped() {
        let f = write_tmp(b"2 3\nx 1 2 3\ny 4 5 6\n", ".txt");
        let t = load_embeddings(f.path()).unwrap();
        assert_eq!((t.dim(), t.len()), (3, 2));
    }

    #[test]
    fn garbage_value_is_an_error() {
        let f = write_tmp(b"a 1 two\n", ".txt");
        assert!(matches!(load_embeddings(f.path()), Err(Error::Parse { .. })));
    }

    #[test]
    fn binary_format() {
        let mut bytes = b"2 2\n".to_vec();
        for (tok, v) in [("up", [1.0f32, -1.0]), ("down", [0.5, 0.25])] {
            bytes.extend_from_slice(tok.as_bytes());
            bytes.push(b' ');
            for x in v {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
            bytes.push(b'\n');
        }
        let f = write_tmp(&bytes, ".bin");
        let t = load_embeddings(f.path()).unwrap();
        assert_eq!(t.get("down").unwrap(), &[0.5, 0.25]);
    }

    #[test]
    fn oov_is_zero() {
        let mut t = EmbeddingTable::new(3).unwrap();
        t.insert("a", &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(t.lookup_or_zero("b"), vec![0.0; 3]);
    }
}
