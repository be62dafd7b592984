use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::io_util::{parse_error, read_to_string, write_atomic};

/// Precomputed distributional thesaurus: for each token, expansion targets
/// ranked by descending similarity (ties by target name).
#[derive(Clone, Debug, Default)]
pub struct DtTable {
    entries: HashMap<String, Vec<(String, f64)>>,
}

impl DtTable {
    /// Builds a table from `(token, target, similarity)` rows. Self-expansions
    /// are dropped, and repeated (token, target) pairs keep the first score.
    pub fn from_rows<I, S>(rows: I) -> Self
    where
        I: IntoIterator<Item = (S, S, f64)>,
        S: Into<String>,
    {
        let mut entries: HashMap<String, Vec<(String, f64)>> = HashMap::new();
        for (tok, target, sim) in rows {
            let (tok, target) = (tok.into(), target.into());
            if tok == target {
                continue;
            }
            let list = entries.entry(tok).or_default();
            if !list.iter().any(|(t, _)| *t == target) {
                list.push((target, sim));
            }
        }
        for list in entries.values_mut() {
            list.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        }
        Self { entries }
    }

    /// Ranked expansions for `token`, empty when the token is unknown.
    pub fn expansions(&self, token: &str) -> &[(String, f64)] {
        self.entries.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut keys: Vec<&String> = self.entries.keys().collect();
        keys.sort();
        let mut buf = String::new();
        for k in keys {
            for (t, s) in &self.entries[k] {
                writeln!(buf, "{k}\t{t}\t{s}").unwrap();
            }
        }
        write_atomic(path, buf.as_bytes())
    }
}

/// Loads `token<TAB>target<TAB>similarity` lines (the JoBimText export
/// layout). Lines starting with `#` are comments.
pub fn load_thesaurus(path: &Path) -> Result<DtTable> {
    let contents = read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in contents.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(parse_error(path, lineno + 1, "expected token, target and similarity"));
        }
        let sim: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| parse_error(path, lineno + 1, "unparseable similarity"))?;
        rows.push((fields[0].trim().to_lowercase(), fields[1].trim().to_lowercase(), sim));
    }
    let table = DtTable::from_rows(rows);
    log::info!("{}: thesaurus rows for {} tokens", path.display(), table.len());
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_ranked_and_self_free() {
        let dt = DtTable::from_rows(vec![
            ("touchpad", "mouse", 0.9),
            ("touchpad", "touchpad", 1.0),
            ("touchpad", "trackpad", 0.6),
            ("touchpad", "joystick", 0.7),
            ("touchpad", "trackball", 0.7),
        ]);
        let names: Vec<&str> = dt.expansions("touchpad").iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(names, ["mouse", "joystick", "trackball", "trackpad"]);
        assert!(dt.expansions("keyboard").is_empty());
    }

    #[test]
    fn file_round_trip() {
        let dt = DtTable::from_rows(vec![("a", "b", 2.0), ("a", "c", 1.0), ("d", "a", 0.5)]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("dt.tsv");
        dt.save(&p).unwrap();
        let back = load_thesaurus(&p).unwrap();
        assert_eq!(back.expansions("a"), dt.expansions("a"));
        assert_eq!(back.expansions("d"), dt.expansions("d"));
    }
}
