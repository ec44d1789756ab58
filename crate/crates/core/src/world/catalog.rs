//! Catalog container and JSONL ingestion.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::world::Item;

/// Immutable item collection. File order is preserved because downstream
/// tie-breaking depends on it.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    items: Vec<Item>,
    by_id: BTreeMap<String, usize>,
}

impl Catalog {
    pub fn from_items(items: Vec<Item>) -> Result<Self> {
        let mut catalog = Catalog::default();
        for (line, item) in items.into_iter().enumerate() {
            catalog.push(item, line + 1)?;
        }
        Ok(catalog)
    }

    fn push(&mut self, item: Item, line: usize) -> Result<()> {
        item.validate(line)?;
        if self.by_id.contains_key(&item.id) {
            return Err(Error::DuplicateId(item.id));
        }
        self.by_id.insert(item.id.clone(), self.items.len());
        self.items.push(item);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn get(&self, idx: usize) -> &Item {
        &self.items[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn by_id(&self, id: &str) -> Option<&Item> {
        self.index_of(id).map(|i| &self.items[i])
    }
}

/// Reads one item per JSONL line, validating as it goes.
pub fn load_catalog(path: &Path) -> Result<Catalog> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut catalog = Catalog::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let item: Item = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        catalog.push(item, line_no)?;
    }
    Ok(catalog)
}

pub fn save_catalog(catalog: &Catalog, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for item in catalog.items() {
        serde_json::to_writer(&mut out, item)?;
        out.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    const REC: &str = r#"{"id":"ID","title":"red tent","category":"camping gear","brand":"acme","attributes":{},"scenarios":[],"price":10.0,"quality":0.5}"#;

    #[test]
    fn empty_file_loads_zero_items() {
        let f = write_lines(&[]);
        let catalog = load_catalog(f.path()).unwrap();
        assert_eq!(catalog.len(), 0);
    }

    #[test]
    fn three_records_keep_file_order() {
        let lines: Vec<String> = ["c", "a", "b"].iter().map(|id| REC.replace("ID", id)).collect();
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let f = write_lines(&refs);
        let catalog = load_catalog(f.path()).unwrap();
        assert_eq!(catalog.len(), 3);
        let ids: Vec<&str> = catalog.items().iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
    }

    #[test]
    fn missing_title_reports_line_and_field() {
        let bad = r#"{"id":"b","category":"x","brand":"y","price":1.0,"quality":0.5}"#;
        let first = REC.replace("ID", "a");
        let f = write_lines(&[&first, bad]);
        match load_catalog(f.path()) {
            Err(Error::MalformedRecord { line, reason }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("title"), "reason was {reason:?}");
            }
            other => panic!("expected malformed record, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_rejected() {
        let a = REC.replace("ID", "same");
        let f = write_lines(&[&a, &a]);
        assert!(matches!(load_catalog(f.path()), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn save_then_load_round_trips() {
        let lines: Vec<String> = ["a", "b"].iter().map(|id| REC.replace("ID", id)).collect();
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let f = write_lines(&refs);
        let catalog = load_catalog(f.path()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        save_catalog(&catalog, out.path()).unwrap();
        let reloaded = load_catalog(out.path()).unwrap();
        assert_eq!(catalog.items(), reloaded.items());
    }
}
