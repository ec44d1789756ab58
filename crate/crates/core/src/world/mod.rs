//! Catalog and query data model, JSONL ingestion, and seeded world
//! generation.

mod catalog;
mod gen;
mod item;
mod kb;
mod query;

use std::io::Write as _;
use std::path::Path;

pub use catalog::{load_catalog, save_catalog, Catalog};
pub use gen::{generate_world, World, WorldConfig, FIXTURE_QUERIES};
pub use item::Item;
pub use kb::{
    fold_plural, phrase_in_tokens, AttributeEntry, Extremum, KnowledgeBase, RewriteEntry,
};
pub use query::{Complexity, GeneratorClass, Intent, QueryCase};

use crate::error::{Error, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn save_queries(queries: &[QueryCase], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for q in queries {
        serde_json::to_writer(&mut out, q)?;
        out.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(io_err(path))
}

pub fn load_queries(path: &Path) -> Result<Vec<QueryCase>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut queries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let q: QueryCase = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        queries.push(q);
    }
    Ok(queries)
}

/// Writes a world as `catalog.jsonl`, `queries.jsonl`, and `kb.json`.
pub fn save_world(world: &World, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    save_catalog(&world.catalog, &dir.join("catalog.jsonl"))?;
    save_queries(&world.queries, &dir.join("queries.jsonl"))?;
    let kb = serde_json::to_string_pretty(&world.kb)?;
    std::fs::write(dir.join("kb.json"), kb).map_err(io_err(dir))
}

pub fn load_world(dir: &Path) -> Result<World> {
    let catalog = load_catalog(&dir.join("catalog.jsonl"))?;
    let queries = load_queries(&dir.join("queries.jsonl"))?;
    let kb_path = dir.join("kb.json");
    let text = std::fs::read_to_string(&kb_path).map_err(io_err(&kb_path))?;
    let kb: KnowledgeBase = serde_json::from_str(&text)?;
    Ok(World {
        catalog,
        queries,
        kb,
    })
}
