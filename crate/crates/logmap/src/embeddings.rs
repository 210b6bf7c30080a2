//! Word vectors, one per line: `token v1 v2 ... vd`.

use std::collections::HashSet;
use std::path::Path;

use log::warn;
use logmap_core::sim::{SimError, SimilarityModel};

use crate::error::{read_to_string, LoadError};

pub fn parse_embeddings(text: &str, path: &Path) -> Result<SimilarityModel, LoadError> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let vector = fields
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| LoadError::format(path, i + 1, format!("bad component: {e}")))?;
        if !seen.insert(token.to_lowercase()) {
            warn!("{}:{}: duplicate vector for {token:?}, keeping the last one", path.display(), i + 1);
        }
        entries.push((token.to_string(), vector));
    }
    SimilarityModel::embedding(entries).map_err(|source| match source {
        SimError::Empty => LoadError::format(path, 0, "no vectors in embedding file"),
        source => LoadError::Embedding { path: path.into(), source },
    })
}

pub fn load_embeddings(path: &Path) -> Result<SimilarityModel, LoadError> {
    parse_embeddings(&read_to_string(path)?, path)
}
