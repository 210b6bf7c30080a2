//! Database contents: one `<relation>.csv` per relation in the data
//! directory, with a header row naming the attributes.

use std::path::Path;

use log::warn;
use logmap_core::catalog::{AttrRef, SchemaGraph, ValueIndex};

use crate::error::LoadError;

pub fn load_data(schema: &SchemaGraph, dir: &Path) -> Result<ValueIndex, LoadError> {
    let mut index = ValueIndex::new(schema);
    for r in schema.relations() {
        let path = dir.join(format!("{}.csv", r.name));
        if !path.exists() {
            warn!("no data file for relation {} at {}", r.name, path.display());
            continue;
        }
        let mut reader = csv::Reader::from_path(&path).map_err(|e| csv_error(&path, e))?;
        let header: Vec<String> =
            reader.headers().map_err(|e| csv_error(&path, e))?.iter().map(|h| h.trim().to_lowercase()).collect();
        let mut columns = Vec::with_capacity(header.len());
        for h in &header {
            let a = AttrRef::new(&r.name, h);
            if schema.attribute(&a).is_none() {
                return Err(LoadError::format(&path, 1, format!("unknown attribute {a}")));
            }
            columns.push(a);
        }
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| csv_error(&path, e))?;
            for (a, cell) in columns.iter().zip(record.iter()) {
                index
                    .insert(a, cell)
                    .map_err(|e| LoadError::format(&path, row + 2, e.to_string()))?;
            }
        }
    }
    Ok(index)
}

fn csv_error(path: &Path, e: csv::Error) -> LoadError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => LoadError::io(path, io),
        kind => LoadError::format(path, line, format!("{kind:?}")),
    }
}
