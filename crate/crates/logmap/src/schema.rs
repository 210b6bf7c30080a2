//! Schema files in TOML:
//!
//! ```toml
//! [[relation]]
//! name = "publication"
//!
//! [[relation.attribute]]
//! name = "pid"
//! type = "numeric"     # or "text"
//! key = "primary"      # "foreign", "primary" or omitted
//!
//! [[relation.attribute]]
//! name = "jid"
//! type = "numeric"
//! key = "foreign"
//! references = "journal.jid"
//! ```
//!
//! A plain attribute may name its `paired` attribute; it defaults to the
//! relation's primary key.

use std::path::Path;

use logmap_core::catalog::{AttrRef, AttrType, AttributeDef, KeyRole, RelationDef, SchemaGraph};
use serde::Deserialize;

use crate::error::{read_to_string, LoadError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    #[serde(default)]
    relation: Vec<RelationEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationEntry {
    name: String,
    #[serde(default)]
    attribute: Vec<AttributeEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeEntry {
    name: String,
    #[serde(rename = "type")]
    ty: TypeName,
    #[serde(default)]
    key: Option<KeyName>,
    #[serde(default)]
    references: Option<String>,
    #[serde(default)]
    paired: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum TypeName {
    Numeric,
    Text,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KeyName {
    Primary,
    Foreign,
}

pub fn parse_schema(text: &str, path: &Path) -> Result<SchemaGraph, LoadError> {
    let file: SchemaFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| text[..s.start].lines().count().max(1));
        LoadError::format(path, line, e.message())
    })?;
    let attr_ref = |s: &str| AttrRef::parse(s).ok_or_else(|| LoadError::format(path, 0, format!("bad attribute reference {s:?}")));
    let mut relations = Vec::with_capacity(file.relation.len());
    for r in file.relation {
        let mut attributes = Vec::with_capacity(r.attribute.len());
        for a in r.attribute {
            let ty = match a.ty {
                TypeName::Numeric => AttrType::Numeric,
                TypeName::Text => AttrType::Text,
            };
            let key = match a.key {
                Some(KeyName::Primary) => KeyRole::Primary,
                Some(KeyName::Foreign) => KeyRole::Foreign,
                None => KeyRole::Plain,
            };
            let mut def = AttributeDef::new(a.name.to_lowercase(), ty, key);
            if let Some(t) = &a.references {
                def = def.references(attr_ref(t)?);
            }
            if let Some(p) = &a.paired {
                def = def.paired(attr_ref(p)?);
            }
            attributes.push(def);
        }
        relations.push(RelationDef::new(r.name.to_lowercase(), attributes));
    }
    SchemaGraph::new(relations).map_err(|source| LoadError::Catalog { path: path.into(), source })
}

pub fn load_schema(path: &Path) -> Result<SchemaGraph, LoadError> {
    parse_schema(&read_to_string(path)?, path)
}
