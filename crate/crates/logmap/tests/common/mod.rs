#![allow(dead_code)]

use std::path::PathBuf;

use logmap::data::load_data;
use logmap::embeddings::load_embeddings;
use logmap::querylog::read_log;
use logmap::schema::load_schema;
use logmap_core::catalog::{SchemaGraph, ValueIndex};
use logmap_core::qfg::QueryFragmentGraph;
use logmap_core::sim::SimilarityModel;
use logmap_core::sql::ObscurityLevel;

pub fn fixture(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(path)
}

pub struct Fixture {
    pub schema: SchemaGraph,
    pub index: ValueIndex,
}

pub fn load(name: &str) -> Fixture {
    let schema = load_schema(&fixture(&format!("{name}/schema.toml"))).unwrap();
    let index = load_data(&schema, &fixture(&format!("{name}/data"))).unwrap();
    Fixture { schema, index }
}

pub fn mas_log(level: ObscurityLevel) -> QueryFragmentGraph {
    let log = read_log(&fixture("mas/log.sql")).unwrap();
    assert!(log.skipped.is_empty(), "{:?}", log.skipped);
    log.to_qfg(level).unwrap()
}

pub fn mas_embeddings() -> SimilarityModel {
    load_embeddings(&fixture("mas/embeddings.txt")).unwrap()
}
