//! JSON files of keyword tasks and benchmarks.
//!
//! A task file holds records of keywords with their metadata:
//!
//! ```json
//! {"records": [{"nlq": "papers after 2000",
//!               "keywords": [{"keyword": "papers", "context": "select"},
//!                            {"keyword": "after 2000", "context": "where", "op": ">"}]}]}
//! ```
//!
//! A keyword may also carry `"aggregates": ["count"]` (outermost first) and
//! `"group": true`. Benchmarks add `name`, and per record `gold_sql` and a
//! `gold_mapping` list aligned with `keywords` (`null` for relation names).

use std::path::Path;

use logmap_core::eval::{Benchmark, BenchmarkRecord};
use logmap_core::mapper::{KeywordTask, TaskContext};
use logmap_core::sql::CompareOp;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, LoadError};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeywordEntry {
    pub keyword: String,
    pub context: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aggregates: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub group: bool,
}

impl KeywordEntry {
    pub fn to_task(&self) -> Result<KeywordTask, String> {
        let context = TaskContext::parse(&self.context).ok_or_else(|| format!("unknown context {:?}", self.context))?;
        let mut task = KeywordTask::new(&self.keyword, context).with_aggregates(self.aggregates.iter().cloned());
        if let Some(op) = &self.op {
            task = task.with_op(CompareOp::parse(op).ok_or_else(|| format!("unknown operator {op:?}"))?);
        }
        if self.group {
            task = task.grouped();
        }
        Ok(task)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecord {
    #[serde(default)]
    pub nlq: String,
    pub keywords: Vec<KeywordEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub records: Vec<TaskRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkEntry {
    #[serde(default)]
    pub nlq: String,
    pub keywords: Vec<KeywordEntry>,
    pub gold_sql: String,
    pub gold_mapping: Vec<Option<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkFile {
    #[serde(default)]
    pub name: String,
    pub records: Vec<BenchmarkEntry>,
}

fn from_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, LoadError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| LoadError::format(path, e.line(), e.to_string()))
}

pub fn load_tasks(path: &Path) -> Result<TaskFile, LoadError> {
    from_json(path)
}

pub fn load_benchmark(path: &Path) -> Result<Benchmark, LoadError> {
    let file: BenchmarkFile = from_json(path)?;
    let mut records = Vec::with_capacity(file.records.len());
    for (i, r) in file.records.into_iter().enumerate() {
        let tasks = r
            .keywords
            .iter()
            .map(KeywordEntry::to_task)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|m| LoadError::format(path, 0, format!("record {i}: {m}")))?;
        records.push(BenchmarkRecord { nlq: r.nlq, tasks, gold_sql: r.gold_sql, gold_mapping: r.gold_mapping });
    }
    let name = if file.name.is_empty() {
        path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
    } else {
        file.name
    };
    Ok(Benchmark { name, records })
}
