//! SQL query logs: statements separated by `;`, `--` lines are comments.

use std::path::Path;

use logmap_core::qfg::{QfgError, QueryFragmentGraph};
use logmap_core::sql::{extract_fragments, parse_query, split_statements, ObscurityLevel, ParsedQuery};

use crate::error::{read_to_string, LoadError};

#[derive(Debug, Clone, Default)]
pub struct ParsedLog {
    pub queries: Vec<ParsedQuery>,
    /// Statement number (1-based) and the reason it was skipped.
    pub skipped: Vec<(usize, String)>,
}

pub fn parse_log(text: &str) -> ParsedLog {
    let mut log = ParsedLog::default();
    for (i, stmt) in split_statements(text).iter().enumerate() {
        match parse_query(stmt) {
            Ok(q) => log.queries.push(q),
            Err(e) => log.skipped.push((i + 1, e.to_string())),
        }
    }
    log
}

pub fn read_log(path: &Path) -> Result<ParsedLog, LoadError> {
    Ok(parse_log(&read_to_string(path)?))
}

impl ParsedLog {
    pub fn to_qfg(&self, level: ObscurityLevel) -> Result<QueryFragmentGraph, QfgError> {
        let sets: Vec<_> = self.queries.iter().map(|q| extract_fragments(q, level)).collect();
        logmap_core::qfg::build_qfg(sets.iter(), level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_bad_statements() {
        let log = parse_log("SELECT title FROM publication;\n-- note\nSELEC nonsense;\nSELECT name FROM author");
        assert_eq!(log.queries.len(), 2);
        assert_eq!(log.skipped.len(), 1);
        assert_eq!(log.skipped[0].0, 2);
    }
}
