//! Text serialization of a query fragment graph.
//!
//! ```text
//! qfg v1 obscurity=noconstop queries=25
//! F <context> <expression> <count>
//! P <context> <expression> <context> <expression> <count>
//! ```
//!
//! Fields are tab separated; tab, newline, carriage return and backslash
//! inside expressions are escaped as `\t`, `\n`, `\r` and `\\`. Lines are
//! sorted so equal graphs serialize to equal bytes.

use std::path::Path;

use logmap_core::qfg::QueryFragmentGraph;
use logmap_core::sql::{Context, ObscurityLevel, QueryFragment};

use crate::error::{read_to_string, LoadError};

const MAGIC: &str = "qfg v1";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}

pub fn serialize_qfg(g: &QueryFragmentGraph) -> String {
    let frag = |f: &QueryFragment| format!("{}\t{}", f.context.as_str(), escape(&f.expression));
    let mut lines: Vec<String> = g.occurrences().iter().map(|(f, n)| format!("F\t{}\t{n}", frag(f))).collect();
    lines.extend(g.cooccurrences().iter().map(|((a, b), n)| format!("P\t{}\t{}\t{n}", frag(a), frag(b))));
    lines.sort();
    let mut out = format!("{MAGIC} obscurity={} queries={}\n", g.obscurity().as_str(), g.queries());
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

pub fn parse_qfg(text: &str, path: &Path) -> Result<QueryFragmentGraph, LoadError> {
    let err = |line: usize, msg: &str| LoadError::format(path, line, msg);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty QFG file"))?;
    let rest = header.strip_prefix(MAGIC).ok_or_else(|| err(1, "missing `qfg v1` header"))?;
    let mut level = None;
    let mut queries = None;
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("obscurity", v)) => level = ObscurityLevel::parse(v),
            Some(("queries", v)) => queries = v.parse::<u64>().ok(),
            _ => return Err(err(1, "unknown header field")),
        }
    }
    let level = level.ok_or_else(|| err(1, "header lacks a valid obscurity level"))?;
    let mut g = QueryFragmentGraph::new(level);
    g.set_queries(queries.ok_or_else(|| err(1, "header lacks a query count"))?);
    let fragment = |ctx: &str, expr: &str, line: usize| -> Result<QueryFragment, LoadError> {
        let context = Context::parse(ctx).ok_or_else(|| err(line, "bad context"))?;
        let expression = unescape(expr).ok_or_else(|| err(line, "bad escape"))?;
        // stored expressions are already at the graph's level
        Ok(QueryFragment { expression, context, obscurity: level })
    };
    for (line, text) in lines {
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split('\t').collect();
        let count = |s: &str| s.parse::<u64>().map_err(|_| err(line, "bad count"));
        match fields.as_slice() {
            ["F", c, e, n] => g.insert_count(fragment(c, e, line)?, count(n)?),
            ["P", c1, e1, c2, e2, n] => {
                g.insert_pair_count(fragment(c1, e1, line)?, fragment(c2, e2, line)?, count(n)?)
            }
            _ => return Err(err(line, "expected an F or P record")),
        }
    }
    Ok(g)
}

pub fn write_qfg(g: &QueryFragmentGraph, path: &Path) -> Result<(), LoadError> {
    std::fs::write(path, serialize_qfg(g)).map_err(|e| LoadError::io(path, e))
}

pub fn read_qfg(path: &Path) -> Result<QueryFragmentGraph, LoadError> {
    parse_qfg(&read_to_string(path)?, path)
}
