//! SQL subset parsing and query-fragment extraction.
//!
//! A query is broken into fragments: one per projection (`SELECT`), one per
//! relation (`FROM`) and one per non-join predicate (`WHERE`). Predicates
//! comparing two columns are join conditions and never become fragments.
//! Fragments can be obscured by replacing literals with `?val` and
//! comparison operators with `?op`.

mod lexer;
mod parser;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

pub use parser::{parse_query, RESERVED};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SqlError {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unsupported query: {0}")]
    Unsupported(String),
}

/// Clause a fragment lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Context {
    Select,
    From,
    Where,
}

impl Context {
    pub fn as_str(self) -> &'static str {
        match self {
            Context::Select => "SELECT",
            Context::From => "FROM",
            Context::Where => "WHERE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SELECT" => Some(Context::Select),
            "FROM" => Some(Context::From),
            "WHERE" => Some(Context::Where),
            _ => None,
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CompareOp {
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
    Ne,
    Like,
}

impl CompareOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
            CompareOp::Le => "<=",
            CompareOp::Ge => ">=",
            CompareOp::Ne => "<>",
            CompareOp::Like => "like",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "=" | "==" => CompareOp::Eq,
            "<" => CompareOp::Lt,
            ">" => CompareOp::Gt,
            "<=" => CompareOp::Le,
            ">=" => CompareOp::Ge,
            "<>" | "!=" => CompareOp::Ne,
            "like" => CompareOp::Like,
            _ => return None,
        })
    }

    /// The operator with its operands swapped: `a < b` iff `b > a`.
    pub fn flipped(self) -> Self {
        match self {
            CompareOp::Lt => CompareOp::Gt,
            CompareOp::Gt => CompareOp::Lt,
            CompareOp::Le => CompareOp::Ge,
            CompareOp::Ge => CompareOp::Le,
            other => other,
        }
    }

    /// Evaluates `lhs op rhs` for numbers. `LIKE` never holds on numbers.
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CompareOp::Eq => lhs == rhs,
            CompareOp::Lt => lhs < rhs,
            CompareOp::Gt => lhs > rhs,
            CompareOp::Le => lhs <= rhs,
            CompareOp::Ge => lhs >= rhs,
            CompareOp::Ne => lhs != rhs,
            CompareOp::Like => false,
        }
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Text(String),
    Number(f64),
}

impl Literal {
    /// SQL rendering: single-quoted text, bare numbers.
    pub fn to_sql(&self) -> String {
        match self {
            Literal::Text(t) => format!("'{}'", t.replace('\'', "''")),
            Literal::Number(n) => format!("{n}"),
        }
    }

    /// Rendering used in fragment expressions and comparisons.
    pub fn canonical(&self) -> String {
        self.to_sql().to_lowercase()
    }
}

/// A column resolved through the alias table.
///
/// `instance` counts earlier occurrences of the same relation in the `FROM`
/// list, so self-joins keep their instances apart.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColumnRef {
    pub relation: String,
    pub instance: usize,
    pub attribute: String,
}

impl ColumnRef {
    pub fn new(relation: impl Into<String>, attribute: impl Into<String>) -> Self {
        ColumnRef { relation: relation.into(), instance: 0, attribute: attribute.into() }
    }

    pub fn qualified(&self) -> String {
        format!("{}.{}", self.relation, self.attribute)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Projection {
    /// `None` stands for `*`.
    pub column: Option<ColumnRef>,
    /// Aggregate functions, outermost first: `max(count(x))` is `["max", "count"]`.
    pub aggregates: Vec<String>,
    /// `count(distinct x)`
    pub distinct_arg: bool,
}

impl Projection {
    pub fn column(column: ColumnRef) -> Self {
        Projection { column: Some(column), aggregates: Vec::new(), distinct_arg: false }
    }

    /// Renders with `name` standing in for the column.
    pub fn render_with(&self, name: &str) -> String {
        let mut inner = String::new();
        if self.distinct_arg {
            inner.push_str("distinct ");
        }
        inner.push_str(name);
        for agg in self.aggregates.iter().rev() {
            inner = format!("{agg}({inner})");
        }
        inner
    }

    pub fn canonical(&self) -> String {
        let name = self.column.as_ref().map_or_else(|| String::from("*"), ColumnRef::qualified);
        self.render_with(&name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub column: ColumnRef,
    pub op: CompareOp,
    pub value: Literal,
}

impl Predicate {
    pub fn canonical(&self) -> String {
        format!("{} {} {}", self.column.qualified(), self.op, self.value.canonical())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationRef {
    pub name: String,
    pub alias: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedQuery {
    pub distinct: bool,
    pub projections: Vec<Projection>,
    pub relations: Vec<RelationRef>,
    pub predicates: Vec<Predicate>,
    pub join_conditions: Vec<(ColumnRef, ColumnRef)>,
    pub group_by: Vec<ColumnRef>,
    pub order_by: Vec<ColumnRef>,
    pub limit: Option<u64>,
}

/// How much literal detail a fragment keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum ObscurityLevel {
    Full,
    NoConst,
    #[default]
    NoConstOp,
}

impl ObscurityLevel {
    pub const ALL: [ObscurityLevel; 3] =
        [ObscurityLevel::Full, ObscurityLevel::NoConst, ObscurityLevel::NoConstOp];

    pub fn as_str(self) -> &'static str {
        match self {
            ObscurityLevel::Full => "full",
            ObscurityLevel::NoConst => "noconst",
            ObscurityLevel::NoConstOp => "noconstop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Some(ObscurityLevel::Full),
            "noconst" => Some(ObscurityLevel::NoConst),
            "noconstop" => Some(ObscurityLevel::NoConstOp),
            _ => None,
        }
    }
}

impl fmt::Display for ObscurityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const VALUE_PLACEHOLDER: &str = "?val";
pub const OP_PLACEHOLDER: &str = "?op";

/// An (expression, context) pair at a given obscurity level.
///
/// Ordering is by expression first so that sorted collections of fragments
/// double as the lexicographic tie-break used throughout ranking.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QueryFragment {
    pub expression: String,
    pub context: Context,
    pub obscurity: ObscurityLevel,
}

impl QueryFragment {
    pub fn new(expression: impl Into<String>, context: Context, obscurity: ObscurityLevel) -> Self {
        QueryFragment { expression: canonicalize(&expression.into()), context, obscurity }
    }

    /// A fragment at `Full` obscurity, then obscured to `level`.
    pub fn at(expression: impl Into<String>, context: Context, level: ObscurityLevel) -> Self {
        obscure(&QueryFragment::new(expression, context, ObscurityLevel::Full), level)
    }
}

impl fmt::Display for QueryFragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.expression, self.context)
    }
}

/// Lowercases and collapses whitespace outside quoted literals.
fn canonicalize(expr: &str) -> String {
    let mut out = String::with_capacity(expr.len());
    let mut in_quote = false;
    let mut pending_space = false;
    for c in expr.chars() {
        if in_quote {
            out.extend(c.to_lowercase());
            if c == '\'' {
                in_quote = false;
            }
            continue;
        }
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        if c == '\'' {
            in_quote = true;
        }
        out.extend(c.to_lowercase());
    }
    out
}

/// Replaces literals (`NoConst`) and additionally operators (`NoConstOp`)
/// with placeholders. `SELECT` and `FROM` fragments are never changed, and a
/// fragment already more obscure than `level` is returned as is.
pub fn obscure(f: &QueryFragment, level: ObscurityLevel) -> QueryFragment {
    if level <= f.obscurity {
        return f.clone();
    }
    if f.context != Context::Where {
        return QueryFragment { obscurity: level, ..f.clone() };
    }
    // canonical predicates are "<column> <op> <literal>"
    let mut parts = f.expression.splitn(3, ' ');
    let (Some(column), Some(op), Some(_)) = (parts.next(), parts.next(), parts.next()) else {
        return QueryFragment { obscurity: level, ..f.clone() };
    };
    let op = if level == ObscurityLevel::NoConstOp { OP_PLACEHOLDER } else { op };
    QueryFragment {
        expression: format!("{column} {op} {VALUE_PLACEHOLDER}"),
        context: Context::Where,
        obscurity: level,
    }
}

/// Fragments of a parsed query at the requested obscurity level.
pub fn extract_fragments(q: &ParsedQuery, level: ObscurityLevel) -> BTreeSet<QueryFragment> {
    let projections = q.projections.iter().map(|p| (p.canonical(), Context::Select));
    let relations = q.relations.iter().map(|r| (r.name.clone(), Context::From));
    let predicates = q.predicates.iter().map(|p| (p.canonical(), Context::Where));
    projections
        .chain(relations)
        .chain(predicates)
        .map(|(expr, ctx)| QueryFragment::at(expr, ctx, level))
        .collect()
}

/// Splits a log into statements on `;`, dropping `--` comment lines.
pub fn split_statements(log: &str) -> Vec<String> {
    let mut cleaned = String::with_capacity(log.len());
    for line in log.lines() {
        if line.trim_start().starts_with("--") {
            continue;
        }
        cleaned.push_str(line);
        cleaned.push('\n');
    }
    let mut out = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    for c in cleaned.chars() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '\'' || c == '"' => quote = Some(c),
            None if c == ';' => {
                let stmt = current.trim();
                if !stmt.is_empty() {
                    out.push(stmt.to_string());
                }
                current.clear();
                continue;
            }
            None => {}
        }
        current.push(c);
    }
    let stmt = current.trim();
    if !stmt.is_empty() {
        out.push(stmt.to_string());
    }
    out
}
