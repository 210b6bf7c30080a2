//! From keyword tasks to ranked SQL: map keywords, infer a join path per
//! configuration, render, and rank.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::catalog::{SchemaGraph, ValueIndex};
use crate::join::{assign_instances, infer_joins, JoinError, JoinPath, RelationInstance, WeightMode};
use crate::mapper::{map_keywords, BagItem, Candidate, Configuration, KeywordTask, MapError, MapperParams};
use crate::qfg::QueryFragmentGraph;
use crate::sim::SimilarityModel;
use crate::sql::{
    parse_query, ColumnRef, CompareOp, ParsedQuery, Predicate, Projection, RelationRef, SqlError, RESERVED,
};

/// Scores closer than this count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TranslateError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Join(#[from] JoinError),
    #[error("configuration and join path disagree: {0}")]
    InconsistentConfig(String),
}

/// A query before rendering. Column instances index the relation's
/// occurrences in `query.relations`.
#[derive(Debug, Clone, PartialEq)]
pub struct SqlDraft {
    pub query: ParsedQuery,
    pub score: f64,
}

fn with_instance(c: &ColumnRef, instance: usize) -> ColumnRef {
    ColumnRef { instance, ..c.clone() }
}

/// Assembles the draft for one configuration and join path.
pub fn build_sql(cfg: &Configuration, path: &JoinPath) -> Result<SqlDraft, TranslateError> {
    let bag: Vec<BagItem> = cfg.mappings.iter().flat_map(|m| m.candidate.references()).collect();
    let mut instances = assign_instances(&bag).into_iter();
    let mut next = || instances.next().unwrap_or(0);
    let mut q = ParsedQuery::default();
    for m in &cfg.mappings {
        match &m.candidate {
            Candidate::Relation(_) => {
                next();
            }
            Candidate::Projection { projection, group } => {
                let mut p = projection.clone();
                if let Some(c) = &mut p.column {
                    *c = with_instance(c, next());
                    if *group {
                        q.group_by.push(c.clone());
                    }
                }
                q.projections.push(p);
            }
            Candidate::Predicate(p) => {
                let column = with_instance(&p.column, next());
                q.predicates.push(Predicate { column, ..p.clone() });
            }
            Candidate::Pair { predicate, companion } => {
                let column = with_instance(&predicate.column, next());
                q.predicates.push(Predicate { column, ..predicate.clone() });
                let mut p = companion.clone();
                if let Some(c) = &mut p.column {
                    *c = with_instance(c, next());
                }
                if p.aggregates.is_empty() {
                    q.distinct = true;
                }
                q.projections.push(p);
            }
        }
    }
    if q.projections.is_empty() {
        q.projections.push(Projection { column: None, aggregates: Vec::new(), distinct_arg: false });
    }
    let mut relations: BTreeSet<RelationInstance> = path.vertices.iter().cloned().collect();
    relations.extend(path.terminals.iter().cloned());
    let referenced = q
        .projections
        .iter()
        .filter_map(|p| p.column.as_ref())
        .chain(q.predicates.iter().map(|p| &p.column));
    for c in referenced {
        let r = RelationInstance::new(&c.relation, c.instance);
        if !relations.contains(&r) {
            return Err(TranslateError::InconsistentConfig(format!("{r} is not on the join path")));
        }
    }
    // instances must be dense per relation so the k-th FROM occurrence is instance k
    let mut dense: BTreeMap<RelationInstance, usize> = BTreeMap::new();
    let mut per_relation: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &relations {
        let n = per_relation.entry(&r.relation).or_insert(0);
        dense.insert(r.clone(), *n);
        *n += 1;
    }
    let remap = |c: &mut ColumnRef| {
        c.instance = dense[&RelationInstance::new(&c.relation, c.instance)];
    };
    q.projections.iter_mut().filter_map(|p| p.column.as_mut()).for_each(remap);
    q.predicates.iter_mut().for_each(|p| remap(&mut p.column));
    q.group_by.iter_mut().for_each(remap);
    for e in &path.edges {
        let (mut fk, mut pk) = (e.fk.clone(), e.pk.clone());
        remap(&mut fk);
        remap(&mut pk);
        q.join_conditions.push((pk, fk));
    }
    let aliases = assign_aliases(&relations.iter().cloned().collect::<Vec<_>>());
    q.relations = relations
        .iter()
        .map(|r| RelationRef { name: r.relation.clone(), alias: aliases[r].clone() })
        .collect();
    Ok(SqlDraft { query: q, score: cfg.score_total })
}

/// Initials of the underscore-separated parts, plus the instance number for
/// relations that occur more than once; clashes get a numeric suffix.
fn assign_aliases(relations: &[RelationInstance]) -> BTreeMap<RelationInstance, String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in relations {
        *counts.entry(&r.relation).or_insert(0) += 1;
    }
    let mut taken: BTreeSet<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    let mut out = BTreeMap::new();
    for r in relations {
        let mut base: String = r.relation.split('_').filter_map(|p| p.chars().next()).collect();
        if base.is_empty() {
            base = r.relation.clone();
        }
        if counts[r.relation.as_str()] > 1 {
            base = format!("{base}{}", r.instance + 1);
        }
        let mut alias = base.clone();
        let mut n = 2;
        while taken.contains(&alias) {
            alias = format!("{base}_{n}");
            n += 1;
        }
        taken.insert(alias.clone());
        out.insert(r.clone(), alias);
    }
    out
}

fn render_op(op: CompareOp) -> &'static str {
    match op {
        CompareOp::Like => "LIKE",
        other => other.as_str(),
    }
}

/// SQL text for a draft. A single-relation query is rendered without aliases.
pub fn render(q: &ParsedQuery) -> String {
    let bare = q.relations.len() == 1;
    let mut alias_of: BTreeMap<(&str, usize), &str> = BTreeMap::new();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &q.relations {
        let n = seen.entry(&r.name).or_insert(0);
        alias_of.insert((&r.name, *n), &r.alias);
        *n += 1;
    }
    let col = |c: &ColumnRef| -> String {
        if bare {
            c.attribute.clone()
        } else {
            let alias = alias_of.get(&(c.relation.as_str(), c.instance)).copied().unwrap_or(&c.relation);
            format!("{alias}.{}", c.attribute)
        }
    };
    let projections: Vec<String> = q
        .projections
        .iter()
        .map(|p| {
            let mut inner = if p.distinct_arg { String::from("DISTINCT ") } else { String::new() };
            inner.push_str(&p.column.as_ref().map_or_else(|| String::from("*"), col));
            for agg in p.aggregates.iter().rev() {
                inner = format!("{}({inner})", agg.to_uppercase());
            }
            inner
        })
        .collect();
    let mut sql = String::from("SELECT ");
    if q.distinct {
        sql.push_str("DISTINCT ");
    }
    sql.push_str(&projections.join(", "));
    sql.push_str(" FROM ");
    let relations: Vec<String> = q
        .relations
        .iter()
        .map(|r| if bare { r.name.clone() } else { format!("{} {}", r.name, r.alias) })
        .collect();
    sql.push_str(&relations.join(", "));
    let conditions: Vec<String> = q
        .predicates
        .iter()
        .map(|p| format!("{} {} {}", col(&p.column), render_op(p.op), p.value.to_sql()))
        .chain(q.join_conditions.iter().map(|(a, b)| format!("{} = {}", col(a), col(b))))
        .collect();
    if !conditions.is_empty() {
        sql.push_str(" WHERE ");
        sql.push_str(&conditions.join(" AND "));
    }
    if !q.group_by.is_empty() {
        let cols: Vec<String> = q.group_by.iter().map(col).collect();
        sql.push_str(" GROUP BY ");
        sql.push_str(&cols.join(", "));
    }
    sql
}

/// Structural comparison of two queries: `DISTINCT`, projections,
/// relations, predicates, join conditions (undirected) and `GROUP BY`, all
/// up to renaming of aliases and of instances of the same relation.
/// `ORDER BY` and `LIMIT` are ignored.
pub fn sql_equivalent(a: &str, b: &str) -> Result<bool, SqlError> {
    let (qa, qb) = (parse_query(a)?, parse_query(b)?);
    Ok(queries_equivalent(&qa, &qb))
}

pub fn queries_equivalent(a: &ParsedQuery, b: &ParsedQuery) -> bool {
    if a.distinct != b.distinct {
        return false;
    }
    let multiset = |q: &ParsedQuery| {
        let mut v: Vec<&str> = q.relations.iter().map(|r| r.name.as_str()).collect();
        v.sort_unstable();
        v.into_iter().map(String::from).collect::<Vec<_>>()
    };
    if multiset(a) != multiset(b) {
        return false;
    }
    let target = canonical_form(a, &BTreeMap::new());
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in &b.relations {
        *counts.entry(r.name.clone()).or_insert(0) += 1;
    }
    let groups: Vec<(String, usize)> = counts.into_iter().collect();
    let mut found = false;
    for_each_renaming(&groups, &mut BTreeMap::new(), &mut |renaming| {
        if !found && canonical_form(b, renaming) == target {
            found = true;
        }
    });
    found
}

type Renaming = BTreeMap<(String, usize), usize>;

fn for_each_renaming(groups: &[(String, usize)], acc: &mut Renaming, f: &mut dyn FnMut(&Renaming)) {
    let Some(((name, n), rest)) = groups.split_first() else {
        f(acc);
        return;
    };
    let mut perm: Vec<usize> = (0..*n).collect();
    loop {
        for (i, &p) in perm.iter().enumerate() {
            acc.insert((name.clone(), i), p);
        }
        for_each_renaming(rest, acc, f);
        if !next_permutation(&mut perm) {
            break;
        }
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[derive(Debug, PartialEq, Eq)]
struct CanonicalForm {
    projections: Vec<String>,
    predicates: BTreeSet<String>,
    joins: BTreeSet<(String, String)>,
    group_by: BTreeSet<String>,
}

fn canonical_form(q: &ParsedQuery, renaming: &Renaming) -> CanonicalForm {
    let col = |c: &ColumnRef| {
        let i = renaming.get(&(c.relation.clone(), c.instance)).copied().unwrap_or(c.instance);
        format!("{}#{i}.{}", c.relation, c.attribute)
    };
    let mut projections: Vec<String> = q
        .projections
        .iter()
        .map(|p| p.render_with(&p.column.as_ref().map_or_else(|| String::from("*"), col)))
        .collect();
    projections.sort();
    CanonicalForm {
        projections,
        predicates: q
            .predicates
            .iter()
            .map(|p| format!("{} {} {}", col(&p.column), p.op, p.value.canonical()))
            .collect(),
        joins: q
            .join_conditions
            .iter()
            .map(|(x, y)| {
                let (x, y) = (col(x), col(y));
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect(),
        group_by: q.group_by.iter().map(col).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslateParams {
    pub mapper: MapperParams,
    pub k_paths: usize,
    pub weights: WeightMode,
}

impl Default for TranslateParams {
    fn default() -> Self {
        TranslateParams { mapper: MapperParams::default(), k_paths: 3, weights: WeightMode::Log }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub sql: String,
    /// Configuration score times the join factor 1 / (1 + Σw).
    pub score: f64,
    pub configuration: Configuration,
    pub path: JoinPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslateOutput {
    /// Best first; each distinct SQL text once.
    pub candidates: Vec<Translation>,
    /// The two best candidates score within `TIE_TOLERANCE`.
    pub tie: bool,
}

impl TranslateOutput {
    pub fn top(&self) -> Option<&Translation> {
        self.candidates.first()
    }
}

/// How strongly a join path's weight discounts a configuration.
pub fn join_factor(path: &JoinPath) -> f64 {
    1.0 / (1.0 + path.total_weight)
}

/// Ranked SQL for a keyword list.
pub fn translate(
    schema: &SchemaGraph,
    index: &ValueIndex,
    qfg: Option<&QueryFragmentGraph>,
    sim: &SimilarityModel,
    tasks: &[KeywordTask],
    params: &TranslateParams,
) -> Result<TranslateOutput, TranslateError> {
    let configs = map_keywords(schema, index, qfg, sim, tasks, &params.mapper)?;
    let mut paths_by_bag: BTreeMap<Vec<BagItem>, Result<Vec<JoinPath>, JoinError>> = BTreeMap::new();
    let mut best: BTreeMap<String, Translation> = BTreeMap::new();
    let mut first_error = None;
    for cfg in configs {
        let bag: Vec<BagItem> = cfg.mappings.iter().flat_map(|m| m.candidate.references()).collect();
        let paths = paths_by_bag
            .entry(bag.clone())
            .or_insert_with(|| infer_joins(schema, qfg, &bag, params.weights, params.k_paths.max(1)));
        let paths = match paths {
            Ok(p) => p,
            Err(e) => {
                first_error.get_or_insert_with(|| e.clone());
                continue;
            }
        };
        for path in paths.iter() {
            let draft = build_sql(&cfg, path)?;
            let sql = render(&draft.query);
            let score = cfg.score_total * join_factor(path);
            let better = best.get(&sql).is_none_or(|t| score > t.score);
            if better {
                let t = Translation { sql: sql.clone(), score, configuration: cfg.clone(), path: path.clone() };
                best.insert(sql, t);
            }
        }
    }
    if best.is_empty() {
        if let Some(e) = first_error {
            return Err(e.into());
        }
    }
    let mut candidates: Vec<Translation> = best.into_values().collect();
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.sql.cmp(&b.sql)));
    let tie = candidates.len() >= 2 && (candidates[0].score - candidates[1].score).abs() <= TIE_TOLERANCE;
    Ok(TranslateOutput { candidates, tie })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::join::JoinEdge;
    use crate::mapper::CandidateMapping;
    use crate::sql::Literal;
    use alloc::vec;

    fn eq(a: &str, b: &str) -> bool {
        sql_equivalent(a, b).unwrap()
    }

    #[test]
    fn equivalence_examples() {
        assert!(eq(
            "SELECT p.title FROM publication p, journal j WHERE j.jid = p.jid",
            "SELECT x.title FROM journal y, publication x WHERE x.jid = y.jid"
        ));
        assert!(eq(
            "SELECT title FROM publication WHERE year > 2000 AND title = 'A'",
            "SELECT title FROM publication WHERE title = 'a' AND 2000 < year"
        ));
        assert!(!eq("SELECT DISTINCT title FROM publication", "SELECT title FROM publication"));
        assert!(!eq("SELECT count(title) FROM publication", "SELECT title FROM publication"));
        assert!(eq("SELECT title FROM publication ORDER BY title LIMIT 3", "SELECT title FROM publication"));
    }

    #[test]
    fn equivalence_up_to_instance_swap() {
        let a = "SELECT p.title FROM author a1, author a2, publication p, writes w1, writes w2 \
                 WHERE a1.name = 'John Doe' AND a2.name = 'Jane Doe' AND a1.aid = w1.aid \
                 AND a2.aid = w2.aid AND p.pid = w1.pid AND p.pid = w2.pid";
        let b = "SELECT p.title FROM author a1, author a2, publication p, writes w1, writes w2 \
                 WHERE a2.name = 'John Doe' AND a1.name = 'Jane Doe' AND a2.aid = w1.aid \
                 AND a1.aid = w2.aid AND p.pid = w1.pid AND p.pid = w2.pid";
        assert!(eq(a, b));
        let crossed = "SELECT p.title FROM author a1, author a2, publication p, writes w1, writes w2 \
                 WHERE a1.name = 'John Doe' AND a2.name = 'Jane Doe' AND a1.aid = w1.aid \
                 AND a1.aid = w2.aid AND p.pid = w1.pid AND p.pid = w2.pid";
        assert!(!eq(a, crossed));
    }

    fn mapping(c: Candidate) -> CandidateMapping {
        CandidateMapping { keyword: "k".into(), candidate: c, sigma: 1.0 }
    }

    fn config(mappings: Vec<CandidateMapping>) -> Configuration {
        Configuration { mappings, score_sigma: 1.0, score_qfg: 0.0, score_total: 1.0 }
    }

    fn projection(rel: &str, attr: &str, aggs: &[&str]) -> Projection {
        Projection {
            column: Some(ColumnRef::new(rel, attr)),
            aggregates: aggs.iter().map(|s| s.to_string()).collect(),
            distinct_arg: false,
        }
    }

    fn lone(rel: &str) -> JoinPath {
        let r = RelationInstance::new(rel, 0);
        JoinPath { vertices: vec![r.clone()], edges: vec![], terminals: vec![r], total_weight: 0.0, score: 0.0 }
    }

    #[test]
    fn single_relation_renders_bare() {
        let cfg = config(vec![
            mapping(Candidate::Projection { projection: projection("publication", "title", &[]), group: false }),
            mapping(Candidate::Predicate(Predicate {
                column: ColumnRef::new("publication", "year"),
                op: CompareOp::Gt,
                value: Literal::Number(2000.0),
            })),
        ]);
        let draft = build_sql(&cfg, &lone("publication")).unwrap();
        assert_eq!(render(&draft.query), "SELECT title FROM publication WHERE year > 2000");
        let cfg = config(vec![mapping(Candidate::Projection {
            projection: projection("publication", "year", &["count"]),
            group: true,
        })]);
        let draft = build_sql(&cfg, &lone("publication")).unwrap();
        assert_eq!(render(&draft.query), "SELECT COUNT(year) FROM publication GROUP BY year");
    }

    #[test]
    fn pair_without_aggregate_is_distinct() {
        let cfg = config(vec![mapping(Candidate::Pair {
            predicate: Predicate {
                column: ColumnRef::new("position", "name"),
                op: CompareOp::Eq,
                value: Literal::Text("Professor".into()),
            },
            companion: projection("author", "name", &[]),
        })]);
        let (a, p) = (RelationInstance::new("author", 0), RelationInstance::new("position", 0));
        let edge = JoinEdge {
            a: 1,
            b: 0,
            fk: ColumnRef::new("position", "aid"),
            pk: ColumnRef::new("author", "aid"),
            weight: 1.0,
        };
        let path = JoinPath {
            vertices: vec![a.clone(), p.clone()],
            edges: vec![edge],
            terminals: vec![a, p],
            total_weight: 1.0,
            score: 1.0,
        };
        let sql = render(&build_sql(&cfg, &path).unwrap().query);
        assert_eq!(
            sql,
            "SELECT DISTINCT a.name FROM author a, position p WHERE p.name = 'Professor' AND a.aid = p.aid"
        );
        assert!(eq(
            &sql,
            "SELECT DISTINCT author.name FROM author a, position p \
             WHERE position.name = 'Professor' AND author.aid = position.aid"
        ));
        assert!(matches!(build_sql(&cfg, &lone("author")), Err(TranslateError::InconsistentConfig(_))));
    }

    #[test]
    fn aliases() {
        let rels = [
            RelationInstance::new("author", 0),
            RelationInstance::new("author", 1),
            RelationInstance::new("publication_keyword", 0),
            RelationInstance::new("position", 0),
            RelationInstance::new("publication", 0),
            RelationInstance::new("organization_staff", 0),
        ];
        let a = assign_aliases(&rels);
        let got: Vec<&str> = rels.iter().map(|r| a[r].as_str()).collect();
        // "os" is free, "p" clashes once
        assert_eq!(got, ["a1", "a2", "pk", "p", "p_2", "os"]);
        let reserved = assign_aliases(&[RelationInstance::new("order_reason", 0), RelationInstance::new("x", 0)]);
        assert_eq!(reserved[&RelationInstance::new("order_reason", 0)], "or_2");
    }
}
