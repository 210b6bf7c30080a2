//! Schema graph with paired-attribute annotations, and the value index used
//! for candidate retrieval.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::sql::CompareOp;
use crate::stem::porter_stem;
use crate::text::words;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("relation {0} has plain attributes but no primary key")]
    MissingPrimaryKey(String),
    #[error("{0} is not a plain attribute")]
    NotPlainAttribute(String),
    #[error("unknown schema element {0}")]
    UnknownElement(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("value {value:?} of numeric attribute {attribute} is not a number")]
    BadValue { attribute: String, value: String },
}

/// A qualified `relation.attribute` name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttrRef {
    pub relation: String,
    pub attribute: String,
}

impl AttrRef {
    pub fn new(relation: impl Into<String>, attribute: impl Into<String>) -> Self {
        AttrRef { relation: relation.into(), attribute: attribute.into() }
    }

    /// Parses `relation.attribute`, lowercased.
    pub fn parse(s: &str) -> Option<Self> {
        let (r, a) = s.trim().split_once('.')?;
        if r.is_empty() || a.is_empty() || a.contains('.') {
            return None;
        }
        Some(AttrRef::new(r.to_lowercase(), a.to_lowercase()))
    }
}

impl fmt::Display for AttrRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.relation, self.attribute)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrType {
    Numeric,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyRole {
    Primary,
    Foreign,
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDef {
    pub name: String,
    pub ty: AttrType,
    pub key: KeyRole,
    /// Target primary key of a foreign key.
    pub references: Option<AttrRef>,
    /// Explicit paired attribute of a plain attribute.
    pub paired: Option<AttrRef>,
}

impl AttributeDef {
    pub fn new(name: impl Into<String>, ty: AttrType, key: KeyRole) -> Self {
        AttributeDef { name: name.into(), ty, key, references: None, paired: None }
    }

    pub fn references(mut self, target: AttrRef) -> Self {
        self.references = Some(target);
        self
    }

    pub fn paired(mut self, target: AttrRef) -> Self {
        self.paired = Some(target);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationDef {
    pub name: String,
    pub attributes: Vec<AttributeDef>,
}

impl RelationDef {
    pub fn new(name: impl Into<String>, attributes: Vec<AttributeDef>) -> Self {
        RelationDef { name: name.into(), attributes }
    }

    pub fn primary_key(&self) -> Option<&AttributeDef> {
        self.attributes.iter().find(|a| a.key == KeyRole::Primary)
    }
}

/// Relations, their attributes, FK-PK edges and paired attributes.
///
/// Relations keep declaration order; lookups go through a name index.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaGraph {
    relations: Vec<RelationDef>,
    by_name: BTreeMap<String, usize>,
    fk_edges: Vec<(AttrRef, AttrRef)>,
    paired: BTreeMap<AttrRef, AttrRef>,
}

impl SchemaGraph {
    pub fn new(relations: Vec<RelationDef>) -> Result<Self, CatalogError> {
        let mut by_name = BTreeMap::new();
        for (i, r) in relations.iter().enumerate() {
            if by_name.insert(r.name.clone(), i).is_some() {
                return Err(CatalogError::InvalidSchema(format!("duplicate relation {}", r.name)));
            }
            let mut seen = BTreeSet::new();
            for a in &r.attributes {
                if !seen.insert(a.name.as_str()) {
                    return Err(CatalogError::InvalidSchema(format!(
                        "duplicate attribute {}.{}",
                        r.name, a.name
                    )));
                }
            }
            if r.attributes.iter().filter(|a| a.key == KeyRole::Primary).count() > 1 {
                return Err(CatalogError::InvalidSchema(format!(
                    "relation {} declares more than one primary key",
                    r.name
                )));
            }
        }
        let mut g = SchemaGraph {
            relations,
            by_name,
            fk_edges: Vec::new(),
            paired: BTreeMap::new(),
        };
        let mut fk_edges = Vec::new();
        let mut paired = BTreeMap::new();
        for r in &g.relations {
            for a in &r.attributes {
                let here = AttrRef::new(&r.name, &a.name);
                match (a.key, &a.references) {
                    (KeyRole::Foreign, Some(target)) => {
                        let ok = g.attribute(target).is_some_and(|t| t.key == KeyRole::Primary);
                        if !ok {
                            return Err(CatalogError::InvalidSchema(format!(
                                "foreign key {here} must reference a primary key, not {target}"
                            )));
                        }
                        fk_edges.push((here.clone(), target.clone()));
                    }
                    (KeyRole::Foreign, None) => {
                        return Err(CatalogError::InvalidSchema(format!(
                            "foreign key {here} has no target"
                        )))
                    }
                    (_, Some(_)) => {
                        return Err(CatalogError::InvalidSchema(format!(
                            "{here} references another attribute but is not a foreign key"
                        )))
                    }
                    (_, None) => {}
                }
                if a.key != KeyRole::Plain {
                    if a.paired.is_some() {
                        return Err(CatalogError::NotPlainAttribute(here.to_string()));
                    }
                    continue;
                }
                let target = match &a.paired {
                    Some(t) if g.attribute(t).is_some() => t.clone(),
                    Some(t) => return Err(CatalogError::UnknownElement(t.to_string())),
                    None => match r.primary_key() {
                        Some(pk) => AttrRef::new(&r.name, &pk.name),
                        None => return Err(CatalogError::MissingPrimaryKey(r.name.clone())),
                    },
                };
                paired.insert(here, target);
            }
        }
        g.fk_edges = fk_edges;
        g.paired = paired;
        Ok(g)
    }

    pub fn relations(&self) -> &[RelationDef] {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&RelationDef> {
        self.by_name.get(name).map(|&i| &self.relations[i])
    }

    pub fn attribute(&self, a: &AttrRef) -> Option<&AttributeDef> {
        self.relation(&a.relation)?.attributes.iter().find(|x| x.name == a.attribute)
    }

    /// Every attribute, in declaration order.
    pub fn attributes(&self) -> impl Iterator<Item = (AttrRef, &AttributeDef)> {
        self.relations
            .iter()
            .flat_map(|r| r.attributes.iter().map(move |a| (AttrRef::new(&r.name, &a.name), a)))
    }

    /// Directed foreign-key to primary-key edges.
    pub fn fk_edges(&self) -> &[(AttrRef, AttrRef)] {
        &self.fk_edges
    }

    pub fn primary_key(&self, relation: &str) -> Option<AttrRef> {
        let pk = self.relation(relation)?.primary_key()?;
        Some(AttrRef::new(relation, &pk.name))
    }

    /// The attribute projected alongside a predicate on `a`: the annotated
    /// pairing, else the relation's primary key.
    pub fn paired_attribute(&self, a: &AttrRef) -> Result<AttrRef, CatalogError> {
        let def = self.attribute(a).ok_or_else(|| CatalogError::UnknownElement(a.to_string()))?;
        if def.key != KeyRole::Plain {
            return Err(CatalogError::NotPlainAttribute(a.to_string()));
        }
        Ok(self.paired[a].clone())
    }
}

/// Distinct values per attribute: an inverted stem index for text
/// attributes and a sorted value list for numeric ones.
#[derive(Debug, Clone, Default)]
pub struct ValueIndex {
    text: BTreeMap<AttrRef, TextColumn>,
    numeric: BTreeMap<AttrRef, Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
struct TextColumn {
    values: Vec<String>,
    ids: BTreeMap<String, usize>,
    postings: BTreeMap<String, BTreeSet<usize>>,
}

impl ValueIndex {
    /// An index with an empty column for every attribute of `schema`.
    pub fn new(schema: &SchemaGraph) -> Self {
        let mut idx = ValueIndex::default();
        for (a, def) in schema.attributes() {
            match def.ty {
                AttrType::Text => {
                    idx.text.insert(a, TextColumn::default());
                }
                AttrType::Numeric => {
                    idx.numeric.insert(a, Vec::new());
                }
            }
        }
        idx
    }

    /// Adds one raw cell. Empty cells are nulls and skipped.
    pub fn insert(&mut self, a: &AttrRef, raw: &str) -> Result<(), CatalogError> {
        let raw = raw.trim();
        if raw.is_empty() {
            return Ok(());
        }
        if let Some(col) = self.text.get_mut(a) {
            if col.ids.contains_key(raw) {
                return Ok(());
            }
            let id = col.values.len();
            col.values.push(raw.to_string());
            col.ids.insert(raw.to_string(), id);
            for w in words(raw) {
                col.postings.entry(porter_stem(&w)).or_default().insert(id);
            }
            return Ok(());
        }
        let col = self.numeric.get_mut(a).ok_or_else(|| CatalogError::UnknownElement(a.to_string()))?;
        let v: f64 = raw.parse().map_err(|_| CatalogError::BadValue {
            attribute: a.to_string(),
            value: raw.to_string(),
        })?;
        if let Err(pos) = col.binary_search_by(|x| x.total_cmp(&v)) {
            col.insert(pos, v);
        }
        Ok(())
    }

    pub fn text_attributes(&self) -> impl Iterator<Item = &AttrRef> {
        self.text.keys()
    }

    pub fn numeric_values(&self, a: &AttrRef) -> Option<&[f64]> {
        self.numeric.get(a).map(Vec::as_slice)
    }

    pub fn text_values(&self, a: &AttrRef) -> Option<&[String]> {
        self.text.get(a).map(|c| c.values.as_slice())
    }

    /// Distinct values of `a` in which every token's stem is a prefix of
    /// some word stem; values are in insertion order.
    pub fn text_matches(&self, a: &AttrRef, tokens: &[String]) -> Vec<&str> {
        let Some(col) = self.text.get(a) else { return Vec::new() };
        if tokens.is_empty() {
            return Vec::new();
        }
        let mut hits: Option<BTreeSet<usize>> = None;
        for t in tokens {
            let stem = porter_stem(&t.to_lowercase());
            let mut ids = BTreeSet::new();
            for (_, posting) in col.postings.range(stem.clone()..).take_while(|(k, _)| k.starts_with(&stem)) {
                ids.extend(posting);
            }
            let next = match hits {
                None => ids,
                Some(prev) => prev.intersection(&ids).copied().collect(),
            };
            if next.is_empty() {
                return Vec::new();
            }
            hits = Some(next);
        }
        hits.unwrap_or_default().into_iter().map(|i| col.values[i].as_str()).collect()
    }

    /// Every (text attribute, distinct value) matching all tokens.
    pub fn find_text_attrs(&self, tokens: &[String]) -> Vec<(AttrRef, String)> {
        self.text
            .keys()
            .flat_map(|a| self.text_matches(a, tokens).into_iter().map(move |v| (a.clone(), v.to_string())))
            .collect()
    }

    /// Does some value `v` of `a` satisfy `v op number`?
    pub fn numeric_match(&self, a: &AttrRef, number: f64, op: CompareOp) -> bool {
        let Some(values) = self.numeric.get(a) else { return false };
        let (Some(&lo), Some(&hi)) = (values.first(), values.last()) else { return false };
        match op {
            CompareOp::Eq => values.binary_search_by(|x| x.total_cmp(&number)).is_ok(),
            CompareOp::Ne => lo != number || hi != number,
            CompareOp::Lt => lo < number,
            CompareOp::Le => lo <= number,
            CompareOp::Gt => hi > number,
            CompareOp::Ge => hi >= number,
            CompareOp::Like => false,
        }
    }

    /// Numeric attributes with at least one value satisfying `v op number`.
    pub fn find_numeric_attrs(&self, number: f64, op: CompareOp) -> Vec<AttrRef> {
        self.numeric.keys().filter(|a| self.numeric_match(a, number, op)).cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn mas_subset() -> SchemaGraph {
        use AttrType::*;
        use KeyRole::*;
        SchemaGraph::new(vec![
            RelationDef::new(
                "author",
                vec![
                    AttributeDef::new("aid", Numeric, Primary),
                    AttributeDef::new("name", Text, Plain),
                    AttributeDef::new("oid", Numeric, Foreign).references(AttrRef::new("organization", "oid")),
                ],
            ),
            RelationDef::new(
                "organization",
                vec![AttributeDef::new("oid", Numeric, Primary), AttributeDef::new("name", Text, Plain)],
            ),
            RelationDef::new(
                "position",
                vec![
                    AttributeDef::new("aid", Numeric, Foreign).references(AttrRef::new("author", "aid")),
                    AttributeDef::new("name", Text, Plain).paired(AttrRef::new("author", "name")),
                ],
            ),
        ])
        .unwrap()
    }

    #[test]
    fn paired_attributes() {
        let g = mas_subset();
        assert_eq!(g.paired_attribute(&AttrRef::new("author", "name")).unwrap(), AttrRef::new("author", "aid"));
        assert_eq!(
            g.paired_attribute(&AttrRef::new("position", "name")).unwrap(),
            AttrRef::new("author", "name")
        );
        assert!(matches!(
            g.paired_attribute(&AttrRef::new("author", "aid")),
            Err(CatalogError::NotPlainAttribute(_))
        ));
        assert!(matches!(
            g.paired_attribute(&AttrRef::new("author", "zzz")),
            Err(CatalogError::UnknownElement(_))
        ));
    }

    #[test]
    fn fk_edges_follow_declarations() {
        let g = mas_subset();
        assert_eq!(
            g.fk_edges(),
            [
                (AttrRef::new("author", "oid"), AttrRef::new("organization", "oid")),
                (AttrRef::new("position", "aid"), AttrRef::new("author", "aid")),
            ]
        );
    }

    #[test]
    fn single_relation_without_keys_between() {
        let g = SchemaGraph::new(vec![RelationDef::new(
            "r",
            vec![AttributeDef::new("id", AttrType::Numeric, KeyRole::Primary)],
        )])
        .unwrap();
        assert!(g.fk_edges().is_empty());
    }

    #[test]
    fn schema_errors() {
        let plain_only = RelationDef::new("r", vec![AttributeDef::new("x", AttrType::Text, KeyRole::Plain)]);
        assert_eq!(SchemaGraph::new(vec![plain_only]), Err(CatalogError::MissingPrimaryKey("r".into())));
        let dangling = RelationDef::new(
            "r",
            vec![AttributeDef::new("x", AttrType::Numeric, KeyRole::Foreign).references(AttrRef::new("s", "id"))],
        );
        assert!(matches!(SchemaGraph::new(vec![dangling]), Err(CatalogError::InvalidSchema(_))));
    }

    fn index_with(values: &[(&str, &str)]) -> ValueIndex {
        let g = mas_subset();
        let mut idx = ValueIndex::new(&g);
        for (attr, v) in values {
            idx.insert(&AttrRef::parse(attr).unwrap(), v).unwrap();
        }
        idx
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn boolean_prefix_search() {
        let idx = index_with(&[
            ("organization.name", "Restaurant Business Inc"),
            ("organization.name", "Restaurant Supply"),
            ("author.name", "John Doe"),
            ("author.name", "John Doe"),
        ]);
        assert_eq!(
            idx.find_text_attrs(&toks("restaurant businesses")),
            [(AttrRef::new("organization", "name"), "Restaurant Business Inc".into())]
        );
        assert_eq!(idx.find_text_attrs(&toks("john doe")), [(AttrRef::new("author", "name"), "John Doe".into())]);
        assert!(idx.find_text_attrs(&toks("zzz")).is_empty());
        // prefix on stem: "rest" matches "restaur"
        assert_eq!(idx.find_text_attrs(&toks("rest")).len(), 2);
    }

    #[test]
    fn numeric_search() {
        let idx = index_with(&[("author.aid", "1990"), ("author.aid", "2018"), ("author.oid", "5")]);
        assert_eq!(idx.find_numeric_attrs(2000.0, CompareOp::Gt), [AttrRef::new("author", "aid")]);
        assert!(idx.find_numeric_attrs(1e9, CompareOp::Gt).is_empty());
        assert_eq!(idx.find_numeric_attrs(5.0, CompareOp::Eq), [AttrRef::new("author", "oid")]);
        assert!(matches!(
            idx.clone().insert(&AttrRef::new("author", "aid"), "abc"),
            Err(CatalogError::BadValue { .. })
        ));
    }

    const WORDS: &[&str] = &["john", "doe", "jane", "restaurants", "business", "data", "database", "systems", "x"];

    fn value_strategy() -> impl Strategy<Value = String> {
        prop::collection::vec(prop::sample::select(WORDS), 1..4).prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn text_search_equals_scan(
            values in prop::collection::vec(value_strategy(), 0..40),
            query in prop::collection::vec(prop::sample::select(WORDS), 1..3),
        ) {
            let a = AttrRef::new("author", "name");
            let mut idx = index_with(&[]);
            for v in &values {
                idx.insert(&a, v).unwrap();
            }
            let query: Vec<String> = query.iter().map(|s| s.to_string()).collect();
            let mut expected: Vec<&str> = Vec::new();
            for v in &values {
                let stems: Vec<String> = words(v).iter().map(|w| porter_stem(w)).collect();
                let all = query.iter().all(|t| {
                    let ts = porter_stem(t);
                    stems.iter().any(|s| s.starts_with(&ts))
                });
                if all && !expected.contains(&v.as_str()) {
                    expected.push(v);
                }
            }
            prop_assert_eq!(idx.text_matches(&a, &query), expected);
        }

        #[test]
        fn numeric_search_equals_scan(
            values in prop::collection::vec(-50i32..50, 0..30),
            number in -60i32..60,
            op in prop::sample::select(vec![
                CompareOp::Eq, CompareOp::Ne, CompareOp::Lt, CompareOp::Le, CompareOp::Gt, CompareOp::Ge,
            ]),
        ) {
            let a = AttrRef::new("author", "aid");
            let mut idx = index_with(&[]);
            for v in &values {
                idx.insert(&a, &v.to_string()).unwrap();
            }
            let expected = values.iter().any(|&v| op.holds(v as f64, number as f64));
            prop_assert_eq!(idx.numeric_match(&a, number as f64, op), expected);
        }
    }
}
