//! Join-path inference: Steiner trees over the relation-level join graph,
//! with default or log-derived edge weights and schema forking for
//! self-joins.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::catalog::{AttrRef, SchemaGraph};
use crate::mapper::BagItem;
use crate::qfg::{dice, QueryFragmentGraph};
use crate::sql::{ColumnRef, Context, QueryFragment};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JoinError {
    #[error("no join path connects {}", .0.join(", "))]
    Disconnected(Vec<String>),
    #[error("unknown schema element {0}")]
    UnknownElement(String),
    #[error("{0} is not an attribute vertex")]
    NotAttributeVertex(String),
    #[error("the bag of schema elements is empty")]
    EmptyBag,
    #[error("log weights need a query fragment graph")]
    MissingLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    Default,
    #[default]
    Log,
}

impl WeightMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "default" => Some(WeightMode::Default),
            "log" => Some(WeightMode::Log),
            _ => None,
        }
    }
}

/// A relation instance. Instance 0 is the relation itself; forks add 1, 2, ...
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationInstance {
    pub relation: String,
    pub instance: usize,
}

impl RelationInstance {
    pub fn new(relation: impl Into<String>, instance: usize) -> Self {
        RelationInstance { relation: relation.into(), instance }
    }
}

impl fmt::Display for RelationInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.instance == 0 {
            f.write_str(&self.relation)
        } else {
            write!(f, "{}#{}", self.relation, self.instance + 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Vertex {
    pub owner: RelationInstance,
    /// `None` for the relation vertex itself.
    pub attribute: Option<String>,
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.attribute {
            Some(a) => write!(f, "{}.{a}", self.owner),
            None => write!(f, "{}", self.owner),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKind {
    /// relation -> attribute
    Projection,
    /// foreign key -> primary key
    FkPk,
}

/// The directed vertex-level schema graph, instance aware so it can be forked.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceGraph {
    vertices: Vec<Vertex>,
    edges: Vec<(usize, usize, EdgeKind)>,
    index: BTreeMap<Vertex, usize>,
}

impl InstanceGraph {
    pub fn from_schema(schema: &SchemaGraph) -> Self {
        let mut g = InstanceGraph { vertices: Vec::new(), edges: Vec::new(), index: BTreeMap::new() };
        for r in schema.relations() {
            let owner = RelationInstance::new(&r.name, 0);
            let rv = g.add_vertex(Vertex { owner: owner.clone(), attribute: None });
            for a in &r.attributes {
                let av = g.add_vertex(Vertex { owner: owner.clone(), attribute: Some(a.name.clone()) });
                g.edges.push((rv, av, EdgeKind::Projection));
            }
        }
        for (fk, pk) in schema.fk_edges() {
            let (Some(a), Some(b)) = (g.attribute_vertex(fk, 0), g.attribute_vertex(pk, 0)) else { continue };
            g.edges.push((a, b, EdgeKind::FkPk));
        }
        g
    }

    fn add_vertex(&mut self, v: Vertex) -> usize {
        let id = self.vertices.len();
        self.index.insert(v.clone(), id);
        self.vertices.push(v);
        id
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize, EdgeKind)] {
        &self.edges
    }

    pub fn vertex_id(&self, v: &Vertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn attribute_vertex(&self, a: &AttrRef, instance: usize) -> Option<usize> {
        self.vertex_id(&Vertex {
            owner: RelationInstance::new(&a.relation, instance),
            attribute: Some(a.attribute.clone()),
        })
    }

    fn next_instance(&self, relation: &str) -> usize {
        self.vertices
            .iter()
            .filter(|v| v.owner.relation == relation)
            .map(|v| v.owner.instance + 1)
            .max()
            .unwrap_or(0)
    }

    /// Clones the subgraph around attribute vertex `v`, stopping at foreign
    /// key edges that leave the cloned region; those are re-attached to the
    /// original primary keys. Returns the id of the clone of `v`.
    pub fn fork(&mut self, v: usize) -> Result<usize, JoinError> {
        if self.vertices[v].attribute.is_none() {
            return Err(JoinError::NotAttributeVertex(self.vertices[v].to_string()));
        }
        let original_edges = self.edges.clone();
        let mut instances: BTreeMap<RelationInstance, usize> = BTreeMap::new();
        let mut clones: BTreeMap<usize, usize> = BTreeMap::new();
        let mut visited: BTreeSet<usize> = BTreeSet::new();
        let root = self.clone_vertex(v, &mut instances);
        clones.insert(v, root);
        let mut stack_old = vec![v];
        let mut stack_new = vec![root];
        while let (Some(v_old), Some(v_new)) = (stack_old.pop(), stack_new.pop()) {
            visited.insert(v_old);
            for &(a, b, kind) in &original_edges {
                let (v_conn, outgoing) = if a == v_old {
                    (b, true)
                } else if b == v_old {
                    (a, false)
                } else {
                    continue;
                };
                if visited.contains(&v_conn) {
                    continue;
                }
                if kind == EdgeKind::FkPk && outgoing {
                    self.edges.push((v_new, v_conn, kind));
                    continue;
                }
                let cloned = match clones.get(&v_conn) {
                    Some(&c) => c,
                    None => {
                        let c = self.clone_vertex(v_conn, &mut instances);
                        clones.insert(v_conn, c);
                        stack_old.push(v_conn);
                        stack_new.push(c);
                        c
                    }
                };
                self.edges.push(if outgoing { (v_new, cloned, kind) } else { (cloned, v_new, kind) });
            }
        }
        Ok(root)
    }

    fn clone_vertex(&mut self, v: usize, instances: &mut BTreeMap<RelationInstance, usize>) -> usize {
        let owner = self.vertices[v].owner.clone();
        let instance = match instances.get(&owner) {
            Some(&i) => i,
            None => {
                let i = self.next_instance(&owner.relation);
                instances.insert(owner.clone(), i);
                i
            }
        };
        let vertex = Vertex {
            owner: RelationInstance::new(owner.relation, instance),
            attribute: self.vertices[v].attribute.clone(),
        };
        self.add_vertex(vertex)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinEdge {
    pub a: usize,
    pub b: usize,
    /// Foreign-key side, with its relation instance.
    pub fk: ColumnRef,
    pub pk: ColumnRef,
    pub weight: f64,
}

impl JoinEdge {
    pub fn label(&self) -> String {
        format!("{}={}", column_label(&self.fk), column_label(&self.pk))
    }
}

fn column_label(c: &ColumnRef) -> String {
    format!("{}.{}", RelationInstance::new(&c.relation, c.instance), c.attribute)
}

/// Relation-instance vertices joined by one undirected edge per FK-PK pair.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinGraph {
    pub vertices: Vec<RelationInstance>,
    pub edges: Vec<JoinEdge>,
}

impl JoinGraph {
    pub fn from_instance_graph(
        g: &InstanceGraph,
        mode: WeightMode,
        qfg: Option<&QueryFragmentGraph>,
    ) -> Result<Self, JoinError> {
        let qfg = match mode {
            WeightMode::Default => None,
            WeightMode::Log => Some(qfg.ok_or(JoinError::MissingLog)?),
        };
        let mut ids: BTreeMap<RelationInstance, usize> = BTreeMap::new();
        let mut vertices = Vec::new();
        for v in g.vertices() {
            if v.attribute.is_none() && !ids.contains_key(&v.owner) {
                ids.insert(v.owner.clone(), vertices.len());
                vertices.push(v.owner.clone());
            }
        }
        let mut edges = Vec::new();
        for &(x, y, kind) in g.edges() {
            if kind != EdgeKind::FkPk {
                continue;
            }
            let (fv, pv) = (&g.vertices()[x], &g.vertices()[y]);
            let (a, b) = (ids[&fv.owner], ids[&pv.owner]);
            if a == b {
                continue;
            }
            let col = |v: &Vertex| ColumnRef {
                relation: v.owner.relation.clone(),
                instance: v.owner.instance,
                attribute: v.attribute.clone().unwrap_or_default(),
            };
            let weight = qfg.map_or(1.0, |q| log_weight(q, &fv.owner.relation, &pv.owner.relation));
            edges.push(JoinEdge { a, b, fk: col(fv), pk: col(pv), weight });
        }
        edges.sort_by_key(JoinEdge::label);
        Ok(JoinGraph { vertices, edges })
    }

    pub fn vertex_id(&self, r: &RelationInstance) -> Option<usize> {
        self.vertices.iter().position(|v| v == r)
    }
}

/// 1 − Dice of the two relations' `FROM` fragments.
pub fn log_weight(qfg: &QueryFragmentGraph, r1: &str, r2: &str) -> f64 {
    let level = qfg.obscurity();
    let a = QueryFragment::new(r1, Context::From, level);
    let b = QueryFragment::new(r2, Context::From, level);
    (1.0 - dice(qfg, &a, &b)).clamp(0.0, 1.0)
}

pub fn build_join_graph(
    schema: &SchemaGraph,
    mode: WeightMode,
    qfg: Option<&QueryFragmentGraph>,
) -> Result<JoinGraph, JoinError> {
    JoinGraph::from_instance_graph(&InstanceGraph::from_schema(schema), mode, qfg)
}

/// A tree of join edges spanning the terminal relation instances.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinPath {
    pub vertices: Vec<RelationInstance>,
    pub edges: Vec<JoinEdge>,
    pub terminals: Vec<RelationInstance>,
    pub total_weight: f64,
    /// Σw / |E|², 0 without edges; lower is better.
    pub score: f64,
}

impl JoinPath {
    fn from_edges(g: &JoinGraph, terminals: &[usize], mut edge_ids: Vec<usize>) -> Self {
        edge_ids.sort_by_key(|&e| g.edges[e].label());
        let edges: Vec<JoinEdge> = edge_ids.iter().map(|&e| g.edges[e].clone()).collect();
        let mut vs: BTreeSet<usize> = terminals.iter().copied().collect();
        for e in &edges {
            vs.insert(e.a);
            vs.insert(e.b);
        }
        let total_weight = edges.iter().map(|e| e.weight).sum();
        let score = score_join_path(&edges);
        JoinPath {
            vertices: vs.into_iter().map(|v| g.vertices[v].clone()).collect(),
            edges,
            terminals: terminals.iter().map(|&t| g.vertices[t].clone()).collect(),
            total_weight,
            score,
        }
    }

    /// 1 − Score_j, so that higher reads as more likely.
    pub fn likelihood(&self) -> f64 {
        1.0 - self.score
    }

    pub fn labels(&self) -> Vec<String> {
        self.edges.iter().map(JoinEdge::label).collect()
    }
}

/// Σw / |E|²; 0 for a path without edges.
pub fn score_join_path(edges: &[JoinEdge]) -> f64 {
    if edges.is_empty() {
        return 0.0;
    }
    let n = edges.len() as f64;
    edges.iter().map(|e| e.weight).sum::<f64>() / (n * n)
}

/// Single-source shortest paths; ties prefer the lower edge index.
fn dijkstra(g: &JoinGraph, source: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = g.vertices.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut via: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    dist[source] = 0.0;
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&v| !done[v] && dist[v].is_finite()).min_by(|&x, &y| dist[x].total_cmp(&dist[y]))
        else {
            break;
        };
        done[u] = true;
        for (i, e) in g.edges.iter().enumerate() {
            let v = if e.a == u {
                e.b
            } else if e.b == u {
                e.a
            } else {
                continue;
            };
            let d = dist[u] + e.weight;
            if d < dist[v] {
                dist[v] = d;
                via[v] = Some(i);
            }
        }
    }
    (dist, via)
}

fn other_end(e: &JoinEdge, v: usize) -> usize {
    if e.a == v {
        e.b
    } else {
        e.a
    }
}

/// Minimum spanning forest over the given edges (Kruskal, stable on ties).
fn mst(g: &JoinGraph, edge_ids: &[usize]) -> Vec<usize> {
    let mut ids = edge_ids.to_vec();
    ids.sort_by(|&x, &y| g.edges[x].weight.total_cmp(&g.edges[y].weight).then(x.cmp(&y)));
    let mut parent: Vec<usize> = (0..g.vertices.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut out = Vec::new();
    for e in ids {
        let (ra, rb) = (find(&mut parent, g.edges[e].a), find(&mut parent, g.edges[e].b));
        if ra != rb {
            parent[ra] = rb;
            out.push(e);
        }
    }
    out
}

/// Drops non-terminal leaves until none remain.
fn prune_leaves(g: &JoinGraph, terminals: &BTreeSet<usize>, mut edges: Vec<usize>) -> Vec<usize> {
    loop {
        let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
        for &e in &edges {
            *degree.entry(g.edges[e].a).or_insert(0) += 1;
            *degree.entry(g.edges[e].b).or_insert(0) += 1;
        }
        let before = edges.len();
        edges.retain(|&e| {
            let (a, b) = (g.edges[e].a, g.edges[e].b);
            let leaf = |v: usize| degree[&v] == 1 && !terminals.contains(&v);
            !(leaf(a) || leaf(b))
        });
        if edges.len() == before {
            return edges;
        }
    }
}

fn names(g: &JoinGraph, ids: &[usize]) -> Vec<String> {
    ids.iter().map(|&t| g.vertices[t].to_string()).collect()
}

fn kmb_edges(g: &JoinGraph, terminals: &[usize]) -> Result<Vec<usize>, JoinError> {
    let terms: Vec<usize> = terminals.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if terms.len() <= 1 {
        return Ok(Vec::new());
    }
    let runs: Vec<(Vec<f64>, Vec<Option<usize>>)> = terms.iter().map(|&t| dijkstra(g, t)).collect();
    // Prim over the metric closure of the terminals
    let k = terms.len();
    let mut in_tree = vec![false; k];
    let mut best: Vec<(f64, usize)> = vec![(f64::INFINITY, 0); k];
    in_tree[0] = true;
    for j in 1..k {
        best[j] = (runs[0].0[terms[j]], 0);
    }
    let mut closure_edges = Vec::new();
    for _ in 1..k {
        let next = (0..k)
            .filter(|&j| !in_tree[j])
            .min_by(|&x, &y| best[x].0.total_cmp(&best[y].0).then(x.cmp(&y)))
            .expect("a terminal remains outside the tree");
        if !best[next].0.is_finite() {
            return Err(JoinError::Disconnected(names(g, &terms)));
        }
        in_tree[next] = true;
        closure_edges.push((best[next].1, next));
        for j in 0..k {
            let d = runs[next].0[terms[j]];
            if !in_tree[j] && d < best[j].0 {
                best[j] = (d, next);
            }
        }
    }
    // expand closure edges into shortest paths
    let mut expanded: BTreeSet<usize> = BTreeSet::new();
    for (from, to) in closure_edges {
        let via = &runs[from].1;
        let mut v = terms[to];
        while v != terms[from] {
            let e = via[v].expect("shortest path reaches the source");
            expanded.insert(e);
            v = other_end(&g.edges[e], v);
        }
    }
    let spanning = mst(g, &expanded.into_iter().collect::<Vec<_>>());
    let term_set: BTreeSet<usize> = terms.iter().copied().collect();
    Ok(prune_leaves(g, &term_set, spanning))
}

/// KMB approximation of the minimum Steiner tree over `terminals`.
pub fn steiner_tree(g: &JoinGraph, terminals: &[usize]) -> Result<JoinPath, JoinError> {
    let edges = kmb_edges(g, terminals)?;
    Ok(JoinPath::from_edges(g, terminals, edges))
}

/// Every tree with at most `max_edges` edges that spans the terminals and
/// whose leaves are all terminals.
pub fn enumerate_trees(g: &JoinGraph, terminals: &[usize], max_edges: usize) -> Vec<Vec<usize>> {
    let terms: BTreeSet<usize> = terminals.iter().copied().collect();
    let Some(&root) = terms.iter().next() else { return Vec::new() };
    let mut out = Vec::new();
    let mut in_tree = vec![false; g.vertices.len()];
    in_tree[root] = true;
    let frontier: Vec<usize> = incident(g, root).collect();
    let mut state = Grow { g, terms: &terms, max_edges, out: &mut out, in_tree, edges: Vec::new() };
    state.record();
    state.grow(frontier, &BTreeSet::new());
    out
}

fn incident(g: &JoinGraph, v: usize) -> impl Iterator<Item = usize> + '_ {
    g.edges.iter().enumerate().filter(move |(_, e)| e.a == v || e.b == v).map(|(i, _)| i)
}

struct Grow<'a> {
    g: &'a JoinGraph,
    terms: &'a BTreeSet<usize>,
    max_edges: usize,
    out: &'a mut Vec<Vec<usize>>,
    in_tree: Vec<bool>,
    edges: Vec<usize>,
}

impl Grow<'_> {
    fn record(&mut self) {
        if !self.terms.iter().all(|&t| self.in_tree[t]) {
            return;
        }
        let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
        for &e in &self.edges {
            *degree.entry(self.g.edges[e].a).or_insert(0) += 1;
            *degree.entry(self.g.edges[e].b).or_insert(0) += 1;
        }
        if degree.iter().all(|(v, &d)| d > 1 || self.terms.contains(v)) {
            self.out.push(self.edges.clone());
        }
    }

    /// Extends the tree by one frontier edge at a time; an edge skipped at
    /// one level stays excluded below it, so each tree is produced once.
    fn grow(&mut self, frontier: Vec<usize>, excluded: &BTreeSet<usize>) {
        if self.edges.len() == self.max_edges {
            return;
        }
        let mut excluded = excluded.clone();
        for (i, &e) in frontier.iter().enumerate() {
            let edge = &self.g.edges[e];
            let new_vertex = if self.in_tree[edge.a] { edge.b } else { edge.a };
            if self.in_tree[new_vertex] {
                excluded.insert(e);
                continue;
            }
            self.in_tree[new_vertex] = true;
            self.edges.push(e);
            self.record();
            let mut next: Vec<usize> = frontier[i + 1..]
                .iter()
                .copied()
                .filter(|&f| {
                    let fe = &self.g.edges[f];
                    !(self.in_tree[fe.a] && self.in_tree[fe.b])
                })
                .collect();
            for f in incident(self.g, new_vertex) {
                let fe = &self.g.edges[f];
                let other = other_end(fe, new_vertex);
                if !self.in_tree[other] && !excluded.contains(&f) && !next.contains(&f) {
                    next.push(f);
                }
            }
            self.grow(next, &excluded);
            self.edges.pop();
            self.in_tree[new_vertex] = false;
            excluded.insert(e);
        }
    }
}

/// Replaces attributes by their relations, keeping multiplicities.
pub fn to_relation_bag(schema: &SchemaGraph, bag: &[BagItem]) -> Result<Vec<String>, JoinError> {
    bag.iter()
        .map(|item| {
            let known = match item {
                BagItem::Relation(r) => schema.relation(r).is_some(),
                BagItem::Attribute(a) => schema.attribute(a).is_some(),
            };
            if known {
                Ok(item.relation().to_string())
            } else {
                Err(JoinError::UnknownElement(item.to_string()))
            }
        })
        .collect()
}

/// Instance of each bag item: the k-th reference to an attribute goes to
/// instance k of its relation; bare relations use instance 0.
pub fn assign_instances(bag: &[BagItem]) -> Vec<usize> {
    let mut seen: BTreeMap<&AttrRef, usize> = BTreeMap::new();
    bag.iter()
        .map(|item| match item {
            BagItem::Relation(_) => 0,
            BagItem::Attribute(a) => {
                let n = seen.entry(a).or_insert(0);
                *n += 1;
                *n - 1
            }
        })
        .collect()
}

/// The forked instance graph and terminal instances for a bag.
pub fn plan_terminals(
    schema: &SchemaGraph,
    bag: &[BagItem],
) -> Result<(InstanceGraph, Vec<RelationInstance>), JoinError> {
    if bag.is_empty() {
        return Err(JoinError::EmptyBag);
    }
    to_relation_bag(schema, bag)?;
    let mut graph = InstanceGraph::from_schema(schema);
    let mut counts: BTreeMap<&AttrRef, usize> = BTreeMap::new();
    for item in bag {
        if let BagItem::Attribute(a) = item {
            *counts.entry(a).or_insert(0) += 1;
        }
    }
    // per relation, the attribute referenced most often drives the forks
    let mut widest: BTreeMap<&str, (&AttrRef, usize)> = BTreeMap::new();
    for (a, &n) in &counts {
        let e = widest.entry(a.relation.as_str()).or_insert((a, n));
        if n > e.1 {
            *e = (a, n);
        }
    }
    let mut terminals = BTreeSet::new();
    for item in bag {
        terminals.insert(RelationInstance::new(item.relation(), 0));
    }
    for (relation, (attr, d)) in widest {
        let v = graph.attribute_vertex(attr, 0).ok_or_else(|| JoinError::UnknownElement(attr.to_string()))?;
        for k in 1..d {
            graph.fork(v)?;
            terminals.insert(RelationInstance::new(relation, k));
        }
    }
    Ok((graph, terminals.into_iter().collect()))
}

/// Ranked join paths for a bag of attributes and relations.
///
/// Candidates are the KMB tree and every terminal-spanning tree with at
/// most two more edges. They rank by total weight, then by Score_j, then
/// by edge labels.
pub fn infer_joins(
    schema: &SchemaGraph,
    qfg: Option<&QueryFragmentGraph>,
    bag: &[BagItem],
    mode: WeightMode,
    k: usize,
) -> Result<Vec<JoinPath>, JoinError> {
    let (graph, terminals) = plan_terminals(schema, bag)?;
    let jg = JoinGraph::from_instance_graph(&graph, mode, qfg)?;
    let term_ids: Vec<usize> = terminals
        .iter()
        .map(|t| jg.vertex_id(t).ok_or_else(|| JoinError::UnknownElement(t.to_string())))
        .collect::<Result<_, _>>()?;
    let kmb = kmb_edges(&jg, &term_ids)?;
    let mut paths: Vec<JoinPath> = enumerate_trees(&jg, &term_ids, kmb.len() + 2)
        .into_iter()
        .map(|edges| JoinPath::from_edges(&jg, &term_ids, edges))
        .collect();
    if paths.is_empty() {
        paths.push(JoinPath::from_edges(&jg, &term_ids, kmb));
    }
    paths.sort_by(|x, y| {
        x.total_weight
            .total_cmp(&y.total_weight)
            .then(x.score.total_cmp(&y.score))
            .then_with(|| x.labels().cmp(&y.labels()))
    });
    paths.truncate(k);
    Ok(paths)
}
