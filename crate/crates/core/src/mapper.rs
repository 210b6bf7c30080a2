//! Keyword mapping: candidate retrieval, scoring and pruning, and ranked
//! configurations that blend similarity with query-log evidence.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::catalog::{AttrRef, AttrType, KeyRole, SchemaGraph, ValueIndex};
use crate::qfg::{dice, QueryFragmentGraph};
use crate::sim::{sim_num, sim_text, SimilarityModel, EPSILON};
use crate::sql::{obscure, ColumnRef, CompareOp, Context, Literal, Predicate, Projection, QueryFragment};
use crate::stem::porter_stem;
use crate::text::{keyword_tokens, name_tokens, split_number, words};

pub const DEFAULT_KAPPA: usize = 5;
pub const DEFAULT_LAMBDA: f64 = 0.8;
pub const DEFAULT_MAX_CONFIGS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("no candidate mappings for keyword {0:?}")]
    NoCandidates(String),
    #[error("a mapping in the configuration has score 0")]
    ZeroScore,
    #[error("{count} configurations exceed the limit of {cap}")]
    CombinatorialLimit { count: usize, cap: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
}

/// The clause a keyword is meant for. `Pair` keywords yield a predicate and
/// a projection at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaskContext {
    Select,
    From,
    Where,
    Pair,
}

impl TaskContext {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "select" => Some(TaskContext::Select),
            "from" => Some(TaskContext::From),
            "where" => Some(TaskContext::Where),
            "pair" => Some(TaskContext::Pair),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskContext::Select => "select",
            TaskContext::From => "from",
            TaskContext::Where => "where",
            TaskContext::Pair => "pair",
        }
    }
}

/// A keyword with the metadata supplied by the host interface.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordTask {
    pub keyword: String,
    pub context: TaskContext,
    pub op: Option<CompareOp>,
    /// Aggregate functions, outermost first.
    pub aggregates: Vec<String>,
    pub group: bool,
}

impl KeywordTask {
    pub fn new(keyword: impl Into<String>, context: TaskContext) -> Self {
        KeywordTask { keyword: keyword.into(), context, op: None, aggregates: Vec::new(), group: false }
    }

    pub fn with_op(mut self, op: CompareOp) -> Self {
        self.op = Some(op);
        self
    }

    pub fn with_aggregates<S: Into<String>>(mut self, aggs: impl IntoIterator<Item = S>) -> Self {
        self.aggregates = aggs.into_iter().map(|a| a.into().to_lowercase()).collect();
        self
    }

    pub fn grouped(mut self) -> Self {
        self.group = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Candidate {
    Relation(String),
    Projection { projection: Projection, group: bool },
    Predicate(Predicate),
    /// A predicate plus the projection of its paired attribute.
    Pair { predicate: Predicate, companion: Projection },
}

impl Candidate {
    /// The mapped fragment at `Full` obscurity. For a pair this is the predicate.
    pub fn fragment(&self) -> QueryFragment {
        use crate::sql::ObscurityLevel::Full;
        match self {
            Candidate::Relation(r) => QueryFragment::new(r.as_str(), Context::From, Full),
            Candidate::Projection { projection, .. } => QueryFragment::new(projection.canonical(), Context::Select, Full),
            Candidate::Predicate(p) | Candidate::Pair { predicate: p, .. } => {
                QueryFragment::new(p.canonical(), Context::Where, Full)
            }
        }
    }

    pub fn companion_fragment(&self) -> Option<QueryFragment> {
        match self {
            Candidate::Pair { companion, .. } => Some(QueryFragment::new(
                companion.canonical(),
                Context::Select,
                crate::sql::ObscurityLevel::Full,
            )),
            _ => None,
        }
    }

    /// Sort key for deterministic tie-breaking.
    pub fn key(&self) -> String {
        let mut k = self.fragment().expression;
        if let Some(c) = self.companion_fragment() {
            k.push_str(" | ");
            k.push_str(&c.expression);
        }
        k
    }

    /// Attributes (or the relation) this candidate references, in order.
    pub fn references(&self) -> Vec<BagItem> {
        let col = |c: &ColumnRef| BagItem::Attribute(AttrRef::new(&c.relation, &c.attribute));
        match self {
            Candidate::Relation(r) => alloc::vec![BagItem::Relation(r.clone())],
            Candidate::Projection { projection, .. } => projection.column.iter().map(col).collect(),
            Candidate::Predicate(p) => alloc::vec![col(&p.column)],
            Candidate::Pair { predicate, companion } => {
                core::iter::once(col(&predicate.column)).chain(companion.column.iter().map(col)).collect()
            }
        }
    }
}

/// A member of the bag of known schema elements handed to join inference.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BagItem {
    Relation(String),
    Attribute(AttrRef),
}

impl BagItem {
    pub fn relation(&self) -> &str {
        match self {
            BagItem::Relation(r) => r,
            BagItem::Attribute(a) => &a.relation,
        }
    }

    /// `relation` or `relation.attribute`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.contains('.') {
            AttrRef::parse(s).map(BagItem::Attribute)
        } else if s.is_empty() {
            None
        } else {
            Some(BagItem::Relation(s.to_lowercase()))
        }
    }
}

impl core::fmt::Display for BagItem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            BagItem::Relation(r) => f.write_str(r),
            BagItem::Attribute(a) => write!(f, "{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMapping {
    pub keyword: String,
    pub candidate: Candidate,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    /// One mapping per keyword, in keyword order.
    pub mappings: Vec<CandidateMapping>,
    pub score_sigma: f64,
    pub score_qfg: f64,
    pub score_total: f64,
}

impl Configuration {
    pub fn key(&self) -> Vec<String> {
        self.mappings.iter().map(|m| m.candidate.key()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapperParams {
    pub kappa: usize,
    pub lambda: f64,
    pub max_configs: usize,
}

impl Default for MapperParams {
    fn default() -> Self {
        MapperParams { kappa: DEFAULT_KAPPA, lambda: DEFAULT_LAMBDA, max_configs: DEFAULT_MAX_CONFIGS }
    }
}

impl MapperParams {
    pub fn validate(&self) -> Result<(), MapError> {
        if self.kappa == 0 {
            return Err(MapError::InvalidParams("kappa must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(MapError::InvalidParams("lambda must lie in [0, 1]"));
        }
        Ok(())
    }
}

fn column(a: &AttrRef) -> ColumnRef {
    ColumnRef::new(&a.relation, &a.attribute)
}

fn projection(a: &AttrRef, aggregates: &[String]) -> Projection {
    Projection { column: Some(column(a)), aggregates: aggregates.to_vec(), distinct_arg: false }
}

fn companion_for(schema: &SchemaGraph, a: &AttrRef, aggregates: &[String]) -> Projection {
    let target = schema.paired_attribute(a).unwrap_or_else(|_| a.clone());
    projection(&target, aggregates)
}

fn name_stems(a: &AttrRef) -> BTreeSet<String> {
    name_tokens(&a.relation).iter().chain(&name_tokens(&a.attribute)).map(|t| porter_stem(t)).collect()
}

/// Keyword tokens left for the full-text search on `a`: tokens whose stem
/// equals a stem of the relation or attribute name are dropped, unless that
/// would drop them all.
pub fn search_tokens(tokens: &[String], a: &AttrRef) -> Vec<String> {
    let names = name_stems(a);
    let kept: Vec<String> = tokens.iter().filter(|t| !names.contains(&porter_stem(t))).cloned().collect();
    if kept.is_empty() {
        tokens.to_vec()
    } else {
        kept
    }
}

/// Candidate fragments for one keyword, each with its similarity score.
pub fn keyword_cands(
    schema: &SchemaGraph,
    index: &ValueIndex,
    sim: &SimilarityModel,
    task: &KeywordTask,
) -> Vec<CandidateMapping> {
    let tokens = keyword_tokens(&task.keyword);
    let mapping = |candidate, sigma| CandidateMapping { keyword: task.keyword.clone(), candidate, sigma };
    if let Some((number, text)) = split_number(&task.keyword) {
        let op = task.op.unwrap_or(CompareOp::Eq);
        return index
            .find_numeric_attrs(number, op)
            .into_iter()
            .map(|a| {
                let predicate = Predicate { column: column(&a), op, value: Literal::Number(number) };
                let sigma = sim_num(sim, &text, &name_tokens(&a.attribute), true);
                let candidate = if task.context == TaskContext::Pair {
                    Candidate::Pair { predicate, companion: companion_for(schema, &a, &task.aggregates) }
                } else {
                    Candidate::Predicate(predicate)
                };
                mapping(candidate, sigma)
            })
            .collect();
    }
    if tokens.is_empty() {
        return Vec::new();
    }
    match task.context {
        TaskContext::From => schema
            .relations()
            .iter()
            .map(|r| mapping(Candidate::Relation(r.name.clone()), sim_text(sim, &tokens, &name_tokens(&r.name))))
            .collect(),
        // a foreign key repeats the values of the key it references
        TaskContext::Select => schema
            .attributes()
            .filter(|(_, def)| def.key != KeyRole::Foreign)
            .map(|(a, _)| {
                let names: Vec<String> = name_tokens(&a.relation).into_iter().chain(name_tokens(&a.attribute)).collect();
                let sigma = sim_text(sim, &tokens, &names);
                let candidate =
                    Candidate::Projection { projection: projection(&a, &task.aggregates), group: task.group };
                mapping(candidate, sigma)
            })
            .collect(),
        TaskContext::Where | TaskContext::Pair => {
            let op = task.op.unwrap_or(CompareOp::Eq);
            let mut out = Vec::new();
            for (a, def) in schema.attributes() {
                if def.ty != AttrType::Text {
                    continue;
                }
                let search = search_tokens(&tokens, &a);
                for value in index.text_matches(&a, &search) {
                    let predicate =
                        Predicate { column: column(&a), op, value: Literal::Text(value.to_string()) };
                    let sigma = sim_text(sim, &search, &words(value));
                    let candidate = if task.context == TaskContext::Pair {
                        Candidate::Pair { predicate, companion: companion_for(schema, &a, &task.aggregates) }
                    } else {
                        Candidate::Predicate(predicate)
                    };
                    out.push(mapping(candidate, sigma));
                }
            }
            out
        }
    }
}

fn by_score_then_key(a: &CandidateMapping, b: &CandidateMapping) -> Ordering {
    b.sigma.total_cmp(&a.sigma).then_with(|| a.candidate.key().cmp(&b.candidate.key()))
}

/// Sorts by score and prunes: exact matches (σ ≥ 1 − ε) win outright;
/// otherwise the top κ survive plus later candidates tied with the κ-th.
/// Zero scores never survive.
pub fn score_and_prune(mut candidates: Vec<CandidateMapping>, kappa: usize) -> Vec<CandidateMapping> {
    candidates.retain(|c| c.sigma > 0.0);
    candidates.sort_by(by_score_then_key);
    if candidates.first().is_some_and(|c| c.sigma >= 1.0 - EPSILON) {
        candidates.retain(|c| c.sigma >= 1.0 - EPSILON);
        return candidates;
    }
    if candidates.len() > kappa && kappa > 0 {
        let cutoff = candidates[kappa - 1].sigma;
        let keep = kappa + candidates[kappa..].iter().take_while(|c| c.sigma == cutoff).count();
        candidates.truncate(keep);
    }
    candidates
}

/// Geometric mean of the mapping scores.
pub fn score_sigma(mappings: &[CandidateMapping]) -> Result<f64, MapError> {
    if mappings.iter().any(|m| m.sigma <= 0.0) {
        return Err(MapError::ZeroScore);
    }
    if mappings.is_empty() {
        return Ok(0.0);
    }
    let product: f64 = mappings.iter().map(|m| m.sigma).product();
    Ok(libm::pow(product, 1.0 / mappings.len() as f64))
}

/// Product of Dice coefficients over unordered pairs of non-`FROM`
/// fragments, raised to 1/|φ|. 0 when there is no such pair.
pub fn score_qfg(mappings: &[CandidateMapping], qfg: &QueryFragmentGraph) -> f64 {
    let level = qfg.obscurity();
    let frags: Vec<QueryFragment> = mappings
        .iter()
        .map(|m| m.candidate.fragment())
        .filter(|f| f.context != Context::From)
        .map(|f| obscure(&f, level))
        .collect();
    if frags.len() < 2 {
        return 0.0;
    }
    let mut product = 1.0;
    for (i, a) in frags.iter().enumerate() {
        for b in &frags[i + 1..] {
            product *= dice(qfg, a, b);
        }
    }
    libm::pow(product, 1.0 / mappings.len() as f64)
}

/// All combinations of surviving candidates, scored and ranked.
pub fn gen_and_score_configs(
    per_keyword: &[Vec<CandidateMapping>],
    qfg: Option<&QueryFragmentGraph>,
    lambda: f64,
    max_configs: usize,
) -> Result<Vec<Configuration>, MapError> {
    let mut count: usize = 1;
    for c in per_keyword {
        count = count
            .checked_mul(c.len())
            .filter(|&n| n <= max_configs)
            .ok_or(MapError::CombinatorialLimit { count: count.saturating_mul(c.len()), cap: max_configs })?;
    }
    if per_keyword.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(count);
    let mut idx = alloc::vec![0usize; per_keyword.len()];
    loop {
        let mappings: Vec<CandidateMapping> =
            idx.iter().zip(per_keyword).map(|(&i, c)| c[i].clone()).collect();
        let score_sigma = score_sigma(&mappings)?;
        let score_qfg = qfg.map_or(0.0, |g| score_qfg(&mappings, g));
        let score_total = lambda * score_sigma + (1.0 - lambda) * score_qfg;
        out.push(Configuration { mappings, score_sigma, score_qfg, score_total });
        // odometer increment, last keyword fastest
        let mut k = per_keyword.len();
        loop {
            if k == 0 {
                sort_configs(&mut out);
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < per_keyword[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn sort_configs(configs: &mut [Configuration]) {
    configs.sort_by(|a, b| b.score_total.total_cmp(&a.score_total).then_with(|| a.key().cmp(&b.key())));
}

/// Ranked configurations for a keyword list.
pub fn map_keywords(
    schema: &SchemaGraph,
    index: &ValueIndex,
    qfg: Option<&QueryFragmentGraph>,
    sim: &SimilarityModel,
    tasks: &[KeywordTask],
    params: &MapperParams,
) -> Result<Vec<Configuration>, MapError> {
    params.validate()?;
    let mut per_keyword = Vec::with_capacity(tasks.len());
    for task in tasks {
        let survivors = score_and_prune(keyword_cands(schema, index, sim, task), params.kappa);
        if survivors.is_empty() {
            return Err(MapError::NoCandidates(task.keyword.clone()));
        }
        per_keyword.push(survivors);
    }
    gen_and_score_configs(&per_keyword, qfg, params.lambda, params.max_configs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{AttributeDef, KeyRole, RelationDef};
    use crate::qfg::build_qfg;
    use crate::sql::ObscurityLevel;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn cm(key: &str, sigma: f64) -> CandidateMapping {
        CandidateMapping { keyword: "k".into(), candidate: Candidate::Relation(key.into()), sigma }
    }

    fn sigmas(v: &[CandidateMapping]) -> Vec<f64> {
        v.iter().map(|c| c.sigma).collect()
    }

    #[test]
    fn pruning_examples() {
        let kept = score_and_prune(vec![cm("a", 0.4), cm("b", 1.0), cm("c", 0.8)], 2);
        assert_eq!(sigmas(&kept), [1.0]);
        let kept = score_and_prune(vec![cm("a", 0.8), cm("b", 0.6), cm("c", 0.6), cm("d", 0.2)], 2);
        assert_eq!(sigmas(&kept), [0.8, 0.6, 0.6]);
        let kept = score_and_prune(vec![cm("a", 0.5), cm("b", 0.0), cm("c", 0.0)], 5);
        assert_eq!(sigmas(&kept), [0.5]);
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(score_sigma(&[cm("a", 0.5), cm("b", 0.5)]).unwrap(), 0.5);
        assert_eq!(score_sigma(&[cm("a", 1.0)]).unwrap(), 1.0);
        assert!((score_sigma(&[cm("a", 0.9), cm("b", 0.4)]).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(score_sigma(&[cm("a", 0.9), cm("b", 0.0)]), Err(MapError::ZeroScore));
    }

    fn sel(attr: &str) -> Candidate {
        let a = AttrRef::parse(attr).unwrap();
        Candidate::Projection { projection: projection(&a, &[]), group: false }
    }

    fn with(c: Candidate) -> CandidateMapping {
        CandidateMapping { keyword: "k".into(), candidate: c, sigma: 1.0 }
    }

    #[test]
    fn qfg_score_examples() {
        let level = ObscurityLevel::NoConstOp;
        let f = |e: &str| QueryFragment::new(e, Context::Select, level);
        let log = vec![vec![f("r.a"), f("r.b")], vec![f("r.a")], vec![f("r.b")]];
        let g = build_qfg(&log, level).unwrap();
        // Dice(a, b) = 2 / 4
        let two = [with(sel("r.a")), with(sel("r.b"))];
        assert!((score_qfg(&two, &g) - libm::sqrt(0.5)).abs() < 1e-12);
        assert_eq!(score_qfg(&[with(sel("r.a"))], &g), 0.0);
        assert_eq!(score_qfg(&[with(sel("r.a")), with(sel("r.zzz"))], &g), 0.0);
        // FROM fragments are left out of the pairs but count in |φ|
        let three = [with(sel("r.a")), with(sel("r.b")), with(Candidate::Relation("r".into()))];
        assert!((score_qfg(&three, &g) - libm::pow(0.5, 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn config_product_and_limit() {
        let per = vec![vec![cm("a", 0.9), cm("b", 0.5)], vec![cm("c", 0.9), cm("d", 0.4)]];
        let configs = gen_and_score_configs(&per, None, 1.0, 100).unwrap();
        assert_eq!(configs.len(), 4);
        assert!(configs.windows(2).all(|w| w[0].score_total >= w[1].score_total));
        assert_eq!(configs[0].key(), ["a", "c"]);
        assert!(matches!(
            gen_and_score_configs(&per, None, 1.0, 3),
            Err(MapError::CombinatorialLimit { count: 4, cap: 3 })
        ));
    }

    fn toy_schema() -> (SchemaGraph, ValueIndex) {
        use AttrType::*;
        use KeyRole::*;
        let g = SchemaGraph::new(vec![
            RelationDef::new(
                "publication",
                vec![
                    AttributeDef::new("pid", Numeric, Primary),
                    AttributeDef::new("title", Text, Plain),
                    AttributeDef::new("year", Numeric, Plain),
                ],
            ),
            RelationDef::new(
                "movie",
                vec![AttributeDef::new("mid", Numeric, Primary), AttributeDef::new("title", Text, Plain)],
            ),
        ])
        .unwrap();
        let mut idx = ValueIndex::new(&g);
        for (a, v) in [
            ("publication.pid", "1"),
            ("publication.year", "1995"),
            ("publication.year", "2005"),
            ("publication.title", "Saving Data"),
            ("movie.mid", "7"),
            ("movie.title", "Saving Private Ryan"),
        ] {
            idx.insert(&AttrRef::parse(a).unwrap(), v).unwrap();
        }
        (g, idx)
    }

    #[test]
    fn numeric_keyword_candidates() {
        let (g, idx) = toy_schema();
        let task = KeywordTask::new("after 2000", TaskContext::Where).with_op(CompareOp::Gt);
        let c = keyword_cands(&g, &idx, &SimilarityModel::Lexical, &task);
        let keys: Vec<String> = c.iter().map(|m| m.candidate.key()).collect();
        assert_eq!(keys, ["publication.year > 2000"]);
        assert_eq!(c[0].sigma, EPSILON);
    }

    #[test]
    fn relation_name_tokens_are_removed_from_search() {
        let (g, idx) = toy_schema();
        let task = KeywordTask::new("movie Saving Private Ryan", TaskContext::Where);
        let c = keyword_cands(&g, &idx, &SimilarityModel::Lexical, &task);
        let keys: Vec<String> = c.iter().map(|m| m.candidate.key()).collect();
        assert_eq!(keys, ["movie.title = 'saving private ryan'"]);
        assert!(c[0].sigma >= 1.0 - EPSILON);
    }

    #[test]
    fn pair_candidates_carry_companion() {
        let (g, idx) = toy_schema();
        let task = KeywordTask::new("saving data", TaskContext::Pair).with_aggregates(["count"]);
        let c = keyword_cands(&g, &idx, &SimilarityModel::Lexical, &task);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].candidate.key(), "publication.title = 'saving data' | count(publication.pid)");
    }

    #[test]
    fn single_exact_candidate() {
        let (g, idx) = toy_schema();
        let tasks = [KeywordTask::new("movie", TaskContext::From)];
        let configs =
            map_keywords(&g, &idx, None, &SimilarityModel::Lexical, &tasks, &MapperParams::default()).unwrap();
        assert_eq!(configs.len(), 1);
        assert!(configs[0].score_sigma >= 1.0 - EPSILON);
        let missing = [KeywordTask::new("zzz", TaskContext::Where)];
        assert_eq!(
            map_keywords(&g, &idx, None, &SimilarityModel::Lexical, &missing, &MapperParams::default()),
            Err(MapError::NoCandidates("zzz".into()))
        );
    }

    fn candidate_lists() -> impl Strategy<Value = Vec<Vec<CandidateMapping>>> {
        let score = prop_oneof![Just(0.0), Just(0.5), Just(1.0), 0.01f64..1.0];
        prop::collection::vec(prop::collection::vec(score, 1..4), 1..4).prop_map(|lists| {
            lists
                .into_iter()
                .enumerate()
                .map(|(k, l)| {
                    l.into_iter()
                        .enumerate()
                        .filter(|(_, s)| *s > 0.0)
                        .map(|(i, s)| CandidateMapping {
                            keyword: alloc::format!("k{k}"),
                            candidate: sel(&alloc::format!("r.a{k}_{i}")),
                            sigma: s,
                        })
                        .collect::<Vec<_>>()
                })
                .filter(|l: &Vec<_>| !l.is_empty())
                .collect()
        })
    }

    proptest! {
        #[test]
        fn blend_is_linear_in_lambda(lists in candidate_lists(), lambda in 0.0f64..=1.0) {
            let configs = gen_and_score_configs(&lists, None, lambda, DEFAULT_MAX_CONFIGS).unwrap();
            let expected: usize = lists.iter().map(Vec::len).product();
            prop_assert_eq!(configs.len(), if lists.is_empty() { 0 } else { expected });
            for c in &configs {
                let blended = lambda * c.score_sigma + (1.0 - lambda) * c.score_qfg;
                prop_assert!((c.score_total - blended).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&c.score_total));
            }
        }
    }
}
