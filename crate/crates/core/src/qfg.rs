//! Query Fragment Graph: per-query occurrence and co-occurrence counts.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::sql::{ObscurityLevel, QueryFragment};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QfgError {
    #[error("fragment {fragment} is at obscurity {found}, graph is at {expected}")]
    ObscurityMismatch { fragment: QueryFragment, found: ObscurityLevel, expected: ObscurityLevel },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryFragmentGraph {
    obscurity: ObscurityLevel,
    occurrences: BTreeMap<QueryFragment, u64>,
    // keys are ordered pairs (a, b) with a < b
    cooccurrences: BTreeMap<(QueryFragment, QueryFragment), u64>,
    queries: u64,
}

impl QueryFragmentGraph {
    pub fn new(obscurity: ObscurityLevel) -> Self {
        QueryFragmentGraph { obscurity, ..Default::default() }
    }

    pub fn obscurity(&self) -> ObscurityLevel {
        self.obscurity
    }

    /// Number of queries ingested so far.
    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn occurrences(&self) -> &BTreeMap<QueryFragment, u64> {
        &self.occurrences
    }

    pub fn cooccurrences(&self) -> &BTreeMap<(QueryFragment, QueryFragment), u64> {
        &self.cooccurrences
    }

    /// n_v
    pub fn count(&self, f: &QueryFragment) -> u64 {
        self.occurrences.get(f).copied().unwrap_or(0)
    }

    /// n_e; symmetric, and n_v for a self-pair.
    pub fn pair_count(&self, a: &QueryFragment, b: &QueryFragment) -> u64 {
        match a.cmp(b) {
            core::cmp::Ordering::Equal => self.count(a),
            core::cmp::Ordering::Less => self.pair_lookup(a, b),
            core::cmp::Ordering::Greater => self.pair_lookup(b, a),
        }
    }

    fn pair_lookup(&self, a: &QueryFragment, b: &QueryFragment) -> u64 {
        self.cooccurrences.get(&(a.clone(), b.clone())).copied().unwrap_or(0)
    }

    /// Adds one query's fragments. Duplicates collapse.
    pub fn add_query<'a, I>(&mut self, fragments: I) -> Result<(), QfgError>
    where
        I: IntoIterator<Item = &'a QueryFragment>,
    {
        let set: BTreeSet<&QueryFragment> = fragments.into_iter().collect();
        if let Some(bad) = set.iter().find(|f| f.obscurity != self.obscurity) {
            return Err(QfgError::ObscurityMismatch {
                fragment: (*bad).clone(),
                found: bad.obscurity,
                expected: self.obscurity,
            });
        }
        let items: Vec<&QueryFragment> = set.into_iter().collect();
        for (i, a) in items.iter().enumerate() {
            *self.occurrences.entry((*a).clone()).or_insert(0) += 1;
            for b in &items[i + 1..] {
                *self.cooccurrences.entry(((*a).clone(), (*b).clone())).or_insert(0) += 1;
            }
        }
        self.queries += 1;
        Ok(())
    }

    /// Inserts raw counts, as read back from a saved graph.
    pub fn insert_count(&mut self, f: QueryFragment, n: u64) {
        self.occurrences.insert(f, n);
    }

    pub fn insert_pair_count(&mut self, a: QueryFragment, b: QueryFragment, n: u64) {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.cooccurrences.insert(key, n);
    }

    pub fn set_queries(&mut self, n: u64) {
        self.queries = n;
    }
}

pub fn build_qfg<'a, L, Q>(queries: L, level: ObscurityLevel) -> Result<QueryFragmentGraph, QfgError>
where
    L: IntoIterator<Item = Q>,
    Q: IntoIterator<Item = &'a QueryFragment>,
{
    merge_log(QueryFragmentGraph::new(level), queries)
}

pub fn merge_log<'a, L, Q>(mut g: QueryFragmentGraph, more: L) -> Result<QueryFragmentGraph, QfgError>
where
    L: IntoIterator<Item = Q>,
    Q: IntoIterator<Item = &'a QueryFragment>,
{
    for q in more {
        g.add_query(q)?;
    }
    Ok(g)
}

/// Dice coefficient 2·n_e / (n_v1 + n_v2); 0 when both counts are 0.
pub fn dice(g: &QueryFragmentGraph, a: &QueryFragment, b: &QueryFragment) -> f64 {
    let denom = g.count(a) + g.count(b);
    if denom == 0 {
        return 0.0;
    }
    2.0 * g.pair_count(a, b) as f64 / denom as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::Context;
    use alloc::vec;
    use proptest::prelude::*;

    const L: ObscurityLevel = ObscurityLevel::NoConstOp;

    fn f(name: &str) -> QueryFragment {
        QueryFragment::new(name, Context::Select, L)
    }

    #[test]
    fn two_query_counts() {
        let (a, b, c) = (f("a"), f("b"), f("c"));
        let g = build_qfg(&[vec![a.clone(), b.clone()], vec![a.clone(), c.clone()]], L).unwrap();
        assert_eq!(g.count(&a), 2);
        assert_eq!(g.count(&b), 1);
        assert_eq!(g.count(&c), 1);
        assert_eq!(g.pair_count(&a, &b), 1);
        assert_eq!(g.pair_count(&c, &a), 1);
        assert_eq!(g.pair_count(&b, &c), 0);
        assert!(!g.cooccurrences().contains_key(&(b.clone(), c.clone())));
    }

    #[test]
    fn empty_and_singleton_logs() {
        let g = build_qfg(Vec::<Vec<QueryFragment>>::new().iter(), L).unwrap();
        assert!(g.occurrences().is_empty() && g.cooccurrences().is_empty());
        let g = build_qfg(&[vec![f("a")]], L).unwrap();
        assert_eq!(g.count(&f("a")), 1);
        assert!(g.cooccurrences().is_empty());
    }

    #[test]
    fn dice_examples() {
        let (a, b) = (f("a"), f("b"));
        let g = build_qfg(&[vec![a.clone(), b.clone()], vec![a.clone()], vec![a.clone()]], L).unwrap();
        assert_eq!(dice(&g, &a, &b), 0.5);
        assert_eq!(dice(&g, &a, &a), 1.0);
        assert_eq!(dice(&g, &f("x"), &f("x")), 0.0);
        assert_eq!(dice(&g, &b, &f("x")), 0.0);
    }

    #[test]
    fn duplicates_within_a_query_count_once() {
        let g = build_qfg(&[vec![f("a"), f("a"), f("b")]], L).unwrap();
        assert_eq!(g.count(&f("a")), 1);
        assert_eq!(g.pair_count(&f("a"), &f("b")), 1);
    }

    #[test]
    fn mismatched_level_rejected() {
        let full = QueryFragment::new("a", Context::Select, ObscurityLevel::Full);
        assert!(matches!(build_qfg(&[vec![full]], L), Err(QfgError::ObscurityMismatch { .. })));
    }

    #[test]
    fn merge_is_additive() {
        let g = merge_log(build_qfg(&[vec![f("a")]], L).unwrap(), &[vec![f("a")]]).unwrap();
        assert_eq!(g.count(&f("a")), 2);
        let g0 = build_qfg(&[vec![f("a"), f("b")]], L).unwrap();
        assert_eq!(merge_log(g0.clone(), Vec::<Vec<QueryFragment>>::new().iter()).unwrap(), g0);
    }

    fn log_strategy() -> impl Strategy<Value = Vec<Vec<u8>>> {
        prop::collection::vec(prop::collection::vec(0u8..10, 0..6), 0..30)
    }

    fn to_frags(log: &[Vec<u8>]) -> Vec<Vec<QueryFragment>> {
        log.iter()
            .map(|q| q.iter().map(|i| f(&alloc::format!("f{i}"))).collect())
            .collect()
    }

    proptest! {
        #[test]
        fn merge_equals_build_of_concatenation(a in log_strategy(), b in log_strategy()) {
            let (fa, fb) = (to_frags(&a), to_frags(&b));
            let merged = merge_log(build_qfg(&fa, L).unwrap(), &fb).unwrap();
            let all: Vec<_> = fa.iter().chain(&fb).cloned().collect();
            prop_assert_eq!(merged, build_qfg(&all, L).unwrap());
        }

        #[test]
        fn pair_counts_bounded_and_dice_symmetric(log in log_strategy()) {
            let g = build_qfg(&to_frags(&log), L).unwrap();
            for ((x, y), n) in g.cooccurrences() {
                prop_assert!(*n <= g.count(x).min(g.count(y)));
                let d = dice(&g, x, y);
                prop_assert!((0.0..=1.0).contains(&d));
                prop_assert_eq!(d, dice(&g, y, x));
            }
        }
    }
}
