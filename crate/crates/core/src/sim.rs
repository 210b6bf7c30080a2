//! Keyword-to-name similarity in [0, 1].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::stem::porter_stem;

/// The small score given to candidates with no supporting evidence. It is
/// also the slack of the exact-match threshold `1 - EPSILON`.
pub const EPSILON: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("vector for {token:?} has dimension {found}, expected {expected}")]
    DimensionMismatch { token: String, expected: usize, found: usize },
    #[error("no vectors given")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimilarityModel {
    /// Character-trigram Jaccard over stemmed tokens.
    Lexical,
    /// Cosine over pretrained vectors, mapped to [0, 1]. Pairs with an
    /// out-of-vocabulary token fall back to the lexical score.
    Embedding { dim: usize, vectors: BTreeMap<String, Vec<f64>> },
}

impl SimilarityModel {
    /// Builds an embedding model. A repeated token keeps its last vector.
    pub fn embedding<I>(entries: I) -> Result<Self, SimError>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut dim = None;
        let mut vectors = BTreeMap::new();
        for (token, v) in entries {
            let expected = *dim.get_or_insert(v.len());
            if v.len() != expected || expected == 0 {
                return Err(SimError::DimensionMismatch { token, expected, found: v.len() });
            }
            vectors.insert(token.to_lowercase(), v);
        }
        match dim {
            Some(dim) => Ok(SimilarityModel::Embedding { dim, vectors }),
            None => Err(SimError::Empty),
        }
    }

    /// Similarity of two single tokens.
    pub fn token_sim(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        if let SimilarityModel::Embedding { vectors, .. } = self {
            if let (Some(x), Some(y)) = (vectors.get(a), vectors.get(b)) {
                return ((cosine(x, y) + 1.0) / 2.0).clamp(0.0, 1.0);
            }
        }
        lexical_sim(a, b)
    }
}

/// Mean over keyword tokens of the best match among candidate tokens.
pub fn sim_text(m: &SimilarityModel, keyword_tokens: &[String], candidate_tokens: &[String]) -> f64 {
    if keyword_tokens.is_empty() || candidate_tokens.is_empty() {
        return 0.0;
    }
    let total: f64 = keyword_tokens
        .iter()
        .map(|k| candidate_tokens.iter().map(|c| m.token_sim(k, c)).fold(0.0, f64::max))
        .sum();
    (total / keyword_tokens.len() as f64).clamp(0.0, 1.0)
}

/// Score of a numeric predicate candidate. `EPSILON` when the predicate
/// selects nothing; otherwise the text-token similarity to the attribute
/// name, floored at `EPSILON`, or 1 for a bare number.
pub fn sim_num(
    m: &SimilarityModel,
    keyword_text_tokens: &[String],
    attribute_tokens: &[String],
    match_nonempty: bool,
) -> f64 {
    if !match_nonempty {
        return EPSILON;
    }
    if keyword_text_tokens.is_empty() {
        return 1.0;
    }
    sim_text(m, keyword_text_tokens, attribute_tokens).max(EPSILON)
}

fn cosine(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = libm::sqrt(x.iter().map(|a| a * a).sum());
    let ny = libm::sqrt(y.iter().map(|a| a * a).sum());
    if nx == 0.0 || ny == 0.0 {
        return 0.0;
    }
    (dot / (nx * ny)).clamp(-1.0, 1.0)
}

fn lexical_sim(a: &str, b: &str) -> f64 {
    let (sa, sb) = (porter_stem(a), porter_stem(b));
    if sa == sb {
        return 1.0;
    }
    let (ta, tb) = (trigrams(&sa), trigrams(&sb));
    let union = ta.union(&tb).count();
    if union == 0 {
        return 0.0;
    }
    ta.intersection(&tb).count() as f64 / union as f64
}

fn trigrams(s: &str) -> BTreeSet<[char; 3]> {
    let padded: Vec<char> = core::iter::once('#').chain(s.chars()).chain(core::iter::once('#')).collect();
    padded.windows(3).map(|w| [w[0], w[1], w[2]]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn t(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn lexical_examples() {
        let m = SimilarityModel::Lexical;
        assert!(sim_text(&m, &t("year"), &t("year")) >= 1.0 - EPSILON);
        assert_eq!(sim_text(&m, &t("qqq"), &t("zzz")), 0.0);
        assert_eq!(sim_text(&m, &t("papers"), &t("paper")), 1.0);
        // restaur: #re res est sta tau aur ur#; review: #re rev evi vie iew ew#
        let s = sim_text(&m, &t("restaurant"), &t("review"));
        assert!((s - 1.0 / 12.0).abs() < 1e-12, "{s}");
    }

    #[test]
    fn embedding_examples() {
        let m = SimilarityModel::embedding(vec![
            ("a".to_string(), vec![1.0, 0.0]),
            ("b".to_string(), vec![0.0, 1.0]),
            ("c".to_string(), vec![-1.0, 0.0]),
        ])
        .unwrap();
        assert_eq!(m.token_sim("a", "a"), 1.0);
        assert_eq!(m.token_sim("a", "b"), 0.5);
        assert_eq!(m.token_sim("a", "c"), 0.0);
        // out of vocabulary falls back to lexical
        assert_eq!(m.token_sim("a", "zzz"), 0.0);
        assert_eq!(m.token_sim("years", "year"), 1.0);
    }

    #[test]
    fn embedding_errors() {
        let bad = SimilarityModel::embedding(vec![("a".to_string(), vec![1.0]), ("b".to_string(), vec![1.0, 2.0])]);
        assert!(matches!(bad, Err(SimError::DimensionMismatch { .. })));
        assert_eq!(SimilarityModel::embedding(Vec::new()), Err(SimError::Empty));
        let dup = SimilarityModel::embedding(vec![
            ("a".to_string(), vec![1.0, 0.0]),
            ("a".to_string(), vec![0.0, 1.0]),
            ("b".to_string(), vec![0.0, 1.0]),
        ])
        .unwrap();
        assert_eq!(dup.token_sim("a", "b"), 1.0);
    }

    #[test]
    fn numeric_scores() {
        let m = SimilarityModel::Lexical;
        assert_eq!(sim_num(&m, &t("after"), &t("year"), false), EPSILON);
        assert_eq!(sim_num(&m, &t("after"), &t("year"), true), EPSILON);
        assert_eq!(sim_num(&m, &t("years"), &t("year"), true), 1.0);
        assert_eq!(sim_num(&m, &[], &t("year"), true), 1.0);
    }

    fn token() -> impl Strategy<Value = String> {
        "[a-z]{1,8}"
    }

    fn model() -> impl Strategy<Value = SimilarityModel> {
        prop_oneof![
            Just(SimilarityModel::Lexical),
            prop::collection::vec((token(), prop::collection::vec(-1.0f64..1.0, 3)), 1..6)
                .prop_map(|e| SimilarityModel::embedding(e).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn bounded_and_reflexive(
            m in model(),
            a in prop::collection::vec(token(), 1..4),
            b in prop::collection::vec(token(), 1..4),
        ) {
            let s = sim_text(&m, &a, &b);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!(sim_text(&m, &a, &a) >= 1.0 - 1e-6);
        }

        #[test]
        fn lexical_symmetric(x in token(), y in token()) {
            let m = SimilarityModel::Lexical;
            prop_assert_eq!(sim_text(&m, core::slice::from_ref(&x), core::slice::from_ref(&y)), sim_text(&m, &[y], &[x]));
        }
    }
}
