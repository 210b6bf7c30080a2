//! K-fold cross-validated keyword-mapping (KW) and full-query (FQ) accuracy.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::catalog::{SchemaGraph, ValueIndex};
use crate::mapper::{Candidate, KeywordTask};
use crate::qfg::{build_qfg, QfgError, QueryFragmentGraph};
use crate::sim::SimilarityModel;
use crate::sql::{extract_fragments, parse_query, ObscurityLevel, ParsedQuery, QueryFragment};
use crate::translate::{queries_equivalent, translate, TranslateOutput, TranslateParams, TIE_TOLERANCE};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{records} records cannot fill {folds} folds")]
    TooFewRecords { records: usize, folds: usize },
    #[error("at least 2 folds are needed, got {0}")]
    TooFewFolds(usize),
    #[error("record {index}: gold SQL does not parse: {reason}")]
    InvalidGold { index: usize, reason: String },
    #[error("record {index}: {tasks} keywords but {mappings} gold mappings")]
    MappingLength { index: usize, tasks: usize, mappings: usize },
    #[error(transparent)]
    Qfg(#[from] QfgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub nlq: String,
    pub tasks: Vec<KeywordTask>,
    pub gold_sql: String,
    /// Expected fragment per keyword, e.g. `publication.year > 2000`.
    /// `None` for keywords that name a relation; those are not scored.
    pub gold_mapping: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Benchmark {
    pub name: String,
    pub records: Vec<BenchmarkRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams {
    pub folds: usize,
    pub seed: u64,
    pub obscurity: ObscurityLevel,
    pub translate: TranslateParams,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams { folds: 4, seed: 0, obscurity: ObscurityLevel::NoConstOp, translate: TranslateParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordOutcome {
    pub index: usize,
    pub kw_correct: bool,
    pub fq_correct: bool,
    pub tie: bool,
    pub predicted: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Queries the trial's QFG was built from.
    pub queries_ingested: u64,
    pub outcomes: Vec<RecordOutcome>,
}

impl TrialReport {
    pub fn kw_accuracy(&self) -> f64 {
        percent(self.outcomes.iter().filter(|o| o.kw_correct).count(), self.outcomes.len())
    }

    pub fn fq_accuracy(&self) -> f64 {
        percent(self.outcomes.iter().filter(|o| o.fq_correct).count(), self.outcomes.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub benchmark: String,
    pub trials: Vec<TrialReport>,
}

impl EvalReport {
    fn outcomes(&self) -> impl Iterator<Item = &RecordOutcome> {
        self.trials.iter().flat_map(|t| &t.outcomes)
    }

    pub fn records(&self) -> usize {
        self.outcomes().count()
    }

    pub fn kw_correct(&self) -> usize {
        self.outcomes().filter(|o| o.kw_correct).count()
    }

    pub fn fq_correct(&self) -> usize {
        self.outcomes().filter(|o| o.fq_correct).count()
    }

    pub fn kw_accuracy(&self) -> f64 {
        percent(self.kw_correct(), self.records())
    }

    pub fn fq_accuracy(&self) -> f64 {
        percent(self.fq_correct(), self.records())
    }
}

fn percent(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        100.0 * n as f64 / d as f64
    }
}

/// Shuffles `0..n` with `seed` and cuts it into `folds` contiguous parts
/// whose sizes differ by at most one.
pub fn split_folds(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..folds).map(|i| order[i * n / folds..(i + 1) * n / folds].to_vec()).collect()
}

/// Whether every scored keyword of `mapping` matches its gold fragment.
fn mappings_match(candidates: &[Candidate], gold: &[Option<String>]) -> bool {
    candidates.iter().zip(gold).all(|(c, g)| {
        if matches!(c, Candidate::Relation(_)) {
            return true;
        }
        let got = c.fragment();
        g.as_ref()
            .is_some_and(|g| QueryFragment::new(g.as_str(), got.context, got.obscurity).expression == got.expression)
    })
}

/// Scores one prediction. FQ needs an untied top-1 equivalent to the gold
/// query. KW needs every non-relation keyword mapped as in gold, in every
/// translation tied for first place.
pub fn score_record(
    prediction: Option<&TranslateOutput>,
    gold: &ParsedQuery,
    gold_mapping: &[Option<String>],
) -> (bool, bool) {
    let Some((out, top)) = prediction.and_then(|o| Some((o, o.top()?))) else {
        return (false, false);
    };
    let kw = out
        .candidates
        .iter()
        .take_while(|t| top.score - t.score <= TIE_TOLERANCE)
        .all(|t| {
            let cands: Vec<Candidate> = t.configuration.mappings.iter().map(|m| m.candidate.clone()).collect();
            cands.len() == gold_mapping.len() && mappings_match(&cands, gold_mapping)
        });
    let fq = !out.tie && parse_query(&top.sql).is_ok_and(|q| queries_equivalent(&q, gold));
    (kw, fq)
}

fn training_qfg(golds: &[ParsedQuery], train: &[usize], level: ObscurityLevel) -> Result<QueryFragmentGraph, QfgError> {
    let sets: Vec<_> = train.iter().map(|&i| extract_fragments(&golds[i], level)).collect();
    build_qfg(sets.iter(), level)
}

/// Runs the cross-validation. Each trial builds its QFG from the gold SQL of
/// the training folds only and translates the held-out fold.
pub fn cross_validate(
    bench: &Benchmark,
    schema: &SchemaGraph,
    index: &ValueIndex,
    sim: &SimilarityModel,
    params: &EvalParams,
) -> Result<EvalReport, EvalError> {
    let n = bench.records.len();
    if params.folds < 2 {
        return Err(EvalError::TooFewFolds(params.folds));
    }
    if n < params.folds {
        return Err(EvalError::TooFewRecords { records: n, folds: params.folds });
    }
    let mut golds = Vec::with_capacity(n);
    for (index, r) in bench.records.iter().enumerate() {
        if r.tasks.len() != r.gold_mapping.len() {
            return Err(EvalError::MappingLength { index, tasks: r.tasks.len(), mappings: r.gold_mapping.len() });
        }
        let q = parse_query(&r.gold_sql).map_err(|e| EvalError::InvalidGold { index, reason: e.to_string() })?;
        golds.push(q);
    }
    let folds = split_folds(n, params.folds, params.seed);
    let mut trials = Vec::with_capacity(folds.len());
    for (fold, test) in folds.iter().enumerate() {
        let mut train: Vec<usize> = folds.iter().enumerate().filter(|&(f, _)| f != fold).flat_map(|(_, v)| v.clone()).collect();
        train.sort_unstable();
        let qfg = training_qfg(&golds, &train, params.obscurity)?;
        let mut outcomes = Vec::with_capacity(test.len());
        for &i in test {
            let r = &bench.records[i];
            let result = translate(schema, index, Some(&qfg), sim, &r.tasks, &params.translate);
            let (kw_correct, fq_correct) = score_record(result.as_ref().ok(), &golds[i], &r.gold_mapping);
            outcomes.push(RecordOutcome {
                index: i,
                kw_correct,
                fq_correct,
                tie: result.as_ref().is_ok_and(|o| o.tie),
                predicted: result.as_ref().ok().and_then(|o| o.top()).map(|t| t.sql.clone()),
                error: result.err().map(|e| e.to_string()),
            });
        }
        trials.push(TrialReport { fold, train, test: test.clone(), queries_ingested: qfg.queries(), outcomes });
    }
    Ok(EvalReport { benchmark: bench.name.clone(), trials })
}
