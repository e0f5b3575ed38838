//! Generative forecasting harness: given a subject and the next timestamp,
//! a system proposes a ranked list of (relation, object) pairs; scoring
//! compares that list with the facts actually recorded for the subject at
//! that timestamp using Recall@K and NDCG@K, macro-averaged over queries.
//!
//! Also provides the co-occurrence baseline: the tiered (s, r, ?) walker
//! lifted to rank whole pairs.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cooccur::CooccurrenceIndex;
use crate::types::{Dataset, EntityId, RelationId, TimeIndex};

/// A generative query: produce all knowledge involving `subject` at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GenQuery {
    pub subject: EntityId,
    pub time: TimeIndex,
}

/// A system's ranked pair predictions for one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenPrediction {
    pub query: GenQuery,
    pub ranking: Vec<(RelationId, EntityId)>,
}

impl GenPrediction {
    /// Constructs a prediction, rejecting duplicate pairs.
    pub fn new(
        query: GenQuery,
        ranking: Vec<(RelationId, EntityId)>,
    ) -> Result<Self, GenForecastError> {
        let mut seen = HashSet::new();
        for pair in &ranking {
            if !seen.insert(*pair) {
                return Err(GenForecastError::DuplicatePair {
                    subject: query.subject.0,
                    time: query.time.0,
                    relation: pair.0 .0,
                    object: pair.1 .0,
                });
            }
        }
        Ok(GenPrediction { query, ranking })
    }
}

/// The ground-truth fact set for one query. Nonempty by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenTruth {
    pub query: GenQuery,
    pub facts: BTreeSet<(RelationId, EntityId)>,
}

#[derive(Debug, Error)]
pub enum GenForecastError {
    #[error("empty truth set for query (s={subject}, t={time})")]
    EmptyTruth { subject: u32, time: u32 },
    #[error("duplicate query (s={subject}, t={time})")]
    DuplicateQuery { subject: u32, time: u32 },
    #[error("duplicate pair (r={relation}, o={object}) in prediction for (s={subject}, t={time})")]
    DuplicatePair {
        subject: u32,
        time: u32,
        relation: u32,
        object: u32,
    },
    #[error("{file}:{line}: {msg}")]
    MalformedLine {
        file: String,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-cutoff macro-averaged scores.
#[derive(Debug, Clone, PartialEq)]
pub struct GenEvalRow {
    pub k: usize,
    pub recall: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenEvalReport {
    pub rows: Vec<GenEvalRow>,
    pub n_queries: usize,
    /// Predictions whose query matched no truth; scored against nothing.
    pub n_unmatched_predictions: usize,
}

fn hits_in_top_k(
    ranking: &[(RelationId, EntityId)],
    truth: &BTreeSet<(RelationId, EntityId)>,
    k: usize,
) -> Vec<bool> {
    ranking.iter().take(k).map(|p| truth.contains(p)).collect()
}

/// Recall@K: the fraction of truth facts present in the first k ranked
/// predictions.
pub fn recall_at_k(
    pred: &GenPrediction,
    truth: &GenTruth,
    k: usize,
) -> Result<f64, GenForecastError> {
    assert!(k >= 1, "k must be positive");
    if truth.facts.is_empty() {
        return Err(GenForecastError::EmptyTruth {
            subject: truth.query.subject.0,
            time: truth.query.time.0,
        });
    }
    let hits = hits_in_top_k(&pred.ranking, &truth.facts, k)
        .iter()
        .filter(|h| **h)
        .count();
    Ok(hits as f64 / truth.facts.len() as f64)
}

/// NDCG@K with binary relevance: DCG sums 1/log2(i+1) at each hit position
/// i (1-based); the ideal DCG places all truth facts first.
pub fn ndcg_at_k(
    pred: &GenPrediction,
    truth: &GenTruth,
    k: usize,
) -> Result<f64, GenForecastError> {
    assert!(k >= 1, "k must be positive");
    if truth.facts.is_empty() {
        return Err(GenForecastError::EmptyTruth {
            subject: truth.query.subject.0,
            time: truth.query.time.0,
        });
    }
    let discount = |i: usize| 1.0 / ((i + 1) as f64).log2();
    let dcg: f64 = hits_in_top_k(&pred.ranking, &truth.facts, k)
        .iter()
        .enumerate()
        .filter(|(_, hit)| **hit)
        .map(|(idx, _)| discount(idx + 1))
        .sum();
    let ideal_len = k.min(truth.facts.len());
    let idcg: f64 = (1..=ideal_len).map(discount).sum();
    Ok(dcg / idcg)
}

/// Macro-averages Recall@K and NDCG@K over all truth queries for each k.
/// Truth queries with no prediction score against an empty ranking;
/// predictions without a truth query are only counted.
pub fn eval_generative(
    preds: &[GenPrediction],
    truths: &[GenTruth],
    ks: &[usize],
) -> Result<GenEvalReport, GenForecastError> {
    let mut by_query: BTreeMap<GenQuery, &GenPrediction> = BTreeMap::new();
    for p in preds {
        if by_query.insert(p.query, p).is_some() {
            return Err(GenForecastError::DuplicateQuery {
                subject: p.query.subject.0,
                time: p.query.time.0,
            });
        }
    }
    let mut truth_queries: HashSet<GenQuery> = HashSet::new();
    for t in truths {
        if !truth_queries.insert(t.query) {
            return Err(GenForecastError::DuplicateQuery {
                subject: t.query.subject.0,
                time: t.query.time.0,
            });
        }
    }
    let empty = GenPrediction {
        query: GenQuery {
            subject: EntityId(0),
            time: TimeIndex(0),
        },
        ranking: Vec::new(),
    };
    // Per-query scores in truth order, then a serial reduction: the sum
    // order is fixed, so thread count cannot change the result.
    let per_query: Vec<Vec<(f64, f64)>> = truths
        .par_iter()
        .map(|t| {
            let pred = by_query.get(&t.query).copied().unwrap_or(&empty);
            ks.iter()
                .map(|&k| {
                    let r = recall_at_k(pred, t, k).expect("truth nonempty");
                    let n = ndcg_at_k(pred, t, k).expect("truth nonempty");
                    (r, n)
                })
                .collect()
        })
        .collect();
    let n = truths.len();
    let rows = ks
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let (mut rs, mut ns) = (0.0, 0.0);
            for q in &per_query {
                rs += q[ki].0;
                ns += q[ki].1;
            }
            GenEvalRow {
                k,
                recall: if n == 0 { 0.0 } else { rs / n as f64 },
                ndcg: if n == 0 { 0.0 } else { ns / n as f64 },
            }
        })
        .collect();
    let n_unmatched = preds
        .iter()
        .filter(|p| !truth_queries.contains(&p.query))
        .count();
    Ok(GenEvalReport {
        rows,
        n_queries: n,
        n_unmatched_predictions: n_unmatched,
    })
}

/// Groups test timestamp facts into per-(subject, time) truth sets,
/// deduplicated, ordered by subject then time.
pub fn truths_from_dataset(d: &Dataset) -> Vec<GenTruth> {
    let mut grouped: BTreeMap<GenQuery, BTreeSet<(RelationId, EntityId)>> = BTreeMap::new();
    for f in &d.test.stamps {
        grouped
            .entry(GenQuery {
                subject: f.subject,
                time: f.time,
            })
            .or_default()
            .insert((f.relation, f.object));
    }
    grouped
        .into_iter()
        .map(|(query, facts)| GenTruth { query, facts })
        .collect()
}

/// Ranks (relation, object) pairs for a generative query by lifting the
/// three informative tiers of the entity walker to pairs:
///
/// 1. the subject's full pair history by occurrence count
/// 2. (r, o) where o is in the subject's history and r has seen o
/// 3. remaining (r, o) with o in the subject's history
///
/// Within a tier: count descending, then ascending ids. Unseen subjects
/// get an empty ranking.
pub fn generative_scoring_baseline(
    idx: &CooccurrenceIndex,
    q: GenQuery,
    k: usize,
) -> GenPrediction {
    assert!(k >= 1, "k must be positive");
    let s = q.subject;
    let mut ranking: Vec<(RelationId, EntityId)> = Vec::with_capacity(k);
    let mut chosen: HashSet<(RelationId, EntityId)> = HashSet::new();

    // Tier 1: (r, o) this subject has produced, by pair count.
    let mut pairs: Vec<(u32, u32, u32)> = Vec::new();
    for r in idx.relations_of_subject(s) {
        for (o, c) in idx.sorted_objects_for_pair(s, r) {
            pairs.push((c, r.0, o.0));
        }
    }
    pairs.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, r, o) in pairs {
        let pair = (RelationId(r), EntityId(o));
        if chosen.insert(pair) {
            ranking.push(pair);
            if ranking.len() == k {
                return GenPrediction { query: q, ranking };
            }
        }
    }

    let subject_hist = idx.sorted_objects_for_subject(s);
    let relations = idx.relations_sorted();

    // Tier 2: objects from the subject's history crossed with relations
    // that have seen them; object count dominates, ids break ties.
    for (o, _) in &subject_hist {
        for r in &relations {
            if idx.relation_object_count(*r, *o) == 0 {
                continue;
            }
            let pair = (*r, *o);
            if chosen.insert(pair) {
                ranking.push(pair);
                if ranking.len() == k {
                    return GenPrediction { query: q, ranking };
                }
            }
        }
    }

    // Tier 3: the same cross without the compatibility filter.
    for (o, _) in &subject_hist {
        for r in &relations {
            let pair = (*r, *o);
            if chosen.insert(pair) {
                ranking.push(pair);
                if ranking.len() == k {
                    return GenPrediction { query: q, ranking };
                }
            }
        }
    }

    GenPrediction { query: q, ranking }
}

#[derive(Serialize, Deserialize)]
struct PredLine {
    s: u32,
    t: u32,
    ranking: Vec<(u32, u32)>,
}

/// Reads one prediction per JSON line: `{"s":int,"t":int,"ranking":[[r,o],...]}`.
pub fn read_predictions(path: &Path) -> Result<Vec<GenPrediction>, GenForecastError> {
    let fname = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: PredLine =
            serde_json::from_str(line).map_err(|e| GenForecastError::MalformedLine {
                file: fname.clone(),
                line: i + 1,
                msg: e.to_string(),
            })?;
        let query = GenQuery {
            subject: EntityId(raw.s),
            time: TimeIndex(raw.t),
        };
        let ranking = raw
            .ranking
            .into_iter()
            .map(|(r, o)| (RelationId(r), EntityId(o)))
            .collect();
        out.push(GenPrediction::new(query, ranking)?);
    }
    Ok(out)
}

/// Writes predictions in the JSON Lines interchange format.
pub fn write_predictions(path: &Path, preds: &[GenPrediction]) -> Result<(), GenForecastError> {
    let mut buf = String::new();
    for p in preds {
        let raw = PredLine {
            s: p.query.subject.0,
            t: p.query.time.0,
            ranking: p.ranking.iter().map(|(r, o)| (r.0, o.0)).collect(),
        };
        buf.push_str(&serde_json::to_string(&raw).expect("prediction serializes"));
        buf.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(buf.as_bytes())?;
    Ok(())
}
