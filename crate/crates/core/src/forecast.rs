//! Frequency-tiered candidate ranking for (subject, relation, ?) queries
//! and its Hits@K evaluation.
//!
//! The ranker is deliberately time-blind: it answers from co-occurrence
//! counts alone, which makes it a floor that any temporal model should
//! clear. Candidates fill in four tiers, each exhausted before the next:
//!
//! 1. objects seen with this exact (subject, relation) pair
//! 2. objects from the subject's history that the relation has also seen
//! 3. the rest of the subject's history
//! 4. objects from the relation's history
//!
//! Every tier is ordered by occurrence count descending, entity id
//! ascending on ties; duplicates never re-enter; filling stops at k.

use std::collections::HashSet;

use rayon::prelude::*;
use thiserror::Error;

use crate::cooccur::CooccurrenceIndex;
use crate::types::{EntityId, RelationId, TimestampFact};

/// Which tier produced a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tier {
    /// Object co-occurred with the exact (subject, relation) pair.
    PairHistory,
    /// Object from the subject's history, also seen with the relation.
    SubjectFilteredByRelation,
    /// Object from the subject's history, regardless of relation.
    SubjectHistory,
    /// Object from the relation's history, regardless of subject.
    RelationHistory,
}

impl Tier {
    /// Stable numeric code for reports: 1–4 in fill order.
    pub fn code(self) -> u8 {
        match self {
            Tier::PairHistory => 1,
            Tier::SubjectFilteredByRelation => 2,
            Tier::SubjectHistory => 3,
            Tier::RelationHistory => 4,
        }
    }
}

/// An ordered, duplicate-free candidate list of length ≤ k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateList {
    pub entities: Vec<EntityId>,
    pub k: usize,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty test set")]
    EmptyTestSet,
}

struct Collector {
    out: Vec<(EntityId, Tier)>,
    chosen: HashSet<EntityId>,
    k: usize,
}

impl Collector {
    fn new(k: usize) -> Self {
        Collector {
            out: Vec::with_capacity(k),
            chosen: HashSet::new(),
            k,
        }
    }

    /// Returns true when the list is full.
    fn add(&mut self, o: EntityId, tier: Tier) -> bool {
        if self.chosen.insert(o) {
            self.out.push((o, tier));
        }
        self.out.len() == self.k
    }
}

/// Ranks up to k candidate objects for the query (s, r, ?), tagging each
/// with the tier that produced it. Unseen subjects and relations simply
/// contribute empty tiers; the result may be shorter than k.
pub fn score_query_explain(
    idx: &CooccurrenceIndex,
    s: EntityId,
    r: RelationId,
    k: usize,
) -> Vec<(EntityId, Tier)> {
    assert!(k >= 1, "k must be positive");
    let mut c = Collector::new(k);
    for (o, _) in idx.sorted_objects_for_pair(s, r) {
        if c.add(o, Tier::PairHistory) {
            return c.out;
        }
    }
    let subject_hist = idx.sorted_objects_for_subject(s);
    for (o, _) in &subject_hist {
        if idx.relation_object_count(r, *o) > 0 && c.add(*o, Tier::SubjectFilteredByRelation) {
            return c.out;
        }
    }
    for (o, _) in &subject_hist {
        if c.add(*o, Tier::SubjectHistory) {
            return c.out;
        }
    }
    for (o, _) in idx.sorted_objects_for_relation(r) {
        if c.add(o, Tier::RelationHistory) {
            return c.out;
        }
    }
    c.out
}

/// Ranks up to k candidate objects for the query (s, r, ?).
pub fn score_query(idx: &CooccurrenceIndex, s: EntityId, r: RelationId, k: usize) -> CandidateList {
    let entities = score_query_explain(idx, s, r, k)
        .into_iter()
        .map(|(o, _)| o)
        .collect();
    CandidateList { entities, k }
}

/// Hits@K in the raw setting: the fraction of test facts whose object
/// appears among the top-k candidates for (subject, relation, ?).
pub fn eval_hits_at_k(
    idx: &CooccurrenceIndex,
    test: &[TimestampFact],
    k: usize,
) -> Result<f64, EvalError> {
    Ok(eval_hits_at_ks(idx, test, &[k])?[0].1)
}

/// Hits@K for several cutoffs in one pass. Candidate lists are computed
/// once at the largest cutoff; the greedy fill makes every shorter list a
/// prefix of the longer one, so prefix checks are exact.
pub fn eval_hits_at_ks(
    idx: &CooccurrenceIndex,
    test: &[TimestampFact],
    ks: &[usize],
) -> Result<Vec<(usize, f64)>, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let k_max = ks.iter().copied().max().unwrap_or(1).max(1);
    let positions: Vec<Option<usize>> = test
        .par_iter()
        .map(|f| {
            score_query(idx, f.subject, f.relation, k_max)
                .entities
                .iter()
                .position(|o| *o == f.object)
        })
        .collect();
    let n = test.len() as f64;
    Ok(ks
        .iter()
        .map(|&k| {
            let hits = positions
                .iter()
                .filter(|p| matches!(p, Some(pos) if *pos < k))
                .count();
            (k, hits as f64 / n)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TimeIndex;
    use proptest::prelude::*;
    use std::cmp::Reverse;
    use std::collections::BTreeMap;

    fn fact(s: u32, r: u32, o: u32, t: u32) -> TimestampFact {
        TimestampFact {
            subject: EntityId(s),
            relation: RelationId(r),
            object: EntityId(o),
            time: TimeIndex(t),
        }
    }

    fn ids(list: &CandidateList) -> Vec<u32> {
        list.entities.iter().map(|e| e.0).collect()
    }

    /// Independent reimplementation of the four-tier walk, straight from
    /// fact triples with no shared index code.
    fn brute_force(facts: &[TimestampFact], s: u32, r: u32, k: usize) -> Vec<u32> {
        let mut er: BTreeMap<u32, u64> = BTreeMap::new();
        let mut e: BTreeMap<u32, u64> = BTreeMap::new();
        let mut rm: BTreeMap<u32, u64> = BTreeMap::new();
        for f in facts {
            if f.subject.0 == s && f.relation.0 == r {
                *er.entry(f.object.0).or_insert(0) += 1;
            }
            if f.subject.0 == s {
                *e.entry(f.object.0).or_insert(0) += 1;
            }
            if f.relation.0 == r {
                *rm.entry(f.object.0).or_insert(0) += 1;
            }
        }
        let sorted = |m: &BTreeMap<u32, u64>| -> Vec<u32> {
            let mut v: Vec<(u32, u64)> = m.iter().map(|(o, c)| (*o, *c)).collect();
            v.sort_by_key(|&(o, c)| (Reverse(c), o));
            v.into_iter().map(|(o, _)| o).collect()
        };
        let (er_s, e_s, r_s) = (sorted(&er), sorted(&e), sorted(&rm));
        let mut out: Vec<u32> = Vec::new();
        let push = |out: &mut Vec<u32>, o: u32| {
            if !out.contains(&o) {
                out.push(o);
            }
            out.len() == k
        };
        for &o in &er_s {
            if push(&mut out, o) {
                return out;
            }
        }
        for &o in &e_s {
            if rm.contains_key(&o) && push(&mut out, o) {
                return out;
            }
        }
        for &o in &e_s {
            if push(&mut out, o) {
                return out;
            }
        }
        for &o in &r_s {
            if push(&mut out, o) {
                return out;
            }
        }
        out
    }

    #[test]
    fn pair_history_ranks_by_count_then_id() {
        // (a,p,b) twice, (a,p,c) once → [b, c].
        let facts = vec![fact(0, 0, 1, 0), fact(0, 0, 1, 1), fact(0, 0, 2, 0)];
        let idx = CooccurrenceIndex::build(&facts);
        let list = score_query(&idx, EntityId(0), RelationId(0), 2);
        assert_eq!(ids(&list), vec![1, 2]);
    }

    #[test]
    fn unseen_subject_and_relation_yields_empty() {
        let idx = CooccurrenceIndex::build(&[fact(0, 0, 1, 0)]);
        let list = score_query(&idx, EntityId(9), RelationId(9), 10);
        assert!(list.entities.is_empty());
    }

    #[test]
    fn relation_compatible_neighbor_fills_via_second_tier() {
        // d neighbors a (via q) and has interacted with p (via x): tier 2.
        let facts = vec![fact(0, 0, 1, 0), fact(2, 1, 1, 0)];
        let idx = CooccurrenceIndex::build(&facts);
        let tagged = score_query_explain(&idx, EntityId(0), RelationId(1), 10);
        assert_eq!(tagged[0], (EntityId(1), Tier::SubjectFilteredByRelation));
    }

    #[test]
    fn fourth_tier_reaches_relation_history() {
        // Subject 5 unseen; relation 0 saw objects 2 (twice) and 1 (once).
        let facts = vec![fact(0, 0, 2, 0), fact(1, 0, 2, 0), fact(0, 0, 1, 0)];
        let idx = CooccurrenceIndex::build(&facts);
        let tagged = score_query_explain(&idx, EntityId(5), RelationId(0), 10);
        assert_eq!(
            tagged,
            vec![
                (EntityId(2), Tier::RelationHistory),
                (EntityId(1), Tier::RelationHistory)
            ]
        );
    }

    #[test]
    fn dominated_training_counts_give_perfect_hits() {
        let train = vec![
            fact(0, 0, 1, 0),
            fact(0, 0, 1, 1),
            fact(0, 0, 2, 0),
            fact(3, 1, 4, 0),
            fact(3, 1, 4, 1),
            fact(3, 1, 0, 2),
        ];
        let idx = CooccurrenceIndex::build(&train);
        let test = vec![fact(0, 0, 1, 5), fact(3, 1, 4, 5)];
        assert_eq!(eval_hits_at_k(&idx, &test, 1).unwrap(), 1.0);
    }

    #[test]
    fn unseen_subjects_and_relations_score_zero() {
        let idx = CooccurrenceIndex::build(&[fact(0, 0, 1, 0)]);
        let test = vec![fact(7, 7, 1, 0), fact(8, 9, 0, 1)];
        assert_eq!(eval_hits_at_k(&idx, &test, 10).unwrap(), 0.0);
    }

    #[test]
    fn empty_test_set_is_error() {
        let idx = CooccurrenceIndex::build(&[fact(0, 0, 1, 0)]);
        assert!(matches!(
            eval_hits_at_k(&idx, &[], 5),
            Err(EvalError::EmptyTestSet)
        ));
    }

    proptest! {
        /// The production walker matches the brute-force reimplementation
        /// exactly, order included.
        #[test]
        fn matches_brute_force(
            rows in proptest::collection::vec((0u32..12, 0u32..4, 0u32..12, 0u32..8), 0..120),
            s in 0u32..12,
            r in 0u32..4,
            k in 1usize..15,
        ) {
            let facts: Vec<TimestampFact> =
                rows.iter().map(|&(s, r, o, t)| fact(s, r, o, t)).collect();
            let idx = CooccurrenceIndex::build(&facts);
            let got = ids(&score_query(&idx, EntityId(s), RelationId(r), k));
            let want = brute_force(&facts, s, r, k);
            prop_assert_eq!(got, want);
        }

        /// Hits@K never decreases as k grows.
        #[test]
        fn hits_monotone_in_k(
            rows in proptest::collection::vec((0u32..10, 0u32..3, 0u32..10, 0u32..5), 1..80),
            test_rows in proptest::collection::vec((0u32..10, 0u32..3, 0u32..10, 0u32..5), 1..40),
        ) {
            let train: Vec<TimestampFact> =
                rows.iter().map(|&(s, r, o, t)| fact(s, r, o, t)).collect();
            let test: Vec<TimestampFact> =
                test_rows.iter().map(|&(s, r, o, t)| fact(s, r, o, t)).collect();
            let idx = CooccurrenceIndex::build(&train);
            let ks = [1usize, 2, 3, 5, 8, 13];
            let results = eval_hits_at_ks(&idx, &test, &ks).unwrap();
            for w in results.windows(2) {
                prop_assert!(w[0].1 <= w[1].1 + 1e-12);
            }
            for (_, h) in &results {
                prop_assert!((0.0..=1.0).contains(h));
            }
        }

        /// Candidate lists never contain duplicates and never exceed k.
        #[test]
        fn no_duplicates_within_k(
            rows in proptest::collection::vec((0u32..8, 0u32..3, 0u32..8, 0u32..4), 0..60),
            s in 0u32..8,
            r in 0u32..3,
            k in 1usize..12,
        ) {
            let facts: Vec<TimestampFact> =
                rows.iter().map(|&(s, r, o, t)| fact(s, r, o, t)).collect();
            let idx = CooccurrenceIndex::build(&facts);
            let list = score_query(&idx, EntityId(s), RelationId(r), k);
            prop_assert!(list.entities.len() <= k);
            let mut uniq = list.entities.clone();
            uniq.sort_unstable();
            uniq.dedup();
            prop_assert_eq!(uniq.len(), list.entities.len());
        }
    }
}
