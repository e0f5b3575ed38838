//! Dataset bias statistics and model-ranking analyses.
//!
//! The bias statistics quantify how far a dataset rewards memorization:
//! `seen` is the share of test rows whose exact triple already appears in
//! training, `e_e` the mean number of distinct neighbors per entity, and
//! `er_e` the mean number of distinct objects per (subject, relation)
//! key. The ranking analyses compare top-K lists produced by different
//! models and profile what kinds of entities fill them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Dataset, EntityId, RelationId, SplitFacts, TimeIndex};

#[derive(Debug, Error)]
pub enum DiagError {
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("overlap needs at least two ranking files")]
    NeedTwoFiles,
    #[error("ranking files do not share the same query set")]
    QueryMismatch,
    #[error("duplicate query (s={0}, r={1}, t={2})")]
    DuplicateQuery(u32, u32, u32),
    #[error("duplicate entity {entity} in ranking for (s={s}, r={r}, t={t})")]
    DuplicateEntity { entity: u32, s: u32, r: u32, t: u32 },
    #[error("{file}:{line}: {msg}")]
    MalformedLine {
        file: String,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shortcut-susceptibility statistics of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    /// Fraction of test rows whose (s, r, o) triple occurs in training.
    pub seen: f64,
    /// Mean distinct neighbors per entity, over entities with at least one
    /// training neighbor.
    pub e_e: f64,
    /// Mean distinct objects per training (subject, relation) key.
    pub er_e: f64,
    pub n_test: usize,
    pub n_train: usize,
}

/// Rows of a split, counting each interval fact once (no expansion): one
/// row per line of the source data.
fn rows(split: &SplitFacts) -> impl Iterator<Item = (EntityId, RelationId, EntityId)> + '_ {
    split
        .stamps
        .iter()
        .map(|f| (f.subject, f.relation, f.object))
        .chain(
            split
                .intervals
                .iter()
                .map(|f| (f.subject, f.relation, f.object)),
        )
}

fn row_count(split: &SplitFacts) -> usize {
    split.stamps.len() + split.intervals.len()
}

/// Bias statistics with the default undirected neighbor definition.
pub fn bias_report(d: &Dataset) -> Result<BiasReport, DiagError> {
    bias_report_with(d, false)
}

/// Bias statistics; `directed` restricts the e_e neighbor set to the
/// subject → object direction (a calibration toggle — the default unions
/// both roles).
pub fn bias_report_with(d: &Dataset, directed: bool) -> Result<BiasReport, DiagError> {
    if d.train.is_empty() {
        return Err(DiagError::EmptySplit("train"));
    }
    if d.test.is_empty() {
        return Err(DiagError::EmptySplit("test"));
    }
    let mut train_triples: HashSet<(EntityId, RelationId, EntityId)> = HashSet::new();
    let mut neighbors: HashMap<EntityId, HashSet<EntityId>> = HashMap::new();
    let mut pair_objects: HashMap<(EntityId, RelationId), HashSet<EntityId>> = HashMap::new();
    for (s, r, o) in rows(&d.train) {
        train_triples.insert((s, r, o));
        neighbors.entry(s).or_default().insert(o);
        if !directed {
            neighbors.entry(o).or_default().insert(s);
        }
        pair_objects.entry((s, r)).or_default().insert(o);
    }
    let n_test = row_count(&d.test);
    let seen_count = rows(&d.test)
        .filter(|t| train_triples.contains(t))
        .count();
    let e_e = if neighbors.is_empty() {
        0.0
    } else {
        neighbors.values().map(|n| n.len() as f64).sum::<f64>() / neighbors.len() as f64
    };
    let er_e = if pair_objects.is_empty() {
        0.0
    } else {
        pair_objects.values().map(|o| o.len() as f64).sum::<f64>() / pair_objects.len() as f64
    };
    Ok(BiasReport {
        seen: seen_count as f64 / n_test as f64,
        e_e,
        er_e,
        n_test,
        n_train: row_count(&d.train),
    })
}

/// Query key of a ranking file entry.
pub type RankKey = (EntityId, RelationId, TimeIndex);

/// A model's top-N entity rankings, one list per (s, r, t) query.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RankingFile {
    pub entries: BTreeMap<RankKey, Vec<EntityId>>,
}

#[derive(Serialize, Deserialize)]
struct RankLine {
    s: u32,
    r: u32,
    t: u32,
    ranking: Vec<u32>,
}

impl RankingFile {
    /// Reads `{"s":int,"r":int,"t":int,"ranking":[int,...]}` JSON lines,
    /// rejecting duplicate queries and duplicate entities within a query.
    pub fn read(path: &Path) -> Result<Self, DiagError> {
        let fname = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let text = fs::read_to_string(path)?;
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let raw: RankLine =
                serde_json::from_str(line).map_err(|e| DiagError::MalformedLine {
                    file: fname.clone(),
                    line: i + 1,
                    msg: e.to_string(),
                })?;
            let mut seen = HashSet::new();
            for &e in &raw.ranking {
                if !seen.insert(e) {
                    return Err(DiagError::DuplicateEntity {
                        entity: e,
                        s: raw.s,
                        r: raw.r,
                        t: raw.t,
                    });
                }
            }
            let key = (EntityId(raw.s), RelationId(raw.r), TimeIndex(raw.t));
            let ranking = raw.ranking.into_iter().map(EntityId).collect();
            if entries.insert(key, ranking).is_some() {
                return Err(DiagError::DuplicateQuery(raw.s, raw.r, raw.t));
            }
        }
        Ok(RankingFile { entries })
    }

    pub fn write(&self, path: &Path) -> Result<(), DiagError> {
        let mut buf = String::new();
        for ((s, r, t), ranking) in &self.entries {
            let raw = RankLine {
                s: s.0,
                r: r.0,
                t: t.0,
                ranking: ranking.iter().map(|e| e.0).collect(),
            };
            buf.push_str(&serde_json::to_string(&raw).expect("ranking serializes"));
            buf.push('\n');
        }
        let mut f = fs::File::create(path)?;
        f.write_all(buf.as_bytes())?;
        Ok(())
    }
}

/// Mean over shared queries of the size of the intersection of every
/// file's top-k entities: how much different models agree on.
pub fn overlap_at_k(files: &[RankingFile], k: usize) -> Result<f64, DiagError> {
    if files.len() < 2 {
        return Err(DiagError::NeedTwoFiles);
    }
    let keys: Vec<&RankKey> = files[0].entries.keys().collect();
    for f in &files[1..] {
        if f.entries.len() != keys.len() || !keys.iter().all(|k| f.entries.contains_key(k)) {
            return Err(DiagError::QueryMismatch);
        }
    }
    if keys.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0usize;
    for key in &keys {
        let mut common: HashSet<EntityId> =
            files[0].entries[key].iter().take(k).copied().collect();
        for f in &files[1..] {
            let top: HashSet<EntityId> = f.entries[key].iter().take(k).copied().collect();
            common.retain(|e| top.contains(e));
        }
        total += common.len();
    }
    Ok(total as f64 / keys.len() as f64)
}

/// Aggregate description of the entities a model ranks highly.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateProfile {
    /// Mean distinct undirected training neighbors per ranked candidate.
    pub mean_neighbor_count: f64,
    /// Mean training occurrences of the candidate as object of the query's
    /// relation.
    pub mean_relation_count: f64,
    /// Mean (query time − candidate's latest earlier active time), over
    /// candidates that have training history before the query.
    pub mean_recency: f64,
    pub n_with_history: usize,
    pub n_no_history: usize,
    pub n_candidates: usize,
}

/// Profiles the top `top_m` candidates of every query in a ranking file
/// against the dataset's training split.
pub fn candidate_profile(file: &RankingFile, d: &Dataset, top_m: usize) -> CandidateProfile {
    let mut neighbors: HashMap<EntityId, HashSet<EntityId>> = HashMap::new();
    let mut rel_obj_count: HashMap<(RelationId, EntityId), u64> = HashMap::new();
    // Per-entity activity from training: sorted stamp times plus raw
    // interval bounds (intervals stay unexpanded; activity queries clip).
    let mut stamp_times: HashMap<EntityId, Vec<u32>> = HashMap::new();
    let mut interval_spans: HashMap<EntityId, Vec<(u32, u32)>> = HashMap::new();

    for f in &d.train.stamps {
        neighbors.entry(f.subject).or_default().insert(f.object);
        neighbors.entry(f.object).or_default().insert(f.subject);
        *rel_obj_count.entry((f.relation, f.object)).or_insert(0) += 1;
        stamp_times.entry(f.subject).or_default().push(f.time.0);
        stamp_times.entry(f.object).or_default().push(f.time.0);
    }
    for f in &d.train.intervals {
        neighbors.entry(f.subject).or_default().insert(f.object);
        neighbors.entry(f.object).or_default().insert(f.subject);
        *rel_obj_count.entry((f.relation, f.object)).or_insert(0) += 1;
        for e in [f.subject, f.object] {
            interval_spans.entry(e).or_default().push((f.start.0, f.end.0));
        }
    }
    for v in stamp_times.values_mut() {
        v.sort_unstable();
    }

    // Latest training activity strictly before t, if any.
    let latest_before = |e: EntityId, t: u32| -> Option<u32> {
        let mut best: Option<u32> = None;
        if let Some(times) = stamp_times.get(&e) {
            let idx = times.partition_point(|&x| x < t);
            if idx > 0 {
                best = Some(times[idx - 1]);
            }
        }
        if let Some(spans) = interval_spans.get(&e) {
            for &(start, end) in spans {
                if start < t {
                    let reach = end.min(t - 1);
                    best = Some(best.map_or(reach, |b| b.max(reach)));
                }
            }
        }
        best
    };

    let mut n_candidates = 0usize;
    let mut neighbor_sum = 0f64;
    let mut relation_sum = 0f64;
    let mut recency_sum = 0f64;
    let mut n_with_history = 0usize;
    let mut n_no_history = 0usize;
    for ((_, r, t), ranking) in &file.entries {
        for cand in ranking.iter().take(top_m) {
            n_candidates += 1;
            neighbor_sum += neighbors.get(cand).map(|n| n.len()).unwrap_or(0) as f64;
            relation_sum += rel_obj_count.get(&(*r, *cand)).copied().unwrap_or(0) as f64;
            match latest_before(*cand, t.0) {
                Some(active) => {
                    n_with_history += 1;
                    recency_sum += (t.0 - active) as f64;
                }
                None => n_no_history += 1,
            }
        }
    }
    CandidateProfile {
        mean_neighbor_count: if n_candidates == 0 {
            0.0
        } else {
            neighbor_sum / n_candidates as f64
        },
        mean_relation_count: if n_candidates == 0 {
            0.0
        } else {
            relation_sum / n_candidates as f64
        },
        mean_recency: if n_with_history == 0 {
            0.0
        } else {
            recency_sum / n_with_history as f64
        },
        n_with_history,
        n_no_history,
        n_candidates,
    }
}

/// Histograms over the entity population: value → number of entities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionReport {
    /// Short-description length in characters.
    pub annotation_len: BTreeMap<usize, usize>,
    /// Timestamp facts (all splits) the entity participates in.
    pub stamps_per_entity: BTreeMap<usize, usize>,
    /// Interval facts (all splits) the entity participates in.
    pub intervals_per_entity: BTreeMap<usize, usize>,
}

/// Population histograms: every entity falls into exactly one bucket of
/// each histogram, so each histogram's masses sum to the entity count.
pub fn distribution_report(d: &Dataset) -> DistributionReport {
    let n = d.entities.len();
    let mut stamp_counts = vec![0usize; n];
    let mut interval_counts = vec![0usize; n];
    for f in d.all_stamps() {
        stamp_counts[f.subject.0 as usize] += 1;
        if f.object != f.subject {
            stamp_counts[f.object.0 as usize] += 1;
        }
    }
    for f in d.all_intervals() {
        interval_counts[f.subject.0 as usize] += 1;
        if f.object != f.subject {
            interval_counts[f.object.0 as usize] += 1;
        }
    }
    let mut annotation_len: BTreeMap<usize, usize> = BTreeMap::new();
    for ann in &d.entities {
        *annotation_len
            .entry(ann.short_description.chars().count())
            .or_insert(0) += 1;
    }
    let histogram = |counts: &[usize]| -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for &c in counts {
            *h.entry(c).or_insert(0) += 1;
        }
        h
    };
    DistributionReport {
        annotation_len,
        stamps_per_entity: histogram(&stamp_counts),
        intervals_per_entity: histogram(&interval_counts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Granularity, TextAnnotation, TimestampFact};
    use proptest::prelude::*;

    fn fact(s: u32, r: u32, o: u32, t: u32) -> TimestampFact {
        TimestampFact {
            subject: EntityId(s),
            relation: RelationId(r),
            object: EntityId(o),
            time: TimeIndex(t),
        }
    }

    fn dataset(train: Vec<TimestampFact>, test: Vec<TimestampFact>) -> Dataset {
        let n_ent = train
            .iter()
            .chain(test.iter())
            .flat_map(|f| [f.subject.0, f.object.0])
            .max()
            .map(|m| m + 1)
            .unwrap_or(1);
        let n_rel = train
            .iter()
            .chain(test.iter())
            .map(|f| f.relation.0)
            .max()
            .map(|m| m + 1)
            .unwrap_or(1);
        let n_t = train
            .iter()
            .chain(test.iter())
            .map(|f| f.time.0)
            .max()
            .map(|m| m + 1)
            .unwrap_or(1);
        Dataset {
            granularity: Granularity::Day,
            entities: (0..n_ent)
                .map(|i| TextAnnotation::new(format!("e{i}"), ""))
                .collect(),
            relations: (0..n_rel)
                .map(|i| TextAnnotation::new(format!("r{i}"), ""))
                .collect(),
            times: (0..n_t).map(|i| format!("{i:04}")).collect(),
            train: SplitFacts {
                stamps: train,
                intervals: vec![],
            },
            valid: SplitFacts::default(),
            test: SplitFacts {
                stamps: test,
                intervals: vec![],
            },
            split_boundaries: None,
        }
    }

    #[test]
    fn test_equal_to_train_is_fully_seen() {
        let facts = vec![fact(0, 0, 1, 0), fact(1, 1, 2, 1), fact(2, 0, 0, 2)];
        let d = dataset(facts.clone(), facts);
        let report = bias_report(&d).unwrap();
        assert_eq!(report.seen, 1.0);
    }

    #[test]
    fn bias_counts_on_a_small_graph() {
        // Train: 0-[0]->1, 0-[0]->2, 1-[1]->2. Test: one seen, one unseen.
        let train = vec![fact(0, 0, 1, 0), fact(0, 0, 2, 0), fact(1, 1, 2, 1)];
        let test = vec![fact(0, 0, 1, 2), fact(2, 0, 0, 2)];
        let d = dataset(train, test);
        let r = bias_report(&d).unwrap();
        assert_eq!(r.seen, 0.5);
        // Undirected neighbors: 0:{1,2}, 1:{0,2}, 2:{0,1} → mean 2.
        assert_eq!(r.e_e, 2.0);
        // Keys (0,0)→{1,2}, (1,1)→{2} → mean 1.5.
        assert_eq!(r.er_e, 1.5);
        assert_eq!(r.n_train, 3);
        assert_eq!(r.n_test, 2);
    }

    #[test]
    fn directed_mode_shrinks_neighborhoods() {
        let train = vec![fact(0, 0, 1, 0), fact(0, 0, 2, 0), fact(1, 1, 2, 1)];
        let test = vec![fact(0, 0, 1, 2)];
        let d = dataset(train, test);
        let undirected = bias_report_with(&d, false).unwrap();
        let directed = bias_report_with(&d, true).unwrap();
        // Directed: 0→{1,2}, 1→{2} → mean 1.5 over two subjects.
        assert_eq!(directed.e_e, 1.5);
        assert!(directed.e_e <= undirected.e_e);
    }

    #[test]
    fn empty_split_is_error() {
        let d = dataset(vec![fact(0, 0, 1, 0)], vec![]);
        assert!(matches!(
            bias_report(&d),
            Err(DiagError::EmptySplit("test"))
        ));
    }

    #[allow(clippy::type_complexity)]
    fn ranking_file(entries: &[((u32, u32, u32), Vec<u32>)]) -> RankingFile {
        RankingFile {
            entries: entries
                .iter()
                .map(|((s, r, t), v)| {
                    (
                        (EntityId(*s), RelationId(*r), TimeIndex(*t)),
                        v.iter().copied().map(EntityId).collect(),
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn identical_files_overlap_fully() {
        let f = ranking_file(&[((0, 0, 0), (0..30).collect())]);
        let got = overlap_at_k(&[f.clone(), f], 20).unwrap();
        assert_eq!(got, 20.0);
    }

    #[test]
    fn disjoint_files_overlap_zero() {
        let a = ranking_file(&[((0, 0, 0), vec![1, 2, 3])]);
        let b = ranking_file(&[((0, 0, 0), vec![4, 5, 6])]);
        assert_eq!(overlap_at_k(&[a, b], 3).unwrap(), 0.0);
    }

    #[test]
    fn query_mismatch_is_error() {
        let a = ranking_file(&[((0, 0, 0), vec![1])]);
        let b = ranking_file(&[((1, 0, 0), vec![1])]);
        assert!(matches!(
            overlap_at_k(&[a, b], 1),
            Err(DiagError::QueryMismatch)
        ));
    }

    #[test]
    fn ranking_file_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ranks.jsonl");
        let f = ranking_file(&[((0, 1, 2), vec![5, 3, 8]), ((1, 0, 3), vec![])]);
        f.write(&path).unwrap();
        assert_eq!(RankingFile::read(&path).unwrap(), f);

        fs::write(&path, "{\"s\":0,\"r\":0,\"t\":0,\"ranking\":[1,1]}\n").unwrap();
        assert!(matches!(
            RankingFile::read(&path),
            Err(DiagError::DuplicateEntity { .. })
        ));
    }

    #[test]
    fn profile_recency_and_history_buckets() {
        // Entity 1 active at t=4 (train); query at t=5 → recency 1.
        // Entity 9 never active → no-history bucket.
        let train = vec![fact(0, 0, 1, 4)];
        let test = vec![fact(0, 0, 1, 5)];
        let mut d = dataset(train, test);
        d.entities.push(TextAnnotation::new("e9", ""));
        while d.entities.len() < 10 {
            let i = d.entities.len();
            d.entities.push(TextAnnotation::new(format!("e{i}"), ""));
        }
        let file = ranking_file(&[((0, 0, 5), vec![1, 9])]);
        let p = candidate_profile(&file, &d, 10);
        assert_eq!(p.n_candidates, 2);
        assert_eq!(p.n_with_history, 1);
        assert_eq!(p.n_no_history, 1);
        assert_eq!(p.mean_recency, 1.0);
        // Entity 1 has one undirected neighbor (0); entity 9 has none.
        assert_eq!(p.mean_neighbor_count, 0.5);
        // Entity 1 appeared once as object of relation 0.
        assert_eq!(p.mean_relation_count, 0.5);
    }

    #[test]
    fn single_self_looping_entity_histogram() {
        let train = vec![fact(0, 0, 0, 0), fact(0, 0, 0, 1), fact(0, 0, 0, 2)];
        let d = dataset(train, vec![fact(0, 0, 0, 2)]);
        let rep = distribution_report(&d);
        // 3 train + 1 test fact all involve entity 0 exactly once each.
        assert_eq!(rep.stamps_per_entity, [(4, 1)].into_iter().collect());
        assert_eq!(rep.annotation_len, [(0, 1)].into_iter().collect());
    }

    proptest! {
        /// Fact order never changes the bias report.
        #[test]
        fn permutation_invariant(
            rows in proptest::collection::vec((0u32..8, 0u32..3, 0u32..8, 0u32..5), 1..60),
            swap_seed in 0usize..1000,
        ) {
            let train: Vec<TimestampFact> =
                rows.iter().map(|&(s, r, o, t)| fact(s, r, o, t)).collect();
            let test = vec![fact(0, 0, 1, 0)];
            let mut shuffled = train.clone();
            // Deterministic pseudo-shuffle.
            let n = shuffled.len();
            for i in 0..n {
                let j = (i * 7 + swap_seed) % n;
                shuffled.swap(i, j);
            }
            let a = bias_report(&dataset(train, test.clone())).unwrap();
            let b = bias_report(&dataset(shuffled, test)).unwrap();
            prop_assert_eq!(a, b);
        }

        /// Histogram masses always sum to the entity count.
        #[test]
        fn histogram_mass_conserved(
            rows in proptest::collection::vec((0u32..10, 0u32..3, 0u32..10, 0u32..5), 0..60),
        ) {
            let train: Vec<TimestampFact> =
                rows.iter().map(|&(s, r, o, t)| fact(s, r, o, t)).collect();
            let d = dataset(train, vec![]);
            let rep = distribution_report(&d);
            let n = d.entities.len();
            prop_assert_eq!(rep.annotation_len.values().sum::<usize>(), n);
            prop_assert_eq!(rep.stamps_per_entity.values().sum::<usize>(), n);
            prop_assert_eq!(rep.intervals_per_entity.values().sum::<usize>(), n);
        }
    }
}
