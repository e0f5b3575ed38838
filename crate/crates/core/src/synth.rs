//! Deterministic synthetic dataset generator with two bias knobs: the size
//! of each (subject, relation) pair's preferred-object set, and the fraction
//! of test facts resampled from training.
//!
//! Every fact draws from its own counter-indexed random stream, so changing
//! one knob never shifts another fact's draws. Raising `target_seen` can
//! only flip individual test facts from fresh to seen — that coupling is
//! what makes shortcut-probe curves monotone rather than merely trending.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cooccur::CooccurrenceIndex;
use crate::forecast::eval_hits_at_k;
use crate::types::{
    Dataset, EntityId, Granularity, IntervalFact, RelationId, SplitFacts, TextAnnotation,
    TimeIndex, TimestampFact,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Eval(#[from] crate::forecast::EvalError),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_entities: u32,
    pub n_relations: u32,
    /// Number of distinct timestamps; the first 80% belong to train, the
    /// next 10% to valid, the rest to test (each range at least one wide,
    /// so this must be ≥ 3).
    pub n_timestamps: u32,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    /// Probability that a test fact copies a training triple.
    pub target_seen: f64,
    /// Distinct objects each (subject, relation) pair ever draws from.
    pub pref_set_size: u32,
    /// Probability that a fact becomes an interval instead of a stamp.
    pub interval_fraction: f64,
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_entities == 0 || self.n_relations == 0 {
            return Err(SynthError::Infeasible(
                "need at least one entity and one relation".into(),
            ));
        }
        if self.n_timestamps < 3 {
            return Err(SynthError::Infeasible(
                "need n_timestamps ≥ 3 so each split owns a time range".into(),
            ));
        }
        if self.n_timestamps > 1_000_000 {
            return Err(SynthError::Infeasible(
                "n_timestamps above 1,000,000 breaks zero-padded time labels".into(),
            ));
        }
        if self.pref_set_size == 0 || self.pref_set_size > self.n_entities {
            return Err(SynthError::Infeasible(format!(
                "pref_set_size must be in 1..={}",
                self.n_entities
            )));
        }
        if !(0.0..=1.0).contains(&self.target_seen) {
            return Err(SynthError::Infeasible("target_seen must be in [0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.interval_fraction) {
            return Err(SynthError::Infeasible(
                "interval_fraction must be in [0,1]".into(),
            ));
        }
        if self.n_test > 0 && self.target_seen > 0.0 && self.n_train == 0 {
            return Err(SynthError::Infeasible(
                "target_seen > 0 requires at least one training fact to copy".into(),
            ));
        }
        if self.n_test > 0
            && self.target_seen < 1.0
            && u64::from(self.n_relations) * u64::from(self.pref_set_size)
                >= u64::from(self.n_entities)
        {
            return Err(SynthError::Infeasible(
                "fresh test facts need unseen objects: require n_entities > n_relations * pref_set_size"
                    .into(),
            ));
        }
        Ok(())
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Preference sets come from a counter sequence keyed on (seed, s, r), not
/// from the per-fact streams, so they are identical no matter how many
/// facts are generated or in what order the memo fills.
fn derive_pref(seed: u64, s: u32, r: u32, size: u32, n_entities: u32) -> Vec<u32> {
    let mut state = seed
        ^ 0xA076_1D64_78BD_642Fu64.wrapping_mul(u64::from(s) + 1)
        ^ 0xE703_7ED1_A0B4_28DBu64.wrapping_mul(u64::from(r) + 1);
    let mut set = BTreeSet::new();
    while set.len() < size as usize {
        set.insert((splitmix64(&mut state) % u64::from(n_entities)) as u32);
    }
    set.into_iter().collect()
}

struct Generator<'a> {
    cfg: &'a SyntheticConfig,
    base_rng: ChaCha8Rng,
    prefs: HashMap<(u32, u32), Vec<u32>>,
    complements: HashMap<u32, Vec<u32>>,
}

impl<'a> Generator<'a> {
    fn new(cfg: &'a SyntheticConfig) -> Self {
        Generator {
            cfg,
            base_rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            prefs: HashMap::new(),
            complements: HashMap::new(),
        }
    }

    fn stream(&self, fact_id: u64) -> ChaCha8Rng {
        let mut rng = self.base_rng.clone();
        rng.set_stream(fact_id);
        rng
    }

    fn pref(&mut self, s: u32, r: u32) -> &[u32] {
        let cfg = self.cfg;
        self.prefs
            .entry((s, r))
            .or_insert_with(|| derive_pref(cfg.seed, s, r, cfg.pref_set_size, cfg.n_entities))
    }

    /// Entities outside every preference set of subject `s` — objects no
    /// training fact for `s` can ever use.
    fn complement(&mut self, s: u32) -> &[u32] {
        if !self.complements.contains_key(&s) {
            let mut in_pref = vec![false; self.cfg.n_entities as usize];
            for r in 0..self.cfg.n_relations {
                for &o in self.pref(s, r) {
                    in_pref[o as usize] = true;
                }
            }
            let comp: Vec<u32> = (0..self.cfg.n_entities).filter(|&e| !in_pref[e as usize]).collect();
            self.complements.insert(s, comp);
        }
        &self.complements[&s]
    }

    /// Remaining draws shared by every fact: a time in [lo, hi], then the
    /// interval flip and length (kept inside the same range).
    fn finish_fact(
        &self,
        rng: &mut ChaCha8Rng,
        triple: (u32, u32, u32),
        lo: u32,
        hi: u32,
        out: &mut SplitFacts,
    ) {
        let t = rng.random_range(lo..=hi);
        let (s, r, o) = triple;
        if rng.random::<f64>() < self.cfg.interval_fraction {
            let len = rng.random_range(0..=(hi - t));
            out.intervals.push(IntervalFact {
                subject: EntityId(s),
                relation: RelationId(r),
                object: EntityId(o),
                start: TimeIndex(t),
                end: TimeIndex(t + len),
            });
        } else {
            out.stamps.push(TimestampFact {
                subject: EntityId(s),
                relation: RelationId(r),
                object: EntityId(o),
                time: TimeIndex(t),
            });
        }
    }

    fn preference_fact(
        &mut self,
        fact_id: u64,
        lo: u32,
        hi: u32,
        out: &mut SplitFacts,
        triples: Option<&mut Vec<(u32, u32, u32)>>,
    ) {
        let mut rng = self.stream(fact_id);
        let s = rng.random_range(0..self.cfg.n_entities);
        let r = rng.random_range(0..self.cfg.n_relations);
        let pref = self.pref(s, r);
        let o = pref[rng.random_range(0..pref.len())];
        if let Some(ts) = triples {
            ts.push((s, r, o));
        }
        self.finish_fact(&mut rng, (s, r, o), lo, hi, out);
    }

    fn test_fact(
        &mut self,
        fact_id: u64,
        train_triples: &[(u32, u32, u32)],
        lo: u32,
        hi: u32,
        out: &mut SplitFacts,
    ) {
        let mut rng = self.stream(fact_id);
        let seen = rng.random::<f64>() < self.cfg.target_seen;
        let triple = if seen {
            train_triples[rng.random_range(0..train_triples.len())]
        } else {
            let s = rng.random_range(0..self.cfg.n_entities);
            let r = rng.random_range(0..self.cfg.n_relations);
            let comp = self.complement(s);
            let o = comp[rng.random_range(0..comp.len())];
            (s, r, o)
        };
        self.finish_fact(&mut rng, triple, lo, hi, out);
    }
}

/// Generates a complete dataset: train and valid facts draw objects from
/// per-(s,r) preference sets; each test fact copies a training triple with
/// probability `target_seen` and otherwise pairs its subject with an object
/// outside all of that subject's preference sets. Byte-identical for
/// identical config.
pub fn generate(cfg: &SyntheticConfig) -> Result<Dataset, SynthError> {
    cfg.validate()?;
    let n = cfg.n_timestamps;
    let train_hi = (n * 8 / 10).clamp(1, n - 2); // exclusive
    let valid_hi = (n * 9 / 10).clamp(train_hi + 1, n - 1); // exclusive

    let mut g = Generator::new(cfg);
    let mut train = SplitFacts::default();
    let mut valid = SplitFacts::default();
    let mut test = SplitFacts::default();
    let mut train_triples = Vec::with_capacity(cfg.n_train);

    let mut fact_id = 0u64;
    for _ in 0..cfg.n_train {
        g.preference_fact(fact_id, 0, train_hi - 1, &mut train, Some(&mut train_triples));
        fact_id += 1;
    }
    for _ in 0..cfg.n_valid {
        g.preference_fact(fact_id, train_hi, valid_hi - 1, &mut valid, None);
        fact_id += 1;
    }
    for _ in 0..cfg.n_test {
        g.test_fact(fact_id, &train_triples, valid_hi, n - 1, &mut test);
        fact_id += 1;
    }

    let entities = (0..cfg.n_entities)
        .map(|i| TextAnnotation::new(format!("e{i:05}"), ""))
        .collect();
    let relations = (0..cfg.n_relations)
        .map(|i| TextAnnotation::new(format!("r{i:03}"), ""))
        .collect();
    let times = (0..n).map(|i| format!("{i:06}")).collect();
    let ds = Dataset {
        granularity: Granularity::Day,
        entities,
        relations,
        times,
        train,
        valid,
        test,
        split_boundaries: Some((format!("{train_hi:06}"), format!("{valid_hi:06}"))),
    };
    debug_assert!(ds.validate().is_ok());
    Ok(ds)
}

/// One grid point of the shortcut probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePoint {
    pub target_seen: f64,
    pub pref_set_size: u32,
    pub hits_at_10: f64,
}

/// Runs the ranking baseline over a (target_seen × pref_set_size) grid and
/// reports Hits@10 at each point. Interval generation is switched off so
/// every test fact is a rankable query; all other knobs come from `base`.
/// Points are emitted pref-major, seen ascending within each pref.
pub fn shortcut_probe(
    base: &SyntheticConfig,
    seens: &[f64],
    prefs: &[u32],
) -> Result<Vec<ProbePoint>, SynthError> {
    let mut out = Vec::with_capacity(seens.len() * prefs.len());
    for &pref in prefs {
        for &seen in seens {
            let cfg = SyntheticConfig {
                target_seen: seen,
                pref_set_size: pref,
                interval_fraction: 0.0,
                ..base.clone()
            };
            let ds = generate(&cfg)?;
            let index = CooccurrenceIndex::build(&ds.train.stamps);
            let hits = eval_hits_at_k(&index, &ds.test.stamps, 10)?;
            out.push(ProbePoint {
                target_seen: seen,
                pref_set_size: pref,
                hits_at_10: hits,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::bias_report;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn base() -> SyntheticConfig {
        SyntheticConfig {
            seed: 7,
            n_entities: 300,
            n_relations: 6,
            n_timestamps: 40,
            n_train: 800,
            n_valid: 80,
            n_test: 200,
            target_seen: 0.5,
            pref_set_size: 5,
            interval_fraction: 0.0,
        }
    }

    fn triples(split: &SplitFacts) -> HashSet<(u32, u32, u32)> {
        split
            .stamps
            .iter()
            .map(|f| (f.subject.0, f.relation.0, f.object.0))
            .chain(
                split
                    .intervals
                    .iter()
                    .map(|f| (f.subject.0, f.relation.0, f.object.0)),
            )
            .collect()
    }

    #[test]
    fn identical_config_identical_dataset() {
        let a = generate(&base()).unwrap();
        let b = generate(&base()).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn different_seed_different_dataset() {
        let a = generate(&base()).unwrap();
        let mut cfg = base();
        cfg.seed = 8;
        let b = generate(&cfg).unwrap();
        assert_ne!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn seen_one_copies_train_triples_exactly() {
        let mut cfg = base();
        cfg.target_seen = 1.0;
        let ds = generate(&cfg).unwrap();
        let train = triples(&ds.train);
        assert!(triples(&ds.test).iter().all(|t| train.contains(t)));
        let report = bias_report(&ds).unwrap();
        assert_eq!(report.seen, 1.0);
    }

    #[test]
    fn seen_zero_objects_never_trained_for_subject() {
        let mut cfg = base();
        cfg.target_seen = 0.0;
        let ds = generate(&cfg).unwrap();
        let index = CooccurrenceIndex::build(&ds.train.stamps);
        for f in &ds.test.stamps {
            assert_eq!(index.subject_object_count(f.subject, f.object), 0);
        }
        let report = bias_report(&ds).unwrap();
        assert_eq!(report.seen, 0.0);
    }

    #[test]
    fn measured_seen_tracks_target_over_seeds() {
        let mut total = 0.0;
        for seed in 0..10 {
            let mut cfg = base();
            cfg.seed = seed;
            cfg.n_test = 1000;
            let ds = generate(&cfg).unwrap();
            total += bias_report(&ds).unwrap().seen;
        }
        let mean = total / 10.0;
        assert!((mean - 0.5).abs() <= 0.05, "mean seen {mean}");
    }

    #[test]
    fn seen_one_small_pref_hits_exactly_one() {
        let mut cfg = base();
        cfg.target_seen = 1.0;
        cfg.pref_set_size = 5;
        let ds = generate(&cfg).unwrap();
        let index = CooccurrenceIndex::build(&ds.train.stamps);
        let hits = eval_hits_at_k(&index, &ds.test.stamps, 10).unwrap();
        assert_eq!(hits, 1.0);
    }

    #[test]
    fn probe_monotone_in_seen_and_exact_at_corners() {
        let mut cfg = base();
        cfg.n_entities = 400;
        cfg.n_relations = 8;
        let seens = [0.0, 0.5, 1.0];
        let prefs = [1, 5, 10];
        let points = shortcut_probe(&cfg, &seens, &prefs).unwrap();
        assert_eq!(points.len(), 9);
        for chunk in points.chunks(seens.len()) {
            for pair in chunk.windows(2) {
                assert!(
                    pair[1].hits_at_10 >= pair[0].hits_at_10,
                    "hits dipped from {:?} to {:?}",
                    pair[0],
                    pair[1]
                );
            }
            assert_eq!(chunk.last().unwrap().hits_at_10, 1.0);
        }
    }

    #[test]
    fn interval_fraction_controls_fact_shape() {
        let mut cfg = base();
        cfg.interval_fraction = 1.0;
        let ds = generate(&cfg).unwrap();
        assert!(ds.train.stamps.is_empty());
        assert_eq!(ds.train.intervals.len(), cfg.n_train);
        cfg.interval_fraction = 0.0;
        let ds = generate(&cfg).unwrap();
        assert!(ds.train.intervals.is_empty());
        assert_eq!(ds.train.stamps.len(), cfg.n_train);
    }

    #[test]
    fn split_time_ranges_are_disjoint() {
        let mut cfg = base();
        cfg.interval_fraction = 0.5;
        let ds = generate(&cfg).unwrap();
        let max_time = |s: &SplitFacts| {
            s.stamps
                .iter()
                .map(|f| f.time.0)
                .chain(s.intervals.iter().map(|f| f.end.0))
                .max()
        };
        let min_time = |s: &SplitFacts| {
            s.stamps
                .iter()
                .map(|f| f.time.0)
                .chain(s.intervals.iter().map(|f| f.start.0))
                .min()
        };
        let train_max = max_time(&ds.train).unwrap();
        let valid_min = min_time(&ds.valid).unwrap();
        let valid_max = max_time(&ds.valid).unwrap();
        let test_min = min_time(&ds.test).unwrap();
        assert!(train_max < valid_min);
        assert!(valid_max < test_min);
    }

    #[test]
    fn infeasible_configs_rejected() {
        let mut cfg = base();
        cfg.n_train = 0;
        cfg.target_seen = 0.5;
        assert!(matches!(generate(&cfg), Err(SynthError::Infeasible(_))));

        let mut cfg = base();
        cfg.pref_set_size = 1000;
        assert!(matches!(generate(&cfg), Err(SynthError::Infeasible(_))));

        let mut cfg = base();
        cfg.n_timestamps = 2;
        assert!(matches!(generate(&cfg), Err(SynthError::Infeasible(_))));

        // 6 relations × 60 preferred objects can cover all 300 entities,
        // leaving no guaranteed-fresh object.
        let mut cfg = base();
        cfg.pref_set_size = 60;
        cfg.target_seen = 0.0;
        assert!(matches!(generate(&cfg), Err(SynthError::Infeasible(_))));
    }

    #[test]
    fn pref_sets_are_config_independent() {
        let a = derive_pref(42, 3, 1, 5, 100);
        let b = derive_pref(42, 3, 1, 5, 100);
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        let c = derive_pref(43, 3, 1, 5, 100);
        assert_ne!(a, c);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// Any feasible config yields a dataset that passes structural
        /// validation with exactly the requested fact counts.
        #[test]
        fn generated_datasets_validate(
            seed in 0u64..1000,
            n_entities in 50u32..200,
            n_relations in 1u32..5,
            n_timestamps in 3u32..30,
            n_train in 1usize..200,
            n_valid in 0usize..50,
            n_test in 0usize..50,
            target_seen in 0.0f64..=1.0,
            pref in 1u32..8,
            interval_fraction in 0.0f64..=1.0,
        ) {
            let cfg = SyntheticConfig {
                seed, n_entities, n_relations, n_timestamps,
                n_train, n_valid, n_test,
                target_seen, pref_set_size: pref, interval_fraction,
            };
            prop_assume!(u64::from(n_relations) * u64::from(pref) < u64::from(n_entities));
            let ds = generate(&cfg).unwrap();
            prop_assert!(ds.validate().is_ok());
            prop_assert_eq!(ds.train.stamps.len() + ds.train.intervals.len(), n_train);
            prop_assert_eq!(ds.valid.stamps.len() + ds.valid.intervals.len(), n_valid);
            prop_assert_eq!(ds.test.stamps.len() + ds.test.intervals.len(), n_test);
        }

        /// Every training object for a subject lies inside one of that
        /// subject's preference sets for the drawn relation.
        #[test]
        fn train_objects_come_from_preference_sets(seed in 0u64..200) {
            let mut cfg = base();
            cfg.seed = seed;
            cfg.n_train = 100;
            cfg.n_valid = 0;
            cfg.n_test = 0;
            let ds = generate(&cfg).unwrap();
            for f in &ds.train.stamps {
                let pref = derive_pref(
                    cfg.seed, f.subject.0, f.relation.0,
                    cfg.pref_set_size, cfg.n_entities,
                );
                prop_assert!(pref.contains(&f.object.0));
            }
        }
    }
}
