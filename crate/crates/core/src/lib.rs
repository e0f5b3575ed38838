//! Temporal knowledge graph evaluation and diagnostics.
//!
//! The crate covers the full loop for studying recurrence effects in
//! temporal link prediction: a dataset model with on-disk round-tripping
//! ([`types`], [`io`]), a time-blind co-occurrence index with a cache
//! ([`cooccur`]), a frequency-ranking baseline and its Hits@K harness
//! ([`forecast`]), generative-forecast and obsolescence evaluation tasks
//! ([`genforecast`], [`obsolescence`]), dataset bias statistics
//! ([`diagnostics`]), a construction pipeline with k-core selection and
//! temporal text scrubbing ([`construct`]), and a deterministic synthetic
//! generator for desk-scale verification ([`synth`]).

pub mod construct;
pub mod cooccur;
pub mod diagnostics;
pub mod forecast;
pub mod genforecast;
pub mod hash;
pub mod io;
pub mod obsolescence;
pub mod synth;
pub mod types;
