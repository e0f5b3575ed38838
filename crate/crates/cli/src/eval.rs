//! `eval`: the three evaluation tasks. Each emits a metric CSV plus a
//! manifest; supplying a prediction file scores it instead of the
//! built-in baseline.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use crate::errors::CliError;
use crate::manifest::{dataset_name, f6, write_text, Manifest};
use tkgbench_core::cooccur::CooccurrenceIndex;
use tkgbench_core::diagnostics::RankingFile;
use tkgbench_core::forecast::eval_hits_at_ks;
use tkgbench_core::genforecast::{
    eval_generative, generative_scoring_baseline, read_predictions, truths_from_dataset,
};
use tkgbench_core::hash::sha256_file;
use tkgbench_core::io::load_dataset;
use tkgbench_core::obsolescence::{
    finalize_and_score, fit_heuristic, read_verdicts, replay_verdicts, run_heuristic,
};
use tkgbench_core::types::{Dataset, TimeIndex, TimestampFact};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    /// Rank objects for (subject, relation, ?) queries; Hits@K.
    Forecast,
    /// Rank (relation, object) pairs per subject; Recall@K and NDCG@K.
    Genforecast,
    /// Predict interval ends through the rolling protocol; MAE and accuracy.
    Obsolescence,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Which evaluation to run.
    #[arg(long, value_enum)]
    pub task: Task,
    /// Dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory for the metric CSV and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Prediction file in the task's interchange format; omitted, the
    /// built-in baseline runs. forecast: JSON lines
    /// {"s":int,"r":int,"t":int,"ranking":[entity,...]}; genforecast:
    /// JSON lines {"s":int,"t":int,"ranking":[[relation,entity],...]};
    /// obsolescence: JSON lines {"t":int,"obsolete":[fact_id,...]} over
    /// the ids published in interval_ids.tsv.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Comma-separated K values for ranking metrics.
    #[arg(long, value_delimiter = ',', default_value = "1,3,10")]
    pub ks: Vec<usize>,
}

/// Builds the co-occurrence index from training stamps, going through the
/// binary cache under $TKGB_CACHE_DIR when that is set. A stale, corrupt,
/// or missing cache entry is a rebuild, never an error.
fn build_index(dataset_dir: &Path, train: &[TimestampFact]) -> Result<CooccurrenceIndex, CliError> {
    let Some(cache_root) = std::env::var_os("TKGB_CACHE_DIR") else {
        return Ok(CooccurrenceIndex::build(train));
    };
    let train_path = dataset_dir.join("train.tsv");
    let hash = sha256_file(&train_path)
        .map_err(|e| CliError::load(format!("{}: {e}", train_path.display())))?;
    let dir = PathBuf::from(cache_root).join("cooccur");
    let path = dir.join(format!("{hash}.idx"));
    if let Ok(Some(idx)) = CooccurrenceIndex::read_cache(&path, &hash) {
        return Ok(idx);
    }
    let idx = CooccurrenceIndex::build(train);
    if fs::create_dir_all(&dir).is_ok() {
        if let Err(e) = idx.write_cache(&path, &hash) {
            eprintln!("warning: could not write index cache: {e}");
        }
    }
    Ok(idx)
}

fn checked_ks(ks: &[usize]) -> Result<Vec<usize>, CliError> {
    if ks.is_empty() {
        return Err(CliError::load("at least one K value is required"));
    }
    if ks.contains(&0) {
        return Err(CliError::load("K values must be ≥ 1"));
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

fn forecast(args: &EvalArgs, ds: &Dataset, ks: &[usize]) -> Result<String, CliError> {
    let name = dataset_name(&args.dataset);
    let per_k: Vec<(usize, f64)> = match &args.predictions {
        None => {
            let idx = build_index(&args.dataset, &ds.train.stamps)?;
            eval_hits_at_ks(&idx, &ds.test.stamps, ks)?
        }
        Some(path) => {
            let file = RankingFile::read(path)?;
            let required: BTreeSet<_> = ds
                .test
                .stamps
                .iter()
                .map(|f| (f.subject, f.relation, f.time))
                .collect();
            let provided: BTreeSet<_> = file.entries.keys().copied().collect();
            if required != provided {
                let missing = required.difference(&provided).count();
                let extra = provided.difference(&required).count();
                return Err(CliError::mismatch(format!(
                    "prediction queries do not match the test queries: {missing} missing, {extra} extra"
                )));
            }
            if ds.test.stamps.is_empty() {
                return Err(CliError::load("test split has no timestamp facts"));
            }
            let positions: Vec<Option<usize>> = ds
                .test
                .stamps
                .iter()
                .map(|f| {
                    file.entries[&(f.subject, f.relation, f.time)]
                        .iter()
                        .position(|o| *o == f.object)
                })
                .collect();
            let n = ds.test.stamps.len() as f64;
            ks.iter()
                .map(|&k| {
                    let hits = positions
                        .iter()
                        .filter(|p| matches!(p, Some(pos) if *pos < k))
                        .count();
                    (k, hits as f64 / n)
                })
                .collect()
        }
    };
    let mut csv = String::from("dataset,k,hits\n");
    for (k, hits) in per_k {
        csv.push_str(&format!("{name},{k},{}\n", f6(hits)));
    }
    write_text(&args.out, "hits.csv", &csv)?;
    Ok("hits.csv".into())
}

fn genforecast(args: &EvalArgs, ds: &Dataset, ks: &[usize]) -> Result<String, CliError> {
    let name = dataset_name(&args.dataset);
    let truths = truths_from_dataset(ds);
    if truths.is_empty() {
        return Err(CliError::load("test split is empty; no truth sets to score"));
    }
    let preds = match &args.predictions {
        Some(path) => read_predictions(path)?,
        None => {
            let idx = build_index(&args.dataset, &ds.train.stamps)?;
            let k_max = *ks.iter().max().expect("ks nonempty");
            truths
                .iter()
                .map(|t| generative_scoring_baseline(&idx, t.query, k_max))
                .collect()
        }
    };
    let report = eval_generative(&preds, &truths, ks)?;
    let mut csv = String::from("dataset,k,recall,ndcg,n_queries\n");
    for row in &report.rows {
        csv.push_str(&format!(
            "{name},{},{},{},{}\n",
            row.k,
            f6(row.recall),
            f6(row.ndcg),
            report.n_queries
        ));
    }
    write_text(&args.out, "gen.csv", &csv)?;
    Ok("gen.csv".into())
}

fn obsolescence(args: &EvalArgs, ds: &Dataset) -> Result<Vec<String>, CliError> {
    let name = dataset_name(&args.dataset);
    let last_time = ds
        .last_time()
        .ok_or_else(|| CliError::load("dataset has no timestamps"))?;
    let test = &ds.test.intervals;

    // The id ↔ interval mapping external verdict producers rank against.
    let mut ids = String::new();
    for (id, f) in test.iter().enumerate() {
        ids.push_str(&format!(
            "{id}\t{}\t{}\t{}\t{}\n",
            f.subject.0, f.relation.0, f.object.0, f.start.0
        ));
    }
    write_text(&args.out, "interval_ids.tsv", &ids)?;

    let (mae, accuracy) = match &args.predictions {
        None => {
            let model = fit_heuristic(&ds.train.intervals);
            let available: Vec<TimeIndex> =
                (0..ds.times.len() as u32).map(TimeIndex).collect();
            run_heuristic(&model, test, &available, last_time)?
        }
        Some(path) => {
            let lines = read_verdicts(path)?;
            let state = replay_verdicts(test, last_time, &lines)?;
            finalize_and_score(&state, test)
        }
    };
    let mut csv = String::from("dataset,mae,accuracy,n_intervals\n");
    csv.push_str(&format!(
        "{name},{},{},{}\n",
        f6(mae),
        f6(accuracy),
        test.len()
    ));
    write_text(&args.out, "obsolescence.csv", &csv)?;
    Ok(vec!["obsolescence.csv".into(), "interval_ids.tsv".into()])
}

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    let ds = load_dataset(&args.dataset)?;
    let ks = checked_ks(&args.ks)?;

    let outputs = match args.task {
        Task::Forecast => vec![forecast(args, &ds, &ks)?],
        Task::Genforecast => vec![genforecast(args, &ds, &ks)?],
        Task::Obsolescence => obsolescence(args, &ds)?,
    };

    let mut m = Manifest::new("eval");
    m.arg("task", format!("{:?}", args.task).to_lowercase());
    m.arg("dataset", args.dataset.display());
    m.arg(
        "ks",
        ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
    );
    m.input_dataset(&args.dataset)?;
    if let Some(p) = &args.predictions {
        m.arg("predictions", p.display());
        m.input(p)?;
    }
    for o in &outputs {
        m.output(o);
    }
    m.write(&args.out)?;
    for o in &outputs {
        println!("wrote {}", args.out.join(o).display());
    }
    Ok(())
}
