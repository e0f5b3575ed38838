//! `align`: resolve a list of entity labels against Wikidata and write the
//! outcome table. Responses are cached on disk; `--offline` answers from
//! that cache alone.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use crate::errors::CliError;
use crate::manifest::{write_text, Manifest};
use tkgbench_wikidata::align::align_corpus;
use tkgbench_wikidata::text::SimilarityVerifier;
use tkgbench_wikidata::{ClientConfig, WikidataClient};

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// File with one entity label per line (blank lines skipped).
    #[arg(long)]
    pub labels: PathBuf,
    /// Output directory for alignment.json and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Serve from the response cache only; cache misses fail instead of
    /// touching the network.
    #[arg(long, default_value_t = false)]
    pub offline: bool,
    /// Response cache directory. Falls back to $TKGB_CACHE_DIR, then
    /// ./.tkgb-cache.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Upper bound on concurrent requests.
    #[arg(long, default_value_t = 4)]
    pub max_inflight: usize,
    /// Token-overlap score a candidate must reach when no exact label
    /// match exists.
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
}

fn cache_dir(args: &AlignArgs) -> PathBuf {
    if let Some(d) = &args.cache_dir {
        return d.clone();
    }
    if let Some(d) = std::env::var_os("TKGB_CACHE_DIR") {
        return PathBuf::from(d).join("wikidata");
    }
    PathBuf::from(".tkgb-cache")
}

pub fn run(args: &AlignArgs) -> Result<(), CliError> {
    let raw = fs::read_to_string(&args.labels)
        .map_err(|e| CliError::load(format!("{}: {e}", args.labels.display())))?;
    let labels: Vec<String> = raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    if labels.is_empty() {
        return Err(CliError::load("label file holds no labels"));
    }
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(CliError::load("threshold must lie in [0, 1]"));
    }

    let cfg = ClientConfig::new(cache_dir(args))
        .offline(args.offline)
        .max_inflight(args.max_inflight);
    let client = WikidataClient::new(cfg)?;
    let verifier = SimilarityVerifier {
        threshold: args.threshold,
    };
    let outcomes = align_corpus(&client, &labels, &verifier)?;

    let json = serde_json::to_string_pretty(&outcomes)
        .map_err(|e| CliError::load(format!("alignment serialization: {e}")))?;
    write_text(&args.out, "alignment.json", &format!("{json}\n"))?;

    let mut m = Manifest::new("align");
    m.arg("labels", args.labels.display());
    m.arg("offline", args.offline);
    m.arg("max_inflight", args.max_inflight);
    m.arg("threshold", format!("{:.6}", args.threshold));
    m.input(&args.labels)?;
    m.output("alignment.json");
    m.write(&args.out)?;

    let matched = outcomes
        .values()
        .filter(|o| matches!(o, tkgbench_wikidata::align::AlignmentOutcome::Matched { .. }))
        .count();
    println!(
        "aligned {matched}/{} labels; wrote {}",
        labels.len(),
        args.out.join("alignment.json").display()
    );
    Ok(())
}
