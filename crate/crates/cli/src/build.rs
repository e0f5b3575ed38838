//! `build`: run the construction pipeline over a raw corpus directory and
//! write the finished dataset plus a provenance report.

use std::path::PathBuf;

use clap::Args;

use crate::errors::CliError;
use crate::manifest::{write_text, Manifest};
use tkgbench_core::construct::{build_dataset, load_raw_corpus, ConstructConfig};
use tkgbench_core::io::write_dataset;

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// TOML pipeline configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Raw corpus directory: facts.tsv, optional descriptions.tsv and
    /// pageviews.tsv.
    #[arg(long)]
    pub inputs: PathBuf,
    /// Output directory for the dataset files and provenance.json.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &BuildArgs) -> Result<(), CliError> {
    let cfg = ConstructConfig::load(&args.config)?;
    let corpus = load_raw_corpus(&args.inputs)?;
    let (dataset, provenance) = build_dataset(&corpus, &cfg)?;
    write_dataset(&args.out, &dataset)?;
    let report = serde_json::to_string_pretty(&provenance)
        .map_err(|e| CliError::load(format!("provenance serialization: {e}")))?;
    write_text(&args.out, "provenance.json", &format!("{report}\n"))?;

    let mut m = Manifest::new("build");
    m.arg("config", args.config.display());
    m.arg("inputs", args.inputs.display());
    m.input(&args.config)?;
    for name in ["facts.tsv", "descriptions.tsv", "pageviews.tsv"] {
        let p = args.inputs.join(name);
        if p.is_file() {
            m.input(&p)?;
        }
    }
    m.output("provenance.json");
    for name in crate::manifest::DATASET_FILES {
        if args.out.join(name).is_file() {
            m.output(name);
        }
    }
    m.write(&args.out)?;
    println!(
        "built dataset with {} entities, {} relations, {} facts",
        provenance.final_entities,
        provenance.final_relations,
        provenance.train_facts + provenance.valid_facts + provenance.test_facts
    );
    Ok(())
}
