//! `diagnose`: dataset bias statistics and population histograms.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;

use crate::errors::CliError;
use crate::manifest::{dataset_name, f6, write_text, Manifest};
use tkgbench_core::diagnostics::{bias_report_with, distribution_report};
use tkgbench_core::io::load_dataset;

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Dataset directory to analyze.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory for bias.csv, distribution.csv, and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Count entity neighbors directed (subject → object) instead of
    /// undirected.
    #[arg(long)]
    pub directed: bool,
}

pub fn run(args: &DiagnoseArgs) -> Result<(), CliError> {
    let ds = load_dataset(&args.dataset)?;
    let name = dataset_name(&args.dataset);

    let bias = bias_report_with(&ds, args.directed)?;
    let mut csv = String::from("dataset,seen,e_e,er_e,n_test,n_train\n");
    csv.push_str(&format!(
        "{name},{},{},{},{},{}\n",
        f6(bias.seen),
        f6(bias.e_e),
        f6(bias.er_e),
        bias.n_test,
        bias.n_train
    ));
    write_text(&args.out, "bias.csv", &csv)?;

    let dist = distribution_report(&ds);
    let mut csv = String::from("metric,bucket,count\n");
    let mut emit = |metric: &str, hist: &BTreeMap<usize, usize>| {
        for (bucket, count) in hist {
            csv.push_str(&format!("{metric},{bucket},{count}\n"));
        }
    };
    emit("annotation_len", &dist.annotation_len);
    emit("stamps_per_entity", &dist.stamps_per_entity);
    emit("intervals_per_entity", &dist.intervals_per_entity);
    write_text(&args.out, "distribution.csv", &csv)?;

    let mut m = Manifest::new("diagnose");
    m.arg("dataset", args.dataset.display());
    m.arg("directed", args.directed);
    m.input_dataset(&args.dataset)?;
    m.output("bias.csv");
    m.output("distribution.csv");
    m.write(&args.out)?;
    println!("wrote {}", args.out.join("bias.csv").display());
    Ok(())
}
