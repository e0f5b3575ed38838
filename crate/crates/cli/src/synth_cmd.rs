//! `synth`: generate a synthetic dataset with a tunable repeat-answer rate,
//! or sweep that rate and report how hard the ranking baseline leans on it.

use std::path::PathBuf;

use clap::Args;

use crate::errors::CliError;
use crate::manifest::{f6, write_text, Manifest};
use tkgbench_core::io::write_dataset;
use tkgbench_core::synth::{generate, shortcut_probe, SyntheticConfig};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator seed; equal seeds give byte-identical datasets.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Entity vocabulary size.
    #[arg(long, default_value_t = 500)]
    pub entities: u32,
    /// Relation vocabulary size.
    #[arg(long, default_value_t = 20)]
    pub relations: u32,
    /// Distinct timestamps (split 80/10/10 across train/valid/test).
    #[arg(long, default_value_t = 100)]
    pub timestamps: u32,
    /// Training facts to draw.
    #[arg(long, default_value_t = 5000)]
    pub train: usize,
    /// Validation facts to draw.
    #[arg(long, default_value_t = 500)]
    pub valid: usize,
    /// Test facts to draw.
    #[arg(long, default_value_t = 500)]
    pub test: usize,
    /// Probability that a test fact repeats a training triple.
    #[arg(long, default_value_t = 0.5)]
    pub seen: f64,
    /// Objects each (subject, relation) pair draws from.
    #[arg(long, default_value_t = 5)]
    pub pref: u32,
    /// Fraction of drawn facts that become intervals instead of stamps.
    #[arg(long, default_value_t = 0.0)]
    pub interval_fraction: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Instead of writing a dataset, sweep the repeat rate and preference
    /// width and write probe.csv with Hits@10 at each grid point.
    #[arg(long, default_value_t = false)]
    pub probe: bool,
}

const PROBE_SEENS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
const PROBE_PREFS: [u32; 5] = [1, 2, 3, 5, 10];

impl SynthArgs {
    fn config(&self) -> SyntheticConfig {
        SyntheticConfig {
            seed: self.seed,
            n_entities: self.entities,
            n_relations: self.relations,
            n_timestamps: self.timestamps,
            n_train: self.train,
            n_valid: self.valid,
            n_test: self.test,
            target_seen: self.seen,
            pref_set_size: self.pref,
            interval_fraction: self.interval_fraction,
        }
    }
}

pub fn run(args: &SynthArgs) -> Result<(), CliError> {
    let cfg = args.config();
    let mut m = Manifest::new("synth");
    m.arg("seed", args.seed);
    m.arg("entities", args.entities);
    m.arg("relations", args.relations);
    m.arg("timestamps", args.timestamps);
    m.arg("train", args.train);
    m.arg("valid", args.valid);
    m.arg("test", args.test);
    m.arg("seen", f6(args.seen));
    m.arg("pref", args.pref);
    m.arg("interval_fraction", f6(args.interval_fraction));
    m.arg("probe", args.probe);

    if args.probe {
        let points = shortcut_probe(&cfg, &PROBE_SEENS, &PROBE_PREFS)?;
        let mut csv = String::from("seen,pref_set_size,hits_at_10\n");
        for p in &points {
            csv.push_str(&format!(
                "{},{},{}\n",
                f6(p.target_seen),
                p.pref_set_size,
                f6(p.hits_at_10)
            ));
        }
        write_text(&args.out, "probe.csv", &csv)?;
        m.output("probe.csv");
        m.write(&args.out)?;
        println!("wrote {}", args.out.join("probe.csv").display());
        return Ok(());
    }

    let ds = generate(&cfg)?;
    write_dataset(&args.out, &ds)?;
    for name in crate::manifest::DATASET_FILES {
        if args.out.join(name).is_file() {
            m.output(name);
        }
    }
    m.write(&args.out)?;
    println!(
        "wrote synthetic dataset ({} train / {} valid / {} test facts) to {}",
        args.train,
        args.valid,
        args.test,
        args.out.display()
    );
    Ok(())
}
