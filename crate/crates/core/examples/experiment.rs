//! Load an experiment config, run every seed, write logs and CSVs, and print
//! the metrics report and a plot-data preview.
//!
//! `cargo run --example experiment -- configs/beam.toml out/`
use std::path::PathBuf;

use tacfoot::experiment::{emit_plot_data, run_experiment, ExperimentConfig, PlotKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| "configs/beam.toml".into());
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| "experiment_out".into());

    let cfg = ExperimentConfig::load(&config)?;
    let output = run_experiment(&cfg, Some(&out))?;
    println!("{}", serde_json::to_string_pretty(&output.report.aggregate)?);
    let bars = emit_plot_data(&output.logs[0], PlotKind::DisplacementBar)?;
    for line in bars.lines().take(5) {
        println!("{line}");
    }
    println!("files written to {}", out.display());
    Ok(())
}
