use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tacfoot::experiment::{
    compute_metrics, emit_plot_data, parse_log, run_experiment, ExperimentConfig, PlotKind,
};
use tacfoot::{Error, Terrain};

#[derive(Parser)]
#[command(name = "tacfoot", version, about = "Tactile-foot edge following experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TerrainArg {
    Beam,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Trajectory,
    Dissimilarity,
    DisplacementBar,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config over one or more seeds.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the config's seed list; repeatable.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        /// Replaces the config's terrain with the default beam or table.
        #[arg(long)]
        terrain: Option<TerrainArg>,
        #[arg(long)]
        disable_sensing: bool,
        #[arg(long)]
        use_image_pipeline: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a metrics report (JSON) for run logs.
    Metrics {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
    /// Print plot-ready CSV for each log.
    Plotdata {
        #[arg(long)]
        kind: KindArg,
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
}

fn read_logs(paths: &[PathBuf]) -> Result<Vec<tacfoot::TrajectoryLog>, Error> {
    paths
        .iter()
        .map(|p| parse_log(&fs::read_to_string(p)?))
        .collect()
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            seeds,
            terrain,
            disable_sensing,
            use_image_pipeline,
            out,
        } => {
            let mut cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            if !seeds.is_empty() {
                cfg.seeds = seeds;
            }
            if let Some(t) = terrain {
                cfg.terrain = match t {
                    TerrainArg::Beam => Terrain::beam(),
                    TerrainArg::Table => Terrain::table(),
                };
                cfg.start_pose = None;
            }
            cfg.controller.sensing &= !disable_sensing;
            cfg.controller.use_image_pipeline |= use_image_pipeline;
            match run_experiment(&cfg, out.as_deref()) {
                Ok(output) => {
                    let agg = &output.report.aggregate;
                    for r in &output.report.runs {
                        println!(
                            "seed {}: {:?}, {} footholds, mean |disp| {:.2} mm, max {:.2} mm, {} taps, {} arcs",
                            r.seed,
                            r.end_reason,
                            r.footholds,
                            r.mean_abs_displacement,
                            r.max_abs_displacement,
                            r.total_taps,
                            r.arcs
                        );
                    }
                    println!("success {}/{}", agg.successes, agg.runs);
                    if output.all_failed() {
                        ExitCode::from(3)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e @ Error::Config { .. }) => {
                    eprintln!("config error: {e}");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("run failed: {e}");
                    ExitCode::from(3)
                }
            }
        }
        Command::Metrics { logs } => {
            let report = read_logs(&logs).and_then(|l| compute_metrics(&l));
            match report.and_then(|r| Ok(serde_json::to_string_pretty(&r)?)) {
                Ok(json) => {
                    println!("{json}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Plotdata { kind, logs } => {
            let kind = match kind {
                KindArg::Trajectory => PlotKind::Trajectory,
                KindArg::Dissimilarity => PlotKind::Dissimilarity,
                KindArg::DisplacementBar => PlotKind::DisplacementBar,
            };
            let result = read_logs(&logs).and_then(|logs| {
                logs.iter()
                    .map(|l| emit_plot_data(l, kind))
                    .collect::<Result<Vec<_>, _>>()
            });
            match result {
                Ok(csvs) => {
                    print!("{}", csvs.join("\n"));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
