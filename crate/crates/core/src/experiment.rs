//! Experiment harness: config files, multi-seed runs, metrics and plot data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controller::{
    run, ArcPurpose, ControllerConfig, EndReason, LogRecord, Scenario, TrajectoryLog,
};
use crate::error::{Error, Result};
use crate::geometry::{Pose2D, RobotParams};
use crate::sensor::{PinLayout, SensorParams};
use crate::terrain::Terrain;
use crate::vision::{DetectionParams, DEFAULT_MM_TO_PX};

fn default_terrain() -> Terrain {
    Terrain::beam()
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_mm_to_px() -> f64 {
    DEFAULT_MM_TO_PX
}

/// One experiment: a world, a controller and the seeds to run it with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_terrain")]
    pub terrain: Terrain,
    #[serde(default)]
    pub robot: RobotParams,
    #[serde(default)]
    pub sensor: SensorParams,
    #[serde(default)]
    pub layout: Option<PinLayout>,
    #[serde(default)]
    pub detection: DetectionParams,
    #[serde(default = "default_mm_to_px")]
    pub mm_to_px: f64,
    /// Defaults to the terrain's start pose for the robot.
    #[serde(default)]
    pub start_pose: Option<Pose2D>,
    pub controller: ControllerConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(terrain: Terrain, controller: ControllerConfig, seeds: Vec<u64>) -> Self {
        Self {
            terrain,
            robot: RobotParams::default(),
            sensor: SensorParams::default(),
            layout: None,
            detection: DetectionParams::default(),
            mm_to_px: DEFAULT_MM_TO_PX,
            start_pose: None,
            controller,
            seeds,
            output_dir: None,
        }
    }

    /// Default beam experiment over `seeds`.
    pub fn beam(seeds: Vec<u64>) -> Self {
        Self::new(Terrain::beam(), ControllerConfig::default(), seeds)
    }

    /// Table experiment. The step is long enough that the edge's curvature
    /// carries it past the tap arc now and then, which exercises the search.
    pub fn table(seeds: Vec<u64>) -> Self {
        let mut config = Self::new(
            Terrain::table(),
            ControllerConfig {
                max_iterations: 12,
                ..ControllerConfig::default()
            },
            seeds,
        );
        config.robot.step_length = 160.0;
        config
    }

    /// Parse TOML, or JSON when the text starts with `{`.
    pub fn from_str(text: &str) -> Result<Self> {
        let config: Self = if text.trim_start().starts_with('{') {
            let mut de = serde_json::Deserializer::from_str(text);
            serde_path_to_error::deserialize(&mut de).map_err(config_error)?
        } else {
            let de = toml::de::Deserializer::parse(text).map_err(|e| Error::Config {
                path: String::new(),
                message: e.to_string(),
            })?;
            serde_path_to_error::deserialize(de).map_err(config_error)?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config {
                path: "seeds".into(),
                message: "at least one seed is required".into(),
            });
        }
        let scenario = self.scenario();
        let checks: [(&str, Result<()>); 5] = [
            ("controller", self.controller.validate()),
            ("robot", scenario.robot.validate()),
            ("sensor", scenario.sensor.validate()),
            ("terrain", scenario.terrain.validate()),
            ("detection", scenario.detection.validate()),
        ];
        for (section, result) in checks {
            if let Err(e) = result {
                return Err(match e {
                    Error::InvalidParameter { field, reason } => Error::Config {
                        path: format!("{section}.{field}"),
                        message: reason,
                    },
                    other => other,
                });
            }
        }
        scenario.layout.validate(scenario.sensor.tip_radius)
    }

    pub fn scenario(&self) -> Scenario {
        let mut s = Scenario::new(self.robot.clone(), self.sensor.clone(), self.terrain.clone());
        if let Some(layout) = &self.layout {
            s.layout = layout.clone();
        }
        if let Some(pose) = self.start_pose {
            s.start_pose = pose;
        }
        s.detection = self.detection.clone();
        s.mm_to_px = self.mm_to_px;
        s
    }
}

fn config_error<E: std::fmt::Display>(e: serde_path_to_error::Error<E>) -> Error {
    let mut path = e.path().to_string();
    let message = e.inner().to_string();
    // a missing field is reported at its parent; name the field itself
    if let Some(rest) = message.split("missing field `").nth(1) {
        if let Some(field) = rest.split('`').next() {
            path = if path == "." || path.is_empty() {
                field.to_owned()
            } else {
                format!("{path}.{field}")
            };
        }
    }
    Error::Config { path, message }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub footholds: usize,
    pub mean_abs_displacement: f64,
    pub max_abs_displacement: f64,
    pub total_taps: usize,
    pub arcs: usize,
    pub retrains: usize,
    pub searches: usize,
    pub end_reason: EndReason,
    /// Finished every iteration with every foothold supported.
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Over successful runs; `None` when there are none.
    pub mean_abs_displacement: Option<f64>,
    pub max_abs_displacement: Option<f64>,
    pub median_taps: Option<f64>,
    pub median_arcs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub runs: Vec<RunMetrics>,
    pub aggregate: AggregateMetrics,
}

/// Target signed edge distance: the beam centre line, or the safe offset's
/// arc length for the table.
pub fn displacement_target(log: &TrajectoryLog) -> Result<f64> {
    let header = log.header().ok_or_else(|| Error::Parse {
        line: 1,
        message: "log has no header record".into(),
    })?;
    Ok(match &header.scenario.terrain {
        Terrain::Beam(b) => 0.5 * b.width,
        Terrain::Table(_) => {
            header.scenario.robot.hip_radius * header.config.safe_offset.to_radians()
        }
    })
}

pub fn run_metrics(log: &TrajectoryLog) -> Result<RunMetrics> {
    let target = displacement_target(log)?;
    let seed = log.header().map_or(0, |h| h.seed);
    let footholds = log.footholds();
    let displacements: Vec<f64> = footholds
        .iter()
        .map(|f| (f.signed_edge_distance - target).abs())
        .collect();
    let end_reason = log.end().map_or(EndReason::Error, |e| e.reason);
    let mean = if displacements.is_empty() {
        0.0
    } else {
        displacements.iter().sum::<f64>() / displacements.len() as f64
    };
    Ok(RunMetrics {
        seed,
        footholds: footholds.len(),
        mean_abs_displacement: mean,
        max_abs_displacement: displacements.iter().copied().fold(0.0, f64::max),
        total_taps: log.total_taps(),
        arcs: log.arcs().len(),
        retrains: log.steps().filter(|s| s.retrained).count(),
        searches: log.steps().filter(|s| s.searched).count(),
        end_reason,
        completed: end_reason == EndReason::Completed && footholds.iter().all(|f| f.supported),
    })
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

pub fn compute_metrics(logs: &[TrajectoryLog]) -> Result<MetricsReport> {
    let runs = logs.iter().map(run_metrics).collect::<Result<Vec<_>>>()?;
    let ok: Vec<&RunMetrics> = runs.iter().filter(|r| r.completed).collect();
    let aggregate = AggregateMetrics {
        runs: runs.len(),
        successes: ok.len(),
        success_rate: if runs.is_empty() {
            0.0
        } else {
            ok.len() as f64 / runs.len() as f64
        },
        mean_abs_displacement: (!ok.is_empty()).then(|| {
            ok.iter().map(|r| r.mean_abs_displacement).sum::<f64>() / ok.len() as f64
        }),
        max_abs_displacement: ok.iter().map(|r| r.max_abs_displacement).reduce(f64::max),
        median_taps: median(ok.iter().map(|r| r.total_taps as f64).collect()),
        median_arcs: median(ok.iter().map(|r| r.arcs as f64).collect()),
    };
    Ok(MetricsReport { runs, aggregate })
}

/// Parse JSON-lines log text; see [`TrajectoryLog::from_jsonl`].
pub fn parse_log(text: &str) -> Result<TrajectoryLog> {
    TrajectoryLog::from_jsonl(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Trajectory,
    Dissimilarity,
    DisplacementBar,
}

impl std::str::FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trajectory" => Ok(Self::Trajectory),
            "dissimilarity" => Ok(Self::Dissimilarity),
            "displacement-bar" => Ok(Self::DisplacementBar),
            other => Err(Error::InvalidParameter {
                field: "kind",
                reason: format!("unknown plot kind {other:?}"),
            }),
        }
    }
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Trajectory => "trajectory",
            Self::Dissimilarity => "dissimilarity",
            Self::DisplacementBar => "displacement-bar",
        }
    }
}

fn arc_role(purpose: ArcPurpose) -> &'static str {
    match purpose {
        ArcPurpose::Init => "init_arc",
        ArcPurpose::Retrain => "retrain_arc",
        ArcPurpose::Search => "search_arc",
    }
}

/// CSV for external plotting.
pub fn emit_plot_data(log: &TrajectoryLog, kind: PlotKind) -> Result<String> {
    let mut out = String::new();
    match kind {
        PlotKind::Trajectory => {
            out.push_str("iter,role,x_mm,y_mm\n");
            for record in &log.records {
                match record {
                    LogRecord::Init(init) => {
                        for p in &init.arc.points {
                            writeln!(out, "0,{},{},{}", arc_role(init.arc.purpose), p.x, p.y).ok();
                        }
                        let f = init.foothold.point;
                        writeln!(out, "0,foothold,{},{}", f.x, f.y).ok();
                    }
                    LogRecord::Step(step) => {
                        let i = step.iteration;
                        for (role, tap) in [("tap1", &step.tap1), ("tap2", &step.tap2)] {
                            let p = tap.world_point;
                            writeln!(out, "{i},{role},{},{}", p.x, p.y).ok();
                        }
                        for arc in &step.arcs {
                            for p in &arc.points {
                                writeln!(out, "{i},{},{},{}", arc_role(arc.purpose), p.x, p.y).ok();
                            }
                        }
                        let f = step.foothold.point;
                        writeln!(out, "{i},foothold,{},{}", f.x, f.y).ok();
                    }
                    _ => {}
                }
            }
        }
        PlotKind::Dissimilarity => {
            out.push_str("arc_id,purpose,hip_angle,dissimilarity,label\n");
            for arc in log.arcs() {
                for ((a, d), l) in arc.hip_angles.iter().zip(&arc.dissimilarities).zip(&arc.labels) {
                    writeln!(out, "{},{},{a},{d},{l}", arc.arc_id, arc_role(arc.purpose)).ok();
                }
            }
        }
        PlotKind::DisplacementBar => {
            let target = displacement_target(log)?;
            let limit = target;
            out.push_str("foothold,displacement_mm,lower_limit_mm,upper_limit_mm\n");
            for (i, f) in log.footholds().iter().enumerate() {
                let d = f.signed_edge_distance - target;
                writeln!(out, "{i},{d},{},{limit}", -limit).ok();
            }
        }
    }
    Ok(out)
}

/// Foothold table: one row per planted foot, initial foothold as iteration 0.
pub fn foothold_csv(log: &TrajectoryLog) -> String {
    let mut out = String::from("iteration,x,y,signed_edge_distance,retrained\n");
    if let Some(init) = log.init() {
        let f = &init.foothold;
        writeln!(out, "0,{},{},{},true", f.point.x, f.point.y, f.signed_edge_distance).ok();
    }
    for s in log.steps() {
        let f = &s.foothold;
        writeln!(
            out,
            "{},{},{},{},{}",
            s.iteration, f.point.x, f.point.y, f.signed_edge_distance, s.retrained
        )
        .ok();
    }
    out
}

/// Logs and metrics of a finished experiment.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub logs: Vec<TrajectoryLog>,
    pub report: MetricsReport,
}

impl ExperimentOutput {
    /// Every run failed (fell, lost the edge or errored).
    pub fn all_failed(&self) -> bool {
        self.report.aggregate.successes == 0
    }
}

/// Run every seed (concurrently) and, when `out_dir` is given, write
/// `seed_<n>.jsonl`, `seed_<n>_footholds.csv`, `seed_<n>_dissimilarity.csv`
/// and `metrics.json` into it.
pub fn run_experiment(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentOutput> {
    config.validate()?;
    let scenario = config.scenario();
    let logs: Vec<TrajectoryLog> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .seeds
            .iter()
            .map(|&seed| {
                let scenario = &scenario;
                scope.spawn(move || run(&config.controller, scenario, seed))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    });
    let report = compute_metrics(&logs)?;

    if let Some(dir) = out_dir.or(config.output_dir.as_deref()) {
        fs::create_dir_all(dir)?;
        for (seed, log) in config.seeds.iter().zip(&logs) {
            fs::write(dir.join(format!("seed_{seed}.jsonl")), log.to_jsonl()?)?;
            fs::write(dir.join(format!("seed_{seed}_footholds.csv")), foothold_csv(log))?;
            fs::write(
                dir.join(format!("seed_{seed}_dissimilarity.csv")),
                emit_plot_data(log, PlotKind::Dissimilarity)?,
            )?;
        }
        fs::write(
            dir.join("metrics.json"),
            serde_json::to_string_pretty(&report)? + "\n",
        )?;
    }
    Ok(ExperimentOutput { logs, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{EndRecord, Foothold, InitRecord, RunHeader};
    use crate::geometry::Point2;

    fn synthetic_log(sds: &[f64], steps_taps: &[usize]) -> TrajectoryLog {
        let real = run(&ControllerConfig::default(), &Scenario::beam(), 0);
        let mut log = TrajectoryLog::default();
        log.push(LogRecord::Header(real.header().unwrap().clone()));
        let foothold = |sd: f64| Foothold {
            hip_angle: 0.0,
            point: Point2::new(0.0, sd),
            signed_edge_distance: sd,
            supported: sd >= 0.0,
        };
        let mut init: InitRecord = real.init().unwrap().clone();
        init.foothold = foothold(sds[0]);
        log.push(LogRecord::Init(init));
        let template = real.steps().next().unwrap().clone();
        for (i, (&sd, &taps)) in sds[1..].iter().zip(steps_taps).enumerate() {
            let mut s = template.clone();
            s.iteration = i + 1;
            s.foothold = foothold(sd);
            s.taps = taps;
            if taps == 2 {
                s.arcs.clear();
            }
            log.push(LogRecord::Step(s));
        }
        log.push(LogRecord::End(EndRecord {
            reason: EndReason::Completed,
            iterations: sds.len() - 1,
            message: None,
        }));
        log
    }

    #[test]
    fn displacement_arithmetic() {
        let log = synthetic_log(&[14.0, 12.0, 16.0], &[2, 2]);
        let m = run_metrics(&log).unwrap();
        assert!((m.mean_abs_displacement - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.max_abs_displacement, 2.0);
    }

    #[test]
    fn tap_counting() {
        let mut taps = vec![2; 8];
        taps.push(33);
        let sds = vec![14.0; 10];
        let log = synthetic_log(&sds, &taps);
        assert_eq!(run_metrics(&log).unwrap().total_taps, 31 + 16 + 33);
        let log = synthetic_log(&sds[..9], &taps[..8]);
        assert_eq!(run_metrics(&log).unwrap().total_taps, 31 + 16);
    }

    #[test]
    fn header_required() {
        let mut log = synthetic_log(&[14.0], &[]);
        log.records.retain(|r| !matches!(r, LogRecord::Header(RunHeader { .. })));
        assert!(matches!(run_metrics(&log), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_tolerance_names_path() {
        let err = ExperimentConfig::from_str("seeds = [1]\n[controller]\nsafe_offset = 7.0\n");
        match err {
            Err(Error::Config { path, .. }) => assert_eq!(path, "controller.tolerance"),
            other => panic!("{other:?}"),
        }
        let err = ExperimentConfig::from_str(r#"{"controller": {"max_iterations": 3}}"#);
        assert!(matches!(err, Err(Error::Config { path, .. }) if path == "controller.tolerance"));
    }

    #[test]
    fn bad_values_name_path() {
        let err = ExperimentConfig::from_str("[controller]\ntolerance = 3.0\n[robot]\nhip_radius = -1.0\n");
        assert!(matches!(err, Err(Error::Config { path, .. }) if path == "robot.hip_radius"));
        let err = ExperimentConfig::from_str("seeds = []\n[controller]\ntolerance = 3.0\n");
        assert!(matches!(err, Err(Error::Config { path, .. }) if path == "seeds"));
        let err = ExperimentConfig::from_str("[controller]\ntolerance = 3.0\nbogus = 1\n");
        assert!(matches!(err, Err(Error::Config { .. })));
    }

    #[test]
    fn toml_sections_parse() {
        let text = r#"
seeds = [3, 4]
[terrain]
kind = "table"
radius = 590.0
[robot]
step_length = 160.0
[controller]
tolerance = 3.0
max_iterations = 12
[controller.arc]
num_taps = 31
"#;
        let c = ExperimentConfig::from_str(text).unwrap();
        assert_eq!(c.seeds, vec![3, 4]);
        assert!(matches!(c.terrain, Terrain::Table(_)));
        assert_eq!(c.robot.step_length, 160.0);
        assert_eq!(c.robot.hip_radius, 115.0);
    }

    #[test]
    fn plot_headers() {
        let log = run(&ControllerConfig::default(), &Scenario::beam(), 2);
        let t = emit_plot_data(&log, PlotKind::Trajectory).unwrap();
        assert!(t.starts_with("iter,role,x_mm,y_mm\n"));
        let bar = emit_plot_data(&log, PlotKind::DisplacementBar).unwrap();
        assert!(bar.lines().nth(1).unwrap().ends_with(",-14,14"));
        let d = emit_plot_data(&log, PlotKind::Dissimilarity).unwrap();
        // minimum row of the init arc carries a label near zero
        let init = log.init().unwrap();
        let row = d.lines().nth(1 + init.arc.min_index).unwrap();
        let label: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(label.abs() <= 0.5 * 1.0 + 1e-12);
    }
}
