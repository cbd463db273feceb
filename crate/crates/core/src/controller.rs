//! High-level contour following with online learning.
//!
//! Initialisation taps one arc, picks the reference tap, self-labels the arc
//! and fits the model. Each step then taps where the edge would be if the
//! robot had walked perfectly in line, moves by the predicted displacement
//! and taps again. A second prediction outside the tolerance means the model
//! is wrong: a fresh arc is collected around the foot, aligned to the
//! reference and added to the model. The foot is planted `safe_offset`
//! degrees inside the located edge and the body turns toward it and steps.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    apply_actuation_noise, foot_position, seeded_rng, turn_and_step, ArcSpec, Point2, Pose2D,
    RobotParams,
};
use crate::perception::{
    align_arc, select_reference, Alignment, FeatureVector, GpConfig, GpModel, Prediction,
    ReferenceOptions, ReferenceTap,
};
use crate::sensor::{simulate_tap, PinLayout, SensorParams, TapFrame};
use crate::terrain::Terrain;
use crate::vision::{self, DetectionParams, PixelMapping, DEFAULT_MM_TO_PX};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    #[serde(default = "default_extent_growth")]
    pub extent_growth: f64,
}

fn default_max_sweeps() -> usize {
    3
}
fn default_extent_growth() -> f64 {
    1.5
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_sweeps: default_max_sweeps(),
            extent_growth: default_extent_growth(),
        }
    }
}

/// Controller settings. `tolerance` has no serde default: a config file must
/// state it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    /// Retrain when the verification tap's |prediction| exceeds this, degrees.
    pub tolerance: f64,
    /// Hip-angle offset from the located edge toward the support, degrees.
    #[serde(default = "default_safe_offset")]
    pub safe_offset: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub arc: ArcSpec,
    #[serde(default)]
    pub search: SearchConfig,
    /// When false, every prediction is 0 and the model never retrains.
    #[serde(default = "default_true")]
    pub sensing: bool,
    /// When false the model is never updated after initialisation.
    #[serde(default = "default_true")]
    pub retrain: bool,
    #[serde(default)]
    pub use_image_pipeline: bool,
    #[serde(default)]
    pub reference: ReferenceOptions,
    #[serde(default)]
    pub gp: GpConfig,
    /// Commanded single taps are clamped to +-this hip angle, degrees.
    #[serde(default = "default_max_hip_angle")]
    pub max_hip_angle: f64,
}

fn default_safe_offset() -> f64 {
    7.0
}
fn default_max_iterations() -> usize {
    10
}
fn default_true() -> bool {
    true
}
fn default_max_hip_angle() -> f64 {
    75.0
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            tolerance: 3.0,
            safe_offset: default_safe_offset(),
            max_iterations: default_max_iterations(),
            arc: ArcSpec::default(),
            search: SearchConfig::default(),
            sensing: true,
            retrain: true,
            use_image_pipeline: false,
            reference: ReferenceOptions::default(),
            gp: GpConfig::default(),
            max_hip_angle: default_max_hip_angle(),
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                field: "tolerance",
                reason: "must be > 0".into(),
            });
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter {
                field: "max_iterations",
                reason: "must be >= 1".into(),
            });
        }
        if !(self.search.extent_growth > 1.0) {
            return Err(Error::InvalidParameter {
                field: "extent_growth",
                reason: "must be > 1".into(),
            });
        }
        self.arc.validate()
    }

    /// Retrain trigger on the verification tap's prediction.
    pub fn needs_retrain(&self, verification_angle: f64) -> bool {
        verification_angle.abs() > self.tolerance
    }
}

/// Everything about the simulated world a run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub robot: RobotParams,
    pub sensor: SensorParams,
    pub layout: PinLayout,
    pub terrain: Terrain,
    pub start_pose: Pose2D,
    pub detection: DetectionParams,
    pub mm_to_px: f64,
}

impl Scenario {
    pub fn new(robot: RobotParams, sensor: SensorParams, terrain: Terrain) -> Self {
        let start_pose = terrain.default_start_pose(robot.hip_radius);
        Self {
            robot,
            sensor,
            layout: PinLayout::default(),
            terrain,
            start_pose,
            detection: DetectionParams::default(),
            mm_to_px: DEFAULT_MM_TO_PX,
        }
    }

    pub fn beam() -> Self {
        Self::new(RobotParams::default(), SensorParams::default(), Terrain::beam())
    }

    pub fn table() -> Self {
        Self::new(RobotParams::default(), SensorParams::default(), Terrain::table())
    }

    pub fn validate(&self) -> Result<()> {
        self.robot.validate()?;
        self.sensor.validate()?;
        self.layout.validate(self.sensor.tip_radius)?;
        self.terrain.validate()?;
        self.detection.validate()
    }

    fn pixel_mapping(&self) -> PixelMapping {
        PixelMapping::for_image(
            self.mm_to_px,
            self.detection.image_width,
            self.detection.image_height,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcPurpose {
    Init,
    Retrain,
    Search,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcRecord {
    pub arc_id: usize,
    pub purpose: ArcPurpose,
    pub center_angle: f64,
    pub hip_angles: Vec<f64>,
    pub points: Vec<Point2>,
    pub dissimilarities: Vec<f64>,
    pub labels: Vec<f64>,
    pub min_index: usize,
    pub edge_angle: f64,
    pub boundary: bool,
    /// Labels were added to the model.
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapRecord {
    pub hip_angle: f64,
    pub world_point: Point2,
    pub contact: bool,
    pub feature: FeatureVector,
    pub predicted_angle: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Foothold {
    pub hip_angle: f64,
    pub point: Point2,
    pub signed_edge_distance: f64,
    pub supported: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub seed: u64,
    pub config: ControllerConfig,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitRecord {
    pub arc: ArcRecord,
    pub reference_index: usize,
    pub edge_angle: f64,
    pub foothold: Foothold,
    pub pose_after: Pose2D,
    pub taps: usize,
    pub model_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iteration: usize,
    pub tap1: TapRecord,
    pub tap2: TapRecord,
    pub retrained: bool,
    pub searched: bool,
    pub arcs: Vec<ArcRecord>,
    pub edge_angle: f64,
    pub foothold: Foothold,
    pub pose_after: Pose2D,
    pub taps: usize,
    pub model_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Completed,
    Fall,
    SearchExhausted,
    TrackingLost,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndRecord {
    pub reason: EndReason,
    pub iterations: usize,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Header(RunHeader),
    Init(InitRecord),
    Step(StepRecord),
    End(EndRecord),
}

/// Ordered run records; serialized as JSON lines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub records: Vec<LogRecord>,
}

impl TrajectoryLog {
    pub fn push(&mut self, record: LogRecord) {
        self.records.push(record);
    }

    pub fn header(&self) -> Option<&RunHeader> {
        self.records.iter().find_map(|r| match r {
            LogRecord::Header(h) => Some(h),
            _ => None,
        })
    }

    pub fn init(&self) -> Option<&InitRecord> {
        self.records.iter().find_map(|r| match r {
            LogRecord::Init(i) => Some(i),
            _ => None,
        })
    }

    pub fn steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Step(s) => Some(s),
            _ => None,
        })
    }

    pub fn end(&self) -> Option<&EndRecord> {
        self.records.iter().find_map(|r| match r {
            LogRecord::End(e) => Some(e),
            _ => None,
        })
    }

    /// All footholds in order, initial one first.
    pub fn footholds(&self) -> Vec<&Foothold> {
        self.init()
            .map(|i| &i.foothold)
            .into_iter()
            .chain(self.steps().map(|s| &s.foothold))
            .collect()
    }

    /// Every collected arc in order.
    pub fn arcs(&self) -> Vec<&ArcRecord> {
        self.init()
            .map(|i| &i.arc)
            .into_iter()
            .chain(self.steps().flat_map(|s| s.arcs.iter()))
            .collect()
    }

    pub fn total_taps(&self) -> usize {
        self.init().map_or(0, |i| i.taps) + self.steps().map(|s| s.taps).sum::<usize>()
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(s: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in s.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(record);
        }
        if records.is_empty() {
            return Err(Error::Parse {
                line: 0,
                message: "empty log".into(),
            });
        }
        Ok(Self { records })
    }
}

#[derive(Debug, Clone)]
pub struct ControllerState {
    pub pose: Pose2D,
    pub model: GpModel,
    pub reference: ReferenceTap,
    pub log: TrajectoryLog,
    /// Hip angle at which the edge is expected on the next step's first tap.
    pub expected_edge_angle: f64,
    pub iteration: usize,
    taps: u64,
    arcs: usize,
    rng: ChaCha8Rng,
}

impl ControllerState {
    pub fn taps(&self) -> u64 {
        self.taps
    }

    pub fn arcs_collected(&self) -> usize {
        self.arcs
    }
}

/// A sensed tap before prediction.
struct Tap {
    hip_angle: f64,
    frame: TapFrame,
    feature: FeatureVector,
}

fn tap_at(
    rng: &mut ChaCha8Rng,
    counter: &mut u64,
    pose: &Pose2D,
    scenario: &Scenario,
    config: &ControllerConfig,
    hip_angle: f64,
) -> Result<Tap> {
    let nominal = foot_position(pose, &scenario.robot, hip_angle);
    let point = apply_actuation_noise(nominal, &scenario.robot, rng.next_u64());
    let mut frame = simulate_tap(
        &scenario.layout,
        &scenario.sensor,
        &scenario.terrain,
        point,
        pose.heading + hip_angle,
        rng.next_u64(),
    );
    frame.meta.hip_angle = hip_angle;
    frame.meta.timestamp = *counter;
    *counter += 1;
    if config.use_image_pipeline {
        let mapping = scenario.pixel_mapping();
        let image = vision::render_image(
            &frame.pin_positions,
            &scenario.detection,
            &mapping,
            rng.next_u64(),
        )?;
        let centroids = vision::detect_pins(&image, &scenario.detection);
        frame.pin_positions = vision::match_pins(
            &centroids,
            &scenario.layout.rest_positions,
            &mapping,
            scenario.detection.gate_px,
        )?;
    }
    let feature = FeatureVector::from(&frame);
    Ok(Tap {
        hip_angle,
        frame,
        feature,
    })
}

fn collect_arc(
    state: &mut ControllerState,
    scenario: &Scenario,
    config: &ControllerConfig,
    arc: &ArcSpec,
) -> Result<Vec<Tap>> {
    let pose = state.pose;
    arc.angles()
        .into_iter()
        .map(|a| tap_at(&mut state.rng, &mut state.taps, &pose, scenario, config, a))
        .collect()
}

fn arc_pairs(taps: &[Tap]) -> Vec<(f64, FeatureVector)> {
    taps.iter()
        .map(|t| (t.hip_angle, t.feature.clone()))
        .collect()
}

fn arc_record(
    arc_id: usize,
    purpose: ArcPurpose,
    spec: &ArcSpec,
    taps: &[Tap],
    alignment: &Alignment,
    used: bool,
) -> ArcRecord {
    ArcRecord {
        arc_id,
        purpose,
        center_angle: spec.center_angle,
        hip_angles: taps.iter().map(|t| t.hip_angle).collect(),
        points: taps.iter().map(|t| t.frame.meta.world_point).collect(),
        dissimilarities: alignment.dissimilarities.clone(),
        labels: alignment.labels().collect(),
        min_index: alignment.min_index,
        edge_angle: alignment.edge_angle,
        boundary: alignment.boundary,
        used,
    }
}

fn place_and_step(
    state: &mut ControllerState,
    scenario: &Scenario,
    config: &ControllerConfig,
    edge_angle: f64,
) -> Result<Foothold> {
    let hip_angle = edge_angle + config.safe_offset;
    let nominal = foot_position(&state.pose, &scenario.robot, hip_angle);
    let point = apply_actuation_noise(nominal, &scenario.robot, state.rng.next_u64());
    let signed_edge_distance = scenario.terrain.signed_edge_distance(point);
    let supported = scenario
        .terrain
        .is_supported(point, scenario.sensor.tip_radius);
    state.pose = turn_and_step(&state.pose, &scenario.robot, point, state.rng.next_u64())?;
    // straight walking keeps the edge at the same angle relative to the foothold
    state.expected_edge_angle = edge_angle - hip_angle;
    Ok(Foothold {
        hip_angle,
        point,
        signed_edge_distance,
        supported,
    })
}

/// Tap an arc, choose the reference, label, fit, and plant the first foothold.
pub fn initialize(config: &ControllerConfig, scenario: &Scenario, seed: u64) -> Result<ControllerState> {
    let mut log = TrajectoryLog::default();
    log.push(LogRecord::Header(RunHeader {
        seed,
        config: config.clone(),
        scenario: scenario.clone(),
    }));
    initialize_with_log(config, scenario, seed, log)
}

fn initialize_with_log(
    config: &ControllerConfig,
    scenario: &Scenario,
    seed: u64,
    log: TrajectoryLog,
) -> Result<ControllerState> {
    config.validate()?;
    scenario.validate()?;
    let mut state = ControllerState {
        pose: scenario.start_pose,
        model: GpModel::new(config.gp.clone()),
        // placeholder until the arc is in
        reference: ReferenceTap {
            feature: FeatureVector(Vec::new()),
            source: crate::perception::TapSource {
                arc_id: 0,
                tap_index: 0,
            },
        },
        log,
        expected_edge_angle: 0.0,
        iteration: 0,
        taps: 0,
        arcs: 0,
        rng: seeded_rng(seed),
    };

    let arc_spec = config.arc;
    let taps = collect_arc(&mut state, scenario, config, &arc_spec)?;
    let arc_id = state.arcs;
    state.arcs += 1;
    let pairs = arc_pairs(&taps);
    let rest = FeatureVector(
        scenario
            .layout
            .rest_positions
            .iter()
            .flat_map(|p| [p.x, p.y])
            .collect(),
    );
    state.reference = select_reference(&pairs, &rest, arc_id, &config.reference)?;
    let alignment = align_arc(&pairs, &state.reference)?;
    state.model = GpModel::with_training(config.gp.clone(), alignment.labeled.clone()).fit()?;
    let edge_angle = alignment.edge_angle;
    let record = arc_record(arc_id, ArcPurpose::Init, &arc_spec, &taps, &alignment, true);

    let foothold = place_and_step(&mut state, scenario, config, edge_angle)?;
    let init = InitRecord {
        arc: record,
        reference_index: state.reference.source.tap_index,
        edge_angle,
        foothold,
        pose_after: state.pose,
        taps: taps.len(),
        model_size: state.model.len(),
    };
    state.log.push(LogRecord::Init(init));
    Ok(state)
}

fn predict(state: &ControllerState, config: &ControllerConfig, tap: &Tap) -> Result<Prediction> {
    if config.sensing {
        state.model.predict(&tap.feature)
    } else {
        Ok(Prediction {
            angle: 0.0,
            std: 0.0,
        })
    }
}

fn tap_record(tap: &Tap, p: Prediction) -> TapRecord {
    TapRecord {
        hip_angle: tap.hip_angle,
        world_point: tap.frame.meta.world_point,
        contact: tap.frame.contact_flag,
        feature: tap.feature.clone(),
        predicted_angle: p.angle,
        std: p.std,
    }
}

/// Collect an arc centred on `center`, align it and, if the minimum is
/// interior, add it to the model and return the edge angle. A minimum at
/// either arc end yields `EdgeLost`; the arc record is appended either way.
pub fn relocate_edge(
    state: &mut ControllerState,
    scenario: &Scenario,
    config: &ControllerConfig,
    spec: &ArcSpec,
    purpose: ArcPurpose,
    arcs: &mut Vec<ArcRecord>,
) -> Result<f64> {
    let taps = collect_arc(state, scenario, config, spec)?;
    let arc_id = state.arcs;
    state.arcs += 1;
    let alignment = align_arc(&arc_pairs(&taps), &state.reference)?;
    let usable = !alignment.boundary;
    arcs.push(arc_record(arc_id, purpose, spec, &taps, &alignment, usable));
    if !usable {
        return Err(Error::EdgeLost {
            hip_angle: spec.angles()[alignment.min_index],
        });
    }
    state.model = state.model.update(&alignment.labeled)?;
    Ok(alignment.edge_angle)
}

/// Outcome of an edge search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub edge_angle: f64,
    /// Index of the successful sweep; 0 is the unwidened arc.
    pub sweep: usize,
    pub arcs: Vec<ArcRecord>,
}

/// Sweep successively wider arcs centred on `center` until the
/// dissimilarity minimum is interior. Sweep 0 uses the configured arc,
/// sweep `k` widens it by `extent_growth^k`.
pub fn search_edge(
    state: &mut ControllerState,
    scenario: &Scenario,
    config: &ControllerConfig,
    center: f64,
) -> Result<SearchOutcome> {
    search_from(state, scenario, config, center, 0)
}

fn search_from(
    state: &mut ControllerState,
    scenario: &Scenario,
    config: &ControllerConfig,
    center: f64,
    first_sweep: usize,
) -> Result<SearchOutcome> {
    let mut arcs = Vec::new();
    for sweep in first_sweep..=config.search.max_sweeps {
        let half = config.arc.half_extent * config.search.extent_growth.powi(sweep as i32);
        let spec = ArcSpec {
            center_angle: center,
            ..config.arc
        }
        .widened(half);
        match relocate_edge(state, scenario, config, &spec, ArcPurpose::Search, &mut arcs) {
            Ok(edge_angle) => {
                return Ok(SearchOutcome {
                    edge_angle,
                    sweep,
                    arcs,
                })
            }
            Err(Error::EdgeLost { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    state.log.push(LogRecord::End(EndRecord {
        reason: EndReason::SearchExhausted,
        iterations: state.iteration,
        message: Some(format!("{} arcs swept", arcs.len())),
    }));
    Err(Error::SearchExhausted {
        sweeps: config.search.max_sweeps,
    })
}

/// One iteration of the main loop. The returned record is also appended to
/// the state's log.
pub fn control_step(
    state: &mut ControllerState,
    scenario: &Scenario,
    config: &ControllerConfig,
) -> Result<StepRecord> {
    let taps_before = state.taps;
    let pose = state.pose;
    let clamp = |a: f64| a.clamp(-config.max_hip_angle, config.max_hip_angle);

    let a1 = clamp(state.expected_edge_angle);
    let tap1 = tap_at(&mut state.rng, &mut state.taps, &pose, scenario, config, a1)?;
    let p1 = predict(state, config, &tap1)?;

    let a2 = clamp(a1 - p1.angle);
    let tap2 = tap_at(&mut state.rng, &mut state.taps, &pose, scenario, config, a2)?;
    let p2 = predict(state, config, &tap2)?;

    let retrained = config.sensing && config.retrain && config.needs_retrain(p2.angle);
    let mut arcs = Vec::new();
    let mut searched = false;
    let edge_angle = if retrained {
        let spec = ArcSpec {
            center_angle: a2,
            ..config.arc
        };
        match relocate_edge(state, scenario, config, &spec, ArcPurpose::Retrain, &mut arcs) {
            Ok(edge) => edge,
            Err(Error::EdgeLost { .. }) => {
                searched = true;
                let outcome = search_from(state, scenario, config, a2, 1)?;
                arcs.extend(outcome.arcs);
                outcome.edge_angle
            }
            Err(e) => return Err(e),
        }
    } else {
        a2
    };

    let foothold = place_and_step(state, scenario, config, edge_angle)?;
    state.iteration += 1;
    let record = StepRecord {
        iteration: state.iteration,
        tap1: tap_record(&tap1, p1),
        tap2: tap_record(&tap2, p2),
        retrained,
        searched,
        arcs,
        edge_angle,
        foothold,
        pose_after: state.pose,
        taps: (state.taps - taps_before) as usize,
        model_size: state.model.len(),
    };
    state.log.push(LogRecord::Step(record.clone()));
    Ok(record)
}

/// Initialise and iterate until `max_iterations`, a fall, or a failure.
/// Terminal events are logged; the log is always returned.
pub fn run(config: &ControllerConfig, scenario: &Scenario, seed: u64) -> TrajectoryLog {
    let mut header_log = TrajectoryLog::default();
    header_log.push(LogRecord::Header(RunHeader {
        seed,
        config: config.clone(),
        scenario: scenario.clone(),
    }));

    let mut state = match initialize_with_log(config, scenario, seed, header_log.clone()) {
        Ok(s) => s,
        Err(e) => {
            header_log.push(end_for_error(&e, 0));
            return header_log;
        }
    };
    if !state.log.init().is_some_and(|i| i.foothold.supported) {
        state.log.push(LogRecord::End(EndRecord {
            reason: EndReason::Fall,
            iterations: 0,
            message: None,
        }));
        return state.log;
    }

    while state.iteration < config.max_iterations {
        match control_step(&mut state, scenario, config) {
            Ok(record) if !record.foothold.supported => {
                state.log.push(LogRecord::End(EndRecord {
                    reason: EndReason::Fall,
                    iterations: state.iteration,
                    message: None,
                }));
                return state.log;
            }
            Ok(_) => {}
            Err(Error::SearchExhausted { .. }) => return state.log,
            Err(e) => {
                let end = end_for_error(&e, state.iteration);
                state.log.push(end);
                return state.log;
            }
        }
    }
    state.log.push(LogRecord::End(EndRecord {
        reason: EndReason::Completed,
        iterations: state.iteration,
        message: None,
    }));
    state.log
}

fn end_for_error(e: &Error, iterations: usize) -> LogRecord {
    let reason = match e {
        Error::TrackingLost { .. } => EndReason::TrackingLost,
        Error::SearchExhausted { .. } => EndReason::SearchExhausted,
        _ => EndReason::Error,
    };
    LogRecord::End(EndRecord {
        reason,
        iterations,
        message: Some(e.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_beam() -> Scenario {
        Scenario::new(
            RobotParams::noise_free(),
            SensorParams::noise_free(),
            Terrain::beam(),
        )
    }

    #[test]
    fn init_plants_near_beam_center() {
        let scenario = quiet_beam();
        let state = initialize(&ControllerConfig::default(), &scenario, 1).unwrap();
        assert_eq!(state.model.len(), 31);
        let init = state.log.init().unwrap();
        let sd = init.foothold.signed_edge_distance;
        assert!((sd - 14.0).abs() < 4.0, "{sd}");
        assert!(init.foothold.supported);
    }

    #[test]
    fn init_on_full_support_has_no_transition() {
        let mut scenario = quiet_beam();
        scenario.terrain = Terrain::Beam(crate::terrain::BeamTerrain {
            width: 2000.0,
            origin: Point2::new(0.0, -1000.0),
            ..Default::default()
        });
        let err = initialize(&ControllerConfig::default(), &scenario, 1);
        assert!(matches!(err, Err(Error::NoTransition { .. })));
    }

    #[test]
    fn init_is_deterministic() {
        let scenario = Scenario::beam();
        let a = initialize(&ControllerConfig::default(), &scenario, 9).unwrap();
        let b = initialize(&ControllerConfig::default(), &scenario, 9).unwrap();
        assert_eq!(a.log.to_jsonl().unwrap(), b.log.to_jsonl().unwrap());
        assert_eq!(a.pose, b.pose);
    }

    #[test]
    fn retrain_trigger_is_strict() {
        let c = ControllerConfig::default();
        assert!(!c.needs_retrain(3.0));
        assert!(!c.needs_retrain(-3.0));
        assert!(c.needs_retrain(3.000_001));
        assert!(c.needs_retrain(-7.5));
    }

    #[test]
    fn log_round_trip_and_parse_errors() {
        let log = run(&ControllerConfig::default(), &Scenario::beam(), 3);
        let text = log.to_jsonl().unwrap();
        assert_eq!(TrajectoryLog::from_jsonl(&text).unwrap(), log);
        assert!(matches!(
            TrajectoryLog::from_jsonl(""),
            Err(Error::Parse { .. })
        ));
        let bad = format!("{}not json\n", text);
        let line = text.lines().count() + 1;
        assert!(matches!(
            TrajectoryLog::from_jsonl(&bad),
            Err(Error::Parse { line: l, .. }) if l == line
        ));
    }
}
