//! Scenario files and result serialization.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "name": "two pursuers",
//!   "target": { "x": 0, "y": 0 },
//!   "pursuers": [
//!     { "id": 1, "x": 100, "y": 0, "speed": 50, "lead_angle_deg": 30 },
//!     { "id": 2, "x": 0, "y": 150, "speed": 40, "heading_deg": -100 }
//!   ],
//!   "edge_sets": { "ring": [[1, 2], [2, 1]] },
//!   "graphs": [
//!     { "time": 0, "edges": "ring" },
//!     { "time": 0.5, "edges": [[2, 1]], "kind": "disconnected",
//!       "window": { "bound": "min_ttilde", "restore": "ring" } }
//!   ],
//!   "events": [
//!     { "time": 1.0, "add": { "id": 3, "x": 50, "y": 50, "speed": 30,
//!                              "lead_angle_deg": 40, "edges": [[1, 3], [3, 2]] } }
//!   ],
//!   "config": { "dt": 0.001, "delta_factor": 0.7 }
//! }
//! ```
//!
//! `edges` is either a list of `[from, to]` pairs (from senses to), the name
//! of an entry in `edge_sets`, or `"complete"`. Window bounds are
//! `min_ttilde`, `sink_ttilde` or `fixed` (with `seconds`).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, PursuerState, TargetState};
use crate::graph::Digraph;
use crate::guidance::Regime;
use crate::monitor::MonitorVerdict;
use crate::sim::{PursuerSample, SimulationConfig, SimulationResult, TrajectoryRecord};
use crate::topology::{
    DeltaBound, DisconnectWindow, GraphKind, NodeEvent, ScheduleEntry, TopologySchedule,
};
use crate::PursuerId;

pub const TRAJECTORY_SCHEMA: &str = "salvo-trajectory/v1";
pub const EVENTS_SCHEMA: &str = "salvo-events/v1";
pub const SUMMARY_SCHEMA: &str = "salvo-summary/v1";

pub const TRAJECTORY_HEADER: [&str; 10] = [
    "time",
    "pursuer_id",
    "x",
    "y",
    "gamma",
    "range",
    "theta",
    "t_tilde",
    "accel",
    "regime",
];

pub const EVENTS_HEADER: [&str; 6] = ["time", "kind", "pursuer_id", "from", "to", "detail"];

// ---------------------------------------------------------------------------
// file schema

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub target: TargetSpec,
    pub pursuers: Vec<PursuerSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub edge_sets: BTreeMap<String, Vec<[u32; 2]>>,
    pub graphs: Vec<GraphSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventSpec>,
    #[serde(default)]
    pub config: ConfigSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PursuerSpec {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lead_angle_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgesSpec {
    Named(String),
    List(Vec<[u32; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub time: f64,
    pub edges: EdgesSpec,
    #[serde(default = "auto_kind", skip_serializing_if = "is_auto")]
    pub kind: GraphKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSpec>,
}

fn auto_kind() -> GraphKind {
    GraphKind::Auto
}

fn is_auto(k: &GraphKind) -> bool {
    *k == GraphKind::Auto
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSpec {
    MinTtilde,
    SinkTtilde,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub bound: BoundSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
    pub restore: EdgesSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub add: Option<AddSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remove: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AddSpec {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lead_angle_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading_deg: Option<f64>,
    #[serde(default)]
    pub edges: Vec<[u32; 2]>,
}

/// Optional overrides of [`SimulationConfig`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lock: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lock_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb_ts: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locate_switches: Option<bool>,
}

impl ConfigSpec {
    pub fn apply(&self, mut c: SimulationConfig) -> SimulationConfig {
        if let Some(v) = self.dt {
            c.dt = v;
        }
        if let Some(v) = self.capture_radius {
            c.capture_radius = v;
        }
        if let Some(v) = self.max_time {
            c.max_time = Some(v);
        }
        if let Some(v) = self.delta_factor {
            c.delta_factor = v;
        }
        if let Some(v) = self.lock {
            c.lock_enabled = v;
        }
        if let Some(v) = self.lock_eps {
            c.lock_eps = Some(v);
        }
        if let Some(v) = self.perturb_c {
            c.perturb_c = Some(v);
        }
        if let Some(v) = self.perturb_ts {
            c.perturb_ts = Some(v);
        }
        if let Some(v) = self.locate_switches {
            c.locate_switches = v;
        }
        c
    }
}

// ---------------------------------------------------------------------------
// validated scenario

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub description: Option<String>,
    pub target: TargetState,
    pub pursuers: Vec<PursuerState>,
    pub schedule: TopologySchedule,
    pub node_events: Vec<NodeEvent>,
    pub config: ConfigSpec,
    /// Mislabelled graphs and node events that break the consensus rules.
    /// Loading still succeeds so negative fixtures can run.
    pub warnings: Vec<String>,
}

impl Scenario {
    /// Simulation settings: defaults overridden by the scenario's `config`.
    pub fn simulation_config(&self) -> SimulationConfig {
        self.config.apply(SimulationConfig::default())
    }

    /// Every pursuer id, initial and added.
    pub fn all_ids(&self) -> BTreeSet<PursuerId> {
        let mut ids: BTreeSet<_> = self.pursuers.iter().map(|p| p.id).collect();
        for e in &self.node_events {
            if let NodeEvent::Add { state, .. } = e {
                ids.insert(state.id);
            }
        }
        ids
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        build(file)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|source| Error::Parse {
            path: PathBuf::from("<inline>"),
            source,
        })?;
        build(file)
    }

    /// Serializable form. Headings are written in degrees and every graph is
    /// spelled out as an explicit edge list.
    pub fn to_file(&self) -> ScenarioFile {
        let pair = |&(a, b): &(PursuerId, PursuerId)| [a.0, b.0];
        let edges = |g: &Digraph| EdgesSpec::List(g.edges().iter().map(pair).collect());
        ScenarioFile {
            name: self.name.clone(),
            description: self.description.clone(),
            target: TargetSpec {
                x: self.target.x,
                y: self.target.y,
            },
            pursuers: self
                .pursuers
                .iter()
                .map(|p| PursuerSpec {
                    id: p.id.0,
                    x: p.x,
                    y: p.y,
                    speed: p.speed,
                    lead_angle_deg: None,
                    heading_deg: Some(round_sig(p.gamma.to_degrees())),
                })
                .collect(),
            edge_sets: BTreeMap::new(),
            graphs: self
                .schedule
                .entries()
                .iter()
                .map(|e| GraphSpec {
                    time: e.time,
                    edges: edges(&e.graph),
                    kind: e.kind,
                    window: e.window.as_ref().map(|w| WindowSpec {
                        bound: match w.bound {
                            DeltaBound::MinTtilde => BoundSpec::MinTtilde,
                            DeltaBound::SinkTtilde => BoundSpec::SinkTtilde,
                            DeltaBound::Fixed(_) => BoundSpec::Fixed,
                        },
                        seconds: match w.bound {
                            DeltaBound::Fixed(s) => Some(s),
                            _ => None,
                        },
                        restore: edges(&w.restore),
                    }),
                })
                .collect(),
            events: self
                .node_events
                .iter()
                .map(|e| match e {
                    NodeEvent::Add { time, state, edges } => EventSpec {
                        time: *time,
                        add: Some(AddSpec {
                            id: state.id.0,
                            x: state.x,
                            y: state.y,
                            speed: state.speed,
                            lead_angle_deg: None,
                            heading_deg: Some(round_sig(state.gamma.to_degrees())),
                            edges: edges.iter().map(pair).collect(),
                        }),
                        remove: None,
                    },
                    NodeEvent::Remove { time, id } => EventSpec {
                        time: *time,
                        add: None,
                        remove: Some(id.0),
                    },
                })
                .collect(),
            config: self.config.clone(),
        }
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    build(file)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&scenario.to_file()).expect("scenario serializes");
    fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn finite(field: String, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::scenario(field, format!("must be finite, got {v}")))
    }
}

fn pursuer(
    field: &str,
    id: u32,
    (x, y, speed): (f64, f64, f64),
    lead_deg: Option<f64>,
    heading_deg: Option<f64>,
    target: &TargetState,
) -> Result<PursuerState> {
    let id = PursuerId(id);
    let x = finite(format!("{field}.x"), x)?;
    let y = finite(format!("{field}.y"), y)?;
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::scenario(
            format!("{field}.speed"),
            format!("must be positive, got {speed}"),
        ));
    }
    if x == target.x && y == target.y {
        return Err(Error::scenario(field, "pursuer starts on the target"));
    }
    match (lead_deg, heading_deg) {
        (Some(l), None) => PursuerState::with_lead_angle(
            id,
            x,
            y,
            finite(format!("{field}.lead_angle_deg"), l)?.to_radians(),
            speed,
            target,
        ),
        (None, Some(h)) => PursuerState::new(
            id,
            x,
            y,
            wrap_angle(finite(format!("{field}.heading_deg"), h)?.to_radians()),
            speed,
        ),
        _ => Err(Error::scenario(
            field,
            "give exactly one of lead_angle_deg and heading_deg",
        )),
    }
}

struct EdgeResolver<'a> {
    sets: &'a BTreeMap<String, Vec<[u32; 2]>>,
    universe: &'a BTreeSet<PursuerId>,
}

impl EdgeResolver<'_> {
    fn graph(&self, field: &str, spec: &EdgesSpec) -> Result<Digraph> {
        let list = match spec {
            EdgesSpec::Named(n) if n == "complete" => {
                return Ok(Digraph::complete(self.universe.iter().copied()))
            }
            EdgesSpec::Named(n) => self.sets.get(n).ok_or_else(|| {
                Error::scenario(field, format!("unknown edge set \"{n}\""))
            })?,
            EdgesSpec::List(l) => l,
        };
        self.pairs(field, list).and_then(|edges| {
            Digraph::new(self.universe.iter().copied(), edges)
                .map_err(|e| Error::scenario(field, e.to_string()))
        })
    }

    fn pairs(&self, field: &str, list: &[[u32; 2]]) -> Result<Vec<(PursuerId, PursuerId)>> {
        list.iter()
            .map(|&[a, b]| {
                let (a, b) = (PursuerId(a), PursuerId(b));
                if !self.universe.contains(&a) || !self.universe.contains(&b) {
                    return Err(Error::scenario(
                        field,
                        Error::UnknownNode(a, b).to_string(),
                    ));
                }
                Ok((a, b))
            })
            .collect()
    }
}

fn build(file: ScenarioFile) -> Result<Scenario> {
    let target = TargetState::new(
        finite("target.x".into(), file.target.x)?,
        finite("target.y".into(), file.target.y)?,
    );
    if file.pursuers.is_empty() {
        return Err(Error::scenario("pursuers", "at least one pursuer is required"));
    }

    let mut seen = BTreeSet::new();
    let mut pursuers = Vec::new();
    for (k, p) in file.pursuers.iter().enumerate() {
        if !seen.insert(PursuerId(p.id)) {
            return Err(Error::DuplicateId(PursuerId(p.id)));
        }
        pursuers.push(pursuer(
            &format!("pursuers[{k}]"),
            p.id,
            (p.x, p.y, p.speed),
            p.lead_angle_deg,
            p.heading_deg,
            &target,
        )?);
    }

    let mut universe = seen.clone();
    for e in &file.events {
        if let Some(a) = &e.add {
            if !universe.insert(PursuerId(a.id)) {
                return Err(Error::DuplicateId(PursuerId(a.id)));
            }
        }
    }
    let edges = EdgeResolver {
        sets: &file.edge_sets,
        universe: &universe,
    };
    for (name, list) in &file.edge_sets {
        edges.pairs(&format!("edge_sets.{name}"), list)?;
    }

    let mut entries = Vec::new();
    for (k, g) in file.graphs.iter().enumerate() {
        let field = format!("graphs[{k}]");
        let time = finite(format!("{field}.time"), g.time)?;
        let graph = edges.graph(&format!("{field}.edges"), &g.edges)?;
        let window = match &g.window {
            None => None,
            Some(w) => {
                let bound = match (w.bound, w.seconds) {
                    (BoundSpec::MinTtilde, None) => DeltaBound::MinTtilde,
                    (BoundSpec::SinkTtilde, None) => DeltaBound::SinkTtilde,
                    (BoundSpec::Fixed, Some(s)) => DeltaBound::Fixed(s),
                    (BoundSpec::Fixed, None) => {
                        return Err(Error::scenario(
                            format!("{field}.window.seconds"),
                            "a fixed window needs seconds",
                        ))
                    }
                    (_, Some(_)) => {
                        return Err(Error::scenario(
                            format!("{field}.window.seconds"),
                            "seconds only applies to a fixed window",
                        ))
                    }
                };
                Some(DisconnectWindow {
                    bound,
                    restore: edges.graph(&format!("{field}.window.restore"), &w.restore)?,
                })
            }
        };
        entries.push(ScheduleEntry {
            time,
            graph,
            kind: g.kind,
            window,
        });
    }
    let schedule = TopologySchedule::new(entries)?;

    let mut node_events = Vec::new();
    let mut present = seen;
    let mut ordered: Vec<(usize, &EventSpec)> = file.events.iter().enumerate().collect();
    ordered.sort_by(|a, b| a.1.time.total_cmp(&b.1.time));
    for (k, e) in ordered {
        let field = format!("events[{k}]");
        let time = finite(format!("{field}.time"), e.time)?;
        if time < 0.0 {
            return Err(Error::scenario(format!("{field}.time"), "must be non-negative"));
        }
        match (&e.add, e.remove) {
            (Some(a), None) => {
                let state = pursuer(
                    &format!("{field}.add"),
                    a.id,
                    (a.x, a.y, a.speed),
                    a.lead_angle_deg,
                    a.heading_deg,
                    &target,
                )?;
                let list = edges.pairs(&format!("{field}.add.edges"), &a.edges)?;
                present.insert(state.id);
                node_events.push(NodeEvent::Add {
                    time,
                    state,
                    edges: list,
                });
            }
            (None, Some(id)) => {
                let id = PursuerId(id);
                if !present.remove(&id) {
                    return Err(Error::scenario(
                        format!("{field}.remove"),
                        format!("pursuer {id} is not present at t = {time}"),
                    ));
                }
                node_events.push(NodeEvent::Remove { time, id });
            }
            _ => {
                return Err(Error::scenario(
                    field,
                    "an event needs exactly one of add and remove",
                ))
            }
        }
    }

    let config = file.config;
    config
        .apply(SimulationConfig::default())
        .validate()
        .map_err(|e| Error::scenario("config", e.to_string()))?;

    let mut scenario = Scenario {
        name: file.name,
        description: file.description,
        target,
        pursuers,
        schedule,
        node_events,
        config,
        warnings: Vec::new(),
    };
    let plan = analysis::Arrivals::of(&scenario)?;
    let mut schedule = scenario.schedule.clone();
    let mut warnings =
        schedule.resolve_kinds(|t| plan.present_at(t), |t| plan.leader_at(t))?;
    scenario.schedule = schedule;
    for f in analysis::event_findings(&scenario, &plan)? {
        if !f.ok {
            warnings.push(format!("{}: {}", f.check, f.detail));
        }
    }
    scenario.warnings = warnings;
    Ok(scenario)
}

// ---------------------------------------------------------------------------
// results

/// Formats with 12 significant digits, shortest representation.
pub fn fmt_sig(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    format!("{}", round_sig(v))
}

pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_writer(path: &Path, schema: &str) -> Result<csv::Writer<fs::File>> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    writeln!(f, "# schema: {schema}").map_err(io_err(path))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(f))
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowSummary {
    pub entry: usize,
    pub bound: String,
    pub t_m: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub scenario: Option<String>,
    pub status: String,
    pub dt: f64,
    pub capture_radius: f64,
    pub steps: usize,
    pub end_time: f64,
    pub t_f: Option<f64>,
    pub spread: Option<f64>,
    pub interception_times: BTreeMap<String, f64>,
    pub capture_steps: BTreeMap<String, f64>,
    pub windows: Vec<WindowSummary>,
    pub monitors_passed: usize,
    pub monitors_failed: usize,
    pub monitors_not_applicable: usize,
    pub monitors: Vec<MonitorVerdict>,
    pub warnings: Vec<String>,
}

impl Summary {
    pub fn of(result: &SimulationResult, scenario: Option<&str>) -> Self {
        let r12 = |m: &BTreeMap<PursuerId, f64>| {
            m.iter()
                .map(|(k, &v)| (k.to_string(), round_sig(v)))
                .collect()
        };
        let count = |s| {
            result
                .monitors
                .iter()
                .filter(|m| m.status == s)
                .count()
        };
        let mut monitors = result.monitors.clone();
        for m in &mut monitors {
            m.worst = m.worst.map(round_sig);
            m.time = m.time.map(round_sig);
        }
        Summary {
            schema: SUMMARY_SCHEMA,
            scenario: scenario.map(str::to_string),
            status: serde_json::to_value(result.status)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            dt: result.dt,
            capture_radius: result.capture_radius,
            steps: result.records.len(),
            end_time: round_sig(result.records.last().map_or(0.0, |r| r.time)),
            t_f: result.t_f().map(round_sig),
            spread: result.spread().map(round_sig),
            interception_times: r12(&result.interception_times),
            capture_steps: r12(&result.capture_steps),
            windows: result
                .windows
                .iter()
                .map(|w| WindowSummary {
                    entry: w.entry,
                    bound: w.bound.clone(),
                    t_m: round_sig(w.opened_at),
                    delta: round_sig(w.delta),
                })
                .collect(),
            monitors_passed: count(crate::monitor::MonitorStatus::Pass),
            monitors_failed: count(crate::monitor::MonitorStatus::Fail),
            monitors_not_applicable: count(crate::monitor::MonitorStatus::NotApplicable),
            monitors,
            warnings: result.warnings.clone(),
        }
    }
}

/// Writes `trajectory.csv`, `events.csv` and `summary.json` into `out_dir`.
pub fn write_results(
    result: &SimulationResult,
    scenario: Option<&str>,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let traj = dir.join("trajectory.csv");
    let mut w = csv_writer(&traj, TRAJECTORY_SCHEMA)?;
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err(&traj))?;
    for rec in &result.records {
        for s in &rec.samples {
            w.write_record([
                fmt_sig(rec.time),
                s.id.to_string(),
                fmt_sig(s.x),
                fmt_sig(s.y),
                fmt_sig(s.gamma),
                fmt_sig(s.range),
                fmt_sig(s.theta),
                fmt_sig(s.t_tilde),
                fmt_sig(s.accel),
                s.regime.as_str().to_string(),
            ])
            .map_err(csv_err(&traj))?;
        }
    }
    w.flush().map_err(io_err(&traj))?;

    let events = dir.join("events.csv");
    let mut rows: Vec<(f64, [String; 6])> = Vec::new();
    for e in &result.switch_events {
        rows.push((
            e.time,
            [
                fmt_sig(e.time),
                "switch".into(),
                e.pursuer.to_string(),
                e.from.as_str().into(),
                e.to.as_str().into(),
                String::new(),
            ],
        ));
    }
    for e in &result.topology_events {
        rows.push((
            e.time,
            [
                fmt_sig(e.time),
                e.kind.clone(),
                e.pursuer.map(|p| p.to_string()).unwrap_or_default(),
                String::new(),
                String::new(),
                e.detail.clone(),
            ],
        ));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut w = csv_writer(&events, EVENTS_SCHEMA)?;
    w.write_record(EVENTS_HEADER).map_err(csv_err(&events))?;
    for (_, row) in rows {
        w.write_record(row).map_err(csv_err(&events))?;
    }
    w.flush().map_err(io_err(&events))?;

    let summary = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&Summary::of(result, scenario))
        .expect("summary serializes");
    fs::write(&summary, text + "\n").map_err(io_err(&summary))?;

    Ok(vec![traj, events, summary])
}

/// Reads `trajectory.csv` back into per-step records. Graph, leader and
/// reachability are not stored and come back as defaults.
pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Vec<TrajectoryRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let body = text
        .strip_prefix(&format!("# schema: {TRAJECTORY_SCHEMA}\n"))
        .ok_or_else(|| Error::scenario(path.display().to_string(), "missing schema line"))?;
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(Error::scenario(
            path.display().to_string(),
            "unexpected trajectory header",
        ));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::scenario(path.display().to_string(), format!("bad number {s:?}")))
    };
    let mut out: Vec<TrajectoryRecord> = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err(path))?;
        let time = num(&row[0])?;
        let sample = PursuerSample {
            id: PursuerId(row[1].parse().map_err(|_| {
                Error::scenario(path.display().to_string(), "bad pursuer id")
            })?),
            x: num(&row[2])?,
            y: num(&row[3])?,
            gamma: num(&row[4])?,
            range: num(&row[5])?,
            theta: num(&row[6])?,
            t_tilde: num(&row[7])?,
            accel: num(&row[8])?,
            regime: Regime::parse(&row[9]).ok_or_else(|| {
                Error::scenario(path.display().to_string(), format!("bad regime {:?}", &row[9]))
            })?,
        };
        match out.last_mut() {
            Some(r) if r.time == time => r.samples.push(sample),
            _ => out.push(TrajectoryRecord {
                step: out.len(),
                time,
                graph: 0,
                leader: None,
                leader_reachable: true,
                samples: vec![sample],
            }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "target": {"x": 0, "y": 0},
        "pursuers": [
            {"id": 1, "x": 100, "y": 0, "speed": 50, "lead_angle_deg": 30},
            {"id": 2, "x": 0, "y": 150, "speed": 40, "heading_deg": -100}
        ],
        "graphs": [{"time": 0, "edges": [[1, 2]]}]
    }"#;

    #[test]
    fn loads_minimal() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.pursuers.len(), 2);
        let lead = crate::geometry::lead_angle(&s.pursuers[0], &s.target).unwrap();
        assert!((lead - 30f64.to_radians()).abs() < 1e-12);
        assert!((s.pursuers[1].gamma - (-100f64).to_radians()).abs() < 1e-12);
    }

    fn rejects(text: &str, needle: &str) {
        let err = Scenario::from_json(text).unwrap_err().to_string();
        assert!(err.contains(needle), "{err:?} lacks {needle:?}");
    }

    #[test]
    fn rejections_are_specific() {
        rejects(
            &MINIMAL.replace(r#""lead_angle_deg": 30"#, r#""lead_angle_deg": 30, "heading_deg": 1"#),
            "exactly one of",
        );
        rejects(&MINIMAL.replace(r#""id": 2"#, r#""id": 1"#), "duplicate pursuer id 1");
        rejects(&MINIMAL.replace("[[1, 2]]", "[[1, 9]]"), "unknown node");
        rejects(&MINIMAL.replace(r#""speed": 40"#, r#""speed": 0"#), "pursuers[1].speed");
        rejects(&MINIMAL.replace(r#""time": 0,"#, r#""time": 1,"#), "t = 0");
        rejects(&MINIMAL.replace("\"graphs\"", "\"grahps\""), "unknown field");
        rejects(&MINIMAL.replace("[[1, 2]]", "\"ring\""), "unknown edge set");
    }

    #[test]
    fn sig_digits() {
        assert_eq!(fmt_sig(5.705418260775123), "5.70541826078");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
        assert_eq!(fmt_sig(-1.0e-20), "-0.00000000000000000001");
    }
}
