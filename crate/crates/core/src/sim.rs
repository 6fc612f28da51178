//! Fixed-step synchronous simulation.
//!
//! Each step takes one snapshot, decides for every active pursuer against it,
//! propagates all of them exactly, checks captures, then advances node events
//! and the graph schedule. A change scheduled at `t` therefore shapes the
//! decisions of the first step whose time is at least `t`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{propagate, PursuerState, TargetState};
use crate::graph::{Digraph, TtildeMap};
use crate::guidance::{
    current_leader, decide, perturbation_plan, GuidanceDecision, GuidanceOptions, Regime,
};
use crate::monitor::{self, MonitorVerdict};
use crate::scenario::Scenario;
use crate::topology::{
    validate_topology_event, EventContext, GraphKind, NodeEvent, ScheduleChange, ScheduleCursor,
    TopologyEvent, Verdict, TIME_TOL,
};
use crate::PursuerId;

const BISECTION_ITERS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub dt: f64,
    pub capture_radius: f64,
    /// `None` picks 1.5 times the latest predicted arrival plus one second.
    pub max_time: Option<f64>,
    pub lock_enabled: bool,
    /// `None` means twice the step.
    pub lock_eps: Option<f64>,
    pub perturb_c: Option<f64>,
    /// `None` means one step.
    pub perturb_ts: Option<f64>,
    pub delta_factor: f64,
    /// Locate the straight-to-circle switch inside a step instead of waiting
    /// for the next one. Turning this off together with the lock gives the
    /// raw discrete law.
    pub locate_switches: bool,
    /// Abort when an estimate exceeds this multiple of the largest initial one.
    pub divergence_factor: f64,
    pub run_monitors: bool,
    /// Tolerance for ordering monitors. `None` means twice the step.
    pub monitor_tol: Option<f64>,
    /// Tolerance on the unit-slope floor.
    pub slope_tol: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            capture_radius: 0.5,
            max_time: None,
            lock_enabled: true,
            lock_eps: None,
            perturb_c: None,
            perturb_ts: None,
            delta_factor: 0.7,
            locate_switches: true,
            divergence_factor: 10.0,
            run_monitors: true,
            monitor_tol: None,
            slope_tol: 1e-4,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.capture_radius > 0.0 && self.capture_radius.is_finite()) {
            return bad(format!(
                "capture_radius must be positive, got {}",
                self.capture_radius
            ));
        }
        if !(self.delta_factor > 0.0 && self.delta_factor < 1.0) {
            return bad(format!(
                "delta_factor must lie in (0, 1), got {}",
                self.delta_factor
            ));
        }
        if let Some(m) = self.max_time {
            if !(m > 0.0 && m.is_finite()) {
                return bad(format!("max_time must be positive, got {m}"));
            }
        }
        if let Some(e) = self.lock_eps {
            if !(e >= 0.0 && e.is_finite()) {
                return bad(format!("lock_eps must be non-negative, got {e}"));
            }
        }
        if let Some(ts) = self.perturb_ts {
            if !(ts > 0.0 && ts <= self.dt) {
                return bad(format!("perturb_ts must lie in (0, dt], got {ts}"));
            }
        }
        if let Some(c) = self.perturb_c {
            if !(c.is_finite() && c != 0.0) {
                return bad(format!("perturb_c must be finite and non-zero, got {c}"));
            }
        }
        if !(self.divergence_factor > 1.0) {
            return bad("divergence_factor must exceed 1".to_string());
        }
        Ok(())
    }

    pub fn guidance(&self) -> GuidanceOptions {
        GuidanceOptions {
            lock_enabled: self.lock_enabled,
            lock_eps: self.lock_eps.unwrap_or(2.0 * self.dt),
            perturb_c: self.perturb_c,
            perturb_ts: self.perturb_ts.unwrap_or(self.dt),
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.monitor_tol.unwrap_or(2.0 * self.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PursuerSample {
    pub id: PursuerId,
    pub x: f64,
    pub y: f64,
    pub gamma: f64,
    pub range: f64,
    pub theta: f64,
    pub t_tilde: f64,
    pub accel: f64,
    pub regime: Regime,
}

/// State at one step time plus the decision taken for the step that follows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub time: f64,
    /// Index into [`SimulationResult::graphs`].
    pub graph: usize,
    pub leader: Option<PursuerId>,
    pub leader_reachable: bool,
    pub samples: Vec<PursuerSample>,
}

impl TrajectoryRecord {
    pub fn sample(&self, id: PursuerId) -> Option<&PursuerSample> {
        self.samples.iter().find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub pursuer: PursuerId,
    pub time: f64,
    pub from: Regime,
    pub to: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyRecord {
    pub time: f64,
    pub kind: String,
    pub pursuer: Option<PursuerId>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub entry: usize,
    pub bound: String,
    /// Scheduled start of the window.
    pub opened_at: f64,
    pub delta: f64,
    pub closes_at: f64,
    pub closed_at: Option<f64>,
    pub cancelled_at: Option<f64>,
}

/// When a pursuer entered the engagement and its estimate at that moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JoinRecord {
    pub time: f64,
    pub t_tilde: f64,
}

impl JoinRecord {
    pub fn arrival(&self) -> f64 {
        self.time + self.t_tilde
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    /// Every pursuer still in the engagement was captured.
    Complete,
    /// `max_time` was reached first.
    Partial,
    /// No step was recorded.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub dt: f64,
    pub capture_radius: f64,
    pub tolerance: f64,
    pub slope_tol: f64,
    pub lock_enabled: bool,
    /// One graph schedule entry and no node events.
    pub static_topology: bool,
    pub status: RunStatus,
    pub records: Vec<TrajectoryRecord>,
    pub graphs: Vec<Digraph>,
    /// Estimated arrival: capture step time plus the estimate left at capture.
    pub interception_times: BTreeMap<PursuerId, f64>,
    /// Step time at which the capture was detected.
    pub capture_steps: BTreeMap<PursuerId, f64>,
    pub joins: BTreeMap<PursuerId, JoinRecord>,
    pub removed: BTreeMap<PursuerId, f64>,
    pub switch_events: Vec<SwitchEvent>,
    pub topology_events: Vec<TopologyRecord>,
    pub windows: Vec<WindowRecord>,
    pub warnings: Vec<String>,
    pub monitors: Vec<MonitorVerdict>,
}

impl SimulationResult {
    pub fn empty(config: &SimulationConfig) -> Self {
        Self {
            dt: config.dt,
            capture_radius: config.capture_radius,
            tolerance: config.tolerance(),
            slope_tol: config.slope_tol,
            lock_enabled: config.lock_enabled,
            static_topology: true,
            status: RunStatus::Empty,
            records: Vec::new(),
            graphs: Vec::new(),
            interception_times: BTreeMap::new(),
            capture_steps: BTreeMap::new(),
            joins: BTreeMap::new(),
            removed: BTreeMap::new(),
            switch_events: Vec::new(),
            topology_events: Vec::new(),
            windows: Vec::new(),
            warnings: Vec::new(),
            monitors: Vec::new(),
        }
    }

    /// Max minus min interception time over captured pursuers.
    pub fn spread(&self) -> Option<f64> {
        let mut it = self.interception_times.values().copied();
        let first = it.next()?;
        let (lo, hi) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Some(hi - lo)
    }

    /// Pursuer whose entry fixes the latest predicted arrival among those
    /// present at `t`; ties go to the smallest id.
    pub fn designated_leader(&self, t: f64) -> Option<(PursuerId, JoinRecord)> {
        let mut best: Option<(PursuerId, JoinRecord)> = None;
        for (&id, &j) in &self.joins {
            if j.time > t + TIME_TOL || self.removed.get(&id).is_some_and(|&r| r <= t) {
                continue;
            }
            if best.is_none_or(|(_, b)| j.arrival() > b.arrival()) {
                best = Some((id, j));
            }
        }
        best
    }

    /// Interception time of the final designated leader, else the latest capture.
    pub fn t_f(&self) -> Option<f64> {
        let end = self.records.last().map_or(0.0, |r| r.time);
        self.designated_leader(end)
            .and_then(|(id, _)| self.interception_times.get(&id).copied())
            .or_else(|| self.interception_times.values().copied().reduce(f64::max))
    }

    pub fn monitor(&self, name: &str) -> Option<&MonitorVerdict> {
        self.monitors.iter().find(|m| m.name == name)
    }

    pub fn monitors_passed(&self) -> bool {
        self.monitors.iter().all(|m| !m.failed())
    }

    /// Per-pursuer `(time, t_tilde, regime)` series.
    pub fn series(&self, id: PursuerId) -> Vec<(f64, f64, Regime)> {
        self.records
            .iter()
            .filter_map(|r| r.sample(id).map(|s| (r.time, s.t_tilde, s.regime)))
            .collect()
    }
}

struct Runner<'a> {
    scenario: &'a Scenario,
    config: &'a SimulationConfig,
    opts: GuidanceOptions,
    target: TargetState,
    states: BTreeMap<PursuerId, PursuerState>,
    present: BTreeSet<PursuerId>,
    overlay: BTreeSet<(PursuerId, PursuerId)>,
    prev: BTreeMap<PursuerId, Regime>,
    captured_step: BTreeMap<PursuerId, usize>,
    pending_events: Vec<NodeEvent>,
    baseline: f64,
    result: SimulationResult,
}

/// Runs a scenario to completion or `max_time`.
pub fn run(scenario: &Scenario, config: &SimulationConfig) -> Result<SimulationResult> {
    config.validate()?;
    let mut runner = Runner::new(scenario, config)?;
    runner.run()?;
    let mut result = runner.result;
    if config.run_monitors {
        result.monitors = monitor::evaluate_all(&result);
    }
    Ok(result)
}

impl<'a> Runner<'a> {
    fn new(scenario: &'a Scenario, config: &'a SimulationConfig) -> Result<Self> {
        let target = scenario.target;
        let states: BTreeMap<_, _> = scenario.pursuers.iter().map(|p| (p.id, *p)).collect();
        let present = states.keys().copied().collect();
        let mut pending_events = scenario.node_events.clone();
        pending_events.sort_by(|a, b| a.time().total_cmp(&b.time()));
        pending_events.reverse();

        let mut result = SimulationResult::empty(config);
        result.static_topology = scenario.schedule.is_static() && scenario.node_events.is_empty();
        result.warnings = scenario.warnings.clone();
        for p in &scenario.pursuers {
            let g = p.geometry(&target)?;
            result.joins.insert(
                p.id,
                JoinRecord {
                    time: 0.0,
                    t_tilde: g.t_tilde,
                },
            );
        }
        let baseline = result
            .joins
            .values()
            .map(|j| j.t_tilde)
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);

        Ok(Self {
            scenario,
            config,
            opts: config.guidance(),
            target,
            states,
            present,
            overlay: BTreeSet::new(),
            prev: BTreeMap::new(),
            captured_step: BTreeMap::new(),
            pending_events,
            baseline,
            result,
        })
    }

    fn max_time(&self) -> Result<f64> {
        if let Some(m) = self.config.max_time {
            return Ok(m);
        }
        let mut latest: f64 = 0.0;
        for p in &self.scenario.pursuers {
            latest = latest.max(p.geometry(&self.target)?.t_tilde);
        }
        for e in &self.scenario.node_events {
            if let NodeEvent::Add { time, state, .. } = e {
                latest = latest.max(time + state.geometry(&self.target)?.t_tilde);
            }
        }
        if !latest.is_finite() {
            return Err(Error::InvalidConfig(
                "max_time is required when a pursuer starts with the target astern".into(),
            ));
        }
        Ok(1.5 * latest + 1.0)
    }

    fn active(&self) -> Vec<PursuerId> {
        self.present
            .iter()
            .copied()
            .filter(|id| self.states[id].is_active())
            .collect()
    }

    fn effective_graph(&self, cursor: &ScheduleCursor<'_>, active: &[PursuerId]) -> Digraph {
        let keep: BTreeSet<PursuerId> = active.iter().copied().collect();
        let edges = cursor
            .graph()
            .edges()
            .iter()
            .chain(self.overlay.iter())
            .filter(|(a, b)| keep.contains(a) && keep.contains(b))
            .copied()
            .collect::<Vec<_>>();
        Digraph::new(keep, edges).expect("edges filtered to present nodes")
    }

    fn graph_index(&mut self, g: Digraph) -> usize {
        if self.result.graphs.last() != Some(&g) {
            self.result.graphs.push(g);
        }
        self.result.graphs.len() - 1
    }

    fn t_tilde_map(&self, ids: &[PursuerId]) -> Result<TtildeMap> {
        ids.iter()
            .map(|&id| Ok((id, self.states[&id].geometry(&self.target)?.t_tilde)))
            .collect()
    }

    fn run(&mut self) -> Result<()> {
        let schedule = &self.scenario.schedule;
        let mut cursor = ScheduleCursor::new(schedule);
        let dt = self.config.dt;
        let max_time = self.max_time()?;
        let max_steps = (max_time / dt).round() as usize;

        self.apply_node_events(0.0, &cursor)?;
        self.check_captures(0, 0.0, &BTreeMap::new())?;

        let initial: Vec<PursuerState> = self.active().iter().map(|id| self.states[id]).collect();
        let plan: BTreeMap<PursuerId, f64> = perturbation_plan(&initial, &self.target, &self.opts)?
            .into_iter()
            .map(|p| (p.pursuer_id, p.duration))
            .collect();

        let mut k = 0usize;
        loop {
            let t = k as f64 * dt;
            let active = self.active();
            let graph = self.effective_graph(&cursor, &active);

            let mut decisions = BTreeMap::new();
            for &id in &active {
                let d = decide(
                    id,
                    &self.states,
                    &self.target,
                    &graph,
                    &self.opts,
                    self.prev.get(&id).copied(),
                )?;
                decisions.insert(id, d);
            }
            self.push_record(k, t, graph.clone(), &decisions)?;
            if active.is_empty() || k >= max_steps {
                break;
            }
            for (&id, d) in &decisions {
                if let Some(&from) = self.prev.get(&id) {
                    if from != d.regime {
                        self.result.switch_events.push(SwitchEvent {
                            pursuer: id,
                            time: t,
                            from,
                            to: d.regime,
                        });
                    }
                }
                if d.regime == Regime::Perturbation && k > 0 {
                    self.result.warnings.push(format!(
                        "pursuer {id}: degenerate lead angle at t = {t}, perturbed mid-run"
                    ));
                }
            }

            let before = self.t_tilde_map(&active)?;
            let mut next = BTreeMap::new();
            let mut end_regime = BTreeMap::new();
            for &id in &active {
                let d = &decisions[&id];
                let s = &self.states[&id];
                let (ns, regime) = match d.regime {
                    Regime::Perturbation => {
                        let ts = if k == 0 {
                            plan.get(&id).copied().unwrap_or(self.opts.perturb_ts)
                        } else {
                            self.opts.perturb_ts
                        }
                        .min(dt);
                        let s1 = propagate(s, d.accel, ts);
                        let s2 = if dt - ts > 0.0 {
                            propagate(&s1, 0.0, dt - ts)
                        } else {
                            s1
                        };
                        (s2, Regime::Perturbation)
                    }
                    Regime::StraightLine if self.config.locate_switches => {
                        match self.locate_switch(id, &graph, &decisions)? {
                            Some(tau) => {
                                let s1 = propagate(s, 0.0, tau);
                                let a = s1.geometry(&self.target)?.a_circ;
                                let s2 = propagate(&s1, a, dt - tau);
                                self.result.switch_events.push(SwitchEvent {
                                    pursuer: id,
                                    time: t + tau,
                                    from: Regime::StraightLine,
                                    to: Regime::CircularArc,
                                });
                                (s2, Regime::CircularArc)
                            }
                            None => (propagate(s, 0.0, dt), Regime::StraightLine),
                        }
                    }
                    _ => (propagate(s, d.accel, dt), d.regime),
                };
                next.insert(id, ns);
                end_regime.insert(id, regime);
            }
            for (id, s) in next {
                self.states.insert(id, s);
            }
            self.prev.extend(end_regime.iter().map(|(&k, &v)| (k, v)));

            k += 1;
            let t_next = k as f64 * dt;
            let arcs: BTreeMap<PursuerId, f64> = active
                .iter()
                .filter(|id| end_regime[id] == Regime::CircularArc)
                .map(|&id| (id, before[&id]))
                .collect();
            self.check_captures(k, t_next, &arcs)?;
            self.check_divergence(t_next)?;
            self.apply_node_events(t_next, &cursor)?;

            let live = self.active();
            if !live.is_empty() {
                let map = self.t_tilde_map(&live)?;
                let changes = cursor.advance(t_next, &map, self.config.delta_factor)?;
                self.record_changes(changes, schedule);
            }
        }

        let remaining = self.active();
        self.result.status = if self.result.records.is_empty() {
            crate::sim::RunStatus::Empty
        } else if remaining.is_empty() {
            RunStatus::Complete
        } else {
            RunStatus::Partial
        };
        Ok(())
    }

    /// Time inside the step at which pursuer `id`, flying straight, first
    /// matches its neighbours' max. `None` if that does not happen this step.
    fn locate_switch(
        &self,
        id: PursuerId,
        graph: &Digraph,
        decisions: &BTreeMap<PursuerId, GuidanceDecision>,
    ) -> Result<Option<f64>> {
        let dt = self.config.dt;
        let me = self.states[&id];
        let nbrs: Vec<(PursuerState, f64)> = graph
            .out_neighbors(id)?
            .into_iter()
            .map(|j| (self.states[&j], decisions[&j].accel))
            .collect();
        if nbrs.is_empty() {
            return Ok(None);
        }
        let target = &self.target;
        let gap = |tau: f64| -> Result<f64> {
            let mine = propagate(&me, 0.0, tau).geometry(target)?.t_tilde;
            let mut m = f64::NEG_INFINITY;
            for (s, a) in &nbrs {
                m = m.max(propagate(s, *a, tau).geometry(target)?.t_tilde);
            }
            Ok(mine - m)
        };
        if !(gap(dt)? >= 0.0) {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0.0, dt);
        for _ in 0..BISECTION_ITERS {
            let mid = 0.5 * (lo + hi);
            if gap(mid)? >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi))
    }

    /// `arcs` maps pursuers that ended the step on their circle to the
    /// estimate they had at the start of it.
    fn check_captures(
        &mut self,
        step: usize,
        t: f64,
        arcs: &BTreeMap<PursuerId, f64>,
    ) -> Result<()> {
        let dt = self.config.dt;
        for id in self.active() {
            let s = self.states[&id];
            let range = s.range_to(&self.target);
            let arrival = match arcs.get(&id) {
                // reached the target inside the step
                Some(&tt0) if tt0 <= dt => Some(t - dt + tt0),
                Some(_) if range <= self.config.capture_radius => {
                    Some(t + s.geometry(&self.target)?.t_tilde)
                }
                None if range <= self.config.capture_radius => Some(t),
                _ => None,
            };
            if let Some(at) = arrival {
                self.states.get_mut(&id).expect("active").mark_intercepted(at);
                self.result.interception_times.insert(id, at);
                self.result.capture_steps.insert(id, t);
                self.captured_step.insert(id, step);
                self.result.topology_events.push(TopologyRecord {
                    time: t,
                    kind: "capture".into(),
                    pursuer: Some(id),
                    detail: format!("arrival={at}"),
                });
            }
        }
        Ok(())
    }

    fn check_divergence(&self, t: f64) -> Result<()> {
        if self.baseline <= 0.0 {
            return Ok(());
        }
        let limit = self.config.divergence_factor * self.baseline;
        for id in self.active() {
            let v = self.states[&id].geometry(&self.target)?.t_tilde;
            if v > limit {
                return Err(Error::Diverged {
                    time: t,
                    id,
                    value: v,
                });
            }
        }
        Ok(())
    }

    fn apply_node_events(&mut self, t: f64, cursor: &ScheduleCursor<'_>) -> Result<()> {
        while self
            .pending_events
            .last()
            .is_some_and(|e| e.time() <= t + TIME_TOL)
        {
            let ev = self.pending_events.pop().expect("checked");
            let active = self.active();
            let before = self.effective_graph(cursor, &active);
            let mut tt = self.t_tilde_map(&active)?;
            match ev {
                NodeEvent::Add { state, edges, .. } => {
                    let id = state.id;
                    let geo = state.geometry(&self.target)?;
                    tt.insert(id, geo.t_tilde);
                    let edges_here: Vec<_> = edges
                        .iter()
                        .copied()
                        .filter(|(a, b)| {
                            (before.contains(*a) || *a == id) && (before.contains(*b) || *b == id)
                        })
                        .collect();
                    let verdict = validate_topology_event(
                        &TopologyEvent::AddNode {
                            node: id,
                            edges: edges_here,
                        },
                        &before,
                        &tt,
                        EventContext {
                            t_a: t,
                            window: cursor.window_open().map(|(a, b)| (a, b - a)),
                        },
                    )?;
                    self.states.insert(id, state);
                    self.present.insert(id);
                    self.overlay.extend(edges);
                    self.result.joins.insert(
                        id,
                        JoinRecord {
                            time: t,
                            t_tilde: geo.t_tilde,
                        },
                    );
                    if geo.t_tilde.is_finite() {
                        self.baseline = self.baseline.max(geo.t_tilde);
                    }
                    self.result.topology_events.push(TopologyRecord {
                        time: t,
                        kind: "node_add".into(),
                        pursuer: Some(id),
                        detail: verdict_text(&verdict),
                    });
                }
                NodeEvent::Remove { id, .. } => {
                    let verdict = if before.contains(id) {
                        validate_topology_event(
                            &TopologyEvent::RemoveNode { node: id },
                            &before,
                            &tt,
                            EventContext {
                                t_a: t,
                                window: None,
                            },
                        )?
                    } else {
                        Verdict::Ok
                    };
                    self.present.remove(&id);
                    self.result.removed.insert(id, t);
                    self.result.topology_events.push(TopologyRecord {
                        time: t,
                        kind: "node_remove".into(),
                        pursuer: Some(id),
                        detail: verdict_text(&verdict),
                    });
                }
            }
        }
        Ok(())
    }

    fn record_changes(
        &mut self,
        changes: Vec<ScheduleChange>,
        schedule: &crate::topology::TopologySchedule,
    ) {
        for c in changes {
            match c {
                ScheduleChange::Switched { time, entry } => {
                    let kind = match schedule.entries()[entry].kind {
                        GraphKind::Connected => "connected",
                        GraphKind::Disconnected => "disconnected",
                        GraphKind::Auto => "auto",
                    };
                    self.result.topology_events.push(TopologyRecord {
                        time,
                        kind: "graph_switch".into(),
                        pursuer: None,
                        detail: format!("entry={entry};kind={kind}"),
                    });
                }
                ScheduleChange::WindowOpened {
                    time,
                    entry,
                    bound,
                    delta,
                    closes_at,
                } => {
                    self.result.windows.push(WindowRecord {
                        entry,
                        bound: bound.to_string(),
                        opened_at: schedule.entries()[entry].time,
                        delta,
                        closes_at,
                        closed_at: None,
                        cancelled_at: None,
                    });
                    self.result.topology_events.push(TopologyRecord {
                        time,
                        kind: "window_open".into(),
                        pursuer: None,
                        detail: format!("entry={entry};bound={bound};delta={delta}"),
                    });
                }
                ScheduleChange::WindowClosed { time, entry, .. } => {
                    if let Some(w) = self.result.windows.iter_mut().rev().find(|w| w.entry == entry) {
                        w.closed_at = Some(time);
                    }
                    self.result.topology_events.push(TopologyRecord {
                        time,
                        kind: "window_close".into(),
                        pursuer: None,
                        detail: format!("entry={entry}"),
                    });
                }
                ScheduleChange::WindowCancelled { time, entry } => {
                    if let Some(w) = self.result.windows.iter_mut().rev().find(|w| w.entry == entry) {
                        w.cancelled_at = Some(time);
                    }
                    self.result.topology_events.push(TopologyRecord {
                        time,
                        kind: "window_cancel".into(),
                        pursuer: None,
                        detail: format!("entry={entry}"),
                    });
                }
            }
        }
    }

    fn push_record(
        &mut self,
        step: usize,
        t: f64,
        graph: Digraph,
        decisions: &BTreeMap<PursuerId, GuidanceDecision>,
    ) -> Result<()> {
        let mut samples = Vec::new();
        let mut tt = TtildeMap::new();
        for &id in &self.present {
            let s = self.states[&id];
            let (regime, accel) = match decisions.get(&id) {
                Some(d) => (d.regime, d.accel),
                None if self.captured_step.get(&id) == Some(&step) => (Regime::Frozen, 0.0),
                None => continue,
            };
            let range = s.range_to(&self.target);
            let (theta, t_tilde) = if range > 0.0 {
                let g = s.geometry(&self.target)?;
                (g.lead_angle, g.t_tilde)
            } else {
                (0.0, 0.0)
            };
            if regime != Regime::Frozen {
                tt.insert(id, t_tilde);
            }
            samples.push(PursuerSample {
                id,
                x: s.x,
                y: s.y,
                gamma: s.gamma,
                range,
                theta,
                t_tilde,
                accel,
                regime,
            });
        }
        let leader = if tt.is_empty() {
            None
        } else {
            Some(current_leader(&tt)?)
        };
        let leader_reachable = match leader {
            Some(l) => graph.is_globally_reachable(l)?,
            None => true,
        };
        let graph = self.graph_index(graph);
        self.result.records.push(TrajectoryRecord {
            step,
            time: t,
            graph,
            leader,
            leader_reachable,
            samples,
        });
        Ok(())
    }
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Ok => "ok".into(),
        Verdict::Violation { clause, detail } => format!("violation={};{detail}", clause.name()),
    }
}
