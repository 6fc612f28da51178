//! Closed-form predictions and static schedule checks that need no simulation.
//!
//! Under the guidance law no estimate ever exceeds the leader's, the leader's
//! estimate falls at unit rate and no estimate falls faster than that. These
//! facts give the leader's arrival exactly and a lower envelope for everyone
//! else, which is what the checks here rely on.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::Result;
use crate::graph::{
    delta_bound_min, delta_bound_sink, local_leader_set, predicted_first_interceptor, Digraph,
    TtildeMap,
};
use crate::guidance::current_leader;
use crate::scenario::Scenario;
use crate::topology::{
    validate_topology_event, DeltaBound, EventContext, GraphKind, NodeEvent, TopologyEvent,
    Verdict, TIME_TOL,
};
use crate::PursuerId;

#[derive(Debug, Clone, Copy)]
struct Entry {
    join: f64,
    t_tilde: f64,
    removed: Option<f64>,
}

/// Predicted arrival of every pursuer from the moment it joins.
#[derive(Debug, Clone)]
pub struct Arrivals {
    entries: Vec<(PursuerId, Entry)>,
}

impl Arrivals {
    pub fn of(s: &Scenario) -> Result<Self> {
        let mut entries = Vec::new();
        for p in &s.pursuers {
            let g = p.geometry(&s.target)?;
            entries.push((
                p.id,
                Entry {
                    join: 0.0,
                    t_tilde: g.t_tilde,
                    removed: None,
                },
            ));
        }
        for e in &s.node_events {
            match e {
                NodeEvent::Add { time, state, .. } => {
                    let g = state.geometry(&s.target)?;
                    entries.push((
                        state.id,
                        Entry {
                            join: *time,
                            t_tilde: g.t_tilde,
                            removed: None,
                        },
                    ));
                }
                NodeEvent::Remove { time, id } => {
                    if let Some((_, en)) = entries.iter_mut().find(|(k, _)| k == id) {
                        en.removed = Some(*time);
                    }
                }
            }
        }
        entries.sort_by_key(|(id, _)| *id);
        Ok(Self { entries })
    }

    fn live_at(&self, t: f64) -> impl Iterator<Item = &(PursuerId, Entry)> {
        self.entries.iter().filter(move |(_, e)| {
            e.join <= t + TIME_TOL && e.removed.is_none_or(|r| r > t + TIME_TOL)
        })
    }

    pub fn present_at(&self, t: f64) -> BTreeSet<PursuerId> {
        self.live_at(t).map(|(id, _)| *id).collect()
    }

    /// Pursuer with the latest predicted arrival among those present.
    pub fn leader_at(&self, t: f64) -> Option<PursuerId> {
        let mut best: Option<(PursuerId, f64)> = None;
        for (id, e) in self.live_at(t) {
            let a = e.join + e.t_tilde;
            if best.is_none_or(|(_, b)| a > b) {
                best = Some((*id, a));
            }
        }
        best.map(|(id, _)| id)
    }

    pub fn leader_arrival_at(&self, t: f64) -> Option<f64> {
        let l = self.leader_at(t)?;
        self.entries
            .iter()
            .find(|(id, _)| *id == l)
            .map(|(_, e)| e.join + e.t_tilde)
    }

    /// Lower envelope of every present estimate at `t`; exact for the leader.
    /// Pursuers whose envelope has reached zero are left out.
    pub fn envelope_at(&self, t: f64) -> TtildeMap {
        self.live_at(t)
            .map(|(id, e)| (*id, e.t_tilde - (t - e.join)))
            .filter(|(_, v)| *v > 0.0)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub check: String,
    pub ok: bool,
    pub time: Option<f64>,
    pub detail: String,
}

impl Finding {
    fn new(check: &str, ok: bool, time: Option<f64>, detail: String) -> Self {
        Self {
            check: check.into(),
            ok,
            time,
            detail,
        }
    }
}

/// Scheduled edges in force at `t` plus the open window `(t_m, delta)`, with
/// bounded windows given their largest possible length.
fn scheduled_at(s: &Scenario, plan: &Arrivals, t: f64, factor: f64) -> (Digraph, Option<(f64, f64)>) {
    let mut graph = s.schedule.entries()[0].graph.clone();
    let mut open: Option<(f64, f64, Digraph)> = None;
    for e in s.schedule.entries().iter().skip(1) {
        if e.time > t + TIME_TOL {
            break;
        }
        if open.as_ref().is_some_and(|(tm, d, _)| tm + d < e.time) {
            open = None;
        }
        graph = e.graph.clone();
        if let Some(w) = &e.window {
            let delta = match w.bound {
                DeltaBound::Fixed(sec) => sec,
                _ => factor * plan.leader_arrival_at(e.time).map_or(0.0, |a| a - e.time),
            };
            open = Some((e.time, delta, w.restore.clone()));
        }
    }
    match open {
        Some((tm, d, restore)) if tm + d <= t => (restore, None),
        Some((tm, d, _)) => (graph, Some((tm, d))),
        None => (graph, None),
    }
}

/// Checks every node addition and removal against the consensus rules,
/// using predicted estimates at the event time.
pub fn event_findings(s: &Scenario, plan: &Arrivals) -> Result<Vec<Finding>> {
    let factor = s.simulation_config().delta_factor;
    let mut overlay: Vec<(PursuerId, PursuerId)> = Vec::new();
    let mut out = Vec::new();
    for e in &s.node_events {
        let t = e.time();
        let (sched, window) = scheduled_at(s, plan, t, factor);
        let mut tt = plan.envelope_at(t);
        let mut keep: BTreeSet<PursuerId> = tt.keys().copied().collect();
        keep.remove(&e.id());
        if let NodeEvent::Remove { id, .. } = e {
            // removal is judged on the graph that still contains the node
            keep.insert(*id);
            tt.entry(*id).or_insert(f64::MIN_POSITIVE);
        }
        let before = Digraph::new(
            keep.iter().copied(),
            sched
                .edges()
                .iter()
                .chain(overlay.iter())
                .filter(|(a, b)| keep.contains(a) && keep.contains(b))
                .copied(),
        )?;
        let (event, ctx) = match e {
            NodeEvent::Add { state, edges, .. } => {
                let g = state.geometry(&s.target)?;
                tt.insert(state.id, g.t_tilde);
                let here = edges
                    .iter()
                    .copied()
                    .filter(|(a, b)| {
                        (keep.contains(a) || *a == state.id) && (keep.contains(b) || *b == state.id)
                    })
                    .collect();
                overlay.extend(edges.iter().copied());
                (
                    TopologyEvent::AddNode {
                        node: state.id,
                        edges: here,
                    },
                    EventContext { t_a: t, window },
                )
            }
            NodeEvent::Remove { id, .. } => (
                TopologyEvent::RemoveNode { node: *id },
                EventContext { t_a: t, window: None },
            ),
        };
        let verdict = validate_topology_event(&event, &before, &tt, ctx)?;
        let (what, id) = match &event {
            TopologyEvent::AddNode { node, .. } => ("add", *node),
            TopologyEvent::RemoveNode { node } => ("remove", *node),
            TopologyEvent::EdgeChange { .. } => unreachable!("node events only"),
        };
        out.push(match verdict {
            Verdict::Ok => Finding::new(
                "node-event",
                true,
                Some(t),
                format!("{what} {id} at t = {t}: ok"),
            ),
            Verdict::Violation { clause, detail } => {
                Finding::new(clause.name(), false, Some(t), format!("{what} {id} at t = {t}: {detail}"))
            }
        });
    }
    Ok(out)
}

/// Static audit of a scenario: graph classification, disconnection lengths
/// against the lower envelope of the smallest estimate, and node events.
pub fn audit(s: &Scenario, factor: f64) -> Result<Vec<Finding>> {
    let plan = Arrivals::of(s)?;
    let mut out = Vec::new();
    let entries = s.schedule.entries();

    let mut window_end: Option<f64> = None;
    // Sink count at the opening of a sink-bounded window, and when it closes.
    let mut sink_window: Option<(usize, f64)> = None;
    let sinks_of = |g: &Digraph| g.strongly_connected_components().sink_and_singleton_components().len();
    for (k, e) in entries.iter().enumerate() {
        let present = plan.present_at(e.time);
        if let Some((opened, end)) = sink_window {
            if e.time >= end {
                sink_window = None;
            } else if e.window.is_none() {
                let n = sinks_of(&e.graph.induced(&present));
                out.push(Finding::new(
                    "sink-ttilde-bound",
                    n <= opened,
                    Some(e.time),
                    format!("graphs[{k}] has {n} sink components, window opened with {opened}"),
                ));
            }
        }
        let leader = plan.leader_at(e.time);
        let kind = match e.kind {
            GraphKind::Connected => "connected",
            GraphKind::Disconnected => "disconnected",
            GraphKind::Auto => "auto",
        };
        out.push(Finding::new(
            "graph-kind",
            true,
            Some(e.time),
            format!(
                "graphs[{k}] {kind} ({} edges over {} nodes, leader {})",
                e.graph.induced(&present).edges().len(),
                present.len(),
                leader.map_or("-".into(), |l| l.to_string())
            ),
        ));

        let env = plan.envelope_at(e.time);
        let floor = env.values().copied().fold(f64::INFINITY, f64::min);
        if let Some(w) = &e.window {
            let (check, ok, detail) = match w.bound {
                DeltaBound::Fixed(sec) => (
                    "min-ttilde-bound",
                    sec < floor,
                    format!(
                        "graphs[{k}] fixed window {sec} s against smallest estimate >= {floor}"
                    ),
                ),
                DeltaBound::MinTtilde => (
                    "min-ttilde-bound",
                    factor < 1.0,
                    format!("graphs[{k}] window is {factor} of the smallest estimate"),
                ),
                DeltaBound::SinkTtilde => (
                    "sink-ttilde-bound",
                    factor < 1.0,
                    format!("graphs[{k}] window is {factor} of the first interceptor's estimate"),
                ),
            };
            out.push(Finding::new(check, ok, Some(e.time), detail));
            let end = match w.bound {
                DeltaBound::Fixed(sec) => e.time + sec,
                _ => e.time + factor * plan.leader_arrival_at(e.time).map_or(0.0, |a| a - e.time),
            };
            window_end = Some(end);
            sink_window = (w.bound == DeltaBound::SinkTtilde)
                .then(|| (sinks_of(&e.graph.induced(&present)), end));
        } else if e.kind == GraphKind::Disconnected && window_end.is_none_or(|end| e.time >= end) {
            let until = entries.get(k + 1).map_or(f64::INFINITY, |n| n.time);
            let delta = until - e.time;
            out.push(Finding::new(
                "min-ttilde-bound",
                delta < floor,
                Some(e.time),
                format!(
                    "graphs[{k}] disconnected for {delta} s against smallest estimate >= {floor}"
                ),
            ));
        }
    }

    out.extend(event_findings(s, &plan)?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub t_tilde: TtildeMap,
    pub leader: PursuerId,
    pub leader_t_tilde: f64,
    pub leader_reachable: bool,
    /// Common interception time when the leader is globally reachable and
    /// the topology never changes.
    pub t_f: Option<f64>,
    pub first_interceptor: PursuerId,
    pub first_t_tilde: f64,
    pub local_leaders: Vec<PursuerId>,
    pub sink_components: Vec<Vec<PursuerId>>,
    pub delta_bound_min: f64,
    pub delta_bound_sink: f64,
}

/// Predictions on the initial graph over the initial pursuers.
pub fn predict(s: &Scenario) -> Result<Prediction> {
    let ids: BTreeSet<PursuerId> = s.pursuers.iter().map(|p| p.id).collect();
    let g = s.schedule.entries()[0].graph.induced(&ids);
    let tt: TtildeMap = s
        .pursuers
        .iter()
        .map(|p| Ok((p.id, p.geometry(&s.target)?.t_tilde)))
        .collect::<Result<_>>()?;
    let leader = current_leader(&tt)?;
    let leader_reachable = g.is_globally_reachable(leader)?;
    let (f, tf) = predicted_first_interceptor(&g, &tt)?;
    let cond = g.strongly_connected_components();
    let sinks = cond
        .sink_and_singleton_components()
        .into_iter()
        .map(|k| cond.components[k].iter().copied().collect())
        .collect();
    let static_topology = s.schedule.is_static() && s.node_events.is_empty();
    Ok(Prediction {
        leader,
        leader_t_tilde: tt[&leader],
        leader_reachable,
        t_f: (leader_reachable && static_topology).then_some(tt[&leader]),
        first_interceptor: f,
        first_t_tilde: tf,
        local_leaders: local_leader_set(&g, &tt)?.into_iter().collect(),
        sink_components: sinks,
        delta_bound_min: delta_bound_min(&tt)?,
        delta_bound_sink: delta_bound_sink(&g, &tt)?,
        t_tilde: tt,
    })
}
