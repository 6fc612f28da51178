//! Switching schedules, disconnection windows and node add/remove rules.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PursuerState;
use crate::graph::{argmax_by_ttilde, delta_bound_min, delta_bound_sink, Digraph, TtildeMap};
use crate::PursuerId;

/// Slack used when comparing event times against step times.
pub const TIME_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    /// The leader is globally reachable.
    Connected,
    /// The leader is not globally reachable.
    Disconnected,
    /// Classify at load time.
    Auto,
}

/// How long a disconnection window lasts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "bound", content = "seconds")]
pub enum DeltaBound {
    /// Safety factor times the smallest estimated time over all active pursuers.
    MinTtilde,
    /// Safety factor times the first interceptor's estimated time on the window graph.
    SinkTtilde,
    /// A fixed duration, not scaled by the safety factor.
    Fixed(f64),
}

impl DeltaBound {
    pub fn name(&self) -> &'static str {
        match self {
            DeltaBound::MinTtilde => "min-ttilde",
            DeltaBound::SinkTtilde => "sink-ttilde",
            DeltaBound::Fixed(_) => "fixed",
        }
    }

    /// Window length for graph `g` given the active pursuers' estimates.
    pub fn duration(&self, g: &Digraph, t_tilde: &TtildeMap, factor: f64) -> Result<f64> {
        match *self {
            DeltaBound::MinTtilde => Ok(factor * delta_bound_min(t_tilde)?),
            DeltaBound::SinkTtilde => Ok(factor * delta_bound_sink(g, t_tilde)?),
            DeltaBound::Fixed(s) => Ok(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisconnectWindow {
    pub bound: DeltaBound,
    /// Graph re-instated when the window closes.
    pub restore: Digraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub time: f64,
    pub graph: Digraph,
    pub kind: GraphKind,
    pub window: Option<DisconnectWindow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologySchedule {
    entries: Vec<ScheduleEntry>,
}

impl TopologySchedule {
    pub fn new(entries: Vec<ScheduleEntry>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::scenario("graphs", "schedule is empty"))?;
        if first.time != 0.0 {
            return Err(Error::scenario(
                "graphs[0].time",
                format!("first graph must start at t = 0, got {}", first.time),
            ));
        }
        for (k, w) in entries.windows(2).enumerate() {
            if !(w[1].time > w[0].time) {
                return Err(Error::scenario(
                    format!("graphs[{}].time", k + 1),
                    format!(
                        "event times must strictly increase ({} after {})",
                        w[1].time, w[0].time
                    ),
                ));
            }
        }
        for (k, e) in entries.iter().enumerate() {
            if let Some(DisconnectWindow {
                bound: DeltaBound::Fixed(s),
                ..
            }) = e.window
            {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::scenario(
                        format!("graphs[{k}].window"),
                        format!("fixed window must be positive, got {s}"),
                    ));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn single(graph: Digraph) -> Self {
        Self {
            entries: vec![ScheduleEntry {
                time: 0.0,
                graph,
                kind: GraphKind::Auto,
                window: None,
            }],
        }
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn is_static(&self) -> bool {
        self.entries.len() == 1
    }

    /// Resolves `Auto` kinds and checks explicit labels.
    ///
    /// `leader_at(t)` names the predicted leader among the nodes present at
    /// `t`. Each graph is judged on the nodes present at its start time.
    /// Returns one warning per mislabelled graph or disconnected restore graph.
    pub fn resolve_kinds(
        &mut self,
        mut present_at: impl FnMut(f64) -> BTreeSet<PursuerId>,
        mut leader_at: impl FnMut(f64) -> Option<PursuerId>,
    ) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        for (k, e) in self.entries.iter_mut().enumerate() {
            let present = present_at(e.time);
            let Some(leader) = leader_at(e.time) else {
                continue;
            };
            let reach = e.graph.induced(&present).is_globally_reachable(leader)?;
            let actual = if reach {
                GraphKind::Connected
            } else {
                GraphKind::Disconnected
            };
            match e.kind {
                GraphKind::Auto => e.kind = actual,
                label if label != actual => {
                    warnings.push(format!(
                        "graphs[{k}] at t = {} labelled {label:?} but leader {leader} is {}",
                        e.time,
                        if reach { "globally reachable" } else { "not globally reachable" }
                    ));
                    e.kind = actual;
                }
                _ => {}
            }
            if let Some(w) = &e.window {
                if !w.restore.induced(&present).is_globally_reachable(leader)? {
                    warnings.push(format!(
                        "graphs[{k}] window restores a graph where leader {leader} is not globally reachable"
                    ));
                }
            }
        }
        Ok(warnings)
    }
}

/// Something that happened while stepping a schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleChange {
    Switched {
        time: f64,
        entry: usize,
    },
    WindowOpened {
        time: f64,
        entry: usize,
        bound: &'static str,
        delta: f64,
        closes_at: f64,
    },
    WindowClosed {
        time: f64,
        entry: usize,
        opened_at: f64,
    },
    WindowCancelled {
        time: f64,
        entry: usize,
    },
}

#[derive(Debug, Clone)]
struct Pending {
    entry: usize,
    opened_at: f64,
    closes_at: f64,
    restore: Digraph,
}

/// Walks a schedule forward in time, tracking the open disconnection window.
#[derive(Debug, Clone)]
pub struct ScheduleCursor<'a> {
    schedule: &'a TopologySchedule,
    next: usize,
    graph: Digraph,
    entry: usize,
    pending: Option<Pending>,
}

impl<'a> ScheduleCursor<'a> {
    /// Starts at the t = 0 graph. A window on that first entry is ignored,
    /// since no estimates exist before the first step.
    pub fn new(schedule: &'a TopologySchedule) -> Self {
        Self {
            schedule,
            next: 1,
            graph: schedule.entries[0].graph.clone(),
            entry: 0,
            pending: None,
        }
    }

    /// The scheduled edge set currently in force.
    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn entry(&self) -> usize {
        self.entry
    }

    pub fn window_open(&self) -> Option<(f64, f64)> {
        self.pending.as_ref().map(|p| (p.opened_at, p.closes_at))
    }

    /// Applies every change due at or before `t`, in time order.
    ///
    /// `active` lists the pursuers still in play with their current estimates.
    /// A new window cancels any window still open. A plain entry inside a
    /// window swaps the graph but leaves the restore pending. When a restore
    /// and an entry fall due together the entry wins and the restore is dropped.
    pub fn advance(
        &mut self,
        t: f64,
        active: &TtildeMap,
        factor: f64,
    ) -> Result<Vec<ScheduleChange>> {
        let mut changes = Vec::new();
        loop {
            let next_time = self.schedule.entries.get(self.next).map(|e| e.time);
            let due_entry = next_time.filter(|&te| te <= t + TIME_TOL);
            let due_restore = self
                .pending
                .as_ref()
                .map(|p| p.closes_at)
                .filter(|&tc| tc <= t + TIME_TOL);

            match (due_entry, due_restore) {
                (None, None) => break,
                (Some(te), Some(tc)) if tc < te => self.close(t, &mut changes),
                (None, Some(_)) => self.close(t, &mut changes),
                (Some(te), restore) => {
                    if restore.is_some_and(|tc| tc == te) {
                        let p = self.pending.take().expect("pending restore");
                        changes.push(ScheduleChange::WindowCancelled {
                            time: t,
                            entry: p.entry,
                        });
                    }
                    self.open(te, t, active, factor, &mut changes)?;
                }
            }
        }
        Ok(changes)
    }

    fn close(&mut self, t: f64, changes: &mut Vec<ScheduleChange>) {
        let p = self.pending.take().expect("pending restore");
        self.graph = p.restore;
        changes.push(ScheduleChange::WindowClosed {
            time: t,
            entry: p.entry,
            opened_at: p.opened_at,
        });
    }

    fn open(
        &mut self,
        entry_time: f64,
        t: f64,
        active: &TtildeMap,
        factor: f64,
        changes: &mut Vec<ScheduleChange>,
    ) -> Result<()> {
        let k = self.next;
        let e = &self.schedule.entries[k];
        self.next += 1;
        self.entry = k;
        self.graph = e.graph.clone();
        changes.push(ScheduleChange::Switched { time: t, entry: k });

        if let Some(w) = &e.window {
            if let Some(p) = self.pending.take() {
                changes.push(ScheduleChange::WindowCancelled {
                    time: t,
                    entry: p.entry,
                });
            }
            let keep: BTreeSet<PursuerId> = active.keys().copied().collect();
            let delta = w.bound.duration(&e.graph.induced(&keep), active, factor)?;
            let closes_at = entry_time + delta;
            changes.push(ScheduleChange::WindowOpened {
                time: t,
                entry: k,
                bound: w.bound.name(),
                delta,
                closes_at,
            });
            self.pending = Some(Pending {
                entry: k,
                opened_at: entry_time,
                closes_at,
                restore: w.restore.clone(),
            });
        }
        Ok(())
    }
}

/// A node joining or leaving the engagement at a given time.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeEvent {
    Add {
        time: f64,
        state: PursuerState,
        /// Edges introduced with the node; they persist across later graph switches.
        edges: Vec<(PursuerId, PursuerId)>,
    },
    Remove {
        time: f64,
        id: PursuerId,
    },
}

impl NodeEvent {
    pub fn time(&self) -> f64 {
        match self {
            NodeEvent::Add { time, .. } | NodeEvent::Remove { time, .. } => *time,
        }
    }

    pub fn id(&self) -> PursuerId {
        match self {
            NodeEvent::Add { state, .. } => state.id,
            NodeEvent::Remove { id, .. } => *id,
        }
    }
}

/// A change to the communication graph, judged against the graph it modifies.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologyEvent {
    AddNode {
        node: PursuerId,
        edges: Vec<(PursuerId, PursuerId)>,
    },
    RemoveNode {
        node: PursuerId,
    },
    EdgeChange {
        graph: Digraph,
    },
}

/// Rule a node addition or removal can break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    /// After a removal the new leader is not globally reachable.
    RemovalLeaderUnreachable,
    /// A node that does not become leader joined with no out-neighbour.
    AddedFollowerIsolated,
    /// A node that becomes leader joined without being globally reachable.
    AddedLeaderUnreachable,
    /// A node joined a disconnection window and would finish before it closes.
    JoinBeforeWindowEnd,
}

impl Clause {
    pub fn name(&self) -> &'static str {
        match self {
            Clause::RemovalLeaderUnreachable => "removal-leader-unreachable",
            Clause::AddedFollowerIsolated => "added-follower-isolated",
            Clause::AddedLeaderUnreachable => "added-leader-unreachable",
            Clause::JoinBeforeWindowEnd => "join-before-window-end",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Ok,
    Violation { clause: Clause, detail: String },
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok)
    }
}

/// When the event happens and which disconnection window, if any, is open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventContext {
    pub t_a: f64,
    /// `(t_m, delta_m)` of the open window.
    pub window: Option<(f64, f64)>,
}

/// Checks a node addition or removal against the rules that keep consensus.
///
/// `t_tilde` must cover every node of `g_before` plus any node being added.
pub fn validate_topology_event(
    event: &TopologyEvent,
    g_before: &Digraph,
    t_tilde: &TtildeMap,
    ctx: EventContext,
) -> Result<Verdict> {
    match event {
        TopologyEvent::AddNode { node, edges } => {
            if g_before.contains(*node) {
                return Err(Error::BadEvent(format!("node {node} already present")));
            }
            let t_c = *t_tilde.get(node).ok_or(Error::IncompleteState(*node))?;
            let after = g_before
                .with_node(*node, edges)
                .map_err(|e| Error::BadEvent(e.to_string()))?;

            if let Some((t_m, delta_m)) = ctx.window {
                if ctx.t_a + TIME_TOL >= t_m && ctx.t_a <= t_m + delta_m + TIME_TOL {
                    return Ok(if ctx.t_a + t_c >= t_m + delta_m {
                        Verdict::Ok
                    } else {
                        Verdict::Violation {
                            clause: Clause::JoinBeforeWindowEnd,
                            detail: format!(
                                "node {node}: t_a + t_tilde = {} < window end {}",
                                ctx.t_a + t_c,
                                t_m + delta_m
                            ),
                        }
                    });
                }
            }

            let (leader, _) = argmax_by_ttilde(after.nodes().iter().copied(), t_tilde)?
                .expect("graph has the added node");
            if leader == *node {
                if !after.is_globally_reachable(*node)? {
                    return Ok(Verdict::Violation {
                        clause: Clause::AddedLeaderUnreachable,
                        detail: format!("node {node} leads but is not globally reachable"),
                    });
                }
            } else if after.out_neighbors(*node)?.is_empty() {
                return Ok(Verdict::Violation {
                    clause: Clause::AddedFollowerIsolated,
                    detail: format!("node {node} follows {leader} but senses nobody"),
                });
            }
            Ok(Verdict::Ok)
        }
        TopologyEvent::RemoveNode { node } => {
            if !g_before.contains(*node) {
                return Err(Error::BadEvent(format!("node {node} not present")));
            }
            let after = g_before.without_node(*node);
            match argmax_by_ttilde(after.nodes().iter().copied(), t_tilde)? {
                Some((leader, _)) if !after.is_globally_reachable(leader)? => {
                    Ok(Verdict::Violation {
                        clause: Clause::RemovalLeaderUnreachable,
                        detail: format!(
                            "removing {node} leaves leader {leader} not globally reachable"
                        ),
                    })
                }
                _ => Ok(Verdict::Ok),
            }
        }
        TopologyEvent::EdgeChange { graph } => {
            if graph.nodes() != g_before.nodes() {
                return Err(Error::BadEvent(
                    "edge change must keep the node set".to_string(),
                ));
            }
            Ok(Verdict::Ok)
        }
    }
}
